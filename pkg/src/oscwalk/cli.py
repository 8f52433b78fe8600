"""Command line entry point: ``python -m oscwalk <command> --config run.json``.

Every command writes ``<out>/<command>/<config-hash>/summary.json`` plus its
CSV tables and exits with 0 when all of its checks pass, 1 when one fails and
2 on a configuration error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ConfigError, OscwalkError

SCHEMA = 1
COMMANDS = (
    "check",
    "ladder",
    "kernel",
    "verify-fluctuations",
    "verify-operators",
    "simulate",
    "compare",
)

DEFAULTS = {
    "model": {"mu": None, "mu_prime": None, "alpha": 0.5, "start": 0},
    "run": {"n": 5000, "paths": 20000, "times": [1.0], "seed": 0, "workers": 1},
    "numerics": {"M": 64, "N": 4096, "depth_tol": 1e-13, "delta": 0.5, "convention": "half_open"},
    "output": {"directory": "results", "formats": ["json", "csv"]},
}
MIN_PATHS = 1000


# ---------------------------------------------------------------------------
# configuration


def _parse_prob(p):
    if isinstance(p, str):
        try:
            return Fraction(p)
        except ValueError as exc:
            raise ConfigError(f"bad probability {p!r}") from exc
    if isinstance(p, bool) or not isinstance(p, (int, float)):
        raise ConfigError(f"bad probability {p!r}")
    return p


def _parse_pmf(entries, name):
    from .lattice import make_pmf

    if isinstance(entries, dict):
        items = list(entries.items())
    elif isinstance(entries, list):
        items = entries
    else:
        raise ConfigError(f"model.{name} must be a mapping or a list of [site, prob] pairs")
    try:
        pairs = [(int(s), _parse_prob(p)) for s, p in items]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"model.{name}: {exc}") from exc
    try:
        return make_pmf(pairs)
    except ValueError as exc:
        raise ConfigError(f"model.{name}: {exc}") from exc


def resolve_config(raw: dict, seed_override: int | None = None, workers: int | None = None) -> dict:
    """Merge defaults, reject unknown keys and type-check every field."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = {}
    for section, defaults in DEFAULTS.items():
        given = raw.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"section {section!r} must be an object")
        unknown = set(given) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
        cfg[section] = {**defaults, **given}
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")

    m = cfg["model"]
    if m["mu"] is None:
        raise ConfigError("model.mu is required")
    if m["mu_prime"] is None:
        m["mu_prime"] = m["mu"]
    _parse_pmf(m["mu"], "mu")
    _parse_pmf(m["mu_prime"], "mu_prime")
    _number(m, "alpha", "model", lo=0.0, hi=1.0)
    _integer(m, "start", "model")

    r = cfg["run"]
    if seed_override is not None:
        r["seed"] = seed_override
    if workers is not None:
        r["workers"] = workers
    _integer(r, "n", "run", lo=1)
    _integer(r, "paths", "run", lo=1)
    _integer(r, "seed", "run", lo=0)
    _integer(r, "workers", "run", lo=1)
    if not isinstance(r["times"], list) or not 1 <= len(r["times"]) <= 2:
        raise ConfigError("run.times must be a list of one or two times")
    for t in r["times"]:
        if isinstance(t, bool) or not isinstance(t, (int, float)) or not 0 < t <= 1:
            raise ConfigError("run.times entries must lie in (0, 1]")
    if len(r["times"]) == 2 and not r["times"][0] < r["times"][1]:
        raise ConfigError("run.times must be increasing")

    nm = cfg["numerics"]
    _integer(nm, "M", "numerics", lo=4)
    _integer(nm, "N", "numerics", lo=16)
    _number(nm, "depth_tol", "numerics", lo=0.0, hi=1e-6, open_lo=True)
    _number(nm, "delta", "numerics", lo=0.0, open_lo=True)
    if nm["convention"] not in ("half_open", "closed"):
        raise ConfigError("numerics.convention must be 'half_open' or 'closed'")

    o = cfg["output"]
    if not isinstance(o["directory"], str):
        raise ConfigError("output.directory must be a string")
    if not isinstance(o["formats"], list) or not set(o["formats"]) <= {"json", "csv"}:
        raise ConfigError("output.formats must be a subset of ['json', 'csv']")
    return cfg


def _integer(d, key, section, lo=None):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{section}.{key} must be an integer")
    if lo is not None and v < lo:
        raise ConfigError(f"{section}.{key} must be >= {lo}")


def _number(d, key, section, lo=None, hi=None, open_lo=False):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number")
    if lo is not None and (v < lo or (open_lo and v == lo)):
        raise ConfigError(f"{section}.{key} out of range")
    if hi is not None and v > hi:
        raise ConfigError(f"{section}.{key} out of range")


def config_hash(cfg: dict) -> str:
    """Hash of everything that can change results (not workers or output)."""
    key = {k: v for k, v in cfg.items() if k != "output"}
    key["run"] = {k: v for k, v in cfg["run"].items() if k != "workers"}
    blob = json.dumps(key, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# commands


class Run:
    """Collects metrics, criteria and CSV outputs for one command."""

    def __init__(self, command: str, cfg: dict, out_dir: Path):
        self.command = command
        self.cfg = cfg
        self.dir = out_dir
        self.metrics: dict = {}
        self.criteria: dict = {}
        self.csv = "csv" in cfg["output"]["formats"]
        self.dir.mkdir(parents=True, exist_ok=True)

    def check(self, name, passed, value=None, tol=None):
        self.criteria[name] = {"pass": bool(passed), "value": _jsonable(value), "tol": tol}

    def path(self, name) -> Path | None:
        return self.dir / name if self.csv else None

    @property
    def mu(self):
        return _parse_pmf(self.cfg["model"]["mu"], "mu")

    @property
    def mu_prime(self):
        return _parse_pmf(self.cfg["model"]["mu_prime"], "mu_prime")


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def cmd_check(run: Run):
    """Check the standing hypotheses on the two step laws."""
    from .lattice import check_hypotheses

    rep = check_hypotheses(run.mu, run.mu_prime, delta=run.cfg["numerics"]["delta"])
    run.metrics.update(rep.as_dict())
    for h in ("h1", "h2", "h3", "h4"):
        run.check(h, getattr(rep, h))


def _solution(run: Run, alpha=None):
    from .crossing import solve_crossing_chain

    nm = run.cfg["numerics"]
    a = run.cfg["model"]["alpha"] if alpha is None else alpha
    return solve_crossing_chain(run.mu, run.mu_prime, a, nm["M"], nm["convention"])


def cmd_ladder(run: Run):
    """Ladder-height laws, renewal tables and the constants c, c'."""
    from .renewal import check_growth

    sol = _solution(run)
    up, down = sol.ladders
    run.metrics["ascending_heights"] = up.height_pmf.as_dict()
    run.metrics["descending_heights"] = down.height_pmf.as_dict()
    run.metrics["constants"] = sol.constants.as_dict()
    run.metrics["convention"] = run.cfg["numerics"]["convention"]
    for name, law, tab in (("ascending", up, sol.tables[0]), ("descending", down, sol.tables[1])):
        g = check_growth(tab)
        run.metrics[f"{name}_growth_ratio"] = g.ratio_at_max
        run.check(f"{name}_renewal_growth", g.ok, g.relative_error, 0.05)
        run.check(f"{name}_ladder_mass", law.residual_mass <= 1e-4, law.residual_mass, 1e-4)
        if run.csv:
            tab.to_csv(run.path(f"renewal_{name}.csv"))


def cmd_kernel(run: Run):
    """Crossing kernel, its invariant law and the skew parameter."""
    sol = _solution(run)
    K = sol.kernel
    run.metrics["gamma"] = sol.gamma
    run.metrics["nu"] = {int(x): sol.nu(x) for x in sol.nu.support}
    run.metrics["essential_class"] = sol.nu.support
    run.metrics["pairings"] = list(sol.pairings)
    run.metrics["renewal_constant"] = sol.renewal_constant
    run.metrics["window"] = K.M
    g0, g1 = _solution(run, 0.0).gamma, _solution(run, 1.0).gamma
    run.metrics["gamma_alpha0"], run.metrics["gamma_alpha1"] = g0, g1
    run.check("row_defect", K.row_defect.max() <= 1e-6, K.row_defect.max(), 1e-6)
    run.check("nu_residual", sol.nu.residual <= 1e-12, sol.nu.residual, 1e-12)
    run.check("alpha_independence", abs(g0 - g1) <= 1e-9, abs(g0 - g1), 1e-9)
    if run.mu == run.mu_prime:
        run.check("gamma_equal_laws", abs(sol.gamma - 0.5) <= 1e-9, sol.gamma, 1e-9)
    if run.csv:
        K.to_csv(run.path("kernel.csv"))
        sol.nu.to_csv(run.path("nu.csv"))


def cmd_verify_fluctuations(run: Run):
    """First-passage asymptotics against the renewal functions."""
    from .fluctuation import verify_upper_bounds

    sol = _solution(run)
    N = run.cfg["numerics"]["N"]
    rows = []
    for side, pmf, c, tab in (
        ("negative", run.mu, sol.constants.c, sol.tables[0]),
        ("positive", run.mu_prime, sol.constants.c_prime, sol.tables[1]),
    ):
        rep = verify_upper_bounds(pmf, 3, N, side=side)
        surv = rep.survival_rows[:, N]
        for conv in ("half_open", "closed"):
            h = tab.with_convention(conv).h(np.arange(1, 4))
            pred = 2 * c * h / np.sqrt(N)
            err = np.abs(surv / pred - 1)
            run.metrics[f"{side}_{conv}_abs_error"] = err
            if conv == run.cfg["numerics"]["convention"]:
                run.check(f"{side}_sqrt_n_survival", err.max() <= 0.03, err.max(), 0.03)
            ratio = surv[1] / surv[0]
            target = h[1] / h[0]
            run.metrics[f"{side}_{conv}_ratio_error"] = abs(ratio / target - 1)
        conv = run.cfg["numerics"]["convention"]
        h = tab.with_convention(conv).h(np.arange(1, 4))
        rerr = abs(surv[1] / surv[0] / (h[1] / h[0]) - 1)
        run.check(f"{side}_ratio", rerr <= 0.02, rerr, 0.02)
        lo, hi = N // 2, N
        flat = rep.variation("exit_stat", lo, hi)
        run.check(f"{side}_exit_flatness", flat < 0.10, flat, 0.10)
        for k in range(1, N + 1):
            rows.append((side, k, *rep.survival_rows[:, k], *rep.exit_rows[:, k]))
    if run.csv:
        _write_rows(run.path("fluctuations.csv"),
                    ["side", "n", "surv1", "surv2", "surv3", "exit1", "exit2", "exit3"], rows)


def cmd_verify_operators(run: Run):
    """Operator renewal sequence diagnostics and the sqrt(n) H_n limit."""
    from .operators import (
        WeightedNorm,
        build_cn,
        build_hn,
        kernel_sum_check,
        rn_sequence,
        tail_sequence,
        verify_gouezel_limit,
        weighted_row_norm,
        write_rn_csv,
    )

    nm = run.cfg["numerics"]
    sol = _solution(run)
    seq = build_cn(run.mu, run.mu_prime, run.cfg["model"]["alpha"], sol.kernel.M, nm["N"], nm["depth_tol"])
    build_hn(seq)
    N = seq.N
    ks = kernel_sum_check(seq, sol)
    run.metrics["kernel_sum"] = ks
    run.check("kernel_sum", ks["max_error"] <= 1e-8, ks["max_error"], 1e-8)
    r = rn_sequence(seq, sol.nu)
    tail = tail_sequence(seq, sol.nu)
    n_tail = min(4000, N)
    stat = np.sqrt(n_tail) * tail[n_tail]
    err = abs(stat / sol.tail_constant - 1)
    run.metrics["tail_stat"] = stat
    run.metrics["tail_target"] = sol.tail_constant
    run.check("rn_tail", err <= 0.05, err, 0.05)
    run.check("rn_nonnegative", bool(np.all(r >= 0)))
    norm = WeightedNorm(nm["delta"])
    ns = np.arange(50, min(500, N) + 1)
    wn = np.array([n**1.5 * weighted_row_norm(seq.C(int(n)), norm) for n in ns])
    var = float((wn.max() - wn.min()) / wn.max())
    run.check("weighted_norm_flatness", var < 0.10, var, 0.10)
    ladder = [n for n in (N // 4, N // 2, N) if n >= 1]
    rep = verify_gouezel_limit(seq, sol, ladder)
    run.metrics["gouezel_relative_error"] = rep.relative_error
    run.metrics["gouezel_shape_error"] = rep.shape_error
    run.check("gouezel_shape", rep.shape_error[-1] <= 0.03, rep.shape_error[-1], 0.03)
    run.check("gouezel_absolute", rep.relative_error[-1] <= 0.10, rep.relative_error[-1], 0.10)
    if run.csv:
        rep.to_csv(run.path("gouezel.csv"))
        write_rn_csv(run.path("rn.csv"), r, tail)


def _walk_config(run: Run):
    from .simulate import WalkConfig

    m, r = run.cfg["model"], run.cfg["run"]
    return WalkConfig(run.mu, run.mu_prime, m["alpha"], m["start"], r["seed"])


def cmd_simulate(run: Run):
    """Scaled-walk samples plus law-of-large-numbers and recurrence diagnostics."""
    from .simulate import diagnostics_lln_recurrence, mc_samples, write_samples_csv

    r = run.cfg["run"]
    wc = _walk_config(run)
    values = mc_samples(wc, r["n"], r["times"], r["paths"], r["workers"])
    if values.shape[1] == 1:
        values = values[:, 0]
    run.metrics["sample_mean"] = np.mean(values, axis=0)
    run.metrics["sample_std"] = np.std(values, axis=0)
    n_lln = min(r["n"], 100_000)
    # decades ending at the run length; 1e3, 1e4, 1e5 for long runs
    cps = sorted({c for c in (n_lln // 100, n_lln // 10, n_lln) if c >= 1})
    lln = diagnostics_lln_recurrence(wc, n=n_lln, paths=100, checkpoints=cps)
    run.metrics["lln_max_ratio_median"] = float(np.median(lln.max_ratio))
    run.metrics["zero_visits_median"] = np.median(lln.zero_visits, axis=0)
    # 0.05 at n = 1e5, widened for short runs to 12 sigma / sqrt(n)
    thr = max(0.05, 12 * max(wc.sigma, wc.sigma_prime) / np.sqrt(lln.n))
    frac = float(np.mean(lln.max_ratio <= thr))
    run.metrics["lln_threshold"] = thr
    run.check("lln", frac >= 0.99, frac, 0.99)
    v = lln.zero_visits
    if v.shape[1] >= 2:
        cps = np.array(lln.checkpoints, dtype=float)
        grows = float(np.mean(v[:, 1] > v[:, 0]))
        thins = float(np.mean(v[:, -1] / cps[-1] < v[:, 0] / cps[0]))
        run.check("recurrence", grows > 0.5, grows, 0.5)
        run.check("null_recurrence", thins > 0.5, thins, 0.5)
    if run.csv:
        write_samples_csv(run.path("samples.csv"), values)


def cmd_compare(run: Run):
    """Monte Carlo laws of the scaled walk against skew Brownian motion."""
    from .simulate import mc_fdd, mc_marginal
    from .skewbm import SkewKernel, marginal_cdf
    from .stats import dkw_band, ks_distance

    r = run.cfg["run"]
    if r["paths"] < MIN_PATHS:
        raise ConfigError(f"run.paths must be >= {MIN_PATHS} for comparisons")
    wc = _walk_config(run)
    if not wc.limit_ok:
        raise ConfigError("step laws fail the standing hypotheses; no limit comparison")
    sol = _solution(run)
    k = SkewKernel(sol.gamma)
    run.metrics["gamma"] = sol.gamma
    t = r["times"][-1]
    emp = mc_marginal(wc, r["n"], t, r["paths"], r["workers"])
    ks = ks_distance(emp, lambda q: marginal_cdf(k, t, 0.0, q))
    tol = dkw_band(r["paths"], 0.99) + 1.0 / (min(wc.sigma, wc.sigma_prime) * np.sqrt(r["n"]))
    run.check("ks_marginal", ks <= tol, ks, tol)
    if len(r["times"]) == 2:
        pairs = mc_fdd(wc, r["n"], r["times"], r["paths"], r["workers"])
        cells = fdd_cells(pairs, k, r["times"], lattice=(r["n"], wc.sigma, wc.sigma_prime))
        run.metrics["cells"] = cells
        zmax = max(abs(c["z"]) for c in cells)
        run.check("fdd_cells", zmax <= 3, zmax, 3)


def fdd_cells(pairs: np.ndarray, k, times, edges=(-0.5, 0.5), lattice=None) -> list:
    """Quadrant and 3x3 grid cell frequencies against skew-BM quadrature.

    Cells are right-closed, ``(a, b]``, as for a CDF; in particular an atom at
    0 counts on the non-positive side.  With ``lattice=(n, sigma, sigma_prime)`` the interior grid edges are moved to
    the nearest half-lattice point of the unscaled walk at each time (a
    continuity correction that removes the ``O(n^{-1/2})`` edge bias).
    """
    from .skewbm import quad_cell
    from .stats import cell_test

    inf = np.inf
    n = len(pairs)
    quads = [((-inf, 0), (-inf, 0)), ((-inf, 0), (0, inf)), ((0, inf), (-inf, 0)), ((0, inf), (0, inf))]
    cuts = [[-inf, *(snap_edge(e, t, lattice) for e in edges), inf] for t in times]
    grid = [((cuts[0][i], cuts[0][i + 1]), (cuts[1][j], cuts[1][j + 1])) for i in range(3) for j in range(3)]
    out = []
    for rect in quads + grid:
        w = _cell_weight(pairs[:, 0], rect[0]) * _cell_weight(pairs[:, 1], rect[1])
        observed = float(w.sum())
        p = quad_cell(k, times, rect)
        z = cell_test(observed, n, p) if 0 < p < 1 else 0.0
        out.append({"rect": [list(rect[0]), list(rect[1])], "observed": observed / n, "expected": p, "z": z})
    return out


def snap_edge(e: float, t: float, lattice) -> float:
    """Move ``e`` to the closest value ``(j + 1/2) / (s sqrt(n))`` on its side of 0."""
    if lattice is None or e == 0:
        return e
    n, sigma, sigma_p = lattice
    if abs(n * t - round(n * t)) > 1e-9:
        return e
    scale = (sigma if e < 0 else sigma_p) * np.sqrt(n)
    return float(np.sign(e) * (np.floor(abs(e) * scale) + 0.5) / scale)


def _cell_weight(v, interval):
    a, b = interval
    return ((v > a) & (v <= b)).astype(float)


def _write_rows(path, header, rows):
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


HANDLERS = {
    "check": cmd_check,
    "ladder": cmd_ladder,
    "kernel": cmd_kernel,
    "verify-fluctuations": cmd_verify_fluctuations,
    "verify-operators": cmd_verify_operators,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON experiment config")
    common.add_argument("--workers", type=int, default=None, help="simulation worker processes")
    common.add_argument("--out", default=None, help="results directory (overrides output.directory)")
    common.add_argument("--seed-override", type=int, default=None, help="replace run.seed")
    p = argparse.ArgumentParser(prog="oscwalk", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HANDLERS[name].__doc__)
    return p


def run_command(command: str, raw: dict, out=None, workers=None, seed_override=None):
    """Run one command; returns ``(exit_code, envelope)``."""
    envelope = {"schema": SCHEMA, "command": command, "inputs_hash": None, "config": None,
                "metrics": {}, "criteria": {}, "status": "error", "error": None}
    try:
        cfg = resolve_config(raw, seed_override, workers)
    except ConfigError as exc:
        envelope["error"] = {"type": type(exc).__name__, "message": str(exc)}
        return 2, envelope
    h = config_hash(cfg)
    envelope["inputs_hash"] = h
    envelope["config"] = cfg
    base = Path(out if out is not None else cfg["output"]["directory"])
    run = Run(command, cfg, base / command / h)
    code = 0
    try:
        HANDLERS[command](run)
        envelope["metrics"] = _jsonable(run.metrics)
        envelope["criteria"] = run.criteria
        ok = all(c["pass"] for c in run.criteria.values())
        envelope["status"] = "pass" if ok else "fail"
        code = 0 if ok else 1
    except ConfigError as exc:
        envelope["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = 2
    except OscwalkError as exc:
        envelope["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = 1
    if "json" in cfg["output"]["formats"]:
        with open(run.dir / "summary.json", "w") as fh:
            json.dump(envelope, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
    return code, envelope


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        env = {"schema": SCHEMA, "command": args.command, "status": "error",
               "error": {"type": "ConfigError", "message": str(exc)}}
        print(json.dumps(env, indent=2))
        return 2
    code, env = run_command(args.command, raw, args.out, args.workers, args.seed_override)
    summary = {k: env[k] for k in ("command", "inputs_hash", "status", "error")}
    summary["criteria"] = {k: v["pass"] for k, v in env["criteria"].items()}
    print(json.dumps(summary, indent=2, default=str))
    return code


if __name__ == "__main__":
    sys.exit(main())
