"""Oscillating random walks on Z and their skew Brownian limit.

Exact first-passage and ladder computations, the crossing chain and its
invariant law, the operator renewal sequence, a reproducible simulator and
the limiting skew-BM laws.
"""
from .crossing import (
    CrossingKernel,
    CrossingSolution,
    InvariantMeasure,
    crossing_kernel,
    essential_class,
    gamma,
    invariant_measure,
    solve_crossing_chain,
)
from .errors import *  # noqa: F401,F403
from .fluctuation import (
    KilledWalkTable,
    LadderLaw,
    bridge_probability,
    build_killed_table,
    entrance_law,
    ladder_law,
    survival_table,
    verify_upper_bounds,
)
from .lattice import (
    LatticePmf,
    check_hypotheses,
    is_strongly_aperiodic,
    make_pmf,
    moments,
    reflect,
)
from .operators import (
    OperatorSeq,
    WeightedNorm,
    build_cn,
    build_hn,
    rn_sequence,
    verify_gouezel_limit,
    weighted_row_norm,
)
from .renewal import RenewalTable, limit_constants, potential, renewal_function
from .simulate import (
    PathRecord,
    ScaledProcess,
    WalkConfig,
    crossing_occupation,
    crossing_samples,
    mc_fdd,
    mc_marginal,
    scaled_eval,
    simulate_path,
)
from .skewbm import (
    SkewKernel,
    excursion_bridge_density,
    fdd_density,
    heat_kernel,
    marginal_cdf,
    meander_density,
    quad_cell,
)
from .stats import EmpiricalDistribution, cell_test, dkw_band, ks_distance

__version__ = "0.1.0"
