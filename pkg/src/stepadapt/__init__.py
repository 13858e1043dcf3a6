"""Rank-based step-size adaptive random search.

Library layout:

* ``core``       -- states, sample blocks, ranking, the generic transition
* ``algorithms`` -- csa / xnes / sa / oneplusone / constant
* ``objectives`` -- scaling-invariant objective catalog and checkers
* ``chain``      -- normalized process z = x/sigma, coupled runs, CR estimator
* ``invariance`` -- paired-run invariance verification
* ``runner``     -- file-writing experiment driver behind the CLI
"""

from .core import (
    AlgorithmSpec,
    AlgorithmState,
    EvaluationError,
    InternalInvariantError,
    RankingPermutation,
    RngStream,
    SampleBlock,
    apply_permutation,
    rank_values,
    step,
)
from .algorithms import (
    ALGORITHM_NAMES,
    CommaEsParams,
    OnePlusOneParams,
    SaParams,
    chi_mean,
    default_population,
    default_weights,
    make_algorithm,
    make_constant,
    make_csa,
    make_oneplusone,
    make_sa,
    make_xnes,
)
from .objectives import (
    InvarianceReport,
    Objective,
    Witness,
    catalog,
    check_positive_homogeneity,
    check_scaling_invariance,
    composite,
    ellipsoid,
    linear,
    make_objective,
    parse_objective,
    pnorm,
    quadratic,
    quarter_power,
    recheck_witness,
    sphere,
)
from .chain import (
    CoupledTrace,
    CREstimate,
    DegenerateStateError,
    InsufficientDataError,
    StepOutcome,
    TrajectoryRecord,
    estimate_cr,
    estimate_r_of_z,
    log_progress_check,
    normalized_step,
    run_chain,
    run_coupled,
    sigma_telescoping_gap,
)
from .invariance import (
    PairedRunReport,
    check_monotone_invariance,
    check_scale_invariance,
    check_translation_invariance,
)

__version__ = "0.1.0"
