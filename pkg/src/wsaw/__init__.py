"""Lattice-polymer laboratory for weakly self-avoiding walks.

Exact small-n enumeration, reweighted and Markov-chain sampling of the
tilted walk law, cone decompositions of the self-intersection process with
Palm-style estimators, and an exponent-estimation pipeline with a study
harness and command-line front end.
"""

from ._version import __version__
from .errors import (
    BudgetExceededError,
    ChainInitializationError,
    DegenerateEnsembleError,
    DegenerateInputError,
    MissingValueError,
    UndefinedEstimateError,
)
from .rng import SeededSource
from .walk import (
    LatticePath,
    batch_observables,
    endpoint_distance,
    hull_radius,
    insert_repetitions,
    read_paths,
    sample_srw,
    silt_count,
    write_paths,
)
from .census import (
    ConnectiveEstimate,
    Prop21Report,
    SawCountTable,
    SiltHistogram,
    connective_estimate,
    enumerate_saw,
    exact_joint_distribution,
    silt_histogram,
    threshold_bstar,
    verify_prop21,
)
from .ensemble import (
    EnsembleConfig,
    ExactMoments,
    McmcParams,
    RadialLaw,
    WeightedEnsemble,
    default_window,
    distance_law,
    exact_expectations,
    integrated_autocorr_time,
    sample_ensemble,
    sample_mcmc,
    sample_reweighted,
)
from .cones import (
    Box,
    ConeDecomposition,
    IntersectionProcess,
    LineClassification,
    ShapeReport,
    TestLineSet,
    classify_lines,
    cone_decompose,
    detect_shapes,
    estimate_ax,
    extract_process,
    palm_empty_ball,
    palm_marked_lines,
    palm_marked_points,
    poisson_points,
)
from .analysis import (
    AxTable,
    BoundPanel,
    ConditionDReport,
    ExponentFit,
    IntegralReport,
    bound_panel,
    condition_d,
    fit_exponent,
    gaussian_tail_reference,
    integrals,
    mu_function,
    nu_formula,
    q_function,
    radii_r1_r2,
)
from .harness import (
    ExperimentSpec,
    HullReport,
    RunManifest,
    report_convex_hull,
    run_experiment,
)

__all__ = [name for name in dir() if not name.startswith("_")]
