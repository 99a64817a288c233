"""Algebraic approximation of semialgebraic germs preserving dimension."""

from .approximator import (
    ApproximationResult,
    KFilter,
    RunResult,
    StepRecord,
    approximate_piece,
    assess_candidate,
    build_k_filter,
    combine_equations,
    generic_projection,
    run,
    step_combine,
)
from .config import SamplerConfig
from .metric import (
    LojaEstimate,
    SEquivReport,
    check_equiv,
    check_leq_s,
    delta,
    estimate_lojasiewicz,
    fit_contact_order,
    hausdorff,
    horn_member,
    profile_csv,
)
from .polycore import Polynomial, PolyMap, compose_linear, eval_exact, eval_f64, gradient, parse, to_string
from .presentation import (
    Presentation,
    SetDescription,
    as_set,
    check_regularity,
    estimate_local_dimension,
    load,
    make_presentation,
)
from .sampling import PointCloud, sample_on_sphere

__version__ = "0.1.0"

__all__ = [
    "ApproximationResult", "KFilter", "LojaEstimate", "PointCloud", "PolyMap", "Polynomial", "Presentation",
    "RunResult", "SEquivReport", "SamplerConfig", "SetDescription", "StepRecord", "approximate_piece", "as_set",
    "assess_candidate", "build_k_filter", "check_equiv", "check_leq_s", "check_regularity", "combine_equations",
    "compose_linear", "delta", "estimate_local_dimension", "estimate_lojasiewicz", "eval_exact", "eval_f64",
    "fit_contact_order", "generic_projection", "gradient", "hausdorff", "horn_member", "load",
    "make_presentation", "parse", "profile_csv", "run", "sample_on_sphere", "step_combine", "to_string",
]
