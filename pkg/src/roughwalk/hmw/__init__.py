"""Hidden Markov walks: models, simulation, excursions and estimators."""

from .excursions import (
    DegenerateExcursionError,
    ExcursionBatch,
    ExcursionRecord,
    ExcursionStats,
    ResidualMassError,
    estimate,
    exact_excursion_stats,
    excursion_times,
    simulate_excursions,
    split_excursions,
)
from .model import (
    HMWModel,
    MarkovSpec,
    ModelError,
    StateEmission,
    ValidationReport,
    load_model,
    model_from_dict,
    stationary,
    validate,
)
from .simulate import SimulatedWalk, WalkSampler, iter_batches, path_stream, simulate, simulate_batch
from .transforms import (
    IidApproxReport,
    SingularCovarianceError,
    drift,
    iid_approx_diag,
    isotropize,
    normal_form,
    recenter,
)

__all__ = [
    "DegenerateExcursionError", "ExcursionBatch", "ExcursionRecord", "ExcursionStats",
    "HMWModel", "IidApproxReport", "MarkovSpec", "ModelError", "ResidualMassError",
    "SimulatedWalk", "SingularCovarianceError", "StateEmission", "ValidationReport",
    "WalkSampler", "drift", "estimate", "exact_excursion_stats", "excursion_times",
    "iid_approx_diag", "isotropize", "iter_batches", "load_model", "model_from_dict",
    "normal_form", "path_stream", "recenter", "simulate", "simulate_batch",
    "simulate_excursions", "split_excursions", "stationary", "validate",
]
