"""Minimal rational explanations of event histories for MTPP models."""

from ._ehd import (
    EventSequence,
    HawkesModel,
    Instance,
    MtppModel,
    NumericalError,
    PoissonModel,
    SolveReport,
    ValidationError,
    compensator,
    explain,
    fit_mle,
    intensity_at,
    load_instance,
    load_model,
    log_perplexity,
    make_planted_instance,
    next_event_density,
    predict_next,
    sequence_nll,
    simulate,
    split_instance,
)

__version__ = "0.1.0"
