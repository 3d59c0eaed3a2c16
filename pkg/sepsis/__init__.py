"""
Sepsis mortality prediction pipeline
Cohort extraction, leakage-safe preprocessing, from-scratch learners, evaluation and TreeSHAP
"""

__version__ = "1.0.0"

from .config import RunConfig, TrainConfig, load_config
from .errors import SepsisError, StageError
from .pipeline import run_pipeline, run_stage
from .reports import emit_reports

__all__ = [
    "__version__", "RunConfig", "TrainConfig", "load_config",
    "SepsisError", "StageError", "run_pipeline", "run_stage", "emit_reports",
]
