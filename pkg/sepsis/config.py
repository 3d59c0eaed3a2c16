"""
Configuration module for the sepsis mortality pipeline
Contains all default settings and the typed configuration objects
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .errors import ConfigError, ParameterError

# Cohort Settings
SEPSIS_ICD9_CODES = ("99591", "99592", "78552")  # sepsis, severe sepsis, septic shock
MIN_AGE_YEARS = 18.0
MAX_PLAUSIBLE_AGE = 120.0  # MIMIC shifts DOB for patients over 89
SHIFTED_AGE_YEARS = 90.0
INCLUSION_SCOPES = ("latest", "any")

# Preprocessing Settings
MISSING_THRESHOLD = 0.30  # "30% or more" missing -> dropped
SPLIT_RATIO = 0.75
SMOTE_K = 5
TOP_K_FEATURES = 35
SELECTION_ON = ("balanced", "raw")

# Evaluation Settings
CV_FOLDS = 5
BOOTSTRAP_B = 1000
CI_ALPHA = 0.05
TTEST_VARIANTS = ("student", "welch")
SHAP_TOP_N = 20
SHAP_MAX_ROWS = 200

# Model Settings
MODEL_KINDS = ("rf", "gb", "lr", "svm", "knn")
TREE_MODEL_KINDS = ("rf", "gb")
DEFAULT_SEED = 20240601
NEWTON_DENOMINATOR_FLOOR = 1e-12


def _check(condition: bool, message: str, error=ParameterError):
    if not condition:
        raise error(message)


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 300
    mtry: Optional[int] = None  # None -> ceil(sqrt(p))
    max_depth: Optional[int] = None
    min_leaf: int = 1
    bootstrap: bool = True

    def validate(self):
        _check(self.n_trees >= 1, "forest.n_trees must be >= 1")
        _check(self.mtry is None or self.mtry >= 1, "forest.mtry must be >= 1")
        _check(self.max_depth is None or self.max_depth >= 0, "forest.max_depth must be >= 0")
        _check(self.min_leaf >= 1, "forest.min_leaf must be >= 1")

    def resolve_mtry(self, n_features: int) -> int:
        if self.mtry is None:
            return max(1, math.ceil(math.sqrt(n_features)))
        return min(self.mtry, n_features)


@dataclass(frozen=True)
class BoostConfig:
    rounds: int = 200
    learning_rate: float = 0.1
    depth: int = 3
    min_leaf: int = 1

    def validate(self):
        _check(self.rounds >= 0, "boosting.rounds must be >= 0")
        _check(0.0 < self.learning_rate <= 1.0, "boosting.learning_rate must be in (0, 1]")
        _check(self.depth >= 1, "boosting.depth must be >= 1")
        _check(self.min_leaf >= 1, "boosting.min_leaf must be >= 1")


@dataclass(frozen=True)
class LinearConfig:
    epochs: int = 500
    step: float = 0.1
    l2: float = 1e-4

    def validate(self):
        _check(self.epochs >= 0, "epochs must be >= 0")
        _check(self.step > 0.0, "step must be > 0")
        _check(self.l2 >= 0.0, "l2 must be >= 0")


@dataclass(frozen=True)
class KnnConfig:
    k: int = 15

    def validate(self):
        _check(self.k >= 1, "knn.k must be >= 1")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for all five learner families plus the master seed"""

    forest: ForestConfig = field(default_factory=ForestConfig)
    boosting: BoostConfig = field(default_factory=BoostConfig)
    logistic: LinearConfig = field(default_factory=LinearConfig)
    svm: LinearConfig = field(default_factory=LinearConfig)
    knn: KnnConfig = field(default_factory=KnnConfig)
    seed: int = DEFAULT_SEED
    n_jobs: int = 1

    def validate(self):
        for block in (self.forest, self.boosting, self.logistic, self.svm, self.knn):
            block.validate()
        _check(0 <= self.seed < 2**64, "seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of one pipeline run"""

    data_dir: str = "data"
    out_dir: str = "out"
    seed: int = DEFAULT_SEED
    inclusion_scope: str = "latest"
    selection_on: str = "balanced"
    missing_threshold: float = MISSING_THRESHOLD
    split_ratio: float = SPLIT_RATIO
    smote_k: int = SMOTE_K
    top_k_features: int = TOP_K_FEATURES
    cv_folds: int = CV_FOLDS
    bootstrap_b: int = BOOTSTRAP_B
    ttest_variant: str = "student"
    models: tuple = MODEL_KINDS
    shap_max_rows: int = SHAP_MAX_ROWS
    shap_top_n: int = SHAP_TOP_N
    n_jobs: int = -1
    progress: bool = True
    train: TrainConfig = field(default_factory=TrainConfig)

    def validate(self, check_paths: bool = False):
        try:
            _check(self.inclusion_scope in INCLUSION_SCOPES, f"inclusion_scope must be one of {INCLUSION_SCOPES}")
            _check(self.selection_on in SELECTION_ON, f"selection_on must be one of {SELECTION_ON}")
            _check(0.0 < self.missing_threshold <= 1.0, "missing_threshold must be in (0, 1]")
            _check(0.0 < self.split_ratio < 1.0, "split_ratio must be in (0, 1)")
            _check(self.smote_k >= 1, "smote_k must be >= 1")
            _check(self.top_k_features >= 1, "top_k_features must be >= 1")
            _check(self.cv_folds == 0 or self.cv_folds >= 2, "cv_folds must be 0 (disabled) or >= 2")
            _check(self.bootstrap_b >= 1, "bootstrap_b must be >= 1")
            _check(self.ttest_variant in TTEST_VARIANTS, f"ttest_variant must be one of {TTEST_VARIANTS}")
            _check(len(self.models) > 0, "models must not be empty")
            unknown = [m for m in self.models if m not in MODEL_KINDS]
            _check(not unknown, f"unknown model kinds: {unknown}")
            _check(len(set(self.models)) == len(self.models), "models must not repeat")
            _check(self.shap_max_rows >= 1, "shap_max_rows must be >= 1")
            _check(self.shap_top_n >= 1, "shap_top_n must be >= 1")
            self.train.validate()
        except (ParameterError, TypeError) as e:
            raise ConfigError(str(e)) from e
        if check_paths and not Path(self.data_dir).is_dir():
            raise ConfigError(f"data directory does not exist: {self.data_dir}")

    def train_config(self) -> TrainConfig:
        """TrainConfig with the run-level seed and job count applied"""
        return replace(self.train, seed=self.seed, n_jobs=self.n_jobs)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["models"] = list(self.models)
        data["train"] = asdict(self.train_config())
        return data


def _build(cls, values: Any, where: str):
    """Build a (nested) config dataclass from a plain mapping, rejecting unknown keys"""
    if values is None:
        return cls()
    if not isinstance(values, dict):
        raise ConfigError(f"{where or 'config'} must be a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError(f"unknown config keys in {where or 'config'}: {unknown}")
    kwargs = {}
    for name, value in values.items():
        default = getattr(cls(), name)
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}".lstrip("."))
        elif name == "models":
            if isinstance(value, str):
                value = [v.strip() for v in value.split(",") if v.strip()]
            if not isinstance(value, (list, tuple)):
                raise ConfigError("models must be a list of model kinds")
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """
    Load a RunConfig from a YAML file and apply CLI overrides

    Args:
        path: Optional YAML file; missing keys keep their defaults
        overrides: Flat mapping of top-level keys that win over the file

    Returns:
        Validated RunConfig
    """
    values: dict = {}
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                loaded = yaml.safe_load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in {path}: {e}") from e
        if loaded is not None:
            if not isinstance(loaded, dict):
                raise ConfigError("config file must contain a mapping")
            values.update(loaded)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    cfg = _build(RunConfig, values, "")
    cfg.validate()
    return cfg
