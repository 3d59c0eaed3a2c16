"""
Feature Matrix Module
Dense patient x feature table with missingness, labels and raw categorical token columns
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from ..errors import InputError, SchemaError

CATEGORICAL_COLUMNS = ("gender", "ethnicity")
AGE_COLUMN = "patient_age"


def format_float(value: float) -> str:
    """17 significant digits; NaN becomes an empty cell"""
    if value != value:
        return ""
    return format(float(value), ".17g")


@dataclass(frozen=True)
class FeatureMatrix:
    """
    One row per patient

    `values` holds NaN where a cell is missing; `categoricals` keeps the raw token
    columns (gender, ethnicity) until they are one-hot encoded.
    """

    subject_ids: np.ndarray
    columns: tuple
    values: np.ndarray
    labels: np.ndarray
    categoricals: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "subject_ids", np.asarray(self.subject_ids, dtype=np.int64))
        object.__setattr__(self, "columns", tuple(self.columns))
        values = np.asarray(self.values, dtype=float).reshape(len(self.subject_ids), len(self.columns))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=bool))
        cats = {name: np.asarray(tokens, dtype=object) for name, tokens in self.categoricals.items()}
        object.__setattr__(self, "categoricals", cats)

        n = len(self.subject_ids)
        if len(self.labels) != n:
            raise InputError(f"{len(self.labels)} labels for {n} rows")
        if len(set(self.columns)) != len(self.columns):
            raise InputError("feature column names must be unique")
        for name, tokens in cats.items():
            if len(tokens) != n:
                raise InputError(f"categorical column {name} has {len(tokens)} rows, expected {n}")
            if name in self.columns:
                raise InputError(f"{name} is both a numeric and a categorical column")

    @property
    def mask(self) -> np.ndarray:
        """True where a cell is observed"""
        return ~np.isnan(self.values)

    @property
    def n_rows(self) -> int:
        return len(self.subject_ids)

    @property
    def n_features(self) -> int:
        return len(self.columns)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def take_rows(self, index) -> "FeatureMatrix":
        index = np.asarray(index)
        return replace(
            self,
            subject_ids=self.subject_ids[index],
            values=self.values[index],
            labels=self.labels[index],
            categoricals={k: v[index] for k, v in self.categoricals.items()},
        )

    def take_columns(self, names: Sequence[str], fill: Optional[float] = None) -> "FeatureMatrix":
        """
        Reorder / subset numeric columns

        Args:
            names: Target column order
            fill: Value for names absent from this matrix; None makes absence an error
        """
        lookup = {name: i for i, name in enumerate(self.columns)}
        out = np.empty((self.n_rows, len(names)))
        for j, name in enumerate(names):
            if name in lookup:
                out[:, j] = self.values[:, lookup[name]]
            elif fill is None:
                raise InputError(f"column {name} is not in the matrix")
            else:
                out[:, j] = fill
        return replace(self, columns=tuple(names), values=out)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=list(self.columns))
        for name, tokens in self.categoricals.items():
            frame[name] = tokens
        frame.insert(0, "LABEL", self.labels.astype(int))
        frame.insert(0, "SUBJECT_ID", self.subject_ids)
        return frame


def write_matrix(matrix: FeatureMatrix, path):
    """features.csv: SUBJECT_ID, LABEL, numeric columns, categorical columns; missing cells empty"""
    data = {"SUBJECT_ID": matrix.subject_ids, "LABEL": matrix.labels.astype(int)}
    for j, name in enumerate(matrix.columns):
        data[name] = [format_float(v) for v in matrix.values[:, j]]
    for name, tokens in matrix.categoricals.items():
        data[name] = tokens
    header = ["SUBJECT_ID", "LABEL", *matrix.columns, *matrix.categoricals]
    pd.DataFrame(data, columns=header).to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def read_matrix(path) -> FeatureMatrix:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    for name in ("SUBJECT_ID", "LABEL"):
        if name not in frame.columns:
            raise SchemaError(name, "features")
    names = [c for c in frame.columns if c not in ("SUBJECT_ID", "LABEL") and c not in CATEGORICAL_COLUMNS]
    numeric = frame[names].replace("", np.nan).astype(float) if names else pd.DataFrame(index=frame.index)
    return FeatureMatrix(
        subject_ids=frame["SUBJECT_ID"].astype(np.int64).to_numpy(),
        columns=names,
        values=numeric.to_numpy(dtype=float),
        labels=frame["LABEL"].str.strip().eq("1").to_numpy(),
        categoricals={c: frame[c].to_numpy(dtype=object) for c in CATEGORICAL_COLUMNS if c in frame.columns},
    )
