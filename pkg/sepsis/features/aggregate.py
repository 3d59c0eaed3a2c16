"""
Aggregation Module
Collapses each patient's event history into min / max / avg / median per item and pivots to a matrix
"""

from __future__ import annotations

import logging
import re

import numpy as np
import pandas as pd

from ..errors import InputError
from .matrix import AGE_COLUMN, FeatureMatrix

logger = logging.getLogger(__name__)

STATISTICS = (("min", "min"), ("max", "max"), ("avg", "mean"), ("median", "median"))


def feature_names(itemids, item_names: dict) -> dict:
    """
    itemid -> column stem

    Unknown items become `item_<id>`; a display name shared by several items gets the itemid appended.
    """
    stems = {}
    for itemid in itemids:
        label = item_names.get(int(itemid))
        stems[int(itemid)] = re.sub(r"\s+", "_", label.strip()) if label else f"item_{int(itemid)}"
    counts = pd.Series(list(stems.values())).value_counts()
    for itemid, stem in stems.items():
        if counts.get(stem, 0) > 1:
            stems[itemid] = f"{stem}_{itemid}"
    return stems


def aggregate_and_pivot(events: list, cohort: list, item_names: dict) -> FeatureMatrix:
    """
    Build the patient x feature matrix

    Args:
        events: EventRows from both event tables; the same itemid in both streams is pooled
        cohort: CohortRecords; one matrix row each, sorted by subject_id
        item_names: itemid -> display name

    Returns:
        FeatureMatrix with `<name>_min/_max/_avg/_median` per item, then `patient_age`,
        plus gender / ethnicity token columns
    """
    records = sorted(cohort, key=lambda r: r.subject_id)
    subjects = pd.Index([r.subject_id for r in records], dtype=np.int64)

    frame = pd.DataFrame({
        "subject_id": np.fromiter((e.subject_id for e in events), dtype=np.int64, count=len(events)),
        "itemid": np.fromiter((e.itemid for e in events), dtype=np.int64, count=len(events)),
        "value": np.fromiter((e.valuenum for e in events), dtype=float, count=len(events)),
    })
    strays = ~frame["subject_id"].isin(subjects)
    if strays.any():
        raise InputError(f"{int(strays.sum())} events belong to subjects outside the cohort "
                         f"(first: {int(frame.loc[strays, 'subject_id'].iloc[0])})")

    itemids = np.sort(frame["itemid"].unique())
    stems = feature_names(itemids, item_names)
    unknown = [i for i in itemids if int(i) not in item_names]
    if unknown:
        logger.warning("%d itemids have no name entry and are named item_<id>", len(unknown))

    blocks, columns = [], []
    if len(itemids):
        stats = frame.groupby(["subject_id", "itemid"])["value"].agg([how for _, how in STATISTICS])
    for suffix, how in (STATISTICS if len(itemids) else ()):
        wide = stats[how].unstack("itemid").reindex(index=subjects, columns=itemids)
        blocks.append(wide.to_numpy(dtype=float))
        columns.append([f"{stems[int(i)]}_{suffix}" for i in itemids])

    n_items = len(itemids)
    values = np.empty((len(subjects), n_items * len(STATISTICS) + 1))
    names = []
    for k, itemid in enumerate(itemids):
        for s, block in enumerate(blocks):
            values[:, k * len(STATISTICS) + s] = block[:, k]
            names.append(columns[s][k])
    values[:, -1] = [r.age_years for r in records]
    names.append(AGE_COLUMN)

    logger.info("aggregated %d events into %d patients x %d items", len(frame), len(subjects), n_items)
    return FeatureMatrix(
        subject_ids=subjects.to_numpy(),
        columns=names,
        values=values,
        labels=[r.label for r in records],
        categoricals={
            "gender": [r.gender for r in records],
            "ethnicity": [r.ethnicity for r in records],
        },
    )
