"""
Synthetic Dataset Module
Generates a seeded, schema-compatible stand-in for the restricted ICU tables
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np
import pandas as pd

from ..config import SEPSIS_ICD9_CODES
from ..errors import ConfigError
from . import tables

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
ITEM_NAMES_FILE = "item_names.csv"

ETHNICITIES = ("WHITE", "BLACK/AFRICAN AMERICAN", "HISPANIC OR LATINO", "ASIAN", "UNKNOWN/NOT SPECIFIED")
ETHNICITY_WEIGHTS = (0.68, 0.10, 0.05, 0.04, 0.13)
OTHER_ICD9_CODES = ("4019", "42731", "5849", "51881", "2724", "25000", "4280", "41401", "5990", "2851")
FIRST_ITEMID = 220001
EPOCH = datetime(2100, 1, 1)  # shifted-date era, as in the public exports
DOB_SHIFT_YEARS = 210.0


@dataclass(frozen=True)
class SynthConfig:
    """Generator knobs; `signal_strength` is a mean shift in standard deviations"""

    n_patients: int = 5000
    sepsis_fraction: float = 0.5
    mortality_rate: float = 0.3
    signal_strength: float = 1.5
    n_informative_items: int = 10
    n_noise_items: int = 40
    missing_rate: float = 0.1
    events_per_patient_item: tuple = (1, 3)
    seed: int = 7
    shifted_dob_fraction: float = 0.02
    nonlinear: bool = False
    text_value_rate: float = 0.01
    earlier_sepsis_fraction: float = 0.2

    def validate(self):
        lo, hi = self.events_per_patient_item
        checks = [
            (self.n_patients >= 0, "n_patients must be >= 0"),
            (0.0 < self.sepsis_fraction <= 1.0, "sepsis_fraction must be in (0, 1]"),
            (0.0 < self.mortality_rate < 1.0, "mortality_rate must be in (0, 1)"),
            (self.signal_strength >= 0.0, "signal_strength must be >= 0"),
            (self.n_informative_items >= 0, "n_informative_items must be >= 0"),
            (self.n_noise_items >= 0, "n_noise_items must be >= 0"),
            (0.0 <= self.missing_rate < 1.0, "missing_rate must be in [0, 1)"),
            (1 <= lo <= hi, "events_per_patient_item must be a range of positive integers"),
            (0 <= self.seed < 2**64, "seed must be a 64-bit unsigned integer"),
            (0.0 <= self.shifted_dob_fraction < 1.0, "shifted_dob_fraction must be in [0, 1)"),
            (0.0 <= self.text_value_rate < 1.0, "text_value_rate must be in [0, 1)"),
            (0.0 <= self.earlier_sepsis_fraction <= 1.0, "earlier_sepsis_fraction must be in [0, 1]"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)


@dataclass
class SynthManifest:
    """Ground truth of a generated dataset"""

    files: dict
    informative_items: list
    noise_items: list
    patients: list
    config: dict
    root: str = field(default="", compare=False)

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("root")
        return data

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "SynthManifest":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return cls(root=str(Path(path).parent), **data)


@dataclass(frozen=True)
class SynthSummary:
    n_patients: int
    n_admissions: int
    n_sepsis_patients: int
    n_sepsis_admissions: int
    n_deaths: int
    n_sepsis_deaths: int


def _seconds(days: float) -> timedelta:
    return timedelta(seconds=int(math.ceil(days * 86400.0)))


def _sepsis_code(rng: np.random.Generator) -> str:
    code = SEPSIS_ICD9_CODES[int(rng.integers(len(SEPSIS_ICD9_CODES)))]
    if rng.random() < 0.1:
        return f"{code[:3]}.{code[3:]}"
    return code


def _draw_patients(cfg: SynthConfig, rng: np.random.Generator):
    n = cfg.n_patients
    n_sepsis = math.ceil(n * cfg.sepsis_fraction) if n else 0
    sepsis = np.zeros(n, dtype=bool)
    sepsis[rng.permutation(n)[:n_sepsis]] = True

    patients, admissions, diagnoses, truth = [], [], [], []
    hadm_id = 100000
    for i in range(n):
        subject_id = i + 1
        gender = "M" if rng.random() < 0.55 else "F"
        ethnicity = ETHNICITIES[int(rng.choice(len(ETHNICITIES), p=ETHNICITY_WEIGHTS))]
        n_adm = int(rng.geometric(0.5))
        deceased = bool(rng.random() < cfg.mortality_rate)

        admittime = EPOCH + _seconds(float(rng.uniform(0.0, 365.25 * 90)))
        times = [admittime]
        for _ in range(n_adm - 1):
            times.append(times[-1] + _seconds(float(rng.uniform(30.0, 700.0))))
        latest = times[-1]

        age = float(rng.uniform(18.0, 90.0))
        dob = latest - _seconds(age * 365.25)
        if rng.random() < cfg.shifted_dob_fraction:
            dob = dob - _seconds(DOB_SHIFT_YEARS * 365.25)
        dod = latest + _seconds(float(rng.uniform(1.0, 30.0))) if deceased else None
        patients.append(tables.PatientRow(subject_id, gender, dob, dod))

        hadm_ids = []
        for k, t in enumerate(times):
            hadm_id += 1
            hadm_ids.append(hadm_id)
            is_latest = k == n_adm - 1
            admissions.append(tables.AdmissionRow(subject_id, hadm_id, t, ethnicity, deceased and is_latest))
            for j in rng.choice(len(OTHER_ICD9_CODES), size=int(rng.integers(1, 4)), replace=False):
                diagnoses.append((subject_id, hadm_id, OTHER_ICD9_CODES[int(j)]))

        if sepsis[i]:
            diagnoses.append((subject_id, hadm_ids[-1], _sepsis_code(rng)))
        elif n_adm > 1 and rng.random() < cfg.earlier_sepsis_fraction:
            diagnoses.append((subject_id, hadm_ids[int(rng.integers(n_adm - 1))], _sepsis_code(rng)))

        truth.append({"subject_id": subject_id, "label": int(deceased), "sepsis": bool(sepsis[i]),
                      "n_admissions": n_adm, "hadm_ids": hadm_ids, "admittimes": times})
    return patients, admissions, diagnoses, truth


def _draw_events(cfg: SynthConfig, truth: list, itemids: np.ndarray, informative: np.ndarray,
                 rng: np.random.Generator) -> dict:
    """Event columns per table; item k lives in LABEVENTS when k is odd"""
    n_items = len(itemids)
    loc = rng.uniform(1.0, 150.0, n_items)
    scale = rng.uniform(0.5, 15.0, n_items)
    in_lab = (np.arange(n_items) % 2) == 1
    lo, hi = cfg.events_per_patient_item
    columns = {name: {"SUBJECT_ID": [], "HADM_ID": [], "ITEMID": [], "CHARTTIME": [], "VALUENUM": []}
               for name in ("CHARTEVENTS", "LABEVENTS")}

    for patient in truth:
        y = patient["label"]
        sign = np.ones(n_items)
        if cfg.nonlinear:
            sign = np.where(rng.random(n_items) < 0.5, -1.0, 1.0)
        shift = np.where(informative, cfg.signal_strength * y * sign, 0.0)
        for hadm_id, admittime in zip(patient["hadm_ids"], patient["admittimes"]):
            observed = rng.random(n_items) >= cfg.missing_rate
            counts = np.where(observed, rng.integers(lo, hi + 1, n_items), 0)
            item_idx = np.repeat(np.arange(n_items), counts)
            if item_idx.size == 0:
                continue
            z = rng.normal(shift[item_idx], 1.0)
            values = np.round(loc[item_idx] + scale[item_idx] * z, 4)
            text = rng.random(item_idx.size) < cfg.text_value_rate
            hours = rng.uniform(0.0, 240.0, item_idx.size)
            for k, v, is_text, h in zip(item_idx, values, text, hours):
                table = columns["LABEVENTS" if in_lab[k] else "CHARTEVENTS"]
                table["SUBJECT_ID"].append(patient["subject_id"])
                table["HADM_ID"].append(hadm_id)
                table["ITEMID"].append(int(itemids[k]))
                table["CHARTTIME"].append((admittime + timedelta(seconds=int(h * 3600))).strftime(tables.DATETIME_FORMAT))
                table["VALUENUM"].append("" if is_text else repr(float(v)))
    return columns


def generate_dataset(cfg: SynthConfig, out_dir) -> SynthManifest:
    """
    Write the five tables, item_names.csv and manifest.json

    Args:
        cfg: Generator configuration; identical cfg gives byte-identical files
        out_dir: Target directory, created if needed

    Returns:
        Manifest with file names, ground-truth item labels and per-patient outcomes
    """
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    patient_seq, item_seq, event_seq = np.random.SeedSequence(cfg.seed).spawn(3)
    patients, admissions, diagnoses, truth = _draw_patients(cfg, np.random.default_rng(patient_seq))

    item_rng = np.random.default_rng(item_seq)
    n_items = cfg.n_informative_items + cfg.n_noise_items
    itemids = FIRST_ITEMID + np.arange(n_items)
    informative = np.zeros(n_items, dtype=bool)
    informative[item_rng.permutation(n_items)[:cfg.n_informative_items]] = True
    events = _draw_events(cfg, truth, itemids, informative, np.random.default_rng(event_seq))

    tables.write_table(patients, out / tables.PATIENTS.filename, tables.PATIENTS)
    tables.write_table(admissions, out / tables.ADMISSIONS.filename, tables.ADMISSIONS)
    pd.DataFrame(diagnoses, columns=tables.DIAGNOSES_ICD.required).to_csv(
        out / tables.DIAGNOSES_ICD.filename, index=False, encoding="utf-8", lineterminator="\n")
    for schema in tables.EVENT_TABLES:
        pd.DataFrame(events[schema.name], columns=schema.required).to_csv(
            out / schema.filename, index=False, encoding="utf-8", lineterminator="\n")
    tables.write_item_names({int(i): f"Indicator {k + 1:03d}" for k, i in enumerate(itemids)}, out / ITEM_NAMES_FILE)

    config = asdict(cfg)
    config["events_per_patient_item"] = list(cfg.events_per_patient_item)
    manifest = SynthManifest(
        files={schema.name: schema.filename for schema in tables.ALL_TABLES} | {"ITEM_NAMES": ITEM_NAMES_FILE},
        informative_items=[int(i) for i in itemids[informative]],
        noise_items=[int(i) for i in itemids[~informative]],
        patients=[{k: p[k] for k in ("subject_id", "label", "sepsis", "n_admissions")} for p in truth],
        config=config,
        root=str(out),
    )
    manifest.save(out / MANIFEST_FILE)
    logger.info("generated %d patients (%d admissions, %d chart + %d lab events) in %s",
                len(patients), len(admissions), len(events["CHARTEVENTS"]["ITEMID"]),
                len(events["LABEVENTS"]["ITEMID"]), out)
    return manifest


def manifest_summary(manifest: SynthManifest) -> SynthSummary:
    """Cohort-level counts straight from the ground truth"""
    rows = manifest.patients
    sepsis = [p for p in rows if p["sepsis"]]
    return SynthSummary(
        n_patients=len(rows),
        n_admissions=sum(p["n_admissions"] for p in rows),
        n_sepsis_patients=len(sepsis),
        n_sepsis_admissions=sum(p["n_admissions"] for p in sepsis),
        n_deaths=sum(p["label"] for p in rows),
        n_sepsis_deaths=sum(p["label"] for p in sepsis),
    )
