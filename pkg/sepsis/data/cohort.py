"""
Cohort Builder Module
Applies the adult / sepsis-coded / latest-admission inclusion rules and labels in-hospital death
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Optional

import pandas as pd

from ..config import MAX_PLAUSIBLE_AGE, MIN_AGE_YEARS, SEPSIS_ICD9_CODES, SHIFTED_AGE_YEARS
from ..errors import InputError, IntegrityError, SchemaError
from .tables import AdmissionRow, DiagnosisRow, PatientRow, normalize_icd9

logger = logging.getLogger(__name__)

COHORT_COLUMNS = ["SUBJECT_ID", "AGE", "GENDER", "ETHNICITY", "LATEST_HADM_ID", "LABEL", "N_ADMISSIONS"]
DAYS_PER_YEAR = 365.25


@dataclass(frozen=True)
class CohortRecord:
    subject_id: int
    age_years: float
    gender: str
    ethnicity: str
    latest_hadm_id: int
    label: bool
    n_admissions: int = 1


def compute_age(dob: datetime, admittime: Optional[datetime] = None, dod: Optional[datetime] = None) -> float:
    """
    Age in years at admission, falling back to the date of death

    Ages above MAX_PLAUSIBLE_AGE come from shifted birth dates and are reported as SHIFTED_AGE_YEARS.
    """
    reference = admittime if admittime is not None else dod
    if reference is None:
        raise InputError("age needs an admission time or a date of death")
    if reference < dob:
        raise InputError(f"reference date {reference} is earlier than date of birth {dob}")
    age = (reference - dob).total_seconds() / 86400.0 / DAYS_PER_YEAR
    if age > MAX_PLAUSIBLE_AGE:
        return SHIFTED_AGE_YEARS
    return age


def latest_admission(admissions: Iterable[AdmissionRow]) -> AdmissionRow:
    """Most recent admission; identical admittimes resolve to the larger hadm_id"""
    return max(admissions, key=lambda a: (a.admittime, a.hadm_id))


def _group_admissions(patients: list, admissions: list) -> dict:
    known = {p.subject_id for p in patients}
    by_subject: dict = {}
    for adm in admissions:
        if adm.subject_id not in known:
            raise IntegrityError(f"admission {adm.hadm_id} references unknown subject {adm.subject_id}")
        by_subject.setdefault(adm.subject_id, []).append(adm)
    return by_subject


def select_cohort(patients: list, admissions: list, diagnoses: list, inclusion_scope: str = "latest") -> list:
    """
    Build one CohortRecord per adult patient with a sepsis code

    Args:
        patients: PatientRow list
        admissions: AdmissionRow list
        diagnoses: DiagnosisRow list; codes with or without the dot are accepted
        inclusion_scope: "latest" looks at the most recent admission only, "any" at every admission

    Returns:
        Records sorted by subject_id
    """
    if inclusion_scope not in ("latest", "any"):
        raise InputError(f"unknown inclusion_scope {inclusion_scope!r}")
    sepsis_codes = set(SEPSIS_ICD9_CODES)
    coded_admissions = {d.hadm_id for d in diagnoses if normalize_icd9(d.icd9_code) in sepsis_codes}
    by_subject = _group_admissions(patients, admissions)

    records = []
    n_minors = 0
    for patient in sorted(patients, key=lambda p: p.subject_id):
        stays = by_subject.get(patient.subject_id)
        if not stays:
            continue
        latest = latest_admission(stays)
        if inclusion_scope == "latest":
            coded = latest.hadm_id in coded_admissions
        else:
            coded = any(a.hadm_id in coded_admissions for a in stays)
        if not coded:
            continue
        age = compute_age(patient.dob, latest.admittime, patient.dod)
        if age < MIN_AGE_YEARS:
            n_minors += 1
            continue
        records.append(CohortRecord(
            subject_id=patient.subject_id,
            age_years=age,
            gender=patient.gender,
            ethnicity=latest.ethnicity,
            latest_hadm_id=latest.hadm_id,
            label=latest.hospital_expire_flag,
            n_admissions=len(stays),
        ))
    logger.info("cohort: %d patients selected (scope=%s, %d under %.0f excluded)",
                len(records), inclusion_scope, n_minors, MIN_AGE_YEARS)
    return records


def label_mortality(record: CohortRecord, admissions) -> bool:
    """HOSPITAL_EXPIRE_FLAG of the record's latest admission"""
    for adm in admissions:
        if adm.hadm_id == record.latest_hadm_id:
            return bool(adm.hospital_expire_flag)
    raise IntegrityError(f"subject {record.subject_id}: admission {record.latest_hadm_id} not found")


def cohort_counts(cohort: list) -> tuple:
    """(patients, admissions covered, deaths)"""
    return (
        len(cohort),
        sum(r.n_admissions for r in cohort),
        sum(1 for r in cohort if r.label),
    )


def write_cohort(cohort: list, path):
    frame = pd.DataFrame({
        "SUBJECT_ID": [r.subject_id for r in cohort],
        "AGE": [format(r.age_years, ".17g") for r in cohort],
        "GENDER": [r.gender for r in cohort],
        "ETHNICITY": [r.ethnicity for r in cohort],
        "LATEST_HADM_ID": [r.latest_hadm_id for r in cohort],
        "LABEL": [int(r.label) for r in cohort],
        "N_ADMISSIONS": [r.n_admissions for r in cohort],
    }, columns=COHORT_COLUMNS)
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def read_cohort(path) -> list:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    for name in COHORT_COLUMNS[:-1]:
        if name not in frame.columns:
            raise SchemaError(name, "cohort")
    n_adm = frame["N_ADMISSIONS"] if "N_ADMISSIONS" in frame.columns else pd.Series(["1"] * len(frame))
    return [
        CohortRecord(int(s), float(a), g, e, int(h), l.strip() == "1", int(n))
        for s, a, g, e, h, l, n in zip(frame["SUBJECT_ID"], frame["AGE"], frame["GENDER"], frame["ETHNICITY"],
                                      frame["LATEST_HADM_ID"], frame["LABEL"], n_adm)
    ]
