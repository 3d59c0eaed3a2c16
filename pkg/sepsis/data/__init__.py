"""
Data package: table ingestion, synthetic dataset generation and cohort extraction
"""

from .cohort import (
    CohortRecord,
    cohort_counts,
    compute_age,
    label_mortality,
    read_cohort,
    select_cohort,
    write_cohort,
)
from .synthgen import SynthConfig, SynthManifest, SynthSummary, generate_dataset, manifest_summary
from .tables import (
    ADMISSIONS,
    ALL_TABLES,
    CHARTEVENTS,
    DIAGNOSES_ICD,
    EVENT_TABLES,
    LABEVENTS,
    PATIENTS,
    AdmissionRow,
    DiagnosisRow,
    EventRow,
    PatientRow,
    TableSchema,
    read_item_names,
    read_table,
    stream_events,
    write_table,
)

__all__ = [
    "ADMISSIONS", "ALL_TABLES", "CHARTEVENTS", "DIAGNOSES_ICD", "EVENT_TABLES", "LABEVENTS", "PATIENTS",
    "AdmissionRow", "DiagnosisRow", "EventRow", "PatientRow", "TableSchema",
    "read_table", "stream_events", "write_table", "read_item_names",
    "SynthConfig", "SynthManifest", "SynthSummary", "generate_dataset", "manifest_summary",
    "CohortRecord", "compute_age", "select_cohort", "label_mortality", "cohort_counts",
    "read_cohort", "write_cohort",
]
