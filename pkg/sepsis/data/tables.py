"""
Table Ingestion Module
Parses and validates the MIMIC-III shaped CSV tables and stream-filters event tables
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields
from datetime import datetime
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from ..errors import DataError, InputError, IntegrityError, RowError, SchemaError

logger = logging.getLogger(__name__)

KEY = "key"
DATE = "date"
NUMBER = "number"
TOKEN = "token"
FLAG = "flag"

DATETIME_FORMAT = "%Y-%m-%d %H:%M:%S"
DATE_FORMAT = "%Y-%m-%d"
STREAM_CHUNK_ROWS = 200_000

_TRUE_TOKENS = {"1", "true", "t", "y", "yes"}
_FALSE_TOKENS = {"0", "false", "f", "n", "no"}


@dataclass(frozen=True, slots=True)
class PatientRow:
    subject_id: int
    gender: str
    dob: datetime
    dod: Optional[datetime]


@dataclass(frozen=True, slots=True)
class AdmissionRow:
    subject_id: int
    hadm_id: int
    admittime: datetime
    ethnicity: str
    hospital_expire_flag: bool


@dataclass(frozen=True, slots=True)
class DiagnosisRow:
    subject_id: int
    hadm_id: int
    icd9_code: str


@dataclass(frozen=True, slots=True)
class EventRow:
    subject_id: int
    hadm_id: Optional[int]  # blank for outpatient lab rows
    itemid: int
    charttime: datetime
    valuenum: float


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    optional: bool = False


@dataclass(frozen=True)
class TableSchema:
    """Table name, ordered required columns and the row type they build"""

    name: str
    columns: tuple
    row_type: type
    unique_key: Optional[str] = None

    @property
    def required(self) -> list:
        return [c.name for c in self.columns]

    @property
    def filename(self) -> str:
        return f"{self.name}.csv"


PATIENTS = TableSchema(
    "PATIENTS",
    (Column("SUBJECT_ID", KEY), Column("GENDER", TOKEN), Column("DOB", DATE), Column("DOD", DATE, optional=True)),
    PatientRow,
    unique_key="SUBJECT_ID",
)
ADMISSIONS = TableSchema(
    "ADMISSIONS",
    (
        Column("SUBJECT_ID", KEY),
        Column("HADM_ID", KEY),
        Column("ADMITTIME", DATE),
        Column("ETHNICITY", TOKEN),
        Column("HOSPITAL_EXPIRE_FLAG", FLAG),
    ),
    AdmissionRow,
    unique_key="HADM_ID",
)
DIAGNOSES_ICD = TableSchema(
    "DIAGNOSES_ICD",
    (Column("SUBJECT_ID", KEY), Column("HADM_ID", KEY), Column("ICD9_CODE", TOKEN)),
    DiagnosisRow,
)
_EVENT_COLUMNS = (
    Column("SUBJECT_ID", KEY),
    Column("HADM_ID", KEY, optional=True),
    Column("ITEMID", KEY),
    Column("CHARTTIME", DATE),
    Column("VALUENUM", NUMBER, optional=True),
)
CHARTEVENTS = TableSchema("CHARTEVENTS", _EVENT_COLUMNS, EventRow)
LABEVENTS = TableSchema("LABEVENTS", _EVENT_COLUMNS, EventRow)

ALL_TABLES = (PATIENTS, ADMISSIONS, DIAGNOSES_ICD, CHARTEVENTS, LABEVENTS)
EVENT_TABLES = (CHARTEVENTS, LABEVENTS)


def normalize_icd9(code: str) -> str:
    """`995.91` and `99591` both become `99591`"""
    return code.strip().replace(".", "").upper()


def table_path(data_dir, schema: TableSchema) -> Path:
    """Path of a table inside a data directory; a gzipped export is accepted too"""
    base = Path(data_dir) / schema.filename
    gz = base.with_name(base.name + ".gz")
    if not base.exists() and gz.exists():
        return gz
    return base


def _read_header(path, schema: TableSchema) -> list:
    try:
        header = pd.read_csv(path, nrows=0, dtype=str, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise DataError(f"{path}: first line must be a header") from e
    columns = [str(c).strip().upper() for c in header.columns]
    for name in schema.required:
        if name not in columns:
            raise SchemaError(name, schema.name)
    return columns


def check_header(path, schema: TableSchema) -> list:
    """Validate that a file's header contains the schema's required columns"""
    return _read_header(path, schema)


def _parse_datetime_cell(cell: str) -> Optional[datetime]:
    for fmt in (DATETIME_FORMAT, DATE_FORMAT):
        try:
            return datetime.strptime(cell, fmt)
        except ValueError:
            continue
    return None


def _parse_dates(raw: pd.Series, column: Column, path, line_offset: int) -> list:
    """Vectorized parse with a per-cell fallback for timestamps outside pandas' range"""
    text = raw.str.strip()
    full = pd.to_datetime(text, format=DATETIME_FORMAT, errors="coerce")
    day = pd.to_datetime(text, format=DATE_FORMAT, errors="coerce")
    parsed = full.fillna(day)
    ok = parsed.notna().to_numpy()
    values = list(parsed.dt.to_pydatetime()) if len(parsed) else []
    cells = text.to_numpy(dtype=object)
    for i in np.flatnonzero(~ok):
        cell = cells[i]
        if not cell:
            if column.optional:
                values[i] = None
                continue
            raise RowError(line_offset + int(i), column.name, cell, str(path))
        value = _parse_datetime_cell(cell)
        if value is None:
            raise RowError(line_offset + int(i), column.name, cell, str(path))
        values[i] = value
    return values


def _parse_keys(raw: pd.Series, column: Column, path, line_offset: int) -> list:
    cells = raw.str.strip()
    blank = (cells == "").to_numpy() if column.optional else np.zeros(len(cells), dtype=bool)
    numbers = pd.to_numeric(cells, errors="coerce")
    values = numbers.to_numpy(dtype=float)
    bad = ~blank & (np.isnan(values) | (np.nan_to_num(values) % 1 != 0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise RowError(line_offset + i, column.name, raw.iloc[i], str(path))
    if not blank.any():
        return values.astype(np.int64).tolist()
    return [None if b else int(v) for b, v in zip(blank, values)]


def _parse_flags(raw: pd.Series, column: Column, path, line_offset: int) -> list:
    out = []
    for i, cell in enumerate(raw.str.strip().str.lower()):
        if cell in _TRUE_TOKENS:
            out.append(True)
        elif cell in _FALSE_TOKENS:
            out.append(False)
        else:
            raise RowError(line_offset + i, column.name, cell, str(path))
    return out


def _parse_numbers(raw: pd.Series) -> list:
    numbers = pd.to_numeric(raw.str.strip(), errors="coerce")
    return [None if np.isnan(v) else float(v) for v in numbers.to_numpy(dtype=float)]


def _convert(frame: pd.DataFrame, schema: TableSchema, path, line_offset: int) -> list:
    """Convert a string-typed frame into typed rows; `line_offset` is the file line of frame row 0"""
    if frame.empty:
        return []
    converted = []
    for column in schema.columns:
        raw = frame[column.name].astype(str)
        if column.kind == KEY:
            converted.append(_parse_keys(raw, column, path, line_offset))
        elif column.kind == DATE:
            converted.append(_parse_dates(raw, column, path, line_offset))
        elif column.kind == NUMBER:
            converted.append(_parse_numbers(raw))
        elif column.kind == FLAG:
            converted.append(_parse_flags(raw, column, path, line_offset))
        else:
            converted.append(raw.str.strip().tolist())
    return [schema.row_type(*values) for values in zip(*converted)]


def _normalized(frame: pd.DataFrame) -> pd.DataFrame:
    frame.columns = [str(c).strip().upper() for c in frame.columns]
    return frame


def _finish(rows: list, schema: TableSchema, path) -> list:
    """Enforce per-table row invariants"""
    if schema.row_type is EventRow:
        return [r for r in rows if r.valuenum is not None]
    if schema.row_type is DiagnosisRow:
        kept = [DiagnosisRow(r.subject_id, r.hadm_id, normalize_icd9(r.icd9_code)) for r in rows if r.icd9_code.strip()]
        if len(kept) < len(rows):
            logger.warning("%s: dropped %d diagnosis rows with an empty ICD9_CODE", path, len(rows) - len(kept))
        return kept
    if schema.unique_key:
        attr = schema.unique_key.lower()
        seen = set()
        for line, row in enumerate(rows, start=2):
            key = getattr(row, attr)
            if key in seen:
                raise IntegrityError(f"{path}:{line}: duplicate {schema.unique_key} {key}")
            seen.add(key)
    return rows


def read_table(path, schema: TableSchema) -> list:
    """
    Read a whole table into typed rows

    Args:
        path: CSV file with a header line (comma separated, double-quote quoting, UTF-8)
        schema: Table schema; header names match case-insensitively

    Returns:
        List of typed rows in file order. Unparseable numbers become missing values
    """
    _read_header(path, schema)
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8")
    frame = _normalized(frame)
    rows = _convert(frame, schema, path, line_offset=2)
    return _finish(rows, schema, path)


def stream_events(path, keep_subjects: Iterable[int], schema: TableSchema = CHARTEVENTS,
                  chunk_rows: int = STREAM_CHUNK_ROWS) -> list:
    """
    Stream an event table chunk by chunk, keeping rows of the target subjects only

    Args:
        path: CHARTEVENTS / LABEVENTS shaped CSV
        keep_subjects: Non-empty set of subject ids to keep
        schema: Event table schema
        chunk_rows: Rows held in memory at a time besides the output

    Returns:
        EventRows with subject_id in keep_subjects and a numeric VALUENUM, in file order
    """
    keep = {int(s) for s in keep_subjects}
    if not keep:
        raise InputError("keep_subjects must be non-empty")
    _read_header(path, schema)
    keep_index = pd.Index(sorted(keep))
    out = []
    n_seen = 0
    reader = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False,
                         encoding="utf-8", chunksize=chunk_rows)
    line_offset = 2
    for chunk in reader:
        chunk = _normalized(chunk)
        n_seen += len(chunk)
        subjects = pd.to_numeric(chunk["SUBJECT_ID"].str.strip(), errors="coerce")
        values = pd.to_numeric(chunk["VALUENUM"].str.strip(), errors="coerce")
        mask = subjects.isin(keep_index) & values.notna()
        positions = np.flatnonzero(mask.to_numpy())
        for start, stop in _runs(positions):
            part = chunk.iloc[start:stop]
            out.extend(_convert(part, schema, path, line_offset + start))
        line_offset += len(chunk)
    logger.info("%s: kept %d of %d event rows for %d subjects", Path(path).name, len(out), n_seen, len(keep))
    return out


def _runs(positions: np.ndarray):
    """Contiguous [start, stop) runs of sorted positions, so line numbers stay exact"""
    if positions.size == 0:
        return
    breaks = np.flatnonzero(np.diff(positions) != 1)
    starts = np.concatenate(([positions[0]], positions[breaks + 1]))
    stops = np.concatenate((positions[breaks] + 1, [positions[-1] + 1]))
    for start, stop in zip(starts, stops):
        yield int(start), int(stop)


def _format_cell(value, kind: str) -> str:
    if value is None:
        return ""
    if kind == DATE:
        return value.strftime(DATETIME_FORMAT)
    if kind == FLAG:
        return "1" if value else "0"
    if kind == NUMBER:
        return repr(float(value))
    return str(value)


def write_table(rows: Sequence, path, schema: TableSchema):
    """Write typed rows with the canonical header; read_table of the result returns equal rows"""
    names = [f.name for f in fields(schema.row_type)]
    data = {
        column.name: [_format_cell(getattr(row, attr), column.kind) for row in rows]
        for column, attr in zip(schema.columns, names)
    }
    frame = pd.DataFrame(data, columns=schema.required)
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def read_item_names(path) -> dict:
    """itemid -> display name from a two-column ITEMID,LABEL file"""
    frame = _normalized(pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8"))
    for name in ("ITEMID", "LABEL"):
        if name not in frame.columns:
            raise SchemaError(name, "item_names")
    return {int(i): label.strip() for i, label in zip(frame["ITEMID"], frame["LABEL"]) if label.strip()}


def write_item_names(names: dict, path):
    frame = pd.DataFrame({"ITEMID": sorted(names), "LABEL": [names[i] for i in sorted(names)]})
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
