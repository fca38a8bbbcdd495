"""Domain model and flat-file I/O for the patients table.

The patients table has nine fields (``id`` plus eight text attributes).  A
:class:`Dataset` wraps a pandas frame that has been checked against that
schema; everything downstream (profiling, mechanisms, evaluation) reads
columns out of it and never mutates it.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence, Union

import numpy as np
import pandas as pd

from .errors import FieldKindError, ParameterError, RowParseError, SchemaMismatch, WriteError

PathLike = Union[str, Path]

DEFAULT_REFERENCE_DATE = dt.date(2025, 1, 1)
SENSITIVE_DIAGNOSIS = "Z33.2"


class FieldKind(str, enum.Enum):
    INTEGER = "integer"
    TEXT = "text"
    CATEGORICAL = "categorical"
    DATE = "date"
    NUMERIC_DERIVED = "numeric-derived"


class SensitivityClass(str, enum.Enum):
    MODERATE = "Moderate"
    SEVERE = "Severe"
    CRITICAL = "Critical"


@dataclass(frozen=True)
class FieldSchema:
    name: str
    kind: FieldKind
    sensitivity_class: SensitivityClass


PATIENT_SCHEMA: tuple[FieldSchema, ...] = (
    FieldSchema("id", FieldKind.INTEGER, SensitivityClass.MODERATE),
    FieldSchema("Name", FieldKind.TEXT, SensitivityClass.MODERATE),
    FieldSchema("Email", FieldKind.TEXT, SensitivityClass.MODERATE),
    FieldSchema("DateOfBirth", FieldKind.DATE, SensitivityClass.SEVERE),
    FieldSchema("MedicareNumber", FieldKind.TEXT, SensitivityClass.SEVERE),
    FieldSchema("DiagnosisCode", FieldKind.CATEGORICAL, SensitivityClass.CRITICAL),
    FieldSchema("TreatmentType", FieldKind.CATEGORICAL, SensitivityClass.SEVERE),
    FieldSchema("Address", FieldKind.TEXT, SensitivityClass.SEVERE),
    FieldSchema("Phone", FieldKind.TEXT, SensitivityClass.MODERATE),
)
FIELD_NAMES: tuple[str, ...] = tuple(f.name for f in PATIENT_SCHEMA)
# Derived from DateOfBirth; never stored on disk.
AGE_FIELD = FieldSchema("Age", FieldKind.NUMERIC_DERIVED, SensitivityClass.SEVERE)

_SCHEMA_BY_NAME = {f.name: f for f in PATIENT_SCHEMA}


def field_schema(name: str) -> FieldSchema:
    """Look up a schema entry, including the derived ``Age`` field."""
    if name == AGE_FIELD.name:
        return AGE_FIELD
    try:
        return _SCHEMA_BY_NAME[name]
    except KeyError:
        raise SchemaMismatch(f"unknown field {name!r}") from None


# ---------------------------------------------------------------------------
# Privacy budget and randomness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) pair.

    ``epsilon`` may be ``math.inf`` to denote a noiseless reference release.
    """

    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if not (0.0 <= self.delta < 1.0):
            raise ParameterError(f"delta must lie in [0, 1), got {self.delta}")

    def delta_ok_for(self, n: int) -> bool:
        """True when delta < 1/n, the usual rule for a dataset of size n."""
        return n <= 0 or self.delta < 1.0 / n


def _label_key(label: str) -> int:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class RandomSource:
    """Seeded, splittable random stream backed by numpy's Philox generator.

    ``child(label)`` derives an independent stream from the parent seed and
    the label path, so a mechanism's draws do not depend on which other
    mechanisms ran before it.  A source is single-owner: split it rather than
    sharing one instance across threads.
    """

    def __init__(self, seed: int, _path: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._path = _path
        seq = np.random.SeedSequence(seed, spawn_key=_path)
        self.generator = np.random.Generator(np.random.Philox(seq))

    def child(self, label: str) -> "RandomSource":
        return RandomSource(self.seed, self._path + (_label_key(label),))

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, depth={len(self._path)})"

    # thin forwarding helpers; callers needing more use ``generator`` directly
    def laplace(self, scale: float, size=None):
        return self.generator.laplace(0.0, scale, size=size)

    def normal(self, sigma: float, size=None):
        return self.generator.normal(0.0, sigma, size=size)

    def uniform(self, size=None):
        return self.generator.random(size=size)

    def integers(self, low: int, high: int, size=None):
        return self.generator.integers(low, high, size=size)


def as_source(rng: Union[RandomSource, int, None]) -> RandomSource:
    """Coerce an int seed (or None, meaning fresh OS entropy) to a RandomSource."""
    if isinstance(rng, RandomSource):
        return rng
    if rng is None:
        return RandomSource(int(np.random.SeedSequence().entropy) % 2**64)
    return RandomSource(int(rng))


# ---------------------------------------------------------------------------
# Releases
# ---------------------------------------------------------------------------


class Mechanism(str, enum.Enum):
    LAPLACE = "Laplace"
    GAUSSIAN = "Gaussian"
    EXPONENTIAL = "Exponential"
    RANDOMIZED_RESPONSE = "RandomizedResponse"
    HISTOGRAM = "Histogram"
    SPARSE_VECTOR = "SparseVector"
    LAPLACE_MEAN = "LaplaceMean"
    CLIPPED_LAPLACE_MEAN = "ClippedLaplaceMean"
    SMOOTH_SENSITIVITY_MEAN = "SmoothSensitivityMean"


@dataclass(frozen=True)
class NoisyRelease:
    """Output of one mechanism invocation together with the budget it used.

    The payload is plain JSON-compatible data: a label->count dict, a float,
    ``{"selected", "probabilities"}``, a list of bits, or
    ``{"answers", "budget_used"}`` depending on the mechanism.
    """

    mechanism: Mechanism
    payload: Any
    budget_spent: PrivacyBudget
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "mechanism": self.mechanism.value,
            "epsilon": self.budget_spent.epsilon,
            "delta": self.budget_spent.delta,
            "payload": self.payload,
        }
        if self.metadata:
            out["metadata"] = dict(self.metadata)
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "NoisyRelease":
        return cls(
            mechanism=Mechanism(data["mechanism"]),
            payload=data["payload"],
            budget_spent=PrivacyBudget(float(data["epsilon"]), float(data.get("delta", 0.0))),
            metadata=dict(data.get("metadata", {})),
        )


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------


def parse_date(text: str) -> dt.date:
    """Parse ISO ``YYYY-MM-DD`` or the slash style ``YYYY/M/D``."""
    text = text.strip()
    for fmt in ("%Y-%m-%d", "%Y/%m/%d"):
        try:
            return dt.datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise ValueError(f"unparseable date {text!r}")


def _normalise_frame(frame: pd.DataFrame) -> pd.DataFrame:
    frame = frame.reset_index(drop=True)
    out = {"id": frame["id"].astype("int64")}
    for name in FIELD_NAMES[1:]:
        out[name] = frame[name].astype(object).map(str)
    return pd.DataFrame(out, columns=list(FIELD_NAMES))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table of patient records.

    The underlying frame is treated as read-only; use :meth:`column` to get
    a copy of a column as a numpy array.
    """

    frame: pd.DataFrame

    def __post_init__(self):
        frame = self.frame
        missing = [c for c in FIELD_NAMES if c not in frame.columns]
        extra = [c for c in frame.columns if c not in FIELD_NAMES]
        if missing or extra:
            raise SchemaMismatch(f"missing columns {missing}, unexpected columns {extra}")
        if frame.isna().any().any():
            row = int(np.flatnonzero(frame.isna().any(axis=1).to_numpy())[0])
            raise RowParseError(row, "missing value")
        ids = frame["id"].to_numpy()
        expected = np.arange(1, len(frame) + 1)
        if len(ids) and not np.array_equal(ids.astype(np.int64), expected):
            row = int(np.flatnonzero(ids.astype(np.int64) != expected)[0])
            raise RowParseError(row, f"id must equal {row + 1}, got {ids[row]}")
        object.__setattr__(self, "frame", _normalise_frame(frame))

    @classmethod
    def from_records(cls, records: Iterable[Mapping[str, Any]]) -> "Dataset":
        rows = list(records)
        if not rows:
            return cls.empty()
        return cls(pd.DataFrame(rows))

    @classmethod
    def empty(cls) -> "Dataset":
        return cls(pd.DataFrame({name: pd.Series([], dtype=object) for name in FIELD_NAMES}).astype({"id": "int64"}))

    @property
    def schema(self) -> tuple[FieldSchema, ...]:
        return PATIENT_SCHEMA

    @property
    def size(self) -> int:
        return len(self.frame)

    def __len__(self):
        return self.size

    def column(self, name: str) -> np.ndarray:
        if name not in FIELD_NAMES:
            raise SchemaMismatch(f"unknown field {name!r}")
        return self.frame[name].to_numpy(copy=True)

    def records(self) -> list[dict]:
        return [
            {k: (int(v) if k == "id" else v) for k, v in row.items()}
            for row in self.frame.to_dict(orient="records")
        ]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.frame.equals(other.frame)

    def __hash__(self):
        return id(self)


def _rows_to_dataset(header: Sequence[str], rows: Iterable[Sequence[str]]) -> Dataset:
    index = {name: header.index(name) for name in FIELD_NAMES}
    columns: dict[str, list] = {name: [] for name in FIELD_NAMES}
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise RowParseError(i, f"expected {len(header)} values, got {len(row)}")
        try:
            ident = int(row[index["id"]])
        except (TypeError, ValueError):
            raise RowParseError(i, f"id {row[index['id']]!r} is not an integer") from None
        if ident != i + 1:
            raise RowParseError(i, f"id must equal {i + 1}, got {ident}")
        try:
            dob = parse_date(str(row[index["DateOfBirth"]])).isoformat()
        except ValueError as exc:
            raise RowParseError(i, str(exc)) from None
        medicare = str(row[index["MedicareNumber"]])
        if not medicare.isdigit():
            raise RowParseError(i, f"MedicareNumber {medicare!r} is not a digit string")
        columns["id"].append(ident)
        columns["DateOfBirth"].append(dob)
        columns["MedicareNumber"].append(medicare)
        for name in ("Name", "Email", "DiagnosisCode", "TreatmentType", "Address", "Phone"):
            columns[name].append(str(row[index[name]]))
    if not columns["id"]:
        return Dataset.empty()
    return Dataset(pd.DataFrame(columns))


def _check_header(header: Sequence[str]) -> None:
    missing = [c for c in FIELD_NAMES if c not in header]
    extra = [c for c in header if c not in FIELD_NAMES]
    if missing or extra or len(set(header)) != len(header):
        raise SchemaMismatch(f"header mismatch: missing {missing}, unexpected {extra}")


def load_dataset(path: PathLike, format: str = "csv") -> Dataset:
    """Read a patients table from CSV or JSON.

    Dates written as ``YYYY/M/D`` are normalised to ISO on load.

    Raises:
        SchemaMismatch: header (or JSON keys) differ from the patients schema.
        RowParseError: a row is malformed; ``err.row`` is its zero-based index.
    """
    path = Path(path)
    if format == "csv":
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise SchemaMismatch(f"{path} has no header row")
            _check_header(header)
            return _rows_to_dataset(header, reader)
    if format == "json":
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaMismatch(f"{path} is not valid JSON: {exc}") from None
        if not isinstance(data, list):
            raise SchemaMismatch(f"{path} must hold a JSON array of records")
        header = list(FIELD_NAMES)
        rows = []
        for i, obj in enumerate(data):
            if not isinstance(obj, dict):
                raise RowParseError(i, "record is not a JSON object")
            _check_header(list(obj))
            rows.append([obj[name] for name in header])
        return _rows_to_dataset(header, rows)
    raise ParameterError(f"unknown dataset format {format!r}")


def save_dataset(d: Dataset, path: PathLike, format: str = "csv") -> None:
    """Write ``d`` as CSV (header always present) or a JSON array of objects."""
    if format not in ("csv", "json"):
        raise ParameterError(f"unknown dataset format {format!r}")
    path = Path(path)
    try:
        if format == "csv":
            with path.open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(FIELD_NAMES)
                writer.writerows(d.frame.itertuples(index=False, name=None))
        else:
            with path.open("w", encoding="utf-8") as fh:
                json.dump(d.records(), fh, ensure_ascii=False, indent=1)
                fh.write("\n")
    except OSError as exc:
        raise WriteError(f"cannot write {path}: {exc}") from exc


def derive_age(d: Dataset, reference_date: dt.date = DEFAULT_REFERENCE_DATE) -> np.ndarray:
    """Completed years between each DateOfBirth and ``reference_date``."""
    raw = d.frame["DateOfBirth"]
    parsed = pd.to_datetime(raw, format="%Y-%m-%d", errors="coerce")
    if parsed.isna().any():
        fixed = []
        for i, text in enumerate(raw):
            try:
                fixed.append(parse_date(text))
            except ValueError as exc:
                raise RowParseError(i, str(exc)) from None
        parsed = pd.to_datetime(pd.Series(fixed, dtype=object))
    years = parsed.dt.year.to_numpy()
    months = parsed.dt.month.to_numpy()
    days = parsed.dt.day.to_numpy()
    before_birthday = (reference_date.month < months) | (
        (reference_date.month == months) & (reference_date.day < days)
    )
    return (reference_date.year - years - before_birthday).astype(np.int64)


def value_counts(d: Dataset, field_name: str) -> dict[str, int]:
    """Tally a categorical column; labels are returned in sorted order."""
    if field_schema(field_name).kind is not FieldKind.CATEGORICAL:
        raise FieldKindError(f"{field_name} is not categorical")
    return tally(d.frame[field_name])


def tally(values: Iterable) -> dict[str, int]:
    """Count occurrences of each distinct value, keyed by its string form."""
    arr = np.asarray(values, dtype=object).astype(str)
    labels, counts = np.unique(arr, return_counts=True)
    return {str(k): int(c) for k, c in zip(labels, counts)}


def default_delta(n: int) -> float:
    """1e-5 when that satisfies delta < 1/n, otherwise 1e-6."""
    return 1e-5 if n <= 0 or 1e-5 < 1.0 / n else 1e-6
