"""Shannon-entropy profiling and entropy-aware privacy budgeting.

Fields with higher entropy carry more identifying information, so they get
a smaller share of the total epsilon (more noise).  Shares are inversely
proportional to entropy and always add up to the total, matching sequential
composition.
"""

from __future__ import annotations

import enum
import math
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .core import Dataset, FieldKind, PrivacyBudget, SensitivityClass, field_schema, tally
from .errors import BudgetExhausted, DegenerateEntropyError, DistributionError, ParameterError

RiskLevel = SensitivityClass


class EntropyLevel(str, enum.Enum):
    MEDIUM = "Medium"
    HIGH = "High"
    VERY_HIGH = "VeryHigh"


_LEVEL_ORDER = [EntropyLevel.MEDIUM, EntropyLevel.HIGH, EntropyLevel.VERY_HIGH]
_RISK_FOR_LEVEL = {
    EntropyLevel.MEDIUM: RiskLevel.MODERATE,
    EntropyLevel.HIGH: RiskLevel.SEVERE,
    EntropyLevel.VERY_HIGH: RiskLevel.CRITICAL,
}
_LEVEL_CAP = {
    SensitivityClass.MODERATE: EntropyLevel.MEDIUM,
    SensitivityClass.SEVERE: EntropyLevel.HIGH,
    SensitivityClass.CRITICAL: EntropyLevel.VERY_HIGH,
}

HIGH_THRESHOLD_BITS = 3.5
VERY_HIGH_THRESHOLD_BITS = 4.5


@dataclass(frozen=True)
class Distribution:
    """Discrete distribution over string labels."""

    probabilities: Mapping[str, float]

    def __post_init__(self):
        probs = dict(self.probabilities)
        if not probs:
            raise DistributionError("distribution has empty support")
        values = np.fromiter(probs.values(), dtype=float, count=len(probs))
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DistributionError("probabilities must be finite and non-negative")
        if abs(math.fsum(values) - 1.0) > 1e-9:
            raise DistributionError(f"probabilities sum to {math.fsum(values)!r}, not 1")
        object.__setattr__(self, "probabilities", probs)

    @classmethod
    def from_counts(cls, counts: Mapping[str, float], floor: Optional[float] = None) -> "Distribution":
        """Normalise non-negative weights.

        With ``floor`` set, entries below it are raised to it first; this is
        how noisy counts (which may be negative) become a usable distribution.
        """
        labels = list(counts)
        w = np.array([float(counts[k]) for k in labels], dtype=float)
        if floor is not None:
            w = np.maximum(w, floor)
        if w.size == 0:
            raise DistributionError("cannot normalise an empty count map")
        if np.any(w < 0):
            raise DistributionError("counts must be non-negative")
        total = w.sum()
        if not total > 0:
            raise DistributionError("counts sum to zero")
        return cls(dict(zip(labels, (w / total).tolist())))

    @property
    def support(self) -> list[str]:
        return list(self.probabilities)

    def vector(self, labels: Sequence[str]) -> np.ndarray:
        return np.array([self.probabilities[k] for k in labels], dtype=float)


def shannon_entropy(dist: Distribution) -> float:
    """Entropy in bits, with 0 * log2(0) taken as 0."""
    if not isinstance(dist, Distribution):
        dist = Distribution(dist)
    p = np.fromiter(dist.probabilities.values(), dtype=float)
    p = p[p > 0]
    h = float(-np.sum(p * np.log2(p)))
    return min(max(h, 0.0), math.log2(len(dist.probabilities)))


def classify(entropy_bits: float, sensitivity: SensitivityClass) -> tuple[EntropyLevel, RiskLevel]:
    """Map an empirical entropy and a field's sensitivity class to (level, risk).

    The empirical level comes from fixed cut-offs (3.5 and 4.5 bits).  The
    field's sensitivity class then caps it, and a Critical field already at
    High is escalated to VeryHigh.
    """
    if entropy_bits >= VERY_HIGH_THRESHOLD_BITS:
        level = EntropyLevel.VERY_HIGH
    elif entropy_bits >= HIGH_THRESHOLD_BITS:
        level = EntropyLevel.HIGH
    else:
        level = EntropyLevel.MEDIUM
    cap = _LEVEL_CAP[sensitivity]
    level = min(level, cap, key=_LEVEL_ORDER.index)
    if sensitivity is SensitivityClass.CRITICAL and level is EntropyLevel.HIGH:
        level = EntropyLevel.VERY_HIGH
    return level, _RISK_FOR_LEVEL[level]


@dataclass(frozen=True)
class EntropyReport:
    field: str
    entropy_bits: float
    level: EntropyLevel
    risk: RiskLevel
    support_size: int
    note: Optional[str] = None

    def to_dict(self) -> dict:
        out = {
            "field": self.field,
            "entropy_bits": self.entropy_bits,
            "level": self.level.value,
            "risk": self.risk.value,
            "support_size": self.support_size,
        }
        if self.note:
            out["note"] = self.note
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "EntropyReport":
        return cls(
            field=data["field"],
            entropy_bits=float(data["entropy_bits"]),
            level=EntropyLevel(data["level"]),
            risk=RiskLevel(data["risk"]),
            support_size=int(data["support_size"]),
            note=data.get("note"),
        )


def profile_field(d: Dataset, field_name: str) -> EntropyReport:
    """Empirical entropy of one stored column plus its level and risk class.

    Free-text columns are accepted too; their empirical entropy is usually
    near log2(n), so the report carries a note that the risk class was capped
    by the field's schema sensitivity.
    """
    schema = field_schema(field_name)
    if schema.kind is FieldKind.NUMERIC_DERIVED:
        raise ParameterError(f"{field_name} is derived; profile a stored column")
    if d.size == 0:
        raise DistributionError("cannot profile an empty dataset")
    counts = tally(d.frame[field_name])
    h = shannon_entropy(Distribution.from_counts(counts))
    level, risk = classify(h, schema.sensitivity_class)
    note = None
    if schema.kind is not FieldKind.CATEGORICAL and d.size > 1:
        note = (
            f"{field_name} is free text: empirical entropy {h:.3f} bits reflects near-unique values; "
            f"level capped by its {schema.sensitivity_class.value} sensitivity class"
        )
    return EntropyReport(field_name, h, level, risk, len(counts), note)


@dataclass(frozen=True)
class BudgetAllocation:
    total_epsilon: float
    per_field: Mapping[str, float]
    excluded: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "total_epsilon": self.total_epsilon,
            "per_field": dict(self.per_field),
            "excluded": list(self.excluded),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "BudgetAllocation":
        return cls(float(data["total_epsilon"]), dict(data["per_field"]), tuple(data.get("excluded", ())))


def allocate_budget(reports: Iterable[EntropyReport], total: float) -> BudgetAllocation:
    """Split ``total`` epsilon across fields in proportion to 1/entropy.

    Zero-entropy (constant) fields are left out: they reveal nothing and a
    share for them would be wasted.

    Raises:
        ParameterError: ``total`` is not positive, no reports, or duplicates.
        DegenerateEntropyError: every field has zero entropy.
    """
    reports = list(reports)
    if not total > 0 or not math.isfinite(total):
        raise ParameterError(f"total epsilon must be positive and finite, got {total}")
    if not reports:
        raise ParameterError("at least one entropy report is required")
    names = [r.field for r in reports]
    if len(set(names)) != len(names):
        raise ParameterError(f"duplicate fields in reports: {names}")
    live = [r for r in reports if r.entropy_bits > 0]
    excluded = tuple(r.field for r in reports if r.entropy_bits <= 0)
    if not live:
        raise DegenerateEntropyError("all fields have zero entropy")
    inv = np.array([1.0 / r.entropy_bits for r in live])
    shares = total * inv / inv.sum()
    return BudgetAllocation(float(total), {r.field: float(s) for r, s in zip(live, shares)}, excluded)


@dataclass(frozen=True)
class LedgerEntry:
    label: str
    epsilon: float
    delta: float
    timestamp: float


@dataclass
class CompositionLedger:
    """Running total of epsilon spent under sequential composition.

    Delta is summed alongside epsilon for bookkeeping only.
    """

    total_epsilon: float
    entries: list[LedgerEntry] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        if not self.total_epsilon > 0:
            raise ParameterError(f"total epsilon must be positive, got {self.total_epsilon}")

    @property
    def spent(self) -> float:
        return math.fsum(e.epsilon for e in self.entries)

    @property
    def delta_spent(self) -> float:
        return math.fsum(e.delta for e in self.entries)

    @property
    def remaining(self) -> float:
        return max(self.total_epsilon - self.spent, 0.0)

    def spend(self, label: str, budget: PrivacyBudget) -> "CompositionLedger":
        with self._lock:
            after = math.fsum([self.spent, budget.epsilon])
            # absorb float round-off from summing many equal slices
            if after > self.total_epsilon * (1 + 1e-12):
                raise BudgetExhausted(
                    f"{label}: spending {budget.epsilon} would bring total to {after} > {self.total_epsilon}"
                )
            self.entries.append(LedgerEntry(label, budget.epsilon, budget.delta, time.time()))
        return self

    def to_dict(self) -> dict:
        return {
            "total_epsilon": self.total_epsilon,
            "spent": self.spent,
            "entries": [e.__dict__ for e in self.entries],
        }


def ledger_spend(ledger: CompositionLedger, label: str, budget: PrivacyBudget) -> CompositionLedger:
    """Charge ``budget`` to ``ledger``; on overflow the ledger is left unchanged."""
    return ledger.spend(label, budget)
