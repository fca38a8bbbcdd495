"""Privacy/utility evaluation of the field-level mechanisms.

Produces four tables per dataset size (entropy comparison, Laplace+Exponential
divergence, re-identification metrics, mechanism summary), a mean-age
comparison for the three refined estimators, and a composite score per
mechanism.  :func:`evaluate` runs the whole sweep; :func:`emit_report`
writes it as JSON, a CSV bundle or markdown.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .core import (
    DEFAULT_REFERENCE_DATE,
    SENSITIVE_DIAGNOSIS,
    Dataset,
    Mechanism,
    NoisyRelease,
    RandomSource,
    as_source,
    default_delta,
    derive_age,
    value_counts,
)
from .datagen import GeneratorConfig, generate_dataset
from .entropy_budget import Distribution, shannon_entropy
from .errors import DistributionError, ParameterError, ScoreDegenerateError, WriteError
from .mechanisms import derive_abortion_flag, keep_probability
from .releases import MEAN_MECHANISMS, SVT_THRESHOLD, reference_releases, release

log = logging.getLogger(__name__)

NOISE_FLOOR = 1e-12
DEFAULT_SIZES = (1000, 31000, 131000)
SENTINEL_LOSS = 0.1

DISPLAY_NAME = {
    Mechanism.LAPLACE: "Laplace",
    Mechanism.GAUSSIAN: "Gaussian",
    Mechanism.EXPONENTIAL: "Exponential",
    Mechanism.RANDOMIZED_RESPONSE: "Randomized Response",
    Mechanism.HISTOGRAM: "Histogram",
    Mechanism.SPARSE_VECTOR: "Sparse Vector",
    Mechanism.LAPLACE_MEAN: "Laplace Mechanism (Mean Age)",
    Mechanism.CLIPPED_LAPLACE_MEAN: "Bounded Laplace (Clipped Mean)",
    Mechanism.SMOOTH_SENSITIVITY_MEAN: "Smooth Sensitivity (Mean Age)",
}
SUITABLE_FOR = {
    Mechanism.LAPLACE: "Count Queries",
    Mechanism.GAUSSIAN: "Numeric Queries",
    Mechanism.EXPONENTIAL: "Categorical Selection",
    Mechanism.RANDOMIZED_RESPONSE: "Binary Flags",
    Mechanism.HISTOGRAM: "Histograms",
    Mechanism.SPARSE_VECTOR: "Threshold Queries",
}

REPORT_NOTES = (
    "Sparse vector charges every answered query against max_queries (threshold noise redrawn per query), "
    "not only positive answers as in the classic AboveThreshold algorithm.",
    "Exponential mechanism normalises utilities by 2*max(score) rather than 2*sensitivity.",
    "Entropy levels for free-text fields (Name, Email, MedicareNumber) are capped by schema sensitivity; "
    "their empirical entropy is near log2(n).",
    "Negative noisy counts are floored at 1e-12 before entropy and divergence are computed.",
)


# ---------------------------------------------------------------------------
# Divergences
# ---------------------------------------------------------------------------


def _aligned(p: Distribution, q: Distribution) -> tuple[np.ndarray, np.ndarray]:
    if set(p.probabilities) != set(q.probabilities):
        raise DistributionError("distributions have different supports")
    labels = sorted(p.probabilities)
    return p.vector(labels), q.vector(labels)


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    if np.any(q[mask] <= 0):
        raise DistributionError("q is zero where p is positive")
    return max(float(np.sum(p[mask] * np.log(p[mask] / q[mask]))), 0.0)


def kl_divergence(p: Distribution, q: Distribution) -> float:
    """KL(p || q) in nats, skipping terms where p is zero."""
    return _kl(*_aligned(p, q))


def js_divergence(p: Distribution, q: Distribution) -> float:
    """Jensen-Shannon divergence in nats; symmetric and at most ln 2."""
    a, b = _aligned(p, q)
    m = 0.5 * (a + b)
    return min(0.5 * _kl(a, m) + 0.5 * _kl(b, m), math.log(2))


def noisy_distribution(noisy_counts: Mapping[str, float]) -> Distribution:
    """Floor noisy counts at 1e-12 and renormalise."""
    return Distribution.from_counts(noisy_counts, floor=NOISE_FLOOR)


# ---------------------------------------------------------------------------
# Table rows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntropyRow:
    field: str
    true_entropy: float
    noisy_entropy: float
    dataset_size: int


@dataclass(frozen=True)
class DivergenceRow:
    mechanism: str
    kl: float
    js: float
    dataset_size: int


@dataclass(frozen=True)
class ReidMetrics:
    accuracy: float
    precision: float
    recall: float
    tp: int
    fp: int
    tn: int
    fn: int
    threshold: float

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def candidates(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def success_rate(self) -> float:
        """Share of the adversary's positive claims that are correct."""
        return self.precision


@dataclass(frozen=True)
class ReidRow:
    dataset_size: int
    accuracy: float
    precision: float
    recall: float
    positives: int
    candidates: int
    raw_success: float
    dp_success: float
    risk_reduction: float


@dataclass(frozen=True)
class MechanismSummaryRow:
    mechanism: str
    epsilon: float
    utility_loss: Union[float, str]
    utility_value: float
    entropy_change: Optional[float]
    suitable_for: str
    dataset_size: int

    @property
    def numeric_loss(self) -> float:
        return SENTINEL_LOSS if isinstance(self.utility_loss, str) else float(self.utility_loss)


@dataclass(frozen=True)
class MeanAgeRow:
    mechanism: str
    true_mean: float
    noisy_mean: float
    dataset_size: int


# ---------------------------------------------------------------------------
# Entropy and divergence
# ---------------------------------------------------------------------------


def _entropy_of_counts(counts: Mapping[str, float]) -> float:
    return shannon_entropy(noisy_distribution(counts))


def entropy_comparison(d: Dataset, eps: float, rng: RandomSource) -> list[EntropyRow]:
    """True vs noisy entropy for DiagnosisCode and TreatmentType.

    DiagnosisCode's noisy distribution is the renormalised Laplace count
    release; TreatmentType's is the exponential mechanism's probability map.
    """
    rng = as_source(rng)
    diag = value_counts(d, "DiagnosisCode")
    treat = value_counts(d, "TreatmentType")
    lap = release(d, Mechanism.LAPLACE, eps, rng)
    exp = release(d, Mechanism.EXPONENTIAL, eps, rng)
    return [
        EntropyRow("DiagnosisCode", _entropy_of_counts(diag), _entropy_of_counts(lap.payload), d.size),
        EntropyRow(
            "TreatmentType",
            _entropy_of_counts(treat),
            shannon_entropy(Distribution(exp.payload["probabilities"])),
            d.size,
        ),
    ]


def divergence_summary(d: Dataset, eps: float, rng: RandomSource) -> DivergenceRow:
    """KL/JS between the empirical diagnosis distribution and its Laplace release."""
    rng = as_source(rng)
    p = Distribution.from_counts(value_counts(d, "DiagnosisCode"))
    q = noisy_distribution(release(d, Mechanism.LAPLACE, eps, rng).payload)
    return DivergenceRow("Laplace and Exponential", kl_divergence(p, q), js_divergence(p, q), d.size)


# ---------------------------------------------------------------------------
# Re-identification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttackConfig:
    """Knobs for the linkage adversary.

    Attributes:
        sensitive_code: diagnosis the adversary tries to attach to people.
        calibration_fraction: share of records with known labels used to
            pick the decision threshold; the rest are the scored candidates.
        age_bucket_years: width of the age quasi-identifier bucket.
        shrinkage: pseudo-count pulling each bucket's estimated rate toward
            the global rate from the noisy histogram.
    """

    sensitive_code: str = SENSITIVE_DIAGNOSIS
    calibration_fraction: float = 0.5
    age_bucket_years: int = 10
    shrinkage: float = 200.0
    reference_date: dt.date = DEFAULT_REFERENCE_DATE


def _find(releases: Iterable[NoisyRelease], kind: Mechanism) -> NoisyRelease:
    for r in releases:
        if r.mechanism is kind:
            return r
    raise ParameterError(f"reid_attack needs a {kind.value} release")


def _youden_threshold(scores: np.ndarray, labels: np.ndarray) -> float:
    pos = int(labels.sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        return 0.5
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    tp = np.cumsum(y)
    fp = np.cumsum(1 - y)
    # evaluate only at the last index of each run of tied scores
    last = np.r_[s[1:] != s[:-1], True]
    j = tp[last] / pos - fp[last] / neg
    return float(s[last][int(np.argmax(j))])


def reid_attack(
    original: Dataset,
    releases: Sequence[NoisyRelease],
    cfg: Optional[AttackConfig] = None,
    rng: Union[RandomSource, int, None] = None,
) -> ReidMetrics:
    """Simulate an adversary linking released flags to people.

    The adversary knows every candidate's quasi-identifiers (age bucket and
    treatment type) and sees the released diagnosis histogram plus the
    per-record randomized-response flags.  Each candidate is scored by the
    posterior that they hold the sensitive diagnosis: the prior is the
    bucket's debiased flag rate (leave-one-out, shrunk toward the histogram's
    global rate) and the likelihood comes from the candidate's own reported
    flag.  The cut-off maximises Youden's J on a labelled calibration split;
    metrics are computed on the remaining records.
    """
    cfg = cfg or AttackConfig()
    rng = as_source(rng)
    lap = _find(releases, Mechanism.LAPLACE)
    rr = _find(releases, Mechanism.RANDOMIZED_RESPONSE)
    n = original.size
    reported = np.asarray(rr.payload, dtype=np.int64)
    if reported.size != n:
        raise ParameterError(f"flag release has {reported.size} entries for {n} records")
    if not 0 < cfg.calibration_fraction < 1:
        raise ParameterError("calibration_fraction must lie in (0, 1)")
    n_cal = int(round(n * cfg.calibration_fraction))
    if n - n_cal < 1 or n_cal < 1:
        raise ParameterError("not enough records to form calibration and candidate sets")

    truth = derive_abortion_flag(original, cfg.sensitive_code)
    counts = {k: max(float(v), 0.0) for k, v in lap.payload.items()}
    total = sum(counts.values())
    prior = counts.get(cfg.sensitive_code, 0.0) / total if total > 0 else 0.0
    prior = min(max(prior, 1e-6), 1 - 1e-6)

    p = keep_probability(rr.budget_spent.epsilon)
    if p > 0.5:
        signal = (reported - (1.0 - p)) / (2.0 * p - 1.0)
    else:
        signal = np.full(n, prior)

    ages = derive_age(original, cfg.reference_date) // cfg.age_bucket_years
    treatments = original.frame["TreatmentType"].to_numpy()
    _, bucket = np.unique(np.char.add(ages.astype(str), np.asarray(treatments, dtype=str)), return_inverse=True)
    sums = np.bincount(bucket, weights=signal)
    sizes = np.bincount(bucket)
    m = cfg.shrinkage
    rate = (sums[bucket] - signal + m * prior) / (sizes[bucket] - 1 + m)
    rate = np.clip(rate, 1e-6, 1 - 1e-6)

    like1 = np.where(reported == 1, p, 1.0 - p)
    like0 = np.where(reported == 1, 1.0 - p, p)
    posterior = rate * like1 / (rate * like1 + (1.0 - rate) * like0)

    order = rng.child("split").generator.permutation(n)
    cal, cand = order[:n_cal], order[n_cal:]
    threshold = _youden_threshold(posterior[cal], truth[cal])
    pred = posterior[cand] >= threshold
    y = truth[cand] == 1
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    tn = int(np.sum(~pred & ~y))
    fn = int(np.sum(~pred & y))
    return ReidMetrics(
        accuracy=(tp + tn) / cand.size,
        precision=tp / (tp + fp) if tp + fp else 0.0,
        recall=tp / (tp + fn) if tp + fn else 0.0,
        tp=tp, fp=fp, tn=tn, fn=fn,
        threshold=threshold,
    )


def reid_row(d: Dataset, eps: float, rng: RandomSource, cfg: Optional[AttackConfig] = None) -> ReidRow:
    """Attack the DP releases and the raw data with the same split; report both."""
    rng = as_source(rng)
    dp_releases = [release(d, Mechanism.LAPLACE, eps, rng), release(d, Mechanism.RANDOMIZED_RESPONSE, eps, rng)]
    attack_rng = rng.child("reid")
    dp = reid_attack(d, dp_releases, cfg, attack_rng)
    raw = reid_attack(d, reference_releases(d), cfg, attack_rng)
    reduction = 1.0 - dp.success_rate / raw.success_rate if raw.success_rate > 0 else 0.0
    return ReidRow(
        d.size, dp.accuracy, dp.precision, dp.recall, dp.positives, dp.candidates,
        raw.success_rate, dp.success_rate, reduction,
    )


# ---------------------------------------------------------------------------
# Mechanism summary and scores
# ---------------------------------------------------------------------------


def mechanism_summary(
    d: Dataset,
    eps: float,
    delta: float,
    rng: RandomSource,
    reference_date: dt.date = DEFAULT_REFERENCE_DATE,
) -> list[MechanismSummaryRow]:
    """One row per field-level mechanism at privacy level ``eps``.

    Utility loss is the mean absolute bin error for Laplace and Histogram,
    the absolute error of one mean release for Gaussian and the flip rate for
    randomized response.  Exponential reports "Low" (numeric value: one minus
    the probability of the best option) and sparse vector "Binary" (numeric
    value: share of answers that disagree with the exact comparison).
    """
    rng = as_source(rng)
    rows = []
    diag = value_counts(d, "DiagnosisCode")
    treat = value_counts(d, "TreatmentType")
    ages = derive_age(d, reference_date).astype(float)

    def row(kind, loss, value, change):
        rows.append(MechanismSummaryRow(DISPLAY_NAME[kind], eps, loss, value, change, SUITABLE_FOR[kind], d.size))

    lap = release(d, Mechanism.LAPLACE, eps, rng).payload
    mad = float(np.mean([abs(lap[k] - diag[k]) for k in diag]))
    row(Mechanism.LAPLACE, mad, mad, _entropy_of_counts(lap) - _entropy_of_counts(diag))

    gauss = release(d, Mechanism.GAUSSIAN, eps, rng, delta=delta, reference_date=reference_date).payload
    err = abs(gauss - float(ages.mean()))
    row(Mechanism.GAUSSIAN, err, err, None)

    probs = release(d, Mechanism.EXPONENTIAL, eps, rng).payload["probabilities"]
    best = max(treat, key=lambda k: (treat[k], k))
    row(
        Mechanism.EXPONENTIAL, "Low", 1.0 - probs[best],
        shannon_entropy(Distribution(probs)) - _entropy_of_counts(treat),
    )

    rr = release(d, Mechanism.RANDOMIZED_RESPONSE, eps, rng)
    flips = float(rr.metadata["flip_fraction"])
    row(Mechanism.RANDOMIZED_RESPONSE, flips, flips, None)

    hist = release(d, Mechanism.HISTOGRAM, eps, rng).payload
    hmad = float(np.mean([abs(hist[k] - treat[k]) for k in treat]))
    row(Mechanism.HISTOGRAM, hmad, hmad, _entropy_of_counts(hist) - _entropy_of_counts(treat))

    svt = release(d, Mechanism.SPARSE_VECTOR, eps, rng, reference_date=reference_date).payload
    answers = np.array(svt["answers"], dtype=bool)
    exact = ages[: answers.size] > SVT_THRESHOLD
    row(Mechanism.SPARSE_VECTOR, "Binary", float(np.mean(answers != exact)), None)
    return rows


def score_mechanisms(rows: Iterable[MechanismSummaryRow]) -> dict[str, float]:
    """Min-max scores in [-1, 1]: lowest utility loss gets +1, highest -1.

    Sentinel losses ("Low", "Binary") count as 0.1.  When several rows share
    a mechanism (for example one per dataset size) their losses are averaged.
    """
    grouped: dict[str, list[float]] = {}
    for r in rows:
        grouped.setdefault(r.mechanism, []).append(r.numeric_loss)
    losses = {k: float(np.mean(v)) for k, v in grouped.items()}
    if len(set(losses.values())) < 2:
        raise ScoreDegenerateError("need at least two distinct utility losses to score")
    lo, hi = min(losses.values()), max(losses.values())
    return {k: 1.0 - 2.0 * (v - lo) / (hi - lo) for k, v in losses.items()}


def mean_age_comparison(
    d: Dataset, eps: float, rng: RandomSource, reference_date: dt.date = DEFAULT_REFERENCE_DATE
) -> list[MeanAgeRow]:
    rng = as_source(rng)
    ages = derive_age(d, reference_date).astype(float)
    rows = []
    for kind in MEAN_MECHANISMS:
        noisy = release(d, kind, eps, rng, reference_date=reference_date).payload
        true = float(np.clip(ages, 18, 90).mean()) if kind is not Mechanism.LAPLACE_MEAN else float(ages.mean())
        rows.append(MeanAgeRow(DISPLAY_NAME[kind], true, noisy, d.size))
    return rows


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass
class EvaluationReport:
    meta: dict
    entropy: list[EntropyRow] = field(default_factory=list)
    divergence: list[DivergenceRow] = field(default_factory=list)
    reid: dict[int, ReidRow] = field(default_factory=dict)
    summary: list[MechanismSummaryRow] = field(default_factory=list)
    scores: dict[str, float] = field(default_factory=dict)
    mean_age: list[MeanAgeRow] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "meta": dict(self.meta),
            "entropy": [asdict(r) for r in self.entropy],
            "divergence": [asdict(r) for r in self.divergence],
            "reid": {str(k): asdict(v) for k, v in self.reid.items()},
            "summary": [asdict(r) for r in self.summary],
            "scores": dict(self.scores),
            "mean_age": [asdict(r) for r in self.mean_age],
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EvaluationReport":
        return cls(
            meta=dict(data["meta"]),
            entropy=[EntropyRow(**r) for r in data.get("entropy", [])],
            divergence=[DivergenceRow(**r) for r in data.get("divergence", [])],
            reid={int(k): ReidRow(**v) for k, v in data.get("reid", {}).items()},
            summary=[MechanismSummaryRow(**r) for r in data.get("summary", [])],
            scores=dict(data.get("scores", {})),
            mean_age=[MeanAgeRow(**r) for r in data.get("mean_age", [])],
            notes=list(data.get("notes", [])),
        )


def evaluate_dataset(
    d: Dataset,
    seed: int,
    epsilon: float = 1.0,
    delta: Optional[float] = None,
    reference_date: dt.date = DEFAULT_REFERENCE_DATE,
    attack: Optional[AttackConfig] = None,
) -> EvaluationReport:
    """Evaluate a single dataset (one size)."""
    return _assemble([d], seed, epsilon, delta, reference_date, attack)


def evaluate(
    sizes: Sequence[int] = DEFAULT_SIZES,
    seed: int = 42,
    epsilon: float = 1.0,
    delta: Optional[float] = None,
    reference_date: dt.date = DEFAULT_REFERENCE_DATE,
    attack: Optional[AttackConfig] = None,
) -> EvaluationReport:
    """Generate one dataset per size with ``seed`` and evaluate all of them.

    ``delta=None`` picks 1e-5 or 1e-6 per size so that delta < 1/n.
    """
    if not sizes:
        raise ParameterError("at least one dataset size is required")
    datasets = []
    for n in sizes:
        if int(n) < 2:
            raise ParameterError(f"dataset size must be at least 2, got {n}")
        datasets.append(generate_dataset(GeneratorConfig(n=int(n), seed=seed, reference_date=reference_date)))
    return _assemble(datasets, seed, epsilon, delta, reference_date, attack)


def _assemble(datasets, seed, epsilon, delta, reference_date, attack) -> EvaluationReport:
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    root = RandomSource(seed)
    report = EvaluationReport(
        meta={
            "seed": seed,
            "epsilon": epsilon,
            "delta": delta,
            "sizes": [d.size for d in datasets],
            "delta_by_size": {},
            "reference_date": reference_date.isoformat(),
        },
        notes=list(REPORT_NOTES),
    )
    for d in datasets:
        size_delta = delta if delta is not None else default_delta(d.size)
        if size_delta >= 1.0 / d.size:
            log.warning("delta=%g is not below 1/n for n=%d", size_delta, d.size)
        report.meta["delta_by_size"][str(d.size)] = size_delta
        rng = root.child(f"evaluate/{d.size}")
        log.info("evaluating n=%d", d.size)
        report.entropy.extend(entropy_comparison(d, epsilon, rng))
        report.divergence.append(divergence_summary(d, epsilon, rng))
        report.reid[d.size] = reid_row(d, epsilon, rng, attack)
        report.summary.extend(mechanism_summary(d, epsilon, size_delta, rng, reference_date))
        report.mean_age.extend(mean_age_comparison(d, epsilon, rng, reference_date))
    report.scores = score_mechanisms(report.summary)
    return report


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

ENTROPY_HEADER = ("Field", "True Entropy", "Noisy Entropy", "Dataset Size")
DIVERGENCE_HEADER = ("Mechanism", "KL Divergence", "JS Divergence", "Dataset Size")
REID_HEADER = ("Metric", "Value", "Dataset Size")
SUMMARY_HEADER = ("Mechanism", "Privacy Level (ε)", "Utility Loss", "Entropy Change", "Suitable For", "Dataset Size")


def _fmt(x) -> str:
    if x is None:
        return "--"
    if isinstance(x, str):
        return x
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _tables(rep: EvaluationReport) -> dict[str, tuple[tuple[str, ...], list[list[str]]]]:
    reid_rows = []
    for size, r in rep.reid.items():
        reid_rows += [["Accuracy", r.accuracy, size], ["Precision", r.precision, size], ["Recall", r.recall, size]]
    return {
        "entropy_comparison": (
            ENTROPY_HEADER,
            [[r.field, r.true_entropy, r.noisy_entropy, r.dataset_size] for r in rep.entropy],
        ),
        "divergence_summary": (
            DIVERGENCE_HEADER,
            [[r.mechanism, r.kl, r.js, r.dataset_size] for r in rep.divergence],
        ),
        "reidentification_metrics": (REID_HEADER, reid_rows),
        "mechanism_summary": (
            SUMMARY_HEADER,
            [
                [r.mechanism, r.epsilon, r.utility_loss, r.entropy_change, r.suitable_for, r.dataset_size]
                for r in rep.summary
            ],
        ),
    }


def render_markdown(rep: EvaluationReport) -> str:
    out = ["# Differential privacy evaluation", ""]
    meta = rep.meta
    out.append(f"seed={meta.get('seed')}  epsilon={meta.get('epsilon')}  sizes={meta.get('sizes')}")
    out.append("")
    titles = {
        "entropy_comparison": "Entropy comparison",
        "divergence_summary": "Divergence summary",
        "reidentification_metrics": "Re-identification metrics",
        "mechanism_summary": "Mechanism summary",
    }
    for key, (header, rows) in _tables(rep).items():
        out += [f"## {titles[key]}", "", "| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        out += ["| " + " | ".join(_fmt(c) for c in row) + " |" for row in rows]
        out.append("")
    if rep.reid:
        out += ["## Risk reduction", "", "| Dataset Size | Raw success | DP success | Reduction |", "|---|---|---|---|"]
        for size, r in rep.reid.items():
            out.append(f"| {size} | {r.raw_success:.4f} | {r.dp_success:.4f} | {r.risk_reduction:.1%} |")
        out.append("")
    if rep.mean_age:
        out += ["## Mean age", "", "| Mechanism | True Mean | Noisy Mean | Dataset Size |", "|---|---|---|---|"]
        out += [f"| {r.mechanism} | {r.true_mean!r} | {r.noisy_mean!r} | {r.dataset_size} |" for r in rep.mean_age]
        out.append("")
    if rep.scores:
        out += ["## Scores", "", "| Mechanism | Score |", "|---|---|"]
        out += [f"| {k} | {v:.4f} |" for k, v in sorted(rep.scores.items(), key=lambda kv: -kv[1])]
        out.append("")
    if rep.notes:
        out += ["## Notes", ""] + [f"- {n}" for n in rep.notes] + [""]
    return "\n".join(out)


def emit_report(rep: EvaluationReport, path, format: str = "json") -> list[Path]:
    """Write ``rep``; returns the files created.

    ``csv-bundle`` treats ``path`` as a directory and writes one CSV per table.
    """
    if format not in ("json", "csv-bundle", "markdown"):
        raise ParameterError(f"unknown report format {format!r}")
    path = Path(path)
    try:
        if format == "json":
            path.write_text(json.dumps(rep.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
            return [path]
        if format == "markdown":
            path.write_text(render_markdown(rep), encoding="utf-8")
            return [path]
        path.mkdir(parents=True, exist_ok=True)
        written = []
        for name, (header, rows) in _tables(rep).items():
            target = path / f"{name}.csv"
            with target.open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                writer.writerows([[_fmt(c) for c in row] for row in rows])
            written.append(target)
        return written
    except OSError as exc:
        raise WriteError(f"cannot write report to {path}: {exc}") from exc


def load_report(path) -> EvaluationReport:
    return EvaluationReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
