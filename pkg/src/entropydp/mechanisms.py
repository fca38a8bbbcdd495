"""Differential-privacy release mechanisms.

Six field-level mechanisms (Laplace counts, Gaussian mean, exponential
selection, randomized response, clipped histogram, sparse vector) plus three
estimators for a noisy mean age: plain Laplace with global sensitivity, a
clipped (bounded) variant and a smooth-sensitivity variant.

Every function takes a :class:`~entropydp.core.RandomSource` (or an int
seed) and is deterministic given its inputs and that source.  An epsilon of
``math.inf`` adds no noise, which is how noiseless reference releases are
produced for the evaluation harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .core import SENSITIVE_DIAGNOSIS, Dataset, RandomSource, as_source
from .errors import EmptyQueryError, ParameterError

Rng = Union[RandomSource, int, None]


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    return epsilon


def _check_sensitivity(sensitivity: float) -> float:
    sensitivity = float(sensitivity)
    if not (sensitivity > 0 and math.isfinite(sensitivity)):
        raise ParameterError(f"sensitivity must be positive, got {sensitivity}")
    return sensitivity


def _laplace_noise(rng: RandomSource, scale: float, size=None):
    if scale == 0:
        return 0.0 if size is None else np.zeros(size)
    return rng.laplace(scale, size=size)


def _as_values(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise EmptyQueryError("query over an empty column")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("values must be finite")
    return arr


def _check_counts(counts: Mapping[str, float]) -> tuple[list[str], np.ndarray]:
    if not counts:
        raise EmptyQueryError("empty count map")
    labels = list(counts)
    return labels, np.array([float(counts[k]) for k in labels])


# ---------------------------------------------------------------------------
# Primitive samplers
# ---------------------------------------------------------------------------


def sample_laplace(rng: Rng, scale: float) -> float:
    """One draw from Lap(0, scale)."""
    if not scale > 0:
        raise ParameterError(f"Laplace scale must be positive, got {scale}")
    return float(as_source(rng).laplace(scale))


def sample_gaussian(rng: Rng, sigma: float) -> float:
    """One draw from N(0, sigma^2)."""
    if not sigma > 0:
        raise ParameterError(f"Gaussian sigma must be positive, got {sigma}")
    return float(as_source(rng).normal(sigma))


# ---------------------------------------------------------------------------
# Counts and histograms
# ---------------------------------------------------------------------------


def laplace_counts(
    counts: Mapping[str, float],
    sensitivity: float = 1.0,
    epsilon: float = 1.0,
    rng: Rng = None,
) -> dict[str, float]:
    """Add independent Lap(sensitivity/epsilon) noise to every bin.

    Noisy values are real and may be negative; no clipping happens here.
    """
    epsilon = _check_epsilon(epsilon)
    sensitivity = _check_sensitivity(sensitivity)
    labels, true = _check_counts(counts)
    noise = _laplace_noise(as_source(rng), sensitivity / epsilon, size=len(labels))
    return dict(zip(labels, (true + noise).tolist()))


def histogram_release(
    counts: Mapping[str, float],
    epsilon: float = 1.0,
    clip_min: float = 0.0,
    rng: Rng = None,
) -> dict[str, float]:
    """Lap(1/epsilon) noise per bin, then clamp each bin to at least ``clip_min``."""
    epsilon = _check_epsilon(epsilon)
    labels, true = _check_counts(counts)
    noise = _laplace_noise(as_source(rng), 1.0 / epsilon, size=len(labels))
    return dict(zip(labels, np.maximum(true + noise, clip_min).tolist()))


# ---------------------------------------------------------------------------
# Gaussian mean
# ---------------------------------------------------------------------------


def gaussian_sigma(epsilon: float, delta: float, sensitivity: float = 1.0) -> float:
    """Noise scale sqrt(2 ln(1.25/delta)) * sensitivity / epsilon."""
    epsilon = _check_epsilon(epsilon)
    sensitivity = _check_sensitivity(sensitivity)
    if not 0 < delta < 1:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    return math.sqrt(2.0 * math.log(1.25 / delta)) * sensitivity / epsilon


def gaussian_mean(
    values,
    sensitivity: float = 1.0,
    epsilon: float = 1.0,
    delta: float = 1e-5,
    rng: Rng = None,
) -> float:
    """Column mean plus N(0, sigma^2) noise (see :func:`gaussian_sigma`)."""
    sigma = gaussian_sigma(epsilon, delta, sensitivity)
    arr = _as_values(values)
    noise = 0.0 if sigma == 0 else as_source(rng).normal(sigma)
    return float(arr.mean() + noise)


# ---------------------------------------------------------------------------
# Exponential mechanism
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UtilityScores:
    options: tuple[str, ...]
    scores: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(str(o) for o in self.options))
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if not self.options:
            raise ParameterError("at least one option is required")
        if len(self.options) != len(self.scores):
            raise ParameterError("options and scores differ in length")

    @classmethod
    def from_mapping(cls, scores: Mapping[str, float]) -> "UtilityScores":
        return cls(tuple(scores), tuple(scores.values()))


def exponential_probabilities(
    scores: Union[UtilityScores, Mapping[str, float]],
    epsilon: float = 1.0,
    sensitivity: Optional[float] = None,
) -> dict[str, float]:
    """Selection probabilities proportional to exp(epsilon * u / (2 * d)).

    By default ``d`` is the largest score, which makes the probabilities
    invariant to rescaling all scores.  Pass ``sensitivity`` to use the
    textbook utility sensitivity instead.
    """
    if not isinstance(scores, UtilityScores):
        scores = UtilityScores.from_mapping(scores)
    epsilon = _check_epsilon(epsilon)
    u = np.array(scores.scores)
    if sensitivity is None:
        divisor = u.max()
        if not divisor > 0:
            raise ParameterError("the largest utility score must be positive")
    else:
        divisor = _check_sensitivity(sensitivity)
    if math.isinf(epsilon):
        # limit of the softmax: uniform over the argmax set
        weights = (u == u.max()).astype(float)
    else:
        logits = epsilon * u / (2.0 * divisor)
        weights = np.exp(logits - logits.max())
    probs = weights / weights.sum()
    return dict(zip(scores.options, probs.tolist()))


def exponential_select(
    scores: Union[UtilityScores, Mapping[str, float]],
    epsilon: float = 1.0,
    rng: Rng = None,
    sensitivity: Optional[float] = None,
) -> tuple[str, dict[str, float]]:
    """Draw one option from :func:`exponential_probabilities`.

    Returns:
        ``(selected_label, probability_map)``.
    """
    probs = exponential_probabilities(scores, epsilon, sensitivity)
    labels = list(probs)
    p = np.array([probs[k] for k in labels])
    idx = int(as_source(rng).generator.choice(len(labels), p=p / p.sum()))
    return labels[idx], probs


# ---------------------------------------------------------------------------
# Randomized response
# ---------------------------------------------------------------------------


def keep_probability(epsilon: float) -> float:
    """Probability e^eps / (1 + e^eps) that randomized response reports the truth."""
    epsilon = float(epsilon)
    if not epsilon >= 0:
        raise ParameterError(f"epsilon must be non-negative, got {epsilon}")
    return 1.0 / (1.0 + math.exp(-epsilon))


def randomized_response(bit: int, epsilon: float = 1.0, rng: Rng = None) -> int:
    """Report ``bit`` with probability e^eps/(1+e^eps), otherwise its complement."""
    if bit not in (0, 1):
        raise ParameterError(f"bit must be 0 or 1, got {bit!r}")
    p = keep_probability(epsilon)
    return int(bit) if as_source(rng).uniform() < p else 1 - int(bit)


def randomized_response_bits(bits, epsilon: float = 1.0, rng: Rng = None) -> np.ndarray:
    """Vectorised :func:`randomized_response` over a 0/1 array."""
    arr = np.asarray(bits)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ParameterError("bits must be 0 or 1")
    arr = arr.astype(np.int64)
    p = keep_probability(epsilon)
    keep = as_source(rng).uniform(size=arr.shape) < p
    return np.where(keep, arr, 1 - arr)


def rr_debiased_mean(reported, epsilon: float) -> float:
    """Unbiased estimate of the true 1-rate from randomized-response output."""
    p = keep_probability(epsilon)
    if p == 0.5:
        raise ParameterError("epsilon = 0 carries no signal to debias")
    observed = float(np.mean(_as_values(reported)))
    return (observed - (1.0 - p)) / (2.0 * p - 1.0)


def derive_abortion_flag(d: Dataset, code: str = SENSITIVE_DIAGNOSIS) -> np.ndarray:
    """1 where DiagnosisCode equals ``code`` (Z33.2 by default), else 0."""
    return (d.frame["DiagnosisCode"].to_numpy() == code).astype(np.int64)


# ---------------------------------------------------------------------------
# Sparse vector
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SvtResult:
    answers: tuple[bool, ...]
    budget_used: int

    def to_dict(self) -> dict:
        return {"answers": list(self.answers), "budget_used": self.budget_used}


def sparse_vector(
    values,
    threshold: float = 65.0,
    epsilon: float = 1.0,
    max_queries: int = 10,
    rng: Rng = None,
) -> SvtResult:
    """Noisy threshold tests over a stream of values.

    Each query compares value + Lap(2/eps) against threshold + Lap(4/eps),
    with the threshold noise redrawn per query.  Every answered query counts
    against ``max_queries``, positive or not, so this is not the classic
    AboveThreshold accounting.
    """
    epsilon = _check_epsilon(epsilon)
    if int(max_queries) < 1:
        raise ParameterError("max_queries must be at least 1")
    arr = _as_values(values)
    k = min(arr.size, int(max_queries))
    rng = as_source(rng)
    answers = []
    for v in arr[:k]:
        noisy_v = v + _laplace_noise(rng, 2.0 / epsilon)
        noisy_t = threshold + _laplace_noise(rng, 4.0 / epsilon)
        answers.append(bool(noisy_v > noisy_t))
    return SvtResult(tuple(answers), len(answers))


# ---------------------------------------------------------------------------
# Mean-age estimators
# ---------------------------------------------------------------------------


def _check_bounds(lo: float, hi: float) -> None:
    if not hi > lo:
        raise ParameterError(f"upper bound {hi} must exceed lower bound {lo}")


def laplace_mean(values, lo: float = 0.0, hi: float = 100.0, epsilon: float = 1.0, rng: Rng = None) -> float:
    """Mean plus Lap(((hi - lo) / n) / epsilon); values are not clipped."""
    epsilon = _check_epsilon(epsilon)
    _check_bounds(lo, hi)
    arr = _as_values(values)
    scale = (hi - lo) / arr.size / epsilon
    return float(arr.mean() + _laplace_noise(as_source(rng), scale))


def clipped_laplace_mean(values, lo: float = 18.0, hi: float = 90.0, epsilon: float = 1.0, rng: Rng = None) -> float:
    """Clamp to [lo, hi], then release the mean with sensitivity (hi - lo) / n."""
    epsilon = _check_epsilon(epsilon)
    _check_bounds(lo, hi)
    arr = np.clip(_as_values(values), lo, hi)
    scale = (hi - lo) / arr.size / epsilon
    return float(arr.mean() + _laplace_noise(as_source(rng), scale))


def smooth_sensitivity(values, lo: float = 18.0, hi: float = 90.0, epsilon: float = 1.0) -> tuple[float, float]:
    """Return ``(max_local_sensitivity, smooth_sensitivity)`` for the clipped mean.

    The local term is the widest gap between neighbouring sorted values
    divided by n; it is damped once by exp(-beta) with beta = epsilon / 10.
    """
    epsilon = _check_epsilon(epsilon)
    _check_bounds(lo, hi)
    arr = np.sort(np.clip(_as_values(values), lo, hi))
    n = arr.size
    if n < 2:
        raise ParameterError("smooth sensitivity needs at least two values")
    max_local = float(np.diff(arr).max() / n)
    beta = epsilon / 10.0
    damping = 0.0 if math.isinf(beta) else math.exp(-beta)
    return max_local, max_local * damping


def smooth_sensitivity_mean(values, lo: float = 18.0, hi: float = 90.0, epsilon: float = 1.0, rng: Rng = None) -> float:
    """Clipped mean plus Lap(smooth_sensitivity / epsilon)."""
    _, smooth = smooth_sensitivity(values, lo, hi, epsilon)
    clipped_mean = float(np.clip(_as_values(values), lo, hi).mean())
    scale = smooth / float(epsilon)
    return clipped_mean + float(_laplace_noise(as_source(rng), scale))
