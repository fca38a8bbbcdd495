"""Apply mechanisms to dataset fields and package the results as releases.

Each mechanism has a home field (diagnosis counts for Laplace, age for the
Gaussian/sparse-vector/mean estimators, treatment type for exponential and
histogram, the derived abortion flag for randomized response).  Random
streams are keyed by mechanism name, so calling :func:`release` twice with
the same source returns the same noise.
"""

from __future__ import annotations

import datetime as dt
import math
from typing import Optional

import numpy as np

from . import mechanisms as mech
from .core import (
    DEFAULT_REFERENCE_DATE,
    Dataset,
    Mechanism,
    NoisyRelease,
    PrivacyBudget,
    RandomSource,
    derive_age,
    value_counts,
)
from .errors import ParameterError

HOME_FIELD = {
    Mechanism.LAPLACE: "DiagnosisCode",
    Mechanism.GAUSSIAN: "Age",
    Mechanism.EXPONENTIAL: "TreatmentType",
    Mechanism.RANDOMIZED_RESPONSE: "AbortionFlag",
    Mechanism.HISTOGRAM: "TreatmentType",
    Mechanism.SPARSE_VECTOR: "Age",
    Mechanism.LAPLACE_MEAN: "Age",
    Mechanism.CLIPPED_LAPLACE_MEAN: "Age",
    Mechanism.SMOOTH_SENSITIVITY_MEAN: "Age",
}

FIELD_MECHANISMS = (
    Mechanism.LAPLACE,
    Mechanism.GAUSSIAN,
    Mechanism.EXPONENTIAL,
    Mechanism.RANDOMIZED_RESPONSE,
    Mechanism.HISTOGRAM,
    Mechanism.SPARSE_VECTOR,
)
MEAN_MECHANISMS = (
    Mechanism.LAPLACE_MEAN,
    Mechanism.CLIPPED_LAPLACE_MEAN,
    Mechanism.SMOOTH_SENSITIVITY_MEAN,
)

# CLI spellings
MECHANISM_NAMES = {
    "laplace": Mechanism.LAPLACE,
    "gaussian": Mechanism.GAUSSIAN,
    "exponential": Mechanism.EXPONENTIAL,
    "randomized-response": Mechanism.RANDOMIZED_RESPONSE,
    "histogram": Mechanism.HISTOGRAM,
    "sparse-vector": Mechanism.SPARSE_VECTOR,
    "laplace-mean": Mechanism.LAPLACE_MEAN,
    "clipped-laplace-mean": Mechanism.CLIPPED_LAPLACE_MEAN,
    "smooth-sensitivity-mean": Mechanism.SMOOTH_SENSITIVITY_MEAN,
}

SVT_THRESHOLD = 65.0
SVT_MAX_QUERIES = 10


def field_values(d: Dataset, field_name: str, reference_date: dt.date = DEFAULT_REFERENCE_DATE):
    """Column used as mechanism input: a count map, an age array or flag bits."""
    if field_name == "Age":
        return derive_age(d, reference_date)
    if field_name == "AbortionFlag":
        return mech.derive_abortion_flag(d)
    if field_name in ("DiagnosisCode", "TreatmentType"):
        return value_counts(d, field_name)
    raise ParameterError(f"no mechanism input defined for field {field_name!r}")


def release(
    d: Dataset,
    mechanism: Mechanism,
    epsilon: float,
    rng: RandomSource,
    *,
    delta: float = 1e-5,
    field: Optional[str] = None,
    reference_date: dt.date = DEFAULT_REFERENCE_DATE,
) -> NoisyRelease:
    """Run ``mechanism`` on ``field`` (its home field by default)."""
    field = field or HOME_FIELD[mechanism]
    data = field_values(d, field, reference_date)
    stream = rng.child(mechanism.value)
    used_delta = 0.0
    meta = {"field": field, "dataset_size": d.size}

    if mechanism is Mechanism.LAPLACE:
        payload = mech.laplace_counts(_as_counts(data, field), 1.0, epsilon, stream)
    elif mechanism is Mechanism.HISTOGRAM:
        payload = mech.histogram_release(_as_counts(data, field), epsilon, 0.0, stream)
    elif mechanism is Mechanism.EXPONENTIAL:
        selected, probs = mech.exponential_select(_as_counts(data, field), epsilon, stream)
        payload = {"selected": selected, "probabilities": probs}
    elif mechanism is Mechanism.RANDOMIZED_RESPONSE:
        bits = _as_array(data, field)
        reported = mech.randomized_response_bits(bits, epsilon, stream)
        payload = reported.tolist()
        meta.update(
            rr_mean=float(reported.mean()) if reported.size else math.nan,
            flip_fraction=float((reported != bits).mean()) if bits.size else math.nan,
        )
        if not math.isinf(epsilon) and reported.size:
            meta["debiased_mean"] = mech.rr_debiased_mean(reported, epsilon)
    elif mechanism is Mechanism.GAUSSIAN:
        payload = mech.gaussian_mean(_as_array(data, field), 1.0, epsilon, delta, stream)
        used_delta = delta
    elif mechanism is Mechanism.SPARSE_VECTOR:
        result = mech.sparse_vector(_as_array(data, field), SVT_THRESHOLD, epsilon, SVT_MAX_QUERIES, stream)
        payload = result.to_dict()
        meta["accounting"] = "every answered query is charged"
    elif mechanism is Mechanism.LAPLACE_MEAN:
        payload = mech.laplace_mean(_as_array(data, field), 0.0, 100.0, epsilon, stream)
    elif mechanism is Mechanism.CLIPPED_LAPLACE_MEAN:
        payload = mech.clipped_laplace_mean(_as_array(data, field), 18.0, 90.0, epsilon, stream)
    elif mechanism is Mechanism.SMOOTH_SENSITIVITY_MEAN:
        payload = mech.smooth_sensitivity_mean(_as_array(data, field), 18.0, 90.0, epsilon, stream)
    else:  # pragma: no cover - enum is closed
        raise ParameterError(f"unsupported mechanism {mechanism}")
    return NoisyRelease(mechanism, payload, PrivacyBudget(epsilon, used_delta), meta)


def _as_counts(data, field_name):
    if not isinstance(data, dict):
        raise ParameterError(f"{field_name} is numeric; this mechanism needs category counts")
    return data


def _as_array(data, field_name):
    if isinstance(data, dict):
        raise ParameterError(f"{field_name} is categorical; this mechanism needs a numeric column")
    return np.asarray(data)


def reference_releases(d: Dataset) -> list[NoisyRelease]:
    """Noiseless diagnosis counts and true flags, standing in for a raw data dump."""
    inf = PrivacyBudget(math.inf)
    counts = {k: float(v) for k, v in value_counts(d, "DiagnosisCode").items()}
    flags = mech.derive_abortion_flag(d).tolist()
    return [
        NoisyRelease(Mechanism.LAPLACE, counts, inf, {"field": "DiagnosisCode", "raw": True}),
        NoisyRelease(Mechanism.RANDOMIZED_RESPONSE, flags, inf, {"field": "AbortionFlag", "raw": True}),
    ]
