"""Deterministic synthetic patient records.

DiagnosisCode and TreatmentType are drawn uniformly from fixed lists of 21
and 26 labels; with those sizes the large-sample entropies are log2(21) and
log2(26).  Identity fields (name, email, address, phone) come from small
word banks and never feed a DP computation, so only their shape matters.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .core import DEFAULT_REFERENCE_DATE, Dataset, RandomSource, as_source
from .errors import ParameterError

REQUIRED_DIAGNOSIS_CODES = (
    "F32.1", "E11.9", "Z33.2", "Z71.3", "J45.9", "L40.0",
    "F33.2", "Z86.3", "F41.1", "Z00.0", "C50.9",
)
DIAGNOSIS_CODES = REQUIRED_DIAGNOSIS_CODES + (
    "I10", "J06.9", "M54.5", "K21.9", "N39.0",
    "E78.5", "G43.9", "M17.9", "H52.4", "B34.9",
)

REQUIRED_TREATMENT_TYPES = (
    "Pharmacotherapy", "Radiotherapy", "Chemotherapy", "Speech Therapy",
    "Diabetes Education", "Specialist Referral", "Mental Health Counseling",
    "Physiotherapy", "Surgical Procedure",
)
TREATMENT_TYPES = REQUIRED_TREATMENT_TYPES + (
    "General Practitioner Consultation", "Vaccination", "Occupational Therapy",
    "Dialysis", "Immunotherapy", "Wound Care", "Cardiac Rehabilitation",
    "Dietary Counseling", "Pain Management", "Palliative Care", "Allergy Testing",
    "Blood Transfusion", "Prenatal Care", "Orthopedic Casting", "Hearing Assessment",
    "Smoking Cessation Program", "Sleep Study",
)

MIN_AGE = 18
MAX_AGE = 90

_FIRST_NAMES = (
    "Allison", "Renee", "Danielle", "Zachary", "Brittany", "Danny", "Victoria", "Carmen",
    "James", "Olivia", "Liam", "Charlotte", "Noah", "Amelia", "Jack", "Isla", "William",
    "Mia", "Henry", "Ava", "Thomas", "Grace", "Lucas", "Chloe", "Oliver", "Ruby", "Ethan",
    "Sophie", "Leo", "Zoe", "Samuel", "Harper", "Daniel", "Ella", "Joshua", "Lily",
)
_LAST_NAMES = (
    "Hill", "Blair", "Ford", "Taylor", "Farmer", "Morgan", "Garcia", "Smith", "Nguyen",
    "Brown", "Wilson", "Jones", "Williams", "Martin", "Anderson", "Thompson", "White",
    "Walker", "Harris", "Lee", "Ryan", "Robinson", "Kelly", "King", "Clarke", "Young",
    "Mitchell", "Wright", "Scott", "Green", "Baker", "Adams", "Campbell", "Edwards",
)
_STREET_NAMES = (
    "Anna", "Donna", "Jason", "Maddox", "Jessica", "Joshua", "Robert", "Brown", "Ocean",
    "Hillview", "Wattle", "Banksia", "Station", "Church", "Victoria", "George", "King",
)
_STREET_TYPES = ("Street", "Road", "Avenue", "Trail", "Walkway", "Ring", "Bridge", "Plaza", "Crescent", "Lane")
_SUBURBS = (
    "Robinsonshire", "Traciebury", "Jasonfort", "New Kaylamouth", "West Donna", "West Jennifer",
    "Wrightland", "Shawhaven", "Port Emily", "Lake Harry", "North Simon", "East Laura",
)
_STATES = ("NSW", "VIC", "QLD", "SA", "WA", "TAS", "NT", "ACT")
_EMAIL_DOMAINS = ("example.com", "example.net", "example.org")
_AREA_CODES = ("02", "03", "07", "08")


@dataclass(frozen=True)
class GeneratorConfig:
    n: int = 1000
    seed: int = 0
    reference_date: dt.date = DEFAULT_REFERENCE_DATE
    diagnosis_codes: tuple[str, ...] = field(default=DIAGNOSIS_CODES)
    treatment_types: tuple[str, ...] = field(default=TREATMENT_TYPES)

    def validate(self) -> None:
        if int(self.n) < 0:
            raise ParameterError(f"n must be non-negative, got {self.n}")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        _check_labels("diagnosis_codes", self.diagnosis_codes, 21, REQUIRED_DIAGNOSIS_CODES)
        _check_labels("treatment_types", self.treatment_types, 26, REQUIRED_TREATMENT_TYPES)


def _check_labels(name, labels, size, required) -> None:
    if len(labels) != size or len(set(labels)) != size:
        raise ParameterError(f"{name} must hold exactly {size} distinct labels")
    missing = set(required) - set(labels)
    if missing:
        raise ParameterError(f"{name} is missing {sorted(missing)}")


def _years_before(day: dt.date, years: int) -> dt.date:
    try:
        return day.replace(year=day.year - years)
    except ValueError:  # 29 February in a non-leap target year
        return day.replace(year=day.year - years, day=28)


def generate_medicare_number(rng) -> str:
    """Ten decimal digits with a nonzero leading digit."""
    return str(int(as_source(rng).integers(10**9, 10**10)))


def _pick(rng: RandomSource, bank, n: int) -> np.ndarray:
    return np.asarray(bank, dtype=object)[rng.integers(0, len(bank), size=n)]


def generate_dataset(cfg: GeneratorConfig) -> Dataset:
    """Build ``cfg.n`` records; equal configs give identical datasets."""
    cfg.validate()
    n = int(cfg.n)
    if n == 0:
        return Dataset.empty()
    root = RandomSource(cfg.seed).child("datagen")

    first = _pick(root.child("first-name"), _FIRST_NAMES, n)
    last = _pick(root.child("last-name"), _LAST_NAMES, n)
    names = [f"{f} {l}" for f, l in zip(first, last)]

    mail = root.child("email")
    suffix = mail.integers(0, 100, size=n)
    domains = _pick(mail, _EMAIL_DOMAINS, n)
    emails = [f"{f.lower()}.{l.lower()}{s}@{d}" for f, l, s, d in zip(first, last, suffix, domains)]

    latest = _years_before(cfg.reference_date, MIN_AGE)
    earliest = _years_before(cfg.reference_date, MAX_AGE + 1) + dt.timedelta(days=1)
    span = (latest - earliest).days
    offsets = root.child("dob").integers(0, span + 1, size=n)
    dob = (np.datetime64(earliest.isoformat()) + offsets.astype("timedelta64[D]")).astype(str)

    medicare = root.child("medicare").integers(10**9, 10**10, size=n).astype(str)
    diagnosis = _pick(root.child("diagnosis"), cfg.diagnosis_codes, n)
    treatment = _pick(root.child("treatment"), cfg.treatment_types, n)

    addr = root.child("address")
    numbers = addr.integers(1, 1000, size=n)
    streets = _pick(addr, _STREET_NAMES, n)
    types = _pick(addr, _STREET_TYPES, n)
    suburbs = _pick(addr, _SUBURBS, n)
    states = _pick(addr, _STATES, n)
    postcodes = addr.integers(800, 10000, size=n)
    addresses = [
        f"{num} {s} {t}, {sub}, {st}, {pc:04d}"
        for num, s, t, sub, st, pc in zip(numbers, streets, types, suburbs, states, postcodes)
    ]

    tel = root.child("phone")
    areas = _pick(tel, _AREA_CODES, n)
    local = tel.integers(0, 10**8, size=n)
    phones = [f"({a}) {x // 10**4:04d} {x % 10**4:04d}" for a, x in zip(areas, local)]

    frame = pd.DataFrame(
        {
            "id": np.arange(1, n + 1, dtype=np.int64),
            "Name": names,
            "Email": emails,
            "DateOfBirth": dob,
            "MedicareNumber": medicare,
            "DiagnosisCode": diagnosis,
            "TreatmentType": treatment,
            "Address": addresses,
            "Phone": phones,
        }
    )
    return Dataset(frame)
