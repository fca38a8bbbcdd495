import re

import numpy as np
import pytest

from entropydp.core import RandomSource, derive_age, value_counts
from entropydp.datagen import (
    DIAGNOSIS_CODES,
    REQUIRED_DIAGNOSIS_CODES,
    REQUIRED_TREATMENT_TYPES,
    TREATMENT_TYPES,
    GeneratorConfig,
    generate_dataset,
    generate_medicare_number,
)
from entropydp.entropy_budget import Distribution, shannon_entropy
from entropydp.errors import ParameterError


def _entropy(d, field):
    return shannon_entropy(Distribution.from_counts(value_counts(d, field)))


def test_label_lists():
    assert len(DIAGNOSIS_CODES) == len(set(DIAGNOSIS_CODES)) == 21
    assert len(TREATMENT_TYPES) == len(set(TREATMENT_TYPES)) == 26
    assert set(REQUIRED_DIAGNOSIS_CODES) <= set(DIAGNOSIS_CODES)
    assert set(REQUIRED_TREATMENT_TYPES) <= set(TREATMENT_TYPES)
    assert "Z33.2" in DIAGNOSIS_CODES


def test_large_entropies(large_dataset):
    assert _entropy(large_dataset, "DiagnosisCode") == pytest.approx(4.3923, abs=0.001)
    assert _entropy(large_dataset, "TreatmentType") == pytest.approx(4.7004, abs=0.001)


def test_another_seed_same_entropies():
    d = generate_dataset(GeneratorConfig(n=131_000, seed=987))
    assert _entropy(d, "DiagnosisCode") == pytest.approx(4.3923, abs=0.001)
    assert _entropy(d, "TreatmentType") == pytest.approx(4.7004, abs=0.001)


def test_empty():
    assert generate_dataset(GeneratorConfig(n=0)).size == 0


def test_deterministic():
    a = generate_dataset(GeneratorConfig(n=500, seed=3))
    b = generate_dataset(GeneratorConfig(n=500, seed=3))
    c = generate_dataset(GeneratorConfig(n=500, seed=4))
    assert a == b
    assert a != c


def test_prefix_stable_across_sizes():
    # each column has its own stream, so a larger n extends a smaller one
    small = generate_dataset(GeneratorConfig(n=100, seed=8))
    big = generate_dataset(GeneratorConfig(n=200, seed=8))
    assert (big.frame["DiagnosisCode"].iloc[:100].tolist() == small.frame["DiagnosisCode"].tolist())


def test_shapes(small_dataset):
    d = small_dataset
    assert list(d.column("id")) == list(range(1, 1001))
    assert all(re.fullmatch(r"[1-9][0-9]{9}", m) for m in d.column("MedicareNumber"))
    assert all(re.fullmatch(r"\(0[2378]\) \d{4} \d{4}", p) for p in d.column("Phone"))
    assert all("@example." in e for e in d.column("Email"))
    ages = derive_age(d)
    assert ages.min() >= 18 and ages.max() <= 90


def test_age_span_reaches_both_ends(large_dataset):
    ages = derive_age(large_dataset)
    assert ages.min() == 18 and ages.max() == 90


class TestMedicareNumber:
    def test_pattern(self):
        src = RandomSource(0)
        for _ in range(200):
            assert re.fullmatch(r"[1-9][0-9]{9}", generate_medicare_number(src))

    def test_nearly_distinct(self):
        src = RandomSource(1)
        draws = {generate_medicare_number(src) for _ in range(10_000)}
        assert len(draws) >= 9_990

    def test_deterministic(self):
        assert generate_medicare_number(RandomSource(2)) == generate_medicare_number(RandomSource(2))


class TestConfigValidation:
    def test_negative_n(self):
        with pytest.raises(ParameterError):
            generate_dataset(GeneratorConfig(n=-1))

    def test_seed_range(self):
        with pytest.raises(ParameterError):
            generate_dataset(GeneratorConfig(n=1, seed=2**64))

    def test_wrong_list_size(self):
        with pytest.raises(ParameterError):
            generate_dataset(GeneratorConfig(n=1, diagnosis_codes=DIAGNOSIS_CODES[:20]))

    def test_missing_required_label(self):
        codes = tuple(c for c in DIAGNOSIS_CODES if c != "Z33.2") + ("Q99.9",)
        with pytest.raises(ParameterError):
            generate_dataset(GeneratorConfig(n=1, diagnosis_codes=codes))

    def test_custom_lists_accepted(self):
        treatments = TREATMENT_TYPES[:-1] + ("Acupuncture",)
        d = generate_dataset(GeneratorConfig(n=2000, seed=1, treatment_types=treatments))
        assert "Acupuncture" in set(d.column("TreatmentType"))
