"""Entropy-aware differential privacy for tabular patient records.

Submodules:
    core: schema, dataset I/O, budgets, seeded random streams, releases.
    entropy_budget: Shannon entropy profiling, budget split, composition ledger.
    mechanisms: Laplace, Gaussian, exponential, randomized response,
        histogram, sparse vector and the refined mean estimators.
    datagen: deterministic synthetic patient generator.
    evaluation: divergences, utility losses, linkage attack, scoring, reports.
    estimators: scikit-learn style wrappers.
    cli: the ``entropydp`` command.
"""

from .core import (
    Dataset,
    FieldKind,
    Mechanism,
    NoisyRelease,
    PrivacyBudget,
    RandomSource,
    SensitivityClass,
    derive_age,
    load_dataset,
    save_dataset,
    value_counts,
)
from .datagen import GeneratorConfig, generate_dataset
from .entropy_budget import (
    CompositionLedger,
    Distribution,
    EntropyLevel,
    EntropyReport,
    allocate_budget,
    classify,
    ledger_spend,
    profile_field,
    shannon_entropy,
)
from .errors import (
    BudgetExhausted,
    DegenerateEntropyError,
    DistributionError,
    EmptyQueryError,
    EntropyDPError,
    FieldKindError,
    ParameterError,
    RowParseError,
    SchemaMismatch,
    ScoreDegenerateError,
    WriteError,
)
from .evaluation import (
    AttackConfig,
    EvaluationReport,
    emit_report,
    evaluate,
    js_divergence,
    kl_divergence,
    reid_attack,
    score_mechanisms,
)
from .mechanisms import (
    clipped_laplace_mean,
    exponential_probabilities,
    exponential_select,
    gaussian_mean,
    histogram_release,
    laplace_counts,
    laplace_mean,
    randomized_response,
    sample_gaussian,
    sample_laplace,
    smooth_sensitivity_mean,
    sparse_vector,
)

__version__ = "0.1.0"
