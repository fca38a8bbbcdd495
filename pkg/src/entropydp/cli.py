"""``entropydp`` command line: generate, profile, protect, evaluate, report.

Every failure ends with one JSON line on stderr
(``{"error": ..., "message": ..., "exit_code": ...}``).  Exit codes: 0 success,
1 data or I/O error, 2 usage error, 3 privacy budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .core import (
    FIELD_NAMES,
    PATIENT_SCHEMA,
    Dataset,
    FieldKind,
    Mechanism,
    PrivacyBudget,
    RandomSource,
    default_delta,
    load_dataset,
    save_dataset,
)
from .datagen import GeneratorConfig, generate_dataset
from .entropy_budget import CompositionLedger, allocate_budget, profile_field
from .errors import BudgetExhausted, EntropyDPError, WriteError
from .evaluation import DEFAULT_SIZES, emit_report, evaluate, evaluate_dataset, load_report, render_markdown
from .releases import FIELD_MECHANISMS, HOME_FIELD, MEAN_MECHANISMS, MECHANISM_NAMES, release

log = logging.getLogger("entropydp")

SEED_ENV = "ENTROPYDP_SEED"
DEFAULT_SEED = 42

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3


class UsageError(Exception):
    """Bad flags or flag combinations; maps to exit status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _env_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0 or math.isnan(value):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _size(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"size must be at least 1: {text!r}")
    return value


def _sizes(text: str) -> list[int]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise argparse.ArgumentTypeError("empty size list")
    return [_size(p) for p in parts]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="entropydp", description="Entropy-aware differential privacy toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, data_in=True):
        p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or {DEFAULT_SEED})")
        p.add_argument("--epsilon", type=_positive_float, default=1.0, help="privacy level (default 1.0)")
        p.add_argument("--delta", type=float, default=None, help="failure probability (default auto: < 1/n)")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        if data_in:
            p.add_argument("input", nargs="?", default=None, help="dataset file (csv or json)")
            p.add_argument("--in", dest="in_path", default=None, help="dataset file (same as positional)")

    g = sub.add_parser("generate", help="write a synthetic patient dataset")
    g.add_argument("--size", type=_size, default=1000)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", required=True)
    g.add_argument("--format", choices=("csv", "json"), default=None, help="default: from the file suffix")

    p = sub.add_parser("profile", help="per-field entropy, level, risk and budget shares")
    common(p)
    p.add_argument("--field", action="append", default=None, help="field to profile (repeatable)")
    p.add_argument("--format", choices=("json", "csv", "markdown"), default="json")

    pr = sub.add_parser("protect", help="apply one or all mechanisms and write the releases")
    common(pr)
    pr.add_argument("--mechanism", required=True, choices=sorted(MECHANISM_NAMES) + ["all"])
    pr.add_argument("--field", default=None, help="override the mechanism's home field (needs --force)")
    pr.add_argument("--force", action="store_true", help="allow a field outside the standard mapping")
    pr.add_argument("--budget", type=_positive_float, default=None, help="total epsilon for the run")
    pr.add_argument("--format", choices=("json",), default="json")

    e = sub.add_parser("evaluate", help="run the privacy/utility evaluation")
    common(e)
    sizes = e.add_mutually_exclusive_group()
    sizes.add_argument("--size", type=_size, default=None)
    sizes.add_argument("--sizes", type=_sizes, default=None, help="comma-separated, e.g. 1000,31000,131000")
    e.add_argument("--format", choices=("json", "csv", "markdown"), default="json")

    r = sub.add_parser("report", help="render a saved evaluation JSON")
    r.add_argument("input", nargs="?", default=None)
    r.add_argument("--in", dest="in_path", default=None)
    r.add_argument("--out", default=None)
    r.add_argument("--format", choices=("json", "csv", "markdown"), default="markdown")
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _input_path(args) -> Optional[Path]:
    if args.input is not None and args.in_path is not None and args.input != args.in_path:
        raise UsageError("give the input file either positionally or with --in, not both")
    raw = args.in_path if args.in_path is not None else args.input
    if raw is None:
        return None
    if not raw.strip():
        raise UsageError("input path is empty")
    path = Path(raw)
    if not path.is_file():
        raise UsageError(f"input file not found: {raw}")
    return path


def _format_of(path: Path, explicit: Optional[str] = None) -> str:
    if explicit:
        return explicit
    return "json" if path.suffix.lower() == ".json" else "csv"


def _load(args, required: bool = True) -> Optional[Dataset]:
    path = _input_path(args)
    if path is None:
        if required:
            raise UsageError(f"{args.command} needs an input dataset (positional or --in)")
        return None
    return load_dataset(path, _format_of(path))


def _seed(args) -> int:
    seed = args.seed if args.seed is not None else _env_seed()
    if not 0 <= seed < 2**64:
        raise UsageError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _delta_for(args, n: int) -> float:
    if args.delta is None:
        return default_delta(n)
    if not 0 <= args.delta < 1:
        raise UsageError(f"delta must lie in [0, 1), got {args.delta}")
    if n > 0 and args.delta >= 1.0 / n:
        log.warning("delta=%g is not below 1/n = %g; the guarantee is weak", args.delta, 1.0 / n)
    return args.delta


def _write_text(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise WriteError(f"cannot write {out}: {exc}") from exc


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    out = Path(args.out)
    d = generate_dataset(GeneratorConfig(n=args.size, seed=_seed(args)))
    save_dataset(d, out, _format_of(out, args.format))
    log.info("wrote %d records to %s", d.size, out)
    return EXIT_OK


def cmd_profile(args) -> int:
    d = _load(args)
    stored = [f.name for f in PATIENT_SCHEMA if f.kind is not FieldKind.INTEGER]
    fields = args.field or stored
    unknown = [f for f in fields if f not in FIELD_NAMES or f == "id"]
    if unknown:
        raise UsageError(f"cannot profile {unknown}; choose from {stored}")
    reports = [profile_field(d, f) for f in fields]
    allocation = allocate_budget(reports, args.epsilon)
    if args.format == "json":
        text = _dump({"fields": [r.to_dict() for r in reports], "allocation": allocation.to_dict()})
    else:
        rows = [
            (r.field, f"{r.entropy_bits:.6f}", r.level.value, r.risk.value, r.support_size,
             f"{allocation.per_field.get(r.field, 0.0):.6f}")
            for r in reports
        ]
        header = ("Field", "Entropy (bits)", "Entropy Level", "Risk", "Distinct Values", "Epsilon Share")
        if args.format == "csv":
            text = "\n".join(",".join(map(str, row)) for row in [header, *rows]) + "\n"
        else:
            lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
            lines += ["| " + " | ".join(map(str, row)) + " |" for row in rows]
            text = "\n".join(lines) + "\n"
    _write_text(text, args.out)
    return EXIT_OK


def cmd_protect(args) -> int:
    d = _load(args)
    kinds = list(FIELD_MECHANISMS + MEAN_MECHANISMS) if args.mechanism == "all" else [MECHANISM_NAMES[args.mechanism]]
    if args.field is not None:
        if len(kinds) > 1:
            raise UsageError("--field cannot be combined with --mechanism all")
        home = HOME_FIELD[kinds[0]]
        if args.field != home and not args.force:
            raise UsageError(
                f"{kinds[0].value} is mapped to {home}, not {args.field}; pass --force to override"
            )
    delta = _delta_for(args, d.size)
    budget = args.budget if args.budget is not None else args.epsilon * len(kinds)
    ledger = CompositionLedger(budget)
    rng = RandomSource(_seed(args)).child("protect")
    releases = []
    for kind in kinds:
        ledger.spend(kind.value, PrivacyBudget(args.epsilon, delta if kind is Mechanism.GAUSSIAN else 0.0))
        rel = release(d, kind, args.epsilon, rng, delta=delta, field=args.field)
        releases.append(rel)
        if "flip_fraction" in rel.metadata:
            log.info("randomized response flip fraction %.4f", rel.metadata["flip_fraction"])
    payload = {
        "seed": _seed(args),
        "dataset_size": d.size,
        "ledger": {"total_epsilon": ledger.total_epsilon, "spent": ledger.spent, "delta_spent": ledger.delta_spent},
        "releases": [r.to_dict() for r in releases],
    }
    # compact: bit-vector payloads would otherwise take one line per record
    _write_text(json.dumps(payload, separators=(",", ":"), ensure_ascii=False) + "\n", args.out)
    for r in releases:
        if "flip_fraction" in r.metadata:
            print(f"flip_fraction={r.metadata['flip_fraction']:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    seed = _seed(args)
    if args.delta is not None and not 0 <= args.delta < 1:
        raise UsageError(f"delta must lie in [0, 1), got {args.delta}")
    d = _load(args, required=False)
    if args.in_path is not None or args.input is not None:
        if args.size is not None or args.sizes is not None:
            raise UsageError("--size/--sizes cannot be combined with an input dataset")
        if d.size < 2:
            raise UsageError("input dataset needs at least two records")
        _delta_for(args, d.size)
        rep = evaluate_dataset(d, seed, args.epsilon, args.delta)
    else:
        sizes = [args.size] if args.size is not None else (args.sizes or list(DEFAULT_SIZES))
        for n in sizes:
            _delta_for(args, n)
        rep = evaluate(sizes, seed, args.epsilon, args.delta)
    return _emit(rep, args)


def cmd_report(args) -> int:
    path = _input_path(args)
    if path is None:
        raise UsageError("report needs an evaluation JSON (positional or --in)")
    try:
        rep = load_report(path)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{path} is not an evaluation report: {exc}") from exc
    return _emit(rep, args)


def _emit(rep, args) -> int:
    fmt = {"csv": "csv-bundle"}.get(args.format, args.format)
    if args.out is None:
        if fmt == "csv-bundle":
            raise UsageError("--format csv writes a directory of files; give --out")
        _write_text(_dump(rep.to_dict()) if fmt == "json" else render_markdown(rep), None)
    else:
        emit_report(rep, args.out, fmt)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "profile": cmd_profile,
    "protect": cmd_protect,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("UsageError", str(exc), EXIT_USAGE)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("UsageError", str(exc), EXIT_USAGE)
    except BudgetExhausted as exc:
        return _fail("BudgetExhausted", str(exc), EXIT_BUDGET)
    except EntropyDPError as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_ERROR)


if __name__ == "__main__":
    sys.exit(main())
