#!/usr/bin/env python3
import argparse
import logging
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from solk.common import (
    CONFIG_PATH,
    CORPUS_DIR,
    EXIT_AXIOM,
    EXIT_OK,
    EXIT_RESOURCE,
    EXIT_USAGE,
    SolkError,
    dump_json,
    format_fraction,
    load_config_json,
    parse_int_vector,
    parse_rational,
    setup_logging,
)
from solk.dimension_group import DGElement, dg_positive, make_dimension_group, state
from solk.exact_linalg import IntMatrix
from solk.ktheory import full_report, render_report_text
from solk.oracle import (
    SUBJECTS,
    oracle_bracket,
    oracle_cokernel,
    oracle_orientable,
    oracle_positivity,
    oracle_snf,
)
from solk.presentation import adjacency_matrix, check_axioms, load_presentation
from solk.smale import (
    build_model,
    check_bracket_identities,
    random_point,
    random_stable_pair,
    random_unstable_pair,
    stable_contraction_check,
    unstable_contraction_check,
)
from solk.spectral import edge_measures, perron_vectors

logger = logging.getLogger(__name__)

PRECISION_ENV = "SOLK_PRECISION"
FIB_MATRIX = IntMatrix.from_rows([[2, 1], [1, 1]])
RESOURCE_KINDS = {"ResourceCapError", "PrecisionError"}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    precision: str = "1e-30"
    nonfolding_bound: int = Field(8, ge=1)
    positivity_bound: int = Field(64, ge=1)
    smale_depth: int = Field(30, ge=1)
    smale_samples: int = Field(200, ge=1)
    smale_prec_bits: int = Field(192, ge=64)
    filtration_depth: int = Field(6, ge=1)
    word_length_cap: int = Field(1_000_000, ge=1)
    oracle_trials: int = Field(100, ge=1)
    seed: int = 7
    output: Literal["text", "json"] = "text"
    workers: int = Field(4, ge=1)

    @field_validator("precision")
    @classmethod
    def _positive_precision(cls, value: str) -> str:
        if parse_rational(value) <= 0:
            raise ValueError("precision must be a positive rational")
        return value

    @property
    def eps(self) -> Fraction:
        return parse_rational(self.precision)

    @property
    def as_json(self) -> bool:
        return self.output == "json"


def load_run_config(path=None, overrides=None) -> RunConfig:
    """config file < SOLK_PRECISION < command-line flags."""
    payload = {}
    source = Path(path) if path else CONFIG_PATH
    if source.exists():
        payload.update(load_config_json(source))
    elif path:
        raise SolkError(f"config file not found: {path}")
    if os.getenv(PRECISION_ENV):
        payload["precision"] = os.environ[PRECISION_ENV]
    payload.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig(**payload)
    except ValidationError as e:
        raise SolkError(f"invalid configuration: {e}") from e


def emit(config: RunConfig, payload, text: str):
    print(dump_json(payload) if config.as_json else text)


# ---------------------------------------------------------------- commands


def cmd_check(args, config: RunConfig) -> int:
    P = load_presentation(args.file)
    report = check_axioms(P, config.nonfolding_bound, config.word_length_cap)
    lines = [f"{args.file}: {'pass' if report.passed else 'FAIL'}"]
    lines.extend(f"  {f}" for f in report.failures())
    if not report.orientation.orientable:
        lines.append("  parity conflict: " + ", ".join(str(c) for c in report.orientation.witness))
    if report.nonfolding.status == "fails":
        nf = report.nonfolding
        lines.append(f"  cancelling pairs in f^{nf.iterate}({nf.edge}): {list(nf.pairs)}")
    emit(config, report.to_json(), "\n".join(lines))
    return EXIT_OK if report.passed else EXIT_AXIOM


def cmd_ktheory(args, config: RunConfig) -> int:
    P = load_presentation(args.file)
    report = full_report(
        P,
        eps=config.eps,
        bound=config.nonfolding_bound,
        depth=config.filtration_depth,
        cap=config.word_length_cap,
    )
    emit(config, report.model_dump(mode="json"), render_report_text(report))
    if report.axioms is not None and not report.axioms["passed"]:
        return EXIT_AXIOM
    if any(e.kind in RESOURCE_KINDS for e in report.errors):
        return EXIT_RESOURCE
    return EXIT_USAGE if report.errors else EXIT_OK


def cmd_perron(args, config: RunConfig) -> int:
    P = load_presentation(args.file)
    data = perron_vectors(adjacency_matrix(P), config.eps)
    measures = edge_measures(P, config.eps)
    payload = data.to_json()
    payload["edge_measures"] = {e: m.to_json() for e, m in zip(P.edges, measures)}
    lines = [f"lambda = {data.lam}" + (" (exact)" if data.exact else "")]
    lines.extend(f"  {e}: v = {v}, w = {w}" for e, v, w in zip(P.edges, data.v, data.w))
    emit(config, payload, "\n".join(lines))
    return EXIT_OK


def cmd_state(args, config: RunConfig) -> int:
    P = load_presentation(args.file)
    G = make_dimension_group(adjacency_matrix(P), config.eps)
    element = DGElement(parse_int_vector(args.element), args.stage)
    value = state(G, element, config.eps)
    sign = dg_positive(G, element, config.positivity_bound)
    exact = format_fraction(value.lo) if value.is_exact else None
    payload = {
        "group": G.to_json(),
        "element": element.to_json(),
        "state": value.to_json(),
        "exact": exact,
        "positivity": sign.to_json(),
    }
    text = f"state = {value.decimal()} [{format_fraction(value.lo)}, {format_fraction(value.hi)}]"
    if exact is not None:
        text = f"state = {exact} (exact)"
    emit(config, payload, f"{text}\npositivity: {sign}")
    return EXIT_OK


def cmd_smale(args, config: RunConfig) -> int:
    P = load_presentation(args.file)
    model = build_model(P, config.eps, config.smale_prec_bits)
    rng = random.Random(config.seed)
    depth = config.smale_depth
    sample = random_point(model, rng, depth)
    identities = check_bracket_identities(model, rng, config.smale_samples, depth)
    stable = [stable_contraction_check(model, *random_stable_pair(model, rng, depth)) for _ in range(5)]
    unstable = [unstable_contraction_check(model, *random_unstable_pair(model, rng, depth)) for _ in range(5)]
    ok = identities.ok and all(r.within_bound for r in stable + unstable)
    ctx = model.ctx
    payload = {
        "lambda": model.perron.lam.to_json(),
        "depth": depth,
        "tail_bound": ctx.nstr(model.tail_bound(depth), 8),
        "sample_point": sample.to_json(ctx),
        "identities": identities.to_json(ctx),
        "stable_contraction": [r.to_json(ctx) for r in stable],
        "unstable_contraction": [r.to_json(ctx) for r in unstable],
        "ok": ok,
    }
    lines = [
        f"lambda = {model.perron.lam}, depth {depth}, certified {identities.certified}/{identities.samples}",
        *(f"  {name}: {count} failures" for name, count in identities.failures.items()),
        f"  stable contraction max ratio: {ctx.nstr(max(r.max_ratio for r in stable), 10)}",
        f"  unstable contraction max ratio: {ctx.nstr(max(r.max_ratio for r in unstable), 10)}",
        f"  bound: {ctx.nstr(model.contraction, 10)}",
    ]
    emit(config, payload, "\n".join(lines))
    return EXIT_OK if ok else EXIT_AXIOM


def cmd_oracle(args, config: RunConfig) -> int:
    rng = random.Random(config.seed)
    trials = args.trials or config.oracle_trials
    P = load_presentation(args.file) if args.file else None
    if args.subject == "snf":
        verdict = oracle_snf(rng, trials)
    elif args.subject == "cokernel":
        extra = []
        if P is not None:
            M = adjacency_matrix(P)
            extra.append(IntMatrix.identity(M.rows) - M)
        verdict = oracle_cokernel(rng, trials, matrices=extra)
    elif args.subject == "positivity":
        M = adjacency_matrix(P) if P is not None else FIB_MATRIX
        verdict = oracle_positivity(M, rng, trials, config.positivity_bound)
    elif args.subject == "bracket":
        if P is None:
            raise SolkError("oracle bracket needs a presentation file")
        model = build_model(P, config.eps, config.smale_prec_bits)
        verdict = oracle_bracket(model, rng, trials, config.smale_depth)
    else:
        verdict = oracle_orientable(rng, trials, presentations=[P] if P is not None else None)
    text = f"oracle {verdict.subject}: {'agree' if verdict.ok else 'DISAGREE'} " \
           f"({verdict.agreed}/{verdict.checked} agreed, {verdict.exhausted} exhausted)"
    text = "\n".join([text, *(f"  {d}" for d in verdict.disagreements), *(f"  {n}" for n in verdict.notes)])
    emit(config, verdict.to_json(), text)
    return EXIT_OK if verdict.ok else EXIT_AXIOM


def _corpus_one(path: Path, config: RunConfig):
    try:
        P = load_presentation(path)
        return full_report(P, config.eps, config.nonfolding_bound, config.filtration_depth, config.word_length_cap), None
    except SolkError as e:
        return None, str(e)


def _summary(name: str, report, error: Optional[str]) -> str:
    if report is None:
        return f"{name}: error: {error}"
    if report.Ru is None:
        reason = "not orientable" if report.axioms and report.axioms["orientable"]["status"] == "no" else "axioms fail"
        return f"{name}: skipped ({reason})"
    text = render_report_text(report).splitlines()
    groups = [line for line in text if line.startswith(("U:", "Ru:", "Rs:"))]
    checks = "ok" if report.duality_check and report.closed_form_check and report.transpose_check else "MISMATCH"
    return f"{name}: " + " | ".join(groups) + f" | checks {checks}"


def cmd_corpus(args, config: RunConfig) -> int:
    directory = Path(args.directory or CORPUS_DIR)
    files = sorted(directory.glob("*.sol"))
    if not files:
        raise SolkError(f"no *.sol files in {directory}")
    with ThreadPoolExecutor(max_workers=config.workers) as ex:
        results = list(ex.map(lambda p: _corpus_one(p, config), files))
    payload = {}
    lines = []
    failed = False
    for path, (report, error) in zip(files, results):
        payload[path.name] = report.model_dump(mode="json") if report is not None else {"error": error}
        lines.append(_summary(path.name, report, error))
        failed = failed or report is None
    emit(config, payload, "\n".join(lines))
    return EXIT_USAGE if failed else EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit JSON instead of text")
    common.add_argument("--precision", help="interval width, e.g. 1e-30 or 1/1000")
    common.add_argument("--depth", type=int, help="Smale depth and stable filtration depth")
    common.add_argument("--seed", type=int)
    common.add_argument("--bound", type=int, help="nonfolding and positivity iteration bound")
    common.add_argument("--workers", type=int)
    common.add_argument("--config", help=f"config file (default {CONFIG_PATH})")
    common.add_argument("--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="solk", description="K-theory of one-dimensional generalized solenoids")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, func, help_text in (
        ("check", cmd_check, "check the axioms of a presentation"),
        ("ktheory", cmd_ktheory, "full K-theory report"),
        ("perron", cmd_perron, "Perron root, eigenvectors and edge measures"),
        ("smale", cmd_smale, "sampled Smale space identities"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("file")
        p.set_defaults(func=func)

    p = sub.add_parser("state", parents=[common], help="state of a dimension group element")
    p.add_argument("file")
    p.add_argument("--element", required=True, help="integer vector, e.g. 1,0")
    p.add_argument("--stage", type=int, default=0)
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("oracle", parents=[common], help="brute-force cross-checks")
    p.add_argument("subject", choices=SUBJECTS)
    p.add_argument("file", nargs="?")
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("corpus", parents=[common], help="full report for every *.sol file in a directory")
    p.add_argument("directory", nargs="?")
    p.set_defaults(func=cmd_corpus)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    overrides = {
        "precision": args.precision,
        "seed": args.seed,
        "workers": args.workers,
        "output": "json" if args.json else None,
    }
    if args.depth is not None:
        overrides.update(smale_depth=args.depth, filtration_depth=args.depth)
    if args.bound is not None:
        overrides.update(nonfolding_bound=args.bound, positivity_bound=args.bound)
    try:
        config = load_run_config(args.config, overrides)
        return args.func(args, config)
    except SolkError as e:
        print(f"solk: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
