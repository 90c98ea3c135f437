"""Command line front end.

Subcommands: ``generate`` (write a built-in benchmark table as CSV),
``importance`` (finite-forest scores from one ensemble), ``permtest``
(importance report plus permutation p-values), ``oracle`` (exact asymptotic
scores by subset enumeration, with definition/theorem checks), and
``pairwise`` (network mode over numeric variables).

Every run is deterministic given its flags (including the seed, and for any
``--jobs`` value); outputs carry a metadata header and are only written after
the whole computation succeeds.  Exit codes: 0 success, 2 configuration
error, 3 data error, 4 enumeration guard exceeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import GENERATORS, ColumnSchema, Dataset, load_csv, save_csv
from .errors import ConfigError, CtximpError, DataError
from .forest import RngSpec
from .importance import ImportanceReport, importance_report
from .impurity import ImpurityKind
from .oracle import (JointDistribution, asymptotic_contextual, asymptotic_mdi,
                     characterize_exact, from_dataset, is_context_dependent,
                     is_relevant, load_distribution, verify_theorems)
from .importance import (LABEL_INDEPENDENT, LABEL_IRRELEVANT, LABEL_REDUNDANT,
                         _fmt)
from .pairwise import baseline_pairwise, load_numeric_csv, pairwise_analysis
from .permtest import epsilon_from_null, permutation_pvalues


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_dataset_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--generate", choices=sorted(GENERATORS),
                     help="use a built-in benchmark table")
    src.add_argument("--input", help="CSV file to analyze")
    p.add_argument("--target", help="target column (required with --input)")
    p.add_argument("--context", help="context column name")
    p.add_argument("--numeric-target", action="store_true",
                   help="parse the target column as numeric (variance impurity)")


def _add_run_args(p, trees_default=1000):
    p.add_argument("--trees", type=int, default=trees_default,
                   help=f"number of trees (default {trees_default})")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--impurity", choices=["auto", "entropy", "variance"],
                   default="auto", help="impurity measure (default: by target kind)")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes; the output is identical for any value")


def _add_output_args(p):
    p.add_argument("--outdir", default=".", help="output directory (default .)")
    p.add_argument("--format", choices=["tsv", "text"], default="tsv",
                   help="report format (default tsv)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ctximp",
                     description="Context-dependent variable importances from "
                                 "totally randomized tree ensembles.")
    parser.add_argument("--version", action="version", version=f"ctximp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a built-in benchmark table as CSV")
    p.add_argument("--generator", choices=sorted(GENERATORS), required=True)
    p.add_argument("--output", required=True, help="CSV path to write")

    p = sub.add_parser("importance", help="forest importance report")
    _add_dataset_args(p)
    _add_run_args(p)
    p.add_argument("--epsilon", type=float, default=1e-3,
                   help="characterization cut-off (default 1e-3)")
    p.add_argument("--no-baselines", action="store_true",
                   help="skip the per-context-value baseline forests")
    _add_output_args(p)

    p = sub.add_parser("permtest", help="importance report with permutation p-values")
    _add_dataset_args(p)
    _add_run_args(p)
    p.add_argument("--permutations", type=int, default=1000,
                   help="number of context permutations (default 1000)")
    p.add_argument("--perm-trees", type=int, default=100,
                   help="trees per permutation replicate (default 100)")
    p.add_argument("--reuse-forest", action="store_true",
                   help="score permutations on the observed trees instead of rebuilding")
    p.add_argument("--epsilon", type=float, default=None,
                   help="characterization cut-off (default: 95th percentile "
                        "of the permutation null)")
    p.add_argument("--no-baselines", action="store_true")
    _add_output_args(p)

    p = sub.add_parser("oracle", help="exact asymptotic scores by subset enumeration")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--generate", choices=sorted(GENERATORS))
    src.add_argument("--input", help="CSV file (empirical distribution)")
    src.add_argument("--dist", help="distribution file")
    p.add_argument("--target")
    p.add_argument("--context")
    p.add_argument("--check-definitions", action="store_true",
                   help="report per-variable relevance and dependence conditions")
    _add_output_args(p)

    p = sub.add_parser("pairwise", help="network mode over numeric variables")
    p.add_argument("--input", required=True, help="CSV of numeric columns")
    p.add_argument("--context", required=True, help="categorical context column")
    _add_run_args(p)
    p.add_argument("--permutations", type=int, default=1000)
    p.add_argument("--perm-trees", type=int, default=100)
    p.add_argument("--level", type=float, default=0.05,
                   help="significance level (default 0.05)")
    p.add_argument("--qbins", type=int, default=5,
                   help="quantile bins for discretizing inputs (default 5)")
    p.add_argument("--score", choices=["node", "two-forest"], default="node",
                   help="node-level contextual score or two-ensembles baseline")
    p.add_argument("--context-value", default=None,
                   help="restrict to one context value label")
    p.add_argument("--outdir", default=".")
    return parser


# ---------------------------------------------------------------------------


def _load_dataset(args) -> Dataset:
    if args.generate:
        return GENERATORS[args.generate]()
    if not args.target:
        raise ConfigError("--target is required with --input")
    path = Path(args.input)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    header = path.read_text(encoding="utf-8").splitlines()
    if not header:
        raise DataError(f"empty file: {path}")
    names = header[0].split(",")
    numeric = args.numeric_target or getattr(args, "impurity", "auto") == "variance"
    schema = [ColumnSchema(n, "numeric" if (numeric and n == args.target)
                           else "categorical") for n in names]
    return load_csv(path, schema, args.target, args.context)


def _impurity_kind(args, dataset) -> ImpurityKind | None:
    if args.impurity == "auto":
        return None
    kind = ImpurityKind(args.impurity)
    if kind is ImpurityKind.VARIANCE and dataset.target_kind != "numeric":
        raise ConfigError("variance impurity needs --numeric-target")
    return kind


def _write(outdir: str, stem: str, fmt: str, report: ImportanceReport) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{stem}.{'tsv' if fmt == 'tsv' else 'txt'}"
    path.write_text(report.to_tsv() if fmt == "tsv" else report.to_text(),
                    encoding="utf-8")
    return path


def _check_counts(args):
    for attr in ("trees", "permutations", "perm_trees", "jobs", "qbins"):
        if getattr(args, attr, 1) < 1:
            raise ConfigError(f"--{attr.replace('_', '-')} must be at least 1")


def cmd_generate(args) -> int:
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_csv(GENERATORS[args.generator](), out)
    print(out)
    return 0


def cmd_importance(args) -> int:
    _check_counts(args)
    if args.epsilon is not None and args.epsilon < 0:
        raise ConfigError("--epsilon must be non-negative")
    dataset = _load_dataset(args)
    kind = _impurity_kind(args, dataset)
    report = importance_report(dataset, dataset.input_names, args.trees,
                               RngSpec(args.seed), kind,
                               baselines=dataset.context is not None
                               and not args.no_baselines,
                               jobs=args.jobs)
    if dataset.context is not None:
        report = report.characterize(args.epsilon)
    print(_write(args.outdir, "importance_report", args.format, report))
    return 0


def cmd_permtest(args) -> int:
    _check_counts(args)
    if args.epsilon is not None and args.epsilon < 0:
        raise ConfigError("--epsilon must be non-negative")
    dataset = _load_dataset(args)
    if dataset.context is None:
        raise ConfigError("permtest needs a --context column")
    kind = _impurity_kind(args, dataset)
    spec = RngSpec(args.seed)
    report = importance_report(dataset, dataset.input_names, args.trees, spec,
                               kind, baselines=not args.no_baselines,
                               jobs=args.jobs)
    perm = permutation_pvalues(dataset, dataset.input_names, args.permutations,
                               args.trees, spec, kind,
                               n_trees_null=args.perm_trees,
                               observed_abs=report.abs_scores,
                               reuse_forest=args.reuse_forest,
                               keep_null_scores=True, jobs=args.jobs)
    epsilon = args.epsilon if args.epsilon is not None else epsilon_from_null(perm)
    report = report.with_pvalues(perm.p_values, args.permutations)
    report = report.characterize(epsilon)
    print(_write(args.outdir, "permtest_report", args.format, report))
    return 0


def _oracle_distribution(args) -> JointDistribution:
    if args.dist:
        return load_distribution(args.dist)
    if args.generate:
        return from_dataset(GENERATORS[args.generate]())
    args.numeric_target = False
    args.impurity = "auto"
    return from_dataset(_load_dataset(args))


def _oracle_report(dist: JointDistribution) -> ImportanceReport:
    inputs = dist.inputs
    imp = np.array([asymptotic_mdi(dist, m) for m in inputs])
    if dist.context is None:
        return ImportanceReport(inputs, imp,
                                metadata={"method": "exact-enumeration",
                                          "target": dist.target, "context": "-"})
    kc = dist.arity(dist.context)
    ctx_labels = tuple(str(c) for c in range(kc))
    scores = [[asymptotic_contextual(dist, m, c) for c in range(kc)] for m in inputs]
    signed = np.array([[s.signed for s in row] for row in scores])

    tol = 1e-9
    labels = [[characterize_exact(dist, m, c) for c in range(kc)] for m in inputs]
    # A context-redundant variable whose redundant score matches its overall
    # importance carries no information at all within that context value.
    for i, row in enumerate(scores):
        for c, s in enumerate(row):
            if (labels[i][c] == LABEL_REDUNDANT and abs(s.abs - s.signed) <= tol
                    and abs(s.signed - imp[i]) <= tol):
                labels[i][c] = LABEL_IRRELEVANT
    ranks = np.zeros((len(inputs), kc), dtype=np.int64)
    for c in range(kc):
        affected = [i for i in range(len(inputs)) if labels[i][c] != LABEL_INDEPENDENT]
        for r, i in enumerate(sorted(affected, key=lambda i: signed[i, c])):
            ranks[i, c] = r + 1
    return ImportanceReport(
        variables=inputs,
        importance=imp,
        context_labels=ctx_labels,
        abs_scores=np.array([[s.abs for s in row] for row in scores]),
        signed_scores=signed,
        context_effect=np.array([row[0].global_context for row in scores]),
        baselines=np.array([[s.baseline for s in row] for row in scores]),
        labels=tuple(tuple(row) for row in labels),
        ranks=ranks,
        metadata={"method": "exact-enumeration", "target": dist.target,
                  "context": dist.context},
    )


def _definition_lines(dist: JointDistribution) -> list[str]:
    lines = ["definition checks"]
    for m in dist.inputs:
        verdicts = [f"condition-{c} {'yes' if is_context_dependent(dist, m, c) else 'no'}"
                    for c in (1, 3, 4, 5, 6)]
        lines.append(f"  {m}: relevant {'yes' if is_relevant(dist, m) else 'no'} | "
                     + " | ".join(verdicts))
    return lines


def cmd_oracle(args) -> int:
    dist = _oracle_distribution(args)
    report = _oracle_report(dist)
    out = Path(args.outdir)
    lines = []
    if dist.context is not None:
        check = verify_theorems(dist)
        lines.append("theorem checks")
        lines.append(f"  irrelevant-context-iff-no-dependence "
                     f"{'pass' if check.irrelevant_context_iff_no_dependence else 'FAIL'}")
        lines.append(f"  independence-iff-zero-abs "
                     f"{'pass' if check.independence_iff_zero_abs else 'FAIL'}")
        lines.append(f"  sign-rule-matches-audit "
                     f"{'pass' if check.sign_rule_matches_audit else 'FAIL'}")
        lines.extend(f"  witness: {w}" for w in check.witnesses)
    if args.check_definitions:
        if dist.context is None:
            raise ConfigError("definition checks need a context variable")
        lines.extend(_definition_lines(dist))
    path = _write(args.outdir, "oracle_report", args.format, report)
    print(path)
    if lines:
        checks = out / "oracle_checks.txt"
        checks.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(checks)
    return 0


def cmd_pairwise(args) -> int:
    _check_counts(args)
    genes, values, ctx_codes, ctx_labels = load_numeric_csv(args.input, args.context)
    if args.context_value is not None:
        if args.context_value not in ctx_labels:
            raise ConfigError(f"unknown context value {args.context_value!r}")
        wanted = [ctx_labels.index(args.context_value)]
    else:
        wanted = list(range(len(ctx_labels)))
    run = pairwise_analysis if args.score == "node" else baseline_pairwise
    matrices = [run(values, genes, ctx_codes, xc, args.trees, args.permutations,
                    RngSpec(args.seed), context_labels=ctx_labels,
                    level=args.level, q_bins=args.qbins,
                    n_trees_null=args.perm_trees, jobs=args.jobs)
                for xc in wanted]
    for xc, matrix in zip(wanted, matrices):
        sub = Path(args.outdir) / f"ctx-{ctx_labels[xc]}"
        sub.mkdir(parents=True, exist_ok=True)
        for which in ("absscore", "signed", "pvalue", "significant"):
            (sub / f"matrix_{which}.tsv").write_text(matrix.to_tsv(which),
                                                     encoding="utf-8")
        (sub / "cells.tsv").write_text(matrix.to_long_tsv(), encoding="utf-8")
        print(sub)
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "importance": cmd_importance,
    "permtest": cmd_permtest,
    "oracle": cmd_oracle,
    "pairwise": cmd_pairwise,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except CtximpError as exc:
        print(f"ctximp: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except SystemExit as exc:  # argparse --help/--version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
