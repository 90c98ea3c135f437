"""Pairwise network mode: context-dependent interactions between numeric variables.

Takes each variable in turn as the regression target (variance impurity, raw
numeric values) with all other variables as inputs (quantile-discretized to
categorical codes), computes the contextual importance of every input, and
tests significance by context permutations.  Cell (i, j) of the resulting
matrices scores input j when variable i is the target; diagonals are
undefined.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset, _read_rows
from .errors import ConfigError, DataError
from .forest import RngSpec
from .importance import _fmt, importance_report, per_context_baseline
from .impurity import ImpurityKind
from .permtest import permutation_pvalues


def quantile_discretize(values: np.ndarray, q: int) -> np.ndarray:
    """Codes 0..q-1 by quantile bins; equal values always share a bin."""
    if q < 2:
        raise ConfigError("need at least two quantile bins")
    edges = np.quantile(values, np.arange(1, q) / q)
    return np.searchsorted(edges, values, side="right").astype(np.int64)


def load_numeric_csv(path, context):
    """Read a CSV of numeric columns plus one categorical context column.

    Returns ``(gene_names, values, context_codes, context_labels)`` with
    ``values`` of shape (n_samples, n_genes).
    """
    rows = _read_rows(path)
    header, body = rows[0], rows[1:]
    if len(set(header)) != len(header):
        raise DataError("duplicate column names")
    if context not in header:
        raise DataError(f"context column {context!r} not in header")
    if not body:
        raise DataError("no data rows")
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"row {i + 2} has {len(row)} cells, expected {len(header)}")
        if any(cell == "" for cell in row):
            raise DataError(f"row {i + 2} has an empty cell")
    c_j = header.index(context)
    mapping, labels = {}, []
    ctx_codes = []
    for row in body:
        cell = row[c_j]
        if cell not in mapping:
            mapping[cell] = len(labels)
            labels.append(cell)
        ctx_codes.append(mapping[cell])
    gene_names = [h for h in header if h != context]
    if len(gene_names) < 2:
        raise DataError("need at least two non-context columns")
    cols = []
    for j, name in enumerate(header):
        if j == c_j:
            continue
        try:
            cols.append([float(row[j]) for row in body])
        except ValueError as exc:
            raise DataError(f"column {name!r}: unparsable numeric value ({exc})")
    return (tuple(gene_names), np.array(cols, dtype=np.float64).T,
            np.array(ctx_codes, dtype=np.int64), tuple(labels))


@dataclass(frozen=True)
class InteractionMatrix:
    """Directed interaction scores per (target, input) pair at one context value."""

    genes: tuple[str, ...]
    context_label: str
    level: float
    abs_scores: np.ndarray
    signed_scores: np.ndarray
    p_values: np.ndarray
    significant: np.ndarray
    metadata: dict | None = None

    def __post_init__(self):
        g = len(self.genes)
        for mat in (self.abs_scores, self.signed_scores, self.p_values, self.significant):
            if mat.shape != (g, g):
                raise ConfigError("interaction matrices must be square over the genes")
        off = ~np.eye(g, dtype=bool)
        if not np.all(np.isfinite(self.abs_scores[off])):
            raise ConfigError("non-finite interaction scores")
        if np.any(self.significant[off] != (self.p_values[off] < self.level)):
            raise ConfigError("significance flags disagree with the level")

    def _matrix_tsv(self, values, fmt) -> str:
        lines = ["gene\t" + "\t".join(self.genes)]
        for i, name in enumerate(self.genes):
            cells = [fmt(values[i, j]) if i != j else "-"
                     for j in range(len(self.genes))]
            lines.append(name + "\t" + "\t".join(cells))
        meta = [f"# context value: {self.context_label}",
                f"# significance level: {_fmt(self.level)}"]
        for k, v in (self.metadata or {}).items():
            meta.append(f"# {k}: {v}")
        return "\n".join(meta + lines) + "\n"

    def to_tsv(self, which: str) -> str:
        """Matrix TSV for one of absscore, signed, pvalue, significant."""
        mats = {"absscore": (self.abs_scores, _fmt),
                "signed": (self.signed_scores, _fmt),
                "pvalue": (self.p_values, _fmt),
                "significant": (self.significant, lambda v: "1" if v else "0")}
        values, fmt = mats[which]
        return self._matrix_tsv(values, fmt)

    def to_long_tsv(self) -> str:
        """Long-format cell list: one row per directed (target, input) pair."""
        lines = [f"# context value: {self.context_label}",
                 "target\tinput\tabs\tsigned\tpvalue\tsignificant"]
        for i, ti in enumerate(self.genes):
            for j, gj in enumerate(self.genes):
                if i == j:
                    continue
                lines.append("\t".join([
                    ti, gj, _fmt(self.abs_scores[i, j]),
                    _fmt(self.signed_scores[i, j]), _fmt(self.p_values[i, j]),
                    "1" if self.significant[i, j] else "0"]))
        return "\n".join(lines) + "\n"


def _target_dataset(values, gene_names, discretized, ctx_codes, ctx_labels, i):
    """Dataset with gene i as numeric target and the rest as categorical inputs."""
    names = ("_context",) + tuple(n for n in gene_names if n != gene_names[i]) \
        + (gene_names[i],)
    codes = {"_context": ctx_codes}
    labels = {"_context": ctx_labels}
    for j, name in enumerate(gene_names):
        if j == i:
            continue
        codes[name] = discretized[j]
        labels[name] = tuple(f"q{b}" for b in range(int(discretized[j].max()) + 1))
    return Dataset(names, codes, labels, gene_names[i], "_context",
                   numeric_values={gene_names[i]: values[:, i]})


def _common_checks(values, gene_names, context_codes, x_c, level):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != len(gene_names):
        raise ConfigError("values must be (n_samples, n_genes)")
    if len(gene_names) < 2:
        raise DataError("need at least two non-context variables")
    if not 0 < level < 1:
        raise ConfigError("significance level must lie in (0, 1)")
    kc = int(np.max(context_codes)) + 1
    if not 0 <= x_c < kc:
        raise DataError(f"unknown context code {x_c}")
    return values, kc


def pairwise_analysis(values, gene_names, context_codes, x_c: int,
                      n_trees: int, n_permutations: int, rng_spec: RngSpec, *,
                      context_labels=None, level: float = 0.05, q_bins: int = 5,
                      n_trees_null: int | None = None, jobs: int = 1) -> InteractionMatrix:
    """Node-level contextual interaction matrix with permutation significance.

    For each target variable a forest of totally randomized trees is grown on
    the quantile-discretized inputs (variance impurity on the raw numeric
    target); the absolute and signed contextual scores of every input are
    computed at context value ``x_c`` and the absolute score's permutation
    p-value decides significance at ``level``.
    """
    gene_names = tuple(gene_names)
    context_codes = np.asarray(context_codes, dtype=np.int64)
    values, kc = _common_checks(values, gene_names, context_codes, x_c, level)
    ctx_labels = (tuple(context_labels) if context_labels is not None
                  else tuple(str(c) for c in range(kc)))
    discretized = [quantile_discretize(values[:, j], q_bins)
                   for j in range(len(gene_names))]

    g = len(gene_names)
    absm = np.full((g, g), np.nan)
    sgnm = np.full((g, g), np.nan)
    pm = np.full((g, g), np.nan)
    for i in range(g):
        ds = _target_dataset(values, gene_names, discretized, context_codes,
                             ctx_labels, i)
        spec = rng_spec.child("target", i)
        report = importance_report(ds, ds.input_names, n_trees, spec,
                                   ImpurityKind.VARIANCE, jobs=jobs)
        perm = permutation_pvalues(ds, ds.input_names, n_permutations, n_trees,
                                   spec, ImpurityKind.VARIANCE,
                                   n_trees_null=n_trees_null,
                                   observed_abs=report.abs_scores, jobs=jobs)
        others = [j for j in range(g) if j != i]
        absm[i, others] = report.abs_scores[:, x_c]
        sgnm[i, others] = report.signed_scores[:, x_c]
        pm[i, others] = perm.p_values[:, x_c]
    sig = np.zeros((g, g), dtype=bool)
    off = ~np.eye(g, dtype=bool)
    sig[off] = pm[off] < level
    return InteractionMatrix(gene_names, ctx_labels[x_c], level, absm, sgnm, pm,
                             sig, {"score": "node-contextual", "trees": str(n_trees),
                                   "permutations": str(n_permutations),
                                   "seed": str(rng_spec.seed)})


def baseline_pairwise(values, gene_names, context_codes, x_c: int,
                      n_trees: int, n_permutations: int, rng_spec: RngSpec, *,
                      context_labels=None, level: float = 0.05, q_bins: int = 5,
                      n_trees_null: int | None = None, jobs: int = 1) -> InteractionMatrix:
    """Two-ensembles baseline: score = importance minus within-context importance.

    The score of input j for target i is the difference between the plain
    importance (all samples) and the importance from a fresh forest on the
    ``x_c`` slice.  Significance is two-sided on the absolute difference.
    This baseline explores different conditionings in its two ensembles and
    is less sensitive than the node-level score of :func:`pairwise_analysis`.
    """
    gene_names = tuple(gene_names)
    context_codes = np.asarray(context_codes, dtype=np.int64)
    values, kc = _common_checks(values, gene_names, context_codes, x_c, level)
    ctx_labels = (tuple(context_labels) if context_labels is not None
                  else tuple(str(c) for c in range(kc)))
    discretized = [quantile_discretize(values[:, j], q_bins)
                   for j in range(len(gene_names))]
    n_null = n_trees if n_trees_null is None else n_trees_null

    def two_forest_score(ds, spec, trees):
        rep = importance_report(ds, ds.input_names, trees, spec,
                                ImpurityKind.VARIANCE, jobs=jobs)
        base = per_context_baseline(ds, x_c, trees, spec, ImpurityKind.VARIANCE)
        return rep.importance - base

    g = len(gene_names)
    sgnm = np.full((g, g), np.nan)
    pm = np.full((g, g), np.nan)
    for i in range(g):
        ds = _target_dataset(values, gene_names, discretized, context_codes,
                             ctx_labels, i)
        spec = rng_spec.child("target", i)
        observed = two_forest_score(ds, spec, n_trees)
        null = np.empty((n_permutations, len(ds.input_names)))
        for r in range(n_permutations):
            permuted = ds.replace_codes(
                "_context",
                ds.codes("_context")[spec.stream("perm", r).permutation(ds.n_samples)])
            null[r] = two_forest_score(permuted, spec.child("forest", r), n_null)
        hits = (np.abs(null) >= np.abs(observed)[None, :]).sum(axis=0)
        pvals = (hits + 1.0) / (n_permutations + 1.0)
        others = [j for j in range(g) if j != i]
        sgnm[i, others] = observed
        pm[i, others] = pvals
    sig = np.zeros((g, g), dtype=bool)
    off = ~np.eye(g, dtype=bool)
    sig[off] = pm[off] < level
    return InteractionMatrix(gene_names, ctx_labels[x_c], level, np.abs(sgnm),
                             sgnm, pm, sig,
                             {"score": "two-forest-difference", "trees": str(n_trees),
                              "permutations": str(n_permutations),
                              "seed": str(rng_spec.seed)})
