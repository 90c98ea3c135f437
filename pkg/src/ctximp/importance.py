"""Forest-based importance scores and their contextual variants.

All scores are averages over trees of per-node contributions weighted by
``p(t)``, the fraction of all samples reaching the node:

* ``importance`` (mean decrease impurity): sum of ``p(t) * G(t)`` over the
  nodes splitting on a variable, where ``G(t)`` is the node's impurity
  decrease.
* ``signed`` contextual score: ``p(t) * (G(t) - G(t | context=c))`` with the
  conditional decrease computed from the node's rows in context ``c`` (an
  empty slice contributes 0).  Negative values mean the variable is more
  informative inside the context (complementary), positive values less
  (redundant).
* ``abs`` contextual score: same with the absolute difference per node; it is
  nonzero for exactly the variables whose information content the context
  changes somewhere in the tree.
* ``context effect``: ``p(t) * (G(t) - avg_c G(t | context=c))`` with the
  average weighted by within-node context proportions.

The same forest (built without the context among its inputs) serves all
context values.  Per-tree contributions are accumulated in tree order and
reduced deterministically, so reports are byte-reproducible for a given
seed, including under multi-process execution.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dataset import CATEGORICAL, Dataset
from .errors import ConfigError, DataError
from .forest import Forest, RngSpec, TreeNode, build_tree
from .impurity import ImpurityKind, kind_for, nlog2n

LABEL_INDEPENDENT = "context-independent"
LABEL_COMPLEMENTARY = "context-complementary"
LABEL_REDUNDANT = "context-redundant"
LABEL_IRRELEVANT = "irrelevant-in-context"
LABEL_MIXED = "mixed"

SIGNIFICANCE_LEVEL = 0.05  # marker threshold in serialized reports

IDENTITY_TOL = 1e-12


class _NodeScorer:
    """Per-node impurity decreases, overall and per context value.

    Precomputes fused code arrays so that one ``bincount`` per node yields
    the full (context, split value, target) contingency cube.
    """

    def __init__(self, dataset: Dataset, inputs, kind: ImpurityKind):
        self.inputs = tuple(inputs)
        self.index = {name: i for i, name in enumerate(self.inputs)}
        self.kind = ImpurityKind(kind)
        self.n_total = dataset.n_samples
        self.kc = dataset.context_arity() if dataset.context is not None else 1
        ctx = (dataset.codes(dataset.context) if dataset.context is not None
               else np.zeros(dataset.n_samples, dtype=np.int64))
        self.arities = [dataset.arity(name) for name in self.inputs]
        if self.kind is ImpurityKind.ENTROPY:
            y = dataset.codes(dataset.target)
            self.ky = dataset.arity(dataset.target)
            self.fused = [(ctx * kv + dataset.codes(name)) * self.ky + y
                          for name, kv in zip(self.inputs, self.arities)]
            self.y = None
        else:
            self.y = dataset.numeric(dataset.target)
            self.ysq = self.y * self.y
            self.fused = [ctx * kv + dataset.codes(name)
                          for name, kv in zip(self.inputs, self.arities)]

    @staticmethod
    def _g_from_cube(cube: np.ndarray, n: np.ndarray) -> np.ndarray:
        # G = (n*log2(n) - sum_y f(N_y) - sum_v f(N_v) + sum_vy f(N_vy)) / n
        # with f(a) = a*log2(a); rows of `cube` are (value, target) tables.
        phi = (nlog2n(n) - nlog2n(cube.sum(axis=-2)).sum(axis=-1)
               - nlog2n(cube.sum(axis=-1)).sum(axis=-1)
               + nlog2n(cube).sum(axis=(-2, -1)))
        return np.where(n > 0, phi / np.maximum(n, 1.0), 0.0)

    def _entropy_scores(self, var: int, idx: np.ndarray):
        kv = self.arities[var]
        cube = np.bincount(self.fused[var][idx],
                           minlength=self.kc * kv * self.ky).astype(np.float64)
        cube = cube.reshape(self.kc, kv, self.ky)
        n_c = cube.sum(axis=(1, 2))
        stacked = np.concatenate([cube.sum(axis=0)[None], cube])
        g = self._g_from_cube(stacked, np.concatenate([[idx.size], n_c]))
        return float(g[0]), g[1:], n_c

    @staticmethod
    def _g_from_moments(n, s1, s2):
        # Variance decrease: var(parent) - sum_v (n_v/n) var(child_v), with
        # per-child population variances from (count, sum, sum of squares).
        nt = n.sum(axis=-1)
        safe_nt = np.maximum(nt, 1.0)
        parent = np.maximum(s2.sum(axis=-1) / safe_nt
                            - (s1.sum(axis=-1) / safe_nt) ** 2, 0.0)
        safe_n = np.maximum(n, 1.0)
        child = np.maximum(s2 / safe_n - (s1 / safe_n) ** 2, 0.0)
        return np.where(nt > 0, parent - (n * child).sum(axis=-1) / safe_nt, 0.0)

    def _variance_scores(self, var: int, idx: np.ndarray):
        kv = self.arities[var]
        size = self.kc * kv
        fused = self.fused[var][idx]
        n = np.bincount(fused, minlength=size).astype(np.float64).reshape(self.kc, kv)
        s1 = np.bincount(fused, weights=self.y[idx], minlength=size).reshape(self.kc, kv)
        s2 = np.bincount(fused, weights=self.ysq[idx], minlength=size).reshape(self.kc, kv)
        g = self._g_from_moments(np.concatenate([n.sum(axis=0)[None], n]),
                                 np.concatenate([s1.sum(axis=0)[None], s1]),
                                 np.concatenate([s2.sum(axis=0)[None], s2]))
        return float(g[0]), g[1:], n.sum(axis=1)

    def node_scores(self, var: int, idx: np.ndarray):
        """(overall decrease, per-context decreases, per-context counts)."""
        if self.kind is ImpurityKind.ENTROPY:
            return self._entropy_scores(var, idx)
        return self._variance_scores(var, idx)


class _Accumulator:
    """Sums per-node contributions of one tree into a flat score vector.

    Layout of the vector for n inputs and kc context values:
    ``[importance (n) | abs (n*kc) | signed (n*kc) | context effect (n)]``.
    """

    def __init__(self, scorer: _NodeScorer, check_identities: bool = False):
        self.scorer = scorer
        self.check = check_identities
        n, kc = len(scorer.inputs), scorer.kc
        self.width = n * (2 + 2 * kc)
        self._imp = slice(0, n)
        self._abs = slice(n, n + n * kc)
        self._sgn = slice(n + n * kc, n + 2 * n * kc)
        self._eff = slice(n + 2 * n * kc, self.width)

    def tree_vector(self, root: TreeNode) -> np.ndarray:
        scorer = self.scorer
        n, kc = len(scorer.inputs), scorer.kc
        imp = np.zeros(n)
        absd = np.zeros((n, kc))
        sgnd = np.zeros((n, kc))
        eff = np.zeros(n)
        stack = [root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                continue
            stack.extend(node.children.values())
            var = scorer.index[node.split_variable]
            idx = node.subset.indices
            g_all, g_ctx, n_c = scorer.node_scores(var, idx)
            p_t = idx.size / scorer.n_total
            diff = np.where(n_c > 0, g_all - g_ctx, g_all)
            imp[var] += p_t * g_all
            sgnd[var] += p_t * diff
            absd[var] += p_t * np.abs(diff)
            w_c = n_c / idx.size
            effect = g_all - w_c @ g_ctx
            if self.check:
                alt = w_c @ np.where(n_c > 0, g_all - g_ctx, 0.0)
                if abs(alt - effect) > IDENTITY_TOL:
                    raise AssertionError(
                        f"context-effect decomposition broke at a node: "
                        f"{alt!r} vs {effect!r}")
            eff[var] += p_t * effect
        return np.concatenate([imp, absd.ravel(), sgnd.ravel(), eff])

    def split(self, total: np.ndarray):
        n, kc = len(self.scorer.inputs), self.scorer.kc
        return (total[self._imp], total[self._abs].reshape(n, kc),
                total[self._sgn].reshape(n, kc), total[self._eff])


def _forest_totals(forest: Forest, dataset: Dataset, check_identities=False):
    if forest.n_samples != dataset.n_samples:
        raise DataError("forest was built on a dataset with a different size")
    scorer = _NodeScorer(dataset, forest.input_columns, forest.impurity_kind)
    acc = _Accumulator(scorer, check_identities)
    rows = np.stack([acc.tree_vector(t) for t in forest.trees])
    return acc, rows.sum(axis=0) / forest.n_trees


def _check_context(dataset: Dataset, x_c: int | None = None):
    if dataset.context is None:
        raise DataError("no context column designated")
    if x_c is not None and not 0 <= x_c < dataset.context_arity():
        raise DataError(f"unknown context code {x_c}")


def mdi(forest: Forest, dataset: Dataset) -> np.ndarray:
    """Mean decrease impurity per input, aligned with ``forest.input_columns``."""
    acc, total = _forest_totals(forest, dataset)
    return acc.split(total)[0]


def contextual_abs(forest: Forest, dataset: Dataset, x_c: int) -> np.ndarray:
    """Per-variable mean absolute node-level change of impurity decrease in context ``x_c``."""
    _check_context(dataset, x_c)
    acc, total = _forest_totals(forest, dataset)
    return acc.split(total)[1][:, x_c]


def contextual_signed(forest: Forest, dataset: Dataset, x_c: int) -> np.ndarray:
    """Per-variable mean signed node-level change of impurity decrease in context ``x_c``."""
    _check_context(dataset, x_c)
    acc, total = _forest_totals(forest, dataset)
    return acc.split(total)[2][:, x_c]


def contextual_global(forest: Forest, dataset: Dataset) -> np.ndarray:
    """Per-variable context effect averaged over context values."""
    _check_context(dataset)
    acc, total = _forest_totals(forest, dataset)
    return acc.split(total)[3]


def per_context_baseline(dataset: Dataset, x_c: int, n_trees: int,
                         rng_spec: RngSpec, kind: ImpurityKind | None = None,
                         inputs=None) -> np.ndarray:
    """Plain importances from a fresh forest grown on the context slice.

    Builds an ensemble from only the samples with context value ``x_c``
    (context excluded from the inputs) and returns its mean decrease
    impurity.  This is the straightforward per-context score; unlike the
    node-level contextual scores it does not reuse the conditionings of the
    all-samples forest.
    """
    _check_context(dataset, x_c)
    rows = np.flatnonzero(dataset.codes(dataset.context) == x_c)
    if rows.size == 0:
        raise DataError(f"no samples with context code {x_c}")
    piece = dataset.take_rows(rows)
    inputs = tuple(inputs) if inputs is not None else piece.input_names
    kind = ImpurityKind(kind) if kind is not None else kind_for(piece)
    report = importance_report(piece, inputs, n_trees,
                               rng_spec.child("baseline", x_c), kind,
                               baselines=False)
    return report.importance


# ---------------------------------------------------------------------------
# One-forest report over all scores
# ---------------------------------------------------------------------------


def _contribution_chunk(dataset, inputs, kind, rng_spec, start, stop, check):
    scorer = _NodeScorer(dataset, inputs, kind)
    acc = _Accumulator(scorer, check)
    out = np.empty((stop - start, acc.width))
    for i in range(start, stop):
        tree = build_tree(dataset, inputs, rng_spec.stream(i))
        out[i - start] = acc.tree_vector(tree)
    return out


def importance_report(dataset: Dataset, inputs, n_trees: int, rng_spec: RngSpec,
                      kind: ImpurityKind | None = None, *, baselines: bool = False,
                      baseline_trees: int | None = None, jobs: int = 1,
                      check_identities: bool = False) -> "ImportanceReport":
    """Build one forest (streamed) and compute every score from it.

    Trees are grown from the per-index streams of ``rng_spec`` and discarded
    after accumulation, so arbitrarily large ensembles use constant memory.
    The result is identical to scoring a stored forest from
    :func:`~ctximp.forest.build_forest` with the same spec, and identical for
    every ``jobs`` value.  With ``baselines=True`` an extra forest per
    context value is grown on that context's slice.
    """
    if n_trees < 1:
        raise ConfigError("n_trees must be at least 1")
    if jobs < 1:
        raise ConfigError("jobs must be at least 1")
    inputs = tuple(inputs)
    kind = ImpurityKind(kind) if kind is not None else kind_for(dataset)
    # Validate inputs the same way tree building does.
    from .forest import _check_inputs
    _check_inputs(dataset, inputs)

    if jobs == 1 or n_trees < 4:
        rows = _contribution_chunk(dataset, inputs, kind, rng_spec,
                                   0, n_trees, check_identities)
    else:
        bounds = np.linspace(0, n_trees, jobs + 1, dtype=int)
        spans = [(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=len(spans)) as pool:
            parts = list(pool.map(_contribution_chunk,
                                  *zip(*[(dataset, inputs, kind, rng_spec,
                                          a, b, check_identities)
                                         for a, b in spans])))
        rows = np.concatenate(parts, axis=0)
    scorer = _NodeScorer(dataset, inputs, kind)
    acc = _Accumulator(scorer)
    imp, absd, sgnd, eff = acc.split(rows.sum(axis=0) / n_trees)

    has_ctx = dataset.context is not None
    ctx_labels = dataset.labels(dataset.context) if has_ctx else ()
    base = None
    if baselines:
        if not has_ctx:
            raise DataError("per-context baselines need a context column")
        bt = baseline_trees if baseline_trees is not None else n_trees
        base = np.column_stack([
            per_context_baseline(dataset, xc, bt, rng_spec, kind, inputs)
            for xc in range(len(ctx_labels))])
    meta = {
        "trees": str(n_trees),
        "seed": str(rng_spec.seed),
        "impurity": kind.value,
        "target": dataset.target,
        "context": dataset.context if has_ctx else "-",
    }
    return ImportanceReport(
        variables=inputs,
        importance=imp,
        context_labels=ctx_labels,
        abs_scores=absd if has_ctx else None,
        signed_scores=sgnd if has_ctx else None,
        context_effect=eff if has_ctx else None,
        baselines=base,
        metadata=meta,
    )


# ---------------------------------------------------------------------------
# Report container, characterization, serialization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ImportanceReport:
    """Per-variable scores plus optional p-values and characterization."""

    variables: tuple[str, ...]
    importance: np.ndarray
    context_labels: tuple[str, ...] = ()
    abs_scores: np.ndarray | None = None
    signed_scores: np.ndarray | None = None
    context_effect: np.ndarray | None = None
    baselines: np.ndarray | None = None
    p_values: np.ndarray | None = None
    labels: tuple[tuple[str, ...], ...] | None = None
    ranks: np.ndarray | None = None
    metadata: dict | None = None

    def __post_init__(self):
        n, kc = len(self.variables), len(self.context_labels)
        if self.importance.shape != (n,):
            raise ConfigError("importance vector has the wrong shape")
        for mat in (self.abs_scores, self.signed_scores, self.baselines, self.p_values):
            if mat is not None and mat.shape != (n, kc):
                raise ConfigError("per-context score matrix has the wrong shape")

    def with_pvalues(self, p_values: np.ndarray, n_permutations: int) -> "ImportanceReport":
        meta = dict(self.metadata or {})
        meta["permutations"] = str(n_permutations)
        return replace(self, p_values=np.asarray(p_values, dtype=np.float64),
                       metadata=meta)

    # -- characterization ----------------------------------------------------

    def characterize(self, epsilon: float) -> "ImportanceReport":
        """Attach per-(variable, context value) labels and signed-score ranks.

        A variable whose abs score stays within ``epsilon`` of zero for all
        context values is context-independent.  Otherwise, per context
        value: abs within epsilon means no detectable effect there; if the
        signed score's magnitude reaches the abs score (within epsilon) the
        per-node differences all share one sign, so the variable is
        context-complementary (negative) or context-redundant (positive) in
        that context, and additionally irrelevant in that context when the
        redundant score also matches the overall importance; any remaining
        case is mixed.  Context-affected cells are ranked per context value
        by ascending signed score (rank 1 = most complementary).
        """
        if epsilon < 0:
            raise ConfigError("epsilon must be non-negative")
        if self.abs_scores is None or self.signed_scores is None:
            raise ConfigError("characterization needs contextual scores")
        n, kc = len(self.variables), len(self.context_labels)
        labels = [[LABEL_MIXED] * kc for _ in range(n)]
        for m in range(n):
            if np.all(self.abs_scores[m] <= epsilon):
                labels[m] = [LABEL_INDEPENDENT] * kc
                continue
            for c in range(kc):
                a, s = self.abs_scores[m, c], self.signed_scores[m, c]
                if a <= epsilon:
                    labels[m][c] = LABEL_INDEPENDENT
                elif abs(s) >= a - epsilon:
                    if s < 0:
                        labels[m][c] = LABEL_COMPLEMENTARY
                    elif (abs(a - s) <= epsilon
                          and abs(s - self.importance[m]) <= epsilon):
                        labels[m][c] = LABEL_IRRELEVANT
                    else:
                        labels[m][c] = LABEL_REDUNDANT
                else:
                    labels[m][c] = LABEL_MIXED
        ranks = np.zeros((n, kc), dtype=np.int64)
        for c in range(kc):
            affected = [m for m in range(n) if labels[m][c] != LABEL_INDEPENDENT]
            for r, m in enumerate(sorted(affected,
                                         key=lambda m: self.signed_scores[m, c])):
                ranks[m, c] = r + 1
        meta = dict(self.metadata or {})
        meta["epsilon"] = _fmt(epsilon)
        return replace(self, labels=tuple(tuple(row) for row in labels),
                       ranks=ranks, metadata=meta)

    # -- serialization ---------------------------------------------------------

    def _meta_lines(self):
        lines = ["# ctximp report"]
        for k, v in (self.metadata or {}).items():
            lines.append(f"# {k}: {v}")
        if self.context_labels:
            lines.append("# context values: " + ", ".join(self.context_labels))
        return lines

    def to_tsv(self) -> str:
        """Tab-separated table: one row per variable, fixed column order."""
        head = ["variable", "importance"]
        for lab in self.context_labels:
            head += [f"abs@{lab}", f"signed@{lab}"]
            if self.baselines is not None:
                head.append(f"baseline@{lab}")
            if self.p_values is not None:
                head += [f"pvalue@{lab}", f"sig@{lab}"]
        if self.context_effect is not None:
            head.append("context_effect")
        if self.labels is not None:
            head += [f"label@{lab}" for lab in self.context_labels]
            head += [f"rank@{lab}" for lab in self.context_labels]
        lines = self._meta_lines() + ["\t".join(head)]
        for m, name in enumerate(self.variables):
            row = [name, _fmt(self.importance[m])]
            for c in range(len(self.context_labels)):
                row += [_fmt(self.abs_scores[m, c]), _fmt(self.signed_scores[m, c])]
                if self.baselines is not None:
                    row.append(_fmt(self.baselines[m, c]))
                if self.p_values is not None:
                    p = self.p_values[m, c]
                    row += [_fmt(p), "*" if p < SIGNIFICANCE_LEVEL else "."]
            if self.context_effect is not None:
                row.append(_fmt(self.context_effect[m]))
            if self.labels is not None:
                row += [self.labels[m][c] for c in range(len(self.context_labels))]
                row += [str(self.ranks[m, c]) if self.ranks[m, c] else "-"
                        for c in range(len(self.context_labels))]
            lines.append("\t".join(row))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        """Structured text: one indented record per variable."""
        lines = self._meta_lines()
        for m, name in enumerate(self.variables):
            lines.append(f"variable {name}")
            lines.append(f"  importance {_fmt(self.importance[m])}")
            for c, lab in enumerate(self.context_labels):
                parts = [f"abs {_fmt(self.abs_scores[m, c])}",
                         f"signed {_fmt(self.signed_scores[m, c])}"]
                if self.baselines is not None:
                    parts.append(f"baseline {_fmt(self.baselines[m, c])}")
                if self.p_values is not None:
                    p = self.p_values[m, c]
                    parts.append(f"pvalue {_fmt(p)}")
                    parts.append("significant" if p < SIGNIFICANCE_LEVEL
                                 else "not-significant")
                if self.labels is not None:
                    parts.append(f"label {self.labels[m][c]}")
                    if self.ranks[m, c]:
                        parts.append(f"rank {self.ranks[m, c]}")
                lines.append(f"  context {lab}: " + " | ".join(parts))
            if self.context_effect is not None:
                lines.append(f"  context-effect {_fmt(self.context_effect[m])}")
        return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    return format(float(x), ".10g")


def characterize(report: ImportanceReport, epsilon: float) -> ImportanceReport:
    """Functional alias for :meth:`ImportanceReport.characterize`."""
    return report.characterize(epsilon)
