"""Permutation-based significance for the absolute contextual scores.

The null hypothesis is a context variable completely independent of inputs
and output.  It is simulated by uniformly permuting the context column;
each replicate rebuilds a forest and recomputes the absolute contextual
scores, and the p-value of a (variable, context value) cell is the add-one
proportion of replicates whose score reaches the observed one:

    p = (1 + #{replicates >= observed}) / (n_permutations + 1)

which is never exactly zero.  Replicates may use fewer trees than the
observed score to bound runtime; with equal tree counts the procedure is an
exact permutation test.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, DataError
from .forest import RngSpec
from .importance import _Accumulator, _NodeScorer, importance_report
from .impurity import ImpurityKind, kind_for


@dataclass(frozen=True)
class PermutationResult:
    """Observed scores and permutation p-values per (variable, context value)."""

    variables: tuple[str, ...]
    context_labels: tuple[str, ...]
    observed: np.ndarray
    p_values: np.ndarray
    n_permutations: int
    seed: int
    null_scores: np.ndarray | None = None

    def __post_init__(self):
        shape = (len(self.variables), len(self.context_labels))
        if self.observed.shape != shape or self.p_values.shape != shape:
            raise ConfigError("score matrices have the wrong shape")
        if np.any(self.p_values <= 0) or np.any(self.p_values > 1):
            raise ConfigError("p-values must lie in (0, 1]")


def _permuted_context(dataset: Dataset, rng) -> Dataset:
    codes = dataset.codes(dataset.context)
    return dataset.replace_codes(dataset.context, codes[rng.permutation(codes.size)])


def _replicate_chunk(dataset, inputs, kind, rng_spec, n_trees, start, stop):
    out = []
    for r in range(start, stop):
        permuted = _permuted_context(dataset, rng_spec.stream("perm", r))
        rep = importance_report(permuted, inputs, n_trees,
                                rng_spec.child("forest", r), kind)
        out.append(rep.abs_scores)
    return np.stack(out)


def _replicates_reusing_forest(dataset, inputs, kind, rng_spec, n_trees, n_perm):
    """Null scores that reuse the observed tree structures.

    Trees are grown once from the observed streams; every permuted context
    column is scored against each tree, so the null reflects only the
    permutation (not forest) randomness.
    """
    from .forest import build_tree

    permuted = [_permuted_context(dataset, rng_spec.stream("perm", r))
                for r in range(n_perm)]
    scorers = [_NodeScorer(ds, inputs, kind) for ds in permuted]
    accs = [_Accumulator(s) for s in scorers]
    totals = [np.zeros(a.width) for a in accs]
    for i in range(n_trees):
        tree = build_tree(dataset, inputs, rng_spec.stream(i))
        for total, acc in zip(totals, accs):
            total += acc.tree_vector(tree)
    return np.stack([acc.split(total / n_trees)[1]
                     for total, acc in zip(totals, accs)])


def permutation_pvalues(dataset: Dataset, inputs, n_permutations: int,
                        n_trees: int, rng_spec: RngSpec,
                        kind: ImpurityKind | None = None, *,
                        n_trees_null: int | None = None,
                        observed_abs: np.ndarray | None = None,
                        reuse_forest: bool = False,
                        keep_null_scores: bool = False,
                        jobs: int = 1) -> PermutationResult:
    """Permutation p-values for the absolute contextual scores.

    The observed scores come from a forest of ``n_trees`` trees grown from
    ``rng_spec`` (or are supplied via ``observed_abs`` when already
    computed from the same spec).  Replicate ``r`` permutes the context
    column with the stream ``("perm", r)`` and rebuilds a forest of
    ``n_trees_null`` trees (default: ``n_trees``) from the derived spec
    ``("forest", r)``; with ``reuse_forest=True`` the observed tree
    structures are reused instead of rebuilding.  Deterministic given
    (seed, n_permutations, tree counts), for any ``jobs``.
    """
    if dataset.context is None:
        raise DataError("no context column designated")
    if n_permutations < 1:
        raise ConfigError("n_permutations must be at least 1")
    if n_trees < 1:
        raise ConfigError("n_trees must be at least 1")
    if jobs < 1:
        raise ConfigError("jobs must be at least 1")
    inputs = tuple(inputs)
    kind = ImpurityKind(kind) if kind is not None else kind_for(dataset)
    n_trees_null = n_trees if n_trees_null is None else n_trees_null
    if n_trees_null < 1:
        raise ConfigError("n_trees_null must be at least 1")

    if observed_abs is None:
        observed_abs = importance_report(dataset, inputs, n_trees, rng_spec,
                                         kind, jobs=jobs).abs_scores
    observed_abs = np.asarray(observed_abs, dtype=np.float64)

    if reuse_forest:
        null = _replicates_reusing_forest(dataset, inputs, kind, rng_spec,
                                          n_trees, n_permutations)
    elif jobs == 1 or n_permutations < 4:
        null = _replicate_chunk(dataset, inputs, kind, rng_spec, n_trees_null,
                                0, n_permutations)
    else:
        bounds = np.linspace(0, n_permutations, jobs + 1, dtype=int)
        spans = [(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=len(spans)) as pool:
            parts = list(pool.map(_replicate_chunk,
                                  *zip(*[(dataset, inputs, kind, rng_spec,
                                          n_trees_null, a, b) for a, b in spans])))
        null = np.concatenate(parts, axis=0)

    hits = (null >= observed_abs[None, :, :]).sum(axis=0)
    p_values = (hits + 1.0) / (n_permutations + 1.0)
    return PermutationResult(
        variables=inputs,
        context_labels=dataset.labels(dataset.context),
        observed=observed_abs,
        p_values=p_values,
        n_permutations=n_permutations,
        seed=rng_spec.seed,
        null_scores=null if keep_null_scores else None,
    )


def epsilon_from_null(result: PermutationResult, floor: float = 1e-9) -> float:
    """Characterization cut-off: the 95th percentile of the null scores."""
    if result.null_scores is None:
        raise ConfigError("null scores were not retained")
    return max(floor, float(np.quantile(result.null_scores, 0.95)))
