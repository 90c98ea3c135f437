"""Impurity measures and node-level impurity decreases.

Two impurity measures are supported: Shannon entropy in bits (base 2) for
categorical targets and the biased (1/n) population variance for numeric
targets.  The impurity decrease of a multiway split equals the empirical
mutual information between the split variable and the target when the
measure is entropy.

Conventions fixed here and relied on throughout the package:

* ``0 * log 0 = 0``; the impurity of an empty subset is 0.
* A context slice with no samples contributes an impurity decrease of 0.
* All frequency estimates are plug-in (maximum likelihood), no smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset import CATEGORICAL, NUMERIC, Dataset
from .errors import DataError


class ImpurityKind(str, Enum):
    ENTROPY = "entropy"
    VARIANCE = "variance"


def kind_for(dataset: Dataset) -> ImpurityKind:
    """The impurity measure matching the dataset's target kind."""
    return ImpurityKind.ENTROPY if dataset.target_kind == CATEGORICAL else ImpurityKind.VARIANCE


def _check_kind(dataset: Dataset, kind: ImpurityKind) -> ImpurityKind:
    kind = ImpurityKind(kind)
    if kind is not kind_for(dataset):
        raise DataError(
            f"impurity kind {kind.value!r} is incompatible with a "
            f"{dataset.target_kind} target")
    return kind


@dataclass(frozen=True, slots=True)
class SampleSubset:
    """A sorted set of row indices into a dataset (may be empty)."""

    indices: np.ndarray

    @classmethod
    def of(cls, indices) -> "SampleSubset":
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 1:
            raise DataError("subset indices must be one-dimensional")
        if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0):
            raise DataError("subset indices must be strictly increasing and non-negative")
        return cls(idx)

    @classmethod
    def full(cls, n: int) -> "SampleSubset":
        return cls(np.arange(n, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.indices.size)


def _check_subset(dataset: Dataset, subset: SampleSubset) -> np.ndarray:
    idx = subset.indices
    if idx.size and idx[-1] >= dataset.n_samples:
        raise DataError("subset index out of range")
    return idx


# -- count-based kernels (shared with the tree accumulators) ----------------


def nlog2n(a: np.ndarray) -> np.ndarray:
    """Elementwise a*log2(a) with 0*log2(0) = 0, for non-negative counts."""
    a = np.asarray(a, dtype=np.float64)
    return a * np.log2(np.maximum(a, 1.0))


def entropy_from_counts(counts) -> float:
    """Shannon entropy in bits of the distribution given by raw counts."""
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    if n <= 0:
        return 0.0
    return float((nlog2n(n) - nlog2n(counts).sum()) / n)


def decrease_from_joint(joint: np.ndarray) -> float:
    """Entropy decrease from a (split-value x target-value) count table.

    Equals the empirical mutual information H(Y) - H(Y|V) of the table, with
    empty split values contributing nothing.
    """
    joint = np.asarray(joint, dtype=np.float64)
    n = joint.sum()
    if n <= 0:
        return 0.0
    f = nlog2n
    return float((f(n) - f(joint.sum(axis=1)).sum()
                  - f(joint.sum(axis=0)).sum() + f(joint).sum()) / n)


def variance_from_moments(n: float, s1: float, s2: float) -> float:
    """Population variance from count, sum, and sum of squares."""
    if n <= 0:
        return 0.0
    m = s1 / n
    return max(s2 / n - m * m, 0.0)


def variance_decrease_from_moments(n_v, s1_v, s2_v) -> float:
    """Variance decrease of a split from per-child moment vectors."""
    n_v = np.asarray(n_v, dtype=np.float64)
    s1_v = np.asarray(s1_v, dtype=np.float64)
    s2_v = np.asarray(s2_v, dtype=np.float64)
    n = n_v.sum()
    if n <= 0:
        return 0.0
    parent = variance_from_moments(n, s1_v.sum(), s2_v.sum())
    nz = n_v > 0
    child_means = s1_v[nz] / n_v[nz]
    child_vars = np.maximum(s2_v[nz] / n_v[nz] - child_means ** 2, 0.0)
    return float(parent - (n_v[nz] / n) @ child_vars)


# -- public node-level operations -------------------------------------------


def impurity(dataset: Dataset, subset: SampleSubset, kind: ImpurityKind) -> float:
    """Impurity of the target over a subset of rows (0 for an empty subset)."""
    kind = _check_kind(dataset, kind)
    idx = _check_subset(dataset, subset)
    if idx.size == 0:
        return 0.0
    if kind is ImpurityKind.ENTROPY:
        y = dataset.codes(dataset.target)[idx]
        return entropy_from_counts(np.bincount(y, minlength=dataset.arity(dataset.target)))
    y = dataset.numeric(dataset.target)[idx]
    return variance_from_moments(idx.size, float(y.sum()), float((y * y).sum()))


def impurity_decrease(dataset: Dataset, subset: SampleSubset, variable: str,
                      kind: ImpurityKind) -> float:
    """Impurity decrease of splitting the subset on a categorical variable.

    The subset is partitioned by the variable's codes and the children's
    impurities are subtracted with within-subset proportion weights.  For
    entropy this is the empirical mutual information between the variable
    and the target on the subset.
    """
    kind = _check_kind(dataset, kind)
    idx = _check_subset(dataset, subset)
    if idx.size == 0:
        raise DataError("impurity_decrease needs a non-empty subset")
    if variable == dataset.target:
        raise DataError("cannot split on the target column")
    v = dataset.codes(variable)[idx]
    kv = dataset.arity(variable)
    if kind is ImpurityKind.ENTROPY:
        y = dataset.codes(dataset.target)[idx]
        ky = dataset.arity(dataset.target)
        joint = np.bincount(v * ky + y, minlength=kv * ky).reshape(kv, ky)
        return decrease_from_joint(joint)
    y = dataset.numeric(dataset.target)[idx]
    n_v = np.bincount(v, minlength=kv)
    s1_v = np.bincount(v, weights=y, minlength=kv)
    s2_v = np.bincount(v, weights=y * y, minlength=kv)
    return variance_decrease_from_moments(n_v, s1_v, s2_v)


def conditional_impurity_decrease(dataset: Dataset, subset: SampleSubset,
                                  variable: str, context_value: int | None,
                                  kind: ImpurityKind) -> float:
    """Impurity decrease restricted to one context value, or context-averaged.

    With ``context_value`` given, the decrease is computed on the subset rows
    whose context equals that value; an empty slice yields 0.  With
    ``context_value=None`` the result is the average of the per-value
    decreases weighted by the within-subset context proportions.
    """
    if dataset.context is None:
        raise DataError("no context column designated")
    kind = _check_kind(dataset, kind)
    idx = _check_subset(dataset, subset)
    if idx.size == 0:
        raise DataError("conditional_impurity_decrease needs a non-empty subset")
    c = dataset.codes(dataset.context)[idx]
    if context_value is not None:
        if not 0 <= context_value < dataset.context_arity():
            raise DataError(f"unknown context code {context_value}")
        sub = idx[c == context_value]
        if sub.size == 0:
            return 0.0
        return impurity_decrease(dataset, SampleSubset(sub), variable, kind)
    total = 0.0
    for xc in range(dataset.context_arity()):
        sub = idx[c == xc]
        if sub.size:
            total += (sub.size / idx.size) * impurity_decrease(
                dataset, SampleSubset(sub), variable, kind)
    return total
