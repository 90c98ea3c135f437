"""Totally randomized, fully developed, multiway trees over categorical inputs.

The split variable at each node is drawn uniformly at random among the input
variables not yet used on the path; there is no impurity-guided selection of
any kind.  A node splits on all codes of its variable (codes absent from the
node become empty leaf children), so every variable is exhausted after one
use and tree depth is bounded by the number of inputs.  Growth stops at pure,
empty, or variable-exhausted nodes.  Per-node sample subsets are retained for
the importance computations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import CATEGORICAL, Dataset
from .errors import ConfigError, DataError
from .impurity import ImpurityKind, SampleSubset, kind_for

# Zero-variance tolerance deciding purity for numeric targets.
PURE_VARIANCE_TOL = 1e-12


@dataclass(frozen=True)
class RngSpec:
    """Seedable derivation of independent, reproducible random streams.

    ``stream(*tokens)`` yields a generator whose state is a pure function of
    the seed and the token path, so identical (seed, tokens) always produce
    identical streams and distinct token paths produce independent streams.
    Integer tokens must be non-negative; string tokens act as namespaces.
    """

    seed: int
    path: tuple[int, ...] = ()

    @staticmethod
    def _encode(token) -> int:
        if isinstance(token, str):
            return int.from_bytes(token.encode("utf-8"), "big")
        token = int(token)
        if token < 0:
            raise ConfigError("integer stream tokens must be non-negative")
        return token

    def child(self, *tokens) -> "RngSpec":
        """Derived spec whose streams are independent of this spec's."""
        return RngSpec(self.seed, self.path + tuple(self._encode(t) for t in tokens))

    def stream(self, *tokens) -> np.random.Generator:
        entropy = [self.seed % 2 ** 64, *self.path,
                   *(self._encode(t) for t in tokens)]
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


@dataclass(slots=True)
class TreeNode:
    """One node of a multiway tree.

    Internal nodes carry the name of their split variable and one child per
    code of that variable; leaves have ``split_variable=None``.  ``subset``
    holds the rows reaching the node and ``used_variables`` the split
    variables on the path from the root (excluding this node's own split).
    """

    subset: SampleSubset
    depth: int
    used_variables: frozenset[str]
    split_variable: str | None = None
    children: dict[int, "TreeNode"] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return self.split_variable is None

    def walk(self):
        """All nodes in deterministic depth-first order (children by code)."""
        yield self
        if not self.is_leaf:
            for code in sorted(self.children):
                yield from self.children[code].walk()


@dataclass(frozen=True)
class Forest:
    """An ensemble of trees built over one dataset and input set."""

    trees: tuple[TreeNode, ...]
    seed: int
    input_columns: tuple[str, ...]
    impurity_kind: ImpurityKind
    n_samples: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def _check_inputs(dataset: Dataset, inputs) -> tuple[str, ...]:
    inputs = tuple(inputs)
    if not inputs:
        raise DataError("need at least one input variable")
    if len(set(inputs)) != len(inputs):
        raise DataError("duplicate input variables")
    if dataset.target in inputs:
        raise DataError("the target cannot be an input variable")
    if dataset.context is not None and dataset.context in inputs:
        raise DataError("the context cannot be an input variable")
    for name in inputs:
        if dataset.column_kind(name) != CATEGORICAL:
            raise DataError(f"input column {name!r} is not categorical")
    return inputs


class _Grower:
    """Shared state for growing one tree (arrays, purity test, rng)."""

    def __init__(self, dataset: Dataset, inputs, rng):
        self.inputs = inputs
        self.cols = [dataset.codes(name) for name in inputs]
        self.arities = [dataset.arity(name) for name in inputs]
        self.rng = rng
        if dataset.target_kind == CATEGORICAL:
            self.y = dataset.codes(dataset.target)
            self.numeric = False
        else:
            self.y = dataset.numeric(dataset.target)
            self.numeric = True

    def pure(self, idx) -> bool:
        y = self.y[idx]
        if self.numeric:
            return bool(np.var(y) <= PURE_VARIANCE_TOL)
        return bool((y == y[0]).all())

    def grow(self, idx, depth, used, avail) -> TreeNode:
        node = TreeNode(SampleSubset(idx), depth, used)
        if idx.size == 0 or not avail or self.pure(idx):
            return node
        pick = avail[self.rng.integers(len(avail))]
        name = self.inputs[pick]
        node.split_variable = name
        child_avail = [i for i in avail if i != pick]
        child_used = used | {name}
        vals = self.cols[pick][idx]
        for code in range(self.arities[pick]):
            node.children[code] = self.grow(idx[vals == code], depth + 1,
                                            child_used, child_avail)
        return node


def build_tree(dataset: Dataset, inputs, rng: np.random.Generator) -> TreeNode:
    """Grow one totally randomized tree over the full sample.

    ``rng`` is consumed once per internal node (uniform choice among unused
    inputs) in depth-first order with children visited by ascending code,
    which makes tree structure a deterministic function of the stream.
    """
    inputs = _check_inputs(dataset, inputs)
    grower = _Grower(dataset, inputs, rng)
    return grower.grow(np.arange(dataset.n_samples, dtype=np.int64),
                       0, frozenset(), list(range(len(inputs))))


def build_forest(dataset: Dataset, inputs, n_trees: int, rng_spec: RngSpec,
                 kind: ImpurityKind | None = None) -> Forest:
    """Build an ensemble of ``n_trees`` independent totally randomized trees.

    Tree ``i`` is grown from the stream ``rng_spec.stream(i)``, so the result
    does not depend on construction order and is reproducible from
    ``(dataset, inputs, n_trees, rng_spec)`` alone.
    """
    if n_trees < 1:
        raise ConfigError("n_trees must be at least 1")
    inputs = _check_inputs(dataset, inputs)
    kind = ImpurityKind(kind) if kind is not None else kind_for(dataset)
    trees = tuple(build_tree(dataset, inputs, rng_spec.stream(i))
                  for i in range(n_trees))
    return Forest(trees, rng_spec.seed, inputs, kind, dataset.n_samples)
