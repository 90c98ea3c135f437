import numpy as np
import pytest

from conftest import random_table
from ctximp import (ConfigError, DataError, Dataset, RngSpec, build_forest,
                    build_tree)


def tree_equal(a, b):
    if (a.split_variable != b.split_variable or a.depth != b.depth
            or not np.array_equal(a.subset.indices, b.subset.indices)
            or a.used_variables != b.used_variables):
        return False
    if set(a.children) != set(b.children):
        return False
    return all(tree_equal(a.children[c], b.children[c]) for c in a.children)


def test_single_input_depth_one(problem1):
    for seed in (0, 1, 99):
        tree = build_tree(problem1, ("X1",), RngSpec(seed).stream(0))
        assert tree.split_variable == "X1"
        assert all(child.is_leaf for child in tree.children.values())


def test_constant_target_single_leaf():
    ds = Dataset(("a", "y"), {"a": np.array([0, 1, 0]), "y": np.zeros(3, dtype=int)},
                 {"a": ("0", "1"), "y": ("0",)}, "y")
    tree = build_tree(ds, ("a",), RngSpec(5).stream(0))
    assert tree.is_leaf and len(tree.subset) == 3


def test_structure_invariants(problem1):
    rng = np.random.default_rng(0)
    ds = random_table(rng, 60, [2, 3, 2, 2], 3, context_arity=2)
    tree = build_tree(ds, ds.input_names, RngSpec(3).stream(0))
    leaves = []
    for node in tree.walk():
        assert node.depth <= len(ds.input_names)
        if node.is_leaf:
            leaves.append(node)
            continue
        assert node.split_variable not in node.used_variables
        assert len(node.children) == ds.arity(node.split_variable)
        stacked = np.concatenate([c.subset.indices for c in node.children.values()])
        assert np.array_equal(np.sort(stacked), node.subset.indices)
        for child in node.children.values():
            assert child.depth == node.depth + 1
            assert child.used_variables == node.used_variables | {node.split_variable}
    all_leaf_rows = np.concatenate([lf.subset.indices for lf in leaves])
    assert np.array_equal(np.sort(all_leaf_rows), np.arange(ds.n_samples))
    assert all_leaf_rows.size == ds.n_samples  # leaves are disjoint


def test_path_uses_variable_once(problem2):
    tree = build_tree(problem2, problem2.input_names, RngSpec(1).stream(4))

    def check(node, seen):
        if node.is_leaf:
            return
        assert node.split_variable not in seen
        for child in node.children.values():
            check(child, seen | {node.split_variable})

    check(tree, set())


def test_forest_determinism(problem1):
    spec = RngSpec(123)
    f1 = build_forest(problem1, problem1.input_names, 20, spec)
    f2 = build_forest(problem1, problem1.input_names, 20, spec)
    assert f1.n_trees == 20
    assert all(tree_equal(a, b) for a, b in zip(f1.trees, f2.trees))


def test_single_tree_forest_wraps_build_tree(problem1):
    spec = RngSpec(9)
    forest = build_forest(problem1, problem1.input_names, 1, spec)
    alone = build_tree(problem1, problem1.input_names, spec.stream(0))
    assert tree_equal(forest.trees[0], alone)


def test_root_split_choice_uniform(problem1):
    # 10,000 trees: each input should take the root split 1/3 +- 0.02.
    spec = RngSpec(2024)
    counts = {name: 0 for name in problem1.input_names}
    for i in range(10_000):
        tree = build_tree(problem1, problem1.input_names, spec.stream(i))
        counts[tree.split_variable] += 1
    for name, c in counts.items():
        assert abs(c / 10_000 - 1 / 3) < 0.02, counts


def test_input_validation(problem1):
    with pytest.raises(DataError, match="target"):
        build_tree(problem1, ("X1", "Y"), RngSpec(0).stream(0))
    with pytest.raises(DataError, match="context"):
        build_tree(problem1, ("X1", "Xc"), RngSpec(0).stream(0))
    with pytest.raises(DataError, match="at least one"):
        build_tree(problem1, (), RngSpec(0).stream(0))
    with pytest.raises(ConfigError, match="at least 1"):
        build_forest(problem1, problem1.input_names, 0, RngSpec(0))


def test_rng_spec_streams():
    spec = RngSpec(7)
    a = spec.stream("perm", 3).random(4)
    b = spec.stream("perm", 3).random(4)
    c = spec.stream("perm", 4).random(4)
    d = spec.stream("forest", 3).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    # child() composes the same derivation path as direct tokens
    assert np.array_equal(spec.child("perm").stream(3).random(4), a)
    with pytest.raises(ConfigError, match="non-negative"):
        spec.stream(-1)
