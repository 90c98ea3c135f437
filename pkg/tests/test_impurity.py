import numpy as np
import pytest

from conftest import random_table
from ctximp import (DataError, Dataset, ImpurityKind, SampleSubset,
                    conditional_impurity_decrease, impurity, impurity_decrease)
from helpers_oracle import count_mi


def numeric_table(rng, n_rows, arities):
    names = [f"V{i}" for i in range(len(arities))]
    codes = {n: rng.integers(0, k, size=n_rows).astype(np.int64)
             for n, k in zip(names, arities)}
    y = codes[names[0]] * 1.5 + rng.normal(size=n_rows)
    labels = {n: tuple(str(v) for v in range(k)) for n, k in zip(names, arities)}
    return Dataset(names + ["Y"], codes, labels, "Y",
                   numeric_values={"Y": y})


def test_pure_subset_zero(problem1):
    idx = SampleSubset.of(np.flatnonzero(problem1.codes("X1") == 0))
    assert impurity(problem1, idx, ImpurityKind.ENTROPY) == 0.0


def test_uniform_binary_is_one_bit():
    ds = Dataset(("a", "y"), {"a": np.zeros(4, dtype=int),
                              "y": np.array([0, 1, 0, 1])},
                 {"a": ("0",), "y": ("0", "1")}, "y")
    assert impurity(ds, SampleSubset.full(4), ImpurityKind.ENTROPY) == 1.0


def test_example1_slice_entropy(example1):
    sel = (example1.codes("X2") == 0) & (example1.codes("Xc") == 0)
    subset = SampleSubset.of(np.flatnonzero(sel))
    assert len(subset) == 4
    assert impurity(example1, subset, ImpurityKind.ENTROPY) == pytest.approx(1.0, abs=1e-12)


def test_empty_subset_and_bounds(problem1):
    assert impurity(problem1, SampleSubset.of([]), ImpurityKind.ENTROPY) == 0.0
    h = impurity(problem1, SampleSubset.full(16), ImpurityKind.ENTROPY)
    assert 0.0 <= h <= np.log2(problem1.arity("Y"))


def test_decrease_constant_variable_zero(problem1):
    idx = SampleSubset.of(np.flatnonzero(problem1.codes("X1") == 1))
    assert impurity_decrease(problem1, idx, "X1", ImpurityKind.ENTROPY) == 0.0


def test_problem1_root_decrease_x1(problem1):
    got = impurity_decrease(problem1, SampleSubset.full(16), "X1",
                            ImpurityKind.ENTROPY)
    assert got == pytest.approx(1.0, abs=1e-12)


def test_decrease_matches_direct_count_mi():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        ds = random_table(rng, int(rng.integers(5, 25)),
                          [int(rng.integers(2, 4)) for _ in range(2)],
                          int(rng.integers(2, 4)))
        subset = SampleSubset.full(ds.n_samples)
        for name in ("V0", "V1"):
            got = impurity_decrease(ds, subset, name, ImpurityKind.ENTROPY)
            want = count_mi(ds.codes(name).tolist(), ds.codes("Y").tolist())
            assert got == pytest.approx(want, abs=1e-12)
            assert got >= -1e-15


def test_additivity_identity():
    rng = np.random.default_rng(7)
    for kind_name in ("entropy", "variance"):
        for _ in range(200):
            if kind_name == "entropy":
                ds = random_table(rng, 30, [3, 2], 3)
            else:
                ds = numeric_table(rng, 30, [3, 2])
            kind = ImpurityKind(kind_name)
            subset = SampleSubset.full(ds.n_samples)
            parent = impurity(ds, subset, kind)
            dec = impurity_decrease(ds, subset, "V0", kind)
            child_sum = 0.0
            v = ds.codes("V0")
            for code in range(ds.arity("V0")):
                rows = np.flatnonzero(v == code)
                child_sum += (rows.size / ds.n_samples) * impurity(
                    ds, SampleSubset.of(rows), kind)
            assert child_sum + dec == pytest.approx(parent, abs=1e-12)
            assert dec >= -1e-12  # exhaustive categorical split


def test_conditional_vacuous_equals_plain(problem1):
    rows = np.flatnonzero(problem1.codes("Xc") == 0)
    subset = SampleSubset.of(rows)
    plain = impurity_decrease(problem1, subset, "X2", ImpurityKind.ENTROPY)
    cond = conditional_impurity_decrease(problem1, subset, "X2", 0,
                                         ImpurityKind.ENTROPY)
    assert cond == plain


def test_conditional_example1_value(example1):
    subset = SampleSubset.of(np.flatnonzero(example1.codes("X2") == 0))
    got = conditional_impurity_decrease(example1, subset, "X1", 0,
                                        ImpurityKind.ENTROPY)
    assert got == pytest.approx(1.0, abs=1e-12)


def test_conditional_empty_slice_zero(problem1):
    subset = SampleSubset.of(np.flatnonzero(problem1.codes("Xc") == 1))
    assert conditional_impurity_decrease(problem1, subset, "X2", 0,
                                         ImpurityKind.ENTROPY) == 0.0


def test_conditional_average_decomposition():
    rng = np.random.default_rng(11)
    for _ in range(100):
        ds = random_table(rng, 40, [2, 3], 3, context_arity=3)
        subset = SampleSubset.full(ds.n_samples)
        avg = conditional_impurity_decrease(ds, subset, "V0", None,
                                            ImpurityKind.ENTROPY)
        total = 0.0
        c = ds.codes("C")
        for xc in range(ds.context_arity()):
            w = (c == xc).mean()
            if w:
                total += w * conditional_impurity_decrease(
                    ds, subset, "V0", xc, ImpurityKind.ENTROPY)
        assert avg == pytest.approx(total, abs=1e-12)


def test_errors(problem1):
    full = SampleSubset.full(16)
    with pytest.raises(DataError, match="incompatible"):
        impurity(problem1, full, ImpurityKind.VARIANCE)
    with pytest.raises(DataError, match="non-empty"):
        impurity_decrease(problem1, SampleSubset.of([]), "X1", ImpurityKind.ENTROPY)
    with pytest.raises(DataError, match="target"):
        impurity_decrease(problem1, full, "Y", ImpurityKind.ENTROPY)
    with pytest.raises(DataError, match="unknown context code"):
        conditional_impurity_decrease(problem1, full, "X1", 5, ImpurityKind.ENTROPY)
    rng = np.random.default_rng(0)
    no_ctx = random_table(rng, 10, [2], 2)
    with pytest.raises(DataError, match="no context"):
        conditional_impurity_decrease(no_ctx, SampleSubset.full(10), "V0", 0,
                                      ImpurityKind.ENTROPY)


def test_subset_validation():
    with pytest.raises(DataError, match="strictly increasing"):
        SampleSubset.of([3, 1, 2])
    with pytest.raises(DataError, match="strictly increasing"):
        SampleSubset.of([-1, 0])
    with pytest.raises(DataError, match="out of range"):
        impurity(random_table(np.random.default_rng(0), 5, [2], 2),
                 SampleSubset.of([0, 9]), ImpurityKind.ENTROPY)
