import numpy as np
import pytest

from ctximp import (ColumnSchema, DataError, Dataset, generate_example1,
                    generate_problem1, generate_problem2, load_csv, save_csv)
from helpers_oracle import count_mi

# The sixteen rows of the switching-roles benchmark, (Xc, X1, X2, X3, Y).
PROBLEM1_ROWS = [
    (0, 0, 0, 0, 2), (0, 0, 0, 1, 2), (0, 0, 1, 0, 2), (0, 0, 1, 1, 2),
    (0, 1, 0, 0, 0), (0, 1, 0, 1, 0), (0, 1, 1, 0, 1), (0, 1, 1, 1, 1),
    (1, 0, 0, 0, 2), (1, 0, 0, 1, 2), (1, 0, 1, 0, 2), (1, 0, 1, 1, 2),
    (1, 1, 0, 0, 0), (1, 1, 0, 1, 1), (1, 1, 1, 0, 0), (1, 1, 1, 1, 1),
]


def rows_of(ds):
    return [tuple(int(ds.codes(n)[i]) for n in ds.names)
            for i in range(ds.n_samples)]


def test_problem1_is_the_expected_table(problem1):
    assert problem1.names == ("Xc", "X1", "X2", "X3", "Y")
    assert problem1.n_samples == 16
    assert rows_of(problem1) == PROBLEM1_ROWS
    assert len(set(rows_of(problem1))) == 16


def test_problem1_construction_rules(problem1):
    x1, y, xc = (problem1.codes(n) for n in ("X1", "Y", "Xc"))
    assert np.all(y[x1 == 0] == 2) and (x1 == 0).sum() == 8
    assert (xc == 0).mean() == 0.5


def test_example1_information_values(example1):
    assert example1.n_samples == 16
    x1, x2, xc, y = (example1.codes(n) for n in ("X1", "X2", "Xc", "Y"))
    sel = (x2 == 0) & (xc == 0)
    assert count_mi(x1[sel], y[sel]) == pytest.approx(1.0, abs=1e-12)
    assert count_mi(x1[x2 == 0], y[x2 == 0]) == pytest.approx(0.5, abs=1e-12)
    assert count_mi(x1[xc == 0], y[xc == 0]) == pytest.approx(0.5, abs=1e-12)
    assert count_mi(x1, y) == pytest.approx(0.5, abs=1e-12)


def test_problem2_shape_and_marginals(problem2):
    assert problem2.n_samples == 320
    xc = problem2.codes("Xc")
    assert (xc == 0).sum() == 160 and (xc == 1).sum() == 160
    y = problem2.codes("Y")
    for c in (0, 1):
        counts = np.bincount(y[xc == c], minlength=10)
        assert np.all(counts == 16)


def test_problem2_context1_segments_uninformative(problem2):
    xc = problem2.codes("Xc")
    y = problem2.codes("Y")[xc == 1]
    for name in ("X5", "X6", "X7"):
        seg = problem2.codes(name)[problem2.codes("Xc") == 1]
        assert count_mi(seg, y) == pytest.approx(0.0, abs=1e-12)


def test_problem2_context0_is_digit_encoding(problem2):
    from ctximp.dataset import SEVEN_SEGMENTS

    xc = problem2.codes("Xc")
    y = problem2.codes("Y")
    for i in np.flatnonzero(xc == 0):
        segs = tuple(int(problem2.codes(f"X{j}")[i]) for j in range(1, 8))
        assert segs == SEVEN_SEGMENTS[int(y[i])]


def test_generators_are_deterministic():
    for gen in (generate_example1, generate_problem1, generate_problem2):
        a, b = gen(), gen()
        assert rows_of(a) == rows_of(b)


@pytest.mark.parametrize("gen", [generate_example1, generate_problem1,
                                 generate_problem2])
def test_save_load_round_trip(gen, tmp_path):
    ds = gen()
    path = tmp_path / "table.csv"
    save_csv(ds, path)
    # With the original label order declared, codes come back bit-identical.
    schema = [ColumnSchema(n, declared_labels=ds.labels(n)) for n in ds.names]
    back = load_csv(path, schema, ds.target, ds.context)
    assert back.names == ds.names
    for n in ds.names:
        assert np.array_equal(back.codes(n), ds.codes(n))
        assert back.labels(n) == ds.labels(n)
    # Without a declared order the label table (row contents) still matches.
    bare = load_csv(path, [ColumnSchema(n) for n in ds.names], ds.target, ds.context)
    for n in ds.names:
        orig = [ds.labels(n)[c] for c in ds.codes(n)]
        got = [bare.labels(n)[c] for c in bare.codes(n)]
        assert got == orig


def test_problem1_file_has_17_lines(problem1, tmp_path):
    path = tmp_path / "p1.csv"
    save_csv(problem1, path)
    assert len(path.read_text().splitlines()) == 17


def test_load_csv_problem3_shaped_file(tmp_path):
    rng = np.random.default_rng(5)
    lines = ["age,sex,bone,class"]
    for _ in range(132):
        lines.append(",".join([
            str(rng.integers(0, 3)),
            ("female", "male")[rng.integers(0, 2)],
            str(rng.integers(0, 2)),
            f"loc{rng.integers(0, 5)}"]))
    path = tmp_path / "tumor.csv"
    path.write_text("\n".join(lines) + "\n")
    schema = [ColumnSchema(n) for n in ("age", "sex", "bone", "class")]
    ds = load_csv(path, schema, "class", "sex")
    assert ds.n_samples == 132
    assert ds.context_arity() == 2
    assert ds.input_names == ("age", "bone")


def test_load_csv_single_row(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("a,b,y\nred,x,0\n")
    ds = load_csv(path, [ColumnSchema("a"), ColumnSchema("b"), ColumnSchema("y")], "y")
    assert ds.n_samples == 1
    assert all(ds.arity(n) == 1 for n in ds.names)


def test_first_appearance_coding_and_declared_override(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,y\nhigh,1\nlow,0\nhigh,1\n")
    ds = load_csv(path, [ColumnSchema("a"), ColumnSchema("y")], "y")
    assert ds.labels("a") == ("high", "low")
    ds2 = load_csv(path, [ColumnSchema("a", declared_labels=("low", "high")),
                          ColumnSchema("y")], "y")
    assert ds2.labels("a") == ("low", "high")
    assert np.array_equal(ds2.codes("a"), [1, 0, 1])


@pytest.mark.parametrize("content,message", [
    ("b,y\n0,1\n", "does not match"),
    ("a,y\n0\n", "cells"),
    ("a,y\n0,\n", "empty cell"),
])
def test_load_csv_malformed(tmp_path, content, message):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    with pytest.raises(DataError, match=message):
        load_csv(path, [ColumnSchema("a"), ColumnSchema("y")], "y")


def test_load_csv_missing_file(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        load_csv(tmp_path / "nope.csv", [ColumnSchema("y")], "y")


def test_load_csv_unparsable_numeric(tmp_path):
    path = tmp_path / "n.csv"
    path.write_text("a,y\n0,abc\n")
    with pytest.raises(DataError, match="unparsable numeric"):
        load_csv(path, [ColumnSchema("a"), ColumnSchema("y", "numeric")], "y")


def test_load_csv_unknown_declared_label(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,y\nyellow,0\n")
    with pytest.raises(DataError, match="not in declared labels"):
        load_csv(path, [ColumnSchema("a", declared_labels=("red", "blue")),
                        ColumnSchema("y")], "y")


def test_load_csv_numeric_context_rejected(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("c,y\n0,1\n")
    with pytest.raises(DataError, match="context column declared numeric"):
        load_csv(path, [ColumnSchema("c", "numeric"), ColumnSchema("y")],
                 "y", context="c")


def test_save_csv_rejects_comma_labels(tmp_path):
    ds = Dataset(("a", "y"), {"a": np.array([0]), "y": np.array([0])},
                 {"a": ("u,v",), "y": ("0",)}, "y")
    with pytest.raises(DataError, match="commas"):
        save_csv(ds, tmp_path / "x.csv")


def test_empty_column_name_rejected():
    with pytest.raises(DataError, match="non-empty"):
        ColumnSchema("")


def test_dataset_invariants():
    with pytest.raises(DataError, match="codes outside"):
        Dataset(("a", "y"), {"a": np.array([2]), "y": np.array([0])},
                {"a": ("0", "1"), "y": ("0",)}, "y")
    with pytest.raises(DataError, match="distinct"):
        Dataset(("y",), {"y": np.array([0])}, {"y": ("0",)}, "y", context="y")
    with pytest.raises(DataError, match="same number"):
        Dataset(("a", "y"), {"a": np.array([0, 1]), "y": np.array([0])},
                {"a": ("0", "1"), "y": ("0",)}, "y")
    with pytest.raises(DataError, match="only the target column may be numeric"):
        Dataset(("c", "y"), {"y": np.array([0])}, {"y": ("0",)}, "y",
                context="c", numeric_values={"c": np.array([1.0])})
