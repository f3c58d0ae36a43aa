import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netpred.data import (
    DataError,
    Dataset,
    TimeIndex,
    VariableSpec,
    center_continuous,
    encode_categorical,
    load_csv,
    load_spec,
    load_time_index,
    marginal_distribution,
    write_csv,
    write_spec,
)

SPEC = [VariableSpec("g", "continuous"), VariableSpec("c", "categorical", 2)]


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_variable_spec_invariants():
    assert VariableSpec("a", "g").kind == "continuous"
    with pytest.raises(DataError):
        VariableSpec("a", "continuous", 2)
    with pytest.raises(DataError):
        VariableSpec("a", "categorical", 1)
    with pytest.raises(DataError):
        Dataset([VariableSpec("a"), VariableSpec("a")], np.zeros((2, 2)))


def test_load_small_file(tmp_path):
    d = load_csv(write(tmp_path, "g,c\n1.5,1\n-2,2\n0,1\n"), SPEC)
    assert (d.n, d.p) == (3, 2)
    np.testing.assert_array_equal(d.values, [[1.5, 1], [-2, 2], [0, 1]])


def test_out_of_range_code_names_row_and_column(tmp_path):
    with pytest.raises(DataError, match=r"row 2, column 'c'"):
        load_csv(write(tmp_path, "g,c\n1,1\n2,3\n"), SPEC)


def test_header_mismatch_and_bad_cells(tmp_path):
    with pytest.raises(DataError, match="header"):
        load_csv(write(tmp_path, "x,c\n1,1\n"), SPEC)
    with pytest.raises(DataError, match=r"row 1, column 'g'"):
        load_csv(write(tmp_path, "g,c\nabc,1\n"), SPEC)
    with pytest.raises(DataError, match=r"row 2, column 'g'"):
        load_csv(write(tmp_path, "g,c\n1,1\n,2\n"), SPEC)
    with pytest.raises(DataError, match="not found"):
        load_csv(tmp_path / "missing.csv", SPEC)


def test_labels_mapped_in_order_of_first_appearance(tmp_path):
    d = load_csv(write(tmp_path, "g,c\n1,yes\n2,no\n3,yes\n"), SPEC)
    np.testing.assert_array_equal(d.values[:, 1], [1, 2, 1])
    declared = [SPEC[0], VariableSpec("c", "categorical", 2, ("no", "yes"))]
    d = load_csv(write(tmp_path, "g,c\n1,yes\n2,no\n3,yes\n"), declared)
    np.testing.assert_array_equal(d.values[:, 1], [2, 1, 2])
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "g,c\n1,a\n2,b\n3,c\n"), SPEC)


def test_515_row_file_round_trip(tmp_path, rng):
    spec = [VariableSpec(f"v{j}") for j in range(11)] + [VariableSpec("loss", "categorical", 2)]
    values = np.c_[rng.normal(size=(515, 11)), rng.integers(1, 3, 515)]
    d = Dataset(spec, values)
    write_csv(d, tmp_path / "x.csv", ["comment line"])
    write_spec(spec, tmp_path / "x.spec")
    back = load_csv(tmp_path / "x.csv", load_spec(tmp_path / "x.spec"))
    assert (back.n, back.p) == (515, 12)
    np.testing.assert_array_equal(back.values, d.values)


def test_spec_file_parsing(tmp_path):
    p = write(tmp_path, "# header\na,g,1\n\nb,categorical,3,lo|mid|hi\n", "s.txt")
    spec = load_spec(p)
    assert [v.name for v in spec] == ["a", "b"]
    assert spec[1].labels == ("lo", "mid", "hi")


def test_center_simple_column():
    d = center_continuous(Dataset([VariableSpec("x")], [[1.0], [2.0], [3.0]]))
    np.testing.assert_allclose(d.values[:, 0], [-1, 0, 1])
    assert d.means[0] == 2.0
    with pytest.raises(DataError):
        center_continuous(d)


def test_center_leaves_categorical_untouched():
    spec = [VariableSpec("a", "categorical", 3), VariableSpec("b", "categorical", 2)]
    d = Dataset(spec, [[1, 2], [3, 1], [2, 2]])
    np.testing.assert_array_equal(center_continuous(d).values, d.values)


def test_center_large_column_mean_is_zero(rng):
    d = center_continuous(Dataset([VariableSpec("x")], rng.normal(5, 1, (1000, 1))))
    assert abs(d.values.mean()) < 1e-12


def test_center_with_training_means():
    d = Dataset([VariableSpec("x"), VariableSpec("c", "c", 2)], [[1.0, 1], [3.0, 2]])
    c = center_continuous(d, np.array([10.0, np.nan]))
    np.testing.assert_array_equal(c.values[:, 0], [-9, -7])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50))
def test_uncentering_round_trip(xs):
    d = Dataset([VariableSpec("x")], np.array(xs)[:, None])
    np.testing.assert_allclose(center_continuous(d).uncentered(), d.values, rtol=0, atol=1e-12 * max(1, np.abs(xs).max()) * 4)


def test_encode_categorical_examples():
    np.testing.assert_array_equal(encode_categorical([1, 2, 1], 2), [[1, 0], [0, 1], [1, 0]])
    np.testing.assert_array_equal(encode_categorical([2, 2], 3)[:, 1], [1, 1])
    with pytest.raises(DataError):
        encode_categorical([0, 1], 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6).flatmap(lambda K: st.tuples(st.just(K), st.lists(st.integers(1, K), min_size=1, max_size=80))))
def test_encoding_rows_and_marginals(case):
    K, codes = case
    E = encode_categorical(codes, K)
    assert np.all(E.sum(axis=1) == 1)
    p = marginal_distribution(codes, K)
    np.testing.assert_allclose(E.sum(axis=0) / len(codes), p, atol=1e-15)
    assert np.all(p >= 0) and abs(p.sum() - 1) < 1e-12


def test_marginal_examples():
    np.testing.assert_allclose(marginal_distribution([1] * 10 + [2] * 90, 2), [0.1, 0.9])
    np.testing.assert_allclose(marginal_distribution([1, 2, 3, 4], 4), [0.25] * 4)
    with pytest.raises(DataError):
        marginal_distribution([], 2)


def test_time_index_validation(tmp_path):
    t = TimeIndex([1, 1, 2], [1, 2, 1])
    assert len(t) == 3
    with pytest.raises(DataError):
        TimeIndex([1, 1], [2, 2])
    with pytest.raises(DataError):
        TimeIndex([2, 1], [1, 1])
    t = load_time_index(write(tmp_path, "day,beep\n1,1\n1,2\n", "t.csv"))
    np.testing.assert_array_equal(t.beep, [1, 2])
