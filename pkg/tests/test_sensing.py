import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.errors import CsvParseError, DimensionMismatchError, ZeroColumnError
from app.services.densela import gram, symmetric_eigenvalues
from app.services.sensing import (
    counterexample_gram,
    counterexample_signal,
    counterexample_spectrum,
    gen_counterexample,
    gen_gaussian,
    load_csv,
    load_vector_csv,
    mutual_coherence,
    normalize_columns,
    save_csv,
    save_vector_csv,
)


def test_normalize_diagonal():
    sensing = normalize_columns(np.diag([2.0, 3.0]))
    np.testing.assert_array_equal(sensing.mat, np.eye(2))
    np.testing.assert_array_equal(sensing.column_norms, [1.0, 1.0])
    assert sensing.normalized


def test_normalize_three_four_five():
    np.testing.assert_allclose(normalize_columns([[3.0], [4.0]]).mat, [[0.6], [0.8]])


def test_normalize_random_matrix(rng):
    sensing = normalize_columns(rng.standard_normal((5, 8)))
    np.testing.assert_allclose(np.linalg.norm(sensing.mat, axis=0), 1.0, atol=1e-12)


def test_normalize_reports_zero_column():
    with pytest.raises(ZeroColumnError) as excinfo:
        normalize_columns([[1.0, 0.0], [2.0, 0.0]])
    assert excinfo.value.index == 1


@settings(max_examples=40, deadline=None)
@given(m=st.integers(1, 8), n=st.integers(1, 8), seed=st.integers(0, 10_000))
def test_normalize_is_idempotent(m, n, seed):
    once = gen_gaussian(m, n, seed)
    twice = normalize_columns(once.mat)
    np.testing.assert_allclose(twice.mat, once.mat, atol=1e-12)


def test_sensing_matrix_does_not_alias_caller_array():
    values = np.eye(3)
    sensing = normalize_columns(values)
    values[0, 0] = 5.0
    assert sensing.mat[0, 0] == 1.0
    assert values.flags.writeable


def test_gaussian_is_deterministic():
    np.testing.assert_array_equal(gen_gaussian(3, 3, 1).mat, gen_gaussian(3, 3, 1).mat)


def test_gaussian_is_normalized():
    sensing = gen_gaussian(5, 10, 123)
    assert sensing.normalized
    np.testing.assert_allclose(sensing.column_norms, 1.0, atol=1e-10)


def test_gaussian_coherence_below_one():
    sensing = gen_gaussian(20, 40, 7)
    g = sensing.mat.T @ sensing.mat
    off_diagonal = np.abs(g - np.diag(np.diag(g)))
    assert np.max(off_diagonal) < 1.0
    assert mutual_coherence(sensing) == pytest.approx(np.max(off_diagonal), abs=1e-15)


def test_smallest_counterexample_layout():
    sensing = gen_counterexample(1, 1)
    expected = [[1 / math.sqrt(2), 1 / math.sqrt(2)], [0.0, 1.0]]
    np.testing.assert_allclose(sensing.mat, expected, atol=1e-15)
    assert not sensing.normalized


def test_counterexample_two_one_spectrum():
    eigenvalues = symmetric_eigenvalues(gram(gen_counterexample(2, 1).mat))
    expected = sorted([2 / 3, 1 - 1 / math.sqrt(3), 1 + 1 / math.sqrt(3)])
    np.testing.assert_allclose(eigenvalues, expected, atol=1e-10)


def test_counterexample_three_two_spectrum():
    eigenvalues = symmetric_eigenvalues(gram(gen_counterexample(3, 2).mat))
    radius = 1 / math.sqrt(5 / 2)
    expected = sorted([0.6, 0.6, 1.0, 1.0, 1.0, 1 - radius, 1 + radius])
    np.testing.assert_allclose(eigenvalues, expected, atol=1e-10)


@pytest.mark.parametrize("K", range(1, 7))
@pytest.mark.parametrize("N", range(1, 7))
def test_counterexample_gram_matches_closed_form(K, N):
    sensing = gen_counterexample(K, N)
    assert sensing.m == sensing.n == N * K + 1
    np.testing.assert_allclose(gram(sensing.mat), counterexample_gram(K, N), rtol=0, atol=1e-14)


@pytest.mark.parametrize("K", range(1, 7))
@pytest.mark.parametrize("N", range(1, 7))
def test_counterexample_spectrum_matches_characteristic_polynomial(K, N):
    eigenvalues = symmetric_eigenvalues(gram(gen_counterexample(K, N).mat))
    np.testing.assert_allclose(eigenvalues, counterexample_spectrum(K, N), rtol=0, atol=1e-10)


def test_counterexample_signal_is_ones_on_first_k():
    np.testing.assert_array_equal(counterexample_signal(3, 2), [1, 1, 1, 0, 0, 0, 0])


def test_csv_round_trip_identity(tmp_path):
    path = tmp_path / "identity.csv"
    save_csv(normalize_columns(np.eye(2)), path)
    assert path.read_text() == "1.0,0.0\n0.0,1.0\n"
    np.testing.assert_array_equal(load_csv(path).mat, np.eye(2))


def test_csv_round_trip_is_bit_exact(tmp_path):
    sensing = gen_gaussian(4, 6, 3)
    path = tmp_path / "gaussian.csv"
    save_csv(sensing, path)
    loaded = load_csv(path)
    assert np.max(np.abs(loaded.mat - sensing.mat)) == 0.0
    assert loaded.normalized


def test_csv_round_trip_keeps_counterexample_unnormalized(tmp_path):
    path = tmp_path / "counterexample.csv"
    save_csv(gen_counterexample(2, 1), path)
    assert not load_csv(path).normalized


def test_csv_ragged_rows(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("1.0,2.0\n3.0\n")
    with pytest.raises(DimensionMismatchError):
        load_csv(path)


def test_csv_parse_error_location(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1.0,2.0\n3.0,abc\n")
    with pytest.raises(CsvParseError) as excinfo:
        load_csv(path)
    assert (excinfo.value.line, excinfo.value.column) == (2, 2)


def test_csv_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(CsvParseError):
        load_csv(path)


def test_vector_round_trip(tmp_path, rng):
    vector = rng.standard_normal(5)
    path = tmp_path / "y.csv"
    save_vector_csv(vector, path)
    np.testing.assert_array_equal(load_vector_csv(path), vector)
