"""Panel container, CSV round-trips, and elementary transforms."""

import numpy as np
import pytest

from evofactor import PanelSeries, center, difference, load_csv, save_csv


def write(tmp_path, text, name="x.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_csv_basic(tmp_path):
    X = load_csv(write(tmp_path, "1,2\n3,4\n5,6\n"))
    assert X.n == 3 and X.p == 2
    assert np.array_equal(X.values, [[1, 2], [3, 4], [5, 6]])


def test_load_csv_windows_newlines(tmp_path):
    X = load_csv(write(tmp_path, "1,2\r\n3,4\r\n"))
    assert X.n == 2 and X.p == 2


def test_load_csv_header(tmp_path):
    X = load_csv(write(tmp_path, "a,b\n1,2\n3,4\n"), has_header=True)
    assert X.n == 2


def test_load_csv_nonnumeric_names_row_and_column(tmp_path):
    with pytest.raises(ValueError, match="row 1, column 2"):
        load_csv(write(tmp_path, "1,abc\n3,4\n"))


def test_load_csv_header_single_row_rejected(tmp_path):
    with pytest.raises(ValueError, match="n >= 2"):
        load_csv(write(tmp_path, "a,b\n1,2\n"), has_header=True)


def test_load_csv_ragged(tmp_path):
    with pytest.raises(ValueError, match="ragged"):
        load_csv(write(tmp_path, "1,2\n3,4,5\n"))


def test_load_csv_nonfinite(tmp_path):
    with pytest.raises(ValueError, match="non-finite"):
        load_csv(write(tmp_path, "1,2\nnan,4\n"))


def test_panel_invariants():
    with pytest.raises(ValueError):
        PanelSeries(np.ones((1, 5)))
    with pytest.raises(ValueError):
        PanelSeries(np.ones((5, 1)))
    with pytest.raises(ValueError):
        PanelSeries(np.array([[1.0, np.inf], [0.0, 1.0]]))


def test_panel_immutable():
    X = PanelSeries(np.ones((3, 2)))
    with pytest.raises(ValueError):
        X.values[0, 0] = 2.0


def test_times_grid():
    X = PanelSeries(np.ones((4, 2)))
    assert np.allclose(X.times, [0.25, 0.5, 0.75, 1.0])


def test_roundtrip_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    vals = rng.standard_normal((20, 4)) * np.exp(rng.uniform(-30, 30, size=(20, 4)))
    X = PanelSeries(vals)
    path = tmp_path / "rt.csv"
    save_csv(X, path)
    Y = load_csv(path)
    assert np.array_equal(X.values, Y.values)
    save_csv(Y, tmp_path / "rt2.csv", header=["a", "b", "c", "d"])
    Z = load_csv(tmp_path / "rt2.csv", has_header=True)
    assert np.array_equal(X.values, Z.values)


def test_difference_examples():
    X = PanelSeries(np.array([[1.0, 1.0], [2.0, 3.0], [4.0, 6.0]]))
    assert np.array_equal(difference(X).values, [[1, 2], [2, 3]])
    const = PanelSeries(np.full((5, 3), 2.5))
    assert np.all(difference(const).values == 0)
    with pytest.raises(ValueError):
        difference(PanelSeries(np.ones((2, 3))))


def test_center_examples():
    X = PanelSeries(np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]))
    C = center(X)
    assert np.allclose(C.values[:, 0], [-1, 0, 1])
    assert np.all(C.values[:, 1] == 0)
    # idempotent up to round-off
    assert np.allclose(center(C).values, C.values, atol=1e-15)


def test_center_difference_means():
    rng = np.random.default_rng(3)
    X = PanelSeries(rng.standard_normal((50, 4)) * 100 + 40)
    scale = np.abs(X.values).max()
    assert np.abs(center(difference(X)).values.mean(axis=0)).max() <= 1e-12 * scale
    # differencing a centered panel telescopes to (last - first)/(n-1)
    D = difference(center(X))
    C = center(X).values
    assert np.allclose(D.values.mean(axis=0), (C[-1] - C[0]) / (X.n - 1), atol=1e-12 * scale)


def test_write_matrix_csv_roundtrip(tmp_path):
    from evofactor.panel import write_matrix_csv

    rng = np.random.default_rng(4)
    M = rng.standard_normal((3, 5))
    path = tmp_path / "m.csv"
    write_matrix_csv(M, path)
    back = np.array(
        [[float(x) for x in line.split(",")] for line in path.read_text().splitlines()]
    )
    assert np.array_equal(M, back)
