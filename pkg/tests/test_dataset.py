"""
Testes de leitura, validação e escrita do Dataset
"""
import numpy as np
import pytest

from mr2.dataset import Dataset, column_means, load_csv, load_instruments_csv, write_csv
from mr2.exceptions import (
    CsvParseError,
    DataError,
    DegenerateInstrumentError,
    MissingColumnError,
    NonBinaryInstrumentError,
    NonFiniteValueError,
    SampleSizeError,
)


def _write(tmp_path, text: str):
    path = tmp_path / "data.csv"
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:

    def test_three_rows_two_instruments(self, tmp_path):
        path = _write(tmp_path, "Y,A,G1,G2\n1.5,0.2,1,0\n2.0,1.1,0,1\n-0.3,0.7,1,1\n")
        d = load_csv(path, "Y", "A", ["G1", "G2"])
        assert d.n == 3
        assert d.k_total == 2
        np.testing.assert_array_equal(d.y, [1.5, 2.0, -0.3])
        np.testing.assert_array_equal(d.g[:, 1], [0.0, 1.0, 1.0])
        assert d.g_names == ("G1", "G2")

    def test_constant_instrument_is_rejected_by_name(self, tmp_path):
        path = _write(tmp_path, "Y,A,G1,G2\n1,0,1,0\n2,1,0,0\n3,1,1,0\n")
        with pytest.raises(DegenerateInstrumentError) as excinfo:
            load_csv(path, "Y", "A", ["G1", "G2"])
        assert "G2" in str(excinfo.value)

    def test_parse_error_reports_row_and_column(self, tmp_path):
        rows = [f"{i},{i % 2},{i % 2},{(i // 2) % 2}" for i in range(10)]
        rows[6] = "NA,0,0,1"
        path = _write(tmp_path, "Y,A,G1,G2\n" + "\n".join(rows) + "\n")
        with pytest.raises(CsvParseError) as excinfo:
            load_csv(path, "Y", "A", ["G1", "G2"])
        assert excinfo.value.row == 7
        assert excinfo.value.column == "Y"
        assert "row 7" in str(excinfo.value)

    def test_missing_column(self, tmp_path):
        path = _write(tmp_path, "Y,A,G1\n1,0,1\n2,1,0\n")
        with pytest.raises(MissingColumnError) as excinfo:
            load_csv(path, "Y", "A", ["G1", "G7"])
        assert excinfo.value.column == "G7"

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(tmp_path / "nope.csv", "Y", "A", ["G1"])

    def test_empty_instrument_list(self, tmp_path):
        path = _write(tmp_path, "Y,A,G1\n1,0,1\n2,1,0\n")
        with pytest.raises(DataError):
            load_csv(path, "Y", "A", [])

    def test_infinite_value_rejected(self, tmp_path):
        path = _write(tmp_path, "Y,A,G1\ninf,0,1\n2,1,0\n")
        with pytest.raises(NonFiniteValueError):
            load_csv(path, "Y", "A", ["G1"])

    def test_covariates_are_loaded(self, tmp_path):
        path = _write(tmp_path, "Y,A,G1,PC1\n1,0,1,0.5\n2,1,0,-0.5\n3,1,1,0.1\n")
        d = load_csv(path, "Y", "A", ["G1"], covariates=["PC1"])
        assert d.m.shape == (3, 1)
        assert d.m_names == ("PC1",)

    def test_instrument_only_reader(self, tmp_path):
        path = _write(tmp_path, "G1,G2\n1,0\n0,1\n1,1\n")
        d = load_instruments_csv(path, ["G1", "G2"])
        assert d.n == 3
        np.testing.assert_array_equal(d.y, np.zeros(3))


class TestDatasetInvariants:

    def test_declared_binary_must_be_zero_one(self):
        with pytest.raises(NonBinaryInstrumentError):
            Dataset(y=[1, 2, 3], a=[0, 1, 0], g=[[0], [1], [2]], binary_instruments=True)

    def test_sample_size_at_least_two(self):
        with pytest.raises(SampleSizeError):
            Dataset(y=[1.0], a=[1.0], g=[[1.0]])

    def test_row_mismatch(self):
        with pytest.raises(DataError):
            Dataset(y=[1, 2, 3], a=[0, 1], g=[[0], [1], [1]])

    def test_nan_rejected(self):
        with pytest.raises(NonFiniteValueError):
            Dataset(y=[1, np.nan, 3], a=[0, 1, 0], g=[[0], [1], [1]])

    def test_arrays_are_read_only(self):
        d = Dataset(y=[1, 2, 3], a=[0, 1, 0], g=[[0], [1], [1]])
        with pytest.raises(ValueError):
            d.y[0] = 10.0

    def test_default_names(self):
        d = Dataset(y=[1, 2, 3], a=[0, 1, 0], g=[[0, 1], [1, 0], [1, 1]])
        assert d.g_names == ("G1", "G2")


class TestColumnMeans:

    def test_single_column(self):
        d = Dataset(y=[0, 0, 0, 0], a=[0, 1, 0, 1], g=[[1], [0], [1], [0]])
        np.testing.assert_allclose(column_means(d), [0.5])

    def test_two_columns(self):
        d = Dataset(y=[0, 0, 0], a=[0, 1, 0], g=[[1, 0], [0, 0], [1, 1]])
        np.testing.assert_allclose(column_means(d), [2 / 3, 1 / 3])

    def test_permutation_invariance(self, simulate):
        d = simulate(500, k_total=4, seed=3)
        rows = np.random.default_rng(0).permutation(d.n)
        np.testing.assert_allclose(column_means(d.take(rows)), column_means(d), rtol=1e-12)


def test_write_then_load_preserves_contents(tmp_path, simulate):
    d = simulate(200, k_total=3, seed=5)
    path = write_csv(d, tmp_path / "roundtrip.csv")
    loaded = load_csv(path, "Y", "A", list(d.g_names))
    np.testing.assert_array_equal(loaded.y, d.y)
    np.testing.assert_array_equal(loaded.a, d.a)
    np.testing.assert_array_equal(loaded.g, d.g)


def test_round_trip_is_exact_to_last_digit(tmp_path):
    rng = np.random.default_rng(12)
    hard = np.array([0.1 + 0.2, 1 / 3, np.nextafter(1.0, 2.0), 2.0 ** -1074, -1.7976931348623157e308, 1e-300])
    y = np.concatenate([hard, rng.normal(size=94) * 10.0 ** rng.integers(-20, 20, size=94)])
    g = rng.binomial(1, 0.5, size=(100, 2)).astype(float)
    m = rng.normal(size=(100, 1)) / 7.0
    d = Dataset(y=y, a=y[::-1].copy(), g=g, m=m, m_names=("PC1",))
    loaded = load_csv(write_csv(d, tmp_path / "exact.csv"), "Y", "A", ["G1", "G2"], covariates=["PC1"])
    assert np.array_equal(loaded.y, d.y)
    assert np.array_equal(loaded.a, d.a)
    assert np.array_equal(loaded.m, d.m)
