import numpy as np
import pytest

from ellshrink.dataio import load_labeled_csv, load_matrix_csv, load_returns_csv
from ellshrink.errors import CsvFormatError


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadMatrixCsv:
    def test_plain_numeric(self, tmp_path):
        path = write(tmp_path, "m.csv", "1,2\n3,4\n5,6\n")
        np.testing.assert_array_equal(load_matrix_csv(path), [[1, 2], [3, 4], [5, 6]])

    def test_header_skipped(self, tmp_path):
        path = write(tmp_path, "m.csv", "a,b\n1,2\n3,4\n")
        np.testing.assert_array_equal(load_matrix_csv(path), [[1, 2], [3, 4]])

    def test_non_numeric_positions(self, tmp_path):
        path = write(tmp_path, "m.csv", "1,2\n3,oops\n")
        with pytest.raises(CsvFormatError) as exc:
            load_matrix_csv(path)
        assert exc.value.line == 2
        assert exc.value.column == 2

    def test_missing_value_positions(self, tmp_path):
        path = write(tmp_path, "m.csv", "1,2\n,4\n")
        with pytest.raises(CsvFormatError) as exc:
            load_matrix_csv(path)
        assert exc.value.line == 2
        assert exc.value.column == 1

    def test_ragged_row(self, tmp_path):
        path = write(tmp_path, "m.csv", "1,2\n3,4,5\n")
        with pytest.raises(CsvFormatError) as exc:
            load_matrix_csv(path)
        assert exc.value.line == 2

    def test_empty_file(self, tmp_path):
        with pytest.raises(CsvFormatError):
            load_matrix_csv(write(tmp_path, "m.csv", ""))

    def test_nan_token_rejected(self, tmp_path):
        path = write(tmp_path, "m.csv", "1,2\n3,NaN\n")
        with pytest.raises(CsvFormatError):
            load_matrix_csv(path)


class TestLoadReturnsCsv:
    def test_header_and_data(self, tmp_path):
        path = write(tmp_path, "r.csv", "AAA,BBB\n0.01,-0.02\n0.00,0.03\n")
        names, data = load_returns_csv(path)
        assert names == ["AAA", "BBB"]
        np.testing.assert_allclose(data, [[0.01, -0.02], [0.0, 0.03]])

    def test_missing_value_names_line(self, tmp_path):
        path = write(tmp_path, "r.csv", "AAA,BBB\n0.01,-0.02\n0.01,\n0.0,0.0\n")
        with pytest.raises(CsvFormatError) as exc:
            load_returns_csv(path)
        assert exc.value.line == 3

    def test_width_mismatch_against_header(self, tmp_path):
        path = write(tmp_path, "r.csv", "AAA,BBB,CCC\n0.01,-0.02\n")
        with pytest.raises(CsvFormatError) as exc:
            load_returns_csv(path)
        assert exc.value.line == 2


class TestLoadLabeledCsv:
    def test_relabels_to_contiguous(self, tmp_path):
        path = write(tmp_path, "d.csv", "1.0,2.0,10\n3.0,4.0,20\n5.0,6.0,10\n")
        ds = load_labeled_csv(path)
        np.testing.assert_array_equal(ds.labels, [1, 2, 1])
        np.testing.assert_array_equal(ds.classes, [1, 2])

    def test_header_skipped(self, tmp_path):
        path = write(tmp_path, "d.csv", "f1,f2,label\n1,2,1\n3,4,2\n")
        ds = load_labeled_csv(path)
        assert ds.samples.shape == (2, 2)

    def test_non_integer_label(self, tmp_path):
        path = write(tmp_path, "d.csv", "1,2,1.5\n")
        with pytest.raises(CsvFormatError):
            load_labeled_csv(path)

    def test_needs_feature_column(self, tmp_path):
        path = write(tmp_path, "d.csv", "1\n2\n")
        with pytest.raises(CsvFormatError):
            load_labeled_csv(path)
