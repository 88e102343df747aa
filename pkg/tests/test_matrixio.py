import numpy as np
import pytest

from permest import DenseMatrix, MatrixParseError
from permest.matrixio import format_csv, format_json, parse_csv, parse_json, read_matrix, write_matrix


def test_csv_roundtrip(tmp_path):
    M = DenseMatrix([[1.5, -2.0], [1e-300, 3.0]])
    path = tmp_path / "m.csv"
    write_matrix(M, path)
    assert read_matrix(path) == M
    assert format_csv(M) == "1.5,-2.0\n1e-300,3.0\n"


def test_json_roundtrip(tmp_path):
    M = DenseMatrix(np.arange(6.0).reshape(2, 3) / 7)
    path = tmp_path / "m.json"
    write_matrix(M, path)
    assert read_matrix(path) == M
    assert parse_json(format_json(M)) == M


def test_csv_reports_line_and_column():
    with pytest.raises(MatrixParseError) as info:
        parse_csv("1,2\n3,abc\n")
    assert info.value.line == 2
    assert info.value.column == 3
    assert "line 2, column 3" in str(info.value)


def test_csv_ragged_rows():
    with pytest.raises(MatrixParseError) as info:
        parse_csv("1,2\n3\n")
    assert info.value.line == 2


def test_csv_rejects_nonfinite():
    with pytest.raises(MatrixParseError):
        parse_csv("1,nan\n")


def test_json_errors():
    with pytest.raises(MatrixParseError) as info:
        parse_json('{"rows": 1,\n "cols": }')
    assert info.value.line == 2
    with pytest.raises(MatrixParseError):
        parse_json('{"rows": 2, "cols": 2, "entries": [1, 2, 3]}')
    with pytest.raises(MatrixParseError):
        parse_json('{"rows": 1, "cols": 1, "entries": ["x"]}')


def test_format_sniffing(tmp_path):
    path = tmp_path / "matrix.txt"
    path.write_text('{"rows": 1, "cols": 2, "entries": [1, 2]}')
    assert read_matrix(path).shape == (1, 2)
