"""
Unit tests for observation files, grid output and YAML reports.
"""

import numpy as np
import pandas as pd
import pytest

from src.data.io import (
    ParseError,
    dump_report,
    format_float,
    read_observations,
    read_report,
    write_grid,
    write_observations,
    write_report,
)
from src.geometry.sites import DuplicateSiteError, Observations


def _write(tmp_path, text, name='obs.csv'):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return str(path)


class TestReadObservations:
    """Test observation file parsing."""

    def test_valid_file(self, tmp_path):
        """Test a well-formed file is read in order."""
        path = _write(tmp_path, "x,y,value\n0,0,1.5\n1,0,2\n0,1,-3e-2\n")
        obs = read_observations(path)

        assert obs.n == 3
        np.testing.assert_array_equal(obs.coords, [[0, 0], [1, 0], [0, 1]])
        assert obs.values == (1.5, 2.0, -0.03)

    def test_non_numeric_line_reported(self, tmp_path):
        """Test a non-numeric value on line 7 is reported with that line."""
        rows = "".join(f"{i},{i * i},{i}.5\n" for i in range(5))
        path = _write(tmp_path, "x,y,value\n" + rows + "5,6,abc\n")

        with pytest.raises(ParseError) as excinfo:
            read_observations(path)
        assert excinfo.value.line == 7
        assert "line 7" in str(excinfo.value)

    def test_missing_field(self, tmp_path):
        """Test an empty field is reported with its line."""
        path = _write(tmp_path, "x,y,value\n0,0,1\n1,1,\n")
        with pytest.raises(ParseError) as excinfo:
            read_observations(path)
        assert excinfo.value.line == 3

    def test_non_finite_value(self, tmp_path):
        """Test infinite values are rejected."""
        path = _write(tmp_path, "x,y,value\n0,0,inf\n")
        with pytest.raises(ParseError) as excinfo:
            read_observations(path)
        assert excinfo.value.line == 2

    def test_wrong_header(self, tmp_path):
        """Test a header other than x,y,value is reported on line 1."""
        path = _write(tmp_path, "lon,lat,z\n0,0,1\n")
        with pytest.raises(ParseError) as excinfo:
            read_observations(path)
        assert excinfo.value.line == 1

    def test_empty_file(self, tmp_path):
        """Test an empty file is rejected."""
        with pytest.raises(ParseError):
            read_observations(_write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        """Test a file without data rows is rejected."""
        with pytest.raises(ParseError) as excinfo:
            read_observations(_write(tmp_path, "x,y,value\n"))
        assert excinfo.value.line == 2

    def test_duplicate_sites(self, tmp_path):
        """Test duplicate sites are rejected unless averaging is requested."""
        path = _write(tmp_path, "x,y,value\n0,0,1\n0,0,3\n1,1,5\n")
        with pytest.raises(DuplicateSiteError):
            read_observations(path)

        obs = read_observations(path, average_duplicates=True)
        assert obs.n == 2
        assert obs.values == (2.0, 5.0)

    def test_missing_file(self, tmp_path):
        """Test a missing file raises OSError."""
        with pytest.raises(OSError):
            read_observations(str(tmp_path / "absent.csv"))


class TestWriteObservations:
    """Test observation output."""

    def test_values_survive_write_and_read(self, tmp_path):
        """Test 17 significant digits reproduce every double exactly."""
        values = [0.1 + 0.2, 1.0 / 3.0, 1e-300, -123456.789012345678, 2.0 ** 0.5]
        coords = [[np.pi * i, np.e * i] for i in range(len(values))]
        obs = Observations.from_arrays(coords, values)
        path = str(tmp_path / "out.csv")

        write_observations(path, obs)
        back = read_observations(path)
        assert back.values == obs.values
        np.testing.assert_array_equal(back.coords, obs.coords)

    def test_header(self, tmp_path):
        """Test the written header is x,y,value with LF line endings."""
        path = tmp_path / "out.csv"
        write_observations(str(path), Observations.from_arrays([[0, 0]], [1.0]))
        assert path.read_bytes().startswith(b"x,y,value\n")


class TestWriteGrid:
    """Test prediction grid output."""

    def test_with_variance(self, tmp_path):
        """Test kriging grids carry a variance column."""
        path = str(tmp_path / "grid.csv")
        write_grid(path, np.array([[0.0, 0.0], [1.0, 0.0]]), [1.0, 2.0], [0.5, 0.25])
        df = pd.read_csv(path)
        assert list(df.columns) == ['x', 'y', 'prediction', 'variance']
        assert df['variance'].tolist() == [0.5, 0.25]

    def test_without_variance(self, tmp_path):
        """Test spline grids have no variance column."""
        path = str(tmp_path / "grid.csv")
        write_grid(path, np.array([[0.0, 0.0]]), [1.0])
        assert list(pd.read_csv(path).columns) == ['x', 'y', 'prediction']


class TestReports:
    """Test YAML report serialization."""

    def test_float_format(self):
        """Test floats always read back as floats."""
        assert format_float(0.1) == '0.10000000000000001'
        text = dump_report({'a': 3.0, 'b': 1e20, 'c': 0.5})
        assert 'a: 3.0\n' in text
        assert 'b: 1.0e+20\n' in text
        assert 'c: 0.5\n' in text

    def test_round_trip(self, tmp_path):
        """Test report values and key order survive a write/read cycle."""
        document = {
            'schema_version': 1,
            'msp_kriging': 1.0 / 3.0,
            'winner': 'kriging',
            'records': [{'site_index': np.int64(2), 'sigma': np.float64(0.1 + 0.2)}],
            'flag': np.bool_(True),
            'missing': None,
            'huge': float('inf'),
        }
        path = str(tmp_path / "report.yaml")
        write_report(path, document)
        back = read_report(path)

        assert list(back) == list(document)
        assert back['msp_kriging'] == 1.0 / 3.0
        assert back['records'][0] == {'site_index': 2, 'sigma': 0.1 + 0.2}
        assert back['flag'] is True
        assert back['missing'] is None
        assert back['huge'] == float('inf')

    def test_nan(self):
        """Test NaN is written as a YAML float."""
        assert 'x: .nan' in dump_report({'x': float('nan')})
