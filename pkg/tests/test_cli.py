"""
Tests for the command-line front end.
"""

import argparse

import numpy as np
import pandas as pd
import pytest

from src.cli.runner import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, RunConfig, main, parse_grid
from src.data.io import read_report


def _write_points(tmp_path):
    path = tmp_path / "points.csv"
    path.write_text("x,y,value\n0,0,1\n1,0,2\n0,1,3\n", encoding='utf-8')
    return str(path)


def _simulate(tmp_path, name="sim.csv", seed=3):
    path = str(tmp_path / name)
    code = main(['simulate', '--output', path, '--grid', '0,10,0,10,7,7',
                 '--nugget', '0.5', '--partial-sill', '4', '--range', '2', '--seed', str(seed)])
    assert code == EXIT_OK
    return path


class TestKrigeCommand:
    """Test the krige command."""

    def test_grid_output(self, tmp_path):
        """Test kriging three points onto a 2x2 grid writes four rows with variances."""
        out = tmp_path / "grid.csv"
        code = main(['krige', '--input', _write_points(tmp_path), '--output', str(out),
                     '--grid', '0,1,0,1,2,2', '--nugget', '0.1', '--partial-sill', '1', '--range', '1'])

        assert code == EXIT_OK
        assert out.read_text(encoding='utf-8').splitlines()[0] == "x,y,prediction,variance"
        df = pd.read_csv(out)
        assert len(df) == 4
        assert (df['variance'] >= 0).all()

        first = df.iloc[0]
        assert (first['x'], first['y']) == (0.0, 0.0)
        assert first['prediction'] == pytest.approx(1.0, abs=1e-10)
        assert first['variance'] == pytest.approx(0.0, abs=1e-10)

    def test_default_model_on_three_points(self, tmp_path):
        """Test ordinary kriging of three points without a given model falls back to a pure nugget."""
        out = tmp_path / "grid.csv"
        code = main(['krige', '--input', _write_points(tmp_path), '--output', str(out),
                     '--grid', '0,1,0,1,2,2', '--drift', '0'])

        assert code == EXIT_OK
        assert out.read_text(encoding='utf-8').splitlines()[0] == "x,y,prediction,variance"
        df = pd.read_csv(out)
        assert len(df) == 4
        np.testing.assert_allclose(df['prediction'], [1.0, 2.0, 3.0, 2.0], atol=1e-10)
        np.testing.assert_allclose(df['variance'], [0.0, 0.0, 0.0, 4.0 / 3.0], atol=1e-10)

    def test_variogram_failure(self, tmp_path, capsys):
        """Test a semivariogram without pairs fails in the variogram stage."""
        code = main(['variogram', '--input', _write_points(tmp_path), '--output', str(tmp_path / "v.yaml")])
        assert code == EXIT_FAILURE
        assert "error [variogram]:" in capsys.readouterr().err


class TestSimulateAndCompare:
    """Test the simulate, spline, variogram and compare commands end to end."""

    def test_simulate_is_reproducible(self, tmp_path):
        """Test the same seed writes byte-identical files."""
        first = _simulate(tmp_path, "a.csv")
        second = _simulate(tmp_path, "b.csv")
        with open(first, 'rb') as f1, open(second, 'rb') as f2:
            assert f1.read() == f2.read()
        assert len(pd.read_csv(first)) == 49

    def test_random_sites(self, tmp_path):
        """Test --sites simulates at random sites inside the grid extent."""
        path = tmp_path / "r.csv"
        code = main(['simulate', '--output', str(path), '--grid', '0,5,0,5,2,2', '--sites', '30',
                     '--nugget', '1', '--partial-sill', '0', '--range', '1', '--trend-coef', '1,0,0'])
        assert code == EXIT_OK
        df = pd.read_csv(path)
        assert len(df) == 30
        assert df['x'].between(0, 5).all() and df['y'].between(0, 5).all()

    def test_compare_report(self, tmp_path):
        """Test compare writes a complete report and reruns are byte-identical."""
        data = _simulate(tmp_path)
        first = tmp_path / "r1.yaml"
        second = tmp_path / "r2.yaml"
        assert main(['compare', '--input', data, '--output', str(first)]) == EXIT_OK
        assert main(['compare', '--input', data, '--output', str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

        report = read_report(str(first))
        assert report['schema_version'] == 1
        assert report['winner'] in ('kriging', 'spline', 'tie')
        assert report['alpha'] > 0
        assert len(report['records']['kriging']) == 49
        assert report['configuration']['command'] == 'compare'
        assert report['configuration']['refit'] == 'fixed'

    def test_spline_grid(self, tmp_path):
        """Test the spline command writes predictions without variances."""
        out = tmp_path / "s.csv"
        code = main(['spline', '--input', _simulate(tmp_path), '--output', str(out),
                     '--grid', '0,10,0,10,3,3', '--alpha', '0.01'])
        assert code == EXIT_OK
        df = pd.read_csv(out)
        assert list(df.columns) == ['x', 'y', 'prediction']
        assert len(df) == 9
        assert np.isfinite(df['prediction']).all()

    def test_spline_detrends(self, tmp_path):
        """Test --trend median-polish changes the spline grid and stays finite."""
        path = tmp_path / "trended.csv"
        xs, ys = np.meshgrid(np.linspace(0, 5, 6), np.linspace(0, 5, 6))
        values = xs.ravel() ** 2 + 3.0 * np.sin(ys.ravel())
        pd.DataFrame({'x': xs.ravel(), 'y': ys.ravel(), 'value': values}).to_csv(path, index=False)

        plain = tmp_path / "plain.csv"
        detrended = tmp_path / "detrended.csv"
        args = ['spline', '--input', str(path), '--grid', '0,5,0,5,4,4', '--alpha', '0.1']
        assert main(args + ['--output', str(plain)]) == EXIT_OK
        assert main(args + ['--output', str(detrended), '--trend', 'median-polish',
                            '--trend-rows', '2', '--trend-cols', '2']) == EXIT_OK

        a = pd.read_csv(plain)['prediction'].to_numpy()
        b = pd.read_csv(detrended)['prediction'].to_numpy()
        assert np.isfinite(b).all()
        assert np.max(np.abs(a - b)) > 1e-6

    def test_variogram_document(self, tmp_path):
        """Test the variogram command writes lags and the fitted model."""
        out = tmp_path / "v.yaml"
        code = main(['variogram', '--input', _simulate(tmp_path), '--output', str(out), '--bins', '10'])
        assert code == EXIT_OK
        doc = read_report(str(out))
        assert 1 <= len(doc['lags']) <= 10
        assert doc['model']['family'] == 'gaussian'
        assert doc['n'] == 49


class TestExitCodes:
    """Test error reporting and exit status."""

    def test_bad_line_reported(self, tmp_path, capsys):
        """Test a non-numeric value on line 7 exits with status 1 and names the line."""
        path = tmp_path / "bad.csv"
        rows = "".join(f"{i},{i * 2},{i}\n" for i in range(5))
        path.write_text("x,y,value\n" + rows + "9,9,oops\n", encoding='utf-8')

        code = main(['compare', '--input', str(path), '--output', str(tmp_path / "r.yaml")])
        assert code == EXIT_FAILURE
        err = capsys.readouterr().err
        assert "error [input]:" in err
        assert "line 7" in err

    def test_missing_output(self, tmp_path, capsys):
        """Test a missing --output is a usage error."""
        code = main(['compare', '--input', _write_points(tmp_path)])
        assert code == EXIT_USAGE
        assert "error [usage]:" in capsys.readouterr().err

    def test_unknown_command(self):
        """Test argparse rejects unknown commands with status 2."""
        assert main(['interpolate', '--output', 'x.csv']) == EXIT_USAGE

    def test_incomplete_model(self, tmp_path):
        """Test the covariogram flags must be given together."""
        code = main(['krige', '--input', _write_points(tmp_path), '--output', str(tmp_path / "g.csv"),
                     '--grid', '0,1,0,1,2,2', '--nugget', '0.1'])
        assert code == EXIT_USAGE

    @pytest.mark.parametrize("flag", ['--trend-rows', '--trend-cols'])
    def test_single_trend_bin_rejected(self, tmp_path, capsys, flag):
        """Test fewer than two trend bins is a usage error."""
        code = main(['krige', '--input', _write_points(tmp_path), '--output', str(tmp_path / "g.csv"),
                     '--grid', '0,1,0,1,2,2', '--trend', 'median-polish', flag, '1'])
        assert code == EXIT_USAGE
        assert "error [usage]:" in capsys.readouterr().err

    def test_simulate_needs_model(self, tmp_path):
        """Test simulate without a covariogram is a usage error."""
        code = main(['simulate', '--output', str(tmp_path / "s.csv"), '--grid', '0,1,0,1,2,2'])
        assert code == EXIT_USAGE

    def test_missing_config(self, tmp_path):
        """Test an explicit configuration path that does not exist is a usage error."""
        code = main(['compare', '--input', _write_points(tmp_path), '--output', str(tmp_path / "r.yaml"),
                     '--config', str(tmp_path / "absent.yaml")])
        assert code == EXIT_USAGE

    def test_too_few_observations(self, tmp_path, capsys):
        """Test compare on three observations fails in the input stage."""
        code = main(['compare', '--input', _write_points(tmp_path), '--output', str(tmp_path / "r.yaml")])
        assert code == EXIT_FAILURE
        assert "error [input]:" in capsys.readouterr().err


class TestParsing:
    """Test flag parsing helpers."""

    def test_parse_grid(self):
        """Test a grid argument is parsed into bounds and counts."""
        grid = parse_grid("0,10,-5,5,11,3")
        assert (grid.x_min, grid.x_max, grid.y_min, grid.y_max, grid.nx, grid.ny) == (0, 10, -5, 5, 11, 3)

    @pytest.mark.parametrize("text", ["0,1,0,1,2", "0,1,0,1,2.5,2", "1,0,0,1,2,2", "a,1,0,1,2,2"])
    def test_invalid_grid(self, text):
        """Test malformed grids are rejected."""
        with pytest.raises(argparse.ArgumentTypeError):
            parse_grid(text)

    def test_run_config_effective(self):
        """Test the effective configuration carries the grid and settings."""
        config = RunConfig(command='krige', input='in.csv', output='out.csv', grid=parse_grid("0,1,0,1,2,2"))
        config.validate()
        doc = config.effective()
        assert doc['grid']['nx'] == 2
        assert doc['settings']['kriging']['rcond_threshold'] == 1e-14
