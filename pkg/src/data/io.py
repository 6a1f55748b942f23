"""
Reading and writing observation files, prediction grids and reports.

Input CSV: header ``x,y,value``, comma separated, decimal point, UTF-8.
Every float written by this module carries 17 significant digits so that
double precision values survive a write/read cycle unchanged.
"""

import logging
import math
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd
import yaml

from src.geometry.sites import DUPLICATE_TOLERANCE, Observations
from src.utils.errors import SpatialError

logger = logging.getLogger(__name__)

OBSERVATION_COLUMNS = ['x', 'y', 'value']
FLOAT_FORMAT = '%.17g'


class ParseError(SpatialError):
    """Raised for a malformed observations file; ``line`` is 1-based."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def format_float(value: float) -> str:
    """Format a float with 17 significant digits."""
    return FLOAT_FORMAT % float(value)


def _parse_number(text: Any, column: str, line: int) -> float:
    if text is None or (isinstance(text, float) and math.isnan(text)) or str(text).strip() == '':
        raise ParseError(f"missing value in column '{column}'", line)
    try:
        value = float(str(text).strip())
    except ValueError:
        raise ParseError(f"column '{column}' is not a number: {text!r}", line)
    if not math.isfinite(value):
        raise ParseError(f"column '{column}' is not finite: {text!r}", line)
    return value


def parse_observations(df: pd.DataFrame, average_duplicates: bool = False,
                       duplicate_tolerance: float = DUPLICATE_TOLERANCE) -> Observations:
    """
    Convert a string-typed frame with columns ``x, y, value`` to observations.

    Row ``i`` of the frame is reported as file line ``i + 2`` (after the header).

    Raises:
        ParseError: On a wrong header, missing or non-numeric field, or no data rows
    """
    columns = [str(c).strip() for c in df.columns]
    if columns != OBSERVATION_COLUMNS:
        raise ParseError(f"expected header 'x,y,value', got '{','.join(columns)}'", 1)
    if df.empty:
        raise ParseError("no observations after the header", 2)

    coords = np.empty((len(df), 2))
    values = np.empty(len(df))
    for i, row in enumerate(df.itertuples(index=False, name=None)):
        line = i + 2
        coords[i, 0] = _parse_number(row[0], 'x', line)
        coords[i, 1] = _parse_number(row[1], 'y', line)
        values[i] = _parse_number(row[2], 'value', line)

    return Observations.from_arrays(coords, values, average_duplicates=average_duplicates,
                                    duplicate_tolerance=duplicate_tolerance)


def read_observations(path: str, average_duplicates: bool = False,
                      duplicate_tolerance: float = DUPLICATE_TOLERANCE) -> Observations:
    """
    Read an observations CSV file.

    Args:
        path: File with header ``x,y,value``
        average_duplicates: Merge coincident sites instead of rejecting them
        duplicate_tolerance: Distance below which two sites coincide

    Returns:
        Observations in file order

    Raises:
        ParseError: If the file is empty or malformed (the line number is reported)
        OSError: If the file cannot be read
    """
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False,
                         encoding='utf-8', sep=',')
    except pd.errors.EmptyDataError:
        raise ParseError("file is empty", 1)
    except pd.errors.ParserError as e:
        raise ParseError(f"malformed CSV: {e}")
    except UnicodeDecodeError as e:
        raise ParseError(f"file is not valid UTF-8: {e}")

    obs = parse_observations(df, average_duplicates=average_duplicates,
                             duplicate_tolerance=duplicate_tolerance)
    logger.info(f"Read {obs.n} observations from {path}")
    return obs


def observations_frame(obs: Observations) -> pd.DataFrame:
    coords = obs.coords
    return pd.DataFrame({'x': coords[:, 0], 'y': coords[:, 1], 'value': obs.values_array})


def write_observations(path: str, obs: Observations) -> None:
    """Write observations as ``x,y,value`` CSV, readable by ``read_observations``."""
    observations_frame(obs).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"Wrote {obs.n} observations to {path}")


def grid_frame(coords: np.ndarray, predictions: Sequence[float],
               variances: Optional[Sequence[float]] = None) -> pd.DataFrame:
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    data = {'x': coords[:, 0], 'y': coords[:, 1], 'prediction': np.asarray(predictions, dtype=float)}
    if variances is not None:
        data['variance'] = np.asarray(variances, dtype=float)
    return pd.DataFrame(data)


def write_grid(path: str, coords: np.ndarray, predictions: Sequence[float],
               variances: Optional[Sequence[float]] = None) -> None:
    """
    Write grid predictions as CSV.

    The header is ``x,y,prediction`` plus ``variance`` when variances are given.
    """
    df = grid_frame(coords, predictions, variances)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"Wrote {len(df)} grid predictions to {path}")


class ReportDumper(yaml.SafeDumper):
    """YAML dumper writing floats with 17 significant digits."""
    pass


def _represent_float(dumper: yaml.SafeDumper, value) -> yaml.ScalarNode:
    value = float(value)
    if math.isnan(value):
        text = '.nan'
    elif math.isinf(value):
        text = '.inf' if value > 0 else '-.inf'
    else:
        text = format_float(value)
        # YAML 1.1 only resolves plain scalars with a '.' as floats
        if '.' not in text:
            text = text.replace('e', '.0e', 1) if 'e' in text else text + '.0'
    return dumper.represent_scalar('tag:yaml.org,2002:float', text)


def _represent_int(dumper: yaml.SafeDumper, value) -> yaml.ScalarNode:
    return dumper.represent_int(int(value))


ReportDumper.add_representer(float, _represent_float)
ReportDumper.add_multi_representer(np.floating, _represent_float)
ReportDumper.add_multi_representer(np.integer, _represent_int)
ReportDumper.add_representer(np.bool_, lambda d, v: d.represent_bool(bool(v)))


def dump_report(document: Dict[str, Any]) -> str:
    """Serialize a report document to YAML text with keys in insertion order."""
    return yaml.dump(document, Dumper=ReportDumper, sort_keys=False, default_flow_style=False,
                     allow_unicode=True, width=1000)


def write_report(path: str, document: Dict[str, Any]) -> None:
    text = dump_report(document)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)
    logger.info(f"Wrote report to {path}")


def read_report(path: str) -> Dict[str, Any]:
    """Load a report written by ``write_report``."""
    with open(path, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f)
