"""
File formats: observation CSVs, prediction grids and YAML reports.
"""

from .io import (
    ParseError,
    dump_report,
    format_float,
    grid_frame,
    observations_frame,
    parse_observations,
    read_observations,
    read_report,
    write_grid,
    write_observations,
    write_report,
)

__all__ = [
    'ParseError',
    'dump_report',
    'format_float',
    'grid_frame',
    'observations_frame',
    'parse_observations',
    'read_observations',
    'read_report',
    'write_grid',
    'write_observations',
    'write_report',
]
