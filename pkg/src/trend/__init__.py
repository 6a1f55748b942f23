"""
Median-polish trend removal and re-trending.
"""

from .median_polish import (
    EmptyRowOrColumnError,
    MedianPolishFit,
    TwoWayTable,
    bin_to_table,
    default_table_shape,
    detrend,
    fit_trend,
    median_polish,
    retrend,
    trend_at,
    trend_values,
)

__all__ = [
    'EmptyRowOrColumnError',
    'MedianPolishFit',
    'TwoWayTable',
    'bin_to_table',
    'default_table_shape',
    'detrend',
    'fit_trend',
    'median_polish',
    'retrend',
    'trend_at',
    'trend_values',
]
