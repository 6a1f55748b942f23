"""
Command-line front end.

Commands:
    variogram  empirical semivariogram and fitted Gaussian model (YAML)
    krige      kriging predictions and variances on a grid (CSV)
    spline     thin-plate spline predictions on a grid (CSV)
    compare    leave-one-out comparison of both methods (YAML report)
    simulate   seeded Gaussian random field at grid nodes or random sites (CSV)

Exit status is 0 on success, 1 when a stage fails and 2 for bad flags. A
failure prints a single ``error [<stage>]: <message>`` line on stderr.
"""

import argparse
import logging
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.crossval.compare import (
    SCHEMA_VERSION,
    KrigingConfig,
    PipelineStageError,
    SplineConfig,
    TrendConfig,
    compare_methods,
    estimate_covariogram,
)
from src.crossval.loo import RefitPolicy
from src.data.io import read_observations, write_grid, write_observations, write_report
from src.geometry.sites import Grid, Observations, grid_sites, site_coords
from src.kriging.universal import DriftBasis, assemble_system, fit_dual, predict_dual_many, predict_primal
from src.simulate.field import FieldSpec, random_sites, simulate_field
from src.spline.thin_plate import default_alpha_grid, fit_tps, predict_tps_many, select_alpha_gcv
from src.trend.median_polish import detrend, fit_trend, trend_values
from src.utils.config import load_config
from src.utils.errors import SpatialError
from src.variogram.estimator import empirical_semivariogram
from src.variogram.models import GaussianCovariogram, fit_gaussian_wls, wls_objective

logger = logging.getLogger(__name__)

COMMANDS = ('variogram', 'krige', 'spline', 'compare', 'simulate')
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(SpatialError):
    """Raised for missing or inconsistent command-line parameters."""
    pass


@dataclass
class RunConfig:
    """
    Fully resolved parameters of one command invocation.

    Attributes:
        command: One of ``COMMANDS``
        input: Observations CSV (all commands except ``simulate``)
        output: File written by the command
        drift: Kriging drift degree (0 ordinary, 1 universal)
        bins: Number of lag bins
        max_lag: Largest lag; ``None`` means half the maximum site distance
        alpha: ``'auto'`` for GCV selection or an explicit smoothing parameter
        trend: ``'none'`` or ``'median-polish'``
        trend_rows: Median polish row bins (``None`` for the default)
        trend_cols: Median polish column bins (``None`` for the default)
        grid: Prediction grid (``krige``, ``spline``) or simulation extent
        seed: Simulation seed
        refit: Leave-one-out refit policy
        model: Explicit covariogram for ``krige``, ``compare`` and ``simulate``
        trend_coef: Planar trend added to simulated fields
        sites: Number of random simulation sites (grid nodes when ``None``)
        settings: Effective configuration (``config.yaml`` merged over defaults)
    """
    command: str
    input: Optional[str] = None
    output: Optional[str] = None
    drift: int = 0
    bins: int = 15
    max_lag: Optional[float] = None
    alpha: Union[str, float] = 'auto'
    trend: str = 'none'
    trend_rows: Optional[int] = None
    trend_cols: Optional[int] = None
    grid: Optional[Grid] = None
    seed: int = 0
    refit: RefitPolicy = RefitPolicy.FIXED
    model: Optional[GaussianCovariogram] = None
    trend_coef: Optional[Tuple[float, float, float]] = None
    sites: Optional[int] = None
    settings: Dict[str, Any] = field(default_factory=load_config)

    def validate(self) -> None:
        """
        Check that the parameters each command needs are present and in range.

        Raises:
            UsageError: On a missing or invalid parameter
        """
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command '{self.command}'")
        if self.output is None:
            raise UsageError(f"{self.command} requires --output")
        if self.command != 'simulate' and self.input is None:
            raise UsageError(f"{self.command} requires --input")
        if self.command in ('krige', 'spline', 'simulate') and self.grid is None:
            raise UsageError(f"{self.command} requires --grid")
        if self.command == 'simulate' and self.model is None:
            raise UsageError("simulate requires --nugget, --partial-sill and --range")
        if self.drift not in (0, 1):
            raise UsageError(f"--drift must be 0 or 1, got {self.drift}")
        if self.bins < 1:
            raise UsageError(f"--bins must be positive, got {self.bins}")
        if self.max_lag is not None and not self.max_lag > 0:
            raise UsageError(f"--max-lag must be positive, got {self.max_lag}")
        if self.alpha != 'auto' and not (isinstance(self.alpha, float) and self.alpha >= 0):
            raise UsageError(f"--alpha must be 'auto' or a non-negative number, got {self.alpha}")
        if self.trend not in ('none', 'median-polish'):
            raise UsageError(f"--trend must be 'none' or 'median-polish', got {self.trend}")
        for name, value in (('--trend-rows', self.trend_rows), ('--trend-cols', self.trend_cols)):
            if value is not None and value < 2:
                raise UsageError(f"{name} must be at least 2, got {value}")
        if self.sites is not None and self.sites < 1:
            raise UsageError(f"--sites must be positive, got {self.sites}")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError(f"--seed must be an unsigned 64-bit integer, got {self.seed}")

    def effective(self) -> Dict[str, Any]:
        """Parameters as plain values, embedded in reports."""
        doc = {
            'command': self.command,
            'input': self.input,
            'drift': self.drift,
            'bins': self.bins,
            'max_lag': self.max_lag,
            'alpha': self.alpha,
            'trend': self.trend,
            'trend_rows': self.trend_rows,
            'trend_cols': self.trend_cols,
            'refit': self.refit.value,
            'model': self.model.as_dict() if self.model is not None else None,
            'settings': self.settings,
        }
        if self.grid is not None:
            doc['grid'] = asdict(self.grid)
        return doc


class _Stage:
    """Tracks the pipeline stage that is currently running."""

    def __init__(self):
        self.name = 'input'

    def __call__(self, name: str) -> "_Stage":
        self.name = name
        logger.debug(f"Stage: {name}")
        return self


def _read(config: RunConfig) -> Observations:
    geometry = config.settings.get('geometry', {})
    return read_observations(config.input, duplicate_tolerance=geometry.get('duplicate_tolerance', 1e-12))


def _run_variogram(config: RunConfig, stage: _Stage) -> None:
    obs = _read(config)
    stage('variogram')
    ev = empirical_semivariogram(obs, n_bins=config.bins, max_lag=config.max_lag)
    model = fit_gaussian_wls(ev)
    params = np.array([model.nugget, model.partial_sill, model.range])
    document = {
        'schema_version': SCHEMA_VERSION,
        'configuration': config.effective(),
        'n': obs.n,
        'estimator': 'classic (Matheron)',
        'max_lag': ev.max_lag,
        'lags': [
            {'lag_center': float(h), 'gamma_hat': float(g), 'pair_count': int(c)}
            for h, g, c in zip(ev.lag_centers, ev.gamma_hat, ev.pair_counts)
        ],
        'model': model.as_dict(),
        'wls_objective': float(wls_objective(params, ev)),
    }
    stage('output')
    write_report(config.output, document)


def _kriging_model(config: RunConfig, obs: Observations) -> GaussianCovariogram:
    """Explicit model, else the WLS fit, else a pure nugget at the sample variance."""
    if config.model is not None:
        return config.model
    model, source = estimate_covariogram(obs, config.bins, config.max_lag, pure_nugget_fallback=True)
    logger.info(f"Covariogram ({source}): {model}")
    return model


def _run_krige(config: RunConfig, stage: _Stage) -> None:
    obs = _read(config)
    targets = grid_sites(config.grid)
    coords = site_coords(targets)

    obs, offsets = _detrend_for_grid(config, stage, obs, coords)

    stage('variogram')
    model = _kriging_model(config, obs)

    stage('kriging')
    system = assemble_system(obs, model, DriftBasis(config.drift),
                             rcond_threshold=config.settings['kriging']['rcond_threshold'])
    predictions = predict_dual_many(fit_dual(system), coords) + offsets
    variances = np.array([predict_primal(system, t).variance for t in targets])

    stage('output')
    write_grid(config.output, coords, predictions, variances)


def _detrend_for_grid(config: RunConfig, stage: _Stage, obs: Observations, coords: np.ndarray):
    """Median-polish residuals and the trend at the grid sites, or the data and zeros."""
    if config.trend != 'median-polish':
        return obs, np.zeros(len(coords))
    stage('trend')
    trend_fit = fit_trend(obs, config.trend_rows, config.trend_cols,
                          config.settings['trend']['tol'], config.settings['trend']['max_iter'])
    return detrend(obs, trend_fit), trend_values(trend_fit, coords)


def _run_spline(config: RunConfig, stage: _Stage) -> None:
    obs = _read(config)
    coords = site_coords(grid_sites(config.grid))
    obs, offsets = _detrend_for_grid(config, stage, obs, coords)
    alpha = config.alpha
    if alpha == 'auto':
        stage('smoothing')
        spline = config.settings['spline']
        grid = default_alpha_grid(obs, spline['gcv_grid_size'], spline['gcv_low'], spline['gcv_high'])
        alpha = select_alpha_gcv(obs, grid, tie_tolerance=spline['tie_tolerance']).alpha

    stage('spline')
    fit = fit_tps(obs, alpha, rcond_threshold=config.settings['kriging']['rcond_threshold'])
    predictions = predict_tps_many(fit, coords) + offsets

    stage('output')
    write_grid(config.output, coords, predictions)


def _run_compare(config: RunConfig, stage: _Stage) -> None:
    obs = _read(config)
    spline = config.settings['spline']
    trend = config.settings['trend']
    report = compare_methods(
        obs,
        KrigingConfig(drift_degree=config.drift, n_bins=config.bins, max_lag=config.max_lag,
                      model=config.model,
                      pure_nugget_fallback=bool(config.settings['kriging']['pure_nugget_fallback'])),
        SplineConfig(alpha=None if config.alpha == 'auto' else float(config.alpha),
                     grid_size=spline['gcv_grid_size'], grid_low=spline['gcv_low'],
                     grid_high=spline['gcv_high']),
        TrendConfig(method=config.trend, rows=config.trend_rows, cols=config.trend_cols,
                    tol=trend['tol'], max_iter=trend['max_iter']),
        refit_policy=config.refit,
        rcond_threshold=config.settings['kriging']['rcond_threshold'],
    )
    document = report.as_dict()
    document['configuration'] = config.effective()

    stage('output')
    write_report(config.output, document)


def _run_simulate(config: RunConfig, stage: _Stage) -> None:
    stage('simulate')
    g = config.grid
    if config.sites is not None:
        sites = random_sites(config.sites, (g.x_min, g.x_max, g.y_min, g.y_max), config.seed)
    else:
        sites = grid_sites(g)
    obs = simulate_field(FieldSpec(model=config.model, trend=config.trend_coef, seed=config.seed), sites)

    stage('output')
    write_observations(config.output, obs)


HANDLERS = {
    'variogram': _run_variogram,
    'krige': _run_krige,
    'spline': _run_spline,
    'compare': _run_compare,
    'simulate': _run_simulate,
}


def _report_error(stage: str, error: Exception) -> None:
    message = str(error).replace('\n', ' ')
    print(f"error [{stage}]: {message}", file=sys.stderr)


def run(config: RunConfig) -> int:
    """
    Execute one command.

    Args:
        config: Resolved command parameters

    Returns:
        Exit status: 0 on success, 1 if a stage failed, 2 for invalid parameters
    """
    try:
        config.validate()
    except UsageError as e:
        _report_error('usage', e)
        return EXIT_USAGE

    stage = _Stage()
    try:
        HANDLERS[config.command](config, stage)
    except PipelineStageError as e:
        logger.debug(f"{config.command} failed", exc_info=True)
        _report_error(e.stage, e.cause)
        return EXIT_FAILURE
    except (SpatialError, ValueError, OSError) as e:
        logger.debug(f"{config.command} failed", exc_info=True)
        _report_error(stage.name, e)
        return EXIT_FAILURE

    logger.info(f"{config.command} wrote {config.output}")
    return EXIT_OK


def _float_list(text: str, count: int, name: str) -> List[float]:
    parts = text.split(',')
    if len(parts) != count:
        raise argparse.ArgumentTypeError(f"{name} needs {count} comma-separated values, got '{text}'")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name} has a non-numeric entry: '{text}'")


def parse_grid(text: str) -> Grid:
    """Parse ``xmin,xmax,ymin,ymax,nx,ny``."""
    values = _float_list(text, 6, '--grid')
    nx, ny = values[4], values[5]
    if nx != int(nx) or ny != int(ny):
        raise argparse.ArgumentTypeError(f"--grid counts must be integers, got '{text}'")
    try:
        return Grid(values[0], values[1], values[2], values[3], int(nx), int(ny))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def parse_alpha(text: str) -> Union[str, float]:
    if text == 'auto':
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--alpha must be 'auto' or a number, got '{text}'")
    if not value >= 0 or value == float('inf'):
        raise argparse.ArgumentTypeError(f"--alpha must be a finite non-negative number, got '{text}'")
    return value


def parse_trend_coef(text: str) -> Tuple[float, float, float]:
    return tuple(_float_list(text, 3, '--trend-coef'))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='spatial-predict',
        description='Kriging and thin-plate spline prediction with leave-one-out comparison',
    )
    parser.add_argument('command', choices=COMMANDS, help='Command to run')
    parser.add_argument('--input', help='Observations CSV with header x,y,value')
    parser.add_argument('--output', help='Output file (CSV or YAML depending on the command)')
    parser.add_argument('--drift', type=int, choices=(0, 1), help='Kriging drift degree')
    parser.add_argument('--bins', type=int, help='Number of semivariogram lag bins')
    parser.add_argument('--max-lag', type=float, help='Largest semivariogram lag')
    parser.add_argument('--alpha', type=parse_alpha, default='auto',
                        help="Smoothing parameter, or 'auto' for GCV selection")
    parser.add_argument('--trend', choices=('none', 'median-polish'), default='none',
                        help='Detrending applied before fitting')
    parser.add_argument('--trend-rows', type=int, help='Median polish row bins')
    parser.add_argument('--trend-cols', type=int, help='Median polish column bins')
    parser.add_argument('--grid', type=parse_grid, help='Grid as xmin,xmax,ymin,ymax,nx,ny')
    parser.add_argument('--seed', type=int, default=0, help='Simulation seed')
    parser.add_argument('--refit', choices=[p.value for p in RefitPolicy],
                        help='Leave-one-out refit policy')
    parser.add_argument('--nugget', type=float, help='Covariogram nugget c0')
    parser.add_argument('--partial-sill', type=float, help='Covariogram partial sill c1')
    parser.add_argument('--range', type=float, help='Covariogram range a')
    parser.add_argument('--trend-coef', type=parse_trend_coef,
                        help='Planar trend b0,b1,b2 added to simulated values')
    parser.add_argument('--sites', type=int, help='Simulate at this many random sites inside the grid extent')
    parser.add_argument('--config', help='Configuration YAML (defaults to config.yaml)')
    parser.add_argument('--verbose', '-v', action='store_true', help='Log progress to stderr')
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """
    Resolve parsed flags against the configuration file.

    Raises:
        UsageError: If the model flags are incomplete or invalid
    """
    settings = load_config(args.config)

    model_flags = (args.nugget, args.partial_sill, args.range)
    model = None
    if any(v is not None for v in model_flags):
        if any(v is None for v in model_flags):
            raise UsageError("--nugget, --partial-sill and --range must be given together")
        try:
            model = GaussianCovariogram(nugget=args.nugget, partial_sill=args.partial_sill, range=args.range)
        except ValueError as e:
            raise UsageError(str(e))

    return RunConfig(
        command=args.command,
        input=args.input,
        output=args.output,
        drift=args.drift if args.drift is not None else int(settings['kriging']['drift_degree']),
        bins=args.bins if args.bins is not None else int(settings['variogram']['n_bins']),
        max_lag=args.max_lag,
        alpha=args.alpha,
        trend=args.trend,
        trend_rows=args.trend_rows,
        trend_cols=args.trend_cols,
        grid=args.grid,
        seed=args.seed,
        refit=RefitPolicy(args.refit or settings['crossval']['refit_policy']),
        model=model,
        trend_coef=args.trend_coef,
        sites=args.sites,
        settings=settings,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse ``argv`` and run the command.

    Returns:
        Process exit status
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        config = config_from_args(args)
    except UsageError as e:
        _report_error('usage', e)
        return EXIT_USAGE
    except (OSError, ValueError) as e:
        _report_error('config', e)
        return EXIT_USAGE

    level = logging.INFO if args.verbose else str(config.settings['logging']['level']).upper()
    logging.getLogger().setLevel(level)

    return run(config)
