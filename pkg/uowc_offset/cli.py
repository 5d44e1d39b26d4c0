import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
import numpy as np
from dotenv import load_dotenv
from loguru import logger

from uowc_offset.channel import RayGeometry, los_channel_gain
from uowc_offset.config import LEVEL_PRESETS, SystemParams, load_config
from uowc_offset.dispatch import Dispatch, load_suite
from uowc_offset.energy import (
    STRATEGIES,
    density_sweep,
    link_kpis,
)
from uowc_offset.errors import (
    ConfigError,
    DomainError,
    InfeasibleError,
    ValidationFailed,
)
from uowc_offset.figures import (
    FIGURE_IDS,
    delta_opt_report,
    density_grid_report,
    mean_link,
    nn_distribution_report,
    offset_grid_report,
    optimization_meta,
    pat_report,
    run_figure,
)
from uowc_offset.geometry import (
    NNDistribution,
    expected_link_depth,
    mean_nn_distance,
    median_nn_distance,
    nn_survival,
)
from uowc_offset.models import NoiseBreakdown
from uowc_offset.output import Report, emit, new_manifest, sweep_report, write_manifest
from uowc_offset.power import (
    optimal_offset_exact,
    pat_power,
    power_main_lobe,
    power_offset,
    power_random_orientation,
)
from uowc_offset.sipm import ber_ook, excess_noise_factor, noise_variances, snr_for_ber

# Excess noise factor quoted next to P_ct = 0.08 in the reference parameter sheet.
QUOTED_EXCESS_NOISE = 1.08

NOISE_COLUMNS = [
    "sigma_q2",
    "sigma_d2",
    "sigma_solar2",
    "sigma_th2",
    "sigma_total2",
    "signal_current",
    "solar_power",
]


@dataclass
class AppContext:
    params: SystemParams
    raw: Dict[str, Any]
    seed: int
    out: Path
    fmt: str
    level: Optional[int]
    workers: int
    argv: List[str] = field(default_factory=list)

    def write(self, command: str, reports: List[Report]) -> List[Path]:
        """Emit each report plus its manifest; report metadata lands in the manifest extras."""
        paths = []
        for report in reports:
            path = emit(report, self.fmt, self.out)
            manifest = new_manifest(
                command=command,
                argv=self.argv,
                config=self.raw,
                seed=self.seed,
                level=self.level,
                outputs=[str(path)],
                extras=report.meta,
            )
            write_manifest(manifest, path)
            paths.append(path)
        return paths


class UowcGroup(click.Group):
    """Maps the package's error classes onto exit codes."""

    def main(self, args=None, **extra):
        self.argv = list(sys.argv[1:] if args is None else args)
        return super().main(args=args, **extra)

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except ConfigError as exc:
            for violation in exc.violations:
                logger.error("Invalid configuration: {}", violation)
            ctx.exit(exc.exit_code)
        except (DomainError, InfeasibleError, ValidationFailed) as exc:
            logger.error("{}: {}", type(exc).__name__, exc)
            ctx.exit(exc.exit_code)


def _noise_row(noise: NoiseBreakdown) -> Dict[str, float]:
    return {column: getattr(noise, column) for column in NOISE_COLUMNS}


def _lambda_grid(lambda_min: float, lambda_max: float, points: int) -> List[float]:
    if not 0 < lambda_min < lambda_max:
        raise DomainError("need 0 < --lambda-min < --lambda-max")
    if points < 2:
        raise DomainError("need at least two grid points")
    return [float(v) for v in np.logspace(math.log10(lambda_min), math.log10(lambda_max), points)]


def _link_length(app: AppContext, length: Optional[float]) -> float:
    return mean_link(app.params) if length is None else length


def _check_crosstalk_quote(params: SystemParams) -> None:
    if params.crosstalk_prob == 0.08:
        logger.warning(
            "Reference sheet quotes F = {} for P_ct = 0.08; using computed F = {:.6f}",
            QUOTED_EXCESS_NOISE,
            excess_noise_factor(params.crosstalk_prob),
        )


@click.group(cls=UowcGroup)
@click.option(
    "--config",
    help="Path to JSON/YAML parameter file (defaults to the built-in reference set)",
    envvar="UOWC_CONFIG",
    type=click.Path(dir_okay=False),
)
@click.option(
    "--seed",
    help="Seed for every Monte Carlo estimator",
    type=click.IntRange(0, 2**64 - 1),
    default=42,
    show_default=True,
)
@click.option("--out", help="Output directory", default="out", show_default=True)
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["csv", "json"]),
    default="csv",
    show_default=True,
)
@click.option(
    "--level",
    help="Depth level preset (1: 50 m, 2: 500 m, 3: 6000 m slab)",
    type=click.IntRange(1, 3),
)
@click.option(
    "--workers",
    help="Threads for Monte Carlo and sweep work; results do not depend on it",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
)
@click.option("--lambda", "lambda_2d", type=float, help="Areal node intensity, nodes/m^2")
@click.option("--slab-depth", type=float, help="Slab depth R in metres")
@click.option("--phi-half-deg", type=float, help="LED half-power semi-angle in degrees")
@click.option("--tx-power", type=float, help="Transmit power in watts")
@click.pass_context
def cli(ctx, config, seed, out, fmt, level, workers, lambda_2d, slab_depth, phi_half_deg, tx_power):
    """
    Offset-pointing link budgets for underwater optical sensor networks.

    Angles are given in degrees on the command line and handled in radians
    internally. Precedence: parameter file, then --level, then explicit flags.
    """
    overrides: Dict[str, Any] = {}
    if level is not None:
        overrides["slab_depth"] = LEVEL_PRESETS[level].slab_depth
    flags = {
        "lambda_2d": lambda_2d,
        "slab_depth": slab_depth,
        "phi_half_deg": phi_half_deg,
        "tx_power": tx_power,
    }
    overrides |= {key: value for key, value in flags.items() if value is not None}

    params, raw = load_config(config, overrides)

    ctx.obj = AppContext(
        params=params,
        raw=raw,
        seed=seed,
        out=Path(out),
        fmt=fmt,
        level=level,
        workers=workers,
        argv=getattr(ctx.command, "argv", []),
    )


@cli.command("nn-dist")
@click.option("--points", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--s-max", type=float, help="Largest distance (default: 99.99% quantile)")
@click.pass_obj
def nn_dist(app: AppContext, points, s_max):
    """Closed-form nearest-neighbour survival, density and CDF."""
    dist = NNDistribution.from_params(app.params)
    report = nn_distribution_report(app.params, points, s_max)
    report.meta = {
        "mean_m": mean_nn_distance(dist),
        "median_m": median_nn_distance(dist),
        "expected_depth_m": expected_link_depth(dist),
    }
    app.write("nn-dist", [report])


@cli.command()
@click.pass_obj
def depth(app: AppContext):
    """Mean link length and expected neighbour depth."""
    dist = NNDistribution.from_params(app.params)
    row = {
        "lambda_per_m2": dist.lambda_2d,
        "slab_depth_m": dist.slab_depth,
        "mean_link_m": mean_nn_distance(dist),
        "median_link_m": median_nn_distance(dist),
        "expected_depth_m": expected_link_depth(dist),
        "survival_at_depth": nn_survival(dist, dist.slab_depth),
    }
    app.write("depth", [Report(name="depth", columns=list(row), rows=[row])])


@cli.command()
@click.option("--L", "length", type=float, help="Link length in metres (default: mean link)")
@click.option(
    "--variant",
    type=click.Choice(["all", "random_orientation", "main_lobe", "offset", "pat"]),
    default="all",
    show_default=True,
)
@click.option("--delta-deg", type=float, help="Pointing offset (default: optimal offset)")
@click.option("--epsilon-deg", type=float, default=0.0, show_default=True)
@click.pass_obj
def power(app: AppContext, length, variant, delta_deg, epsilon_deg):
    """Received power at one link length."""
    params = app.params
    length = _link_length(app, length)
    delta = (
        optimal_offset_exact(params.phi_half) if delta_deg is None else math.radians(delta_deg)
    )

    variants = {
        "random_orientation": lambda: power_random_orientation(params, length),
        "main_lobe": lambda: power_main_lobe(params, length),
        "offset": lambda: power_offset(params, length, delta),
        "pat": lambda: pat_power(params, length, math.radians(epsilon_deg)),
    }
    selected = list(variants) if variant == "all" else [variant]

    rows = []
    for name in selected:
        result = variants[name]()
        rows.append(
            {
                "variant": result.variant,
                "link_m": result.link_length,
                "delta_deg": None
                if result.offset_angle is None
                else math.degrees(result.offset_angle),
                "epsilon_deg": None
                if result.pointing_error is None
                else math.degrees(result.pointing_error),
                "power_w": result.value,
            }
        )

    app.write(
        "power",
        [
            Report(
                name="power",
                columns=["variant", "link_m", "delta_deg", "epsilon_deg", "power_w"],
                rows=rows,
            )
        ],
    )


@cli.command("channel-gain")
@click.option("--theta-deg", type=float, required=True, help="Irradiance angle at the transmitter")
@click.option("--psi-deg", type=float, required=True, help="Incidence angle at the receiver")
@click.option("--L", "length", type=float, required=True, help="Link length in metres")
@click.pass_obj
def channel_gain(app: AppContext, theta_deg, psi_deg, length):
    """Line-of-sight DC gain of a single ray."""
    geom = RayGeometry(math.radians(theta_deg), math.radians(psi_deg), length)
    gain = los_channel_gain(geom, app.params)
    row = {
        "theta_deg": theta_deg,
        "psi_deg": psi_deg,
        "link_m": length,
        "gain": gain,
        "prx_w": app.params.tx_power * gain,
    }
    app.write("channel-gain", [Report(name="channel-gain", columns=list(row), rows=[row])])


@cli.command("offset-opt")
@click.option("--phi-min-deg", type=float, default=10.0, show_default=True)
@click.option("--phi-max-deg", type=float, default=80.0, show_default=True)
@click.option("--step-deg", type=float, default=1.0, show_default=True)
@click.pass_obj
def offset_opt(app: AppContext, phi_min_deg, phi_max_deg, step_deg):
    """Optimal pointing offset, exact root and empirical approximation."""
    app.write("offset-opt", [delta_opt_report("offset-opt", phi_min_deg, phi_max_deg, step_deg)])


@cli.command()
@click.option("--L", "length", type=float, help="Link length in metres (default: mean link)")
@click.option("--step-deg", type=float, default=0.5, show_default=True)
@click.pass_obj
def pat(app: AppContext, length, step_deg):
    """Tracked-link power against pointing error, with crossover angles."""
    report = pat_report(app.params, _link_length(app, length), "pat", step_deg)
    app.write("pat", [report])


@cli.command()
@click.option("--kind", type=click.Choice(["offset", "rl"]), default="offset", show_default=True)
@click.option("--normalize/--no-normalize", default=False, show_default=True)
@click.option("--L", "length", type=float, help="Link length for --kind offset (default: mean link)")
@click.option("--phi-step-deg", type=float, default=1.0, show_default=True)
@click.option("--delta-step-deg", type=float, default=0.5, show_default=True)
@click.option("--delta-deg", type=float, default=0.0, show_default=True, help="Offset for --kind rl")
@click.option("--points", type=click.IntRange(min=2), default=25, show_default=True)
@click.pass_obj
def grid(app: AppContext, kind, normalize, length, phi_step_deg, delta_step_deg, delta_deg, points):
    """Received-power table over (half-power angle, offset) or (slab depth, density)."""
    if kind == "offset":
        report = offset_grid_report(
            app.params,
            _link_length(app, length),
            "grid-offset",
            phi_step_deg,
            delta_step_deg,
            normalize,
        )
    else:
        depths = [float(v) for v in np.logspace(1.0, math.log10(6000.0), points)]
        lambdas = [float(v) for v in np.logspace(-4.0, -1.0, points)]
        report = density_grid_report(
            app.params, depths, lambdas, "grid-rl", math.radians(delta_deg), normalize
        )
    app.write("grid", [report])


def _link_budget(
    app: AppContext,
    prx: Optional[float],
    l_deep: Optional[float],
    delta_deg: Optional[float],
) -> Dict[str, Any]:
    params = app.params
    _check_crosstalk_quote(params)

    if prx is None:
        delta = (
            optimal_offset_exact(params.phi_half)
            if delta_deg is None
            else math.radians(delta_deg)
        )
        link = link_kpis(params.lambda_2d, params.tx_power, delta, params)
        prx, l_deep, noise = link.p_rx, link.link_depth, link.noise
    else:
        if l_deep is None:
            l_deep = expected_link_depth(NNDistribution.from_params(params))
        noise = noise_variances(prx, params, l_deep)

    snr_value = noise.signal_current**2 / noise.sigma_total2
    return {
        "prx_w": prx,
        "l_deep_m": l_deep,
        "snr": snr_value,
        "snr_db": 10.0 * math.log10(snr_value) if snr_value > 0 else None,
        "ber": ber_ook(snr_value),
        "snr_required": snr_for_ber(params.ber_threshold),
        **_noise_row(noise),
    }


link_options = [
    click.option("--prx", type=float, help="Received power in watts (default: link from the config)"),
    click.option("--l-deep", type=float, help="Receiver depth for the solar term, metres"),
    click.option("--delta-deg", type=float, help="Pointing offset when no --prx (default: optimal)"),
]


def with_link_options(command):
    for option in reversed(link_options):
        command = option(command)
    return command


@cli.command()
@with_link_options
@click.pass_obj
def snr(app: AppContext, prx, l_deep, delta_deg):
    """Signal-to-noise ratio with the full noise breakdown."""
    row = _link_budget(app, prx, l_deep, delta_deg)
    app.write("snr", [Report(name="snr", columns=list(row), rows=[row])])


@cli.command()
@click.option("--snr", "snr_value", type=float, help="Evaluate the BER at this SNR directly")
@with_link_options
@click.pass_obj
def ber(app: AppContext, snr_value, prx, l_deep, delta_deg):
    """NRZ-OOK bit error rate."""
    if snr_value is not None:
        row = {
            "snr": snr_value,
            "ber": ber_ook(snr_value),
            "snr_required": snr_for_ber(app.params.ber_threshold),
        }
    else:
        row = _link_budget(app, prx, l_deep, delta_deg)
    app.write("ber", [Report(name="ber", columns=list(row), rows=[row])])


sweep_options = [
    click.option("--lambda-min", type=float, default=1e-5, show_default=True),
    click.option("--lambda-max", type=float, default=10.0, show_default=True),
    click.option("--points", type=int, default=61, show_default=True),
    click.option(
        "--link-quantile",
        type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True),
        help="Use this quantile of the nearest-neighbour law as the link length",
    ),
]


def with_sweep_options(command):
    for option in reversed(sweep_options):
        command = option(command)
    return command


@cli.command()
@with_sweep_options
@click.pass_obj
def sweep(app: AppContext, lambda_min, lambda_max, points, link_quantile):
    """Minimum transmit power and total bits across a density grid."""
    grid_values = _lambda_grid(lambda_min, lambda_max, points)
    records = density_sweep(app.params, grid_values, app.workers, link_quantile)
    app.write("sweep", [sweep_report("sweep", records)])

    if not any(r.feasible_base or r.feasible_offset for r in records):
        raise InfeasibleError("no density on the grid meets the BER target")


@cli.command()
@click.option(
    "--strategy",
    type=click.Choice(["both", *STRATEGIES]),
    default="both",
    show_default=True,
)
@with_sweep_options
@click.pass_obj
def optimize(app: AppContext, strategy, lambda_min, lambda_max, points, link_quantile):
    """Density and transmit power maximizing the total delivered bits."""
    grid_values = _lambda_grid(lambda_min, lambda_max, points)
    records = density_sweep(app.params, grid_values, app.workers, link_quantile)
    strategies = list(STRATEGIES) if strategy == "both" else [strategy]

    report = sweep_report("optimize", records)
    report.meta = optimization_meta(app.params, grid_values, records, strategies)

    summary = Report(
        name="optimize-summary",
        columns=["strategy", "lambda_star", "ptx_star_w", "nb_star_bits", "unimodal", "refined"],
        rows=[
            {"strategy": name, **(result or {})} for name, result in report.meta.items()
        ],
    )
    app.write("optimize", [report, summary])

    if all(result is None for result in report.meta.values()):
        raise InfeasibleError("no feasible density for the requested strategies")


@cli.command("mc-validate")
@click.option(
    "--oracle-config",
    type=click.Path(dir_okay=False),
    help="Oracle suite YAML (defaults to the built-in suite)",
)
@click.option("--metrics-file", type=click.Path(dir_okay=False), help="Write Prometheus gauges here")
@click.pass_obj
def mc_validate(app: AppContext, oracle_config, metrics_file):
    """Check every closed form against its Monte Carlo oracle."""
    dispatch = Dispatch(load_suite(oracle_config))
    result = dispatch.run(dispatch.states(app.params, app.seed, app.workers))

    report = Report(
        name="mc-validate",
        columns=[
            "check",
            "scenario",
            "closed_form",
            "mc_mean",
            "std_error",
            "z_score",
            "n_samples",
            "seed",
            "passed",
        ],
        rows=result["checks"],
        meta=result,
    )
    app.write("mc-validate", [report])

    if metrics_file:
        dispatch.write_metrics(metrics_file)

    if not result["passed"]:
        failed = [r["check"] + "/" + r["scenario"] for r in result["checks"] if not r["passed"]]
        raise ValidationFailed(f"oracle checks failed: {', '.join(failed)}")


@cli.command()
@click.argument("figure_id", type=click.Choice(FIGURE_IDS))
@click.option("--trials", type=click.IntRange(min=1), help="Monte Carlo trials or samples")
@click.pass_obj
def figure(app: AppContext, figure_id, trials):
    """Data behind one figure (no plotting)."""
    reports = run_figure(figure_id, app.params, app.seed, trials, app.workers)
    app.write(f"figure {figure_id}", reports)


def run():
    cli()


load_dotenv()

logger.remove()
logger.add(
    sys.stderr,
    serialize=(not os.environ.get("DEV_MODE")),
    level=os.environ.get("LOG_LEVEL", "INFO"),
)
