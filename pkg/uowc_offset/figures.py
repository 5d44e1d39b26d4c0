import dataclasses
import math
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from uowc_offset.config import LEVEL_PRESETS, SystemParams, apply_level
from uowc_offset.energy import (
    DEFAULT_LAMBDA_GRID,
    STRATEGIES,
    density_sweep,
    link_kpis,
    optimize,
)
from uowc_offset.errors import DomainError, InfeasibleError, NoCrossingError
from uowc_offset.geometry import (
    NNDistribution,
    cdf_values,
    mean_nn_distance,
    nn_inverse_cdf,
    nn_survival,
    pdf_values,
    survival_values,
)
from uowc_offset.models import SweepRecord
from uowc_offset.oracle.sampling import mc_nn_distance, mc_power_angular
from uowc_offset.output import Report, sweep_report
from uowc_offset.power import (
    DensityAxes,
    OffsetAxes,
    main_lobe_factor,
    offset_factor,
    optimal_offset_approx,
    optimal_offset_exact,
    pat_crossover,
    pat_power,
    power_grid,
    power_main_lobe,
    power_offset,
    power_random_orientation,
)

FIGURE_IDS = (
    "nn-dist",
    "delta-opt",
    "pat-compare",
    "offset-heatmap",
    "power-validate",
    "phi-sweep",
    "strategy-compare",
    "energy-opt",
    "rl-heatmap",
)

DEFAULT_NN_TRIALS = 100000
DEFAULT_POWER_SAMPLES = 1000000
NN_GRID_QUANTILE = 0.9999
VALIDATION_LENGTHS = (5.0, 10.0, 20.0, 40.0, 80.0)
PHI_SWEEP_LAMBDAS = (0.001, 0.01, 0.1)

NN_COLUMNS = ["s_m", "survival", "pdf_per_m", "cdf"]
DELTA_COLUMNS = ["phi_half_deg", "delta_exact_deg", "delta_approx_deg", "deviation_deg"]


def degree_range(start: float, stop: float, step: float) -> List[float]:
    """Inclusive range built from integer multiples of `step`."""
    if not step > 0 or stop < start:
        raise DomainError(f"bad degree range {start}..{stop} step {step}")
    count = int(round((stop - start) / step)) + 1
    return [start + i * step for i in range(count)]


def mean_link(params: SystemParams) -> float:
    return mean_nn_distance(NNDistribution.from_params(params))


def nn_distribution_report(
    params: SystemParams, points: int = 200, s_max: Optional[float] = None
) -> Report:
    dist = NNDistribution.from_params(params)
    upper = nn_inverse_cdf(dist, NN_GRID_QUANTILE) if s_max is None else s_max
    grid = np.linspace(0.0, upper, points + 1)

    rows = [
        {"s_m": float(s), "survival": float(sv), "pdf_per_m": float(pdf), "cdf": float(cdf)}
        for s, sv, pdf, cdf in zip(
            grid,
            survival_values(dist, grid),
            pdf_values(dist, grid),
            cdf_values(dist, grid),
        )
    ]

    return Report(name="nn-dist", columns=list(NN_COLUMNS), rows=rows)


def nn_dist_figure(
    params: SystemParams, seed: int, trials: Optional[int], workers: int
) -> List[Report]:
    trials = trials or DEFAULT_NN_TRIALS
    report = nn_distribution_report(params)
    sample = mc_nn_distance(params.lambda_2d, params.slab_depth, trials, seed, workers)

    ordered = np.sort(sample.distances)
    n = ordered.size
    for row in report.rows:
        cdf = row["cdf"]
        row["empirical_cdf"] = float(np.searchsorted(ordered, row["s_m"], side="right")) / n
        row["empirical_cdf_se"] = math.sqrt(cdf * (1.0 - cdf) / n)
        row["seed"] = seed
        row["ks_statistic"] = sample.ks_statistic

    report.columns += ["empirical_cdf", "empirical_cdf_se", "seed", "ks_statistic"]
    report.meta = {
        "ks_statistic": sample.ks_statistic,
        "trials": trials,
        "empty_trials": sample.empty_trials,
        "window_radius_m": sample.window_radius,
    }

    return [report]


def delta_opt_report(
    name: str = "delta-opt",
    phi_min_deg: float = 10.0,
    phi_max_deg: float = 80.0,
    step_deg: float = 1.0,
) -> Report:
    rows = []
    for phi_deg in degree_range(phi_min_deg, phi_max_deg, step_deg):
        phi = math.radians(phi_deg)
        exact = math.degrees(optimal_offset_exact(phi))
        approx = math.degrees(optimal_offset_approx(phi))
        rows.append(
            {
                "phi_half_deg": phi_deg,
                "delta_exact_deg": exact,
                "delta_approx_deg": approx,
                "deviation_deg": approx - exact,
            }
        )

    return Report(name=name, columns=list(DELTA_COLUMNS), rows=rows)


def pat_report(
    params: SystemParams,
    length: float,
    name: str = "pat-compare",
    step_deg: float = 0.5,
) -> Report:
    """
    Tracked-link power against pointing error, next to the three untracked
    strategies. Crossover angles go to the metadata, None when the tracked
    link never falls that low.
    """
    delta_opt = optimal_offset_exact(params.phi_half)
    axial = pat_power(params, length, 0.0).value
    random_w = power_random_orientation(params, length).value
    lobe_w = power_main_lobe(params, length).value
    offset_w = power_offset(params, length, delta_opt).value

    rows = []
    for eps_deg in degree_range(0.0, 90.0, step_deg):
        pat_w = pat_power(params, length, math.radians(eps_deg)).value
        rows.append(
            {
                "epsilon_deg": eps_deg,
                "pat_w": pat_w,
                "random_orientation_w": random_w,
                "main_lobe_w": lobe_w,
                "offset_w": offset_w,
                "pat_norm": pat_w / axial,
                "random_orientation_norm": random_w / axial,
                "main_lobe_norm": lobe_w / axial,
                "offset_norm": offset_w / axial,
            }
        )

    meta: Dict[str, object] = {
        "link_length_m": length,
        "delta_opt_deg": math.degrees(delta_opt),
    }
    for label, delta in (("crossover_offset_deg", delta_opt), ("crossover_base_deg", 0.0)):
        try:
            meta[label] = math.degrees(pat_crossover(params, length, delta))
        except NoCrossingError:
            meta[label] = None

    return Report(name=name, columns=list(rows[0]), rows=rows, meta=meta)


def offset_grid_report(
    params: SystemParams,
    length: float,
    name: str = "offset-heatmap",
    phi_step_deg: float = 1.0,
    delta_step_deg: float = 0.5,
    normalize: bool = True,
) -> Report:
    axes = OffsetAxes(
        phi_values=[math.radians(v) for v in degree_range(10.0, 80.0, phi_step_deg)],
        delta_values=[math.radians(v) for v in degree_range(0.0, 45.0, delta_step_deg)],
        link_length=length,
    )
    rows = [
        {
            "phi_half_deg": math.degrees(cell.row),
            "delta_deg": math.degrees(cell.column),
            "power_w": None if cell.result is None else cell.result.value,
            "normalized": cell.normalized,
        }
        for cell in power_grid(params, axes, normalize=normalize)
    ]

    return Report(
        name=name,
        columns=["phi_half_deg", "delta_deg", "power_w", "normalized"],
        rows=rows,
        meta={"link_length_m": length},
    )


def density_grid_report(
    params: SystemParams,
    slab_values: Sequence[float],
    lambda_values: Sequence[float],
    name: str = "rl-heatmap",
    delta: float = 0.0,
    normalize: bool = True,
) -> Report:
    axes = DensityAxes(slab_values=slab_values, lambda_values=lambda_values, delta=delta)

    rows = []
    for cell in power_grid(params, axes, normalize=normalize):
        dist = NNDistribution(cell.column, cell.row)
        rows.append(
            {
                "slab_depth_m": cell.row,
                "lambda_per_m2": cell.column,
                "link_m": None if cell.result is None else cell.result.link_length,
                "power_w": None if cell.result is None else cell.result.value,
                "normalized": cell.normalized,
                # Mass beyond the slab depth, where the law turns Gaussian
                "survival_at_depth": nn_survival(dist, cell.row),
            }
        )

    return Report(
        name=name,
        columns=[
            "slab_depth_m",
            "lambda_per_m2",
            "link_m",
            "power_w",
            "normalized",
            "survival_at_depth",
        ],
        rows=rows,
        meta={"delta_deg": math.degrees(delta)},
    )


def power_validate_figure(
    params: SystemParams, seed: int, samples: Optional[int], workers: int
) -> List[Report]:
    samples = samples or DEFAULT_POWER_SAMPLES
    delta_opt = optimal_offset_exact(params.phi_half)

    rows = []
    for length in VALIDATION_LENGTHS:
        full = mc_power_angular(params, length, samples, seed, workers)
        lobe = mc_power_angular(params, length, samples, seed, workers, lobe="main_lobe")
        offset = mc_power_angular(
            params, length, samples, seed, workers, lobe="offset", delta=delta_opt
        )
        rows.append(
            {
                "link_m": length,
                "closed_random_w": power_random_orientation(params, length).value,
                "mc_random_w": full.mean,
                "mc_random_se": full.std_error,
                "closed_main_lobe_w": power_main_lobe(params, length).value,
                "mc_main_lobe_w": lobe.mean,
                "mc_main_lobe_se": lobe.std_error,
                "closed_offset_w": power_offset(params, length, delta_opt).value,
                "mc_offset_w": offset.mean,
                "mc_offset_se": offset.std_error,
                "delta_deg": math.degrees(delta_opt),
                "samples": samples,
                "seed": seed,
            }
        )

    return [Report(name="power-validate", columns=list(rows[0]), rows=rows)]


def phi_sweep_figure(params: SystemParams) -> List[Report]:
    rows = []
    for level in sorted(LEVEL_PRESETS):
        level_params = apply_level(params, level)
        for lam in PHI_SWEEP_LAMBDAS:
            for phi_deg in degree_range(10.0, 80.0, 5.0):
                phi_params = dataclasses.replace(level_params, phi_half=math.radians(phi_deg))
                delta_opt = optimal_offset_exact(phi_params.phi_half)
                base = link_kpis(lam, phi_params.tx_power, 0.0, phi_params)
                offset = link_kpis(lam, phi_params.tx_power, delta_opt, phi_params)
                rows.append(
                    {
                        "level": level,
                        "lambda_per_m2": lam,
                        "phi_half_deg": phi_deg,
                        "link_m": base.link_length,
                        "depth_m": base.link_depth,
                        "prx_base_w": base.p_rx,
                        "ber_base": base.ber,
                        "prx_offset_w": offset.p_rx,
                        "ber_offset": offset.ber,
                    }
                )

    return [Report(name="phi-sweep", columns=list(rows[0]), rows=rows)]


def strategy_compare_figure() -> List[Report]:
    rows = []
    for phi_deg in degree_range(5.0, 85.0, 1.0):
        phi = math.radians(phi_deg)
        delta_opt = optimal_offset_exact(phi)
        gain = offset_factor(phi, delta_opt) / main_lobe_factor(phi)
        rows.append(
            {
                "phi_half_deg": phi_deg,
                "delta_opt_deg": math.degrees(delta_opt),
                "rx_gain": gain,
                "ptx_ratio": 1.0 / gain,
                "ptx_reduction_pct": 100.0 * (1.0 - 1.0 / gain),
            }
        )

    return [Report(name="strategy-compare", columns=list(rows[0]), rows=rows)]


def optimization_meta(
    params: SystemParams,
    grid: Sequence[float],
    records: List[SweepRecord],
    strategies: Sequence[str] = STRATEGIES,
) -> Dict[str, object]:
    """Refined optimum per strategy, None for a strategy with no feasible cell."""
    meta: Dict[str, object] = {}
    for strategy in strategies:
        try:
            result = optimize(params, strategy, grid, records=records)
        except InfeasibleError:
            meta[strategy] = None
            continue
        meta[strategy] = {
            "lambda_star": result.lambda_star,
            "ptx_star_w": result.ptx_star,
            "nb_star_bits": result.nb_star,
            "unimodal": result.unimodal,
            "refined": result.refined,
        }
    return meta


def energy_opt_figure(params: SystemParams, workers: int) -> List[Report]:
    records = density_sweep(params, DEFAULT_LAMBDA_GRID, workers)
    report = sweep_report("energy-opt", records)
    report.meta = optimization_meta(params, DEFAULT_LAMBDA_GRID, records)
    return [report]


def rl_heatmap_figure(params: SystemParams) -> List[Report]:
    depths = [float(v) for v in np.logspace(1.0, math.log10(6000.0), 25)]
    lambdas = [float(v) for v in np.logspace(-4.0, -1.0, 25)]
    return [density_grid_report(params, depths, lambdas)]


def run_figure(
    figure_id: str,
    params: SystemParams,
    seed: int,
    trials: Optional[int] = None,
    workers: int = 1,
) -> List[Report]:
    """Data behind one figure; `trials` sizes the Monte Carlo-backed ones."""
    builders: Dict[str, Callable[[], List[Report]]] = {
        "nn-dist": lambda: nn_dist_figure(params, seed, trials, workers),
        "delta-opt": lambda: [delta_opt_report()],
        "pat-compare": lambda: [pat_report(params, mean_link(params))],
        "offset-heatmap": lambda: [offset_grid_report(params, mean_link(params))],
        "power-validate": lambda: power_validate_figure(params, seed, trials, workers),
        "phi-sweep": lambda: phi_sweep_figure(params),
        "strategy-compare": strategy_compare_figure,
        "energy-opt": lambda: energy_opt_figure(params, workers),
        "rl-heatmap": lambda: rl_heatmap_figure(params),
    }
    if figure_id not in builders:
        raise DomainError(
            f"unknown figure {figure_id!r}; expected one of {', '.join(FIGURE_IDS)}"
        )

    return builders[figure_id]()
