import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Literal, Optional, Tuple, TypeVar

import numpy as np
from loguru import logger
from more_itertools import sliced
from numpy.typing import NDArray
from scipy import stats

from uowc_offset.channel import lambertian_order
from uowc_offset.config import SystemParams
from uowc_offset.errors import DomainError
from uowc_offset.geometry import NNDistribution, cdf_values
from uowc_offset.models import McEstimate
from uowc_offset.power import offset_factor

T = TypeVar("T")

Lobe = Literal["full", "main_lobe", "offset"]

CHUNK_SIZE = 65536
# Cap on Poisson points drawn per chunk of nearest-neighbour trials.
POINTS_PER_CHUNK = 1 << 22
MIN_TRIALS = 1000
MIN_SAMPLES = 10000
WINDOW_TAIL = 1e-9


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk_index,)))


def run_chunked(
    n: int,
    seed: int,
    draw: Callable[[np.random.Generator, int], T],
    workers: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> List[T]:
    """
    Split `n` draws into fixed-size chunks with one generator per chunk.
    Chunk boundaries and seeds never depend on `workers`, and results come
    back in chunk order, so any worker count gives identical output.
    """
    chunks = list(enumerate(sliced(range(n), chunk_size)))

    def job(item: Tuple[int, range]) -> T:
        index, span = item
        return draw(chunk_rng(seed, index), len(span))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(job, chunks))


def _estimate(values: NDArray[np.float64], scale: float, seed: int, started: float) -> McEstimate:
    n = int(values.size)
    return McEstimate(
        mean=scale * float(np.mean(values)),
        std_error=scale * float(np.std(values, ddof=1)) / math.sqrt(n),
        n_samples=n,
        seed=seed,
        elapsed_note=f"{time.perf_counter() - started:.3f}s",
    )


@dataclass(frozen=True)
class NearestNeighborSample:
    distances: NDArray[np.float64]
    heights: NDArray[np.float64]
    ks_statistic: float
    empty_trials: int
    window_radius: float
    trials: int
    seed: int


def window_radius(dist: NNDistribution) -> float:
    """Disc radius outside which the survival mass is below WINDOW_TAIL."""
    return max(
        dist.slab_depth,
        math.sqrt(
            dist.slab_depth**2 / 3.0
            + math.log(1.0 / WINDOW_TAIL) / (math.pi * dist.lambda_2d)
        ),
    )


def mc_nn_distance(
    lambda_2d: float,
    slab_depth: float,
    trials: int,
    seed: int,
    workers: int = 1,
) -> NearestNeighborSample:
    """
    Realize the point process in a disc x slab around a node at the origin
    and keep the nearest point of each realization.
    """
    if trials < MIN_TRIALS:
        raise DomainError(f"need at least {MIN_TRIALS} trials, got {trials}")

    dist = NNDistribution(lambda_2d, slab_depth)
    radius = window_radius(dist)
    mean_count = lambda_2d * math.pi * radius**2
    chunk_trials = max(1, min(CHUNK_SIZE, int(POINTS_PER_CHUNK // math.ceil(mean_count))))

    def draw(rng: np.random.Generator, size: int):
        counts = rng.poisson(mean_count, size)
        total = int(counts.sum())
        radial2 = radius**2 * rng.random(total)
        heights = slab_depth * rng.random(total)
        squared = radial2 + heights**2

        owner = np.repeat(np.arange(size), counts)
        order = np.lexsort((squared, owner))
        starts = np.cumsum(counts) - counts
        occupied = counts > 0
        nearest = order[starts[occupied]]

        return (
            np.sqrt(squared[nearest]),
            heights[nearest],
            int(size - np.count_nonzero(occupied)),
        )

    parts = run_chunked(trials, seed, draw, workers, chunk_trials)
    distances = np.concatenate([p[0] for p in parts])
    heights = np.concatenate([p[1] for p in parts])
    empty = sum(p[2] for p in parts)

    if empty:
        logger.warning("Excluded {} of {} realizations with no neighbour", empty, trials)

    ks = stats.kstest(distances, lambda s: cdf_values(dist, s))

    return NearestNeighborSample(
        distances=distances,
        heights=heights,
        ks_statistic=float(ks.statistic),
        empty_trials=empty,
        window_radius=radius,
        trials=trials,
        seed=seed,
    )


def mc_expected_depth(
    lambda_2d: float,
    slab_depth: float,
    trials: int,
    seed: int,
    workers: int = 1,
) -> McEstimate:
    started = time.perf_counter()
    sample = mc_nn_distance(lambda_2d, slab_depth, trials, seed, workers)
    return _estimate(sample.heights, 1.0, seed, started)


def _lobe_cosines(params: SystemParams, lobe: Lobe, delta: Optional[float]) -> Tuple[float, float]:
    if lobe == "full":
        return 0.0, 1.0
    if lobe == "main_lobe":
        return math.cos(params.phi_half), 1.0
    if lobe == "offset":
        if delta is None:
            raise DomainError("offset lobe needs a pointing offset")
        offset_factor(params.phi_half, delta)  # domain check
        return max(math.cos(delta + params.phi_half), 0.0), math.cos(delta)
    raise DomainError(f"unknown lobe {lobe!r}")


def mc_power_angular(
    params: SystemParams,
    length: float,
    samples: int,
    seed: int,
    workers: int = 1,
    lobe: Lobe = "full",
    delta: Optional[float] = None,
) -> McEstimate:
    """
    Average received power under the large-distance approximation, by
    sampling receiver position and orientation angles with the integral's
    own measure (cosine-uniform polar angles).
    """
    if samples < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    if not length > 0:
        raise DomainError("link length must be positive")

    started = time.perf_counter()
    m = lambertian_order(params.phi_half)
    cos_lo, cos_hi = _lobe_cosines(params, lobe, delta)

    def draw(rng: np.random.Generator, size: int) -> NDArray[np.float64]:
        cos_t = cos_lo + (cos_hi - cos_lo) * rng.random(size)
        phi_rx = 2.0 * math.pi * rng.random(size)
        cos_a = 2.0 * rng.random(size) - 1.0
        beta = 2.0 * math.pi * rng.random(size)

        sin_t = np.sqrt(1.0 - cos_t**2)
        sin_a = np.sqrt(1.0 - cos_a**2)
        cos_gamma = np.abs(sin_t * sin_a * np.cos(phi_rx - beta) + cos_t * cos_a)
        return cos_t**m * cos_gamma

    values = np.concatenate(run_chunked(samples, seed, draw, workers))

    c0 = (
        params.responsivity_factor
        * params.tx_power
        * (m + 1.0)
        * math.pi
        * params.aperture_radius**2
        * math.exp(-params.extinction * length)
        / (16.0 * math.pi**3 * length**2)
    )
    scale = c0 * 8.0 * math.pi**2 * (cos_hi - cos_lo)

    return _estimate(values, scale, seed, started)


def mc_power_full(
    params: SystemParams,
    length: float,
    samples: int,
    seed: int,
    workers: int = 1,
) -> McEstimate:
    """
    Finite-aperture received power: every sample also picks a point on the
    receiver disc and uses the exact distance, emission angle and incidence
    angle of that point. `length` is the distance to the disc centre; the
    large-distance regime is length / aperture_radius >> 1.
    """
    if samples < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    if not length > 0:
        raise DomainError("link length must be positive")

    started = time.perf_counter()
    m = lambertian_order(params.phi_half)
    radius = params.aperture_radius
    extinction = params.extinction

    def draw(rng: np.random.Generator, size: int) -> NDArray[np.float64]:
        cos_t = rng.random(size)
        phi_rx = 2.0 * math.pi * rng.random(size)
        cos_a = 2.0 * rng.random(size) - 1.0
        beta = 2.0 * math.pi * rng.random(size)
        rho = radius * np.sqrt(rng.random(size))
        theta_p = 2.0 * math.pi * rng.random(size)

        sin_t = np.sqrt(1.0 - cos_t**2)
        sin_a = np.sqrt(1.0 - cos_a**2)
        cos_b, sin_b = np.cos(beta), np.sin(beta)

        # Disc normal and two in-plane unit vectors.
        normal = np.stack([sin_a * cos_b, sin_a * sin_b, cos_a])
        e1 = np.stack([cos_a * cos_b, cos_a * sin_b, -sin_a])
        e2 = np.stack([-sin_b, cos_b, np.zeros(size)])

        centre = length * np.stack([sin_t * np.cos(phi_rx), sin_t * np.sin(phi_rx), cos_t])
        point = centre + rho * (np.cos(theta_p) * e1 + np.sin(theta_p) * e2)

        distance = np.sqrt(np.sum(point**2, axis=0))
        cos_emit = np.clip(point[2] / distance, 0.0, None)
        cos_gamma = np.abs(np.sum(point * normal, axis=0)) / distance

        return cos_emit**m * np.exp(-extinction * distance) * cos_gamma / distance**2

    values = np.concatenate(run_chunked(samples, seed, draw, workers))

    scale = (
        0.5
        * params.responsivity_factor
        * params.tx_power
        * (m + 1.0)
        / (8.0 * math.pi**3)
        * math.pi
        * radius**2
        * 8.0
        * math.pi**2
    )

    return _estimate(values, scale, seed, started)
