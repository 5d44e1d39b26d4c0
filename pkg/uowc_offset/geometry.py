import math
from dataclasses import dataclass
from typing import List

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from uowc_offset.config import SystemParams
from uowc_offset.errors import DomainError
from uowc_offset.numerics import integrate_panels

# Panel edges in units of the cube-root scale; past 10 scales the survival
# function is below exp(-1000) and underflows.
PANEL_MULTIPLES = (0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 10.0)


@dataclass(frozen=True)
class NNDistribution:
    """
    Distance from a node at the origin to its nearest neighbour, for a planar
    Poisson intensity `lambda_2d` whose points sit at uniform heights in a slab
    of depth `slab_depth`.

    Inside the slab (s <= R) the neighbour ball is a hemisphere and the
    survival function has a cube-root law; beyond it the ball is clipped by
    the slab and the law becomes Gaussian in s.
    """

    lambda_2d: float
    slab_depth: float

    def __post_init__(self):
        if not self.lambda_2d > 0 or not math.isfinite(self.lambda_2d):
            raise DomainError(f"lambda_2d must be positive, got {self.lambda_2d}")
        if not self.slab_depth > 0 or not math.isfinite(self.slab_depth):
            raise DomainError(f"slab_depth must be positive, got {self.slab_depth}")

    @classmethod
    def from_params(cls, params: SystemParams) -> "NNDistribution":
        return cls(lambda_2d=params.lambda_2d, slab_depth=params.slab_depth)

    @property
    def cube_root_scale(self) -> float:
        return (3.0 * self.slab_depth / (2.0 * math.pi * self.lambda_2d)) ** (1.0 / 3.0)

    @property
    def branch_exponent(self) -> float:
        """-ln S(R), the exponent at which the two branches meet."""
        return 2.0 * math.pi * self.lambda_2d * self.slab_depth**2 / 3.0


def _exponent(dist: NNDistribution, s: NDArray[np.float64]) -> NDArray[np.float64]:
    lam, depth = dist.lambda_2d, dist.slab_depth
    inner = 2.0 * math.pi * lam * s**3 / (3.0 * depth)
    outer = math.pi * lam * (s**2 - depth**2 / 3.0)
    return np.where(s <= depth, inner, outer)


def _as_lengths(s: ArrayLike) -> NDArray[np.float64]:
    values = np.asarray(s, dtype=float)
    if np.any(values < 0) or np.any(np.isnan(values)):
        raise DomainError("distance must be non-negative")
    return values


def survival_values(dist: NNDistribution, s: ArrayLike) -> NDArray[np.float64]:
    return np.exp(-_exponent(dist, _as_lengths(s)))


def cdf_values(dist: NNDistribution, s: ArrayLike) -> NDArray[np.float64]:
    return -np.expm1(-_exponent(dist, _as_lengths(s)))


def pdf_values(dist: NNDistribution, s: ArrayLike) -> NDArray[np.float64]:
    s = _as_lengths(s)
    lam, depth = dist.lambda_2d, dist.slab_depth
    hazard = np.where(
        s <= depth,
        2.0 * math.pi * lam * s**2 / depth,
        2.0 * math.pi * lam * s,
    )
    return hazard * np.exp(-_exponent(dist, s))


def nn_survival(dist: NNDistribution, s: float) -> float:
    return float(survival_values(dist, s))


def nn_pdf(dist: NNDistribution, s: float) -> float:
    return float(pdf_values(dist, s))


def nn_cdf(dist: NNDistribution, s: float) -> float:
    return float(cdf_values(dist, s))


def nn_inverse_cdf(dist: NNDistribution, u: float) -> float:
    if not 0.0 <= u < 1.0:
        raise DomainError(f"probability must lie in [0, 1), got {u}")

    t = -math.log1p(-u)
    lam, depth = dist.lambda_2d, dist.slab_depth

    if t <= dist.branch_exponent:
        return (3.0 * depth * t / (2.0 * math.pi * lam)) ** (1.0 / 3.0)

    return math.sqrt(t / (math.pi * lam) + depth**2 / 3.0)


def integration_panels(dist: NNDistribution) -> List[float]:
    """Quadrature panel edges covering [0, R]."""
    scale = dist.cube_root_scale
    inner = [k * scale for k in PANEL_MULTIPLES if k * scale < dist.slab_depth]
    return [0.0, *inner, dist.slab_depth]


def _inner_survival_integral(dist: NNDistribution) -> float:
    lam, depth = dist.lambda_2d, dist.slab_depth
    rate = 2.0 * math.pi * lam / (3.0 * depth)
    return integrate_panels(lambda s: math.exp(-rate * s**3), integration_panels(dist))


def tail_survival_integral(dist: NNDistribution) -> float:
    """
    Integral of the survival function over [R, inf), via the scaled
    complementary error function so large R*sqrt(lambda) cannot overflow.
    """
    lam, depth = dist.lambda_2d, dist.slab_depth
    x = depth * math.sqrt(math.pi * lam)
    return (
        0.5
        / math.sqrt(lam)
        * float(special.erfcx(x))
        * math.exp(-dist.branch_exponent)
    )


def expected_link_depth(dist: NNDistribution) -> float:
    """
    Expected height of the nearest neighbour. A neighbour at distance s <= R
    is uniform in height on [0, s] and one beyond the slab is uniform on
    [0, R], which collapses the expectation to half the survival integral
    over the slab.
    """
    return 0.5 * _inner_survival_integral(dist)


def mean_nn_distance(dist: NNDistribution) -> float:
    return _inner_survival_integral(dist) + tail_survival_integral(dist)


def median_nn_distance(dist: NNDistribution) -> float:
    return nn_inverse_cdf(dist, 0.5)
