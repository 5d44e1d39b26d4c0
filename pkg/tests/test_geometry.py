import math

import numpy as np
import pytest
from scipy import integrate

from uowc_offset.errors import DomainError
from uowc_offset.geometry import (
    NNDistribution,
    expected_link_depth,
    integration_panels,
    mean_nn_distance,
    median_nn_distance,
    nn_cdf,
    nn_inverse_cdf,
    nn_pdf,
    nn_survival,
    pdf_values,
    survival_values,
    tail_survival_integral,
)

from tests.helpers import make_params

REFERENCE_DIST = NNDistribution(lambda_2d=0.001, slab_depth=50.0)


def test_from_params():
    assert NNDistribution.from_params(make_params()) == REFERENCE_DIST


@pytest.mark.parametrize(
    "s,survival,pdf",
    [
        (10.0, 0.958977, 0.012051),
        (60.0, 1.678e-4, 6.326e-5),
    ],
)
def test_closed_form_values(s, survival, pdf):
    assert nn_survival(REFERENCE_DIST, s) == pytest.approx(survival, rel=1e-3)
    assert nn_pdf(REFERENCE_DIST, s) == pytest.approx(pdf, rel=1e-3)
    assert nn_cdf(REFERENCE_DIST, s) + nn_survival(REFERENCE_DIST, s) == pytest.approx(1.0)


def test_survival_is_continuous_at_slab_depth():
    below = nn_survival(REFERENCE_DIST, 50.0)
    above = nn_survival(REFERENCE_DIST, 50.0 + 1e-9)

    assert below == pytest.approx(math.exp(-REFERENCE_DIST.branch_exponent), rel=1e-12)
    assert above == pytest.approx(below, rel=1e-9)


@pytest.mark.parametrize("s", [10.0, 30.0, 55.0, 60.0])
def test_pdf_is_derivative_of_cdf(s):
    h = 1e-5 * s
    numeric = (nn_cdf(REFERENCE_DIST, s + h) - nn_cdf(REFERENCE_DIST, s - h)) / (2 * h)

    assert nn_pdf(REFERENCE_DIST, s) == pytest.approx(numeric, rel=1e-6)


def test_survival_is_monotone():
    s = np.linspace(0.0, 120.0, 1201)
    values = survival_values(REFERENCE_DIST, s)

    assert values[0] == 1.0
    assert np.all(np.diff(values) <= 0)


def test_cdf_keeps_precision_near_zero():
    # 1 - S(s) would round to zero here.
    tiny = NNDistribution(lambda_2d=1e-9, slab_depth=50.0)
    assert nn_cdf(tiny, 0.01) > 0


def test_inverse_cdf_values():
    assert nn_inverse_cdf(REFERENCE_DIST, 0.0) == 0.0
    assert nn_inverse_cdf(REFERENCE_DIST, 0.5) == pytest.approx(25.48, abs=0.01)
    # Past the slab depth the square-root branch applies.
    assert nn_inverse_cdf(REFERENCE_DIST, 0.999) == pytest.approx(55.06, abs=0.01)
    assert median_nn_distance(REFERENCE_DIST) == nn_inverse_cdf(REFERENCE_DIST, 0.5)


@pytest.mark.parametrize("s", [0.5, 10.0, 49.9, 50.0, 60.0, 149.5])
def test_inverse_cdf_round_trip(s):
    sparse = NNDistribution(lambda_2d=1e-5, slab_depth=50.0)

    assert nn_inverse_cdf(sparse, nn_cdf(sparse, s)) == pytest.approx(s, rel=1e-9)


@pytest.mark.parametrize("u", [-0.1, 1.0, 1.5])
def test_inverse_cdf_rejects_bad_probability(u):
    with pytest.raises(DomainError):
        nn_inverse_cdf(REFERENCE_DIST, u)


def test_panels_cover_the_slab():
    edges = integration_panels(REFERENCE_DIST)

    assert edges[0] == 0.0
    assert edges[-1] == REFERENCE_DIST.slab_depth
    assert edges == sorted(edges)


def survival_quad(dist: NNDistribution, lo: float, hi: float) -> float:
    value, _ = integrate.quad(
        lambda s: nn_survival(dist, s), lo, hi, epsabs=1e-13, epsrel=1e-11, limit=500
    )
    return value


@pytest.mark.parametrize(
    "lambda_2d,slab_depth",
    [(0.001, 50.0), (0.01, 500.0), (1e-4, 50.0)],
)
def test_mean_and_depth_match_direct_quadrature(lambda_2d, slab_depth):
    dist = NNDistribution(lambda_2d, slab_depth)
    inner = survival_quad(dist, 0.0, slab_depth)
    tail = survival_quad(dist, slab_depth, math.inf) if dist.branch_exponent < 700 else 0.0

    assert mean_nn_distance(dist) == pytest.approx(inner + tail, rel=1e-8)
    assert expected_link_depth(dist) == pytest.approx(0.5 * inner, rel=1e-8)


def test_depth_bounds():
    for lam in (1e-6, 1e-4, 1e-2, 1.0):
        dist = NNDistribution(lam, 50.0)
        depth = expected_link_depth(dist)

        assert 0 < depth <= 25.0
        assert depth <= mean_nn_distance(dist)


def test_extreme_densities_stay_finite():
    dense = NNDistribution(lambda_2d=10.0, slab_depth=6000.0)
    sparse = NNDistribution(lambda_2d=1e-8, slab_depth=50.0)

    assert tail_survival_integral(dense) == 0.0
    assert 0 < mean_nn_distance(dense) < 10.0
    # Essentially every neighbour is beyond the slab: mean ~ 1 / (2 sqrt(lambda)).
    assert mean_nn_distance(sparse) == pytest.approx(0.5 / math.sqrt(1e-8), rel=1e-3)


@pytest.mark.parametrize("lambda_2d,slab_depth", [(0.0, 50.0), (-1.0, 50.0), (0.001, 0.0), (math.nan, 50.0)])
def test_rejects_bad_parameters(lambda_2d, slab_depth):
    with pytest.raises(DomainError):
        NNDistribution(lambda_2d, slab_depth)


def test_rejects_negative_distance():
    with pytest.raises(DomainError):
        nn_survival(REFERENCE_DIST, -1.0)


def pdf_mass(dist: NNDistribution) -> float:
    # Tail panels in units of the Gaussian width beyond the slab.
    width = 1.0 / math.sqrt(math.pi * dist.lambda_2d)
    tail = [dist.slab_depth + k * width for k in (0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 10.0)]
    edges = [*integration_panels(dist), *tail]

    pieces = []
    for lo, hi in zip(edges, edges[1:]):
        value, _ = integrate.quad(
            lambda s: nn_pdf(dist, s), lo, hi, epsabs=1e-15, epsrel=1e-13, limit=200
        )
        pieces.append(value)
    return math.fsum(pieces)


@pytest.mark.parametrize("lambda_2d", np.logspace(-4, -1, 10))
@pytest.mark.parametrize("slab_depth", np.logspace(1, math.log10(6000.0), 10))
def test_pdf_integrates_to_one(lambda_2d, slab_depth):
    dist = NNDistribution(float(lambda_2d), float(slab_depth))

    assert abs(pdf_mass(dist) - 1.0) < 1e-9


def test_branches_meet_at_slab_depth():
    rng = np.random.default_rng(0)
    lambdas = 10.0 ** rng.uniform(-4, -1, 100)
    depths = 10.0 ** rng.uniform(1, math.log10(6000.0), 100)

    for lam, depth in zip(lambdas, depths):
        dist = NNDistribution(float(lam), float(depth))
        after = np.nextafter(depth, math.inf)
        at_depth = survival_values(dist, [depth, after])
        pdf = pdf_values(dist, [depth, after])

        assert at_depth[0] == pytest.approx(math.exp(-dist.branch_exponent), rel=1e-12)
        assert at_depth[1] == pytest.approx(at_depth[0], rel=1e-9, abs=1e-300)
        assert pdf[1] == pytest.approx(pdf[0], rel=1e-9, abs=1e-300)
        if dist.branch_exponent < 30:
            assert nn_inverse_cdf(dist, nn_cdf(dist, depth)) == pytest.approx(depth, rel=1e-9)
