import math
from typing import Callable, Sequence

from scipy import integrate

# QUADPACK tolerances used for every closed-form integral in the package.
QUAD_RTOL = 1e-12
QUAD_ATOL = 1e-15

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def integrate_panels(f: Callable[[float], float], edges: Sequence[float]) -> float:
    """
    Integrate `f` over consecutive panels [edges[i], edges[i+1]].

    Panel edges should sit on the kinks of `f` and on its natural length
    scales so each QUADPACK call sees a smooth integrand.
    """
    pieces = []
    for lo, hi in zip(edges, edges[1:]):
        if hi <= lo:
            continue
        value, _ = integrate.quad(
            f, lo, hi, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL, limit=200
        )
        pieces.append(value)

    return math.fsum(pieces)


def bisect_threshold(
    accept: Callable[[float], bool],
    lo: float,
    hi: float,
    rel_width: float = 1e-6,
    max_iter: int = 200,
) -> float:
    """
    Smallest `x` in (lo, hi] with `accept(x)` for a predicate that flips once
    from False to True. The caller guarantees `accept(hi)` and
    `not accept(lo)`; the returned value always satisfies the predicate.
    """
    for _ in range(max_iter):
        if hi - lo <= rel_width * abs(hi):
            break
        mid = 0.5 * (lo + hi)
        if accept(mid):
            hi = mid
        else:
            lo = mid

    return hi


def golden_section_max(
    f: Callable[[float], float], a: float, b: float, tol: float
) -> float:
    """Maximizer of a unimodal `f` on [a, b], to bracket width `tol`."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = f(c)
    fd = f(d)

    while abs(b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)

    return 0.5 * (a + b)
