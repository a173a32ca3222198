"""Good widths: how large a cube of pair angles around pi/2 the frame map covers.

A width s is certified when a scalar criterion is non-positive. The first
positive zeros of those criteria give the recursion s_N^(0) >= s_N^(1) >= ...,
and the explicit sequence x_j is a computable lower bound for it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import sphere_geometry as sg
from .errors import DomainError, LatlabError, NotRepresentableError, StateError

MARCH_STEP = math.pi / 1024
BISECT_ITERS = 200
BISECT_TOL = 1e-12
EXHAUSTIVE_PAIRS = 12
RANDOM_CORNERS = 2**12
RANDOM_INTERIOR = 100
INCLUSION_SEED = 20240601
ROUND_TRIP_TOL = 1e-9


class RootNotFound(LatlabError, RuntimeError):
    pass


def width_criterion(m: int, s: float) -> float:
    """m sin^2(s/2) - cos(s/2)^{2m} + sin(s/2); a width s with value <= 0 is good at level 0."""
    h = s / 2.0
    return m * math.sin(h) ** 2 - math.cos(h) ** (2 * m) + math.sin(h)


def refined_criterion(N: int, j: int, x: float, s: float) -> float:
    """(N-j-2) sin^2(s/2) - sin(x/2) cos(s/2)^{2(N-j-2)} + sin(s/2)."""
    m = N - j - 2
    h = s / 2.0
    return m * math.sin(h) ** 2 - math.sin(x / 2.0) * math.cos(h) ** (2 * m) + math.sin(h)


def first_positive_zero(f, tol: float = BISECT_TOL, upper: float = math.pi) -> float:
    """First sign change of f on (0, upper], isolated by marching then bisected.

    Returns the left end of the final bracket, so f <= 0 there.
    """
    lo = 0.0
    f_lo = f(lo)
    if f_lo > 0:
        raise RootNotFound("criterion already positive at s = 0")
    hi = lo
    while True:
        hi = min(lo + MARCH_STEP, upper)
        f_hi = f(hi)
        if f_hi > 0:
            break
        if hi >= upper:
            raise RootNotFound("no sign change on (0, pi]")
        lo = hi
    for _ in range(BISECT_ITERS):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return lo


def first_good_width(N: int, tol: float = BISECT_TOL) -> float:
    """Largest width certified by the level-0 criterion (first zero of E(N-2, .))."""
    if N < 3:
        raise DomainError(f"need N >= 3, got {N}")
    return first_positive_zero(lambda s: width_criterion(N - 2, s), tol)


def sine_slope(N: int) -> float:
    """exp(-9 ln N / (10 (N-3)) + 1/N), a slope with sin s >= slope * s on [0, 2/sqrt(N-2)]."""
    if N < 4:
        raise DomainError(f"need N >= 4, got {N}")
    return math.exp(-9.0 * math.log(N) / (10.0 * (N - 3)) + 1.0 / N)


def sin_lower_bound_check(N: int, grid: int = 10_000) -> bool:
    eps = sine_slope(N)
    s = np.linspace(0.0, 2.0 / math.sqrt(N - 2), grid)
    return bool(np.all(np.sin(s) >= eps * s))


def width_lower_bound(N: int, j: int, x: float) -> float:
    """Positive root of (N-j-2)/4 (e x/2 + 1) s^2 + s/2 - e x/2 = 0 with e = sine_slope(N)."""
    m = N - j - 2
    if m < 1:
        raise DomainError(f"need j <= N-3, got N={N}, j={j}")
    ex = sine_slope(N) * x
    return 2.0 * (-1.0 + math.sqrt(1.0 + ex * (ex + 2.0) * m)) / ((ex + 2.0) * m)


def x_sequence(N: int) -> np.ndarray:
    """x_0 = (-1/2 + sqrt(1/4 + 2(N-2)))/(N-2) and x_j = width_lower_bound(N, j, x_{j-1})."""
    if N < 4:
        raise DomainError(f"need N >= 4, got {N}")
    xs = np.empty(N - 2)
    xs[0] = (-0.5 + math.sqrt(0.25 + 2.0 * (N - 2))) / (N - 2)
    for j in range(1, N - 2):
        xs[j] = width_lower_bound(N, j, xs[j - 1])
    return xs


def check_decay_bound(N: int, exponent: float = -2.9) -> bool:
    return bool(x_sequence(N)[-1] >= float(N) ** exponent)


@dataclass(frozen=True)
class GoodnessTable:
    N: int
    sN: np.ndarray  # s_N^(0) .. s_N^(N-3)
    xs: np.ndarray | None  # x_0 .. x_{N-3}; None for N = 3
    epsilonN: float
    tol: float

    @property
    def last_width(self) -> float:
        return float(self.sN[-1])


def good_width_table(N: int, tol: float = BISECT_TOL) -> GoodnessTable:
    """s_N^(j) for j = 0..N-3 together with the lower-bound sequence x_j."""
    if N < 3:
        raise DomainError(f"need N >= 3, got {N}")
    widths = [first_good_width(N, tol)]
    for j in range(1, N - 2):
        prev = widths[-1]
        widths.append(first_positive_zero(lambda s: refined_criterion(N, j, prev, s), tol))
    if N >= 4:
        return GoodnessTable(N, np.array(widths), x_sequence(N), sine_slope(N), tol)
    return GoodnessTable(N, np.array(widths), None, math.nan, tol)


def goodness_certificate(N: int, j: int, s: float, table: GoodnessTable | None = None) -> bool:
    """True when width s passes the level-j criterion.

    Level 0 uses the width criterion directly; level j >= 1 needs the
    previous width s_N^(j-1) from a computed table.
    """
    if j == 0:
        return width_criterion(N - 2, s) <= 0
    if table is None or table.N != N:
        raise StateError(f"level {j} certificate needs the width table for N={N}")
    return refined_criterion(N, j, float(table.sN[j - 1]), s) <= 0


def _round_trip_ok(alpha: np.ndarray, N: int) -> bool:
    if np.any(alpha <= 0) or np.any(alpha >= math.pi):
        return False
    target = sg.AngleVector(N, alpha)
    try:
        phi = sg.invert_map(target)
        back = sg.forward_map(phi)
    except (NotRepresentableError, ArithmeticError):
        return False
    return bool(np.max(np.abs(back.values - alpha)) <= ROUND_TRIP_TOL)


def hypercube_inclusion_check(N: int, n: float, K: float, seed: int = INCLUSION_SEED) -> bool:
    """Check that the cube pi/2 + n^{-1/2}[-K, K]^b lies in the image of the frame map.

    All corners are tried when b <= 12; otherwise 2^12 random corners and
    100 random interior points with a fixed seed.
    """
    if N < 3 or n < 1 or K <= 0:
        raise DomainError("need N >= 3, n >= 1, K > 0")
    b = sg.num_pairs(N)
    half = K / math.sqrt(n)
    centre = np.full(b, math.pi / 2)
    if not _round_trip_ok(centre, N):
        return False
    if b <= EXHAUSTIVE_PAIRS:
        signs = itertools.product((-1.0, 1.0), repeat=b)
        points = (centre + half * np.array(sg_) for sg_ in signs)
    else:
        rng = np.random.default_rng(seed)
        corner_signs = rng.choice((-1.0, 1.0), size=(RANDOM_CORNERS, b))
        interior = rng.uniform(-1.0, 1.0, size=(RANDOM_INTERIOR, b))
        points = (centre + half * row for row in np.vstack([corner_signs, interior]))
    return all(_round_trip_ok(p, N) for p in points)


def scan_threshold(check, lo: int = 4, hi: int = 500) -> int | None:
    """Smallest N0 in [lo, hi] such that check(N) holds for every N in [N0, hi]."""
    threshold = None
    for N in range(hi, lo - 1, -1):
        if not check(N):
            break
        threshold = N
    return threshold
