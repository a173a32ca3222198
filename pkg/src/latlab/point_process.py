"""Poisson points with independent half-Gaussian marks, and the sieve built on them.

The reference model: points 0 < T_1 < T_2 < ... of a Poisson process of
intensity 1/2 on the half line, and for every pair i < j an independent
Phi_ij distributed like |Z| with Z standard normal. Test functions are
indicators of product boxes in the T and Phi coordinates.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfinv

from .errors import DomainError, NumericalInconsistencyError, PreconditionError
from .stats import erf

INTENSITY = 0.5
TAIL_REL_TOL = 1e-16


@dataclass
class PoissonGaussianSample:
    K: float
    points: np.ndarray
    gaussians: np.ndarray  # (m+1) x (m+1), entry [i, j] = Phi_ij for 1 <= i < j <= m

    def __post_init__(self):
        if np.any(np.diff(self.points) <= 0) or np.any(self.points > self.K):
            raise DomainError("points must be strictly increasing and at most K")

    @property
    def count(self) -> int:
        """N_inf(K), the number of points in [0, K]."""
        return int(self.points.size)

    def count_in(self, a: float, b: float) -> int:
        return int(np.count_nonzero((self.points >= a) & (self.points <= b)))

    def T(self, i: int) -> float:
        return float(self.points[i - 1])

    def phi(self, i: int, j: int) -> float:
        return float(self.gaussians[i, j])


def half_gaussians(u: np.ndarray) -> np.ndarray:
    """|Z| from uniforms by inverting the half-normal CDF erf(x/sqrt 2)."""
    return math.sqrt(2.0) * erfinv(u)


def sample_process(K: float, count_pairs: int, rng) -> PoissonGaussianSample:
    """Points of the intensity-1/2 process on [0, K] and marks for the needed pairs.

    Marks are drawn for all pairs among the first max(count_pairs, N_inf(K))
    indices.
    """
    if K <= 0:
        raise DomainError(f"need K > 0, got {K}")
    pts = []
    t = rng.exponential(1.0 / INTENSITY)
    while t <= K:
        pts.append(t)
        t += rng.exponential(1.0 / INTENSITY)
    m = max(int(count_pairs), len(pts))
    G = np.zeros((m + 1, m + 1))
    if m >= 2:
        iu = np.triu_indices(m, k=1)
        vals = half_gaussians(rng.random(iu[0].size))
        G[iu[0] + 1, iu[1] + 1] = vals
        G[iu[1] + 1, iu[0] + 1] = vals
    return PoissonGaussianSample(float(K), np.array(pts), G)


def _merge(intervals) -> list[tuple[float, float]]:
    ivs = sorted((float(a), float(b)) for a, b in intervals if b > a)
    out: list[list[float]] = []
    for a, b in ivs:
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [tuple(x) for x in out]


@dataclass
class BoxFunctionSpec:
    """Indicator of T_k in volume_boxes[k] for all k and Phi_ij in angle_sets[(i,j)].

    Angle sets are finite unions of closed intervals; missing pairs default
    to [0, inf), i.e. no constraint.
    """

    N: int
    K: float
    volume_boxes: list
    angle_sets: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.volume_boxes) != self.N:
            raise DomainError(f"need {self.N} volume boxes, got {len(self.volume_boxes)}")
        self.volume_boxes = [(float(a), float(b)) for a, b in self.volume_boxes]
        for a, b in self.volume_boxes:
            if not 0 <= a <= b <= self.K:
                raise DomainError(f"volume box [{a}, {b}] not inside [0, {self.K}]")
        self.angle_sets = {tuple(k): _merge(v) for k, v in self.angle_sets.items()}
        for (i, j), ivs in self.angle_sets.items():
            if not 1 <= i < j <= self.N:
                raise DomainError(f"bad pair ({i}, {j})")
            for a, _ in ivs:
                if a < 0:
                    raise DomainError("angle sets live in [0, inf)")

    def angle_set(self, i: int, j: int):
        return self.angle_sets.get((i, j), [(0.0, math.inf)])

    def min_width(self) -> float:
        """Smallest total length of an angle set (the xi of the indicator class)."""
        widths = [sum(b - a for a, b in self.angle_set(i, j)) for i, j in _pairs(self.N)]
        return min(widths) if widths else math.inf

    def evaluate(self, T, phi) -> int:
        """f(T_1..T_N, Phi) where phi(s, t) returns the mark for coordinates s < t."""
        for k, (a, b) in enumerate(self.volume_boxes):
            if not a <= T[k] <= b:
                return 0
        for s, t in _pairs(self.N):
            x = phi(s, t)
            if not any(a <= x <= b for a, b in self.angle_set(s, t)):
                return 0
        return 1

    def evaluate_sample(self, sample: PoissonGaussianSample, idx) -> int:
        """f evaluated on the points with (1-based) indices idx and their marks."""
        T = [sample.points[i - 1] for i in idx]
        return self.evaluate(T, lambda s, t: sample.gaussians[idx[s - 1], idx[t - 1]])


def _pairs(N: int):
    return [(i, j) for i in range(1, N + 1) for j in range(i + 1, N + 1)]


def alternating_binomial(m: int, l: int) -> int:
    """sum_{j=0}^{l} (-1)^j C(m, j), checked against (-1)^l C(m-1, l) for m >= 1."""
    if m < 0 or l < 0:
        raise DomainError("need m, l >= 0")
    total = sum((-1) ** j * math.comb(m, j) for j in range(l + 1))
    if m >= 1 and total != (-1) ** l * math.comb(m - 1, l):
        raise NumericalInconsistencyError(f"alternating sum identity failed at m={m}, l={l}")
    return total


def sieve_R(sample: PoissonGaussianSample, N: int, l: int, f: BoxFunctionSpec) -> int:
    """Sum over increasing N-tuples n_1 < ... < n_N of C(n_N - N, l) f(T_{n}, Phi_{n})."""
    if l < 0:
        raise DomainError("l must be non-negative")
    m = sample.count
    total = 0
    for idx in itertools.combinations(range(1, m + 1), N):
        w = math.comb(idx[-1] - N, l)
        if w and f.evaluate_sample(sample, idx):
            total += w
    return total


def sieve_R_tuples(sample: PoissonGaussianSample, N: int, l: int, f: BoxFunctionSpec) -> int:
    """The same quantity as a sum over ordered tuples of N + l distinct indices.

    A tuple counts when its first N points are increasing and its last l
    points are increasing and all below the N-th. Brute force; for checks.
    """
    m = sample.count
    T = sample.points
    total = 0
    for idx in itertools.permutations(range(1, m + 1), N + l):
        head, tail = idx[:N], idx[N:]
        if any(T[head[k] - 1] >= T[head[k + 1] - 1] for k in range(N - 1)):
            continue
        if any(T[tail[k] - 1] >= T[tail[k + 1] - 1] for k in range(l - 1)):
            continue
        if l and T[tail[-1] - 1] >= T[head[-1] - 1]:
            continue
        total += f.evaluate_sample(sample, head)
    return total


def sieve_S(sample: PoissonGaussianSample, N: int, l: int, f: BoxFunctionSpec) -> int:
    """sum_{j=0}^{l} (-1)^j R_j."""
    return sum((-1) ** j * sieve_R(sample, N, j, f) for j in range(l + 1))


def f_on_first(sample: PoissonGaussianSample, N: int, f: BoxFunctionSpec) -> int:
    """f(T_1, ..., T_N, Phi); zero when fewer than N points fall in [0, K]."""
    if sample.count < N:
        return 0
    return f.evaluate_sample(sample, tuple(range(1, N + 1)))


def poisson_tail(lam: float, k: int) -> float:
    """P(X >= k) for X ~ Poisson(lam), summed upward from k."""
    if k <= 0:
        return 1.0
    if lam == 0:
        return 0.0
    term = math.exp(-lam + k * math.log(lam) - math.lgamma(k + 1))
    total = 0.0
    s = k
    while True:
        total += term
        s += 1
        term *= lam / s
        if s > lam and term < TAIL_REL_TOL * total:
            break
    return total


def box_probability(N: int, K: float) -> float:
    """P(T_N <= K) = e^{-K/2} sum_{s >= N} (K/2)^s / s!."""
    if N < 1 or K <= 0:
        raise DomainError("need N >= 1 and K > 0")
    return poisson_tail(INTENSITY * K, N)


def ordered_box_probability(boxes) -> float:
    """P(a_k <= T_k <= b_k for k = 1..N), exactly.

    Uses T_k >= a iff N(a) <= k - 1 and T_k <= b iff N(b) >= k, and
    propagates the law of the counting function across the sorted box
    endpoints with Poisson increments. Counts are capped at N.
    """
    boxes = [(float(a), float(b)) for a, b in boxes]
    N = len(boxes)
    if N == 0:
        return 1.0
    # at each breakpoint x: admissible count range [lo, hi]
    limits: dict[float, list[int]] = {}
    for k, (a, b) in enumerate(boxes, start=1):
        if a > 0:
            lim = limits.setdefault(a, [0, N])
            lim[1] = min(lim[1], k - 1)
        lim = limits.setdefault(b, [0, N])
        lim[0] = max(lim[0], k)
    dist = np.zeros(N + 1)
    dist[0] = 1.0
    x_prev = 0.0
    for x in sorted(limits):
        lam = INTENSITY * (x - x_prev)
        pmf = np.array([math.exp(-lam + j * math.log(lam) - math.lgamma(j + 1)) if lam > 0 else float(j == 0) for j in range(N + 1)])
        tail = [poisson_tail(lam, j) for j in range(N + 1)]
        new = np.zeros(N + 1)
        for c in range(N + 1):
            if dist[c] == 0:
                continue
            for j in range(N - c):
                new[c + j] += dist[c] * pmf[j]
            new[N] += dist[c] * tail[N - c]
        lo, hi = limits[x]
        new[:lo] = 0.0
        new[hi + 1 :] = 0.0
        dist = new
        x_prev = x
    return float(dist.sum())


def interval_half_normal_mass(intervals) -> float:
    total = 0.0
    for a, b in _merge(intervals):
        hi = 1.0 if b == math.inf else erf(b / math.sqrt(2.0))
        total += hi - erf(a / math.sqrt(2.0))
    return total


def gaussian_box_mass(angle_sets, N: int | None = None) -> float:
    """prod over pairs of P(|Z| in D_ij).

    ``angle_sets`` is a BoxFunctionSpec or a dict mapping pairs to interval
    lists; with a dict, pairs absent from it contribute 1.
    """
    if isinstance(angle_sets, BoxFunctionSpec):
        spec = angle_sets
        return math.prod(interval_half_normal_mass(spec.angle_set(i, j)) for i, j in _pairs(spec.N))
    return math.prod(interval_half_normal_mass(v) for v in angle_sets.values())


def gaussian_mass_lower_bound(xi: float, K: float, b: int) -> float:
    """delta(xi, K)^b with delta the half-normal mass of the worst interval [K - xi, K]."""
    delta = erf(K / math.sqrt(2.0)) - erf((K - xi) / math.sqrt(2.0))
    return delta**b


def poisson_tail_bound(lam: float, x: float) -> tuple[float, float]:
    """(P(X >= x), e^{-lam} (e lam / x)^x) for X ~ Poisson(lam) and x > lam."""
    if not x > lam > 0:
        raise PreconditionError(f"need x > lambda > 0, got lambda={lam}, x={x}")
    exact = poisson_tail(lam, math.ceil(x))
    bound = math.exp(-lam + x * (1.0 + math.log(lam) - math.log(x)))
    if exact > bound * (1 + 1e-12):
        raise NumericalInconsistencyError(f"tail bound violated at lambda={lam}, x={x}")
    return exact, bound


def closed_form_expectation(f: BoxFunctionSpec) -> float:
    return ordered_box_probability(f.volume_boxes) * gaussian_box_mass(f)


def reference_expectation(f: BoxFunctionSpec, trials: int, rng) -> tuple[float, float, float]:
    """Monte Carlo E f(T_1..T_N, Phi), its standard error, and the closed form.

    ``rng`` is a Generator or a callable trial -> Generator.
    """
    if trials < 1:
        raise DomainError("need at least one trial")
    vals = np.empty(trials)
    for t in range(trials):
        g = rng(t) if callable(rng) else rng
        sample = sample_process(f.K, f.N, g)
        vals[t] = f_on_first(sample, f.N, f)
    stderr = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
    return float(vals.mean()), stderr, closed_form_expectation(f)
