"""Monte Carlo for normalised pair angles of independent uniform points on a sphere.

For N independent uniform u_i on S^{n-1} the signed normalised angles
alpha~_ij = sqrt(n) (angle(u_i, u_j) - pi/2) are nearly independent
standard normals when N^3 is small against sqrt(n). The experiments here
compare the empirical probability of a box of such angles with the product
of the Gaussian masses of its sides.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .errors import ConfigError, DegenerateConfigError, DomainError
from .rng import rng_substream
from .sphere_geometry import log_sphere_surface, num_pairs
from .stats import normal_cdf

SLACK = 0.15
MIN_TRIALS = 1000


@dataclass
class SphereExperimentConfig:
    """N points on S^{n-1} and one interval (c_ij, c'_ij] per pair.

    ``boxes`` is a (b, 2) array in row-major pair order; a single pair of
    numbers is broadcast to every pair.
    """

    N: int
    n: int
    boxes: np.ndarray
    trials: int = 10_000
    seed: int = 0
    K: float = field(init=False)
    eps: float = field(init=False)

    def __post_init__(self):
        if self.N < 2 or self.n < 2:
            raise ConfigError("need N >= 2 and n >= 2")
        b = num_pairs(self.N)
        boxes = np.asarray(self.boxes, dtype=float)
        if boxes.shape == (2,):
            boxes = np.tile(boxes, (b, 1))
        if boxes.shape != (b, 2):
            raise ConfigError(f"need {b} boxes, got shape {boxes.shape}")
        widths = boxes[:, 1] - boxes[:, 0]
        if np.any(widths <= 0):
            raise ConfigError("every box needs c < c'")
        self.boxes = boxes
        self.K = float(np.max(np.abs(boxes)))
        self.eps = float(np.min(widths))

    def summary(self) -> dict:
        d = asdict(self)
        d["boxes"] = self.boxes.tolist()
        return d


def sample_uniform_sphere(n: int, rng, size: int | tuple | None = None) -> np.ndarray:
    """Uniform point(s) on S^{n-1} by normalising a standard Gaussian vector."""
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    shape = (n,) if size is None else (*np.atleast_1d(size), n)
    g = rng.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def signed_normalized_angles(U: np.ndarray) -> np.ndarray:
    """sqrt(n)(angle(u_i, u_j) - pi/2) for unit rows of U (..., N, n), row-major over pairs."""
    n = U.shape[-1]
    N = U.shape[-2]
    G = np.einsum("...ik,...jk->...ij", U, U)
    iu = np.triu_indices(N, k=1)
    cos = np.clip(G[..., iu[0], iu[1]], -1.0, 1.0)
    return math.sqrt(n) * (np.arccos(cos) - math.pi / 2)


def sample_angles(N: int, n: int, trials: int, seed: int) -> np.ndarray:
    """(trials, b) normalised angles; trial t uses substream (seed, t)."""
    out = np.empty((trials, num_pairs(N)))
    for t in range(trials):
        U = sample_uniform_sphere(n, rng_substream(seed, t), N)
        out[t] = signed_normalized_angles(U)
    return out


def hits_in_box(angles: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Indicator that c_ij < alpha~_ij <= c'_ij for every pair."""
    return np.all((angles > boxes[:, 0]) & (angles <= boxes[:, 1]), axis=1)


def _bernoulli(hits: np.ndarray) -> tuple[float, float]:
    m = hits.size
    p = float(hits.mean())
    return p, math.sqrt(p * (1.0 - p) / m)


def estimate_P(config: SphereExperimentConfig, angles: np.ndarray | None = None) -> tuple[float, float]:
    """Bernoulli estimate and standard error of P(all angles in their boxes)."""
    if config.trials < MIN_TRIALS:
        raise ConfigError(f"need at least {MIN_TRIALS} trials")
    if angles is None:
        angles = sample_angles(config.N, config.n, config.trials, config.seed)
    return _bernoulli(hits_in_box(angles, config.boxes))


def estimate_P_nested(configs: list[SphereExperimentConfig]) -> list[tuple[float, float]]:
    """Estimates for several box configurations on common random numbers."""
    first = configs[0]
    for c in configs[1:]:
        if (c.N, c.n, c.trials, c.seed) != (first.N, first.n, first.trials, first.seed):
            raise ConfigError("common random numbers need equal N, n, trials, seed")
    angles = sample_angles(first.N, first.n, first.trials, first.seed)
    return [estimate_P(c, angles) for c in configs]


def compute_G(config: SphereExperimentConfig) -> float:
    """prod over pairs of Phi(c'_ij) - Phi(c_ij) for the standard normal CDF Phi."""
    return math.prod(normal_cdf(hi) - normal_cdf(lo) for lo, hi in config.boxes)


@dataclass
class RatioReport:
    N: int
    n: int
    trials: int
    estimate: float
    stderr: float
    G: float
    ratio: float
    ratio_stderr: float
    ci_low: float
    ci_high: float
    diagnostic: float  # N^3 / sqrt(n)
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def ratio_experiment(config: SphereExperimentConfig, angles: np.ndarray | None = None) -> RatioReport:
    """P-hat / G with a 95% interval; passes when |ratio - 1| <= max(3 sigma, 0.15 N^3/sqrt n)."""
    G = compute_G(config)
    if G <= 0:
        raise DegenerateConfigError("Gaussian box mass is zero")
    est, se = estimate_P(config, angles)
    ratio = est / G
    rse = se / G
    diag = config.N**3 / math.sqrt(config.n)
    tol = max(3 * rse, SLACK * diag)
    return RatioReport(
        N=config.N,
        n=config.n,
        trials=config.trials,
        estimate=est,
        stderr=se,
        G=G,
        ratio=ratio,
        ratio_stderr=rse,
        ci_low=ratio - 1.96 * rse,
        ci_high=ratio + 1.96 * rse,
        diagnostic=diag,
        tolerance=tol,
        passed=bool(abs(ratio - 1.0) <= tol),
    )


def pair_box_probability(n: int, lo: float, hi: float) -> float:
    """Exact P(lo < alpha~_12 <= hi) for two uniform points on S^{n-1}.

    The angle has density (omega_{n-1}/omega_n) sin^{n-2}.
    """
    a = math.pi / 2 + max(lo, -math.sqrt(n) * math.pi / 2) / math.sqrt(n)
    b = math.pi / 2 + min(hi, math.sqrt(n) * math.pi / 2) / math.sqrt(n)
    if b <= a:
        return 0.0
    ratio = math.exp(log_sphere_surface(n - 1) - log_sphere_surface(n))
    val, _ = integrate.quad(lambda t: math.sin(t) ** (n - 2), a, b, epsabs=1e-15, epsrel=1e-13, limit=200)
    return ratio * val
