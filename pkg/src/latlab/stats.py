"""Error function, half-normal law and Kolmogorov-Smirnov distances."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_SERIES_CUTOFF = 3.0


def _erf_series(x: float) -> float:
    # erf(x) = 2/sqrt(pi) e^{-x^2} sum_k 2^k x^{2k+1} / (2k+1)!!
    # every term is positive, so there is no cancellation
    x2 = x * x
    term = x
    total = x
    k = 0
    while term > 1e-17 * total:
        k += 1
        term *= 2.0 * x2 / (2 * k + 1)
        total += term
        if k > 500:
            break
    return _TWO_OVER_SQRT_PI * math.exp(-x2) * total


def _erfc_continued_fraction(x: float) -> float:
    # erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    # evaluated with the modified Lentz algorithm
    tiny = 1e-300
    f = x
    c = x
    d = 0.0
    for k in range(1, 400):
        a = 0.5 * k
        d = x + a * d
        d = tiny if d == 0.0 else d
        c = x + a / c
        c = tiny if c == 0.0 else c
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x * x) / (math.sqrt(math.pi) * f)


def erf(x: float) -> float:
    """Error function to about 1e-15 relative accuracy.

    A positive-term Taylor series is used for |x| < 3 and a continued
    fraction for the complementary function beyond that.
    """
    x = float(x)
    if math.isnan(x):
        return x
    if x < 0.0:
        return -erf(-x)
    if x == 0.0:
        return 0.0
    if x < _SERIES_CUTOFF:
        return _erf_series(x)
    if x > 27.0:
        return 1.0
    return 1.0 - _erfc_continued_fraction(x)


def erfc(x: float) -> float:
    x = float(x)
    if x >= _SERIES_CUTOFF:
        return _erfc_continued_fraction(x) if x <= 27.0 else 0.0
    return 1.0 - erf(x)


erf_vec = np.vectorize(erf, otypes=[float])


def normal_cdf(x: float) -> float:
    if x == math.inf:
        return 1.0
    if x == -math.inf:
        return 0.0
    return 0.5 * (1.0 + erf(x / math.sqrt(2.0)))


def half_normal_cdf(x: float) -> float:
    """P(|Z| <= x) for a standard normal Z."""
    if x < 0:
        raise DomainError(f"half-normal CDF needs x >= 0, got {x}")
    if x == math.inf:
        return 1.0
    return erf(x / math.sqrt(2.0))


def erf_tail_inequality(C: float) -> tuple[float, float]:
    """Return (1 - erf(C/sqrt 2), sqrt(2/pi)/C * e^{-C^2/2}).

    The first number is the two-sided Gaussian tail mass beyond C and the
    second is the Mills-ratio upper bound for it.
    """
    if C <= 0:
        raise DomainError(f"tail bound needs C > 0, got {C}")
    lhs = erfc(C / math.sqrt(2.0))
    rhs = math.sqrt(2.0) / (math.sqrt(math.pi) * C) * math.exp(-C * C / 2.0)
    return lhs, rhs


@dataclass
class EmpiricalSample:
    values: np.ndarray
    label: str = ""
    sorted_values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        self.sorted_values = np.sort(self.values)

    def __len__(self):
        return self.values.size

    def mean(self) -> float:
        return float(self.values.mean())

    def stderr(self) -> float:
        if self.values.size < 2:
            return math.nan
        return float(self.values.std(ddof=1) / math.sqrt(self.values.size))


def _reference_cdf(cdf: str, params: dict):
    if cdf == "exponential":
        mean = float(params.get("mean", 1.0))
        if mean <= 0:
            raise ConfigError("exponential mean must be positive")
        return lambda x: -np.expm1(-np.maximum(x, 0.0) / mean)
    if cdf == "half_normal":
        return lambda x: erf_vec(np.maximum(x, 0.0) / math.sqrt(2.0))
    if cdf == "uniform":
        lo = float(params.get("lo", 0.0))
        hi = float(params.get("hi", 1.0))
        if hi <= lo:
            raise ConfigError("uniform CDF needs lo < hi")
        return lambda x: np.clip((x - lo) / (hi - lo), 0.0, 1.0)
    raise ConfigError(f"unknown reference CDF {cdf!r}")


def ks_distance(sample, cdf: str, **params) -> float:
    """Kolmogorov-Smirnov sup distance between a sample and a named CDF.

    ``cdf`` is one of ``exponential`` (param ``mean``), ``half_normal`` or
    ``uniform`` (params ``lo``, ``hi``).
    """
    F = _reference_cdf(cdf, params)
    if isinstance(sample, EmpiricalSample):
        xs = sample.sorted_values
    else:
        xs = np.sort(np.asarray(sample, dtype=float).ravel())
    m = xs.size
    if m == 0:
        raise DomainError("KS distance of an empty sample")
    Fx = F(xs)
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - Fx), np.max(Fx - (i - 1) / m)))
