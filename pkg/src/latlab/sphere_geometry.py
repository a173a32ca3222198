"""Nested unit frames on the sphere and the map from frame angles to pair angles.

A frame u_1, ..., u_N in R^n is parametrised by angles phi_ij (i < j):
u_1 = e_1 and u_j has coordinates

    cos phi_1j, sin phi_1j cos phi_2j, ..., sin phi_1j ... sin phi_{j-1,j}, 0, ...

The pair angles alpha_ij = angle(u_i, u_j) are a triangular function of the
phi_ij, which this module evaluates, inverts and differentiates.

Angle vectors are stored row-major over pairs: (1,2), (1,3), ..., (1,N),
(2,3), ..., (N-1,N). Indices in the public API are 1-based to match the
usual notation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .errors import (
    DimensionError,
    DomainError,
    NotRepresentableError,
    NumericalInconsistencyError,
    PreconditionError,
    SingularityError,
)

CLAMP_TOL = 1e-12
ROOT_BRACKET = (1e-9, math.pi - 1e-9)
ROOT_TOL = 1e-12


def num_pairs(N: int) -> int:
    return N * (N - 1) // 2


@lru_cache(maxsize=None)
def pair_list(N: int) -> tuple[tuple[int, int], ...]:
    return tuple((i, j) for i in range(1, N + 1) for j in range(i + 1, N + 1))


@lru_cache(maxsize=None)
def _pair_lookup(N: int) -> dict:
    return {p: k for k, p in enumerate(pair_list(N))}


def pair_index(N: int, i: int, j: int) -> int:
    """Position of pair (i, j), 1 <= i < j <= N, in row-major order."""
    return _pair_lookup(N)[(i, j)]


def _points_from_pairs(b: int) -> int:
    N = int(round((1 + math.sqrt(1 + 8 * b)) / 2))
    if num_pairs(N) != b:
        raise DomainError(f"{b} entries is not a triangular number of pairs")
    return N


@dataclass
class AngleVector:
    """Values indexed by pairs (i, j), 1 <= i < j <= N."""

    N: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size != num_pairs(self.N):
            raise DomainError(
                f"N={self.N} needs {num_pairs(self.N)} entries, got {self.values.size}"
            )

    @classmethod
    def from_values(cls, values) -> "AngleVector":
        values = np.asarray(values, dtype=float).ravel()
        return cls(_points_from_pairs(values.size), values)

    @classmethod
    def from_dict(cls, N: int, entries: dict) -> "AngleVector":
        return cls(N, [entries[p] for p in pair_list(N)])

    @property
    def b(self) -> int:
        return self.values.size

    def __getitem__(self, key):
        i, j = key
        return self.values[pair_index(self.N, i, j)]

    def matrix(self) -> np.ndarray:
        """(N+1) x (N+1) array with entry [i, j] = value of pair (i, j); 1-based."""
        M = np.full((self.N + 1, self.N + 1), np.nan)
        for k, (i, j) in enumerate(pair_list(self.N)):
            M[i, j] = self.values[k]
        return M

    def as_dict(self) -> dict:
        return {p: float(v) for p, v in zip(pair_list(self.N), self.values)}


@dataclass
class UnitFrame:
    N: int
    n: int
    vectors: np.ndarray  # N x n

    def gram(self) -> np.ndarray:
        return self.vectors @ self.vectors.T


@dataclass
class KernelResidual:
    value: float
    n: int
    N: int
    bound_k: float


def _as_angles(phi) -> AngleVector:
    return phi if isinstance(phi, AngleVector) else AngleVector.from_values(phi)


def sphere_surface(k: float) -> float:
    """Surface measure of the unit sphere S^{k-1} in R^k: 2 pi^{k/2} / Gamma(k/2)."""
    if k <= 0:
        raise DomainError(f"sphere surface needs k > 0, got {k}")
    return 2.0 * math.pi ** (k / 2.0) / math.gamma(k / 2.0)


def log_sphere_surface(k: float) -> float:
    if k <= 0:
        raise DomainError(f"sphere surface needs k > 0, got {k}")
    return math.log(2.0) + 0.5 * k * math.log(math.pi) - math.lgamma(k / 2.0)


def build_unit_frame(phi, n: int) -> UnitFrame:
    """Unit vectors u_1..u_N in R^n from the frame angles."""
    phi = _as_angles(phi)
    N = phi.N
    if n < N:
        raise DimensionError(f"cannot place {N} frame vectors in R^{n}")
    P = phi.matrix()
    U = np.zeros((N, n))
    U[0, 0] = 1.0
    for j in range(2, N + 1):
        s = 1.0
        for k in range(1, j):
            U[j - 1, k - 1] = s * math.cos(P[k, j])
            s *= math.sin(P[k, j])
        U[j - 1, j - 1] = s
    return UnitFrame(N, n, U)


def dot_product_formula(phi, i: int, j: int) -> float:
    """Closed-form u_i . u_j in terms of the shifted angles phi - pi/2.

    With d = phi - pi/2 the inner product is

        sum_{m<i} sin d_mi sin d_mj prod_{k<m} cos d_ki cos d_kj
          - sin d_ij prod_{k<i} cos d_ki cos d_kj
    """
    phi = _as_angles(phi)
    if not 1 <= i < j <= phi.N:
        raise DomainError(f"need 1 <= i < j <= {phi.N}, got ({i}, {j})")
    D = phi.matrix() - math.pi / 2
    total = 0.0
    prod = 1.0
    for m in range(1, i):
        total += math.sin(D[m, i]) * math.sin(D[m, j]) * prod
        prod *= math.cos(D[m, i]) * math.cos(D[m, j])
    return total - math.sin(D[i, j]) * prod


def _row_coefficients(P: np.ndarray, i: int, j: int) -> tuple[float, float]:
    # u_i . u_j = F + X cos phi_ij, with F and X depending only on rows < i
    F = 0.0
    X = 1.0
    for m in range(1, i):
        F += math.cos(P[m, i]) * math.cos(P[m, j]) * X
        X *= math.sin(P[m, i]) * math.sin(P[m, j])
    return F, X


def _safe_arccos(c: float) -> float:
    if c > 1.0:
        if c - 1.0 > CLAMP_TOL:
            raise NumericalInconsistencyError(f"cosine {c!r} exceeds 1")
        return 0.0
    if c < -1.0:
        if -1.0 - c > CLAMP_TOL:
            raise NumericalInconsistencyError(f"cosine {c!r} below -1")
        return math.pi
    return math.acos(c)


def forward_map(phi) -> AngleVector:
    """Pair angles alpha_ij = angle(u_i, u_j) of the frame built from phi."""
    phi = _as_angles(phi)
    N = phi.N
    P = phi.matrix()
    out = np.empty(phi.b)
    for k, (i, j) in enumerate(pair_list(N)):
        if i == 1:
            out[k] = P[1, j]
            continue
        F, X = _row_coefficients(P, i, j)
        out[k] = _safe_arccos(F + math.cos(P[i, j]) * X)
    return AngleVector(N, out)


def jacobian_det(phi, alpha=None) -> float:
    """Closed-form Jacobian determinant of the forward map.

    prod_{i<j} sin(phi_ij)^{N-i} / sin(alpha_ij); alpha is recomputed when
    not supplied.
    """
    phi = _as_angles(phi)
    alpha = forward_map(phi) if alpha is None else _as_angles(alpha)
    N = phi.N
    log_det = 0.0
    sign = 1.0
    for k, (i, _) in enumerate(pair_list(N)):
        sa = math.sin(alpha.values[k])
        if sa == 0.0:
            raise SingularityError("jacobian undefined where sin(alpha) = 0")
        sp = math.sin(phi.values[k])
        if sp == 0.0:
            return 0.0
        log_det += (N - i) * math.log(abs(sp)) - math.log(abs(sa))
        if sp < 0 and (N - i) % 2:
            sign = -sign
        if sa < 0:
            sign = -sign
    return sign * math.exp(log_det)


def jacobian_fd(phi, step: float = 1e-6) -> float:
    """Central finite-difference determinant of the forward map (test oracle)."""
    phi = _as_angles(phi)
    b = phi.b
    J = np.empty((b, b))
    for c in range(b):
        plus = phi.values.copy()
        minus = phi.values.copy()
        plus[c] += step
        minus[c] -= step
        J[:, c] = (
            forward_map(AngleVector(phi.N, plus)).values
            - forward_map(AngleVector(phi.N, minus)).values
        ) / (2 * step)
    return float(np.linalg.det(J))


def invert_map(alpha) -> AngleVector:
    """Recover frame angles phi from pair angles alpha, row by row.

    Each alpha_ij is increasing in phi_ij once the earlier rows are fixed,
    so every entry is a bracketed scalar root on (1e-9, pi - 1e-9).
    """
    alpha = _as_angles(alpha)
    N = alpha.N
    A = alpha.matrix()
    P = np.full((N + 1, N + 1), np.nan)
    lo, hi = ROOT_BRACKET
    for j in range(2, N + 1):
        P[1, j] = A[1, j]
    for i in range(2, N + 1):
        for j in range(i + 1, N + 1):
            F, X = _row_coefficients(P, i, j)
            target = A[i, j]

            def g(t, F=F, X=X, target=target):
                return _safe_arccos(F + math.cos(t) * X) - target

            g_lo, g_hi = g(lo), g(hi)
            if g_lo > 0 or g_hi < 0:
                raise NotRepresentableError(
                    f"alpha_{i}{j}={target:.6g} is outside the reachable range "
                    f"[{g_lo + target:.6g}, {g_hi + target:.6g}]"
                )
            if g_lo == 0:
                P[i, j] = lo
            elif g_hi == 0:
                P[i, j] = hi
            else:
                P[i, j] = optimize.brentq(g, lo, hi, xtol=ROOT_TOL, rtol=4 * np.finfo(float).eps, maxiter=200)
    return AngleVector(N, [P[i, j] for (i, j) in pair_list(N)])


def _log_cos(x: np.ndarray) -> np.ndarray:
    # log cos x = log(1 - 2 sin^2(x/2)), accurate for small x
    s = np.sin(x / 2.0)
    return np.log1p(-2.0 * s * s)


def cosine_power_residual(t, n: int) -> KernelResidual:
    """prod cos(t_ij/sqrt n)^{n-i-1} / prod exp(-t_ij^2/2) - 1.

    Requires n > 2 (K+1)^2 where K+1 = max |t_ij|.
    """
    t = _as_angles(t)
    N = t.N
    k1 = float(np.max(np.abs(t.values))) if t.b else 0.0
    if n <= 2 * k1 * k1:
        raise PreconditionError(f"n={n} must exceed 2(K+1)^2 = {2 * k1 * k1:.6g}")
    rows = np.array([i for (i, _) in pair_list(N)], dtype=float)
    x = t.values / math.sqrt(n)
    log_ratio = np.sum((n - rows - 1) * _log_cos(x)) + np.sum(t.values**2) / 2.0
    return KernelResidual(float(np.expm1(log_ratio)), n, N, k1 - 1.0)


def sphere_ratio_log(n: int, N: int) -> float:
    """log of (2 pi)^{b/2} prod_{l=1}^{N-1} prod_{m=1}^{l} omega_{n-m} / (omega_{n-m+1} sqrt n)."""
    b = num_pairs(N)
    total = 0.5 * b * math.log(2 * math.pi)
    for l in range(1, N):
        for m in range(1, l + 1):
            k = n - m
            # omega_k / omega_{k+1} = Gamma((k+1)/2) / (sqrt(pi) Gamma(k/2))
            total += (
                math.lgamma((k + 1) / 2.0)
                - math.lgamma(k / 2.0)
                - 0.5 * math.log(math.pi)
                - 0.5 * math.log(n)
            )
    return total


def sphere_ratio_residual(n: int, N: int) -> KernelResidual:
    if n <= N:
        raise PreconditionError(f"need n > N, got n={n}, N={N}")
    return KernelResidual(math.expm1(sphere_ratio_log(n, N)), n, N, math.nan)


def angle_density_residual(alpha_tilde, n: int) -> KernelResidual:
    """Residual of the pair-angle density against the Gaussian kernel.

    With alpha = pi/2 + alpha_tilde/sqrt n and phi its preimage under the
    forward map, returns

        prod sin(phi_ij)^{n-N-1} cos(alpha_tilde_ij/sqrt n) exp(alpha_tilde_ij^2/2) - 1.
    """
    at = _as_angles(alpha_tilde)
    N = at.N
    if n <= N + 1:
        raise PreconditionError(f"need n > N + 1, got n={n}, N={N}")
    alpha = AngleVector(N, math.pi / 2 + at.values / math.sqrt(n))
    phi = invert_map(alpha)
    sp = np.sin(phi.values)
    if np.any(sp <= 0):
        raise NumericalInconsistencyError("preimage angle left (0, pi)")
    log_h = (
        (n - N - 1) * np.sum(np.log(sp))
        + np.sum(_log_cos(at.values / math.sqrt(n)))
        + np.sum(at.values**2) / 2.0
    )
    k = float(np.max(np.abs(at.values))) if at.b else 0.0
    return KernelResidual(float(np.expm1(log_h)), n, N, k)


def wallis_integral(n: int) -> tuple[float, float]:
    """int_0^{pi/2} sin^{n-2} by quadrature and by (sqrt pi / 2) Gamma((n-1)/2)/Gamma(n/2)."""
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    quad, _ = integrate.quad(
        lambda x: math.sin(x) ** (n - 2), 0.0, math.pi / 2, epsabs=1e-14, epsrel=1e-13, limit=200
    )
    closed = 0.5 * math.sqrt(math.pi) * math.exp(math.lgamma((n - 1) / 2.0) - math.lgamma(n / 2.0))
    return quad, closed
