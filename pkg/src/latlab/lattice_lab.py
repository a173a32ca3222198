"""Random unimodular lattices, their short vectors, and the derived statistics.

Lattices are sampled from the Goldstein-Mayer family: for a prime p and a
uniform a in (Z/p)^{n-1}, the rows (e_i | a_i), i < n, together with
(0, ..., 0, p) span an integral lattice of determinant p. Scaling by
p^{-1/n} makes it unimodular. These lattices equidistribute to the Haar
measure on unimodular lattices as p grows.

Whenever a basis is integral up to its scale, lengths and ties are decided
in exact integer arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import ConfigError, DomainError, NumericalInconsistencyError, ResourceError

DEFAULT_PRIME = 1048573
DEFAULT_DELTA = 0.99
DEFAULT_NODE_BUDGET = 20_000_000
RADIUS_GROWTH = 1.5
DET_TOL = 1e-9
MIN_PRIME = 10**5
# Gram entries of the integer basis are about p^2 and must stay exact in doubles
MAX_PRIME = 2**26


def is_prime(p: int) -> bool:
    p = int(p)
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


def log_ball_volume(n: int, r: float = 1.0) -> float:
    """log of the volume of the n-ball of radius r."""
    return 0.5 * n * math.log(math.pi) - math.lgamma(n / 2.0 + 1.0) + n * math.log(r)


def ball_volume(n: int, r: float = 1.0) -> float:
    return math.exp(log_ball_volume(n, r))


def radius_for_volume(n: int, V: float) -> float:
    return math.exp((math.log(V) - log_ball_volume(n)) / n)


@dataclass
class LatticeBasis:
    """Row basis of a lattice in R^n.

    ``rows`` holds the real basis. When the lattice is a scaled copy of an
    integral one, ``int_rows`` holds the integer matrix and
    rows = scale * int_rows; otherwise ``int_rows`` is None and ``scale``
    records the normalisation applied to reach determinant one.
    """

    n: int
    rows: np.ndarray
    scale: float = 1.0
    int_rows: np.ndarray | None = None
    check_det: bool = True

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        if self.rows.shape != (self.n, self.n):
            raise DomainError(f"basis must be {self.n}x{self.n}, got {self.rows.shape}")
        if self.check_det and abs(abs(self.det()) - 1.0) > DET_TOL:
            raise NumericalInconsistencyError(f"basis is not unimodular: det = {self.det()!r}")

    @classmethod
    def from_rows(cls, rows) -> "LatticeBasis":
        """Rescale an arbitrary full-rank real basis to determinant one."""
        rows = np.asarray(rows, dtype=float)
        n = rows.shape[0]
        sign, logdet = np.linalg.slogdet(rows)
        if sign == 0:
            raise DomainError("basis is singular")
        scale = math.exp(-logdet / n)
        return cls(n, rows * scale, scale)

    @classmethod
    def from_integer_rows(cls, int_rows) -> "LatticeBasis":
        int_rows = np.asarray(int_rows, dtype=np.int64)
        n = int_rows.shape[0]
        det = abs(round(np.linalg.det(int_rows.astype(float))))
        if det == 0:
            raise DomainError("basis is singular")
        scale = float(det) ** (-1.0 / n)
        return cls(n, int_rows * scale, scale, int_rows)

    def det(self) -> float:
        if self.int_rows is not None:
            sign, logdet = np.linalg.slogdet(self.int_rows.astype(float))
            return float(sign * math.exp(logdet + self.n * math.log(self.scale)))
        return float(np.linalg.det(self.rows))

    @property
    def is_integral(self) -> bool:
        return self.int_rows is not None

    @cached_property
    def gso(self) -> tuple[np.ndarray, np.ndarray]:
        """(mu, |b*_i|^2) in the units of ``work_rows``."""
        return _gso(self.work_rows)

    @property
    def work_rows(self) -> np.ndarray:
        """Rows in which arithmetic is done: the integer matrix if available."""
        if self.int_rows is not None:
            return self.int_rows.astype(float)
        return self.rows


def _gso(B: np.ndarray):
    n = B.shape[0]
    mu = np.zeros((n, n))
    bb = np.zeros(n)
    Bs = np.zeros_like(B, dtype=float)
    for i in range(n):
        v = B[i].astype(float).copy()
        for j in range(i):
            mu[i, j] = B[i] @ Bs[j] / bb[j]
            v -= mu[i, j] * Bs[j]
        Bs[i] = v
        bb[i] = v @ v
    return mu, bb


def sample_lattice(n: int, p: int = DEFAULT_PRIME, rng=None, *, allow_small_prime: bool = False) -> LatticeBasis:
    """Goldstein-Mayer lattice with a uniform a in (Z/p)^{n-1}, scaled to covolume one."""
    if n < 2:
        raise ConfigError(f"need n >= 2, got {n}")
    if not is_prime(p):
        raise ConfigError(f"p={p} is not prime")
    if p > MAX_PRIME:
        raise ConfigError(f"p={p} exceeds {MAX_PRIME}, beyond exact double-precision reduction")
    if p < MIN_PRIME and not allow_small_prime:
        raise ConfigError(f"p={p} is below {MIN_PRIME}; pass allow_small_prime for tests")
    rng = np.random.default_rng() if rng is None else rng
    a = rng.integers(0, p, size=n - 1)
    return goldstein_mayer_basis(n, p, a)


def goldstein_mayer_basis(n: int, p: int, a) -> LatticeBasis:
    a = np.asarray(a, dtype=np.int64)
    M = np.zeros((n, n), dtype=np.int64)
    M[: n - 1, : n - 1] = np.eye(n - 1, dtype=np.int64)
    M[: n - 1, n - 1] = a
    M[n - 1, n - 1] = p
    return LatticeBasis(n, M * p ** (-1.0 / n), p ** (-1.0 / n), M)


def lll_reduce(basis: LatticeBasis, delta: float = DEFAULT_DELTA) -> LatticeBasis:
    """LLL-reduced basis of the same lattice (Lovasz parameter ``delta``)."""
    if not 0.25 < delta < 1.0:
        raise ConfigError(f"LLL needs 0.25 < delta < 1, got {delta}")
    B = basis.work_rows.astype(float).copy()
    status, mu, bb = _kernels.lll_inplace(B, delta)
    if status != _kernels.LLL_OK:
        raise NumericalInconsistencyError("basis lost rank during reduction")
    if basis.is_integral:
        ints = np.rint(B).astype(np.int64)
        out = LatticeBasis(basis.n, ints * basis.scale, basis.scale, ints, check_det=basis.check_det)
    else:
        out = LatticeBasis(basis.n, B, basis.scale, None, check_det=basis.check_det)
    out.__dict__["gso"] = (mu, bb)
    return out


@dataclass
class ShortVectors:
    """The N shortest nonzero +- classes of a lattice, sorted by length."""

    n: int
    N: int
    vectors: np.ndarray  # N x n real coordinates
    lengths: np.ndarray
    volumes: np.ndarray
    angles: np.ndarray  # normalised angles phi~_ij, row-major over pairs
    tie_flag: bool = False
    coefficients: np.ndarray | None = None  # integer coordinates in the basis
    int_vectors: np.ndarray | None = None  # exact coordinates when integral
    sq_norms_exact: list | None = field(default=None, repr=False)

    def count_within(self, x: float) -> int:
        """Number of stored classes with volume at most x."""
        return int(np.searchsorted(self.volumes, x, side="right"))

    def angle(self, i: int, j: int) -> float:
        from .sphere_geometry import pair_index

        return float(self.angles[pair_index(self.N, i, j)])


def volumes(sv_or_lengths, n: int | None = None) -> np.ndarray:
    """pi^{n/2}/Gamma(n/2+1) |v|^n, evaluated in the log domain."""
    if isinstance(sv_or_lengths, ShortVectors):
        n = sv_or_lengths.n
        lengths = sv_or_lengths.lengths
    else:
        lengths = np.asarray(sv_or_lengths, dtype=float)
    if n is None:
        raise DomainError("dimension required")
    with np.errstate(divide="ignore"):
        return np.exp(log_ball_volume(n) + n * np.log(lengths))


def folded_angles(vectors: np.ndarray) -> np.ndarray:
    """phi_ij = arccos(|v_i.v_j| / |v_i||v_j|) in [0, pi/2], row-major over pairs."""
    V = np.asarray(vectors, dtype=float)
    norms = np.linalg.norm(V, axis=1)
    if np.any(norms == 0):
        raise DomainError("zero vector has no angle")
    G = np.abs(V @ V.T) / np.outer(norms, norms)
    iu = np.triu_indices(V.shape[0], k=1)
    return np.arccos(np.clip(G[iu], 0.0, 1.0))


def normalized_angles(sv_or_vectors, n: int | None = None) -> np.ndarray:
    """phi~_ij = sqrt(n) (pi/2 - phi_ij) >= 0."""
    if isinstance(sv_or_vectors, ShortVectors):
        n = sv_or_vectors.n
        V = sv_or_vectors.vectors
    else:
        V = np.asarray(sv_or_vectors, dtype=float)
        n = V.shape[1] if n is None else n
    return math.sqrt(n) * (math.pi / 2 - folded_angles(V))


def _canonical_sign(rows: np.ndarray) -> np.ndarray:
    """Flip rows so that the first nonzero coordinate is positive."""
    rows = rows.copy()
    for r in rows:
        nz = np.flatnonzero(r)
        if nz.size and r[nz[0]] < 0:
            r *= -1
    return rows


def enumerate_classes(basis: LatticeBasis, radius_sq: float, node_budget: int = DEFAULT_NODE_BUDGET):
    """All +- classes with squared length <= radius_sq (in real units).

    Returns (coefficients, vectors, exact_sq) where exact_sq holds integer
    squared lengths in integer units when the basis is integral, else floats.
    Vectors are sign-canonical.
    """
    mu, bb = basis.gso
    unit = basis.scale**2 if basis.is_integral else 1.0
    work_r2 = radius_sq / unit
    capacity = 64
    while True:
        count, coeffs, nodes = _kernels.enumerate_ball(mu, bb, work_r2 * (1 + 1e-9), node_budget, capacity)
        if count == _kernels.ENUM_BUDGET:
            raise ResourceError(f"enumeration exceeded {node_budget} nodes")
        if count == _kernels.ENUM_CAPACITY:
            capacity *= 4
            continue
        break
    coeffs = coeffs[:count]
    if basis.is_integral:
        ints = coeffs @ basis.int_rows
        flip = _first_nonzero_sign(ints) < 0
        ints[flip] *= -1
        coeffs[flip] *= -1
        exact = np.einsum("ij,ij->i", ints, ints)
        # the enumeration radius carries a tiny slack; decide membership exactly
        keep = exact <= work_r2
        return coeffs[keep], ints[keep] * basis.scale, exact[keep], ints[keep]
    vecs = coeffs @ basis.rows
    flip = _first_nonzero_sign(vecs) < 0
    vecs[flip] *= -1
    coeffs[flip] *= -1
    sq = np.einsum("ij,ij->i", vecs, vecs)
    keep = sq <= radius_sq * (1 + 1e-12)
    return coeffs[keep], vecs[keep], sq[keep], None


def _first_nonzero_sign(rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] == 0:
        return np.zeros(0)
    nz = rows != 0
    first = np.argmax(nz, axis=1)
    return np.sign(rows[np.arange(rows.shape[0]), first])


def _sort_classes(sq, vecs):
    # (length, lexicographic coordinates)
    keys = [vecs[:, c] for c in range(vecs.shape[1] - 1, -1, -1)] + [sq]
    return np.lexsort(keys)


def shortest_vectors(
    basis: LatticeBasis,
    N: int,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> ShortVectors:
    """The N shortest nonzero classes mod +-.

    The search radius starts at the heuristic radius enclosing 2(N+4)
    lattice points and the volume grows by 1.5 until N classes are found.
    The input should be LLL reduced for the enumeration to be fast.
    """
    if N < 1:
        raise DomainError(f"need N >= 1, got {N}")
    n = basis.n
    V = 2.0 * (N + 4)
    while True:
        r = radius_for_volume(n, V)
        coeffs, vecs, sq, ints = enumerate_classes(basis, r * r, node_budget)
        if len(sq) >= N:
            break
        V *= RADIUS_GROWTH
    order = _sort_classes(sq, ints if ints is not None else vecs)
    coeffs, vecs, sq = coeffs[order], vecs[order], sq[order]
    if ints is not None:
        ints = ints[order]
    head = sq[: N + 1]
    tie = bool(np.any(head[1:] == head[:-1]))
    if basis.is_integral:
        lengths = np.sqrt(sq[:N].astype(float)) * basis.scale
    else:
        lengths = np.sqrt(sq[:N])
    top = vecs[:N]
    return ShortVectors(
        n=n,
        N=N,
        vectors=top,
        lengths=lengths,
        volumes=volumes(lengths, n),
        angles=normalized_angles(top, n) if N > 1 else np.zeros(0),
        tie_flag=tie,
        coefficients=coeffs[:N],
        int_vectors=None if ints is None else ints[:N],
        sq_norms_exact=[int(s) for s in sq[:N]] if ints is not None else None,
    )


def brute_force_shortest(basis: LatticeBasis, N: int, bound: int = 6):
    """Oracle: N shortest classes among all combinations with coefficients in [-bound, bound].

    Returns exact integer coordinates (canonical sign, sorted by length then
    lexicographically) and squared lengths, for integral bases. The
    coefficient box is split into two halves; every pair of half-sums within
    the search radius is found by an exact range query.
    """
    from scipy.spatial import cKDTree

    if not basis.is_integral:
        raise DomainError("oracle needs an integral basis")
    B = basis.int_rows
    n = basis.n
    vals = np.arange(-bound, bound + 1)
    h = n // 2
    H1 = _all_combos(vals, h) @ B[:h]
    H2 = _all_combos(vals, n - h) @ B[h:]
    n1 = np.einsum("ij,ij->i", H1, H1)
    n2 = np.einsum("ij,ij->i", H2, H2)
    # each class appears twice among the half-sums (v and -v), so the
    # (2N)-th smallest nonzero half-sum length bounds the N-th shortest class
    cand = np.sort(np.concatenate([n1[n1 > 0], n2[n2 > 0]]))
    thresh = float(cand[min(2 * N - 1, cand.size - 1)])
    tree = cKDTree(H2.astype(float))
    hits = tree.query_ball_point(-H1.astype(float), math.sqrt(thresh) + 1e-6)
    rows = [(i, j) for i, js in enumerate(hits) for j in js]
    if rows:
        ii, jj = np.array(rows).T
        allv = H1[ii] + H2[jj]
    else:
        allv = np.zeros((0, n), np.int64)
    allv = allv[np.any(allv != 0, axis=1)]
    flip = _first_nonzero_sign(allv) < 0
    allv[flip] *= -1
    allv = np.unique(allv, axis=0)
    sq = np.einsum("ij,ij->i", allv, allv)
    order = _sort_classes(sq, allv)
    return allv[order][:N], sq[order][:N]


def _all_combos(vals: np.ndarray, k: int) -> np.ndarray:
    grids = np.meshgrid(*([vals] * k), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)


def count_angle_pairs(
    basis: LatticeBasis,
    V: float,
    phi1: float = 0.0,
    phi2: float = math.pi / 2,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> int:
    """Unordered pairs of distinct classes in the ball of volume V with folded angle in [phi1, phi2]."""
    if not 0 <= phi1 < phi2 <= math.pi / 2:
        raise DomainError("need 0 <= phi1 < phi2 <= pi/2")
    if V <= 0:
        raise DomainError("volume must be positive")
    r = radius_for_volume(basis.n, V)
    _, vecs, _, ints = enumerate_classes(basis, r * r, node_budget)
    if vecs.shape[0] < 2:
        return 0
    if ints is not None:
        # exact cosines where possible: orthogonal pairs are decided in integers
        G = ints @ ints.T
        norms = np.sqrt(np.diag(G).astype(float))
        C = np.abs(G.astype(float)) / np.outer(norms, norms)
    else:
        norms = np.linalg.norm(vecs, axis=1)
        C = np.abs(vecs @ vecs.T) / np.outer(norms, norms)
    iu = np.triu_indices(vecs.shape[0], k=1)
    phi = np.arccos(np.clip(C[iu], 0.0, 1.0))
    return int(np.count_nonzero((phi >= phi1) & (phi <= phi2)))


def pair_count_expectation(n: int, V: float, phi1: float = 0.0, phi2: float = math.pi / 2) -> float:
    """V^2/4 * (omega_{n-1}/omega_n) * int_{phi1}^{phi2} sin^{n-2}, the Haar-average pair count."""
    from scipy import integrate

    from .sphere_geometry import log_sphere_surface

    ratio = math.exp(log_sphere_surface(n - 1) - log_sphere_surface(n))
    integral, _ = integrate.quad(lambda t: math.sin(t) ** (n - 2), phi1, phi2, epsabs=1e-14, epsrel=1e-12)
    return V * V / 4.0 * ratio * integral


def concentration_fraction(samples, C: float) -> float:
    """Fraction of samples with pi/2 - phi_ij <= C/sqrt(n) for every pair."""
    samples = list(samples)
    if not samples:
        raise DomainError("no samples")
    n = samples[0].n
    hits = 0
    for sv in samples:
        if sv.n != n:
            raise DomainError("samples mix dimensions")
        # phi~ = sqrt(n)(pi/2 - phi) <= C
        if sv.angles.size == 0 or float(np.max(sv.angles)) <= C:
            hits += 1
    return hits / len(samples)


def reduced_sample(n: int, p: int, rng, delta: float = DEFAULT_DELTA, **kw) -> LatticeBasis:
    return lll_reduce(sample_lattice(n, p, rng, **kw), delta)
