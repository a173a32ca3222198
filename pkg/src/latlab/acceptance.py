"""The acceptance checks, one function per criterion.

Each check returns a CriterionResult; ``run_all`` evaluates every check and
is what ``latlab accept`` and the acceptance tests call. Lattice runs that
several checks share are cached per process.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import goodness as gd
from . import lattice_lab as ll
from . import point_process as pp
from . import sphere_geometry as sg
from . import sphere_mc as sm
from .harness import run_lattice_trials, theorem1_estimate
from .rng import rng_substream
from .stats import erf_tail_inequality, ks_distance

PRIME = ll.DEFAULT_PRIME
LATTICE_TRIALS = 2000
SEED_LENGTHS = 101
SEED_BOX = 103
SEED_SPHERE = 104
SEED_JACOBIAN = 105
SEED_IDENTITIES = 108
SEED_ORACLE = 109
SEED_PAIRS = 111
# measured once with goodness.scan_threshold over [4, 500]
DECAY_THRESHOLD = 4


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_short(v)}" for k, v in self.details.items())
        return f"[{status}] criterion {self.number:2d} {self.name}: {shown} ({self.seconds:.1f}s)"


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _timed(number, name):
    def wrap(fn):
        def inner(*args, **kwargs):
            t0 = time.perf_counter()
            passed, details = fn(*args, **kwargs)
            return CriterionResult(number, name, bool(passed), details, time.perf_counter() - t0)

        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        return inner

    return wrap


@lru_cache(maxsize=None)
def lattice_run(n: int, N: int, trials: int, seed: int):
    return run_lattice_trials(n, N, trials, PRIME, seed)


@_timed(1, "exponential law of V_1")
def exponential_lengths(trials: int = LATTICE_TRIALS):
    ks16 = ks_distance(lattice_run(16, 1, trials, SEED_LENGTHS).volumes[:, 0], "exponential", mean=2.0)
    ks8 = ks_distance(lattice_run(8, 1, trials, SEED_LENGTHS).volumes[:, 0], "exponential", mean=2.0)
    ties = float(lattice_run(16, 1, trials, SEED_LENGTHS).ties.mean())
    return ks16 <= 0.10 and ks16 < ks8, {"ks_n16": ks16, "ks_n8": ks8, "tie_fraction_n16": ties}


@_timed(2, "half-normal law of phi~")
def half_normal_angles(trials: int = LATTICE_TRIALS):
    run = lattice_run(16, 3, trials, SEED_LENGTHS)
    pooled = run.angles.ravel()
    ks = ks_distance(pooled, "half_normal")
    return ks <= 0.10, {"ks_n16": ks, "exact_zero_fraction": float(np.mean(pooled == 0.0))}


@_timed(3, "box expectation vs reference model")
def box_expectation(trials: int = LATTICE_TRIALS):
    run = lattice_run(16, 2, trials, SEED_BOX)
    est, se = theorem1_estimate(run, [1.0, 2.0], 1.0)
    f = pp.BoxFunctionSpec(2, 2.0, [(0.0, 1.0), (0.0, 2.0)], {(1, 2): [(0.0, 1.0)]})
    cf = pp.closed_form_expectation(f)
    tol = max(3 * se, 0.05)
    return abs(est - cf) <= tol, {"estimate": est, "stderr": se, "closed_form": cf, "tolerance": tol}


@_timed(4, "sphere angle ratio P/G")
def sphere_ratio(trials: int = 100_000):
    cfg = sm.SphereExperimentConfig(4, 2500, [-1.0, 1.0], trials, SEED_SPHERE)
    r = sm.ratio_experiment(cfg)
    return r.passed, {"ratio": r.ratio, "ratio_stderr": r.ratio_stderr, "G": r.G, "tolerance": r.tolerance}


@_timed(5, "jacobian closed form vs finite differences")
def jacobian_exactness(draws: int = 100):
    rng = rng_substream(SEED_JACOBIAN, 0)
    worst = 0.0
    for N in (3, 4):
        for _ in range(draws):
            phi = sg.AngleVector(N, rng.uniform(0.3, math.pi - 0.3, sg.num_pairs(N)))
            closed = sg.jacobian_det(phi)
            fd = sg.jacobian_fd(phi, 1e-6)
            worst = max(worst, abs(closed - fd) / abs(closed))
    return worst <= 1e-5, {"max_rel_error": worst}


@_timed(6, "hypercube inclusion")
def hypercube_inclusion():
    results = {N: gd.hypercube_inclusion_check(N, N**6, 3.0) for N in range(3, 9)}
    return all(results.values()), {f"N{N}": ok for N, ok in results.items()}


@_timed(7, "good-width recursion")
def goodness_recursion(N_max: int = 200):
    monotone = sandwich = True
    worst_res = 0.0
    for N in range(4, N_max + 1):
        t = gd.good_width_table(N)
        monotone &= bool(np.all(np.diff(t.sN) <= 0))
        sandwich &= bool(np.all(t.xs <= t.sN))
        res = [abs(gd.width_criterion(N - 2, t.sN[0]))]
        res += [abs(gd.refined_criterion(N, j, t.sN[j - 1], t.sN[j])) for j in range(1, N - 2)]
        worst_res = max(worst_res, max(res))
    decay = all(gd.check_decay_bound(N) for N in range(DECAY_THRESHOLD, 501))
    s3 = abs(gd.first_good_width(3) - math.pi / 3)
    ok = monotone and sandwich and worst_res <= 1e-10 and decay and s3 <= 1e-10
    return ok, {"monotone": monotone, "sandwich": sandwich, "max_residual": worst_res, "decay": decay, "s3_error": s3}


def identity_suite(seed: int = SEED_IDENTITIES, samples: int = 1000) -> dict:
    """Alternating sums, tail bounds and the sieve identities on random samples."""
    binom = all(
        pp.alternating_binomial(m, l) == (-1) ** l * math.comb(m - 1, l)
        for m in range(1, 61)
        for l in range(0, m + 1)
    )
    tail = True
    for lam in (0.5, 1.0, 2.0, 5.0):
        for x in range(math.floor(lam) + 1, 31):
            exact, bound = pp.poisson_tail_bound(lam, x)
            tail &= exact <= bound
    erf_ok = all(lhs < rhs for lhs, rhs in (erf_tail_inequality(c) for c in np.arange(0.5, 6.0001, 0.1)))
    sandwich = forms = True
    checked_forms = 0
    for t in range(samples):
        rng = rng_substream(seed, t)
        N = 1 + t % 3
        K = 6.0
        sample = pp.sample_process(K, N, rng)
        boxes = [tuple(sorted(rng.uniform(0, K, 2))) for _ in range(N)]
        sets = {(i, j): [tuple(sorted(rng.uniform(0, 3, 2)))] for i in range(1, N + 1) for j in range(i + 1, N + 1)}
        f = pp.BoxFunctionSpec(N, K, boxes, sets)
        target = pp.f_on_first(sample, N, f)
        for l in range(0, max(sample.count - N, 0) + 2):
            S = pp.sieve_S(sample, N, l, f)
            if l % 2 == 0:
                sandwich &= S >= target
            else:
                sandwich &= S <= target
            if l >= sample.count - N:
                sandwich &= S == target
        for l in range(0, 6 - N + 1):
            if sample.count <= 8:
                forms &= pp.sieve_R(sample, N, l, f) == pp.sieve_R_tuples(sample, N, l, f)
                checked_forms += 1
    return {
        "alternating_binomial": binom,
        "poisson_tail_bound": tail,
        "erf_tail_bound": erf_ok,
        "sieve_sandwich": sandwich,
        "sieve_forms_agree": forms,
        "sieve_form_checks": checked_forms,
    }


@_timed(8, "identity suite")
def identities():
    res = identity_suite()
    ok = all(v for k, v in res.items() if isinstance(v, bool))
    return ok, res


def oracle_case(t: int) -> tuple[int, int]:
    """(n, N) for oracle lattice number t: n cycles over 2..8, N over 1..6."""
    return 2 + t % 7, 1 + (t // 7) % 6


@_timed(9, "enumeration equals brute force")
def svp_oracle(count: int = 200):
    mismatches = 0
    for t in range(count):
        n, N = oracle_case(t)
        basis = ll.lll_reduce(ll.sample_lattice(n, PRIME, rng_substream(SEED_ORACLE, t)))
        sv = ll.shortest_vectors(basis, N)
        oracle, _ = ll.brute_force_shortest(basis, N, 6)
        mine = {tuple(v) for v in sv.int_vectors}
        theirs = {tuple(v) for v in oracle}
        mismatches += mine != theirs
    return mismatches == 0, {"lattices": count, "mismatches": mismatches}


@_timed(10, "angle concentration")
def concentration(trials: int = LATTICE_TRIALS):
    run = lattice_run(16, 3, trials, SEED_LENGTHS)
    worst = run.angles.max(axis=1)
    f4 = float(np.mean(worst <= 4.0))
    f6 = float(np.mean(worst <= 6.0))
    return f4 >= 0.9 and f6 >= f4, {"fraction_C4": f4, "fraction_C6": f6}


@_timed(11, "pair-count expectation")
def pair_counts(trials: int = LATTICE_TRIALS):
    counts = np.array(
        [ll.count_angle_pairs(ll.lll_reduce(ll.sample_lattice(12, PRIME, rng_substream(SEED_PAIRS, t))), 3.0) for t in range(trials)],
        dtype=float,
    )
    mean = float(counts.mean())
    se = float(counts.std(ddof=1) / math.sqrt(trials))
    target = ll.pair_count_expectation(12, 3.0)
    return abs(mean - target) <= 3 * se, {"mean": mean, "stderr": se, "expected": target}


CRITERIA = (
    exponential_lengths,
    half_normal_angles,
    box_expectation,
    sphere_ratio,
    jacobian_exactness,
    hypercube_inclusion,
    goodness_recursion,
    identities,
    svp_oracle,
    concentration,
    pair_counts,
)


def run_all(echo=print) -> list[CriterionResult]:
    results = []
    for check in CRITERIA:
        r = check()
        if echo:
            echo(r.line())
        results.append(r)
    return results
