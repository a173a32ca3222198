"""Experiment configuration, trial execution and result files."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import goodness as gd
from . import lattice_lab as ll
from . import point_process as pp
from . import sphere_mc as sm
from .errors import ConfigError
from .rng import rng_substream
from .stats import ks_distance

log = logging.getLogger(__name__)

EXPERIMENTS = ("sample-lattices", "sphere-mc", "goodness", "reference", "identities", "theorem1")

DEFAULTS = {
    "sample-lattices": dict(n=16, N=1, trials=2000, prime=ll.DEFAULT_PRIME, seed=1),
    "sphere-mc": dict(N=4, n=2500, trials=100_000, box_lo=-1.0, box_hi=1.0, seed=1),
    "goodness": dict(N_min=3, N_max=30),
    "reference": dict(N=2, K=2.0, trials=10_000, seed=1, phi_max=None),
    "identities": dict(seed=1, samples=1000),
    "theorem1": dict(n=16, N=2, trials=2000, prime=ll.DEFAULT_PRIME, seed=1, t_hi=[1.0, 2.0], phi_max=1.0),
}
COMMON = dict(delta=ll.DEFAULT_DELTA, node_budget=ll.DEFAULT_NODE_BUDGET, workers=1, out=None)
EXTRA_KEYS = {"goodness": {"N"}, "reference": {"t_hi"}}


class RegimeWarning(UserWarning):
    pass


def regime_violated(N: int, n: int) -> bool:
    """True when N^6 > n, outside the regime N = o(n^{1/6})."""
    return N**6 > n


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        allowed = set(DEFAULTS[self.experiment]) | set(COMMON) | EXTRA_KEYS.get(self.experiment, set())
        unknown = set(self.params) - allowed
        if unknown:
            raise ConfigError(f"unknown keys for {self.experiment}: {', '.join(sorted(unknown))}")
        merged = dict(DEFAULTS[self.experiment])
        merged.update({k: v for k, v in self.params.items() if v is not None or k not in merged})
        self.out = merged.pop("out", None) or self.out
        workers = merged.pop("workers", None)
        self.workers = int(self.workers if workers is None else workers)
        for k, v in COMMON.items():
            if k not in ("workers", "out"):
                merged.setdefault(k, v)
        self.params = merged
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if "seed" in DEFAULTS[self.experiment] and self.params.get("seed") is None:
            raise ConfigError("a seed is required")
        for key in ("n", "N", "trials"):
            if key in self.params and int(self.params[key]) < 1:
                raise ConfigError(f"{key} must be positive")

    def __getitem__(self, key):
        return self.params[key]


@dataclass
class ResultRow:
    experiment: str
    trial: int
    values: dict
    substream: tuple

    def columns(self) -> list[str]:
        return ["trial", *self.values.keys()]

    def cells(self) -> list:
        return [self.trial, *self.values.values()]


def parse_value(text: str):
    text = text.strip()
    if "," in text:
        return [parse_value(t) for t in text.split(",") if t.strip()]
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    if low == "none":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_config_text(text: str) -> dict:
    """key=value lines; '#' starts a comment; dashes in keys become underscores."""
    params = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        params[key.strip().replace("-", "_")] = parse_value(value)
    return params


def load_config(path: str | Path) -> dict:
    try:
        return parse_config_text(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def fmt(x) -> str:
    """17 significant digits for reals, plain text otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def rows_to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


# ---- lattice trials ---------------------------------------------------------


def lattice_trial(n: int, N: int, prime: int, seed: int, trial: int, delta: float, node_budget: int) -> ll.ShortVectors:
    basis = ll.lll_reduce(ll.sample_lattice(n, prime, rng_substream(seed, trial)), delta)
    return ll.shortest_vectors(basis, N, node_budget)


def _lattice_chunk(args):
    n, N, prime, seed, trials, delta, node_budget = args
    out = []
    for t in trials:
        sv = lattice_trial(n, N, prime, seed, t, delta, node_budget)
        out.append((t, sv.volumes, sv.angles, sv.tie_flag))
    return out


@dataclass
class LatticeRun:
    n: int
    N: int
    volumes: np.ndarray  # trials x N
    angles: np.ndarray  # trials x b
    ties: np.ndarray  # trials

    @property
    def trials(self) -> int:
        return self.volumes.shape[0]


def run_lattice_trials(n, N, trials, prime, seed, delta=ll.DEFAULT_DELTA, node_budget=ll.DEFAULT_NODE_BUDGET, workers=1) -> LatticeRun:
    """All trials of one lattice configuration, merged by trial index."""
    idx = list(range(trials))
    if workers > 1:
        chunks = [idx[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_lattice_chunk, [(n, N, prime, seed, c, delta, node_budget) for c in chunks]))
        results = sorted((r for part in parts for r in part), key=lambda r: r[0])
    else:
        results = _lattice_chunk((n, N, prime, seed, idx, delta, node_budget))
    b = N * (N - 1) // 2
    vols = np.array([r[1] for r in results]).reshape(trials, N)
    angs = np.array([r[2] for r in results]).reshape(trials, b)
    ties = np.array([r[3] for r in results], dtype=bool)
    return LatticeRun(n, N, vols, angs, ties)


def lattice_rows(experiment: str, run: LatticeRun, seed: int) -> list[ResultRow]:
    """One row per trial: V_1..V_N, phitilde_ij row-major, tie_flag."""
    N = run.N
    pairs = [f"phitilde_{i}{j}" for i in range(1, N + 1) for j in range(i + 1, N + 1)]
    rows = []
    for t in range(run.trials):
        values = {f"V_{j + 1}": run.volumes[t, j] for j in range(N)}
        values.update(zip(pairs, run.angles[t]))
        values["tie_flag"] = bool(run.ties[t])
        rows.append(ResultRow(experiment, t, values, (seed, t)))
    return rows


def _warn_regime(N, n) -> bool:
    if regime_violated(N, n):
        warnings.warn(f"N={N}, n={n}: N^6 > n, outside the regime N = o(n^(1/6))", RegimeWarning, stacklevel=3)
        return True
    return False


# ---- experiments ------------------------------------------------------------


def _sample_lattices(cfg: ExperimentConfig):
    p = cfg.params
    n, N = int(p["n"]), int(p["N"])
    run = run_lattice_trials(n, N, int(p["trials"]), int(p["prime"]), int(p["seed"]), float(p["delta"]), int(p["node_budget"]), cfg.workers)
    result_rows = lattice_rows(cfg.experiment, run, int(p["seed"]))
    header = result_rows[0].columns()
    rows = [r.cells() for r in result_rows]
    summary = {
        "experiment": cfg.experiment,
        "params": cfg.params,
        "mean_volumes": run.volumes.mean(axis=0).tolist(),
        "ks_V1_exponential_mean2": ks_distance(run.volumes[:, 0], "exponential", mean=2.0),
        "tie_fraction": float(run.ties.mean()),
        "regime_warning": _warn_regime(N, n),
    }
    if N >= 2:
        summary["ks_phitilde_half_normal"] = ks_distance(run.angles.ravel(), "half_normal")
    return header, rows, summary


def _sphere_mc(cfg: ExperimentConfig):
    p = cfg.params
    c = sm.SphereExperimentConfig(int(p["N"]), int(p["n"]), [float(p["box_lo"]), float(p["box_hi"])], int(p["trials"]), int(p["seed"]))
    report = sm.ratio_experiment(c).as_dict()
    report.update(experiment=cfg.experiment, params=cfg.params)
    return None, None, report


def goodness_rows(N_values) -> list[list]:
    rows = []
    for N in N_values:
        table = gd.good_width_table(N)
        decay = gd.check_decay_bound(N) if N >= 4 else None
        for j, s in enumerate(table.sN):
            x = table.xs[j] if table.xs is not None else math.nan
            rows.append([N, j, s, x, "" if decay is None else decay])
    return rows


def _goodness(cfg: ExperimentConfig):
    p = cfg.params
    if "N" in p:
        Ns = [int(p["N"])]
    else:
        Ns = range(int(p["N_min"]), int(p["N_max"]) + 1)
    rows = goodness_rows(Ns)
    summary = {
        "experiment": cfg.experiment,
        "params": cfg.params,
        "rows": len(rows),
        "sin_bound_threshold": gd.scan_threshold(gd.sin_lower_bound_check),
        "decay_threshold": gd.scan_threshold(gd.check_decay_bound),
    }
    return ["N", "j", "sNj", "xj", "decay_ok"], rows, summary


def _angle_sets(N: int, phi_max: float) -> dict:
    return {(i, j): [(0.0, phi_max)] for i in range(1, N + 1) for j in range(i + 1, N + 1)}


def _reference(cfg: ExperimentConfig):
    p = cfg.params
    N, K, seed = int(p["N"]), float(p["K"]), int(p["seed"])
    t_hi = p.get("t_hi", [K] * N)
    t_hi = t_hi if isinstance(t_hi, list) else [t_hi] * N
    phi_max = math.inf if p["phi_max"] is None else float(p["phi_max"])
    f = pp.BoxFunctionSpec(N, K, [(0.0, float(h)) for h in t_hi], _angle_sets(N, phi_max))
    est, se, cf = pp.reference_expectation(f, int(p["trials"]), lambda t: rng_substream(seed, t))
    return None, None, {"estimate": est, "stderr": se, "closed_form": cf, "params": cfg.params, "experiment": cfg.experiment}


def _identities(cfg: ExperimentConfig):
    from .acceptance import identity_suite

    res = identity_suite(seed=int(cfg.params["seed"]), samples=int(cfg.params["samples"]))
    res.update(experiment=cfg.experiment, params=cfg.params)
    return None, None, res


def theorem1_estimate(run: LatticeRun, t_hi, phi_max: float) -> tuple[float, float]:
    """Lattice mean of I(V_k <= t_hi[k]) I(phi~_ij <= phi_max) and its standard error."""
    ok = np.all(run.volumes <= np.asarray(t_hi, dtype=float), axis=1)
    if run.angles.shape[1]:
        ok &= np.all(run.angles <= phi_max, axis=1)
    vals = ok.astype(float)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size))


def _theorem1(cfg: ExperimentConfig):
    p = cfg.params
    n, N = int(p["n"]), int(p["N"])
    t_hi = p["t_hi"] if isinstance(p["t_hi"], list) else [p["t_hi"]] * N
    if len(t_hi) != N:
        raise ConfigError(f"t_hi needs {N} entries")
    phi_max = float(p["phi_max"])
    run = run_lattice_trials(n, N, int(p["trials"]), int(p["prime"]), int(p["seed"]), float(p["delta"]), int(p["node_budget"]), cfg.workers)
    est, se = theorem1_estimate(run, t_hi, phi_max)
    K = max(max(t_hi), phi_max if math.isfinite(phi_max) else 0.0)
    f = pp.BoxFunctionSpec(N, K, [(0.0, float(h)) for h in t_hi], _angle_sets(N, phi_max))
    cf = pp.closed_form_expectation(f)
    z = (est - cf) / se if se > 0 else math.inf
    summary = {
        "experiment": cfg.experiment,
        "params": cfg.params,
        "lattice_estimate": est,
        "lattice_stderr": se,
        "reference_closed_form": cf,
        "z_score": z,
        "tolerance": max(3 * se, 0.05),
        "within_tolerance": bool(abs(est - cf) <= max(3 * se, 0.05)),
        "tie_fraction": float(run.ties.mean()),
        "regime_warning": _warn_regime(N, n),
    }
    header = ["trial"] + [f"V_{j}" for j in range(1, N + 1)] + [f"phitilde_{i}{j}" for i in range(1, N + 1) for j in range(i + 1, N + 1)]
    rows = [[t, *run.volumes[t], *run.angles[t]] for t in range(run.trials)]
    return header, rows, summary


_RUNNERS = {
    "sample-lattices": _sample_lattices,
    "sphere-mc": _sphere_mc,
    "goodness": _goodness,
    "reference": _reference,
    "identities": _identities,
    "theorem1": _theorem1,
}


@dataclass
class ExperimentResult:
    summary: dict
    csv_text: str | None = None


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run one experiment; write CSV rows to config.out and the summary next to it as JSON."""
    log.info("running %s with %s (workers=%d)", config.experiment, config.params, config.workers)
    header, rows, summary = _RUNNERS[config.experiment](config)
    csv_text = rows_to_csv(header, rows) if header is not None else None
    if config.out:
        out = Path(config.out)
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            if csv_text is not None:
                out.write_text(csv_text, encoding="utf-8")
                out.with_suffix(".json").write_text(to_json(summary) + "\n", encoding="utf-8")
            else:
                out.write_text(to_json(summary) + "\n", encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot write {out}: {exc}") from exc
        log.info("wrote %s", out)
    return ExperimentResult(summary, csv_text)
