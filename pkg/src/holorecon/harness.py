"""Benchmark harness: Monte Carlo errors, convergence sweeps and sigma_min studies.

Every random draw comes from a stream keyed by ``(seed, label, m, trial)``,
so results do not depend on the order or concurrency of trials.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import stats

from .approx import CoeffField, basis_matrix, eval_expansion
from .bounds import Anisotropy, grow_known_candidates, select_set_known
from .indices import hyperbolic_cross
from .jacobi import JacobiParams, intrinsic_weight, sample_points
from .models import KINDS, HoloModel, make_model, normalize_to_class
from .recon import (
    SampleSet,
    assemble,
    clip_unit,
    cs_params,
    ls_budget,
    min_singular_value,
    reconstruct_cs,
    reconstruct_ls,
)

__all__ = [
    "CSV_HEADER",
    "CHERNOFF_HEADER",
    "STREAMS",
    "ConfigError",
    "ExperimentConfig",
    "ChernoffConfig",
    "ExperimentRecord",
    "stream_rng",
    "estimate_l2_error",
    "fit_rate",
    "build_problem",
    "run_trial",
    "run_convergence",
    "run_chernoff",
    "records_csv",
    "chernoff_csv",
]

CSV_HEADER = "schema=1,m,trial,method,l2_error,l2_stderr,sigma_min,k,n,lambda,wall_ms"
CHERNOFF_HEADER = "schema=1,budget,weighted_card,size,m,trials,count,frequency,bound,binom_stderr"
STREAMS = {"train": 1, "test": 2, "model": 3, "normalize": 4}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"field '{field_name}': {message}")
        self.field = field_name


def stream_rng(seed: int, label: str, m: int = 0, trial: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, label, m, trial)``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(STREAMS[label], int(m), int(trial))))


@dataclass
class ExperimentConfig:
    method: str = "ls"
    alpha: float = 0.0
    beta: float = 0.0
    tau: float | None = None
    b: dict = field(default_factory=lambda: {"kind": "algebraic", "rate": 2.0, "scale": 1.0, "d": 15, "p": 0.51})
    model: dict = field(default_factory=lambda: {"kind": "reciprocal-affine", "c": 1.0, "margin": 0.1})
    K: int = 1
    m_grid: list = field(default_factory=lambda: [100, 200, 400, 800, 1600, 3200])
    trials: int = 20
    profile: str = "practical"
    seed: int = 0
    epsilon: float = 0.1
    c_ls: float = 1.0
    c_cs: float = 1.0
    M_test: int = 2000
    n: int | None = None
    N_max: int = 5000
    tol: float = 1e-6
    max_iters: int = 5000
    clip: bool = False
    n_boundary_samples: int = 2000
    max_failure_frac: float = 0.1
    record_timing: bool = False
    threads: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown field")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        if self.method not in ("ls", "cs"):
            raise ConfigError("method", "must be 'ls' or 'cs'")
        if self.profile not in ("practical", "theoretical"):
            raise ConfigError("profile", "must be 'practical' or 'theoretical'")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= -1:
                raise ConfigError(name, "must be a number > -1")
        try:
            self.params()
        except ValueError as exc:
            raise ConfigError("tau", str(exc)) from None
        if not isinstance(self.m_grid, list) or not self.m_grid:
            raise ConfigError("m_grid", "must be a nonempty list of integers")
        for m in self.m_grid:
            if isinstance(m, bool) or not isinstance(m, int) or m < 3:
                raise ConfigError("m_grid", f"entry {m!r} must be an integer >= 3")
        _int_at_least(self, "trials", 1)
        _int_at_least(self, "K", 1)
        _int_at_least(self, "M_test", 1000)
        _int_at_least(self, "N_max", 1)
        _int_at_least(self, "max_iters", 1)
        _int_at_least(self, "threads", 1)
        _int_at_least(self, "n_boundary_samples", 1)
        if self.n is not None:
            _int_at_least(self, "n", 1)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", "must be a nonnegative integer")
        if not 0 < float(self.epsilon) < 1:
            raise ConfigError("epsilon", "must lie in (0, 1)")
        for name in ("c_ls", "c_cs"):
            if float(getattr(self, name)) < 1:
                raise ConfigError(name, "must be >= 1")
        if not 0 <= float(self.max_failure_frac) <= 1:
            raise ConfigError("max_failure_frac", "must lie in [0, 1]")
        if not isinstance(self.b, dict):
            raise ConfigError("b", "must be an object")
        try:
            self.anisotropy()
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("b", str(exc)) from None
        if not isinstance(self.model, dict) or self.model.get("kind", "reciprocal-affine") not in KINDS:
            raise ConfigError("model", f"kind must be one of {KINDS}")

    def params(self) -> JacobiParams:
        return JacobiParams.uniform(float(self.alpha), float(self.beta), self.tau)

    def anisotropy(self) -> Anisotropy:
        opts = dict(self.b)
        kind = opts.pop("kind", "algebraic")
        if kind == "algebraic":
            return Anisotropy.algebraic(int(opts.get("d", 15)), float(opts.get("rate", 2.0)),
                                        float(opts.get("scale", 1.0)), float(opts.get("p", 0.51)))
        if kind == "explicit":
            return Anisotropy(tuple(float(x) for x in opts["values"]), float(opts.get("p", 0.5)))
        raise ValueError(f"unknown b kind {kind!r}")

    def dim(self) -> int:
        return max(len(self.anisotropy()), 1)


def _int_at_least(cfg, name: str, lo: int) -> None:
    v = getattr(cfg, name)
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError(name, f"must be an integer >= {lo}")


@dataclass(frozen=True)
class ExperimentRecord:
    m: int
    trial: int
    method: str
    l2_error: float
    l2_stderr: float
    sigma_min: float
    k: float
    n: int
    lam: float
    wall_ms: float
    sup_sampled_error: float = 0.0
    diagnostics: dict = field(default_factory=dict, compare=False)

    def row(self) -> list[str]:
        return [
            "1", str(self.m), str(self.trial), self.method, repr(self.l2_error), repr(self.l2_stderr),
            repr(self.sigma_min), repr(self.k), str(self.n), repr(self.lam), repr(self.wall_ms),
        ]

    def finite(self) -> bool:
        vals = (self.l2_error, self.l2_stderr, self.sigma_min, self.k, self.lam, self.wall_ms, self.sup_sampled_error)
        return all(math.isfinite(v) for v in vals)


def estimate_l2_error(f, f_hat: CoeffField, params: JacobiParams, M_test: int, rng: np.random.Generator,
                      d: int | None = None) -> tuple[float, float, float]:
    """Monte Carlo ``L^2`` error on fresh points.

    Returns ``(error, stderr, sup_sampled)``: the root mean squared error, its
    delta-method standard error, and the largest sampled pointwise error.
    """
    if M_test < 1000:
        raise ValueError("M_test must be >= 1000")
    d = max(f_hat.index_set.max_dim, 1) if d is None else int(d)
    Z = sample_points(params, d, M_test, rng)
    diff = np.asarray(f(Z), dtype=float).reshape(M_test, -1) - eval_expansion(f_hat, params, Z)
    sq = np.sum(diff * diff, axis=1)
    mean = float(sq.mean())
    err = math.sqrt(mean)
    se = float(sq.std(ddof=1) / math.sqrt(M_test) / (2 * err)) if err > 0 else 0.0
    return err, se, float(np.sqrt(sq.max()))


def fit_rate(ms, errors, regressor: str = "m/log m", level: float = 0.95) -> dict:
    """Least-squares fit of ``log(error)`` against a log regressor of ``m``.

    ``regressor`` is ``"m/log m"``, ``"m/log^5 m"`` or ``"m"``.  Returns the
    slope, intercept, standard error and a t-based confidence interval.
    """
    ms = np.asarray(ms, dtype=float)
    errs = np.asarray(errors, dtype=float)
    keep = errs > 0
    ms, errs = ms[keep], errs[keep]
    if regressor == "m/log m":
        x = np.log(ms / np.log(ms))
    elif regressor == "m/log^5 m":
        x = np.log(ms / np.log(ms) ** 5)
    elif regressor == "m":
        x = np.log(ms)
    else:
        raise ValueError(f"unknown regressor {regressor!r}")
    y = np.log(errs)
    if len(np.unique(x)) < 2:
        return {"regressor": regressor, "slope": float("nan"), "intercept": float("nan"), "stderr": float("nan"),
                "ci": [float("nan"), float("nan")], "points": int(len(x))}
    res = stats.linregress(x, y)
    dof = len(x) - 2
    half = float(stats.t.ppf(0.5 + level / 2, dof) * res.stderr) if dof > 0 else float("inf")
    return {
        "regressor": regressor,
        "slope": float(res.slope),
        "intercept": float(res.intercept),
        "stderr": float(res.stderr),
        "ci": [float(res.slope - half), float(res.slope + half)],
        "level": level,
        "points": int(len(x)),
    }


@dataclass
class Problem:
    """Everything a trial needs that does not depend on the trial."""

    config: ExperimentConfig
    params: JacobiParams
    b: Anisotropy
    model: HoloModel
    d: int
    sets: dict = field(default_factory=dict)


def build_problem(config: ExperimentConfig) -> Problem:
    params = config.params()
    b = config.anisotropy()
    d = config.dim()
    opts = dict(config.model)
    kind = opts.pop("kind", "reciprocal-affine")
    rng = stream_rng(config.seed, "model") if config.K > 1 else None
    if b.l1 > 0:
        raw = make_model(kind, b, rng=rng, K=config.K, c=float(opts.get("c", 1.0)),
                         margin=float(opts.get("margin", 0.1)), d=d)
        model = normalize_to_class(raw, b, config.n_boundary_samples, stream_rng(config.seed, "normalize"))
    else:
        # b = 0: the class is the constants; use f = 1/1.05
        model = HoloModel("exponential-affine", np.zeros((config.K, d)), np.zeros(config.K),
                          np.full(config.K, 1 / 1.05), meta={"normalized": True, "constant": True})
    prob = Problem(config, params, b, model, d)
    if config.method == "ls":
        ks = {m: ls_budget(m, config.epsilon, config.c_ls) for m in config.m_grid}
        if b.l1 > 0:
            cands, table = grow_known_candidates(b, params, max(ks.values()), max_dim=d)
            for m, k in ks.items():
                prob.sets[m] = (k, select_set_known(b, params, k, cands, table), None)
        else:
            from .indices import IndexSet, MultiIndex
            for m, k in ks.items():
                prob.sets[m] = (k, IndexSet([MultiIndex.zero()]), None)
    else:
        cache = {}
        for m in config.m_grid:
            rule = cs_params(m, config.epsilon, config.c_cs, profile=config.profile, N_max=config.N_max,
                             max_dim=d)
            n = rule.n if config.n is None else config.n
            if n not in cache:
                H = hyperbolic_cross(n, max_dim=min(n, d))
                cache[n] = (H, np.array([intrinsic_weight(params, nu) for nu in H]))
            prob.sets[m] = (rule.k, cache[n][0], {"rule": rule, "n": n, "u": cache[n][1]})
    return prob


def run_trial(prob: Problem, m: int, trial: int) -> ExperimentRecord:
    cfg = prob.config
    t0 = time.perf_counter()
    rng = stream_rng(cfg.seed, "train", m, trial)
    pts = sample_points(prob.params, prob.d, m, rng)
    samples = SampleSet(pts, prob.model(pts), seed=(cfg.seed, "train", m, trial))
    k, S, extra = prob.sets[m]
    if cfg.method == "ls":
        coef = reconstruct_ls(samples, S, prob.params)
        sigma_min, n, lam = coef.meta["sigma_min"], len(S), 0.0
    else:
        rule = extra["rule"]
        A = assemble(samples.points, S, prob.params)
        coef = reconstruct_cs(samples, S, extra["u"], rule.lam, prob.params, tol=cfg.tol, max_iters=cfg.max_iters,
                              A=A)
        sigma_min = min_singular_value(A)
        n, lam = extra["n"], rule.lam
        if cfg.clip:
            coef = clip_unit(coef)
    err, se, sup = estimate_l2_error(prob.model, coef, prob.params, cfg.M_test,
                                     stream_rng(cfg.seed, "test", m, trial), d=prob.d)
    wall = (time.perf_counter() - t0) * 1e3
    return ExperimentRecord(m, trial, cfg.method, err, se, float(sigma_min), float(k), int(n), float(lam),
                            float(wall), sup, diagnostics=dict(coef.meta))


def _run_all(jobs, fn, threads: int):
    def safe(job):
        try:
            return job, fn(*job), None
        except Exception as exc:  # per-trial failures are recorded, not fatal
            return job, None, f"{type(exc).__name__}: {exc}"

    if threads <= 1:
        return [safe(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(safe, jobs))


def run_convergence(config: ExperimentConfig) -> tuple[list[ExperimentRecord], dict]:
    """Sweep the ``m`` grid; returns sorted records and a summary.

    The summary holds per-``m`` error statistics and rate fits of
    ``log(error)`` against ``log(m/log m)`` (LS and practical CS) or
    ``log(m/log^5 m)`` (theoretical CS), plus the plain ``log m`` fit.
    """
    prob = build_problem(config)
    jobs = [(m, t) for m in config.m_grid for t in range(config.trials)]
    results = _run_all(jobs, lambda m, t: run_trial(prob, m, t), config.threads)
    records, failures = [], []
    for (m, t), rec, err in results:
        if rec is not None and not rec.finite():
            rec, err = None, "non-finite value in record"
        if rec is None:
            failures.append({"m": m, "trial": t, "error": err})
        else:
            records.append(rec)
    records.sort(key=lambda r: (r.m, r.trial))
    failures.sort(key=lambda f: (f["m"], f["trial"]))
    regressor = "m/log^5 m" if (config.method == "cs" and config.profile == "theoretical") else "m/log m"
    per_m = []
    for m in config.m_grid:
        errs = np.array([r.l2_error for r in records if r.m == m])
        if errs.size == 0:
            continue
        first = next(r for r in records if r.m == m)
        per_m.append({
            "m": m,
            "trials": int(errs.size),
            "median": float(np.median(errs)),
            "mean": float(errs.mean()),
            "geomean": float(np.exp(np.mean(np.log(errs)))) if np.all(errs > 0) else 0.0,
            "max_sup_sampled_error": float(max(r.sup_sampled_error for r in records if r.m == m)),
            "k": first.k,
            "n": first.n,
            "lambda": first.lam,
        })
    ms = [r.m for r in records]
    errs = [r.l2_error for r in records]
    summary = {
        "method": config.method,
        "profile": config.profile,
        "fit": fit_rate(ms, errs, regressor) if records else None,
        "fit_median": fit_rate([p["m"] for p in per_m], [p["median"] for p in per_m], regressor) if per_m else None,
        "fit_log_m": fit_rate(ms, errs, "m") if records else None,
        "per_m": per_m,
        "failures": failures,
        "failure_frac": len(failures) / max(len(jobs), 1),
        "non_finite": any("non-finite" in f["error"] for f in failures),
        "model": prob.model.to_dict(),
        "note": "errors are for sampled model functions, a lower bound on the class supremum",
    }
    return records, summary


def records_csv(records, timing: bool = False) -> str:
    """Records in schema v1; ``wall_ms`` is written as 0 unless ``timing``."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    for r in records:
        row = r.row()
        if not timing:
            row[-1] = "0"
        w.writerow(row)
    return buf.getvalue()


@dataclass
class ChernoffConfig:
    alpha: float = 0.0
    beta: float = 0.0
    tau: float | None = None
    b: dict = field(default_factory=lambda: {"kind": "algebraic", "rate": 2.0, "scale": 1.0, "d": 15, "p": 0.51})
    budgets: list = field(default_factory=lambda: [4, 8, 16])
    m_grid: list | None = None
    c: float = 10.0
    epsilon: float = 0.1
    trials: int = 500
    seed: int = 0
    threads: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "ChernoffConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown field")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        if not isinstance(self.budgets, list) or not self.budgets:
            raise ConfigError("budgets", "must be a nonempty list")
        for k in self.budgets:
            if isinstance(k, bool) or not isinstance(k, (int, float)) or k < 1:
                raise ConfigError("budgets", f"entry {k!r} must be a number >= 1")
        if self.m_grid is not None:
            if not isinstance(self.m_grid, list) or not self.m_grid:
                raise ConfigError("m_grid", "must be null or a nonempty list")
            for m in self.m_grid:
                if isinstance(m, bool) or not isinstance(m, int) or m < 1:
                    raise ConfigError("m_grid", f"entry {m!r} must be a positive integer")
        _int_at_least(self, "trials", 1)
        _int_at_least(self, "threads", 1)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", "must be a nonnegative integer")
        if not 0 < float(self.epsilon) < 1:
            raise ConfigError("epsilon", "must lie in (0, 1)")
        if float(self.c) <= 0:
            raise ConfigError("c", "must be positive")
        try:
            self.params()
        except ValueError as exc:
            raise ConfigError("tau", str(exc)) from None
        try:
            ExperimentConfig.anisotropy(self)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("b", str(exc)) from None

    def params(self) -> JacobiParams:
        return JacobiParams.uniform(float(self.alpha), float(self.beta), self.tau)


def run_chernoff(config: ChernoffConfig) -> list[dict]:
    """Empirical ``P(sigma_min(A) <= 1/2)`` against ``k exp(-0.4 m / k)``.

    For each budget the set is ``select_set_known`` and ``k`` is its realized
    weighted cardinality.  Without an explicit ``m_grid`` the sample size is
    ``ceil(c k log(k / epsilon))``.
    """
    params = config.params()
    b = ExperimentConfig.anisotropy(config)
    d = max(len(b), 1)
    cands, table = grow_known_candidates(b, params, max(config.budgets), max_dim=d)
    rows = []
    for bi, budget in enumerate(config.budgets):
        S = select_set_known(b, params, budget, cands, table)
        ku = float(sum(intrinsic_weight(params, nu) ** 2 for nu in S))
        grid = config.m_grid or [int(math.ceil(config.c * ku * math.log(ku / config.epsilon)))]
        for m in grid:
            def one(t, m=m, S=S, bi=bi):
                rng = stream_rng(config.seed, "train", m, bi * 1_000_000 + t)
                A = assemble(sample_points(params, d, m, rng), S, params)
                return min_singular_value(A)

            res = _run_all([(t,) for t in range(config.trials)], one, config.threads)
            sig = np.array([r for _, r, e in res if r is not None])
            count = int(np.sum(sig <= 0.5))
            freq = count / max(sig.size, 1)
            rows.append({
                "budget": float(budget),
                "weighted_card": ku,
                "size": len(S),
                "m": int(m),
                "trials": int(sig.size),
                "count": count,
                "frequency": freq,
                "bound": ku * math.exp(-0.4 * m / ku),
                "binom_stderr": math.sqrt(max(freq * (1 - freq), 0.0) / max(sig.size, 1)),
            })
    return rows


def chernoff_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(CHERNOFF_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(["1", repr(r["budget"]), repr(r["weighted_card"]), r["size"], r["m"], r["trials"], r["count"],
                    repr(r["frequency"]), repr(r["bound"]), repr(r["binom_stderr"])])
    return buf.getvalue()
