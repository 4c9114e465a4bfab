"""Reconstruction from pointwise samples.

Two maps share the normalized measurement matrix ``A[i, l] = Psi_l(y_i)/sqrt(m)``:

* least squares over a fixed index set (anisotropy known), and
* weighted square-root LASSO over a hyperbolic cross (anisotropy unknown),
  solved with a primal-dual splitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .approx import CoeffField, basis_matrix
from .indices import IndexSet, hyperbolic_cross
from .jacobi import JacobiParams, intrinsic_weight, sample_points

__all__ = [
    "SampleSet",
    "MeasurementMatrix",
    "CSParams",
    "draw_samples",
    "assemble",
    "ls_budget",
    "reconstruct_ls",
    "cs_params",
    "hc_order_for_cap",
    "sr_lasso_objective",
    "reconstruct_cs",
    "clip_unit",
    "min_singular_value",
    "max_singular_value",
    "MATRIX_CAP",
]

MATRIX_CAP = 60_000_000


@dataclass(frozen=True)
class SampleSet:
    """``m`` points in ``[-1, 1]^d`` with ``R^K`` values."""

    points: np.ndarray
    values: np.ndarray
    seed: object = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if pts.shape[0] < 1:
            raise ValueError("need at least one sample")
        if vals.shape[0] != pts.shape[0]:
            raise ValueError("points and values disagree on m")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def K(self) -> int:
        return self.values.shape[1]


def draw_samples(
    f: Callable[[np.ndarray], np.ndarray],
    params: JacobiParams,
    d: int,
    m: int,
    rng: np.random.Generator,
    seed: object = None,
) -> SampleSet:
    """Draw ``m`` i.i.d. points from the tensor Jacobi measure and evaluate ``f``."""
    pts = sample_points(params, d, m, rng)
    return SampleSet(pts, np.asarray(f(pts), dtype=float), seed)


@dataclass(frozen=True)
class MeasurementMatrix:
    entries: np.ndarray
    column_index: IndexSet

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def assemble(points, S: IndexSet, params: JacobiParams, cap: int = MATRIX_CAP) -> MeasurementMatrix:
    """``A[i, l] = Psi_{S[l]}(y_i) / sqrt(m)`` with columns in the order of ``S``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    S = S if isinstance(S, IndexSet) else IndexSet(S)
    m = pts.shape[0]
    if m * len(S) > cap:
        raise MemoryError(f"measurement matrix {m} x {len(S)} exceeds cap {cap}")
    return MeasurementMatrix(basis_matrix(params, S, pts) / math.sqrt(m), S)


def ls_budget(m: int, epsilon: float, c: float = 1.0) -> float:
    """``k = m / (c log(m / epsilon))``."""
    if m < 3:
        raise ValueError("m must be >= 3")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if c < 1:
        raise ValueError("c must be >= 1")
    return m / (c * math.log(m / epsilon))


def _singular_values(A) -> np.ndarray:
    M = A.entries if isinstance(A, MeasurementMatrix) else np.asarray(A)
    if M.size == 0:
        return np.zeros(0)
    return scipy.linalg.svdvals(M)


def min_singular_value(A) -> float:
    """Smallest singular value of ``A`` as a map on ``R^N`` (zero when ``m < N``)."""
    M = A.entries if isinstance(A, MeasurementMatrix) else np.asarray(A)
    if M.shape[0] < M.shape[1]:
        return 0.0
    s = _singular_values(M)
    return float(s.min()) if s.size else 0.0


def max_singular_value(A) -> float:
    s = _singular_values(A)
    return float(s.max()) if s.size else 0.0


def _data(samples: SampleSet) -> np.ndarray:
    return samples.values / math.sqrt(samples.m)


def reconstruct_ls(samples: SampleSet, S: IndexSet, params: JacobiParams, rcond: float = 1e-10) -> CoeffField:
    """Minimum-norm least-squares coefficients on ``S``.

    Solves ``min ||A z - f / sqrt(m)||`` per codomain component through an
    SVD-based solve; singular values below ``rcond * sigma_max`` are treated
    as zero, so rank-deficient systems return the least-norm minimizer.
    Rank and extreme singular values are reported in ``meta``.
    """
    S = S if isinstance(S, IndexSet) else IndexSet(S)
    if len(S) == 0:
        raise ValueError("index set is empty")
    A = assemble(samples.points, S, params)
    z, _, rank, sv = scipy.linalg.lstsq(A.entries, _data(samples), cond=rcond, lapack_driver="gelsd")
    m, N = A.shape
    meta = {
        "method": "ls",
        "m": m,
        "N": N,
        "rank": int(rank),
        "sigma_max": float(sv.max()) if sv.size else 0.0,
        "sigma_min": float(sv.min()) if (sv.size and m >= N) else 0.0,
        "rank_deficient": bool(rank < N),
    }
    return CoeffField(S, np.asarray(z).reshape(N, samples.K), meta=meta)


@dataclass(frozen=True)
class CSParams:
    """Parameter rule for the square-root LASSO map.

    ``profile="theoretical"`` uses ``L = log(m)^4 g(m) + log(1/eps)``,
    ``k = m/(c L)`` and ``n = ceil(k**sqrt(g(m)))``.  ``profile="practical"``
    uses ``k = m/(c log m)`` and the largest hyperbolic-cross order whose set
    has at most ``N_max`` members.  Both use ``lambda = 3/(7 sqrt(k))``.
    """

    m: int
    epsilon: float
    c_univ: float
    g_choice: str
    profile: str
    k: float
    L: float
    n: int
    lam: float
    n_capped: bool
    n_uncapped: float
    max_dim: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "epsilon": self.epsilon,
            "c": self.c_univ,
            "g": self.g_choice,
            "profile": self.profile,
            "k": self.k,
            "L": self.L,
            "n": self.n,
            "lambda": self.lam,
            "n_capped": self.n_capped,
            "n_uncapped": self.n_uncapped,
            "max_dim": self.max_dim,
        }


_G = {
    "log": math.log,
    "one": lambda m: 1.0,
    "loglog": lambda m: max(1.0, math.log(math.log(m))),
}


def hc_order_for_cap(N_max: int, max_dim: int | None = None, n_limit: int = 4096) -> int:
    """Largest ``n <= n_limit`` with ``|HC(n)| <= N_max`` (supports within ``max_dim`` dims)."""
    if N_max < 1:
        raise ValueError("N_max must be >= 1")

    def fits(n: int) -> bool:
        try:
            return len(hyperbolic_cross(n, max_dim=max_dim, cap=N_max)) <= N_max
        except MemoryError:
            return False

    # |HC(n)| is nondecreasing in n: double, then bisect
    lo, hi = 1, 2
    while hi <= n_limit and fits(hi):
        lo, hi = hi, hi * 2
    hi = min(hi, n_limit + 1)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if fits(mid):
            lo = mid
        else:
            hi = mid
    return lo


def cs_params(
    m: int,
    epsilon: float = 0.1,
    c: float = 1.0,
    g: str = "log",
    profile: str = "theoretical",
    n_max: int = 64,
    N_max: int = 5000,
    max_dim: int | None = None,
) -> CSParams:
    """Evaluate the parameter rule for sample size ``m``."""
    if m < 3:
        raise ValueError("m must be >= 3")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if c < 1:
        raise ValueError("c must be >= 1")
    if g not in _G:
        raise ValueError(f"unknown g choice {g!r}; expected one of {sorted(_G)}")
    gm = _G[g](m)
    if gm < 1:
        raise ValueError("g(m) must be >= 1")
    if profile == "theoretical":
        L = math.log(m) ** 4 * gm + math.log(1.0 / epsilon)
        k = m / (c * L)
        n_raw = math.ceil(k ** math.sqrt(gm) - 1e-12)
        n_raw = max(int(n_raw), 1)
        capped = n_raw > n_max
        n = min(n_raw, n_max)
    elif profile == "practical":
        L = math.log(m)
        k = m / (c * L)
        n_raw = hc_order_for_cap(N_max, max_dim)
        capped = False
        n = n_raw
    else:
        raise ValueError(f"unknown profile {profile!r}")
    return CSParams(
        m=m, epsilon=epsilon, c_univ=c, g_choice=g, profile=profile, k=k, L=L, n=n,
        lam=3.0 / (7.0 * math.sqrt(k)), n_capped=bool(capped), n_uncapped=float(n_raw), max_dim=max_dim,
    )


def sr_lasso_objective(A: np.ndarray, z: np.ndarray, y: np.ndarray, u: np.ndarray, lam: float) -> float:
    """``lam * sum_nu u_nu ||z_nu|| + ||A z - y||_F``."""
    return float(lam * np.sum(u * np.linalg.norm(z, axis=1)) + np.linalg.norm(A @ z - y))


def _power_norm(A: np.ndarray, iters: int = 100, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(A.shape[1])
    x /= np.linalg.norm(x)
    val = 0.0
    for _ in range(iters):
        y = A.T @ (A @ x)
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return 0.0
        new = math.sqrt(nrm)
        x = y / nrm
        if abs(new - val) <= 1e-10 * new:
            val = new
            break
        val = new
    # small safety margin against the power-method underestimate
    return val * 1.01


def _group_shrink(v: np.ndarray, thresh: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(v, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        fac = np.where(nrm > thresh, 1.0 - thresh / np.where(nrm > 0, nrm, 1.0), 0.0)
    return v * fac[:, None]


def reconstruct_cs(
    samples: SampleSet,
    Lam: IndexSet,
    u,
    lam: float,
    params: JacobiParams,
    tol: float = 1e-8,
    max_iters: int = 50_000,
    check_every: int = 50,
    A: MeasurementMatrix | None = None,
    step_ratio: float | None = None,
) -> CoeffField:
    """Weighted square-root LASSO coefficients on ``Lam``.

    Approximately minimizes ``lam * sum u_nu ||z_nu|| + ||A z - f/sqrt(m)||``
    with the Chambolle-Pock primal-dual iteration, run in the rescaled
    variables ``x_nu = u_nu z_nu`` (matrix ``A diag(u)^-1``, unweighted group
    penalty).  The primal prox is group soft-thresholding; the dual prox is a
    projection onto the unit ball after a shift by the data.  Step sizes are
    ``tau = r/||B||`` and ``sigma = 1/(r ||B||)`` for the rescaled matrix
    ``B`` (power method estimate), so ``tau sigma ||B||^2 < 1``; the balance
    ``r`` defaults to the data norm ``||f/sqrt(m)||``, the natural scale of
    the primal solution against a dual variable in the unit ball.  Every
    ``check_every`` iterations the dual iterate is scaled into the feasible
    set ``max_nu ||(B^T q)_nu|| <= lam``, giving the lower bound
    ``-<q, f/sqrt(m)>`` on the optimum; the run stops once the relative gap
    between the best objective and the best lower bound is at most ``tol``,
    or at ``max_iters``.  The best-objective iterate is returned;
    diagnostics, including the final gap, are in ``meta``.

    Parameters
    ----------
    samples : SampleSet
    Lam : IndexSet
    u : array or None
        Weights aligned with ``Lam``; None uses the intrinsic weights.
    lam : float
        Regularization weight, must be positive.
    params : JacobiParams
    tol, max_iters, check_every
        Stopping rule.
    A : MeasurementMatrix, optional
        Pre-assembled matrix for ``samples.points`` and ``Lam``.
    step_ratio : float, optional
        Override for the primal/dual balance ``r``.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    Lam = Lam if isinstance(Lam, IndexSet) else IndexSet(Lam)
    if A is None:
        A = assemble(samples.points, Lam, params)
    M = A.entries
    m, N = M.shape
    w = np.array([intrinsic_weight(params, nu) for nu in Lam]) if u is None else np.asarray(u, dtype=float)
    if w.shape != (N,):
        raise ValueError("weights must align with the index set")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    y = _data(samples)
    K = y.shape[1]
    B = M / w[None, :]
    norm_B = _power_norm(B)
    x = np.zeros((N, K))
    Bx = np.zeros((m, K))
    q = np.zeros((m, K))
    ynorm = float(np.linalg.norm(y))
    best_obj, best_x, best_res = ynorm, x.copy(), ynorm
    if norm_B == 0 or ynorm == 0:
        meta = _cs_meta(m, N, lam, 0, best_obj, best_res, True, norm_B)
        return CoeffField(Lam, best_x, meta=meta)
    r = ynorm if step_ratio is None else float(step_ratio)
    tau, sigma = r / norm_B, 1.0 / (r * norm_B)
    thresh = np.full(N, tau * lam)
    Bxbar = Bx
    best_dual = 0.0
    gap = 1.0
    converged = False
    it = 0
    while it < max_iters:
        it += 1
        q = q + sigma * (Bxbar - y)
        qn = np.linalg.norm(q)
        if qn > 1.0:
            q /= qn
        Btq = B.T @ q
        x_new = _group_shrink(x - tau * Btq, thresh)
        Bx_new = B @ x_new
        Bxbar = 2.0 * Bx_new - Bx
        x, Bx = x_new, Bx_new
        res = float(np.linalg.norm(Bx - y))
        obj = lam * float(np.sum(np.linalg.norm(x, axis=1))) + res
        if obj < best_obj:
            best_obj, best_x, best_res = obj, x.copy(), res
        if it % check_every == 0:
            # Btq pairs with the q used in this step
            gmax = float(np.linalg.norm(Btq, axis=1).max())
            scale = 1.0 if gmax <= lam else lam / gmax
            best_dual = max(best_dual, -scale * float(np.sum(q * y)))
            gap = max(best_obj - best_dual, 0.0) / best_obj
            if gap <= tol:
                converged = True
                break
    meta = _cs_meta(m, N, lam, it, best_obj, best_res, converged, norm_B)
    meta["step_ratio"] = r
    meta["gap"] = float(gap)
    return CoeffField(Lam, best_x / w[:, None], meta=meta)


def _cs_meta(m, N, lam, iters, obj, res, converged, norm_A) -> dict:
    return {
        "method": "cs",
        "m": int(m),
        "N": int(N),
        "lambda": float(lam),
        "iters": int(iters),
        "objective": float(obj),
        "residual": float(res),
        "converged": bool(converged),
        "op_norm": float(norm_A),
    }


def clip_unit(c: CoeffField) -> CoeffField:
    """Scale by ``min(1, 1/||c||_2)``."""
    nrm = float(np.linalg.norm(c.values))
    if nrm <= 1.0:
        return c
    return CoeffField(c.index_set, c.values / nrm, meta=dict(c.meta, clipped=True))
