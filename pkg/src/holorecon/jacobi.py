"""Univariate and tensor-product Jacobi polynomials.

All polynomials here are orthonormal with respect to the *probability*
measure proportional to ``(1 - y)**alpha * (1 + y)**beta`` on ``[-1, 1]``,
unless the function name says ``classical``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .indices import MultiIndex

__all__ = [
    "JacobiParams",
    "QuadRule",
    "norm_const",
    "log_norm_const",
    "eval_classical",
    "eval_orthonormal",
    "orthonormal_table",
    "eval_tensor",
    "sup_norm",
    "sup_norm_growth",
    "intrinsic_weight",
    "sample_points",
    "gauss_jacobi_rule",
]


def _check_ab(alpha: float, beta: float) -> None:
    if not (alpha > -1.0 and beta > -1.0):
        raise ValueError(f"Jacobi parameters must exceed -1, got alpha={alpha}, beta={beta}")


def _check_degree(nu: int) -> int:
    if int(nu) != nu or nu < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {nu!r}")
    return int(nu)


@dataclass(frozen=True)
class JacobiParams:
    """Per-dimension Jacobi parameters with a constant tail.

    ``alpha[j - 1]`` is used for dimension ``j`` (dimensions are 1-based);
    dimensions past the stored prefix use ``alpha_tail`` / ``beta_tail``.
    ``tau`` is the uniform bound with ``tau - 1 <= alpha_j, beta_j <= 1/tau``.
    When omitted it is set to the largest admissible value.
    """

    alpha: tuple[float, ...] = ()
    beta: tuple[float, ...] = ()
    alpha_tail: float = 0.0
    beta_tail: float = 0.0
    tau: float | None = None

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        beta = tuple(float(b) for b in self.beta)
        if len(alpha) != len(beta):
            n = max(len(alpha), len(beta))
            alpha = alpha + (float(self.alpha_tail),) * (n - len(alpha))
            beta = beta + (float(self.beta_tail),) * (n - len(beta))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        values = alpha + beta + (float(self.alpha_tail), float(self.beta_tail))
        lo, hi = min(values), max(values)
        if lo <= -1.0:
            raise ValueError(f"Jacobi parameters must exceed -1, got {lo}")
        tau = self.tau
        if tau is None:
            tau = 1.0 + lo
            if hi > 0:
                tau = min(tau, 1.0 / hi)
        tau = float(tau)
        if tau <= 0:
            raise ValueError("tau must be positive")
        tol = 1e-12
        if lo < tau - 1.0 - tol or hi > 1.0 / tau + tol:
            raise ValueError(
                f"parameters in [{lo}, {hi}] violate tau - 1 <= alpha, beta <= 1/tau for tau={tau}"
            )
        object.__setattr__(self, "tau", tau)

    @classmethod
    def uniform(cls, alpha: float, beta: float, tau: float | None = None) -> "JacobiParams":
        return cls((), (), alpha, beta, tau)

    @classmethod
    def legendre(cls) -> "JacobiParams":
        return cls.uniform(0.0, 0.0)

    @classmethod
    def chebyshev(cls) -> "JacobiParams":
        return cls.uniform(-0.5, -0.5)

    def ab(self, j: int) -> tuple[float, float]:
        """(alpha_j, beta_j) for the 1-based dimension ``j``."""
        if j < 1:
            raise ValueError("dimensions are 1-based")
        if j <= len(self.alpha):
            return self.alpha[j - 1], self.beta[j - 1]
        return self.alpha_tail, self.beta_tail

    @property
    def is_uniform(self) -> bool:
        return all(a == self.alpha_tail for a in self.alpha) and all(
            b == self.beta_tail for b in self.beta
        )

    def to_dict(self) -> dict:
        return {
            "alpha": list(self.alpha),
            "beta": list(self.beta),
            "alpha_tail": self.alpha_tail,
            "beta_tail": self.beta_tail,
            "tau": self.tau,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JacobiParams":
        return cls(
            tuple(d.get("alpha", ())),
            tuple(d.get("beta", ())),
            d.get("alpha_tail", 0.0),
            d.get("beta_tail", 0.0),
            d.get("tau"),
        )


@dataclass(frozen=True)
class QuadRule:
    """Quadrature rule normalized to a probability measure."""

    nodes: np.ndarray
    weights: np.ndarray
    alpha: float = field(default=0.0)
    beta: float = field(default=0.0)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def log_norm_const(alpha: float, beta: float, nu: int) -> float:
    """Logarithm of ``h_nu``, the squared L2 norm of the classical polynomial
    against the unnormalized weight."""
    _check_ab(alpha, beta)
    nu = _check_degree(nu)
    ab = alpha + beta
    if nu == 0:
        # Gamma(ab + 1) * (ab + 1) = Gamma(ab + 2) removes the 0/0 at ab = -1
        return (ab + 1) * math.log(2.0) + math.lgamma(alpha + 1) + math.lgamma(beta + 1) - math.lgamma(ab + 2)
    return (
        (ab + 1) * math.log(2.0)
        - math.log(2 * nu + ab + 1)
        + math.lgamma(nu + alpha + 1)
        + math.lgamma(nu + beta + 1)
        - math.lgamma(nu + ab + 1)
        - math.lgamma(nu + 1)
    )


def norm_const(alpha: float, beta: float, nu: int) -> float:
    """Squared norm ``h_nu`` of the classical Jacobi polynomial ``P_nu``.

    >>> round(norm_const(0.0, 0.0, 1), 12)
    0.666666666667
    """
    return math.exp(log_norm_const(alpha, beta, nu))


def _as_points(y) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if np.any(np.abs(arr) > 1.0 + 1e-14) or np.any(np.isnan(arr)):
        raise ValueError("evaluation points must lie in [-1, 1]")
    return arr


def _classical_table(alpha: float, beta: float, nmax: int, y: np.ndarray) -> np.ndarray:
    """Columns ``P_0 .. P_nmax`` at the points ``y`` (1-d array)."""
    ab = alpha + beta
    out = np.empty((y.shape[0], nmax + 1))
    out[:, 0] = 1.0
    if nmax == 0:
        return out
    # explicit degree-one formula; the generic recurrence is 0/0 when ab = -1
    out[:, 1] = 0.5 * (ab + 2) * y + 0.5 * (alpha - beta)
    for n in range(2, nmax + 1):
        c = 2 * n + ab
        a1 = 2 * n * (n + ab) * (c - 2)
        a2 = (c - 1) * (alpha * alpha - beta * beta)
        a3 = (c - 1) * c * (c - 2)
        a4 = 2 * (n + alpha - 1) * (n + beta - 1) * c
        out[:, n] = ((a2 + a3 * y) * out[:, n - 1] - a4 * out[:, n - 2]) / a1
    return out


@lru_cache(maxsize=4096)
def _on_scale(alpha: float, beta: float, nmax: int) -> np.ndarray:
    lh0 = log_norm_const(alpha, beta, 0)
    scale = np.array([math.exp(0.5 * (lh0 - log_norm_const(alpha, beta, n))) for n in range(nmax + 1)])
    scale.setflags(write=False)
    return scale


def orthonormal_table(alpha: float, beta: float, nmax: int, y) -> np.ndarray:
    """Values ``Psi_0(y) .. Psi_nmax(y)`` as an array of shape ``y.shape + (nmax + 1,)``."""
    _check_ab(alpha, beta)
    nmax = _check_degree(nmax)
    y = _as_points(y)
    flat = y.reshape(-1)
    table = _classical_table(float(alpha), float(beta), nmax, flat) * _on_scale(float(alpha), float(beta), nmax)
    return table.reshape(y.shape + (nmax + 1,))


def eval_classical(alpha: float, beta: float, nu: int, y):
    """Classical Jacobi polynomial ``P^{alpha,beta}_nu(y)`` (scalar or array)."""
    _check_ab(alpha, beta)
    nu = _check_degree(nu)
    arr = _as_points(y)
    vals = _classical_table(float(alpha), float(beta), nu, arr.reshape(-1))[:, nu].reshape(arr.shape)
    return float(vals) if vals.ndim == 0 else vals


def eval_orthonormal(alpha: float, beta: float, nu: int, y):
    """Orthonormal Jacobi polynomial ``Psi^{alpha,beta}_nu(y)``."""
    nu = _check_degree(nu)
    vals = orthonormal_table(alpha, beta, nu, y)[..., nu]
    return float(vals) if vals.ndim == 0 else vals


def eval_tensor(params: JacobiParams, nu: MultiIndex, y) -> np.ndarray | float:
    """Tensor-product basis function ``Psi_nu`` at one point or a batch (rows)."""
    arr = np.asarray(y, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    nu = MultiIndex(nu)
    if nu.max_dim > pts.shape[1]:
        raise ValueError(f"index uses dimension {nu.max_dim} but points have {pts.shape[1]}")
    out = np.ones(pts.shape[0])
    for j, e in nu.items():
        a, b = params.ab(j)
        out *= orthonormal_table(a, b, e, pts[:, j - 1])[:, e]
    return float(out[0]) if single else out


def _endpoint_values(alpha: float, beta: float, nu: int) -> tuple[float, float]:
    """|Psi_nu(1)| and |Psi_nu(-1)| from the binomial endpoint values."""
    lh = 0.5 * (log_norm_const(alpha, beta, 0) - log_norm_const(alpha, beta, nu))
    log_binom_a = gammaln(nu + alpha + 1) - gammaln(nu + 1) - gammaln(alpha + 1)
    log_binom_b = gammaln(nu + beta + 1) - gammaln(nu + 1) - gammaln(beta + 1)
    return math.exp(lh + log_binom_a), math.exp(lh + log_binom_b)


def _golden_max(fun, a: float, b: float, iters: int = 60) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fun(d)
    return max(fc, fd)


@lru_cache(maxsize=65536)
def sup_norm(alpha: float, beta: float, nu: int) -> float:
    """Sup norm of ``Psi^{alpha,beta}_nu`` on ``[-1, 1]``.

    For ``max(alpha, beta) >= -1/2`` the maximum of ``|P_nu|`` sits at an
    endpoint; otherwise a dense Chebyshev grid plus golden-section refinement
    is used, maxed with both endpoint values.
    """
    _check_ab(alpha, beta)
    nu = _check_degree(nu)
    if nu == 0:
        return 1.0
    top, bottom = _endpoint_values(alpha, beta, nu)
    ends = max(top, bottom)
    if max(alpha, beta) >= -0.5:
        return ends
    npts = 32 * nu + 64
    grid = np.cos(np.pi * (np.arange(npts) + 0.5) / npts)[::-1]
    vals = np.abs(orthonormal_table(alpha, beta, nu, grid)[:, nu])
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, npts - 1)]

    def f(t: float) -> float:
        return abs(float(orthonormal_table(alpha, beta, nu, np.array([t]))[0, nu]))

    return max(ends, float(vals[i]), _golden_max(f, float(lo), float(hi)))


# minimum of Gamma on (0, inf), attained at x = 1.46163...
GAMMA_MIN = 0.8856031944108887


def sup_norm_growth(tau: float) -> tuple[float, float]:
    """Constants ``(c, gamma)`` with ``||Psi_nu||_inf <= c (1 + nu)**gamma``
    for every ``tau``-admissible ``(alpha, beta)``.

    ``c = 3**(1/tau + 3/2) 2**(1/tau + 1/2) max(Gamma(tau), Gamma(1/tau + 1)) / sqrt(Gamma_min)``
    and ``gamma = 1 + 2/tau``.
    """
    if not 0 < tau <= 1:
        raise ValueError("tau must lie in (0, 1]")
    c = 3 ** (1 / tau + 1.5) * 2 ** (1 / tau + 0.5) * max(math.gamma(tau), math.gamma(1 / tau + 1)) / math.sqrt(GAMMA_MIN)
    return c, 1 + 2 / tau


def intrinsic_weight(params: JacobiParams, nu: MultiIndex) -> float:
    """``u_nu``: sup norm of the tensor basis function (product over the support)."""
    out = 1.0
    for j, e in MultiIndex(nu).items():
        a, b = params.ab(j)
        out *= sup_norm(a, b, e)
    return out


def sample_points(params: JacobiParams, d: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``m`` i.i.d. points of ``[-1, 1]^d`` from the tensor Jacobi measure.

    Coordinate ``j`` is ``2x - 1`` with ``x ~ Beta(beta_j + 1, alpha_j + 1)``.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    out = np.empty((m, d))
    for j in range(1, d + 1):
        a, b = params.ab(j)
        out[:, j - 1] = 2.0 * rng.beta(b + 1.0, a + 1.0, size=m) - 1.0
    return out


def sample_point(params: JacobiParams, d: int, rng: np.random.Generator) -> np.ndarray:
    return sample_points(params, d, 1, rng)[0]


def _recurrence(alpha: float, beta: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the Jacobi matrix of the orthonormal family."""
    ab = alpha + beta
    k = np.arange(n, dtype=float)
    diag = np.empty(n)
    diag[0] = (beta - alpha) / (ab + 2)
    if n > 1:
        kk = k[1:]
        diag[1:] = (beta**2 - alpha**2) / ((2 * kk + ab) * (2 * kk + ab + 2))
    off = np.empty(max(n - 1, 0))
    if n > 1:
        # k = 1 separately: the general expression is 0/0 when ab = -1
        off[0] = 4 * (1 + alpha) * (1 + beta) / ((2 + ab) ** 2 * (3 + ab))
        kk = np.arange(2, n, dtype=float)
        c = 2 * kk + ab
        off[1:] = 4 * kk * (kk + alpha) * (kk + beta) * (kk + ab) / (c**2 * (c + 1) * (c - 1))
        off = np.sqrt(off)
    return diag, off


@lru_cache(maxsize=512)
def _gauss_jacobi_cached(alpha: float, beta: float, n: int) -> QuadRule:
    diag, off = _recurrence(alpha, beta, n)
    try:
        nodes, vecs = eigh_tridiagonal(diag, off)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"Golub-Welsch eigen-solve failed for n={n}") from exc
    weights = vecs[0, :] ** 2
    if not np.all(np.isfinite(weights)) or weights.sum() <= 0:
        raise RuntimeError(f"Golub-Welsch produced invalid weights for n={n}")
    weights = weights / weights.sum()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(nodes, weights, alpha, beta)


def gauss_jacobi_rule(alpha: float, beta: float, n: int) -> QuadRule:
    """n-point Gauss rule for the Jacobi probability measure (Golub-Welsch)."""
    _check_ab(alpha, beta)
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    return _gauss_jacobi_cached(float(alpha), float(beta), int(n))
