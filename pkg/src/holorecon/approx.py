"""Coefficient fields, truncated expansions and best-term approximation errors.

Coefficients take values in ``R^K`` with the Euclidean norm, standing in for
a finite-dimensional Hilbert codomain.  All error functionals act on the
row norms ``||c_nu||``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bounds import greedy_anchored
from .indices import IndexSet, MultiIndex, is_anchored, is_lower, minimal_anchored_majorant, minimal_monotone_majorant
from .jacobi import JacobiParams, gauss_jacobi_rule, orthonormal_table

__all__ = [
    "CoeffField",
    "basis_matrix",
    "compute_coeffs",
    "eval_expansion",
    "lp_norm",
    "seq_norm",
    "lpM_norm",
    "lpA_norm",
    "best_s_term",
    "best_s_term_oracle",
    "weighted_best_k_term",
    "weighted_best_k_term_oracle",
    "best_anchored_s_term",
    "anchored_subsets",
    "GRID_CAP",
    "ANCHORED_ENUM_CAP",
]

GRID_CAP = 4_000_000
ANCHORED_ENUM_CAP = 100_000


@dataclass(frozen=True)
class CoeffField:
    """Vector-valued coefficients ``c_nu in R^K`` on an index set.

    ``values`` has shape ``(len(index_set), K)``; row ``i`` belongs to
    ``index_set[i]``.  ``meta`` carries solver diagnostics.
    """

    index_set: IndexSet
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[0] != len(self.index_set):
            raise ValueError("need one K-vector per index")
        if vals.shape[1] < 1:
            raise ValueError("K must be >= 1")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_dict(cls, mapping: dict) -> "CoeffField":
        S = IndexSet(mapping)
        return cls(S, np.array([np.atleast_1d(mapping[MultiIndex(nu)]) for nu in S], dtype=float))

    @property
    def K(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return len(self.index_set)

    def __getitem__(self, nu) -> np.ndarray:
        pos = self.index_set.position(MultiIndex(nu))
        return self.values[pos]

    def get(self, nu) -> np.ndarray:
        """``c_nu``, or the zero vector when ``nu`` is outside the support."""
        nu = MultiIndex(nu)
        if nu in self.index_set:
            return self[nu]
        return np.zeros(self.K)

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)

    def restrict(self, S) -> "CoeffField":
        """Coefficients on ``S`` (zeros where ``S`` leaves the current support)."""
        S = S if isinstance(S, IndexSet) else IndexSet(S)
        return CoeffField(S, np.array([self.get(nu) for nu in S]).reshape(len(S), self.K))

    def scaled(self, factor: float) -> "CoeffField":
        return CoeffField(self.index_set, self.values * factor)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index"] + [f"v_{i + 1}" for i in range(self.K)])
        for nu, row in zip(self.index_set, self.values):
            w.writerow([nu.to_token()] + [repr(float(x)) for x in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CoeffField":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][0] != "index":
            raise ValueError("missing CoeffField header")
        body = rows[1:]
        mapping = {MultiIndex.from_token(r[0]): np.array([float(x) for x in r[1:]]) for r in body}
        return cls.from_dict(mapping)


def basis_matrix(params: JacobiParams, S: IndexSet, y: np.ndarray) -> np.ndarray:
    """``B[i, l] = Psi_{S[l]}(y_i)`` for points ``y`` of shape ``(m, d)``."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    S = S if isinstance(S, IndexSet) else IndexSet(S)
    if S.max_dim > y.shape[1]:
        raise ValueError(f"index set uses dimension {S.max_dim} but points have {y.shape[1]}")
    out = np.ones((y.shape[0], len(S)))
    for j in S.active_dims:
        exps = np.array([nu[j] for nu in S])
        cols = np.nonzero(exps)[0]
        a, b = params.ab(j)
        table = orthonormal_table(a, b, int(exps.max()), y[:, j - 1])
        out[:, cols] *= table[:, exps[cols]]
    return out


def _eval_f(f: Callable, pts: np.ndarray) -> np.ndarray:
    vals = np.asarray(f(pts), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.shape[0] != pts.shape[0]:
        raise ValueError("f must return one value (or K-vector) per point")
    return vals


def compute_coeffs(
    f: Callable[[np.ndarray], np.ndarray],
    Lam: IndexSet,
    params: JacobiParams,
    nodes_per_dim: int | None = None,
    d: int | None = None,
    cap: int = GRID_CAP,
) -> CoeffField:
    """Coefficients ``c_nu = E[f Psi_nu]`` by tensor Gauss-Jacobi quadrature.

    Parameters
    ----------
    f : callable
        Maps an ``(n, d)`` array of points to ``(n,)`` or ``(n, K)`` values.
        It must not depend on coordinates outside the active dimensions of
        ``Lam``; those are held at zero.
    Lam : IndexSet
        Indices to compute.
    params : JacobiParams
    nodes_per_dim : int, optional
        Gauss nodes per active dimension; default ``max degree + 4``.
    d : int, optional
        Ambient dimension passed to ``f``; default ``Lam.max_dim``.
    cap : int
        Largest admissible tensor grid.

    Raises
    ------
    MemoryError
        If the tensor grid exceeds ``cap`` points.
    """
    Lam = Lam if isinstance(Lam, IndexSet) else IndexSet(Lam)
    dims = Lam.active_dims
    pmax = max(Lam.max_degree, 0)
    n = pmax + 4 if nodes_per_dim is None else int(nodes_per_dim)
    if n < pmax + 2:
        raise ValueError(f"need at least {pmax + 2} nodes per dimension, got {n}")
    d = max(Lam.max_dim, 1) if d is None else int(d)
    if d < Lam.max_dim:
        raise ValueError("ambient dimension does not cover the active dimensions")
    size = n ** len(dims)
    if size > cap:
        raise MemoryError(f"tensor grid of {size} points exceeds cap {cap}")
    rules = [gauss_jacobi_rule(*params.ab(j), n) for j in dims]
    pts = np.zeros((size, d))
    if dims:
        mesh = np.meshgrid(*[r.nodes for r in rules], indexing="ij")
        for j, g in zip(dims, mesh):
            pts[:, j - 1] = g.reshape(-1)
    F = _eval_f(f, pts)
    K = F.shape[1]
    T = F.reshape(tuple([n] * len(dims)) + (K,))
    # contract one dimension at a time against weighted basis tables
    for axis, (j, r) in enumerate(zip(dims, rules)):
        pj = max(nu[j] for nu in Lam)
        W = orthonormal_table(*params.ab(j), pj, r.nodes) * r.weights[:, None]
        T = np.moveaxis(np.tensordot(T, W, axes=([axis], [0])), -1, axis)
    vals = np.empty((len(Lam), K))
    for i, nu in enumerate(Lam):
        vals[i] = T[tuple(nu[j] for j in dims)]
    return CoeffField(Lam, vals)


def eval_expansion(c: CoeffField, params: JacobiParams, y) -> np.ndarray:
    """``sum_nu c_nu Psi_nu(y)``; shape ``(K,)`` for one point, ``(m, K)`` for rows."""
    arr = np.asarray(y, dtype=float)
    single = arr.ndim == 1
    B = basis_matrix(params, c.index_set, np.atleast_2d(arr))
    out = B @ c.values
    return out[0] if single else out


def lp_norm(x, p: float) -> float:
    """``l^p`` (quasi-)norm of a nonnegative vector; ``p = inf`` allowed."""
    x = np.abs(np.asarray(x, dtype=float))
    if x.size == 0:
        return 0.0
    if math.isinf(p):
        return float(x.max())
    if p <= 0:
        raise ValueError("p must be positive")
    top = x.max()
    if top == 0:
        return 0.0
    return float(top * np.sum((x / top) ** p) ** (1.0 / p))


def _weights(c: CoeffField, u) -> np.ndarray:
    if u is None:
        return np.ones(len(c))
    if callable(u):
        return np.array([u(nu) for nu in c.index_set], dtype=float)
    u = np.asarray(u, dtype=float)
    if u.shape != (len(c),):
        raise ValueError("weights must align with the index set")
    return u


def _weighted_lp(norms: np.ndarray, w: np.ndarray, p: float) -> float:
    # ||z||_{p,u} = (sum u^(2-p) |z|^p)^(1/p)
    if math.isinf(p):
        return float(np.max(norms / w)) if norms.size else 0.0
    if norms.size == 0:
        return 0.0
    return lp_norm(norms * w ** (2.0 / p - 1.0), p)


def seq_norm(c: CoeffField, p: float, u=None) -> float:
    """``||c||_{p,u;V}``; ``u`` is an array aligned with ``c``, a callable or None."""
    return _weighted_lp(c.norms(), _weights(c, u), p)


def lpM_norm(b, p: float, tail_sup: float = 0.0) -> float:
    """``l^p`` norm of the minimal monotone majorant of a stored prefix."""
    return lp_norm(minimal_monotone_majorant(b, tail_sup), p)


def lpA_norm(c: CoeffField, p: float) -> float:
    """``l^p`` norm of the minimal anchored majorant of ``||c_nu||`` over a lower set."""
    return lp_norm(minimal_anchored_majorant(c.index_set, c.norms()), p)


def _support(c: CoeffField, idx) -> IndexSet:
    return IndexSet(c.index_set[int(i)] for i in idx)


def best_s_term(c: CoeffField, s: int, p: float) -> tuple[float, IndexSet]:
    """Best ``s``-term error ``sigma_s(c)_p`` and the ``s`` kept indices.

    Ties are broken by graded-lex index order.
    """
    if not 0 < p <= 2 and not math.isinf(p):
        raise ValueError("p must lie in (0, 2]")
    if s < 0:
        raise ValueError("s must be nonnegative")
    norms = c.norms()
    order = np.argsort(-norms, kind="stable")
    s = min(int(s), len(c))
    return lp_norm(norms[order[s:]], p), _support(c, order[:s])


def best_s_term_oracle(c: CoeffField, s: int, p: float) -> tuple[float, IndexSet]:
    """Exhaustive minimum over all supports of size ``s``."""
    norms = c.norms()
    n = len(c)
    s = min(int(s), n)
    best, arg = math.inf, ()
    for keep in itertools.combinations(range(n), s):
        mask = np.ones(n, dtype=bool)
        mask[list(keep)] = False
        err = lp_norm(norms[mask], p)
        if err < best:
            best, arg = err, keep
    return best, _support(c, arg)


def weighted_best_k_term(c: CoeffField, k: float, p: float, u=None) -> tuple[float, IndexSet]:
    """Weighted ``(k, u)``-term error via the nonincreasing ``||c_nu|| / u_nu`` prefix.

    The kept set is the longest prefix of that order with ``sum u_nu**2 <= k``,
    so the returned error is an upper bound on the true infimum
    ``sigma_k(c)_{p,u;V}``.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if p <= 0:
        raise ValueError("p must be positive")
    w = _weights(c, u)
    norms = c.norms()
    order = np.argsort(-(norms / w), kind="stable")
    cum = np.cumsum(w[order] ** 2)
    count = int(np.searchsorted(cum, k * (1 + 1e-12), side="right"))
    rest = order[count:]
    return _weighted_lp(norms[rest], w[rest], p), _support(c, order[:count])


def weighted_best_k_term_oracle(c: CoeffField, k: float, p: float, u=None, max_size: int = 20) -> tuple[float, IndexSet]:
    """Exhaustive infimum over all supports with ``sum u_nu**2 <= k``."""
    n = len(c)
    if n > max_size:
        raise ValueError(f"exhaustive oracle limited to {max_size} indices")
    w = _weights(c, u)
    norms = c.norms()
    w2 = w**2
    best, arg = math.inf, 0
    for mask in range(1 << n):
        sel = np.array([(mask >> i) & 1 for i in range(n)], dtype=bool)
        if w2[sel].sum() > k * (1 + 1e-12):
            continue
        err = _weighted_lp(norms[~sel], w[~sel], p)
        if err < best:
            best, arg = err, mask
    keep = [i for i in range(n) if (arg >> i) & 1]
    return best, _support(c, keep)


def anchored_subsets(Lam: IndexSet, s: int, limit: int | None = None):
    """All anchored subsets of ``Lam`` with at most ``s`` members.

    Every anchored set can be grown one index at a time through anchored
    sets, so a breadth-first search from ``{0}`` reaches all of them.
    Returns ``None`` when more than ``limit`` sets exist.
    """
    Lam = Lam if isinstance(Lam, IndexSet) else IndexSet(Lam)
    zero = MultiIndex.zero()
    if s < 1 or zero not in Lam:
        return [frozenset()]
    seen = {frozenset([zero])}
    frontier = [frozenset([zero])]
    if limit is not None and len(seen) > limit:
        return None
    for _ in range(s - 1):
        nxt = []
        for S in frontier:
            for nu in Lam:
                if nu in S:
                    continue
                if not all(mu in S for mu in nu.lower_neighbors()):
                    continue
                j = nu.unit_dim()
                if j is not None and j > 1 and MultiIndex.unit(j - 1) not in S:
                    continue
                T = S | {nu}
                if T not in seen:
                    seen.add(T)
                    nxt.append(T)
                    if limit is not None and len(seen) > limit:
                        return None
        frontier = nxt
    return [frozenset()] + sorted(seen, key=lambda S: (len(S), sorted(S)))


def best_anchored_s_term(
    c: CoeffField,
    s: int,
    p: float,
    enum_cap: int = ANCHORED_ENUM_CAP,
) -> tuple[float, IndexSet, str]:
    """Best ``s``-term error over anchored supports inside ``c.index_set``.

    Returns ``(error, support, mode)``; mode is ``"exhaustive"`` when at most
    ``enum_cap`` anchored subsets exist (exact result) and ``"greedy"``
    otherwise (an upper bound from the minimal anchored majorant order).
    """
    Lam = c.index_set
    if not is_lower(Lam):
        raise ValueError("index set must be lower")
    norms = c.norms()
    total = np.abs(norms)
    subsets = anchored_subsets(Lam, int(s), limit=enum_cap)
    if subsets is not None:
        best, arg = math.inf, frozenset()
        for S in subsets:
            mask = np.ones(len(Lam), dtype=bool)
            for nu in S:
                mask[Lam.position(nu)] = False
            err = lp_norm(total[mask], p)
            if err < best:
                best, arg = err, S
        return best, IndexSet(arg), "exhaustive"
    maj = minimal_anchored_majorant(Lam, norms)
    S = greedy_anchored(Lam, maj, int(s))
    assert is_anchored(S)
    mask = np.ones(len(Lam), dtype=bool)
    for nu in S:
        mask[Lam.position(nu)] = False
    return lp_norm(total[mask], p), S, "greedy"
