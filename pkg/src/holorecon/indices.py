"""Multi-indices, index sets and the sequence majorants defined on them.

Dimensions are 1-based throughout.  A :class:`MultiIndex` is stored sparsely
as sorted ``(dim, exponent)`` pairs with positive exponents only, so equality
and hashing are support-wise.
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from typing import Callable

import numpy as np

__all__ = [
    "MultiIndex",
    "IndexSet",
    "hyperbolic_cross",
    "is_lower",
    "is_anchored",
    "minimal_monotone_majorant",
    "minimal_anchored_majorant",
    "weighted_cardinality",
    "Permutation",
    "enumerate_lower_sets",
]


class MultiIndex(tuple):
    """Finitely supported multi-index.

    Accepts a mapping ``{dim: exp}``, an iterable of ``(dim, exp)`` pairs or
    another ``MultiIndex``.  Use :meth:`from_dense` for a dense vector.
    Ordering is graded lexicographic (total degree first, then larger
    exponents in lower dimensions first), so ``0 < e_1 < e_2 < 2e_1``.
    """

    __slots__ = ()

    def __new__(cls, entries=()):
        if isinstance(entries, MultiIndex):
            return entries
        if isinstance(entries, Mapping):
            pairs = entries.items()
        else:
            pairs = entries
        acc: dict[int, int] = {}
        for j, e in pairs:
            j, e = int(j), int(e)
            if j < 1:
                raise ValueError(f"dimensions are 1-based, got {j}")
            if e < 0:
                raise ValueError(f"exponents must be nonnegative, got {e}")
            if e:
                acc[j] = acc.get(j, 0) + e
        return super().__new__(cls, tuple(sorted(acc.items())))

    @classmethod
    def from_dense(cls, vec: Iterable[int]) -> "MultiIndex":
        return cls((j + 1, e) for j, e in enumerate(vec) if e)

    @classmethod
    def unit(cls, j: int, e: int = 1) -> "MultiIndex":
        return cls(((j, e),))

    @classmethod
    def zero(cls) -> "MultiIndex":
        return _ZERO

    def items(self):
        return iter(tuple.__iter__(self))

    def __getitem__(self, j):  # exponent lookup by dimension
        if isinstance(j, slice):
            raise TypeError("MultiIndex does not support slicing")
        for d, e in tuple.__iter__(self):
            if d == j:
                return e
            if d > j:
                break
        return 0

    def __iter__(self):
        return tuple.__iter__(self)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(j for j, _ in tuple.__iter__(self))

    @property
    def degree(self) -> int:
        return sum(e for _, e in tuple.__iter__(self))

    @property
    def max_dim(self) -> int:
        return tuple.__getitem__(self, -1)[0] if len(self) else 0

    @property
    def is_zero(self) -> bool:
        return len(self) == 0

    def unit_dim(self) -> int | None:
        """``j`` if this index is ``e_j``, otherwise ``None``."""
        if len(self) == 1:
            j, e = tuple.__getitem__(self, 0)
            if e == 1:
                return j
        return None

    def dense(self, d: int | None = None) -> tuple[int, ...]:
        d = self.max_dim if d is None else d
        if self.max_dim > d:
            raise ValueError("dimension too small for this index")
        out = [0] * d
        for j, e in tuple.__iter__(self):
            out[j - 1] = e
        return tuple(out)

    def add(self, j: int, e: int = 1) -> "MultiIndex":
        return MultiIndex(list(tuple.__iter__(self)) + [(j, e)])

    def sub_unit(self, j: int) -> "MultiIndex":
        """``self - e_j``; requires ``self[j] >= 1``."""
        out = []
        for d, e in tuple.__iter__(self):
            if d == j:
                if e > 1:
                    out.append((d, e - 1))
            else:
                out.append((d, e))
        return tuple.__new__(MultiIndex, tuple(out))

    def lower_neighbors(self) -> list["MultiIndex"]:
        return [self.sub_unit(j) for j in self.support]

    def leq(self, other: "MultiIndex") -> bool:
        """Componentwise ``self <= other``."""
        other = MultiIndex(other)
        return all(e <= other[j] for j, e in tuple.__iter__(self))

    def sort_key(self):
        return (self.degree, tuple(-v for v in self.dense()))

    def __lt__(self, other):
        return self.sort_key() < MultiIndex(other).sort_key()

    def __le__(self, other):
        return self.sort_key() <= MultiIndex(other).sort_key()

    def __gt__(self, other):
        return self.sort_key() > MultiIndex(other).sort_key()

    def __ge__(self, other):
        return self.sort_key() >= MultiIndex(other).sort_key()

    def __eq__(self, other):
        return tuple.__eq__(self, other)

    def __ne__(self, other):
        return tuple.__ne__(self, other)

    __hash__ = tuple.__hash__

    def __repr__(self):
        if not len(self):
            return "MultiIndex(0)"
        return "MultiIndex(" + ", ".join(f"{j}:{e}" for j, e in tuple.__iter__(self)) + ")"

    def to_token(self) -> str:
        """Serialization token: ``"dim:exp"`` pairs joined by commas, ``"0"`` for zero."""
        if not len(self):
            return "0"
        return ",".join(f"{j}:{e}" for j, e in tuple.__iter__(self))

    @classmethod
    def from_token(cls, token: str) -> "MultiIndex":
        token = token.strip()
        if token in ("", "0"):
            return _ZERO
        pairs = []
        for part in token.split(","):
            j, e = part.split(":")
            pairs.append((int(j), int(e)))
        return cls(pairs)


_ZERO = tuple.__new__(MultiIndex, ())


class IndexSet(Sequence):
    """Ordered, duplicate-free collection of multi-indices.

    Members are always kept in the canonical graded-lex order; column
    ``i`` of every matrix built on this set corresponds to ``self[i]``.
    """

    __slots__ = ("_members", "_pos")

    def __init__(self, members: Iterable = ()):
        uniq = {MultiIndex(m) for m in members}
        self._members: tuple[MultiIndex, ...] = tuple(sorted(uniq, key=MultiIndex.sort_key))
        self._pos = {m: i for i, m in enumerate(self._members)}

    def __len__(self):
        return len(self._members)

    def __getitem__(self, i):
        return self._members[i]

    def __iter__(self):
        return iter(self._members)

    def __contains__(self, nu):
        return MultiIndex(nu) in self._pos

    def __eq__(self, other):
        if isinstance(other, IndexSet):
            return self._members == other._members
        return NotImplemented

    def __hash__(self):
        return hash(self._members)

    def __repr__(self):
        head = ", ".join(m.to_token() for m in self._members[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"IndexSet([{head}{more}], size={len(self)})"

    def position(self, nu) -> int:
        return self._pos[MultiIndex(nu)]

    def issubset(self, other: "IndexSet") -> bool:
        return all(m in other for m in self._members)

    def union(self, other: Iterable) -> "IndexSet":
        return IndexSet(list(self._members) + list(other))

    @property
    def max_dim(self) -> int:
        return max((m.max_dim for m in self._members), default=0)

    @property
    def max_degree(self) -> int:
        """Largest single-coordinate exponent in the set."""
        return max((e for m in self._members for _, e in m.items()), default=0)

    @property
    def active_dims(self) -> tuple[int, ...]:
        return tuple(sorted({j for m in self._members for j in m.support}))

    def to_text(self) -> str:
        return "\n".join(m.to_token() for m in self._members) + ("\n" if self._members else "")

    @classmethod
    def from_text(cls, text: str) -> "IndexSet":
        return cls(MultiIndex.from_token(line) for line in text.splitlines() if line.strip())


def hyperbolic_cross(n: int, max_dim: int | None = None, cap: int = 2_000_000) -> IndexSet:
    """``{nu : prod_k (nu_k + 1) <= n, nu_k = 0 for k > n}``.

    ``max_dim`` optionally restricts the support further to ``[1, max_dim]``.
    Raises ``MemoryError`` when the set would exceed ``cap`` members.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    dmax = n if max_dim is None else min(n, int(max_dim))
    out: list[MultiIndex] = []

    # depth-first over (next dimension, remaining product budget)
    def rec(start: int, budget: int, pairs: list[tuple[int, int]]):
        out.append(tuple.__new__(MultiIndex, tuple(pairs)))
        if len(out) > cap:
            raise MemoryError(f"hyperbolic cross of order {n} exceeds cap {cap}")
        if budget < 2:
            return
        for j in range(start, dmax + 1):
            e = 1
            while (e + 1) <= budget:
                pairs.append((j, e))
                rec(j + 1, budget // (e + 1), pairs)
                pairs.pop()
                e += 1

    rec(1, n, [])
    return IndexSet(out)


def is_lower(S: Iterable) -> bool:
    members = S if isinstance(S, IndexSet) else IndexSet(S)
    for nu in members:
        for mu in nu.lower_neighbors():
            if mu not in members:
                return False
    return True


def is_anchored(S: Iterable) -> bool:
    members = S if isinstance(S, IndexSet) else IndexSet(S)
    if not is_lower(members):
        return False
    for nu in members:
        j = nu.unit_dim()
        if j is not None and j > 1 and MultiIndex.unit(j - 1) not in members:
            return False
    return True


def minimal_monotone_majorant(z: Sequence[float], tail_sup: float = 0.0) -> np.ndarray:
    """``z~_i = sup_{j >= i} |z_j|`` for a stored prefix plus a tail bound."""
    arr = np.abs(np.asarray(z, dtype=float))
    if arr.size == 0:
        return arr
    rev = np.maximum.accumulate(arr[::-1])[::-1]
    return np.maximum(rev, abs(tail_sup))


def _upper_neighbors(members: IndexSet) -> list[list[int]]:
    ups: list[list[int]] = [[] for _ in range(len(members))]
    for i, nu in enumerate(members):
        for mu in nu.lower_neighbors():
            p = members._pos.get(mu)
            if p is not None:
                ups[p].append(i)
    return ups


def minimal_anchored_majorant(Lam: IndexSet, values: Sequence[float]) -> np.ndarray:
    """Minimal anchored majorant of ``values`` (aligned with ``Lam``), zero outside ``Lam``.

    For ``nu`` not a unit vector the value is the sup over ``mu >= nu`` in
    ``Lam``; for ``e_j`` it is the sup over ``mu >= e_i`` for some ``i >= j``.
    """
    if not isinstance(Lam, IndexSet):
        Lam = IndexSet(Lam)
    vals = np.abs(np.asarray(values, dtype=float))
    if vals.shape != (len(Lam),):
        raise ValueError("values must align with the index set")
    if not is_lower(Lam):
        raise ValueError("candidate set must be lower")
    ups = _upper_neighbors(Lam)
    mono = vals.copy()
    # members are sorted by degree, so reverse order visits upper neighbors first
    for i in range(len(Lam) - 1, -1, -1):
        for k in ups[i]:
            if mono[k] > mono[i]:
                mono[i] = mono[k]
    out = mono.copy()
    units = sorted((nu.unit_dim(), i) for i, nu in enumerate(Lam) if nu.unit_dim() is not None)
    run = 0.0
    for _, i in reversed(units):
        run = max(run, mono[i])
        out[i] = run
    return out


def weighted_cardinality(S: Iterable, u: Callable[[MultiIndex], float] | None = None) -> float:
    """``sum_{nu in S} u(nu)**2``; plain cardinality when ``u`` is None."""
    if u is None:
        return float(len(list(S)))
    return float(sum(u(nu) ** 2 for nu in S))


class Permutation:
    """Finitely supported bijection of the dimensions ``1, 2, ...``.

    ``pi(j)`` is the image of dimension ``j``.  Acting on a multi-index,
    ``pi(nu)`` has ``pi(nu)_{pi(j)} = nu_j``; on sequences (points,
    parameters, anisotropy vectors) ``x_pi`` has entries ``x_pi[j] = x[pi(j)]``
    so that ``Psi^{a,b}_{pi(nu)}(y) == Psi^{a_pi,b_pi}_{nu}(y_pi)``.
    """

    def __init__(self, mapping: Mapping[int, int] | None = None):
        mapping = {int(k): int(v) for k, v in (mapping or {}).items() if int(k) != int(v)}
        if sorted(mapping) != sorted(mapping.values()):
            raise ValueError("not a bijection on its support")
        self._map = mapping
        self._inv = {v: k for k, v in mapping.items()}

    @classmethod
    def from_images(cls, images: Sequence[int]) -> "Permutation":
        """``images[j-1] = pi(j)`` for ``j = 1..len(images)``."""
        return cls({j + 1: int(v) for j, v in enumerate(images)})

    @classmethod
    def swap(cls, i: int, j: int) -> "Permutation":
        return cls({i: j, j: i})

    @classmethod
    def identity(cls) -> "Permutation":
        return cls()

    def __call__(self, j: int) -> int:
        return self._map.get(j, j)

    def inverse(self) -> "Permutation":
        return Permutation(self._inv)

    @property
    def support_max(self) -> int:
        return max(self._map, default=0)

    def apply_index(self, nu: MultiIndex) -> MultiIndex:
        return MultiIndex((self(j), e) for j, e in MultiIndex(nu).items())

    def apply_set(self, S: Iterable) -> IndexSet:
        return IndexSet(self.apply_index(nu) for nu in S)

    def apply_sequence(self, x: Sequence, tail=None):
        """Return ``x_pi`` with ``x_pi[j] = x[pi(j)]`` (1-based; length grows if needed)."""
        x = list(x)
        n = max(len(x), self.support_max)
        get = lambda k: x[k - 1] if k <= len(x) else tail  # noqa: E731
        return [get(self(j)) for j in range(1, n + 1)]

    def apply_points(self, y: np.ndarray) -> np.ndarray:
        """Rows of ``y`` relabeled: column ``j`` of the result is column ``pi(j)`` of ``y``."""
        y = np.asarray(y, dtype=float)
        d = y.shape[-1]
        if self.support_max > d:
            raise ValueError("permutation moves dimensions beyond the points' dimension")
        cols = [self(j) - 1 for j in range(1, d + 1)]
        return y[..., cols]

    def apply_params(self, params):
        from .jacobi import JacobiParams

        alpha = self.apply_sequence(params.alpha, params.alpha_tail)
        beta = self.apply_sequence(params.beta, params.beta_tail)
        return JacobiParams(tuple(alpha), tuple(beta), params.alpha_tail, params.beta_tail, params.tau)

    def __repr__(self):
        return f"Permutation({self._map})"


def enumerate_lower_sets(box: Sequence[int], max_size: int) -> list[frozenset]:
    """All lower sets of size ``<= max_size`` inside ``nu <= box`` (componentwise)."""
    d = len(box)

    def addable(S: frozenset) -> list[MultiIndex]:
        cand = set()
        for nu in S:
            for j in range(1, d + 1):
                if nu[j] < box[j - 1]:
                    mu = nu.add(j)
                    if mu not in S and all(l in S for l in mu.lower_neighbors()):
                        cand.add(mu)
        return sorted(cand, key=MultiIndex.sort_key)

    start = frozenset([MultiIndex.zero()])
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for S in frontier:
            if len(S) >= max_size:
                continue
            for mu in addable(S):
                T = S | {mu}
                if T not in seen:
                    seen.add(T)
                    nxt.append(T)
        frontier = nxt
    return sorted(seen, key=lambda S: (len(S), sorted(m.sort_key() for m in S)))
