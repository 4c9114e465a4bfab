"""Test functions holomorphic on the polyellipse region of a target ``b``.

Three families, all with coefficients tied to ``b``:

``reciprocal-affine``
    ``f(y) = scale / (theta - sum_j zeta_j y_j)``.
``product-reciprocal``
    ``f(y) = scale * prod_j (c + margin) / (theta_j - zeta_j y_j)``.
``exponential-affine``
    ``f(y) = scale * exp(-sum_j zeta_j y_j)``.

With ``|zeta_j| <= c b_j`` and the offsets below, no denominator vanishes on
``E_rho`` for any ``rho`` obeying ``sum ((rho_j + 1/rho_j)/2 - 1) b_j <= 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bounds import Anisotropy, _solve_half_sum

__all__ = [
    "KINDS",
    "HoloModel",
    "make_model",
    "eval_model",
    "eval_model_complex",
    "normalize_to_class",
    "estimate_region_sup",
]

KINDS = ("reciprocal-affine", "product-reciprocal", "exponential-affine")
POLE_GUARD = 1e-12


@dataclass(frozen=True)
class HoloModel:
    """Stack of ``K`` scalar model components sharing a family.

    ``zeta`` has shape ``(K, d)``.  ``theta`` has shape ``(K,)`` for
    reciprocal-affine and ``(K, d)`` for product-reciprocal (unused for the
    exponential family).  ``scale`` has shape ``(K,)``.
    """

    kind: str
    zeta: np.ndarray
    theta: np.ndarray
    scale: np.ndarray
    c: float = 1.0
    margin: float = 0.1
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def K(self) -> int:
        return self.zeta.shape[0]

    @property
    def d(self) -> int:
        return self.zeta.shape[1]

    def __call__(self, y) -> np.ndarray:
        return eval_model(self, y)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "zeta": self.zeta.tolist(),
            "theta": self.theta.tolist(),
            "scale": self.scale.tolist(),
            "c": self.c,
            "margin": self.margin,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "HoloModel":
        return cls(
            kind=d["kind"],
            zeta=np.asarray(d["zeta"], dtype=float),
            theta=np.asarray(d["theta"], dtype=float),
            scale=np.asarray(d["scale"], dtype=float),
            c=float(d.get("c", 1.0)),
            margin=float(d.get("margin", 0.1)),
            meta=dict(d.get("meta", {})),
        )


def make_model(
    kind: str,
    b: Anisotropy,
    rng: np.random.Generator | None = None,
    K: int = 1,
    c: float = 1.0,
    margin: float = 0.1,
    d: int | None = None,
) -> HoloModel:
    """Build a model holomorphic on ``R(b)``.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    b : Anisotropy
    rng : Generator, optional
        When given, component ``k`` uses ``zeta_kj = c b_j w_kj`` with
        ``w_kj`` uniform in ``[-1, -1/2] U [1/2, 1]``.  Without it every
        component uses ``w = 1``, which keeps the model a deterministic
        function of ``b``.
    K : int
        Number of stacked components.
    c, margin : float
        ``zeta = c b`` and the pole distance ``margin`` at the worst point.
    d : int, optional
        Number of model dimensions; default ``len(b)``.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    if K < 1:
        raise ValueError("K must be >= 1")
    if c <= 0 or margin <= 0:
        raise ValueError("c and margin must be positive")
    d = len(b) if d is None else int(d)
    bb = np.array([b[j] for j in range(1, d + 1)])
    if bb.sum() <= 0:
        raise ValueError("b has zero l1 norm on the model dimensions")
    if rng is None:
        w = np.ones((K, d))
    else:
        w = rng.uniform(0.5, 1.0, size=(K, d)) * rng.choice([-1.0, 1.0], size=(K, d))
    zeta = c * bb[None, :] * w
    if kind == "reciprocal-affine":
        theta = np.abs(zeta).sum(axis=1) + c + margin
    elif kind == "product-reciprocal":
        theta = np.abs(zeta) + c + margin
    else:
        theta = np.zeros(K)
    return HoloModel(kind, zeta, theta, np.ones(K), c=c, margin=margin, meta={"normalized": False})


def eval_model_complex(model: HoloModel, z) -> np.ndarray:
    """Evaluate at complex points ``z`` of shape ``(n, d')``; returns ``(n, K)``."""
    z = np.atleast_2d(np.asarray(z))
    if z.shape[1] < model.d:
        pad = np.zeros((z.shape[0], model.d - z.shape[1]), dtype=z.dtype)
        z = np.hstack([z, pad])
    z = z[:, : model.d]
    if model.kind == "reciprocal-affine":
        den = model.theta[None, :] - z @ model.zeta.T
        _guard(den)
        return model.scale[None, :] / den
    if model.kind == "product-reciprocal":
        # (n, K, d) denominators
        den = model.theta[None, :, :] - z[:, None, :] * model.zeta[None, :, :]
        _guard(den)
        num = model.c + model.margin
        return model.scale[None, :] * np.prod(num / den, axis=2)
    return model.scale[None, :] * np.exp(-(z @ model.zeta.T))


def _guard(den: np.ndarray) -> None:
    if np.any(np.abs(den) < POLE_GUARD):
        raise FloatingPointError("evaluation point too close to a pole")


def eval_model(model: HoloModel, y) -> np.ndarray:
    """Real evaluation; returns ``(K,)`` for one point, ``(n, K)`` for rows."""
    arr = np.asarray(y, dtype=float)
    single = arr.ndim == 1
    out = np.real(eval_model_complex(model, np.atleast_2d(arr)))
    return out[0] if single else out


def _boundary_points(b: Anisotropy, d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Points on ``partial E_rho`` for random ``rho`` on the budget boundary,
    plus the real corners ``z = +-(rho + 1/rho)/2`` of single-dimension and
    proportional budget splits."""
    bb = np.array([b[j] for j in range(1, d + 1)])
    act = np.nonzero(bb > 0)[0]
    pts = []

    def point(alloc: np.ndarray, phase: np.ndarray) -> np.ndarray:
        z = np.zeros(d, dtype=complex)
        for i in act:
            r = _solve_half_sum(1.0 + alloc[i] / bb[i])
            z[i] = 0.5 * (r * np.exp(1j * phase[i]) + np.exp(-1j * phase[i]) / r)
        return z

    for sign in (math.pi, 0.0):
        for i in act:
            alloc = np.zeros(d)
            alloc[i] = 1.0
            pts.append(point(alloc, np.full(d, sign)))
        pts.append(point(np.where(bb > 0, 1.0 / max(len(act), 1), 0.0), np.full(d, sign)))
    for _ in range(n):
        alloc = np.zeros(d)
        alloc[act] = rng.dirichlet(np.full(len(act), 0.5))
        phase = np.where(rng.random(d) < 0.5, math.pi, 0.0) + rng.normal(0.0, 0.3, size=d)
        if rng.random() < 0.5:
            phase = rng.uniform(0.0, 2 * math.pi, size=d)
        pts.append(point(alloc, phase))
    return np.array(pts)


def estimate_region_sup(model: HoloModel, b: Anisotropy, n_boundary_samples: int = 2000, rng=None) -> float:
    """Sampled estimate of ``sup_{R(b)} ||f||``; a lower bound on the true sup."""
    rng = np.random.default_rng(0) if rng is None else rng
    Z = _boundary_points(b, model.d, int(n_boundary_samples), rng)
    vals = np.linalg.norm(eval_model_complex(model, Z), axis=1)
    return float(vals.max())


def normalize_to_class(model: HoloModel, b: Anisotropy, n_boundary_samples: int = 2000, rng=None) -> HoloModel:
    """Rescale so the sampled sup over ``R(b)`` equals ``1/1.05``.

    The sup is estimated, not certified; the estimate is recorded in ``meta``.
    """
    est = estimate_region_sup(model, b, n_boundary_samples, rng)
    factor = 1.0 / (1.05 * est)
    meta = dict(model.meta, normalized=True, sup_estimate=est, sup_is_estimate=True,
                n_boundary_samples=int(n_boundary_samples))
    return replace(model, scale=model.scale * factor, meta=meta)
