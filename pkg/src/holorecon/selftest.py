"""Fast invariant checks run by ``holorecon selftest``."""

from __future__ import annotations

import math

import numpy as np

from .approx import CoeffField, best_s_term, compute_coeffs, seq_norm, weighted_best_k_term
from .bounds import Anisotropy, budget, coeff_bound, kappa_rho
from .indices import IndexSet, MultiIndex, enumerate_lower_sets, hyperbolic_cross, is_anchored
from .jacobi import JacobiParams, eval_tensor, gauss_jacobi_rule, orthonormal_table, sample_points, sup_norm, sup_norm_growth
from .models import make_model, normalize_to_class
from .recon import SampleSet, assemble, max_singular_value, min_singular_value, reconstruct_cs, reconstruct_ls

__all__ = ["run_selftest"]


def _orthonormality() -> float:
    worst = 0.0
    for a, b in [(0.0, 0.0), (-0.5, -0.5), (0.3, -0.4), (2.0, 1.0)]:
        rule = gauss_jacobi_rule(a, b, 16)
        T = orthonormal_table(a, b, 12, rule.nodes)
        G = T.T @ (T * rule.weights[:, None])
        worst = max(worst, float(np.abs(G - np.eye(13)).max()))
    return worst


def _sup_growth() -> float:
    c, gam = sup_norm_growth(0.25)
    worst = 0.0
    for a in (-0.75, 0.0, 4.0):
        for b in (-0.75, 1.0, 4.0):
            for nu in range(0, 21):
                worst = max(worst, sup_norm(a, b, nu) / (c * (1 + nu) ** gam))
    return worst


def _coeff_soundness() -> float:
    P = JacobiParams.legendre()
    b = Anisotropy((1.0,))
    f = normalize_to_class(make_model("reciprocal-affine", b), b)
    L = IndexSet([MultiIndex.zero()] + [MultiIndex.unit(1, e) for e in range(1, 15)])
    c = compute_coeffs(f, L, P, nodes_per_dim=60)
    return max(float(np.linalg.norm(c[nu])) / coeff_bound(b, nu).d for nu in L)


def _kappa_feasible() -> float:
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        b = Anisotropy(tuple(rng.uniform(0, 1, 4)))
        nu = MultiIndex.from_dense(tuple(rng.integers(0, 4, 4)))
        worst = max(worst, budget(b, kappa_rho(b, nu)))
    return worst


def _stechkin() -> float:
    rng = np.random.default_rng(4)
    worst = 0.0
    S = hyperbolic_cross(6, max_dim=3)
    for _ in range(20):
        c = CoeffField(S, rng.standard_normal((len(S), 2)) * rng.exponential(1.0, (len(S), 1)) ** 3)
        u = rng.uniform(1, 3, len(S))
        for p, q in [(0.5, 1.0), (0.5, 2.0), (0.8, 2.0)]:
            s = 3
            err, _ = best_s_term(c, s, q)
            worst = max(worst, err / (seq_norm(c, p) * s ** (1 / q - 1 / p)))
            k = 5.0
            werr, _ = weighted_best_k_term(c, k, q, u)
            worst = max(worst, werr / (seq_norm(c, p, u) * k ** (1 / q - 1 / p)))
    return worst


def _hc_containment() -> float:
    H = hyperbolic_cross(4)
    missing = 0
    for S in enumerate_lower_sets((3, 3, 3), 4):
        if is_anchored(S) and not all(nu in H for nu in S):
            missing += 1
    return float(missing)


def _ls_exact() -> float:
    P = JacobiParams.uniform(0.5, -0.25)
    S = hyperbolic_cross(5, max_dim=3)
    rng = np.random.default_rng(5)
    true = rng.standard_normal(len(S))
    pts = sample_points(P, 3, 200, rng)
    vals = sum(t * eval_tensor(P, nu, pts) for t, nu in zip(true, S))
    c = reconstruct_ls(SampleSet(pts, vals), S, P)
    return float(np.abs(c.values[:, 0] - true).max())


def _cs_scalar() -> float:
    P = JacobiParams.legendre()
    S = IndexSet([MultiIndex.zero()])
    c = reconstruct_cs(SampleSet(np.zeros((1, 1)), np.array([0.7])), S, np.ones(1), 0.5, P, tol=1e-14,
                       max_iters=20000)
    return abs(float(c.values[0, 0]) - 0.7)


def _constant_column() -> float:
    P = JacobiParams.legendre()
    A = assemble(sample_points(P, 2, 40, np.random.default_rng(6)), IndexSet([MultiIndex.zero()]), P)
    return max(abs(min_singular_value(A) - 1.0), abs(max_singular_value(A) - 1.0))


CHECKS = [
    ("orthonormality", _orthonormality, lambda v: v <= 1e-10),
    ("sup_norm_growth", _sup_growth, lambda v: v <= 1.0),
    ("coeff_bound_1d", _coeff_soundness, lambda v: v <= 1.0),
    ("kappa_rho_feasible", _kappa_feasible, lambda v: v <= 1.0 + 1e-10),
    ("stechkin", _stechkin, lambda v: v <= 1.0 + 1e-12),
    ("hyperbolic_cross_containment", _hc_containment, lambda v: v == 0),
    ("ls_exact_recovery", _ls_exact, lambda v: v <= 1e-8),
    ("cs_scalar_case", _cs_scalar, lambda v: v <= 1e-6),
    ("constant_column", _constant_column, lambda v: v <= 1e-12),
]


def run_selftest() -> list[dict]:
    rows = []
    for name, fn, ok in CHECKS:
        try:
            value = float(fn())
            passed = bool(ok(value)) and math.isfinite(value)
            note = ""
        except Exception as exc:  # reported as a failed check
            value, passed, note = float("nan"), False, f"{type(exc).__name__}: {exc}"
        rows.append({"check": name, "passed": passed, "value": value, "note": note})
    return rows
