"""Scikit-learn style wrappers around the two reconstruction maps."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .approx import eval_expansion
from .bounds import Anisotropy, grow_known_candidates, select_set_known
from .indices import IndexSet, hyperbolic_cross
from .jacobi import JacobiParams, intrinsic_weight
from .recon import SampleSet, cs_params, ls_budget, reconstruct_cs, reconstruct_ls
from .validation import check_int, check_points, check_positive, check_probability, check_samples

__all__ = ["LeastSquaresPolynomial", "SRLassoPolynomial"]


class _PolynomialRegressor(RegressorMixin, BaseEstimator):
    def _params(self) -> JacobiParams:
        return JacobiParams.legendre() if self.params is None else self.params

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_points(X, self.n_features_in_)
        out = eval_expansion(self.coef_, self._params(), X)
        return out[:, 0] if self._y_1d else out


class LeastSquaresPolynomial(_PolynomialRegressor):
    """Least-squares fit on an index set chosen from a known anisotropy.

    Parameters
    ----------
    params : JacobiParams, optional
        Sampling measure and basis; Legendre by default.
    b : Anisotropy or sequence, optional
        Anisotropy used to choose the set; ignored when ``index_set`` is set.
    index_set : IndexSet, optional
        Fixed index set.
    k : float, optional
        Weighted-cardinality budget; default ``m / (c log(m / epsilon))``.
    epsilon, c : float
        Budget rule constants.
    rcond : float
        Relative singular-value cutoff of the solve.
    """

    def __init__(self, params=None, b=None, index_set=None, k=None, epsilon=0.1, c=1.0, rcond=1e-10):
        self.params = params
        self.b = b
        self.index_set = index_set
        self.k = k
        self.epsilon = epsilon
        self.c = c
        self.rcond = rcond

    def fit(self, X, y):
        X, Y, self._y_1d = check_samples(X, y)
        params = self._params()
        m, d = X.shape
        if self.index_set is not None:
            S = IndexSet(self.index_set)
            self.budget_ = None
        else:
            if self.b is None:
                raise ValueError("either b or index_set is required")
            b = self.b if isinstance(self.b, Anisotropy) else Anisotropy(tuple(self.b))
            if self.k is None:
                k = ls_budget(m, check_probability("epsilon", self.epsilon), check_positive("c", self.c))
            else:
                k = check_positive("k", self.k)
            cands, table = grow_known_candidates(b, params, k, max_dim=min(len(b), d))
            S = select_set_known(b, params, k, cands, table)
            self.budget_ = k
        if S.max_dim > d:
            raise ValueError(f"index set uses dimension {S.max_dim} but X has {d} columns")
        self.coef_ = reconstruct_ls(SampleSet(X, Y), S, params, rcond=self.rcond)
        self.index_set_ = S
        self.sigma_min_ = self.coef_.meta["sigma_min"]
        self.n_features_in_ = d
        return self


class SRLassoPolynomial(_PolynomialRegressor):
    """Weighted square-root LASSO over a hyperbolic cross.

    Parameters
    ----------
    params : JacobiParams, optional
    n : int, optional
        Hyperbolic-cross order; default from the parameter rule.
    lam : float, optional
        Regularization weight; default ``3 / (7 sqrt(k))``.
    profile : {"practical", "theoretical"}
    epsilon, c : float
        Parameter rule constants.
    N_max : int
        Size cap on the hyperbolic cross for the practical profile.
    tol, max_iters : float, int
        Solver stopping rule.
    """

    def __init__(self, params=None, n=None, lam=None, profile="practical", epsilon=0.1, c=1.0, N_max=5000,
                 tol=1e-8, max_iters=50_000):
        self.params = params
        self.n = n
        self.lam = lam
        self.profile = profile
        self.epsilon = epsilon
        self.c = c
        self.N_max = N_max
        self.tol = tol
        self.max_iters = max_iters

    def fit(self, X, y):
        X, Y, self._y_1d = check_samples(X, y)
        params = self._params()
        m, d = X.shape
        rule = cs_params(max(m, 3), check_probability("epsilon", self.epsilon), check_positive("c", self.c),
                         profile=self.profile, N_max=check_int("N_max", self.N_max), max_dim=d)
        n = rule.n if self.n is None else check_int("n", self.n)
        lam = rule.lam if self.lam is None else check_positive("lam", self.lam)
        H = hyperbolic_cross(n, max_dim=min(n, d))
        u = np.array([intrinsic_weight(params, nu) for nu in H])
        self.coef_ = reconstruct_cs(SampleSet(X, Y), H, u, lam, params, tol=self.tol,
                                    max_iters=check_int("max_iters", self.max_iters))
        self.index_set_ = H
        self.rule_ = rule
        self.lambda_ = lam
        self.n_iter_ = self.coef_.meta["iters"]
        self.n_features_in_ = d
        return self
