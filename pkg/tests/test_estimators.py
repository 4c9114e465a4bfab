import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from holorecon import LeastSquaresPolynomial, SRLassoPolynomial
from holorecon.approx import CoeffField, eval_expansion
from holorecon.indices import hyperbolic_cross
from holorecon.jacobi import JacobiParams, sample_points

LEG = JacobiParams.legendre()


def planted_data(P, S, m, seed, K=1):
    rng = np.random.default_rng(seed)
    c = CoeffField(S, rng.standard_normal((len(S), K)))
    X = sample_points(P, S.max_dim, m, rng)
    return c, X, eval_expansion(c, P, X)


class TestLeastSquares:
    def test_params_round_trip(self):
        est = LeastSquaresPolynomial(b=(1.0, 0.5), epsilon=0.2)
        assert est.get_params()["epsilon"] == 0.2
        est2 = clone(est).set_params(c=2.0)
        assert est2.c == 2.0 and est2.b == (1.0, 0.5)

    def test_fixed_set_exact(self):
        S = hyperbolic_cross(5, max_dim=3)
        c, X, Y = planted_data(LEG, S, 150, 0)
        est = LeastSquaresPolynomial(index_set=S).fit(X, Y[:, 0])
        assert np.allclose(est.coef_.values, c.values, atol=1e-9)
        pred = est.predict(X[:5])
        assert pred.shape == (5,)
        assert est.score(X, Y[:, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_vector_valued(self):
        S = hyperbolic_cross(4, max_dim=2)
        c, X, Y = planted_data(LEG, S, 80, 1, K=3)
        est = LeastSquaresPolynomial(index_set=S).fit(X, Y)
        assert est.predict(X).shape == (80, 3)

    def test_budget_rule(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(-1, 1, (200, 3))
        y = 1.0 / (2.0 - X[:, 0] - 0.25 * X[:, 1])
        est = LeastSquaresPolynomial(b=(1.0, 0.25, 0.1)).fit(X, y)
        assert est.budget_ > 0 and len(est.index_set_) >= 1
        assert est.sigma_min_ > 0
        assert np.sqrt(np.mean((est.predict(X) - y) ** 2)) < 0.05

    def test_needs_set_or_b(self):
        with pytest.raises(ValueError):
            LeastSquaresPolynomial().fit(np.zeros((5, 1)), np.zeros(5))

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            LeastSquaresPolynomial().predict(np.zeros((2, 1)))

    def test_dimension_mismatch(self):
        S = hyperbolic_cross(4, max_dim=3)
        with pytest.raises(ValueError):
            LeastSquaresPolynomial(index_set=S).fit(np.zeros((20, 2)), np.zeros(20))
        _, X, Y = planted_data(LEG, S, 40, 3)
        est = LeastSquaresPolynomial(index_set=S).fit(X, Y)
        with pytest.raises(ValueError):
            est.predict(np.zeros((2, 2)))


class TestSRLasso:
    def test_defaults_and_fit(self):
        P = JacobiParams.uniform(-0.5, -0.5)
        S = hyperbolic_cross(3, max_dim=2)
        c, X, Y = planted_data(P, S, 120, 4)
        est = SRLassoPolynomial(params=P, n=6, tol=1e-10).fit(X, Y[:, 0])
        assert est.lambda_ > 0 and est.n_iter_ >= 1
        got = est.coef_.restrict(S)
        assert np.linalg.norm(got.values - c.values) <= 0.05 * np.linalg.norm(c.values)
        pred = est.predict(X)
        assert np.sqrt(np.mean((pred - Y[:, 0]) ** 2)) < 0.05

    def test_clone_preserves(self):
        est = SRLassoPolynomial(lam=0.3, N_max=100)
        assert clone(est).get_params() == est.get_params()

    def test_bad_params(self):
        X = np.zeros((10, 2))
        with pytest.raises(ValueError):
            SRLassoPolynomial(lam=-1.0).fit(X, np.zeros(10))
        with pytest.raises(ValueError):
            SRLassoPolynomial(epsilon=2.0).fit(X, np.zeros(10))
