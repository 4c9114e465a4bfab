import itertools
import json

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holorecon.approx import compute_coeffs
from holorecon.bounds import Anisotropy, coeff_bound
from holorecon.indices import IndexSet, MultiIndex, Permutation
from holorecon.jacobi import JacobiParams, sample_points
from holorecon.models import (
    KINDS,
    HoloModel,
    eval_model,
    eval_model_complex,
    estimate_region_sup,
    make_model,
    normalize_to_class,
)
from oracles import reciprocal_coeffs

LEG = JacobiParams.legendre()
B1 = Anisotropy((1.0,))


def legendre_q_coeffs(model, nmax):
    # scale / (theta - zeta y) = (scale / zeta) / (x - y) with x = theta / zeta
    mpmath.mp.dps = 40
    s, z, th = model.scale[0], model.zeta[0, 0], model.theta[0]
    x = mpmath.mpf(th) / mpmath.mpf(z)
    return np.array([float(s / z * mpmath.sqrt(2 * n + 1) * mpmath.legenq(n, 0, x, type=3).real)
                     for n in range(nmax + 1)])


class TestMakeModel:
    def test_univariate(self):
        f = make_model("reciprocal-affine", B1)
        assert f.d == 1 and f.K == 1
        assert f.theta[0] == pytest.approx(1.0 + 1.0 + 0.1)
        assert eval_model(f, np.zeros(1))[0] == pytest.approx(f.scale[0] / f.theta[0])

    def test_eval_examples(self):
        f = HoloModel("reciprocal-affine", np.array([[1.0]]), np.array([2.0]), np.array([1.0]))
        assert eval_model(f, np.array([1.0]))[0] == pytest.approx(1.0)
        assert eval_model(f, np.array([-1.0]))[0] == pytest.approx(1 / 3)

    def test_pole_guard(self):
        f = HoloModel("reciprocal-affine", np.array([[1.0]]), np.array([1.0]), np.array([1.0]))
        with pytest.raises(FloatingPointError):
            eval_model(f, np.array([1.0]))

    def test_rejections(self):
        with pytest.raises(ValueError):
            make_model("reciprocal-affine", Anisotropy((0.0, 0.0)))
        with pytest.raises(ValueError):
            make_model("rational", B1)

    @pytest.mark.parametrize("kind", KINDS)
    def test_json_round_trip(self, kind):
        f = make_model(kind, Anisotropy.algebraic(4), rng=np.random.default_rng(0), K=3)
        g = HoloModel.from_dict(json.loads(f.to_json()))
        y = sample_points(LEG, 4, 20, np.random.default_rng(1))
        assert np.array_equal(f(y), g(y))
        assert f(y).shape == (20, 3)

    @pytest.mark.parametrize("kind", KINDS)
    def test_no_pole_on_region(self, kind):
        # the denominators stay positive on random budget-boundary points
        b = Anisotropy.algebraic(5)
        f = make_model(kind, b, rng=np.random.default_rng(2), K=2)
        assert np.isfinite(estimate_region_sup(f, b, 3000, np.random.default_rng(3)))


class TestCoefficients:
    def test_legendre_q_oracle(self):
        f = normalize_to_class(make_model("reciprocal-affine", B1), B1)
        ref = legendre_q_coeffs(f, 20)
        Lam = IndexSet([MultiIndex.unit(1, e) if e else MultiIndex.zero() for e in range(21)])
        for n in (40, 60):
            c = compute_coeffs(f, Lam, LEG, nodes_per_dim=n)
            assert np.allclose([c[nu][0] for nu in Lam], ref, atol=1e-9, rtol=0)

    def test_exact_and_legendre_q_agree(self):
        f = normalize_to_class(make_model("reciprocal-affine", B1), B1)
        nus = [MultiIndex.unit(1, e) if e else MultiIndex.zero() for e in range(31)]
        ex = reciprocal_coeffs(f.zeta[0], f.theta[0], f.scale[0], nus, 1)
        assert np.allclose(ex, legendre_q_coeffs(f, 30), rtol=1e-11, atol=0)

    def test_bound_soundness_2d(self):
        b = Anisotropy((1.0, 0.25))
        f = normalize_to_class(make_model("reciprocal-affine", b), b)
        nus = [MultiIndex.from_dense(v) for v in itertools.product(range(21), repeat=2) if max(v) <= 20]
        ex = reciprocal_coeffs(f.zeta[0], f.theta[0], f.scale[0], nus, 2)
        d = np.array([coeff_bound(b, nu).d for nu in nus])
        assert np.all(np.abs(ex) <= d)


@pytest.mark.parametrize("bv,sound", [(0.2, True), (0.1, True), (0.05, False), (0.01, False)])
def test_bound_small_anisotropy(bv, sound):
    # the nu_k = 1 factor 2/(rho-1)^2 decays faster than the true 1/rho, so the
    # bound breaks once the admissible rho is large (tiny b)
    b = Anisotropy((bv,))
    f = normalize_to_class(make_model("reciprocal-affine", b), b, rng=np.random.default_rng(0))
    nus = [MultiIndex.unit(1, e) if e else MultiIndex.zero() for e in range(21)]
    ex = np.abs(reciprocal_coeffs(f.zeta[0], f.theta[0], f.scale[0], nus, 1))
    d = np.array([coeff_bound(b, nu).d for nu in nus])
    assert bool(np.all(ex <= d)) == sound

class TestNormalize:
    def test_real_sup(self):
        b = Anisotropy.algebraic(6)
        f = normalize_to_class(make_model("reciprocal-affine", b), b)
        y = sample_points(LEG, 6, 10**4, np.random.default_rng(0))
        assert np.abs(f(y)).max() <= 1.0
        assert f.meta["sup_is_estimate"] and f.meta["normalized"]

    @pytest.mark.parametrize("kind", KINDS)
    def test_sample_count_stability(self, kind):
        b = Anisotropy.algebraic(8)
        f = make_model(kind, b, rng=np.random.default_rng(4), K=2)
        s1 = normalize_to_class(f, b, 2000, np.random.default_rng(5)).scale
        s2 = normalize_to_class(f, b, 4000, np.random.default_rng(6)).scale
        assert np.all(np.abs(s1 / s2 - 1) < 0.02)

    def test_scale_invariance(self):
        b = Anisotropy.algebraic(4)
        f = make_model("product-reciprocal", b)
        f2 = HoloModel(f.kind, f.zeta, f.theta, 2 * f.scale, f.c, f.margin)
        g1 = normalize_to_class(f, b, rng=np.random.default_rng(7))
        g2 = normalize_to_class(f2, b, rng=np.random.default_rng(7))
        y = sample_points(LEG, 4, 50, np.random.default_rng(8))
        assert np.allclose(g1(y), g2(y), rtol=1e-12)

    def test_sup_is_exact_for_reciprocal(self):
        # the worst point is the real corner, where |f| = scale / margin
        b = Anisotropy.algebraic(10)
        f = make_model("reciprocal-affine", b)
        assert estimate_region_sup(f, b) == pytest.approx(f.scale[0] / f.margin, rel=1e-9)


@settings(max_examples=25)
@given(st.permutations([1, 2, 3, 4]), st.integers(0, 2**31 - 1))
def test_permutation_covariance(images, seed):
    pi = Permutation.from_images(images)
    b = Anisotropy((1.0, 0.5, 0.25, 0.125))
    bp = Anisotropy(tuple(pi.apply_sequence(b.b, 0.0)))
    f, fp = make_model("reciprocal-affine", b), make_model("reciprocal-affine", bp)
    y = np.random.default_rng(seed).uniform(-1, 1, (5, 4))
    assert np.allclose(fp(pi.apply_points(y)), f(y), rtol=1e-13)


def test_complex_matches_real():
    f = make_model("exponential-affine", Anisotropy.algebraic(3))
    y = np.random.default_rng(0).uniform(-1, 1, (4, 3))
    assert np.allclose(eval_model_complex(f, y.astype(complex)).real, f(y))
