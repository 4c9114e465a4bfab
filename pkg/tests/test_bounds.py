import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from holorecon.bounds import (
    Anisotropy,
    bound_objective,
    bound_table,
    bound_table_csv,
    budget,
    coeff_bound,
    grow_known_candidates,
    kappa_rho,
    rearrange,
    select_anchored_set,
    select_set_known,
)
from holorecon.indices import IndexSet, MultiIndex, hyperbolic_cross, is_anchored, is_lower
from holorecon.jacobi import JacobiParams, intrinsic_weight

E = MultiIndex.unit
Z = MultiIndex.zero()
LEG = JacobiParams.legendre()


def oracle_bound(b, nu):
    """Independent d_nu: SLSQP on t = log(rho - 1) for every subset of the support."""
    items = list(nu.items())
    best = 0.0
    for mask in range(1, 2 ** len(items)):
        sub = [items[i] for i in range(len(items)) if mask >> i & 1]

        def obj(t):
            return sum(math.log(e + 1) + (1 - e) * math.log1p(math.exp(ti)) - 2 * ti for ti, (j, e) in zip(t, sub))

        def cons(t):
            return 1 - sum(b[j] * (0.5 * (1 + math.exp(ti) + 1 / (1 + math.exp(ti))) - 1) for ti, (j, e) in zip(t, sub))

        vals = []
        for t0 in (-1.0, 0.0, 1.0):
            r = optimize.minimize(obj, np.full(len(sub), t0), method="SLSQP",
                                  constraints=[{"type": "ineq", "fun": cons}], options={"ftol": 1e-14, "maxiter": 500})
            if cons(r.x) >= -1e-9:
                vals.append(r.fun)
        best = min([best] + vals)
    return math.exp(best)


class TestBudget:
    def test_examples(self):
        assert budget(Anisotropy((1.0,)), {}) == 0.0
        assert budget(Anisotropy((1.0, 0.0)), [3, 1, 1]) == pytest.approx(2 / 3)
        assert budget(Anisotropy((0.5, 0.5)), [3, 3]) == pytest.approx(2 / 3)
        with pytest.raises(ValueError):
            budget(Anisotropy((1.0,)), [0.5])


class TestKappaRho:
    def test_zero(self):
        assert kappa_rho(Anisotropy((1.0, 0.5)), Z) == {}

    def test_single(self):
        rho = kappa_rho(Anisotropy((1.0,)), E(1), d_split=1)
        assert rho[1] == pytest.approx((3 + math.sqrt(5)) / 2)
        assert 0.5 * (rho[1] + 1 / rho[1]) == pytest.approx(1.5)

    @settings(max_examples=60)
    @given(st.lists(st.floats(0.0, 2.0), min_size=1, max_size=6), st.lists(st.integers(0, 5), min_size=1, max_size=6),
           st.integers(0, 6))
    def test_feasible(self, bs, dense, split):
        b = Anisotropy(tuple(bs))
        if b.l1 == 0:
            return
        nu = MultiIndex.from_dense(dense[: len(bs)])
        assert budget(b, kappa_rho(b, nu, split)) <= 1 + 1e-10


class TestCoeffBound:
    def test_zero(self):
        assert coeff_bound(Anisotropy((1.0,)), Z).d == 1.0

    def test_closed_form_1d(self):
        r = 2 + math.sqrt(3)
        ref = 4 / (r**2 * (1 + math.sqrt(3)) ** 2)
        sb = coeff_bound(Anisotropy((1.0, 0.0)), E(1, 3))
        assert sb.d == pytest.approx(ref, rel=1e-12)
        assert sb.rho[1] == pytest.approx(r, rel=1e-10)
        # grid search over the feasible interval
        grid = np.linspace(1 + 1e-6, r, 200_001)
        assert sb.d <= np.min(4 * grid**-2 * (grid - 1) ** -2) * (1 + 1e-9)

    @pytest.mark.parametrize("dense", [(1, 1), (3, 2), (2, 0, 4), (1, 1, 1), (6, 1)])
    def test_matches_oracle(self, dense):
        b = Anisotropy((0.6, 0.3, 0.15))
        nu = MultiIndex.from_dense(dense)
        d = coeff_bound(b, nu).d
        ref = oracle_bound(b, nu)
        assert d <= ref * (1 + 1e-7)
        assert d == pytest.approx(ref, rel=1e-5)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0.01, 2.0), min_size=1, max_size=4), st.lists(st.integers(0, 6), min_size=1, max_size=4))
    def test_dominates_kappa_and_feasible(self, bs, dense):
        b = Anisotropy(tuple(bs))
        nu = MultiIndex.from_dense(dense[: len(bs)])
        sb = coeff_bound(b, nu)
        assert sb.d <= bound_objective(nu, kappa_rho(b, nu)) * (1 + 1e-12)
        assert budget(b, sb.rho) <= 1 + 1e-10
        assert all(r >= 1 for r in sb.rho.values())
        assert sb.d <= 1.0

    def test_capped(self):
        sb = coeff_bound(Anisotropy((1.0, 0.0)), MultiIndex.from_dense((1, 2)))
        assert sb.capped and sb.rho[2] == pytest.approx(1e8)


class TestSelectors:
    b = Anisotropy.algebraic(6)

    def test_k_one(self):
        H = hyperbolic_cross(6, max_dim=6)
        assert list(select_set_known(self.b, LEG, 1.0, H)) == [Z]

    def test_k_large(self):
        H = hyperbolic_cross(4, max_dim=4)
        assert select_set_known(self.b, LEG, 1e9, H) == H

    def test_empty(self):
        with pytest.raises(ValueError):
            select_set_known(self.b, LEG, 4.0, IndexSet())

    @settings(max_examples=30, deadline=None)
    @given(st.floats(1.0, 200.0), st.floats(1.0, 200.0))
    def test_nested_and_budget(self, k1, k2):
        k1, k2 = sorted((k1, k2))
        H = hyperbolic_cross(8, max_dim=6)
        table = bound_table(self.b, LEG, H)
        S1 = select_set_known(self.b, LEG, k1, H, table)
        S2 = select_set_known(self.b, LEG, k2, H, table)
        assert S1.issubset(S2)
        assert sum(intrinsic_weight(LEG, nu) ** 2 for nu in S2) <= k2 * (1 + 1e-12)

    @pytest.mark.parametrize("k", [4.0, 30.0, 150.0])
    def test_grown_candidates_contain_prefix(self, k):
        # the best-first candidates give the same set as a large hyperbolic cross
        cands, table = grow_known_candidates(self.b, LEG, k)
        S = select_set_known(self.b, LEG, k, cands, table)
        H = hyperbolic_cross(24, max_dim=6)
        assert S == select_set_known(self.b, LEG, k, H)
        assert is_lower(S)

    def test_anchored_examples(self):
        H = hyperbolic_cross(8, max_dim=6)
        assert list(select_anchored_set(self.b, LEG, 1, H)) == [Z]
        assert set(select_anchored_set(self.b, LEG, 2, H)) == {Z, E(1)}
        with pytest.raises(ValueError):
            select_anchored_set(self.b, LEG, 2, IndexSet([Z, E(2, 2)]))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 20))
    def test_anchored_random(self, seed, s):
        rng = np.random.default_rng(seed)
        _, b = rearrange(Anisotropy(tuple(rng.uniform(0.01, 1.0, 5))))
        H = hyperbolic_cross(8, max_dim=5)
        table = bound_table(b, LEG, H)
        S = select_anchored_set(b, LEG, s, H, table=table)
        assert is_anchored(S) and len(S) == s
        assert S.issubset(select_anchored_set(b, LEG, s + 1, H, table=table))

    def test_rearrange(self):
        pi, bp = rearrange(Anisotropy((0.1, 0.5, 0.5, 0.2)))
        assert bp.b == (0.5, 0.5, 0.2, 0.1)
        assert [pi(j) for j in range(1, 5)] == [2, 3, 4, 1]

    def test_csv(self):
        H = hyperbolic_cross(3, max_dim=2)
        text = bound_table_csv(H, bound_table(self.b, LEG, H))
        lines = text.splitlines()
        assert lines[0] == "index,d,u,d_over_u,capped_flag"
        assert len(lines) == len(H) + 1 and lines[1].startswith("0,1.0,1.0,1.0,0")
