"""Weights, gradient-structure checker, regime classification, nonlinearity."""

from fractions import Fraction

import numpy as np
import pytest

from wnls.errors import DivergedFieldError, InvalidCouplingError, InvalidParamsError
from wnls.grid import Field, FieldPair, SpectralGrid, quadrature
from wnls.model import (
    MonomialPair,
    RegimeLabel,
    SystemParams,
    check_weighted_gradient,
    classify_regime,
    critical_regularity,
    derive_weights,
    nonlinearity,
    potential_density,
    weights_for,
)

from conftest import gaussian_field


class TestSystemParams:
    def test_rejects_negative_exponents(self):
        with pytest.raises(InvalidParamsError):
            SystemParams(3, -1.0, 0.0, 1.0, 1.0)

    def test_rejects_sign_mismatch(self):
        with pytest.raises(InvalidParamsError):
            SystemParams(3, 1.0, 1.0, 1.0, -1.0)

    def test_sign_mismatch_override(self):
        p = SystemParams(3, 1.0, 1.0, 1.0, -1.0, allow_sign_mismatch=True)
        assert not p.is_defocusing and not p.is_focusing

    def test_linear_params_allowed(self):
        p = SystemParams(3, 0.0, 0.0, 0.0, 0.0)
        assert p.is_linear


class TestDeriveWeights:
    def test_paper_values(self):
        w = derive_weights(SystemParams(3, 0.0, 2.0, 1.0, 1.0))
        assert (w.c1, w.c2) == (1.0, 2.0)
        assert w.g_exponents == (1.0, 2.0)  # G = w z^2

    def test_critical_point_values(self):
        w = derive_weights(SystemParams(4, 0.0, 0.0, 1.0, 1.0))
        assert (w.c1, w.c2) == (1.0, 1.0)
        assert w.g_exponents == (1.0, 1.0)  # G = w z

    def test_sign_propagation(self):
        w = derive_weights(SystemParams(3, 2.0, 2.0, -1.0, -1.0))
        assert (w.c1, w.c2) == (-2.0, -2.0)

    def test_zero_coupling_rejected(self):
        with pytest.raises(InvalidCouplingError):
            derive_weights(SystemParams(3, 1.0, 1.0, 0.0, 0.0))

    def test_linear_fallback_weights(self):
        w = weights_for(SystemParams(3, 0.0, 0.0, 0.0, 0.0))
        assert (w.c1, w.c2) == (1.0, 1.0)


class TestGradientChecker:
    def test_paper_family_always_yes(self):
        m = MonomialPair(Fraction(1), Fraction(5, 2), Fraction(3), Fraction(1, 2))
        res = check_weighted_gradient(m, 2, 3)
        assert res.is_gradient
        assert res.a == Fraction(3, 4)  # (1+2)/(2*2)
        assert res.b == Fraction(5, 12)  # (1/2+2)/(2*3)
        ((coeff, pw, qz),) = res.potential
        assert (coeff, pw, qz) == (1, Fraction(3, 2), Fraction(5, 4))

    def test_cross_cubic_rejected(self):
        # |v|^3 u, |u|^3 v carries no weighted potential
        res = check_weighted_gradient(MonomialPair(0, 3, 3, 0))
        assert not res.is_gradient
        assert "monomial" in res.reason

    def test_cross_quadratic_accepted(self):
        res = check_weighted_gradient(MonomialPair(0, 2, 2, 0))
        assert res.is_gradient
        ((coeff, pw, qz),) = res.potential
        assert (pw, qz) == (1, 1)  # G proportional to w z

    def test_cross_family_exhaustive(self):
        # |v|^p u, |u|^q v is a weighted gradient system only at p=q=2
        for p in range(1, 7):
            for q in range(1, 7):
                res = check_weighted_gradient(MonomialPair(0, p, q, 0))
                assert res.is_gradient == (p == 2 and q == 2), (p, q)

    def test_decoupled_monomials_accepted(self):
        # f depends only on |u|, g only on |v|: independent potentials exist
        res = check_weighted_gradient(MonomialPair(2, 0, 0, 2))
        assert res.is_gradient
        assert len(res.potential) == 2

    def test_degenerate_weight_rejected(self):
        # f = lam |u|^2 (w only) but g mixes both: compatibility forces b=0
        res = check_weighted_gradient(MonomialPair(2, 0, 2, 2))
        assert not res.is_gradient
        assert "degenerate" in res.reason

    def test_mismatched_monomials_rejected(self):
        res = check_weighted_gradient(MonomialPair(0, 2, 2, 2))
        assert not res.is_gradient
        assert "monomial" in res.reason

    def test_random_rational_family(self):
        # canonical family (alpha, beta+2, alpha+2, beta) with rational data
        rng = np.random.default_rng(42)
        for _ in range(100):
            alpha = Fraction(int(rng.integers(0, 12)), int(rng.integers(1, 5)))
            beta = Fraction(int(rng.integers(0, 12)), int(rng.integers(1, 5)))
            lam = Fraction(int(rng.integers(1, 9)), int(rng.integers(1, 7)))
            mu = Fraction(int(rng.integers(1, 9)), int(rng.integers(1, 7)))
            if rng.integers(0, 2):
                lam, mu = -lam, -mu
            res = check_weighted_gradient(
                MonomialPair(alpha, beta + 2, alpha + 2, beta), lam, mu
            )
            assert res.is_gradient
            assert res.a == (alpha + 2) / (2 * lam)
            assert res.b == (beta + 2) / (2 * mu)
            ((coeff, pw, qz),) = res.potential
            assert coeff == 1
            assert pw == (alpha + 2) / 2
            assert qz == (beta + 2) / 2

    def test_checker_matches_derive_weights(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            alpha = Fraction(int(rng.integers(0, 8)), 2)
            beta = Fraction(int(rng.integers(0, 8)), 2)
            lam = Fraction(int(rng.integers(1, 6)))
            mu = Fraction(int(rng.integers(1, 6)))
            res = check_weighted_gradient(
                MonomialPair(alpha, beta + 2, alpha + 2, beta), lam, mu
            )
            w = derive_weights(
                SystemParams(3, float(alpha), float(beta), float(lam), float(mu))
            )
            assert float(res.a) == pytest.approx(w.c1, rel=1e-15)
            assert float(res.b) == pytest.approx(w.c2, rel=1e-15)

    def test_zero_couplings_rejected(self):
        with pytest.raises(InvalidCouplingError):
            check_weighted_gradient(MonomialPair(0, 2, 2, 0), 0, 1)


class TestGradientCheckerMulticomponent:
    def test_three_component_from_known_potential(self):
        # rows built from G = w1^2 w2 w3: f1 ~ |u1|^2|u2|^2|u3|^2,
        # f2 ~ |u1|^4|u3|^2, f3 ~ |u1|^4|u2|^2
        from wnls.model import check_weighted_gradient_m

        res = check_weighted_gradient_m([(2, 2, 2), (4, 0, 2), (4, 2, 0)])
        assert res.is_gradient
        assert res.weights == (2, 1, 1)
        ((value, key),) = res.potential
        assert value == 1 and key == (2, 1, 1)

    def test_three_component_mismatch_rejected(self):
        from wnls.model import check_weighted_gradient_m

        res = check_weighted_gradient_m([(2, 2, 2), (4, 0, 2), (4, 4, 0)])
        assert not res.is_gradient

    def test_two_decoupled_blocks(self):
        # components (1,2) and (3,4) couple pairwise like the p=q=2 system
        from wnls.model import check_weighted_gradient_m

        res = check_weighted_gradient_m(
            [(0, 2, 0, 0), (2, 0, 0, 0), (0, 0, 0, 2), (0, 0, 2, 0)]
        )
        assert res.is_gradient
        keys = {key for _, key in res.potential}
        assert keys == {(1, 1, 0, 0), (0, 0, 1, 1)}

    def test_couplings_scale_weights(self):
        from wnls.model import check_weighted_gradient_m

        res = check_weighted_gradient_m([(1, 3), (3, 1)], [Fraction(2), Fraction(4)])
        # the two-component wrapper must agree
        pair_res = check_weighted_gradient(MonomialPair(1, 3, 3, 1), 2, 4)
        assert res.is_gradient and pair_res.is_gradient
        assert res.weights == (pair_res.a, pair_res.b)

    def test_degenerate_cross_dependency(self):
        from wnls.model import check_weighted_gradient_m

        # f1 depends only on w1 but f2 mixes both: forces a zero weight
        res = check_weighted_gradient_m([(2, 0), (2, 2)])
        assert not res.is_gradient
        assert "degenerate" in res.reason


class TestRegime:
    def test_critical_line_midpoint(self):
        r = classify_regime(SystemParams(3, 1.0, 1.0, 1.0, 1.0))
        assert r.label is RegimeLabel.CRITICAL_LINE
        assert r.s_c == pytest.approx(1.0, abs=1e-15)

    def test_supercritical_value(self):
        r = classify_regime(SystemParams(3, 1.0, 3.0, 1.0, 1.0))
        assert r.label is RegimeLabel.SUPERCRITICAL
        assert r.s_c == pytest.approx(7.0 / 6.0, abs=1e-15)

    def test_critical_point_d4(self):
        r = classify_regime(SystemParams(4, 0.0, 0.0, 1.0, 1.0))
        assert r.label is RegimeLabel.CRITICAL_POINT
        assert r.s_c == pytest.approx(1.0, abs=1e-15)

    def test_endpoints(self):
        for ab in ((0.0, 2.0), (2.0, 0.0)):
            r = classify_regime(SystemParams(3, *ab, 1.0, 1.0))
            assert r.label is RegimeLabel.CRITICAL_LINE_ENDPOINT

    def test_subcritical(self):
        r = classify_regime(SystemParams(3, 0.5, 1.0, 1.0, 1.0))
        assert r.label is RegimeLabel.SUBCRITICAL

    def test_outside_scope_dimensions(self):
        for d in (1, 2, 5):
            r = classify_regime(SystemParams(d, 1.0, 1.0, 1.0, 1.0))
            assert r.label is RegimeLabel.OUTSIDE_PAPER_SCOPE

    def test_coupling_magnitude_invariance(self):
        # only signs, alpha, beta, d decide the label
        for scale in (1e-6, 1.0, 1e6):
            a = classify_regime(SystemParams(3, 1.5, 0.5, scale, scale))
            b = classify_regime(SystemParams(3, 1.5, 0.5, 1.0, 1.0))
            assert a.label is b.label

    def test_sc_monotone_in_total_exponent(self):
        values = [critical_regularity(3, t / 2, t / 2) for t in range(0, 12)]
        assert all(x < y for x, y in zip(values, values[1:]))

    def test_sc_is_one_on_critical_line(self):
        for alpha in (0.0, 0.5, 1.0, 1.7, 2.0):
            assert critical_regularity(3, alpha, 2.0 - alpha) == pytest.approx(1.0, abs=1e-15)


class TestNonlinearity:
    def setup_method(self):
        self.g = SpectralGrid(1, 32, 8.0)

    def field(self, value):
        return Field(self.g, np.full(self.g.shape, value, dtype=complex))

    def test_zero_state(self):
        p = SystemParams(1, 1.0, 1.0, 1.0, 1.0)
        s = FieldPair(self.field(0), self.field(0))
        out = nonlinearity(p, s)
        assert np.all(out.u.data == 0) and np.all(out.v.data == 0)

    def test_vanishing_component(self):
        p = SystemParams(1, 0.0, 1.0, 1.0, 1.0)  # beta > 0
        s = FieldPair(self.field(1.0), self.field(0.0))
        out = nonlinearity(p, s)
        assert np.all(out.u.data == 0) and np.all(out.v.data == 0)
        assert np.all(np.isfinite(out.u.data.real))

    def test_unit_constants(self):
        p = SystemParams(1, 1.5, 0.5, 1.0, 1.0)
        s = FieldPair(self.field(1.0), self.field(1.0))
        out = nonlinearity(p, s)
        assert np.allclose(out.u.data, 1.0) and np.allclose(out.v.data, 1.0)

    def test_monomial_values(self):
        p = SystemParams(1, 1.0, 0.0, 2.0, -0.0 + 3.0)
        u, v = self.field(2.0), self.field(1j * 3.0)
        out = nonlinearity(p, FieldPair(u, v))
        # lam |u|^1 |v|^2 u = 2 * 2 * 9 * 2 = 72; mu |u|^3 |v|^0 v = 3*8*3i = 72i
        assert np.allclose(out.u.data, 72.0)
        assert np.allclose(out.v.data, 72.0j)

    def test_non_finite_rejected(self):
        p = SystemParams(1, 0.0, 0.0, 1.0, 1.0)
        bad = self.field(1.0)
        bad.data[5] = np.inf
        with pytest.raises(DivergedFieldError):
            nonlinearity(p, FieldPair(bad, self.field(1.0)))


class TestPotentialDensity:
    def test_zero_and_unit(self):
        g = SpectralGrid(1, 32, 8.0)
        p = SystemParams(1, 1.0, 2.0, 1.0, 1.0)
        zero = FieldPair(Field(g, np.zeros(32)), Field(g, np.zeros(32)))
        assert np.all(potential_density(p, zero).data == 0)
        one = FieldPair(Field(g, np.ones(32)), Field(g, np.ones(32)))
        assert np.allclose(potential_density(p, one).data, 1.0)

    def test_gaussian_integral(self):
        # u = exp(-x^2), v = exp(-2x^2), alpha=beta=0:
        # int |u|^2 |v|^2 = int exp(-2x^2) exp(-4x^2) = sqrt(pi/6)
        g = SpectralGrid(1, 256, 16.0)
        p = SystemParams(1, 0.0, 0.0, 1.0, 1.0)
        s = FieldPair(gaussian_field(g, a=1.0), gaussian_field(g, a=2.0))
        val = quadrature(g, potential_density(p, s).data)
        assert val == pytest.approx(np.sqrt(np.pi / 6.0), rel=1e-10)
