import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zksolver.domain import (COS, DomainSpec, SpectralField, build_domain, inverse_transform,
                             mode_field, modal_inner, project_dealias, random_field)
from zksolver.functionals import seminorm2_sq
from zksolver.forcing import ForcingSpec
from zksolver.operators import SolverParams, diff, linear_symbol, nonlinear_term, rhs


@pytest.fixture
def b16():
    return build_domain(DomainSpec(d=1, Nx=16, Nt1=16))


class TestSolverParams:
    def test_defaults(self):
        p = SolverParams()
        assert p.epsilon == 0.0 and p.dealias
        assert p.forcing == ForcingSpec()

    @pytest.mark.parametrize("kw,msg", [
        ({"epsilon": -1.0}, "epsilon must be >= 0"),
        ({"c": 0.0}, "c must be > 0"),
        ({"dt": 0.0}, "dt must be > 0"),
        ({"T": -1.0}, "T must be > 0"),
        ({"dt": 2.0, "T": 1.0}, "dt must be smaller than T"),
        ({"epsilon": float("nan")}, "epsilon"),
    ])
    def test_rejects(self, kw, msg):
        with pytest.raises(ValueError, match=msg):
            SolverParams(**kw)

    def test_zero_epsilon_allowed(self):
        assert SolverParams(epsilon=0.0).epsilon == 0.0


class TestDiff:
    def test_x_first(self, b16):
        x, y = b16.grid()
        v = inverse_transform(diff(mode_field(b16, 1, 1), "x", 1)).values
        np.testing.assert_allclose(v, -2 * np.pi * np.sin(2 * np.pi * x) * np.cos(y), atol=1e-12)

    def test_x_fourth(self, b16):
        u = mode_field(b16, 1, 1)
        np.testing.assert_allclose(diff(u, "x", 4).coeffs, (2 * np.pi) ** 4 * u.coeffs, rtol=1e-14)

    def test_y_second_eigenfunction(self, b16):
        u = mode_field(b16, 0, 1)  # cos(y)
        np.testing.assert_allclose(diff(u, "y", 2).coeffs, -u.coeffs, atol=0)

    def test_y_odd_flags_companion_basis(self, b16):
        x, y = b16.grid()
        du = diff(mode_field(b16, 0, 1), "y", 1)
        assert du.kinds == (COS,)
        np.testing.assert_allclose(inverse_transform(du).values, -np.sin(y), atol=1e-14)

    def test_y_third_back_in_cos(self, b16):
        assert diff(mode_field(b16, 1, 2), "y", 3).kinds == (COS,)
        assert diff(diff(mode_field(b16, 1, 2), "y", 1), "y", 1).kinds == ("sin",)

    def test_order_bounds(self, b16):
        u = mode_field(b16, 1, 1)
        with pytest.raises(ValueError, match="order"):
            diff(u, "x", 5)
        with pytest.raises(ValueError, match="order"):
            diff(u, "x", 0)

    def test_axis_for_dimension(self, b16):
        with pytest.raises(ValueError, match="axis"):
            diff(mode_field(b16, 1, 1), "z", 1)

    def test_periodic_derivative(self):
        b = build_domain(DomainSpec(d=1, Nx=16, Nt1=16, transverse_bc="periodic"))
        x, y = b.grid()
        s = y + np.pi / 2
        v = inverse_transform(diff(mode_field(b, 1, 1), "y", 1)).values
        np.testing.assert_allclose(v, -2 * np.cos(2 * np.pi * x) * np.sin(2 * s), atol=1e-12)

    def test_commute(self, basis, rng):
        u = random_field(basis, rng)
        a = diff(diff(u, "x", 1), "y", 2)
        b = diff(diff(u, "y", 2), "x", 1)
        np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-12)


class TestLinearSymbol:
    def test_dispersive_k1n1(self, b16):
        sym = linear_symbol(b16, SolverParams(c=1.0))
        assert sym.dispersive[1, 0] == pytest.approx(-8j * np.pi ** 3, rel=1e-14)

    def test_dispersive_matches_diff_ops(self, b16):
        u = mode_field(b16, 1, 1)
        op = diff(u, "x", 3) + diff(diff(u, "y", 2), "x", 1) + diff(u, "x", 1)
        sym = linear_symbol(b16, SolverParams(c=1.0))
        np.testing.assert_allclose(op.coeffs, sym.dispersive * u.coeffs, atol=1e-10)

    def test_zero_k_no_dispersion(self, b16):
        sym = linear_symbol(b16, SolverParams())
        assert not np.any(sym.dispersive[0])

    def test_regularizing_value(self, b16):
        sym = linear_symbol(b16, SolverParams(epsilon=1e-3))
        assert sym.regularizing[1, 0] == pytest.approx(1e-3 * (16 * np.pi ** 4 + 1), rel=1e-14)

    def test_invariants(self, basis):
        sym = linear_symbol(basis, SolverParams(epsilon=1e-2, c=2.0))
        assert not np.any(sym.dispersive.real)
        quart = basis.bxi() ** 4 + sum(basis.bmu(i) ** 4 for i in range(len(basis.axes)))
        zero_mode = np.broadcast_to(quart == 0, basis.shape)
        assert np.all(sym.regularizing[~zero_mode] > 0)
        assert not np.any(sym.regularizing[zero_mode])
        zero = linear_symbol(basis, SolverParams(epsilon=0.0))
        assert not np.any(zero.regularizing)

    def test_linear_sign(self, b16):
        sym = linear_symbol(b16, SolverParams(epsilon=1e-3))
        np.testing.assert_array_equal(sym.linear, -sym.dispersive - sym.regularizing)

    def test_regularization_dissipative(self, basis, rng):
        eps = 1e-2
        sym = linear_symbol(basis, SolverParams(epsilon=eps))
        u = random_field(basis, rng)
        lu = u.with_coeffs(sym.regularizing * u.coeffs / eps)
        assert modal_inner(lu, u) == pytest.approx(seminorm2_sq(u), rel=1e-13)


def _sine_coeffs_of_cos_sq(n_max):
    """(2/pi) int_0^pi sin(s)^2 sin(n s) ds by Gauss-Legendre quadrature."""
    s, w = np.polynomial.legendre.leggauss(200)
    s = (s + 1) * np.pi / 2
    w = w * np.pi / 2
    n = np.arange(1, n_max + 1)[:, None]
    return (2 / np.pi) * np.sum(w * np.sin(s) ** 2 * np.sin(n * s), axis=1)


class TestNonlinear:
    def test_x_independent_field(self, b16):
        assert np.max(np.abs(nonlinear_term(mode_field(b16, 0, 1)).coeffs)) == 0.0

    def test_single_mode_oracle(self, b16):
        # u u_x = -pi sin(4 pi x) cos(y)^2, projected on sin(n s)
        u = mode_field(b16, 1, 1)
        got = nonlinear_term(u).coeffs
        bn = _sine_coeffs_of_cos_sq(16)
        expected = np.zeros(b16.shape, dtype=complex)
        expected[2] = 0.5j * np.pi * bn
        expected[-2] = -0.5j * np.pi * bn
        expected = expected * b16.dealias_mask
        np.testing.assert_allclose(got, expected, atol=1e-13)

    def test_single_mode_oracle_no_dealias(self, b16):
        got = nonlinear_term(mode_field(b16, 1, 1), dealias=False).coeffs
        bn = _sine_coeffs_of_cos_sq(16)
        np.testing.assert_allclose(got[2], 0.5j * np.pi * bn, atol=1e-13)

    def test_neutral(self, basis, rng):
        u = random_field(basis, rng)
        n = nonlinear_term(u)
        pu = project_dealias(u)
        assert abs(modal_inner(n, u)) <= 1e-13 * np.sqrt(modal_inner(pu, pu) * modal_inner(n, n))

    def test_mean_mode_exactly_zero(self, basis, rng):
        u = random_field(basis, rng)
        assert np.max(np.abs(nonlinear_term(u).coeffs[0])) == 0.0
        assert np.max(np.abs(nonlinear_term(u, dealias=False).coeffs[0])) == 0.0

    def test_output_real_symmetric(self, basis, rng):
        n = nonlinear_term(random_field(basis, rng))
        np.testing.assert_allclose(n.coeffs, np.conj(n.coeffs[basis.conj_index]), atol=1e-15)

    def test_output_dealiased(self, basis, rng):
        n = nonlinear_term(random_field(basis, rng))
        assert not np.any(n.coeffs[~basis.dealias_mask])

    def test_rejects_companion_basis(self, b16):
        with pytest.raises(ValueError, match="admissible"):
            nonlinear_term(diff(mode_field(b16, 1, 1), "y", 1))

    def test_quadratic_scaling(self, basis, rng):
        u = random_field(basis, rng)
        np.testing.assert_allclose(nonlinear_term(u * 3.0).coeffs, 9.0 * nonlinear_term(u).coeffs,
                                   atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), cfg=st.sampled_from(range(4)))
def test_nonlinear_neutral_property(seed, cfg):
    from conftest import CONFIGS

    b = build_domain(CONFIGS[cfg])
    u = random_field(b, np.random.default_rng(seed), dealiased=False)
    n = nonlinear_term(u)
    scale = np.sqrt(modal_inner(project_dealias(u), project_dealias(u)) * modal_inner(n, n))
    assert abs(modal_inner(n, u)) <= 1e-12 * max(scale, 1e-300)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(0.1, 10.0))
def test_skew_property(seed, c):
    b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
    u = random_field(b, np.random.default_rng(seed))
    sym = linear_symbol(b, SolverParams(c=c))
    lu = u.with_coeffs(sym.dispersive * u.coeffs)
    assert abs(np.real(np.sum(b.weights * np.conj(u.coeffs) * lu.coeffs))) <= (
        1e-12 * modal_inner(u, u) * np.max(np.abs(sym.dispersive)))


class TestRhs:
    def test_zero(self, basis):
        z = SpectralField.zeros(basis)
        sym = linear_symbol(basis, SolverParams())
        assert not np.any(rhs(z, z, sym).coeffs)

    def test_linear_only_diagonal(self, b16):
        u = mode_field(b16, 1, 1)
        sym = linear_symbol(b16, SolverParams(epsilon=1e-3))
        out = rhs(u, None, sym, nonlinear=False)
        np.testing.assert_array_equal(out.coeffs, sym.linear * u.coeffs)

    def test_term_by_term(self, b16):
        u = mode_field(b16, 1, 1)
        sym = linear_symbol(b16, SolverParams(c=1.0))
        disp = diff(u, "x", 3) + diff(diff(u, "y", 2), "x", 1) + diff(u, "x", 1)
        expected = -disp.coeffs - nonlinear_term(u).coeffs
        scale = np.max(np.abs(disp.coeffs))
        got = rhs(u, SpectralField.zeros(b16), sym).coeffs
        assert np.max(np.abs(got - expected)) <= 1e-12 * scale

    def test_forcing_added(self, b16):
        u = SpectralField.zeros(b16)
        f = mode_field(b16, 2, 3, amplitude=0.7)
        sym = linear_symbol(b16, SolverParams())
        np.testing.assert_array_equal(rhs(u, f, sym).coeffs, f.coeffs)

    def test_domain_mismatch(self, b16):
        other = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        sym = linear_symbol(other, SolverParams())
        with pytest.raises(ValueError, match="different domains"):
            rhs(mode_field(b16, 1, 1), None, sym)
