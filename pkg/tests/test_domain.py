import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zksolver.domain import (DomainSpec, PhysicalField, SpectralField, boundary_trace,
                             build_domain, enforce_real, forward_transform, inverse_transform,
                             mode_field, project_dealias, random_field, x_mean)
from zksolver.functionals import l2_norm
from zksolver.quadrature import QuadGrid


class TestDomainSpec:
    def test_defaults(self):
        spec = DomainSpec()
        assert spec.shape == (64, 32)

    def test_d_out_of_range(self):
        with pytest.raises(ValueError, match="d out of range"):
            DomainSpec(d=3)

    def test_odd_nx_rejected(self):
        with pytest.raises(ValueError, match="Nx must be even"):
            DomainSpec(Nx=15)

    @pytest.mark.parametrize("kw", [{"Nx": 6}, {"Nt1": 4}, {"d": 2, "Nt2": 6}])
    def test_coarse_rejected(self, kw):
        with pytest.raises(ValueError, match=">= 8"):
            DomainSpec(**kw)

    def test_nt2_ignored_for_d1(self):
        assert DomainSpec(d=1, Nt2=2).shape == (64, 32)

    def test_unknown_bc(self):
        with pytest.raises(ValueError, match="transverse_bc"):
            DomainSpec(transverse_bc="neumann")

    def test_frozen(self):
        with pytest.raises(Exception):
            DomainSpec().Nx = 8


class TestBuildDomain:
    def test_small_tables(self):
        b = build_domain(DomainSpec(d=1, Nx=8, Nt1=8))
        assert sorted(b.xi / (2 * np.pi)) == [-3, -2, -1, 0, 1, 2, 3, 4]
        assert b.xi[4] == pytest.approx(8 * np.pi)  # Nyquist
        np.testing.assert_array_equal(b.axes[0].index, np.arange(1, 9))

    def test_shape_3d(self):
        assert build_domain(DomainSpec(d=2, Nx=16, Nt1=8, Nt2=8)).shape == (16, 8, 8)

    def test_grid_coordinates(self):
        b = build_domain(DomainSpec(d=1, Nx=8, Nt1=8))
        x, y = b.grid()
        assert x.shape == y.shape == (8, 8)
        assert np.all((y > -np.pi / 2) & (y < np.pi / 2))
        assert np.all((x >= 0) & (x < 1))

    def test_dirichlet_modes_vanish_at_walls(self):
        b = build_domain(DomainSpec(d=1, Nx=8, Nt1=8))
        ax = b.axes[0]
        for s in (0.0, np.pi):
            assert np.max(np.abs(ax.synth_matrix(np.array([s]), "sin"))) < 1e-14
            # phi'' = -n^2 phi also vanishes
            assert np.max(np.abs(ax.mu ** 2 * ax.synth_matrix(np.array([s]), "sin"))) < 1e-12

    def test_periodic_wavenumbers_even(self):
        b = build_domain(DomainSpec(d=1, Nx=8, Nt1=8, transverse_bc="periodic"))
        assert np.all(b.axes[0].mu % 2 == 0)


class TestTransforms:
    def test_one_hot_forward(self):
        b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        x, y = b.grid()
        u = forward_transform(PhysicalField(np.cos(2 * np.pi * x) * np.cos(y), b))
        expected = np.zeros(b.shape)
        expected[1, 0] = expected[-1, 0] = 0.5
        np.testing.assert_allclose(u.coeffs, expected, atol=1e-15)

    def test_one_hot_inverse(self):
        b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        x, y = b.grid()
        v = inverse_transform(mode_field(b, 1, 1)).values
        np.testing.assert_allclose(v, np.cos(2 * np.pi * x) * np.cos(y), atol=1e-15)

    def test_zero(self, basis):
        u = forward_transform(PhysicalField(np.zeros(basis.shape), basis))
        assert not np.any(u.coeffs)
        assert not np.any(inverse_transform(u).values)

    def test_shape_mismatch(self, basis):
        with pytest.raises(ValueError, match="does not match"):
            PhysicalField(np.zeros((3, 3)), basis)
        with pytest.raises(ValueError, match="does not match"):
            SpectralField(np.zeros((3, 3)), basis)

    def test_round_trip(self, basis, rng):
        v = rng.standard_normal(basis.shape)
        back = inverse_transform(forward_transform(PhysicalField(v, basis))).values
        assert np.max(np.abs(back - v)) <= 1e-12 * np.max(np.abs(v))

    def test_parseval(self, basis, rng):
        u = random_field(basis, rng)
        grid = QuadGrid(basis, 2)
        quad = grid.integrate(grid.values(u) ** 2)
        assert abs(quad - l2_norm(u) ** 2) <= 1e-12 * quad

    def test_fields_immutable(self, basis):
        u = SpectralField.zeros(basis)
        with pytest.raises(ValueError):
            u.coeffs[0] = 1.0

    def test_conjugate_symmetry(self, basis, rng):
        u = random_field(basis, rng)
        np.testing.assert_allclose(u.coeffs, np.conj(u.coeffs[basis.conj_index]), atol=0)
        if basis.spec.transverse_bc == "dirichlet":
            # transverse coefficients real: the k=0 slice is real
            assert np.max(np.abs(u.coeffs[0].imag)) == 0.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), cfg=st.sampled_from(range(4)))
def test_round_trip_property(seed, cfg):
    from conftest import CONFIGS

    b = build_domain(CONFIGS[cfg])
    u = random_field(b, np.random.default_rng(seed))
    back = forward_transform(inverse_transform(u))
    assert np.max(np.abs(back.coeffs - u.coeffs)) <= 1e-12 * np.max(np.abs(u.coeffs))


class TestDealias:
    def test_low_mode_unchanged(self):
        b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        u = mode_field(b, 1, 1)
        np.testing.assert_array_equal(project_dealias(u).coeffs, u.coeffs)

    def test_nyquist_zeroed(self):
        b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        c = np.zeros(b.shape, dtype=complex)
        c[8, 0] = 1.0
        assert not np.any(project_dealias(SpectralField(c, b)).coeffs)

    def test_top_transverse_zeroed(self):
        b = build_domain(DomainSpec(d=1, Nx=16, Nt1=9))
        assert not np.any(project_dealias(mode_field(b, 0, 9)).coeffs)
        assert np.any(project_dealias(mode_field(b, 0, 6)).coeffs)

    def test_contraction(self, basis, rng):
        u = random_field(basis, rng)
        assert l2_norm(project_dealias(u)) <= l2_norm(u)

    def test_idempotent(self, basis, rng):
        u = project_dealias(random_field(basis, rng))
        np.testing.assert_array_equal(project_dealias(u).coeffs, u.coeffs)


class TestBoundaryTrace:
    def setup_method(self):
        self.b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        self.u = mode_field(self.b, 1, 1)

    def test_dirichlet_face_zero(self):
        for face in ("y+", "y-"):
            for order in (0, 2):
                assert np.max(np.abs(boundary_trace(self.u, face, order))) == 0.0

    def test_dirichlet_odd_orders_nonzero(self):
        # u_y = -cos(2 pi x) sin(y) = +-cos(2 pi x) at the walls
        x = self.b.x
        np.testing.assert_allclose(boundary_trace(self.u, "y+", 1), -np.cos(2 * np.pi * x),
                                   atol=1e-14)

    def test_periodic_in_x(self, basis, rng):
        u = random_field(basis, rng)
        for order in range(4):
            a = boundary_trace(u, "x0", order)
            b = boundary_trace(u, "x1", order)
            assert np.max(np.abs(a - b)) <= 1e-10 * max(1.0, np.max(np.abs(a)))

    def test_x_derivative_trace(self):
        # d/dx cos(2 pi x) cos(y) = 0 at x = 0 and x = 1
        for face in ("x0", "x1"):
            assert np.max(np.abs(boundary_trace(self.u, face, 1))) < 1e-13

    def test_laplacian_jump_zero(self, rng):
        from zksolver.operators import diff

        u = random_field(self.b, rng)
        lap = diff(u, "x", 2) + diff(u, "y", 2)
        assert np.max(np.abs(boundary_trace(lap, "x1") - boundary_trace(lap, "x0"))) < 1e-9

    def test_every_basis_element_satisfies_bcs(self):
        from zksolver.verifier import basis_elements

        for u in basis_elements(self.b):
            for face in ("y-", "y+"):
                assert np.max(np.abs(boundary_trace(u, face, 0))) == 0.0
                assert np.max(np.abs(boundary_trace(u, face, 2))) == 0.0

    def test_face_inconsistent_with_d(self):
        with pytest.raises(ValueError, match="inconsistent"):
            boundary_trace(self.u, "z+")

    def test_order_limit(self):
        with pytest.raises(ValueError):
            boundary_trace(self.u, "y+", 4)

    def test_z_faces_3d(self, rng):
        b = build_domain(DomainSpec(d=2, Nx=16, Nt1=8, Nt2=8))
        u = random_field(b, rng)
        assert np.max(np.abs(boundary_trace(u, "z-"))) == 0.0


class TestFields:
    def test_x_mean_examples(self):
        b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        assert not np.any(x_mean(mode_field(b, 1, 1)))
        np.testing.assert_array_equal(x_mean(mode_field(b, 0, 1)), np.eye(8)[0])

    def test_x_mean_linear(self, basis, rng):
        u, v = random_field(basis, rng), random_field(basis, rng)
        np.testing.assert_allclose(x_mean(u + v), x_mean(u) + x_mean(v), atol=1e-15)

    def test_mode_field_out_of_span(self):
        b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        with pytest.raises(ValueError):
            mode_field(b, 8, 1)
        with pytest.raises(ValueError):
            mode_field(b, 1, 9)

    def test_enforce_real_idempotent(self, basis, rng):
        c = rng.standard_normal(basis.shape) + 1j * rng.standard_normal(basis.shape)
        once = enforce_real(c, basis)
        np.testing.assert_allclose(enforce_real(once, basis), once, atol=1e-15)

    def test_random_field_seeded(self, basis):
        a = random_field(basis, np.random.default_rng(5))
        b = random_field(basis, np.random.default_rng(5))
        np.testing.assert_array_equal(a.coeffs, b.coeffs)

    def test_random_field_excludes_nyquist(self, basis, rng):
        u = random_field(basis, rng)
        assert not np.any(u.coeffs[~basis.span_mask])
