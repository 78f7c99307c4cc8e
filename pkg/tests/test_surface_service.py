"""Tests for the surface kernel."""

import numpy as np
import pytest

from umbilic_lab.core.exceptions import (
    AxisSingularity,
    DiscriminantNegative,
    StencilOutsideDomain,
)
from umbilic_lab.models import Domain, Jet2, Profile
from umbilic_lab.services import construction_service, surface_service


@pytest.fixture
def sphere_graph():
    """Upper graph of the sphere of curvature 2 over a disk of radius 0.45."""
    return construction_service.comparison_sphere_graph(2.0, 0.45)


class TestCurvatureFormulas:
    """Mean, Gauss and principal curvatures from jets."""

    def test_sphere_graph_is_umbilical(self, sphere_graph):
        """Every point of a sphere graph has H = c and K = c^2."""
        xs = np.array([0.0, 0.1, -0.2, 0.3])
        ys = np.array([0.0, 0.2, 0.1, -0.3])
        H, K = surface_service.mean_gauss_from_jet(sphere_graph.jet(xs, ys))  # noqa: N806
        np.testing.assert_allclose(H, 2.0, rtol=1e-12)
        np.testing.assert_allclose(K, 4.0, rtol=1e-12)

    def test_principal_from_hk_saddle(self):
        """H = 0, K = -1 gives principal curvatures 1 and -1."""
        k1, k2 = surface_service.principal_from_hk(0.0, -1.0)
        assert float(k1) == pytest.approx(1.0)
        assert float(k2) == pytest.approx(-1.0)

    def test_principal_from_hk_clamps_rounding(self):
        """A discriminant just below zero is clamped to an umbilic."""
        k1, k2 = surface_service.principal_from_hk(1.0, 1.0 + 1e-14)
        assert float(k1) == float(k2) == 1.0

    def test_principal_from_hk_rejects_negative_discriminant(self):
        """H^2 < K beyond tolerance is an error."""
        with pytest.raises(DiscriminantNegative):
            surface_service.principal_from_hk(1.0, 2.0)

    def test_shape_operator_of_sphere_is_scalar(self, sphere_graph):
        """The shape operator of a sphere of curvature c is c times the identity."""
        alpha = surface_service.shape_operator(sphere_graph.jet(0.1, 0.2), 0.1, 0.2)
        np.testing.assert_allclose(alpha.matrix, 2.0 * np.eye(2), atol=1e-12)

    def test_shape_operator_trace_and_det(self, quasiminimal):
        """trace = 2H and det = K at generic points."""
        xs = np.array([0.3, -0.5, 0.7])
        ys = np.array([0.4, 0.2, -0.6])
        jet = quasiminimal.jet(xs, ys)
        H, K = surface_service.mean_gauss_from_jet(jet)  # noqa: N806
        alpha = surface_service.shape_operator(jet, xs, ys)
        np.testing.assert_allclose(alpha.trace, 2.0 * H, rtol=1e-10, atol=1e-14)
        np.testing.assert_allclose(alpha.det, K, rtol=1e-10, atol=1e-14)

    def test_shape_operator_eigenvalues_are_principal_curvatures(self):
        """On random jets the shape operator eigenvalues equal kappa1 >= kappa2."""
        rng = np.random.default_rng(7)
        p, q, r, s, t = rng.normal(size=(5, 1000))
        jet = Jet2(p=p, q=q, r=r, s=s, t=t)
        H, K = surface_service.mean_gauss_from_jet(jet)  # noqa: N806
        k1, k2 = surface_service.principal_from_hk(H, K)
        e1, e2 = surface_service.shape_operator(jet).eigenvalues()
        np.testing.assert_allclose(e1, k1, rtol=1e-9, atol=1e-9)
        np.testing.assert_allclose(e2, k2, rtol=1e-9, atol=1e-9)

    def test_rotate_jet_keeps_curvatures(self, quasiminimal):
        """H and K do not depend on the chart rotation."""
        jet = quasiminimal.jet(0.3, 0.4)
        rotated = surface_service.rotate_jet(jet, 0.7)
        H0, K0 = surface_service.mean_gauss_from_jet(jet)  # noqa: N806
        H1, K1 = surface_service.mean_gauss_from_jet(rotated)  # noqa: N806
        assert float(H1) == pytest.approx(float(H0), rel=1e-12)
        assert float(K1) == pytest.approx(float(K0), rel=1e-12)


class TestFiniteDifferenceJet:
    """Richardson-extrapolated central differences."""

    def test_matches_analytic_jet(self, sphere_graph):
        """Finite-difference jets of the sphere agree with the closed form."""
        fd = surface_service.finite_difference_jet(sphere_graph.value, 0.1, 0.2, h=1e-3)
        exact = sphere_graph.jet(0.1, 0.2)
        for approx, value in zip(fd.as_tuple(), exact.as_tuple()):
            assert float(approx) == pytest.approx(float(value), abs=1e-6)
        assert float(fd.error) < 1e-4

    @pytest.mark.parametrize(
        "u,jet",
        [
            (lambda x, y: 2.0 * x - 3.0 * y + 1.0, (2.0, -3.0, 0.0, 0.0, 0.0)),
            (lambda x, y: x * x + y * y, (0.6, 0.8, 2.0, 0.0, 2.0)),
            (
                lambda x, y: x**3 - 2.0 * x * x * y + y**3 + x * y,
                (0.27 - 0.48 + 0.4, -0.18 + 0.48 + 0.3, 1.8 - 1.6, -1.2 + 1.0, 2.4),
            ),
        ],
    )
    def test_exact_on_cubics(self, u, jet):
        """Polynomials of degree <= 3 are reproduced at (0.3, 0.4) to 1e-7."""
        fd = surface_service.finite_difference_jet(u, 0.3, 0.4, h=1e-3)
        for approx, value in zip(fd.as_tuple(), jet):
            assert float(approx) == pytest.approx(value, abs=1e-7)

    def test_quasiminimal_polynomial_at_one_one(self, quasiminimal):
        """The numeric jet of the polynomial graph matches 122, 238, 422 at (1, 1)."""
        fd = surface_service.finite_difference_jet(quasiminimal.value, 1.0, 1.0, h=1e-3)
        assert float(fd.r) == pytest.approx(122.0, rel=1e-6)
        assert float(fd.s) == pytest.approx(238.0, rel=1e-6)
        assert float(fd.t) == pytest.approx(422.0, rel=1e-6)

    def test_neighborhood_reaches_four_steps(self):
        """The domain must hold the 4h square around the point, not just the stencil."""
        domain = Domain.rectangle(-1.0, 1.0, -1.0, 1.0)
        flat = lambda x, y: np.asarray(x) * 0.0  # noqa: E731
        with pytest.raises(StencilOutsideDomain):
            surface_service.finite_difference_jet(flat, 0.97, 0.0, h=1e-2, domain=domain)
        jet = surface_service.finite_difference_jet(flat, 0.95, 0.0, h=1e-2, domain=domain)
        assert float(jet.r) == 0.0

    def test_stencil_outside_domain(self):
        """A stencil reaching past the domain boundary is rejected."""
        with pytest.raises(StencilOutsideDomain):
            surface_service.finite_difference_jet(
                lambda x, y: np.asarray(x) * 0.0,
                0.999,
                0.0,
                h=1e-2,
                domain=Domain.rectangle(-1.0, 1.0, -1.0, 1.0),
            )

    def test_rejects_nonpositive_step(self):
        """The step must be positive."""
        with pytest.raises(ValueError):
            surface_service.finite_difference_jet(lambda x, y: x, 0.0, 0.0, h=0.0)


class TestSampling:
    """Point sets and curvature samples."""

    def test_grid_points_stay_in_disk(self):
        """Grid points of a disk domain lie inside the disk."""
        domain = Domain.disk(0.5)
        xs, ys = surface_service.grid_points(domain, 21)
        assert xs.size > 0
        assert np.all(xs**2 + ys**2 <= 0.25)

    def test_annulus_points_radii(self):
        """Annulus samples span the requested radii."""
        xs, ys = surface_service.annulus_points(0.1, 0.5, 5, 16)
        r = np.hypot(xs, ys)
        assert xs.size == 80
        assert r.min() == pytest.approx(0.1)
        assert r.max() == pytest.approx(0.5)

    def test_annulus_points_rejects_bad_radii(self):
        """Inner radius must be below the outer one."""
        with pytest.raises(ValueError):
            surface_service.annulus_points(0.5, 0.1, 5, 16)

    def test_random_annulus_points_reach_outer_radius(self):
        """Log-uniform radii cover the whole range out to r = 10."""
        rng = np.random.default_rng(0)
        xs, ys = surface_service.random_annulus_points(1e-3, 10.0, 10_000, rng)
        r = np.hypot(xs, ys)
        assert xs.size == 10_000
        assert np.all((r >= 1e-3) & (r <= 10.0))
        assert r.max() > 5.0
        assert r.min() < 2e-3

    def test_hxy_positive_far_from_origin(self, quasiminimal):
        """h_xy / r^4 stays positive on random points with 1e-3 <= r <= 10."""
        rng = np.random.default_rng(0)
        xs, ys = surface_service.random_annulus_points(1e-3, 10.0, 10_000, rng)
        h_xy = np.asarray(quasiminimal.jet(xs, ys).s)
        assert np.all(h_xy / np.hypot(xs, ys) ** 4 > 0.0)

    def test_surface_grid_on_sphere(self, sphere_graph):
        """All grid samples of a sphere graph sit at (c, c)."""
        samples = surface_service.surface_grid(sphere_graph, 15)
        np.testing.assert_allclose(samples.kappa1, 2.0, atol=1e-6)
        np.testing.assert_allclose(samples.kappa2, 2.0, atol=1e-6)
        assert np.all(samples.kappa1 >= samples.kappa2)


class TestRotationalCurvatures:
    """Meridian and parallel curvatures of profiles."""

    def test_unit_sphere_profile(self, sphere_profile):
        """The unit sphere has both curvatures equal to one, including at the pole."""
        rc = surface_service.rotational_curvatures(sphere_profile)
        np.testing.assert_allclose(rc.kappa_meridian, 1.0)
        np.testing.assert_allclose(rc.kappa_parallel, 1.0, rtol=1e-12)
        assert bool(rc.axis_adjacent[0])
        assert not bool(np.any(rc.axis_adjacent[1:]))

    def test_s_range_restricts_samples(self, sphere_profile):
        """Only samples in the arc-length range are returned."""
        rc = surface_service.rotational_curvatures(sphere_profile, s_range=(0.5, 1.0))
        assert rc.s.min() >= 0.5
        assert rc.s.max() <= 1.0

    def test_axis_crossing_raises(self, sphere_profile):
        """An interior sample on the wrong side of the axis is an error."""
        pf = sphere_profile
        shifted = Profile(
            s=pf.s, x=pf.x - 0.5, z=pf.z, theta=pf.theta, kappa=pf.kappa, step=pf.step
        )
        with pytest.raises(AxisSingularity):
            surface_service.rotational_curvatures(shifted)

    def test_samples_positioned_on_profile(self, sphere_profile):
        """Rotational samples carry the profile coordinates (x, z)."""
        samples = surface_service.rotational_samples(sphere_profile)
        np.testing.assert_allclose(samples.x, sphere_profile.x)
        np.testing.assert_allclose(samples.y, sphere_profile.z)
