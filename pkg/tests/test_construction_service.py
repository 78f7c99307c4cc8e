"""Tests for the polynomial graph, the sandglass profile, tubes and charts."""

import math

import numpy as np
import pytest

from umbilic_lab.core.exceptions import (
    AxesNotDistinct,
    DomainTooLarge,
    EmbeddednessViolated,
    OutOfRange,
    PostconditionViolated,
)
from umbilic_lab.schemas.construction import FourierSeries, TubeSpec
from umbilic_lab.services import construction_service

A, B = 1.8, 2.4


class TestQuasiminimalPolynomial:
    """The sextic graph h = xy (x^2 + y^2)(x^2 + 16 y^2)."""

    def test_jet_at_unit_point(self, quasiminimal):
        """Derivatives at (1, 0) match the expanded polynomial."""
        j = quasiminimal.jet(1.0, 0.0)
        assert (float(j.p), float(j.q)) == (0.0, 1.0)
        assert (float(j.r), float(j.s), float(j.t)) == (0.0, 5.0, 0.0)

    def test_jet_at_diagonal_point(self, quasiminimal):
        """Derivatives at (1, 1) match the expanded polynomial."""
        j = quasiminimal.jet(1.0, 1.0)
        assert float(j.value) == 34.0
        assert (float(j.p), float(j.q)) == (72.0, 132.0)
        assert (float(j.r), float(j.s), float(j.t)) == (122.0, 238.0, 422.0)

    def test_mu_bound_below_one(self):
        """The circle bound mu* is below one and scale invariant."""
        bound = construction_service.polynomial_mu_bound()
        assert 0.0 < bound.mu_star < 1.0
        assert bound.homogeneity_defect <= 1e-12
        assert bound.samples == 4096

    def test_mu_bound_needs_enough_samples(self):
        """Fewer than 1024 circle samples are rejected."""
        with pytest.raises(OutOfRange):
            construction_service.polynomial_mu_bound(n=512)

    def test_radius_sweep_is_sorted(self):
        """The radius sweep reports one entry per radius in increasing order."""
        mu = 0.5 * (construction_service.polynomial_mu_bound().mu_star + 1.0)
        _, sweep = construction_service.quasiminimal_radius(mu, [0.3, 0.1], n_r=8, n_theta=64)
        assert [entry["radius"] for entry in sweep] == [0.1, 0.3]


class TestBumpAmplitude:
    """Solving the neck integral condition."""

    @pytest.mark.parametrize("a, b", [(A, B), (1.6, 2.0)])
    def test_residual_vanishes(self, a, b):
        """The solved amplitude zeroes the integral residual."""
        amplitude = construction_service.solve_bump_amplitude(a, b)
        assert amplitude > 0.0
        assert abs(construction_service.amplitude_residual(a, b, amplitude)) <= 1e-10

    def test_degenerate_neck_rejected(self):
        """b = a leaves no neck."""
        with pytest.raises(OutOfRange):
            construction_service.solve_bump_amplitude(A, A)

    def test_bump_vanishes_outside_neck(self):
        """psi is zero outside (a, b) and positive inside."""
        bump = construction_service.BumpProfile(A, B)
        values = bump.psi(np.array([0.0, A, 0.5 * (A + B), B, 3.0]))
        assert values[0] == values[1] == values[3] == values[4] == 0.0
        assert values[2] > 0.0


class TestSandglassProfile:
    """Integration and certificates of the sandglass generating curve."""

    def test_closes_at_right_angle(self, sandglass_profile):
        """The tangent angle reaches pi/2 at s = b."""
        assert abs(sandglass_profile.closure_residual) <= 1e-6
        assert all(sandglass_profile.postconditions.values())

    def test_cap_is_exact_unit_circle(self, sandglass_profile):
        """Nodes up to s = a lie on the unit circle."""
        cap = sandglass_profile.s <= A - sandglass_profile.step
        s = sandglass_profile.s[cap]
        np.testing.assert_allclose(sandglass_profile.x[cap], np.sin(s), rtol=0, atol=1e-15)
        np.testing.assert_allclose(sandglass_profile.z[cap], 1.0 - np.cos(s), rtol=0, atol=1e-15)
        assert np.all(sandglass_profile.kappa[cap] == 1.0)

    def test_tangent_matches_angle(self, sandglass_profile):
        """(x, z)' agrees with (cos theta, sin theta) to finite-difference accuracy."""
        assert sandglass_profile.tangent_defect() < 1e-6

    def test_all_certificates_hold(self, sandglass_certificates):
        """Closure, embedding, monotonicity and curvature claims all hold."""
        failing = [cid for cid, cert in sandglass_certificates.items() if not cert.holds]
        assert failing == []
        assert {"A.2/closure", "A.2/profile", "A.2/ecuno"} <= set(sandglass_certificates)

    def test_certificate_order(self, sandglass_certificates):
        """Certificates come out closure first and the Alexandrov clause last."""
        assert list(sandglass_certificates) == [
            "A.2/closure",
            "A.2/profile",
            "A.2/kappa-le-1",
            "A.2/parallel-gt-1",
            "A.2/monotone",
            "A.2/ecuno",
        ]

    def test_zero_amplitude_misses_closure(self):
        """Without a bump the curve keeps turning and the closure check raises."""
        with pytest.raises(PostconditionViolated) as exc:
            construction_service.integrate_profile(A, B, 0.0, step=1e-3)
        assert "closure" in exc.value.details["failed"]

    def test_wrong_amplitude_fails_closure(self, bump_amplitude):
        """A 10% amplitude error leaves a visible closure residual."""
        pf = construction_service.integrate_profile(
            A, B, 1.1 * bump_amplitude, step=1e-3, enforce=False
        )
        assert abs(pf.closure_residual) > 1e-6
        assert not pf.postconditions["closure"]

    def test_mirrored_samples(self, sandglass_profile):
        """Mirroring across z(b) doubles the profile minus the shared neck node."""
        samples = construction_service.sandglass_samples(sandglass_profile)
        assert len(samples) == 2 * len(sandglass_profile) - 1
        assert float(samples.y[-1]) == pytest.approx(2.0 * float(sandglass_profile.z[-1]))

    def test_perturbed_neck_keeps_certificates(self, sandglass_profile):
        """A tiny normal displacement inside the neck keeps every neck claim."""
        _, certs = construction_service.perturbed_neck_curvatures(sandglass_profile, 1e-9)
        assert all(cert.claim_id.endswith("/perturbed") for cert in certs)
        assert all(cert.holds for cert in certs)

    def test_perturbation_size_is_capped(self, sandglass_profile):
        """Displacements above 1e-3 are rejected."""
        with pytest.raises(OutOfRange):
            construction_service.perturbed_neck_curvatures(sandglass_profile, 2e-3)

    @pytest.mark.slow
    def test_closure_convergence_is_fourth_order(self, bump_amplitude):
        """Step halving shrinks end point differences by about 16."""
        study = construction_service.closure_convergence(A, B, amplitude=bump_amplitude)
        assert len(study.ratios) == 1
        assert 12.0 <= study.ratios[0] <= 20.0


class TestTubes:
    """Principal curvatures of tubes around curves."""

    def test_circle_tube(self):
        """Around the unit circle the curvatures are 1/r and -cos/(1 - r cos)."""
        samples, tube = construction_service.tube_surface(TubeSpec())
        assert np.all(tube.k_profile == 20.0)
        assert tube.denominator_min == pytest.approx(0.95, abs=1e-9)
        assert float(np.min(tube.k_long)) == pytest.approx(-1.0 / 0.95, rel=1e-9)
        assert float(np.max(tube.k_long)) == pytest.approx(1.0 / 1.05, rel=1e-9)
        assert len(samples) == 256 * 64

    def test_open_straight_tube_is_flat_along_axis(self):
        """A straight open tube has vanishing longitudinal curvature."""
        spec = TubeSpec(
            curve=[FourierSeries(), FourierSeries(), FourierSeries()],
            drift=(0.0, 0.0, 1.0),
            n_t=16,
            n_phi=16,
        )
        assert not spec.closed
        _, tube = construction_service.tube_surface(spec)
        assert np.all(tube.k_long == 0.0)

    def test_fat_tube_not_embedded(self):
        """Radius 1.5 around the unit circle overlaps itself."""
        with pytest.raises(EmbeddednessViolated):
            construction_service.tube_surface(TubeSpec(radius=1.5))


class TestCharts:
    """Closed-form graph charts."""

    def test_comparison_sphere_domain_limit(self):
        """A domain reaching the equator of the sphere is refused."""
        with pytest.raises(DomainTooLarge):
            construction_service.comparison_sphere_graph(2.0, 0.6)

    def test_ellipsoid_axes_must_differ(self):
        """Equal semi-axes have no isolated umbilics."""
        with pytest.raises(AxesNotDistinct):
            construction_service.ellipsoid_chart((1.0, 1.0, 2.0))

    def test_ellipsoid_predicted_umbilics(self):
        """Predicted umbilics sit symmetrically on the long axis."""
        _, predicted = construction_service.ellipsoid_chart((1.5, 1.2, 1.0))
        x_u = 1.5 * math.sqrt((1.5**2 - 1.2**2) / (1.5**2 - 1.0**2))
        assert [p[0] for p in predicted] == pytest.approx([-x_u, x_u])
        assert [p[1] for p in predicted] == [0.0, 0.0]

    def test_lower_chart_is_reflection(self):
        """The lower chart is the negative of the upper one."""
        upper, _ = construction_service.ellipsoid_chart((1.0, 1.2, 1.5))
        lower, _ = construction_service.ellipsoid_chart((1.0, 1.2, 1.5), lower=True)
        assert float(lower.value(0.3, 0.1)) == -float(upper.value(0.3, 0.1))
