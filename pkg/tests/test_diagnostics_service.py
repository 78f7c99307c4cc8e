"""Tests for quasi-CMC, wedge and Alexandrov certificates."""

import math

import numpy as np
import pytest

from umbilic_lab.core.exceptions import EmptyWindow, OutOfRange, OutsideWedge
from umbilic_lab.models import CurvaturePoint, CurvatureSamples
from umbilic_lab.schemas.certificate import Certificate
from umbilic_lab.schemas.construction import TubeSpec
from umbilic_lab.services import construction_service, diagnostics_service, surface_service


def sphere_samples(c: float = 1.0, n: int = 50) -> CurvatureSamples:
    """Samples of a round sphere of curvature c."""
    ones = np.ones(n)
    return CurvatureSamples.from_principal(
        np.linspace(0.0, 1.0, n), np.zeros(n), c * ones, c * ones
    )


class TestWedgeParams:
    """Conversions between mu, Lambda and the wedge slopes."""

    def test_cmc_case(self):
        """mu = 0 is Lambda = -1 with both slopes -1."""
        params = diagnostics_service.wedge_params(mu=0.0)
        assert params.lam == pytest.approx(-1.0)
        assert params.m1 == pytest.approx(-1.0)
        assert params.m2 == pytest.approx(-1.0)

    def test_lambda_slopes(self):
        """Lambda = -1.25 has slopes -0.5 and -2."""
        params = diagnostics_service.wedge_params(lam=-1.25)
        assert params.m1 == pytest.approx(-0.5)
        assert params.m2 == pytest.approx(-2.0)

    def test_mu_one_third(self):
        """mu = 1/3 is Lambda = -2 with slopes -2 +- sqrt(3)."""
        params = diagnostics_service.wedge_params(mu=1.0 / 3.0)
        assert params.lam == pytest.approx(-2.0)
        assert params.m1 == pytest.approx(-2.0 + math.sqrt(3.0))
        assert params.m2 == pytest.approx(-2.0 - math.sqrt(3.0))

    def test_round_trip(self):
        """mu -> Lambda -> mu is exact to rounding."""
        for mu in (0.0, 0.1, 0.5, 0.9, 0.99):
            lam = diagnostics_service.wedge_params(mu=mu).lam
            assert diagnostics_service.wedge_params(lam=lam).mu == pytest.approx(mu, abs=1e-14)

    def test_rejects_mu_one(self):
        """mu must stay below one."""
        with pytest.raises(OutOfRange):
            diagnostics_service.wedge_params(mu=1.0)

    def test_rejects_lambda_above_minus_one(self):
        """Lambda must be <= -1."""
        with pytest.raises(OutOfRange):
            diagnostics_service.wedge_params(lam=-0.5)

    def test_needs_exactly_one_input(self):
        """Passing both mu and Lambda is an error."""
        with pytest.raises(ValueError):
            diagnostics_service.wedge_params(mu=0.5, lam=-3.0)


class TestParamsFromBounds:
    """Quasi-CMC constants from mean curvature bounds."""

    @pytest.mark.parametrize("H0,mu", [(1.0, 0.0), (2.0, 1.0 / 3.0), (3.0, 0.5)])
    def test_values(self, H0, mu):  # noqa: N803
        """mu = (H0 - 1) / (H0 + 1) with c = 1."""
        c, got = diagnostics_service.params_from_bounds(H0)
        assert c == 1.0
        assert got == pytest.approx(mu)

    def test_rejects_small_bound(self):
        """H0 below one has no meaning."""
        with pytest.raises(OutOfRange):
            diagnostics_service.params_from_bounds(0.5)


class TestQuasiCmc:
    """check_quasi_cmc and check_wedge."""

    def test_sphere_holds(self):
        """A round sphere is quasi-CMC with its own curvature."""
        cert = diagnostics_service.check_quasi_cmc(sphere_samples(), 1.0, 0.5)
        assert cert.holds
        assert cert.sample_count == 50

    def test_accepts_point_list(self):
        """Lists of CurvaturePoint are accepted."""
        points = [CurvaturePoint(x=0.0, y=0.0, H=1.0, K=1.0, kappa1=1.0, kappa2=1.0)]
        assert diagnostics_service.check_quasi_cmc(points, 1.0, 0.0).holds

    def test_empty_input_holds_without_witness(self):
        """No samples means nothing can fail."""
        cert = diagnostics_service.check_quasi_cmc([], 0.0, 0.5)
        assert cert.holds
        assert cert.witness is None
        assert cert.sample_count == 0

    def test_rejects_mu_out_of_range(self):
        """mu must lie in [0, 1)."""
        with pytest.raises(OutOfRange):
            diagnostics_service.check_quasi_cmc(sphere_samples(), 1.0, 1.2)

    def test_failing_witness_is_worst_sample(self):
        """The witness is the sample with the smallest margin."""
        samples = CurvatureSamples.from_principal(
            [0.0, 1.0, 2.0], [0.0, 0.0, 0.0], [1.0, 3.0, 2.0], [1.0, 3.0, 2.0]
        )
        cert = diagnostics_service.check_quasi_cmc(samples, 1.0, 0.5)
        assert not cert.holds
        assert cert.witness.position == (1.0, 0.0)
        assert cert.witness.margin == pytest.approx(-4.0)

    def test_tube_holds_with_derived_lambda(self):
        """The thin torus tube is quasi-CMC for c = 10 inside the wedge of slope -0.9."""
        samples, _ = construction_service.tube_surface(TubeSpec())
        params = diagnostics_service.wedge_params(lam=-(0.9 + 1.0 / 0.9) / 2.0, c=10.0)
        assert diagnostics_service.check_quasi_cmc(samples, 10.0, params.mu).holds
        assert diagnostics_service.check_wedge(samples, params).holds

    def test_wedge_fails_above_c(self):
        """kappa1 > c and kappa2 > c violates the wedge inequality."""
        samples = CurvatureSamples.from_principal([0.0], [0.0], [2.0], [1.5])
        params = diagnostics_service.wedge_params(mu=0.5, c=1.0)
        cert = diagnostics_service.check_wedge(samples, params)
        assert not cert.holds
        assert cert.witness.margin < 0

    def test_wedge_and_quasi_cmc_agree(self, quasiminimal):
        """Both checks give the same verdict at every sample of the polynomial graph."""
        xs, ys = surface_service.annulus_points(1e-3, 0.9, 24, 64)
        samples = surface_service.curvature_samples(quasiminimal, xs, ys)
        for mu in (0.1, 0.5, 0.9):
            params = diagnostics_service.wedge_params(mu=mu)
            wedge = diagnostics_service.check_wedge(samples, params)
            quasi = diagnostics_service.check_quasi_cmc(samples, 0.0, mu)
            assert wedge.details["agrees_with_quasi_cmc"]
            assert wedge.verdict == quasi.verdict

    def test_verdict_monotone_in_mu(self):
        """Margins never decrease in mu, so a verdict that holds keeps holding."""
        rng = np.random.default_rng(3)
        a, b = rng.uniform(0.1, 1.0, size=(2, 500))
        samples = CurvatureSamples.from_principal(
            np.arange(500.0), np.zeros(500), 1.0 + a, 1.0 - b
        )
        mus = np.linspace(0.0, 0.99, 34)
        margins = np.stack(
            [diagnostics_service.quasi_cmc_margins(samples, 1.0, mu) for mu in mus]
        )
        assert np.all(np.diff(margins, axis=0) >= 0.0)
        verdicts = [diagnostics_service.check_quasi_cmc(samples, 1.0, mu).holds for mu in mus]
        assert not verdicts[0] and verdicts[-1]
        first = verdicts.index(True)
        assert all(verdicts[first:])

    def test_lambda_minus_one_is_cmc(self):
        """With Lambda = -1 the wedge holds exactly where H = c."""
        params = diagnostics_service.wedge_params(mu=0.0, c=2.0)
        assert params.m1 == params.m2 == -1.0
        a = np.linspace(0.0, 3.0, 31)
        on = CurvatureSamples.from_principal(a, np.zeros(31), 2.0 + a, 2.0 - a)
        assert diagnostics_service.check_wedge(on, params).holds
        off = CurvatureSamples.from_principal(a, np.zeros(31), 2.1 + a, 2.0 - a)
        wedge = diagnostics_service.check_wedge(off, params)
        assert not wedge.holds
        assert wedge.verdict == diagnostics_service.check_quasi_cmc(off, 2.0, 0.0).verdict
        np.testing.assert_allclose(
            diagnostics_service.wedge_margins(off, 2.0, -1.0), -0.01, rtol=1e-9
        )


class TestAlexandrov:
    """The degenerate-elliptic limit of the wedge condition."""

    def test_round_sphere_holds_with_contact(self):
        """Equality everywhere is allowed where both curvatures equal c."""
        cert = diagnostics_service.check_alexandrov(sphere_samples(), 1.0)
        assert cert.holds
        assert cert.details["contact_points"] == 50

    def test_same_side_fails(self):
        """Both curvatures above c violate the sign condition."""
        samples = CurvatureSamples.from_principal([0.0], [0.0], [2.0], [1.5])
        assert not diagnostics_service.check_alexandrov(samples, 1.0).holds

    def test_contact_with_unequal_curvature_fails(self):
        """kappa2 = c while kappa1 differs from c is not an allowed equality point."""
        samples = CurvatureSamples.from_principal([0.0], [0.0], [1.5], [1.0])
        cert = diagnostics_service.check_alexandrov(samples, 1.0)
        assert not cert.holds
        assert cert.details["equality_violations"] == 1

    def test_ellipsoid_fails_on_convex_chart(self):
        """The convex ellipsoid patch violates Alexandrov's inequality at its bottom."""
        chart, _ = construction_service.ellipsoid_chart((1.0, 1.2, 1.5), lower=True)
        samples = surface_service.surface_grid(chart, 161)
        assert np.min(np.minimum(samples.kappa1, samples.kappa2)) > 0.0
        cert = diagnostics_service.check_alexandrov(samples, 1.0)
        assert not cert.holds
        # At the bottom kappa = (a3/a2^2, a3/a1^2) = (1/1.44, 1/2.25).
        expected = -(1.0 - 1.0 / 1.44) * (1.0 - 1.0 / 2.25)
        assert cert.witness.position == pytest.approx((0.0, 0.0), abs=1e-12)
        assert cert.witness.kappa1 == pytest.approx(1.0 / 1.44)
        assert cert.witness.kappa2 == pytest.approx(1.0 / 2.25)
        assert cert.witness.margin == pytest.approx(expected, abs=1e-9)


class TestTauInterpolant:
    """Weights between the boundary Weingarten functionals."""

    @pytest.fixture
    def params(self):
        """Wedge with Lambda = -1.25 around c = 0."""
        return diagnostics_service.wedge_params(lam=-1.25)

    def test_upper_boundary_ray(self, params):
        """On kappa2 = m1 kappa1 the weight is one."""
        result = diagnostics_service.tau_interpolant(1.0, params.m1, params)
        assert result.tau == pytest.approx(1.0)
        assert not result.undetermined

    def test_bisector(self, params):
        """On kappa2 = Lambda kappa1 the weight is one half."""
        result = diagnostics_service.tau_interpolant(1.0, params.lam, params)
        assert result.tau == pytest.approx(0.5)

    def test_umbilic_is_undetermined(self, params):
        """At kappa1 = kappa2 = c the weight is flagged undetermined."""
        result = diagnostics_service.tau_interpolant(0.0, 0.0, params)
        assert result.undetermined
        assert result.tau == 0.5

    def test_outside_wedge(self, params):
        """Points outside the wedge are rejected."""
        with pytest.raises(OutsideWedge):
            diagnostics_service.tau_interpolant(1.0, 1.0, params)

    def test_weight_stays_in_unit_interval(self, params):
        """Random points of the wedge get tau in [0, 1] equal to their blend weight."""
        rng = np.random.default_rng(11)
        for u, s in zip(rng.uniform(1e-2, 5.0, 1000), rng.uniform(0.0, 1.0, 1000)):
            v = (s * params.m1 + (1.0 - s) * params.m2) * u
            result = diagnostics_service.tau_interpolant(u, v, params)
            assert 0.0 <= result.tau <= 1.0
            assert result.tau == pytest.approx(s, abs=1e-9)


class TestDiagramWedgeAnalysis:
    """Property (W) from observed slopes."""

    def test_round_sphere_is_degenerate(self):
        """A sphere diagram is the diagonal point only."""
        analysis = diagnostics_service.diagram_wedge_analysis(sphere_samples(), 1.0)
        assert analysis.verdict == "degenerate-umbilical"
        assert analysis.points_used == 0

    def test_polynomial_slopes_are_negative(self, quasiminimal):
        """Near the origin the polynomial graph has a negative slope interval."""
        xs, ys = surface_service.annulus_points(1e-2, 0.2, 12, 64)
        samples = surface_service.curvature_samples(quasiminimal, xs, ys)
        analysis = diagnostics_service.diagram_wedge_analysis(samples, 0.0)
        assert analysis.ratio_max < 0.0
        assert analysis.ratio_min < analysis.ratio_max

    def test_empty_window(self):
        """A window far from every point raises EmptyWindow."""
        with pytest.raises(EmptyWindow):
            diagnostics_service.diagram_wedge_analysis(sphere_samples(), 5.0, window_radius=0.1)


class TestCertificateAlgebra:
    """Merging and refuting certificates."""

    def _cert(self, claim: str, margin: float) -> Certificate:
        samples = diagnostics_service.positions([0.0], [0.0])
        return diagnostics_service.build_certificate(claim, samples, [margin], 0.0)

    def test_strict_zero_margin_fails_with_negative_witness(self):
        """A strict claim with margin 0 fails and reports a negative margin."""
        samples = diagnostics_service.positions([0.0], [0.0])
        cert = diagnostics_service.build_certificate("x/strict", samples, [0.0], 0.0, strict=True)
        assert not cert.holds
        assert cert.witness.margin < 0.0

    def test_merge_keeps_worst_failure(self):
        """Merging picks the most negative failing witness."""
        merged = diagnostics_service.merge_certificates(
            [self._cert("x/a", 1.0), self._cert("x/a", -2.0), self._cert("x/a", -1.0)]
        )
        assert not merged.holds
        assert merged.witness.margin == -2.0
        assert merged.sample_count == 3

    def test_merge_of_holding_certificates(self):
        """Merging holding certificates keeps the smallest margin."""
        merged = diagnostics_service.merge_certificates(
            [self._cert("x/a", 3.0), self._cert("x/a", 0.5)], claim_id="x/b"
        )
        assert merged.holds
        assert merged.claim_id == "x/b"
        assert merged.witness.margin == 0.5

    def test_expect_failure_of_failing(self):
        """A refuted claim becomes a holding refutation with positive margin."""
        refutation = diagnostics_service.expect_failure(self._cert("x/a", -2.0), "x/refuted")
        assert refutation.holds
        assert refutation.witness.margin == 2.0
        assert refutation.details["refutes"] == "x/a"

    def test_expect_failure_of_holding(self):
        """A claim that holds makes its refutation fail."""
        refutation = diagnostics_service.expect_failure(self._cert("x/a", 2.0), "x/refuted")
        assert not refutation.holds
        assert refutation.witness.margin < 0.0
