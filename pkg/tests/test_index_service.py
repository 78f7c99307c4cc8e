"""Tests for winding numbers, umbilic search and index sums."""

import math

import numpy as np
import pytest

from umbilic_lab.core.exceptions import FieldVanishesOnLoop, UnderSampled
from umbilic_lab.schemas.umbilic import LoopSampling, Umbilic
from umbilic_lab.services import construction_service, index_service


def identity_field(x, y):
    """The field (x, y)."""
    return x, y


def saddle_field(x, y):
    """The field (x, -y)."""
    return x, -y


def power_field(k):
    """The field z^k as a pair of real arrays."""

    def field(x, y):
        w = (np.asarray(x) + 1j * np.asarray(y)) ** k
        return w.real, w.imag

    return field


class TestWindingNumber:
    """Degrees of planar fields along sampled circles."""

    def test_identity_field(self):
        """The identity field winds once."""
        assert index_service.winding_number(identity_field, LoopSampling(radius=1.0)) == 1

    def test_saddle_field(self):
        """The standard saddle field winds minus once."""
        assert index_service.winding_number(saddle_field, LoopSampling(radius=1.0)) == -1

    @pytest.mark.parametrize("radius", [0.1, 0.3, 0.5])
    def test_polynomial_gradient_field(self, quasiminimal, radius):
        """grad h_x of the polynomial graph has winding zero on every loop."""

        def field(x, y):
            j = quasiminimal.jet(x, y)
            return j.r, j.s

        assert index_service.winding_number(field, LoopSampling(radius=radius)) == 0

    def test_resamples_fast_fields(self):
        """z^32 needs more than 64 samples and is resolved by doubling."""
        loop = LoopSampling(radius=1.0, n=64)
        assert index_service.winding_number(power_field(32), loop) == 32

    def test_under_sampled_without_retries(self):
        """Without retries a fast field is reported as under-sampled."""
        loop = LoopSampling(radius=1.0, n=64)
        with pytest.raises(UnderSampled):
            index_service.winding_number(power_field(32), loop, retries=0)

    def test_field_vanishing_on_loop(self):
        """A loop through a zero of the field is rejected."""
        loop = LoopSampling(center=(1.0, 0.0), radius=1.0, n=64)
        with pytest.raises(FieldVanishesOnLoop):
            index_service.winding_number(identity_field, loop)


class TestFindUmbilics:
    """Grid scans for umbilics."""

    def test_polynomial_graph_has_single_umbilic_at_origin(self, quasiminimal):
        """The polynomial graph has exactly one umbilic, at the origin."""
        search = index_service.find_umbilics(quasiminimal, 101)
        assert not search.totally_umbilical
        assert len(search.umbilics) == 1
        assert math.hypot(*search.umbilics[0].position) < 1e-3

    def test_polynomial_umbilic_has_index_zero(self, quasiminimal):
        """The polynomial umbilic has line-field index zero."""
        umbilic = Umbilic(position=(0.0, 0.0), residual=0.0)
        assert index_service.line_field_index(quasiminimal, umbilic, radius=0.1) == 0.0

    def test_cubic_saddle_index(self):
        """The flat umbilic of Re(z^3) has index -1/2."""
        surface = construction_service.polynomial_graph(
            [(1.0, 3, 0), (-3.0, 1, 2)], bounds=(-0.5, 0.5, -0.5, 0.5)
        )
        search = index_service.find_umbilics(surface, 101)
        assert len(search.umbilics) == 1
        umbilic = search.umbilics[0]
        assert index_service.line_field_index(surface, umbilic, radius=0.05) == -0.5
        loop = LoopSampling(center=umbilic.position, radius=0.05)
        assert index_service.hessian_index(surface, loop) == -0.5

    def test_torus_chart_is_umbilic_free(self):
        """The thin torus has no umbilics."""
        search = index_service.find_umbilics(construction_service.torus_chart(1.0, 0.05), 41)
        assert search.umbilics == []
        assert not search.totally_umbilical

    def test_sphere_patch_is_totally_umbilical(self):
        """Every node of a sphere patch is flagged and reported as such."""
        surface = construction_service.comparison_sphere_graph(1.0, 0.8)
        search = index_service.find_umbilics(surface, 41)
        assert search.totally_umbilical
        assert search.umbilics == []
        assert search.flagged_fraction == 1.0

    def test_ellipsoid_umbilics(self):
        """Both chart umbilics of the ellipsoid sit at the predicted abscissae with index 1/2."""
        chart, predicted = construction_service.ellipsoid_chart((1.0, 1.2, 1.5))
        search = index_service.find_umbilics(chart, 161)
        assert len(search.umbilics) == 2
        umbilics = index_service.assign_indices(chart, search.umbilics, radius=0.05)
        for umbilic, expected in zip(umbilics, sorted(predicted)):
            assert umbilic.position[0] == pytest.approx(expected[0], abs=1e-4)
            assert umbilic.position[1] == pytest.approx(0.0, abs=1e-4)
            assert umbilic.index == 0.5
            assert umbilic.loop_radius == 0.05


class TestPoincareHopf:
    """Index sums against the Euler characteristic."""

    def test_four_lemons_on_a_sphere(self):
        """Four umbilics of index 1/2 close up a sphere."""
        assert index_service.poincare_hopf_check([0.5] * 4, genus=0).holds

    def test_umbilic_free_torus(self):
        """No umbilics on a torus is consistent."""
        cert = index_service.poincare_hopf_check([], genus=1)
        assert cert.holds
        assert cert.details["euler_characteristic"] == 0

    def test_single_index_zero_cannot_close_a_sphere(self):
        """A lone index-zero umbilic contradicts Euler characteristic 2."""
        cert = index_service.poincare_hopf_check([0.0], genus=0)
        assert not cert.holds
        assert cert.witness.margin < 0.0
