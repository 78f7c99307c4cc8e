"""Shared surfaces and constructions for the test suite."""

import numpy as np
import pytest

from umbilic_lab.models import Profile
from umbilic_lab.services import construction_service

SANDGLASS_A = 1.8
SANDGLASS_B = 2.4


def unit_sphere_profile(b: float = 2.0, n: int = 2001) -> Profile:
    """Generating curve of the unit sphere from the south pole, sampled exactly."""
    s = np.linspace(0.0, b, n)
    return Profile(
        s=s,
        x=np.sin(s),
        z=1.0 - np.cos(s),
        theta=s.copy(),
        kappa=np.ones(n),
        step=b / (n - 1),
        meta={"a": b, "b": b, "amplitude": 0.0},
    )


@pytest.fixture
def sphere_profile():
    """Exact unit-sphere profile."""
    return unit_sphere_profile()


@pytest.fixture(scope="session")
def quasiminimal():
    """Quasiminimal polynomial graph over [-1, 1]^2."""
    return construction_service.quasiminimal_polynomial()


@pytest.fixture(scope="session")
def bump_amplitude():
    """Solved bump amplitude for the standard sandglass."""
    return construction_service.solve_bump_amplitude(SANDGLASS_A, SANDGLASS_B)


@pytest.fixture(scope="session")
def sandglass_profile(bump_amplitude):
    """Standard sandglass profile at step 1e-4."""
    return construction_service.integrate_profile(
        SANDGLASS_A, SANDGLASS_B, bump_amplitude, step=1e-4
    )


@pytest.fixture(scope="session")
def sandglass_certificates(sandglass_profile):
    """Certificates of the standard sandglass profile, keyed by claim id."""
    certs = construction_service.sandglass_verify(sandglass_profile)
    return {cert.claim_id: cert for cert in certs}
