import logging
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from ..core.config import settings
from ..core.exceptions import (
    DegenerateTrace,
    DenominatorVanishes,
    EllipticityViolated,
    NotACriticalPoint,
    OutOfRange,
)
from ..models import BeltramiCoefficient, ComplexJet, EllipticCoefficients, GraphSurface
from ..schemas.certificate import Certificate
from ..schemas.umbilic import CriticalPointReport, LoopSampling
from . import diagnostics_service, index_service, surface_service

log = logging.getLogger(__name__)

ComplexMap = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]]


def wirtinger(f_x: ArrayLike, f_y: ArrayLike, f: ArrayLike = 0.0) -> ComplexJet:
    """f_z = (f_x - i f_y) / 2 and f_zbar = (f_x + i f_y) / 2."""
    f_x = np.asarray(f_x, dtype=complex)
    f_y = np.asarray(f_y, dtype=complex)
    return ComplexJet(
        f=np.asarray(f, dtype=complex),
        f_z=0.5 * (f_x - 1j * f_y),
        f_zbar=0.5 * (f_x + 1j * f_y),
    )


def _identity(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    one = np.ones_like(z)
    return z, one, 1j * one


def _conj(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    one = np.ones_like(z)
    return np.conj(z), one, -1j * one


def _z_abs2(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    r2 = (z * np.conj(z)).real
    f_z = 2.0 * r2
    f_zbar = z * z
    return z * r2, f_z + f_zbar, 1j * (f_z - f_zbar)


def _z_cubed(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    d = 3.0 * z * z
    return z**3, d, 1j * d


# Each entry maps z to (f, f_x, f_y).
COMPLEX_MAPS: Dict[str, ComplexMap] = {
    "z": _identity,
    "conj": _conj,
    "z_abs2": _z_abs2,
    "z_cubed": _z_cubed,
}


def complex_map_jets(name: str, xs: ArrayLike, ys: ArrayLike) -> ComplexJet:
    """f, f_z and f_zbar of a named complex map at the sample points."""
    if name not in COMPLEX_MAPS:
        raise OutOfRange(
            f"Unknown complex map '{name}'.", details={"known": sorted(COMPLEX_MAPS)}
        )
    z = np.asarray(xs, dtype=float) + 1j * np.asarray(ys, dtype=float)
    f, f_x, f_y = COMPLEX_MAPS[name](z)
    return wirtinger(f_x, f_y, f)


def beltrami(
    a11: ArrayLike,
    a12: ArrayLike,
    a22: ArrayLike,
    b1: ArrayLike = 0.0,
    b2: ArrayLike = 0.0,
) -> BeltramiCoefficient:
    """mu = (a11 - a22 + 2i a12) / (a11 + a22) and beta = (b1 + i b2) / (a11 + a22)."""
    a11 = np.asarray(a11, dtype=float)
    a12 = np.asarray(a12, dtype=float)
    a22 = np.asarray(a22, dtype=float)
    trace = a11 + a22
    if np.any(trace <= 0.0):
        raise DegenerateTrace(
            "a11 + a22 must be positive.", details={"trace_min": float(np.min(trace))}
        )
    spread = np.hypot(0.5 * (a11 - a22), a12)
    lam_min = 0.5 * trace - spread
    lam_max = 0.5 * trace + spread
    if np.any(lam_min <= 0.0):
        raise EllipticityViolated(
            "Coefficient matrix is not positive definite.",
            details={"eigenvalue_min": float(np.min(lam_min))},
        )
    mu = (a11 - a22 + 2j * a12) / trace
    beta = (np.asarray(b1, dtype=float) + 1j * np.asarray(b2, dtype=float)) / trace
    modulus = np.abs(mu)
    dilatation = lam_max / lam_min
    defect = float(np.max(np.abs(modulus - (dilatation - 1.0) / (dilatation + 1.0))))
    if defect > 1e-12:
        raise EllipticityViolated(
            f"|mu| and (K - 1)/(K + 1) disagree by {defect!r}.",
            details={"defect": defect},
        )
    return BeltramiCoefficient(
        mu=mu, beta=beta, modulus=modulus, dilatation=dilatation, identity_defect=defect
    )


def ellipticity_bound(lambda1: float, lambda2: float) -> float:
    """mu0 = (K - 1)/(K + 1) with K = lambda2 / lambda1."""
    if not 0.0 < lambda1 <= lambda2:
        raise OutOfRange(
            f"Ellipticity constants ({lambda1}, {lambda2}) must satisfy 0 < l1 <= l2.",
            details={"lambda1": lambda1, "lambda2": lambda2},
        )
    ratio = lambda2 / lambda1
    return (ratio - 1.0) / (ratio + 1.0)


def validate_coefficients(coeffs: EllipticCoefficients, rel_tol: float = 1e-12) -> None:
    """Every sampled eigenvalue must lie in [lambda1, lambda2]."""
    low, high = coeffs.eigenvalues()
    below = np.any(low < coeffs.lambda1 * (1.0 - rel_tol))
    above = np.any(high > coeffs.lambda2 * (1.0 + rel_tol))
    if below or above:
        raise EllipticityViolated(
            "Coefficient eigenvalues leave the ellipticity bracket.",
            details={
                "eigenvalue_min": float(np.min(low)),
                "eigenvalue_max": float(np.max(high)),
                "bracket": [coeffs.lambda1, coeffs.lambda2],
            },
        )


def random_coefficients(
    n: int, lambda1: float, lambda2: float, seed: int = 0
) -> EllipticCoefficients:
    """Symmetric matrices with eigenvalues drawn uniformly from [lambda1, lambda2]."""
    rng = np.random.default_rng(seed)
    e1 = rng.uniform(lambda1, lambda2, n)
    e2 = rng.uniform(lambda1, lambda2, n)
    angle = rng.uniform(0.0, np.pi, n)
    c, s = np.cos(angle), np.sin(angle)
    return EllipticCoefficients(
        a11=e1 * c * c + e2 * s * s,
        a12=(e1 - e2) * c * s,
        a22=e1 * s * s + e2 * c * c,
        b1=np.zeros(n),
        b2=np.zeros(n),
        lambda1=lambda1,
        lambda2=lambda2,
    )


def j_functional(jet: ComplexJet) -> np.ndarray:
    """J = |f_z|^2 - |f_zbar|^2."""
    return np.abs(jet.f_z) ** 2 - np.abs(jet.f_zbar) ** 2


def hessian_wirtinger(
    r: ArrayLike, s: ArrayLike, t: ArrayLike
) -> Tuple[np.ndarray, np.ndarray]:
    """(u_zz, u_zzbar) = ((r - t - 2is)/4, (r + t)/4)."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return 0.25 * (r - t - 2j * s), 0.25 * (r + t) + 0j


def j_hessian_identity_defect(r: ArrayLike, s: ArrayLike, t: ArrayLike) -> np.ndarray:
    """|u_zz|^2 - |u_zzbar|^2 + det(D^2 u)/4, which vanishes identically."""
    u_zz, u_zzbar = hessian_wirtinger(r, s, t)
    det = np.asarray(r) * np.asarray(t) - np.asarray(s) ** 2
    return np.abs(u_zz) ** 2 - np.abs(u_zzbar) ** 2 + 0.25 * det


def complex_gradient_jets(
    surface: GraphSurface, xs: ArrayLike, ys: ArrayLike
) -> ComplexJet:
    """Jets of f = u_z = (u_x - i u_y) / 2."""
    j = surface.jet(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))
    u_zz, u_zzbar = hessian_wirtinger(j.r, j.s, j.t)
    f = 0.5 * (np.asarray(j.p) - 1j * np.asarray(j.q))
    return ComplexJet(f=f, f_z=u_zz, f_zbar=u_zzbar)


def solution_coefficients(
    surface: GraphSurface, xs: ArrayLike, ys: ArrayLike
) -> EllipticCoefficients:
    """Coefficients A = I - (tr D^2u / (2 tau^2)) T with A : D^2u = 0 at every sample.

    T is the traceless part of D^2u and tau^2 = ((u_xx - u_yy)/2)^2 + u_xy^2. The
    eigenvalues of A are 1 -+ |tr D^2u| / (2 tau), bracketed by 1 -+ sqrt(mu_obs)
    with mu_obs the largest observed ratio (tr D^2u)^2 / (4 tau^2).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    j = surface.jet(xs, ys)
    r, s, t = (np.asarray(v, dtype=float) for v in (j.r, j.s, j.t))
    half = 0.5 * (r - t)
    tau2 = half * half + s * s
    if np.any(tau2 <= 0.0):
        raise DenominatorVanishes("Traceless Hessian vanishes at a sample.")
    trace = r + t
    k = trace / (2.0 * tau2)
    mu_obs = float(np.max(trace * trace / (4.0 * tau2)))
    if not mu_obs < 1.0:
        raise EllipticityViolated(f"Observed ratio {mu_obs!r} leaves no ellipticity.")
    root = float(np.sqrt(mu_obs))
    coeffs = EllipticCoefficients(
        a11=1.0 - k * half,
        a12=-k * s,
        a22=1.0 + k * half,
        b1=np.zeros_like(r),
        b2=np.zeros_like(r),
        lambda1=1.0 - root,
        lambda2=1.0 + root,
        x=xs,
        y=ys,
    )
    validate_coefficients(coeffs)
    return coeffs


def similarity_inequality_check(
    jets: ComplexJet,
    mu0: float,
    c: float,
    xs: ArrayLike,
    ys: ArrayLike,
    eps_cert: Optional[float] = None,
    claim_id: str = "3.2/anaine",
) -> Certificate:
    """Certify |f_zbar| <= mu0 |f_z| + c |f|; the witness carries |f_z| and |f_zbar|."""
    if not (0.0 <= mu0 < 1.0 and c >= 0.0):
        raise OutOfRange(f"Need 0 <= mu0 < 1 and c >= 0, got ({mu0}, {c}).")
    eps = settings.EPS_CERT if eps_cert is None else eps_cert
    a_fz = np.ravel(np.abs(jets.f_z))
    a_fzbar = np.ravel(np.abs(jets.f_zbar))
    a_f = np.ravel(np.broadcast_to(np.abs(jets.f), np.shape(jets.f_z)))
    xs = np.ravel(np.asarray(xs, dtype=float))
    ys = np.ravel(np.asarray(ys, dtype=float))
    samples = diagnostics_service.positions(xs, ys, a_fz, a_fzbar)
    margins = mu0 * a_fz + c * a_f - a_fzbar
    return diagnostics_service.build_certificate(
        claim_id,
        samples,
        margins,
        eps * (1.0 + a_fz + a_fzbar + c * a_f),
        details={"mu0": mu0, "c": c, "witness_fields": "kappa1=|f_z|, kappa2=|f_zbar|"},
    )


def critical_point_scan(
    surface: GraphSurface,
    center: Tuple[float, float] = (0.0, 0.0),
    annulus: Tuple[float, float] = (0.1, 0.5),
    n: int = 64,
    loop_samples: int = 256,
    loop_radii: Optional[Sequence[float]] = None,
) -> CriticalPointReport:
    """Sign of det D^2u on an annulus and windings of grad u_x and grad u_y."""
    j0 = surface.jet(np.array([center[0]]), np.array([center[1]]))
    grad = float(np.hypot(np.asarray(j0.p)[0], np.asarray(j0.q)[0]))
    if grad > 1e-12:
        raise NotACriticalPoint(
            f"|grad u| = {grad!r} at {center}.", details={"gradient_norm": grad}
        )
    xs, ys = surface_service.annulus_points(annulus[0], annulus[1], n, n, center)
    det = np.asarray(surface.jet(xs, ys).hessian_det(), dtype=float)
    det_max = float(np.max(det))

    def grad_ux(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        jet = surface.jet(x, y)
        return jet.r, jet.s

    def grad_uy(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        jet = surface.jet(x, y)
        return jet.s, jet.t

    radii = list(loop_radii) if loop_radii is not None else [annulus[0], annulus[1]]
    index_ux, index_uy = [], []
    for radius in radii:
        loop = LoopSampling(center=center, radius=radius, n=loop_samples)
        index_ux.append(index_service.winding_number(grad_ux, loop))
        index_uy.append(index_service.winding_number(grad_uy, loop))
    report = CriticalPointReport(
        center=center,
        annulus=annulus,
        samples=int(xs.size),
        det_max=det_max,
        det_negative=det_max < 0.0,
        index_ux=index_ux,
        index_uy=index_uy,
    )
    log.info(
        f"Critical point scan of '{surface.name}': det max {det_max!r}, "
        f"indices {index_ux} / {index_uy}."
    )
    return report
