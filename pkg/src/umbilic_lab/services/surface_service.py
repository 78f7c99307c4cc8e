import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike

from ..core.config import settings
from ..core.exceptions import (
    AxisSingularity,
    DiscriminantNegative,
    StencilOutsideDomain,
)
from ..models import (
    CurvatureSamples,
    Domain,
    GraphSurface,
    Jet2,
    Profile,
    RotationalCurvatures,
    ShapeOperatorSample,
)

log = logging.getLogger(__name__)

ValueFn = Callable[[ArrayLike, ArrayLike], ArrayLike]

# Multiples of h the evaluator must be defined on around a jet point.
STENCIL_REACH = 4.0


def mean_gauss_from_jet(j: Jet2) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and Gauss curvature of a graph for the upward normal."""
    p, q, r, s, t = (np.asarray(v, dtype=float) for v in j.as_tuple())
    w2 = 1.0 + p * p + q * q
    H = (r * (1.0 + q * q) - 2.0 * p * q * s + (1.0 + p * p) * t) / (2.0 * w2**1.5)  # noqa: N806
    K = (r * t - s * s) / (w2 * w2)  # noqa: N806
    return H, K


def principal_from_hk(
    H: ArrayLike, K: ArrayLike, eps_disc: Optional[float] = None  # noqa: N803
) -> Tuple[np.ndarray, np.ndarray]:
    """Principal curvatures kappa1 >= kappa2; tiny negative discriminants clamp to 0."""
    eps = settings.EPS_DISC if eps_disc is None else eps_disc
    H = np.asarray(H, dtype=float)  # noqa: N806
    K = np.asarray(K, dtype=float)  # noqa: N806
    disc = H * H - K
    bad = disc < -eps * (1.0 + H * H)
    if np.any(bad):
        worst = float(np.min(disc))
        raise DiscriminantNegative(
            f"H^2 - K = {worst!r} is negative beyond tolerance.",
            details={"discriminant": worst, "count": int(np.count_nonzero(bad))},
        )
    root = np.sqrt(np.maximum(disc, 0.0))
    return H + root, H - root


def shape_operator(
    j: Jet2, x: ArrayLike = 0.0, y: ArrayLike = 0.0
) -> ShapeOperatorSample:
    """Matrix alpha_ij = d_i Psi_j(grad u) with Psi = grad u / sqrt(1 + |grad u|^2)."""
    p, q, r, s, t = (np.asarray(v, dtype=float) for v in j.as_tuple())
    w3 = (1.0 + p * p + q * q) ** 1.5
    a11 = ((1.0 + q * q) * r - p * q * s) / w3
    a12 = (-p * q * r + (1.0 + p * p) * s) / w3
    a21 = ((1.0 + q * q) * s - p * q * t) / w3
    a22 = (-p * q * s + (1.0 + p * p) * t) / w3
    rows = [np.stack([a11, a12], axis=-1), np.stack([a21, a22], axis=-1)]
    matrix = np.stack(rows, axis=-2)
    return ShapeOperatorSample(matrix=matrix, x=x, y=y)


def _central(
    value: ValueFn, x: np.ndarray, y: np.ndarray, h: float
) -> Tuple[np.ndarray, ...]:
    f0 = np.asarray(value(x, y), dtype=float)
    fxp = np.asarray(value(x + h, y), dtype=float)
    fxm = np.asarray(value(x - h, y), dtype=float)
    fyp = np.asarray(value(x, y + h), dtype=float)
    fym = np.asarray(value(x, y - h), dtype=float)
    fpp = np.asarray(value(x + h, y + h), dtype=float)
    fpm = np.asarray(value(x + h, y - h), dtype=float)
    fmp = np.asarray(value(x - h, y + h), dtype=float)
    fmm = np.asarray(value(x - h, y - h), dtype=float)
    p = (fxp - fxm) / (2.0 * h)
    q = (fyp - fym) / (2.0 * h)
    r = (fxp - 2.0 * f0 + fxm) / (h * h)
    t = (fyp - 2.0 * f0 + fym) / (h * h)
    s = (fpp - fpm - fmp + fmm) / (4.0 * h * h)
    return f0, p, q, r, s, t


def finite_difference_jet(
    value: ValueFn,
    x: ArrayLike,
    y: ArrayLike,
    h: float = 1e-3,
    domain: Optional[Domain] = None,
) -> Jet2:
    """Central-difference jet with one Richardson step between h and h/2.

    The error estimate is the largest entry-wise difference between the two
    resolutions. With a domain, the square of half-width STENCIL_REACH * h
    around every point must lie inside it.
    """
    if h <= 0:
        raise ValueError("Finite-difference step must be positive.")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if domain is not None:
        reach = STENCIL_REACH * h
        corners_ok = np.ones(np.broadcast(x, y).shape, dtype=bool)
        for dx in (-reach, 0.0, reach):
            for dy in (-reach, 0.0, reach):
                corners_ok &= domain.contains(x + dx, y + dy)
        if not np.all(corners_ok):
            raise StencilOutsideDomain(
                f"The {reach}-neighborhood of the stencil leaves the domain.",
                details=domain.describe(),
            )
    coarse = _central(value, x, y, h)
    fine = _central(value, x, y, 0.5 * h)
    extrapolated = [(4.0 * b - a) / 3.0 for a, b in zip(coarse[1:], fine[1:])]
    gaps = [np.abs(b - a) for a, b in zip(coarse[1:], fine[1:])]
    error = np.max(np.stack(gaps), axis=0)
    p, q, r, s, t = extrapolated
    return Jet2(p=p, q=q, r=r, s=s, t=t, value=fine[0], error=error)


def rotate_jet(j: Jet2, phi: float) -> Jet2:
    """Jet of the same graph in a chart rotated by phi (Hessian R D R^T)."""
    c, s_ = math.cos(phi), math.sin(phi)
    p, q, r, s, t = (np.asarray(v, dtype=float) for v in j.as_tuple())
    return Jet2(
        p=c * p - s_ * q,
        q=s_ * p + c * q,
        r=c * c * r - 2.0 * c * s_ * s + s_ * s_ * t,
        s=c * s_ * (r - t) + (c * c - s_ * s_) * s,
        t=s_ * s_ * r + 2.0 * c * s_ * s + c * c * t,
        value=j.value,
    )


def curvature_samples(
    surface: GraphSurface,
    xs: ArrayLike,
    ys: ArrayLike,
    eps_disc: Optional[float] = None,
) -> CurvatureSamples:
    """Evaluate H, K and principal curvatures of a graph on a point set."""
    xs = np.ravel(np.asarray(xs, dtype=float))
    ys = np.ravel(np.asarray(ys, dtype=float))
    j = surface.jet(xs, ys)
    H, K = mean_gauss_from_jet(j)  # noqa: N806
    k1, k2 = principal_from_hk(H, K, eps_disc=eps_disc)
    H = np.broadcast_to(H, xs.shape).astype(float)  # noqa: N806
    K = np.broadcast_to(K, xs.shape).astype(float)  # noqa: N806
    return CurvatureSamples(
        x=xs,
        y=ys,
        H=H,
        K=K,
        kappa1=np.broadcast_to(k1, xs.shape).astype(float),
        kappa2=np.broadcast_to(k2, xs.shape).astype(float),
    )


def grid_points(
    domain: Domain, n: int, margin: float = 0.0
) -> Tuple[np.ndarray, np.ndarray]:
    """Flattened n x n grid over the domain's bounding box, restricted to the domain."""
    x0, x1, y0, y1 = domain.bounds()
    gx = np.linspace(x0 + margin, x1 - margin, n)
    gy = np.linspace(y0 + margin, y1 - margin, n)
    X, Y = np.meshgrid(gx, gy, indexing="ij")  # noqa: N806
    X, Y = X.ravel(), Y.ravel()  # noqa: N806
    keep = domain.contains(X, Y)
    return X[keep], Y[keep]


def annulus_points(
    r_in: float,
    r_out: float,
    n_r: int,
    n_theta: int,
    center: Tuple[float, float] = (0.0, 0.0),
) -> Tuple[np.ndarray, np.ndarray]:
    """Polar grid on r_in <= r <= r_out, geometrically spaced in r."""
    if not 0 < r_in < r_out:
        raise ValueError("Annulus radii must satisfy 0 < r_in < r_out.")
    radii = np.geomspace(r_in, r_out, n_r)
    angles = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    R, T = np.meshgrid(radii, angles, indexing="ij")  # noqa: N806
    return center[0] + (R * np.cos(T)).ravel(), center[1] + (R * np.sin(T)).ravel()


def random_annulus_points(
    r_in: float, r_out: float, n: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """n random points with log-uniform radius on r_in <= r <= r_out."""
    if not 0 < r_in < r_out:
        raise ValueError("Annulus radii must satisfy 0 < r_in < r_out.")
    r = np.exp(rng.uniform(np.log(r_in), np.log(r_out), n))
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    return r * np.cos(phi), r * np.sin(phi)



def surface_grid(surface: GraphSurface, n: int) -> CurvatureSamples:
    """Curvature samples of a graph on an n x n grid of its domain."""
    xs, ys = grid_points(surface.domain, n)
    log.debug(f"Sampling '{surface.name}' on {xs.size} grid points.")
    return curvature_samples(surface, xs, ys)


def rotational_curvatures(
    pf: Profile,
    x_min_tol: Optional[float] = None,
    s_range: Optional[Tuple[float, float]] = None,
) -> RotationalCurvatures:
    """Meridian curvature kappa and parallel curvature sin(theta)/x along a profile.

    Samples with x <= x_min_tol are axis-adjacent and take the rotational limit
    value kappa.
    """
    tol = settings.X_MIN_TOL if x_min_tol is None else x_min_tol
    idx = np.arange(pf.s.size)
    if s_range is not None:
        idx = idx[(pf.s >= s_range[0]) & (pf.s <= s_range[1])]
    s = pf.s[idx]
    x = pf.x[idx]
    theta = pf.theta[idx]
    kappa = pf.kappa[idx]

    interior = np.zeros(s.size, dtype=bool)
    interior[1:-1] = True
    crossed = (interior & (x <= 0.0)) | (x < -tol)
    if np.any(crossed):
        bad = int(np.argmax(crossed))
        raise AxisSingularity(
            f"Profile meets the rotation axis at s = {s[bad]!r}.",
            details={"s": float(s[bad]), "x": float(x[bad])},
        )
    axis = x <= tol
    safe_x = np.where(axis, 1.0, x)
    parallel = np.where(axis, kappa, np.sin(theta) / safe_x)
    return RotationalCurvatures(
        s=s, kappa_meridian=kappa.copy(), kappa_parallel=parallel, axis_adjacent=axis
    )


def rotational_samples(
    pf: Profile, curvatures: Optional[RotationalCurvatures] = None
) -> CurvatureSamples:
    """Curvature samples of a profile, positioned at the profile coordinates (x, z)."""
    rc = curvatures if curvatures is not None else rotational_curvatures(pf)
    index = np.searchsorted(pf.s, rc.s)
    return CurvatureSamples.from_principal(
        pf.x[index],
        pf.z[index],
        rc.kappa_meridian,
        rc.kappa_parallel,
        axis_adjacent=rc.axis_adjacent,
    )
