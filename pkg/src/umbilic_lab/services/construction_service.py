import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy import integrate, optimize

from ..core.config import settings
from ..core.exceptions import (
    AxesNotDistinct,
    DenominatorVanishes,
    DomainTooLarge,
    EmbeddednessViolated,
    NoBracket,
    OutOfRange,
    PostconditionViolated,
)
from ..models import (
    ConvergenceStudy,
    CurvatureSamples,
    Domain,
    GraphSurface,
    Jet2,
    MuBound,
    Profile,
    TubeSamples,
)
from ..schemas.certificate import Certificate
from ..schemas.construction import FourierSeries, TubeSpec
from . import diagnostics_service, surface_service

log = logging.getLogger(__name__)

SIMPSON_PANELS = 10_000
CLOSURE_TOL = 1e-6
MAX_NECK_DISPLACEMENT = 1e-3


# ---------------------------------------------------------------------------
# Quasiminimal polynomial graph


def _h(x: ArrayLike, y: ArrayLike) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return x**5 * y + 17.0 * x**3 * y**3 + 16.0 * x * y**5


def _h_jet(x: ArrayLike, y: ArrayLike) -> Jet2:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x2, y2 = x * x, y * y
    return Jet2(
        p=5.0 * x2 * x2 * y + 51.0 * x2 * y2 * y + 16.0 * y2 * y2 * y,
        q=x2 * x2 * x + 51.0 * x2 * x * y2 + 80.0 * x * y2 * y2,
        r=20.0 * x2 * x * y + 102.0 * x * y2 * y,
        s=5.0 * x2 * x2 + 153.0 * x2 * y2 + 80.0 * y2 * y2,
        t=102.0 * x2 * x * y + 320.0 * x * y2 * y,
        value=_h(x, y),
    )


def quasiminimal_polynomial(domain: Optional[Domain] = None) -> GraphSurface:
    """Graph of h = xy (x^2 + y^2)(x^2 + 16 y^2) with exact polynomial jets."""
    return GraphSurface(
        name="quasiminimal-polynomial",
        value=_h,
        jet=_h_jet,
        domain=domain or Domain.rectangle(-1.0, 1.0, -1.0, 1.0),
    )


def _mu_ratios(radius: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    j = _h_jet(radius * np.cos(theta), radius * np.sin(theta))
    r, s, t = (np.asarray(v) for v in (j.r, j.s, j.t))
    denom = (r - t) ** 2 + 4.0 * s * s
    if np.any(denom <= 0.0):
        k = int(np.argmin(denom))
        raise DenominatorVanishes(
            f"Traceless Hessian vanishes at theta = {theta[k]!r}.",
            details={"theta": float(theta[k]), "radius": radius},
        )
    return theta, (r + t) ** 2 / denom


def polynomial_mu_bound(n: int = 4096) -> MuBound:
    """Max of (h_xx + h_yy)^2 / ((h_xx - h_yy)^2 + 4 h_xy^2) over the unit circle."""
    if n < 1024:
        raise OutOfRange(
            f"Need at least 1024 circle samples, got {n}.", details={"n": n}
        )
    theta, ratios = _mu_ratios(1.0, n)
    _, ratios_r2 = _mu_ratios(2.0, n)
    defect = float(np.max(np.abs(ratios - ratios_r2)))
    if defect > 1e-12:
        raise OutOfRange(
            f"Ratios are not scale invariant (defect {defect!r}).",
            details={"defect": defect},
        )
    k = int(np.argmax(ratios))
    mu_star = float(ratios[k])
    if not mu_star < 1.0:
        raise OutOfRange(
            f"mu* = {mu_star!r} is not below 1.", details={"mu_star": mu_star}
        )
    log.info(f"Polynomial bound mu* = {mu_star!r} at theta = {theta[k]!r}.")
    return MuBound(
        mu_star=mu_star,
        theta_max=float(theta[k]),
        samples=n,
        homogeneity_defect=defect,
    )


def quasiminimal_radius(
    mu: float,
    radii: Sequence[float],
    inner: float = 1e-3,
    n_r: int = 48,
    n_theta: int = 256,
) -> Tuple[Optional[float], List[Dict[str, float]]]:
    """Largest outer radius whose annulus still passes check_quasi_cmc with c = 0."""
    surface = quasiminimal_polynomial(Domain.disk(max(radii) * 1.01))
    best: Optional[float] = None
    sweep: List[Dict[str, float]] = []
    for radius in sorted(radii):
        xs, ys = surface_service.annulus_points(inner, radius, n_r, n_theta)
        cert = diagnostics_service.check_quasi_cmc(
            surface_service.curvature_samples(surface, xs, ys), 0.0, mu
        )
        margin = cert.witness.margin if cert.witness is not None else 0.0
        sweep.append({"radius": radius, "margin": margin, "holds": float(cert.holds)})
        if cert.holds:
            best = radius
    return best, sweep


# ---------------------------------------------------------------------------
# Sandglass sphere


def check_sandglass_parameters(a: float, b: float) -> None:
    """Raise OutOfRange unless pi/2 < a < b < min(pi, a + sin a)."""
    if not (math.pi / 2 < a < b < math.pi and b < a + math.sin(a)):
        raise OutOfRange(
            f"(a, b) = ({a!r}, {b!r}) violates pi/2 < a < b < min(pi, a + sin a).",
            details={"a": a, "b": b},
        )


@dataclass(frozen=True)
class BumpProfile:
    """psi(s) = exp(-1/(s-a)) exp(-1/(b-s)) on (a, b) and its primitive Phi."""

    a: float
    b: float

    def psi(self, s: ArrayLike) -> np.ndarray:
        """Bump density, zero outside (a, b)."""
        s = np.asarray(s, dtype=float)
        t1 = s - self.a
        t2 = self.b - s
        inside = (t1 > 0.0) & (t2 > 0.0)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            t1 = np.where(inside, t1, 1.0)
            t2 = np.where(inside, t2, 1.0)
            exponent = np.where(inside, -1.0 / t1 - 1.0 / t2, -np.inf)
        return np.exp(exponent)

    def _psi_scalar(self, s: float) -> float:
        t1 = s - self.a
        t2 = self.b - s
        if t1 <= 0.0 or t2 <= 0.0:
            return 0.0
        return math.exp(-1.0 / t1 - 1.0 / t2)

    def phi(self, s: ArrayLike) -> np.ndarray:
        """Primitive of psi from a, by cumulative quadrature over sorted nodes."""
        arr = np.asarray(s, dtype=float)
        flat = np.clip(arr.ravel(), self.a, self.b)
        order = np.argsort(flat, kind="stable")
        knots = np.concatenate(([self.a], flat[order]))
        pieces = np.zeros(flat.size)
        for k in range(flat.size):
            lo, hi = knots[k], knots[k + 1]
            if hi > lo:
                pieces[k] = integrate.quad(
                    self._psi_scalar, lo, hi, epsabs=1e-20, epsrel=1e-12, limit=200
                )[0]
        out = np.empty(flat.size)
        out[order] = np.cumsum(pieces)
        return out.reshape(arr.shape)

    def phi_total(self) -> float:
        """Phi(b)."""
        return float(self.phi(np.array([self.b]))[0])

    def phi_integral(self, panels: int = SIMPSON_PANELS) -> float:
        """Integral of Phi over [a, b], as Simpson on (b - s) psi(s)."""
        return _phi_integral(self.a, self.b, max(panels, SIMPSON_PANELS))


@lru_cache(maxsize=64)
def _phi_integral(a: float, b: float, panels: int) -> float:
    grid = np.linspace(a, b, panels + 1)
    bump = BumpProfile(a, b)
    return float(integrate.simpson((b - grid) * bump.psi(grid), x=grid))


def amplitude_residual(a: float, b: float, amplitude: float) -> float:
    """Integral of kappa = 1 - A Phi over [a, b] minus its target pi/2 - a."""
    return (b - a) - amplitude * BumpProfile(a, b).phi_integral() - (math.pi / 2 - a)


def solve_bump_amplitude(a: float, b: float, xtol: float = 1e-12) -> float:
    """Amplitude A with the neck integral of kappa equal to pi/2 - a."""
    check_sandglass_parameters(a, b)
    f = lambda A: amplitude_residual(a, b, A)  # noqa: E731, N803
    hi = 1.0
    doublings = 0
    while f(hi) > 0.0:
        hi *= 2.0
        doublings += 1
        if doublings > 200:
            raise NoBracket(
                f"No sign change of the amplitude residual up to A = {hi!r}."
            )
    log.debug(f"Amplitude bracket [0, {hi}] after {doublings} doublings.")
    rtol = 4 * np.finfo(float).eps
    amplitude = float(
        optimize.bisect(f, 0.0, hi, xtol=xtol, rtol=rtol, maxiter=500)
    )
    log.info(f"Bump amplitude A = {amplitude!r} for (a, b) = ({a}, {b}).")
    return amplitude


def integrate_profile(
    a: float,
    b: float,
    amplitude: float,
    step: float = 1e-4,
    enforce: bool = True,
) -> Profile:
    """Generating curve with theta' = 1 - A Phi(s), from the origin heading along x.

    Nodes up to a lie on the exact unit circle; RK4 takes over from there.
    """
    check_sandglass_parameters(a, b)
    n = max(1, int(round(b / step)))
    s = np.linspace(0.0, b, n + 1)
    h = b / n
    k0 = min(int(math.floor(a / h)), n)
    bump = BumpProfile(a, b)

    x = np.empty(n + 1)
    z = np.empty(n + 1)
    theta = np.empty(n + 1)
    kappa = np.ones(n + 1)
    cap = s[: k0 + 1]
    x[: k0 + 1] = np.sin(cap)
    z[: k0 + 1] = 1.0 - np.cos(cap)
    theta[: k0 + 1] = cap

    half = np.linspace(s[k0], b, 2 * (n - k0) + 1)
    k_half = 1.0 - amplitude * bump.phi(half)
    kappa[k0:] = k_half[::2]

    xi, zi, th = float(x[k0]), float(z[k0]), float(theta[k0])
    for i in range(k0, n):
        j = 2 * (i - k0)
        k1, km, k2 = k_half[j], k_half[j + 1], k_half[j + 2]
        th1 = th
        th2 = th + 0.5 * h * k1
        th3 = th + 0.5 * h * km
        th4 = th + h * km
        cos_sum = math.cos(th1) + 2.0 * (math.cos(th2) + math.cos(th3)) + math.cos(th4)
        sin_sum = math.sin(th1) + 2.0 * (math.sin(th2) + math.sin(th3)) + math.sin(th4)
        xi += h / 6.0 * cos_sum
        zi += h / 6.0 * sin_sum
        th += h / 6.0 * (k1 + 4.0 * km + k2)
        x[i + 1], z[i + 1], theta[i + 1] = xi, zi, th

    residual = float(theta[-1] - math.pi / 2)
    checks = {
        "closure": abs(residual) <= CLOSURE_TOL,
        "theta_below_pi": bool(np.all(theta < math.pi)),
        "x_positive": bool(np.all(x[1:] > 0.0)),
    }
    profile = Profile(
        s=s,
        x=x,
        z=z,
        theta=theta,
        kappa=kappa,
        step=h,
        closure_residual=residual,
        postconditions=checks,
        meta={"a": a, "b": b, "amplitude": amplitude, "rk_start": float(s[k0])},
    )
    log.info(f"Integrated profile with {n} steps, closure residual {residual!r}.")
    if enforce:
        failed = [name for name, ok in checks.items() if not ok]
        if failed:
            raise PostconditionViolated(
                f"Profile postcondition '{failed[0]}' violated.",
                details={"failed": failed, "closure_residual": residual},
            )
    return profile


def sandglass_samples(pf: Profile, mirror: bool = True) -> CurvatureSamples:
    """Curvature samples of the lower half and, optionally, its mirror across z(b)."""
    lower = surface_service.rotational_samples(pf)
    if not mirror:
        return lower
    upper_index = np.arange(len(lower) - 2, -1, -1)
    upper = lower.take(upper_index)
    upper = CurvatureSamples(
        x=upper.x,
        y=2.0 * float(pf.z[-1]) - upper.y,
        H=upper.H,
        K=upper.K,
        kappa1=upper.kappa1,
        kappa2=upper.kappa2,
        axis_adjacent=upper.axis_adjacent,
    )
    return CurvatureSamples.concat([lower, upper])


def _neck_window(pf: Profile, fraction: float) -> np.ndarray:
    a, b = pf.meta["a"], pf.meta["b"]
    amplitude = pf.meta["amplitude"]
    open_neck = (pf.s > a) & (pf.s < b)
    if amplitude <= 0.0:
        return np.zeros(pf.s.size, dtype=bool)
    phi = (1.0 - pf.kappa) / amplitude
    phi_b = BumpProfile(a, b).phi_total()
    return open_neck & (phi >= fraction * phi_b)


def _curvature_certificates(
    samples: CurvatureSamples,
    kappa: np.ndarray,
    parallel: np.ndarray,
    window: np.ndarray,
    mirrored: CurvatureSamples,
    eps: float,
    suffix: str = "",
) -> List[Certificate]:
    tol = eps * (1.0 + samples.H * samples.H + np.abs(samples.K))
    in_window = samples.take(window)
    le_one = diagnostics_service.build_certificate(
        f"A.2/kappa-le-1{suffix}", samples, 1.0 - kappa, tol
    )
    lt_one = diagnostics_service.build_certificate(
        f"A.2/kappa-le-1{suffix}",
        in_window,
        1.0 - kappa[window],
        tol[window],
        strict=True,
    )
    gt_one = diagnostics_service.build_certificate(
        f"A.2/parallel-gt-1{suffix}",
        in_window,
        parallel[window] - 1.0,
        tol[window],
        strict=True,
    )
    alexandrov = diagnostics_service.check_alexandrov(
        mirrored, 1.0, eps_cert=eps, claim_id=f"A.2/ecuno{suffix}"
    )
    le_merged = diagnostics_service.merge_certificates([le_one, lt_one])
    return [le_merged, gt_one, alexandrov]


def sandglass_verify(
    pf: Profile, eps_cert: Optional[float] = None, window_fraction: float = 1e-6
) -> List[Certificate]:
    """Closure, embedding and curvature certificates of a sandglass profile.

    Strict neck inequalities are certified where Phi(s) >= window_fraction Phi(b);
    closer to s = a the bump is below rounding.
    """
    eps = settings.EPS_CERT if eps_cert is None else eps_cert
    rc = surface_service.rotational_curvatures(pf)
    samples = surface_service.rotational_samples(pf, rc)
    mirrored = sandglass_samples(pf)
    window = _neck_window(pf, window_fraction)
    tol = eps * (1.0 + samples.H * samples.H + np.abs(samples.K))

    closure = diagnostics_service.build_certificate(
        "A.2/closure",
        samples.take(np.array([len(samples) - 1])),
        np.array([CLOSURE_TOL - abs(pf.closure_residual)]),
        0.0,
        details={"closure_residual": pf.closure_residual, "tolerance": CLOSURE_TOL},
    )
    embedded_margin = np.minimum(pf.x, math.pi - pf.theta)
    embedded_margin[0] = math.pi - pf.theta[0]
    embedded = diagnostics_service.build_certificate(
        "A.2/profile",
        samples,
        embedded_margin,
        0.0,
        strict=True,
        details={"postconditions": dict(pf.postconditions)},
    )
    in_window = samples.take(window)
    monotone = diagnostics_service.build_certificate(
        "A.2/monotone",
        in_window,
        np.sin(pf.theta[window]) - pf.x[window] * pf.kappa[window],
        tol[window],
        strict=True,
    )
    le_one, gt_one, alexandrov = _curvature_certificates(
        samples, rc.kappa_meridian, rc.kappa_parallel, window, mirrored, eps
    )
    return [closure, embedded, le_one, gt_one, monotone, alexandrov]


def _displacement(
    a: float, b: float, amplitude: float, s: np.ndarray
) -> Tuple[np.ndarray, ...]:
    lo = a + 0.4 * (b - a)
    hi = b - 0.1 * (b - a)
    sigma = s - lo
    tau = hi - s
    inside = (sigma > 0.0) & (tau > 0.0)
    sg = np.where(inside, sigma, 1.0)
    tg = np.where(inside, tau, 1.0)
    base = np.where(inside, np.exp(-1.0 / sg - 1.0 / tg), 0.0)
    live = base > 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        d1s, d1t = 1.0 / sg**2, 1.0 / tg**2
        d2s = 1.0 / sg**4 - 2.0 / sg**3
        d2t = 1.0 / tg**4 - 2.0 / tg**3
        norm = math.exp(-4.0 / (hi - lo))
        g = base / norm
        g1 = np.where(live, base * (d1s - d1t), 0.0) / norm
        g2 = np.where(live, base * (d2s - 2.0 * d1s * d1t + d2t), 0.0) / norm
    return amplitude * g, amplitude * g1, amplitude * g2


def perturbed_neck_curvatures(
    pf: Profile, amplitude: float = 1e-9, eps_cert: Optional[float] = None
) -> Tuple[CurvatureSamples, List[Certificate]]:
    """Curvatures after a small normal displacement supported inside the neck.

    The curve becomes X + d N with N the left normal; its curvatures are updated
    in closed form and the neck certificates are re-run on the result.
    """
    if not 0.0 <= amplitude <= MAX_NECK_DISPLACEMENT:
        raise OutOfRange(
            f"Neck displacement {amplitude!r} exceeds {MAX_NECK_DISPLACEMENT}.",
            details={"amplitude": amplitude},
        )
    eps = settings.EPS_CERT if eps_cert is None else eps_cert
    a, b, A = pf.meta["a"], pf.meta["b"], pf.meta["amplitude"]  # noqa: N806
    d, d1, d2 = _displacement(a, b, amplitude, pf.s)
    kappa = pf.kappa
    dkappa = -A * BumpProfile(a, b).psi(pf.s)
    sin_t, cos_t = np.sin(pf.theta), np.cos(pf.theta)
    stretch = 1.0 - kappa * d
    speed = np.sqrt(stretch**2 + d1**2)
    numerator = stretch * (kappa * stretch + d2) + d1 * (dkappa * d + 2.0 * kappa * d1)
    new_kappa = numerator / speed**3
    new_x = pf.x - d * sin_t
    new_z = pf.z + d * cos_t
    axis = new_x <= settings.X_MIN_TOL
    safe_x = np.where(axis, 1.0, new_x)
    new_parallel = np.where(
        axis, new_kappa, (stretch * sin_t + d1 * cos_t) / (speed * safe_x)
    )

    samples = CurvatureSamples.from_principal(
        new_x, new_z, new_kappa, new_parallel, axis
    )
    upper = samples.take(np.arange(len(samples) - 2, -1, -1))
    mirrored = CurvatureSamples.concat(
        [
            samples,
            CurvatureSamples(
                x=upper.x,
                y=2.0 * float(new_z[-1]) - upper.y,
                H=upper.H,
                K=upper.K,
                kappa1=upper.kappa1,
                kappa2=upper.kappa2,
                axis_adjacent=upper.axis_adjacent,
            ),
        ]
    )
    window = _neck_window(pf, 1e-6)
    certs = _curvature_certificates(
        samples, new_kappa, new_parallel, window, mirrored, eps, suffix="/perturbed"
    )
    log.info(f"Re-ran neck certificates after a displacement of size {amplitude!r}.")
    return mirrored, certs


def closure_convergence(
    a: float,
    b: float,
    steps: Sequence[float] = (4e-3, 2e-3, 1e-3),
    amplitude: Optional[float] = None,
) -> ConvergenceStudy:
    """Step-halving study of the profile end point.

    The angle residual integrates a flat-ended kappa and converges faster than
    any power of the step, so ratios are taken from successive differences of
    the end point (x(b), z(b)).
    """
    if len(steps) < 3:
        raise OutOfRange("A convergence study needs at least three steps.")
    A = amplitude if amplitude is not None else solve_bump_amplitude(a, b)  # noqa: N806
    residuals: List[float] = []
    ends: List[np.ndarray] = []
    for step in steps:
        pf = integrate_profile(a, b, A, step, enforce=False)
        residuals.append(pf.closure_residual)
        ends.append(np.array([pf.x[-1], pf.z[-1]]))
    diffs = [float(np.linalg.norm(ends[k] - ends[k + 1])) for k in range(len(ends) - 1)]
    ratios = [
        diffs[k] / diffs[k + 1] if diffs[k + 1] > 0 else float("inf")
        for k in range(len(diffs) - 1)
    ]
    log.info(f"Closure convergence ratios: {ratios}.")
    return ConvergenceStudy(
        steps=list(steps),
        closure_residuals=residuals,
        endpoint_differences=diffs,
        ratios=ratios,
    )


# ---------------------------------------------------------------------------
# Tubes


def _fourier(series: FourierSeries, t: np.ndarray, order: int) -> np.ndarray:
    out = np.full(t.shape, series.const if order == 0 else 0.0)
    for k, coef in enumerate(series.cos, start=1):
        phase = [np.cos, lambda u: -np.sin(u), lambda u: -np.cos(u)][order]
        out = out + coef * k**order * phase(k * t)
    for k, coef in enumerate(series.sin, start=1):
        phase = [np.sin, np.cos, lambda u: -np.sin(u)][order]
        out = out + coef * k**order * phase(k * t)
    return out


def _curve(spec: TubeSpec, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    drift = np.asarray(spec.drift, dtype=float)
    c0 = np.stack([_fourier(f, t, 0) for f in spec.curve], axis=-1) + np.outer(t, drift)
    c1 = np.stack([_fourier(f, t, 1) for f in spec.curve], axis=-1) + drift
    c2 = np.stack([_fourier(f, t, 2) for f in spec.curve], axis=-1)
    return c0, c1, c2


def _rotation_minimizing_frame(points: np.ndarray, tangents: np.ndarray) -> np.ndarray:
    """First normal vector of a double-reflection frame along sampled points."""
    t0 = tangents[0]
    seed = np.array([0.0, 0.0, 1.0]) if abs(t0[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    r = seed - np.dot(seed, t0) * t0
    r /= np.linalg.norm(r)
    frame = np.empty_like(points)
    frame[0] = r
    for i in range(len(points) - 1):
        v1 = points[i + 1] - points[i]
        c1 = float(np.dot(v1, v1))
        if c1 == 0.0:
            frame[i + 1] = r
            continue
        r_l = r - (2.0 / c1) * np.dot(v1, r) * v1
        t_l = tangents[i] - (2.0 / c1) * np.dot(v1, tangents[i]) * v1
        v2 = tangents[i + 1] - t_l
        c2 = float(np.dot(v2, v2))
        r = r_l if c2 == 0.0 else r_l - (2.0 / c2) * np.dot(v2, r_l) * v2
        r = r - np.dot(r, tangents[i + 1]) * tangents[i + 1]
        r /= np.linalg.norm(r)
        frame[i + 1] = r
    return frame


def tube_surface(spec: TubeSpec) -> Tuple[CurvatureSamples, TubeSamples]:
    """Principal curvatures 1/r and -k.n / (1 - r k.n) of a tube on a (t, phi) grid."""
    t = np.linspace(0.0, 2.0 * np.pi, spec.n_t, endpoint=False)
    phi = np.linspace(0.0, 2.0 * np.pi, spec.n_phi, endpoint=False)
    c0, c1, c2 = _curve(spec, t)
    speed = np.linalg.norm(c1, axis=-1)
    if np.any(speed == 0.0):
        raise OutOfRange("Center curve is not regular.")
    tangent = c1 / speed[:, None]
    normal_part = c2 - np.sum(c2 * tangent, axis=-1)[:, None] * tangent
    kvec = normal_part / (speed**2)[:, None]
    r_vec = _rotation_minimizing_frame(c0, tangent)
    b_vec = np.cross(tangent, r_vec)
    k1 = np.sum(kvec * r_vec, axis=-1)
    k2 = np.sum(kvec * b_vec, axis=-1)
    k_max = float(np.max(np.hypot(k1, k2)))
    if spec.radius * k_max >= 1.0:
        raise EmbeddednessViolated(
            f"Tube radius {spec.radius} times max curvature {k_max!r} is not below 1.",
            details={"r_k_max": spec.radius * k_max},
        )
    T, P = np.meshgrid(t, phi, indexing="ij")  # noqa: N806
    kn = k1[:, None] * np.cos(P) + k2[:, None] * np.sin(P)
    denom = 1.0 - spec.radius * kn
    if np.any(denom <= 0.0):
        raise EmbeddednessViolated(
            "Tube is not embedded: 1 - r k cos(phi) <= 0.",
            details={"denominator_min": float(np.min(denom))},
        )
    k_long = -kn / denom
    k_profile = np.full(k_long.shape, 1.0 / spec.radius)
    tube = TubeSamples(
        t=T.ravel(),
        phi=P.ravel(),
        k_profile=k_profile.ravel(),
        k_long=k_long.ravel(),
        denominator_min=float(np.min(denom)),
    )
    log.info(
        f"Tube with r = {spec.radius}: {T.size} samples, "
        f"r k_max = {spec.radius * k_max!r}."
    )
    samples = CurvatureSamples.from_principal(
        tube.t, tube.phi, tube.k_profile, tube.k_long
    )
    return samples, tube


def torus_chart(R: float = 1.0, r: float = 0.05) -> GraphSurface:  # noqa: N803
    """Outer upper patch of the torus of revolution, with finite-difference jets."""
    if not 0.0 < r < R:
        raise OutOfRange(f"Torus radii must satisfy 0 < r < R, got ({R}, {r}).")

    def value(x: ArrayLike, y: ArrayLike) -> np.ndarray:
        rho = np.hypot(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.sqrt(np.maximum(r * r - (rho - R) ** 2, 0.0))

    def jet(x: ArrayLike, y: ArrayLike) -> Jet2:
        return surface_service.finite_difference_jet(value, x, y, h=1e-3 * r)

    half_y = 0.9 * math.sqrt(0.4 * r * R)
    return GraphSurface(
        name="torus-chart",
        value=value,
        jet=jet,
        domain=Domain.rectangle(R - 0.6 * r, R + 0.6 * r, -half_y, half_y),
        provenance="finite-difference",
    )


# ---------------------------------------------------------------------------
# Closed-form graphs


def comparison_sphere_graph(c: float, radius: Optional[float] = None) -> GraphSurface:
    """Totally umbilical graph c (x^2 + y^2) / (1 + sqrt(1 - c^2 (x^2 + y^2)))."""
    if c == 0.0:
        raise OutOfRange("Comparison sphere needs c != 0.")
    limit = 1.0 / abs(c)
    radius = 0.9 * limit if radius is None else radius
    if radius >= limit:
        raise DomainTooLarge(
            f"Domain radius {radius} reaches the equator at 1/|c| = {limit!r}.",
            details={"radius": radius, "limit": limit},
        )

    def value(x: ArrayLike, y: ArrayLike) -> np.ndarray:
        rho2 = np.asarray(x, dtype=float) ** 2 + np.asarray(y, dtype=float) ** 2
        return c * rho2 / (1.0 + np.sqrt(1.0 - c * c * rho2))

    def jet(x: ArrayLike, y: ArrayLike) -> Jet2:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        S = np.sqrt(1.0 - c * c * (x * x + y * y))  # noqa: N806
        S3 = S**3  # noqa: N806
        return Jet2(
            p=c * x / S,
            q=c * y / S,
            r=c * (1.0 - c * c * y * y) / S3,
            s=c**3 * x * y / S3,
            t=c * (1.0 - c * c * x * x) / S3,
            value=value(x, y),
        )

    return GraphSurface(
        name="comparison-sphere", value=value, jet=jet, domain=Domain.disk(radius)
    )


def ellipsoid_chart(
    axes: Sequence[float], lower: bool = False
) -> Tuple[GraphSurface, List[Tuple[float, float]]]:
    """Upper (or lower) graph patch of an ellipsoid and its predicted umbilics.

    Semi-axes are sorted to a1 > a2 > a3; umbilics sit at
    x = +-a1 sqrt((a1^2 - a2^2) / (a1^2 - a3^2)), y = 0.
    """
    a1, a2, a3 = sorted((float(v) for v in axes), reverse=True)
    if not (a1 > a2 > a3 > 0.0):
        raise AxesNotDistinct(
            f"Semi-axes {tuple(axes)} are not distinct and positive.",
            details={"axes": list(axes)},
        )
    sign = -1.0 if lower else 1.0
    x_u = a1 * math.sqrt((a1 * a1 - a2 * a2) / (a1 * a1 - a3 * a3))

    def value(x: ArrayLike, y: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return sign * a3 * np.sqrt(1.0 - x * x / a1**2 - y * y / a2**2)

    def jet(x: ArrayLike, y: ArrayLike) -> Jet2:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        g = 1.0 - x * x / a1**2 - y * y / a2**2
        gx = -2.0 * x / a1**2
        gy = -2.0 * y / a2**2
        root = np.sqrt(g)
        g32 = g * root
        return Jet2(
            p=sign * a3 * gx / (2.0 * root),
            q=sign * a3 * gy / (2.0 * root),
            r=sign * a3 * (-1.0 / (a1**2 * root) - gx * gx / (4.0 * g32)),
            s=sign * a3 * (-gx * gy / (4.0 * g32)),
            t=sign * a3 * (-1.0 / (a2**2 * root) - gy * gy / (4.0 * g32)),
            value=sign * a3 * root,
        )

    X = max(0.9, 0.5 * (x_u / a1 + 1.0)) * a1  # noqa: N806
    Y = 0.9 * a2 * math.sqrt(1.0 - (X / a1) ** 2)  # noqa: N806
    surface = GraphSurface(
        name=f"ellipsoid-{'lower' if lower else 'upper'}",
        value=value,
        jet=jet,
        domain=Domain.rectangle(-X, X, -Y, Y),
    )
    return surface, [(-x_u, 0.0), (x_u, 0.0)]


def _monomial(v: np.ndarray, k: int, d: int) -> np.ndarray:
    if d > k:
        return np.zeros_like(v)
    coef = math.perm(k, d)
    return coef * v ** (k - d)


def polynomial_graph(
    terms: Sequence[Tuple[float, int, int]],
    bounds: Tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0),
    name: str = "custom-graph",
) -> GraphSurface:
    """Graph of sum coef x^i y^j with exact jets."""
    terms = [(float(c), int(i), int(j)) for c, i, j in terms]

    def part(x: np.ndarray, y: np.ndarray, dx: int, dy: int) -> np.ndarray:
        out = np.zeros(np.broadcast(x, y).shape)
        for coef, i, j in terms:
            out = out + coef * _monomial(x, i, dx) * _monomial(y, j, dy)
        return out

    def value(x: ArrayLike, y: ArrayLike) -> np.ndarray:
        return part(np.asarray(x, dtype=float), np.asarray(y, dtype=float), 0, 0)

    def jet(x: ArrayLike, y: ArrayLike) -> Jet2:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return Jet2(
            p=part(x, y, 1, 0),
            q=part(x, y, 0, 1),
            r=part(x, y, 2, 0),
            s=part(x, y, 1, 1),
            t=part(x, y, 0, 2),
            value=part(x, y, 0, 0),
        )

    return GraphSurface(
        name=name, value=value, jet=jet, domain=Domain.rectangle(*bounds)
    )


def cubic_saddle() -> GraphSurface:
    """Graph of Re((x + iy)^3) = x^3 - 3 x y^2."""
    return polynomial_graph([(1.0, 3, 0), (-3.0, 1, 2)], name="cubic-saddle")
