import logging
import math
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib  # type: ignore
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from ..core.config import TOOL_VERSION, get_output_dir, settings
from ..core.exceptions import (
    AxisSingularity,
    EmbeddednessViolated,
    EmptyWindow,
    FieldVanishesOnLoop,
    ScenarioConfigError,
    UnderSampled,
)
from ..models import CurvatureSamples, GraphSurface
from ..schemas.certificate import Certificate
from ..schemas.construction import TubeSpec
from ..schemas.report import Report
from ..schemas.scenario import (
    SCENARIO_TYPES,
    ComparisonSphereScenario,
    CustomGraphScenario,
    EllipsoidScenario,
    EllipticScanScenario,
    PolynomialScenario,
    SandglassScenario,
    Scenario,
    TubeScenario,
    output_path,
    scenario_adapter,
)
from ..schemas.umbilic import LoopSampling, Umbilic
from . import (
    construction_service,
    diagnostics_service,
    elliptic_service,
    index_service,
    io_service,
    surface_service,
)

log = logging.getLogger(__name__)

Outcome = Tuple[List[Certificate], Dict[str, Any], Dict[str, str]]

REPORT_FILE = "report.json"
DIAGRAM_FILE = "diagram.csv"
PROFILE_FILE = "profile.csv"
TUBE_FILE = "tube.csv"

# Largest distance between the refined polynomial umbilic and the origin.
ORIGIN_TOL = 1e-3
HHK_TOLERANCES = {1e-2: 1e-2, 1e-3: 1e-4}
INCU_TOL = 1e-10
CONVERGENCE_WINDOW = (12.0, 20.0)
BELTRAMI_SLACK = 1e-12
J_IDENTITY_TOL = 1e-12

CONVENTIONS = {
    "curvature_sign": (
        "principal curvatures are positive on a unit sphere seen from inside"
    ),
    "graph_normal": "graphs z = u(x, y) carry the upward unit normal",
    "index": (
        "line-field index is half the winding of (a11 - a22, 2 a12) "
        "on a sampled circle"
    ),
    "float_format": (
        "17 significant digits in report.json and CSV"
    ),
    "margins": "a witness margin is negative exactly when its certificate fails",
}


def _validation_details(e: ValidationError) -> List[Dict[str, str]]:
    return [
        {"loc": " -> ".join(str(part) for part in err["loc"]), "msg": err["msg"]}
        for err in e.errors()
    ]


def parse_scenario(data: Dict[str, Any]) -> Scenario:
    """Validate a scenario mapping, reporting every bad field by its path."""
    try:
        return scenario_adapter.validate_python(data)
    except ValidationError as e:
        details = _validation_details(e)
        first = details[0]["loc"] if details else "?"
        raise ScenarioConfigError(f"Invalid scenario field '{first}'.", details=details)


def load_scenario(path: str | Path) -> Scenario:
    """Parse a TOML scenario file."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ScenarioConfigError(
            f"Cannot read scenario {path}: {e}", details={"path": str(path)}
        )
    except tomllib.TOMLDecodeError as e:
        raise ScenarioConfigError(
            f"{path} is not valid TOML: {e}", details={"path": str(path)}
        )
    return parse_scenario(data)


def list_scenarios() -> Dict[str, Dict[str, Any]]:
    """Every scenario kind with its default parameters."""
    return {
        kind: model().model_dump(mode="json") for kind, model in SCENARIO_TYPES.items()
    }


def _single(
    claim_id: str,
    margin: float,
    position: Tuple[float, float] = (0.0, 0.0),
    strict: bool = False,
    details: Optional[Dict[str, Any]] = None,
) -> Certificate:
    samples = diagnostics_service.positions([position[0]], [position[1]])
    return diagnostics_service.build_certificate(
        claim_id, samples, np.array([margin]), 0.0, strict=strict, details=details
    )


def _verdict_equivalence(*wedges: Certificate) -> Certificate:
    disagreements = sum(int(w.details.get("disagreements", 0)) for w in wedges)
    return _single(
        "1.1/verdict-equivalence",
        -float(disagreements),
        details={
            "disagreements": disagreements,
            "lam": [w.details.get("lam") for w in wedges],
        },
    )


def _refutation_strength(cert: Certificate, c: float, mu: float) -> Dict[str, float]:
    """Scale-free size of a quasi-CMC violation at the witness.

    ``excess_ratio`` is (H - c)^2 / (H^2 - K) - mu and ``tolerance_multiple`` is
    the violation in units of the certificate tolerance. Both exceed their
    thresholds (0 and 1) whenever the refutation holds.
    """
    w = cert.witness
    if w is None or not cert.holds:
        return {}
    H = 0.5 * (w.kappa1 + w.kappa2)  # noqa: N806
    K = w.kappa1 * w.kappa2  # noqa: N806
    split = 0.25 * (w.kappa1 - w.kappa2) ** 2
    excess = (H - c) ** 2
    tol = settings.EPS_CERT * (1.0 + H * H + abs(K))
    return {
        "excess_ratio": excess / split - mu if split > 0.0 else math.inf,
        "tolerance_multiple": w.margin / tol,
    }


def _quasi_cmc_pair(
    samples: CurvatureSamples, c: float, mu: float
) -> List[Certificate]:
    params = diagnostics_service.wedge_params(mu=mu, c=c)
    quasi = diagnostics_service.check_quasi_cmc(samples, c, mu)
    wedge = diagnostics_service.check_wedge(samples, params)
    return [quasi, wedge, _verdict_equivalence(wedge)]


def _wedge_analysis(
    samples: CurvatureSamples, c: float, radius: Optional[float] = None
) -> Any:
    try:
        analysis = diagnostics_service.diagram_wedge_analysis(samples, c, radius)
        return analysis.model_dump()
    except EmptyWindow as e:
        log.warning(f"Wedge analysis skipped: {e}")
        return None


# ---------------------------------------------------------------------------
# Pipelines


def _polynomial(sc: PolynomialScenario, out: Path) -> Outcome:
    surface = construction_service.quasiminimal_polynomial()
    bound = construction_service.polynomial_mu_bound(sc.circle_samples)
    certs: List[Certificate] = []

    # Homogeneous quantities are normalized by the matching power of r.
    theta = np.linspace(0.0, 2.0 * np.pi, sc.circle_samples, endpoint=False)
    radii = (1.0, 0.5, 2.0)
    xs = np.concatenate([r * np.cos(theta) for r in radii])
    ys = np.concatenate([r * np.sin(theta) for r in radii])
    jet = surface.jet(xs, ys)
    rho2 = xs * xs + ys * ys
    certs.append(
        diagnostics_service.build_certificate(
            "A.1/det-negative",
            diagnostics_service.positions(xs, ys, jet.r, jet.t),
            -np.asarray(jet.hessian_det()) / rho2**4,
            0.0,
            strict=True,
            details={"radii": list(radii), "normalization": "det / r^8"},
        )
    )

    rng = np.random.default_rng(sc.seed)
    px, py = surface_service.random_annulus_points(
        sc.inner_radius, sc.hxy_outer_radius, sc.random_points, rng
    )
    r = np.hypot(px, py)
    h_xy = np.asarray(surface.jet(px, py).s)
    certs.append(
        diagnostics_service.build_certificate(
            "A.1/hxy-positive",
            diagnostics_service.positions(px, py),
            h_xy / r**4,
            0.0,
            strict=True,
            details={
                "seed": sc.seed,
                "normalization": "h_xy / r^4",
                "max_radius": float(r.max()),
            },
        )
    )

    certs.append(
        _single(
            "A.1/ap:ho",
            1.0 - bound.mu_star,
            (math.cos(bound.theta_max), math.sin(bound.theta_max)),
            strict=True,
            details=bound.as_dict(),
        )
    )

    def gradient_hx(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        j = surface.jet(x, y)
        return j.r, j.s

    windings = [
        index_service.winding_number(
            gradient_hx, LoopSampling(radius=radius, n=sc.loop_samples)
        )
        for radius in sc.loop_radii
    ]
    search = index_service.find_umbilics(surface, sc.grid_n)
    umbilics = index_service.assign_indices(
        surface, search.umbilics, min(sc.loop_radii), sc.loop_samples
    )
    loop_radius = min(sc.loop_radii)
    hessian_indices = [
        index_service.hessian_index(
            surface,
            LoopSampling(center=u.position, radius=loop_radius, n=sc.loop_samples),
        )
        for u in umbilics
    ]
    index_values = [float(w) for w in windings]
    index_values += [float(u.index or 0.0) for u in umbilics]
    index_x = list(sc.loop_radii) + [u.position[0] for u in umbilics]
    index_y = [0.0] * len(sc.loop_radii) + [u.position[1] for u in umbilics]
    certs.append(
        diagnostics_service.build_certificate(
            "A.1/index",
            diagnostics_service.positions(index_x, index_y),
            -np.abs(np.array(index_values)),
            0.0,
            details={
                "gradient_windings": windings,
                "line_field_indices": [u.index for u in umbilics],
                "hessian_indices": hessian_indices,
            },
        )
    )
    if len(umbilics) == 1:
        position = umbilics[0].position
        margin = ORIGIN_TOL - math.hypot(*position)
    else:
        position, margin = (0.0, 0.0), -float(abs(len(umbilics) - 1) or 1)
    certs.append(
        _single(
            "A.1/unique-umbilic",
            margin,
            position,
            details={"count": len(umbilics), "clusters": search.clusters},
        )
    )

    quasi_mu = 0.5 * (bound.mu_star + 1.0)
    ax, ay = surface_service.annulus_points(
        sc.inner_radius, sc.outer_radius, sc.radial_samples, sc.angular_samples
    )
    samples = surface_service.curvature_samples(surface, ax, ay)
    certs += _quasi_cmc_pair(samples, 0.0, quasi_mu)

    hhk: Dict[str, float] = {}
    hhk_certs = []
    for radius, tol in HHK_TOLERANCES.items():
        cx, cy = radius * np.cos(theta), radius * np.sin(theta)
        ring = surface_service.curvature_samples(surface, cx, cy)
        j = surface.jet(cx, cy)
        leading = 0.25 * (np.asarray(j.r) - np.asarray(j.t)) ** 2 + np.asarray(j.s) ** 2
        deviation = np.abs((ring.H * ring.H - ring.K) / leading - 1.0)
        hhk[repr(radius)] = float(np.max(deviation))
        hhk_certs.append(
            diagnostics_service.build_certificate(
                "4/hhk",
                ring,
                tol - deviation,
                0.0,
                details={"radius": radius, "tolerance": tol},
            )
        )
    certs.append(diagnostics_service.merge_certificates(hhk_certs))

    best, sweep = construction_service.quasiminimal_radius(
        quasi_mu,
        sc.radius_sweep,
        sc.inner_radius,
        sc.radial_samples,
        sc.angular_samples,
    )
    indices = [u.index for u in umbilics if u.index is not None]
    obstruction = index_service.poincare_hopf_check(indices, genus=0)
    io_service.emit_diagram(samples, out / DIAGRAM_FILE)
    artifacts = {
        **bound.as_dict(),
        "quasi_mu": quasi_mu,
        "umbilics": [u.model_dump() for u in umbilics],
        "gradient_windings": windings,
        "hhk_max_deviation": hhk,
        "largest_quasiminimal_radius": best,
        "radius_sweep": sweep,
        "wedge_analysis": _wedge_analysis(samples, 0.0),
        "closing_obstruction": obstruction.details,
    }
    conventions = {"domain": "rectangle [-1, 1]^2, annulus samples around the origin"}
    return certs, artifacts, conventions


def _sandglass(sc: SandglassScenario, out: Path) -> Outcome:
    spec = sc.sandglass
    a, b = spec.a, spec.b
    solved = construction_service.solve_bump_amplitude(a, b)
    amplitude = spec.amplitude if spec.amplitude is not None else solved
    residual = construction_service.amplitude_residual(a, b, amplitude)
    incu_tol = INCU_TOL if spec.integral_residual is None else spec.integral_residual
    certs = [
        _single(
            "A.2/incu",
            incu_tol - abs(residual),
            (a, b),
            details={
                "residual": residual,
                "tolerance": incu_tol,
                "target": math.pi / 2 - a,
            },
        )
    ]
    pf = construction_service.integrate_profile(
        a, b, amplitude, spec.step, enforce=False
    )
    io_service.write_profile_csv(pf, out / PROFILE_FILE)
    artifacts: Dict[str, Any] = {
        "amplitude": amplitude,
        "amplitude_solved": solved,
        "integral_residual": residual,
        "closure_residual": pf.closure_residual,
        "tangent_defect": pf.tangent_defect(),
        "neck_radius": float(pf.x[-1]),
        "rk_start": pf.meta["rk_start"],
        "postconditions": dict(pf.postconditions),
    }
    try:
        certs += construction_service.sandglass_verify(pf)
    except AxisSingularity as e:
        log.warning(f"Profile reaches the axis: {e}")
        certs.append(
            _single(
                "A.2/closure",
                construction_service.CLOSURE_TOL - abs(pf.closure_residual),
                details={"closure_residual": pf.closure_residual},
            )
        )
        k = int(np.argmin(pf.x[1:])) + 1
        certs.append(
            _single(
                "A.2/profile",
                float(pf.x[k]),
                (float(pf.x[k]), float(pf.z[k])),
                strict=True,
                details=e.details if isinstance(e.details, dict) else {},
            )
        )
        return certs, artifacts, _sandglass_conventions()

    mirrored = construction_service.sandglass_samples(pf)
    io_service.emit_diagram(mirrored, out / DIAGRAM_FILE)
    wedges = []
    for mu in sc.mu_values:
        quasi = diagnostics_service.check_quasi_cmc(mirrored, 1.0, mu)
        claim = f"1.1/refuted-quasi-cmc-mu-{mu:g}"
        refutation = diagnostics_service.expect_failure(quasi, claim)
        refutation.details.update(_refutation_strength(refutation, 1.0, mu))
        certs.append(refutation)
        params = diagnostics_service.wedge_params(mu=mu, c=1.0)
        wedges.append(diagnostics_service.check_wedge(mirrored, params))
    if wedges:
        certs.append(_verdict_equivalence(*wedges))

    analysis = diagnostics_service.diagram_wedge_analysis(
        mirrored, 1.0, sc.window_radius
    )
    if analysis.verdict == "fails":
        assert analysis.ratio_min is not None and analysis.ratio_max is not None
        margin = max(
            analysis.ratio_max - settings.WEDGE_SLOPE_MAX,
            settings.WEDGE_SLOPE_MIN - analysis.ratio_min,
        )
    else:
        margin = -1.0
    certs.append(
        _single("1.5/wedge-refuted", margin, (1.0, 1.0), details=analysis.model_dump())
    )
    artifacts["wedge_analysis"] = analysis.model_dump()

    if sc.neck_perturbation > 0.0:
        _, perturbed = construction_service.perturbed_neck_curvatures(
            pf, sc.neck_perturbation
        )
        certs += perturbed
        artifacts["neck_perturbation"] = sc.neck_perturbation

    if sc.convergence_steps:
        study = construction_service.closure_convergence(
            a, b, sc.convergence_steps, solved
        )
        lo, hi = CONVERGENCE_WINDOW
        ratios = np.array(study.ratios, dtype=float)
        certs.append(
            diagnostics_service.build_certificate(
                "A.2/convergence",
                diagnostics_service.positions(study.steps[: ratios.size], 0.0, ratios),
                np.minimum(ratios - lo, hi - ratios),
                0.0,
                details={"window": [lo, hi], "orders": study.observed_orders},
            )
        )
        artifacts["convergence"] = study.as_dict()
    return certs, artifacts, _sandglass_conventions()


def _sandglass_conventions() -> Dict[str, str]:
    return {
        "profile": (
            "theta' = kappa with (x, z)' = (cos theta, sin theta) from the south pole"
        ),
        "kappa_family": (
            "kappa = 1 - A Phi(s) with an exponential bump flat at a and b; "
            "kappa' < 0 on (a, b) and kappa'(b) = 0"
        ),
        "neck_window": "strict inequalities are certified where Phi(s) >= 1e-6 Phi(b)",
        "refutation_scale": (
            "quasi-CMC margins scale with (k1 - k2)^2, which is tiny near the neck, "
            "so absolute witness margins are small for mu close to 1; "
            "excess_ratio and tolerance_multiple give the scale-free strength"
        ),
    }


def _circle_radius(spec: TubeSpec) -> Optional[float]:
    """R when the center curve is the planar circle (R cos t, R sin t, 0)."""

    def trimmed(values: List[float]) -> List[float]:
        out = list(values)
        while out and out[-1] == 0.0:
            out.pop()
        return out

    x, y, z = spec.curve
    if not spec.closed or x.const or y.const or z.const:
        return None
    if trimmed(z.cos) or trimmed(z.sin):
        return None
    if trimmed(x.sin) or trimmed(y.cos):
        return None
    xc, ys = trimmed(x.cos), trimmed(y.sin)
    if len(xc) != 1 or xc != ys or xc[0] <= 0.0:
        return None
    return xc[0]


def _tube(sc: TubeScenario, out: Path) -> Outcome:
    conventions = {
        "tube_frame": "rotation-minimizing frame by double reflection",
        "tube_curvatures": (
            "1/r around the profile circle, -k.n / (1 - r k.n) along the curve"
        ),
    }
    try:
        samples, tube = construction_service.tube_surface(sc.tube)
    except EmbeddednessViolated as e:
        details = e.details if isinstance(e.details, dict) else {}
        if "r_k_max" in details:
            margin = 1.0 - float(details["r_k_max"])
        else:
            margin = float(details.get("denominator_min", 0.0))
        embedded = _single("1.1/embedded", margin, strict=True, details=details)
        return [embedded], {}, conventions

    io_service.write_tube_csv(tube, out / TUBE_FILE)
    io_service.emit_diagram(samples, out / DIAGRAM_FILE)
    certs = [
        _single(
            "1.1/embedded",
            tube.denominator_min,
            strict=True,
            details={"denominator_min": tube.denominator_min},
        )
    ]
    disc = samples.H * samples.H - samples.K
    certs.append(
        diagnostics_service.build_certificate(
            "1.1/umbilic-free",
            samples,
            disc,
            0.0,
            strict=True,
            details={"min": float(np.min(disc))},
        )
    )
    lam = 0.5 * (sc.m1 + 1.0 / sc.m1)
    params = diagnostics_service.wedge_params(lam=lam, c=sc.c)
    certs += _quasi_cmc_pair(samples, sc.c, params.mu)

    artifacts: Dict[str, Any] = {
        "lam": params.lam,
        "mu": params.mu,
        "slopes": list(params.slopes),
        "disc_min": float(np.min(disc)),
        "kappa_profile": 1.0 / sc.tube.radius,
        "kappa_long_range": [float(np.min(tube.k_long)), float(np.max(tube.k_long))],
    }
    R = _circle_radius(sc.tube)  # noqa: N806
    if R is not None and sc.tube.radius < R:
        chart = construction_service.torus_chart(R, sc.tube.radius)
        search = index_service.find_umbilics(chart, n=41)
        found = len(search.umbilics) + int(search.totally_umbilical)
        certs.append(
            _single(
                "4.1/umbilic-search",
                -float(found),
                details={
                    "chart": chart.name,
                    "flagged_fraction": search.flagged_fraction,
                },
            )
        )
    if sc.tube.closed:
        certs.append(index_service.poincare_hopf_check([], sc.genus))
    else:
        artifacts["poincare_hopf"] = "skipped: open tube"
    return certs, artifacts, conventions


def _ellipsoid(sc: EllipsoidScenario, out: Path) -> Outcome:
    upper, predicted = construction_service.ellipsoid_chart(sc.axes)
    lower, _ = construction_service.ellipsoid_chart(sc.axes, lower=True)
    located: List[Umbilic] = []
    distances: List[float] = []
    margins: List[float] = []
    points: List[Tuple[float, float]] = []
    per_chart: Dict[str, List[Umbilic]] = {}
    for chart in (upper, lower):
        search = index_service.find_umbilics(chart, sc.grid_n)
        umbilics = index_service.assign_indices(
            chart, search.umbilics, sc.loop_radius, sc.loop_samples
        )
        per_chart[chart.name] = umbilics
        located += umbilics
        for p in predicted:
            gaps = [
                math.hypot(u.position[0] - p[0], u.position[1] - p[1]) for u in umbilics
            ]
            gap = min(gaps) if gaps else math.inf
            distances.append(gap)
            margins.append(sc.location_tol - gap if math.isfinite(gap) else -1.0)
            points.append(p)
        if len(umbilics) != len(predicted):
            margins.append(-float(abs(len(umbilics) - len(predicted))))
            points.append((0.0, 0.0))
    certs = [
        diagnostics_service.build_certificate(
            "4.1/umbilics-located",
            diagnostics_service.positions(
                [p[0] for p in points], [p[1] for p in points]
            ),
            np.array(margins),
            0.0,
            details={
                "predicted": [list(p) for p in predicted],
                "tolerance": sc.location_tol,
            },
        )
    ]
    indices = [u.index for u in located if u.index is not None]
    certs.append(
        diagnostics_service.build_certificate(
            "4.1/index",
            diagnostics_service.positions(
                [u.position[0] for u in located], [u.position[1] for u in located]
            ),
            -np.abs(np.array([(u.index or 0.0) - 0.5 for u in located])),
            1e-12,
            details={"expected": 0.5},
        )
    )
    certs.append(index_service.poincare_hopf_check(indices, genus=0))

    # The lower patch's upward normal faces the interior, so kappa > 0 there.
    convex = lower
    refutations = []
    wedges = []
    excluded: Dict[str, float] = {}
    for u in per_chart[convex.name]:
        H, _ = surface_service.mean_gauss_from_jet(  # noqa: N806
            convex.jet(np.array([u.position[0]]), np.array([u.position[1]]))
        )
        c = float(np.asarray(H).ravel()[0])
        xs, ys = surface_service.annulus_points(
            0.05 * sc.wedge_radius, sc.wedge_radius, 8, 64, u.position
        )
        near = surface_service.curvature_samples(convex, xs, ys)
        for lam in sc.lam_values:
            params = diagnostics_service.wedge_params(lam=lam, c=c)
            wedge = diagnostics_service.check_wedge(near, params)
            wedges.append(wedge)
            refutation = diagnostics_service.expect_failure(wedge, "4.1/wedge-excluded")
            assert refutation.witness is not None
            excluded[f"{u.position[0]:.6f}@{lam:g}"] = refutation.witness.margin
            refutations.append(refutation)
    if refutations:
        certs.append(diagnostics_service.merge_certificates(refutations))
        certs.append(_verdict_equivalence(*wedges))

    grid = surface_service.surface_grid(convex, sc.grid_n)
    alexandrov = diagnostics_service.check_alexandrov(grid, 1.0)
    certs.append(diagnostics_service.expect_failure(alexandrov, "2/alexandrov-refuted"))
    io_service.emit_diagram(grid, out / DIAGRAM_FILE)
    artifacts = {
        "predicted": [list(p) for p in predicted],
        "umbilics": {
            name: [u.model_dump() for u in us] for name, us in per_chart.items()
        },
        "location_errors": distances,
        "index_sum": float(sum(indices)),
        "wedge_exclusion_margins": excluded,
    }
    conventions = {
        "charts": "upper and lower graph patches over the (x, y) plane",
        "diagram_chart": "lower patch, whose upward normal faces the interior",
    }
    return certs, artifacts, conventions


def _comparison_sphere(sc: ComparisonSphereScenario, out: Path) -> Outcome:
    surface = construction_service.comparison_sphere_graph(sc.c, sc.radius)
    samples = surface_service.surface_grid(surface, sc.grid_n)
    search = index_service.find_umbilics(surface, sc.grid_n)
    certs = [
        diagnostics_service.check_quasi_cmc(
            samples, sc.c, 0.0, claim_id="4/comparison-cmc"
        ),
        diagnostics_service.check_alexandrov(samples, sc.c),
        _single(
            "4/totally-umbilical",
            0.0 if search.totally_umbilical else -1.0,
            details={"flagged_fraction": search.flagged_fraction},
        ),
    ]
    io_service.emit_diagram(samples, out / DIAGRAM_FILE)
    spread = float(
        np.max(np.abs(samples.kappa1 - sc.c)) + np.max(np.abs(samples.kappa2 - sc.c))
    )
    return certs, {"kappa_spread": spread, "samples": len(samples)}, {}


def _index_or_none(surface: GraphSurface, u: Umbilic, radius: float, n: int) -> Umbilic:
    try:
        index = index_service.line_field_index(surface, u, radius=radius, n=n)
    except (FieldVanishesOnLoop, UnderSampled) as e:
        log.warning(f"No index at {u.position}: {e}")
        return u.model_copy(update={"loop_radius": radius})
    return u.model_copy(update={"index": index, "loop_radius": radius})


def _custom_graph(sc: CustomGraphScenario, out: Path) -> Outcome:
    surface = construction_service.polynomial_graph(sc.terms, sc.bounds)
    samples = surface_service.surface_grid(surface, sc.grid_n)
    certs = _quasi_cmc_pair(samples, sc.c, sc.mu)
    search = index_service.find_umbilics(surface, sc.grid_n)
    umbilics = [
        _index_or_none(surface, u, sc.loop_radius, sc.loop_samples)
        for u in search.umbilics
    ]

    # Negative index is only forced where the surface is quasi-CMC around the umbilic.
    law_x: List[float] = []
    law_y: List[float] = []
    law_margins: List[float] = []
    for u in umbilics:
        if u.index is None:
            continue
        xs, ys = surface_service.annulus_points(
            0.05 * sc.loop_radius, sc.loop_radius, 8, 64, u.position
        )
        keep = surface.domain.contains(xs, ys)
        local = surface_service.curvature_samples(surface, xs[keep], ys[keep])
        local_cert = diagnostics_service.check_quasi_cmc(
            local, sc.c, sc.mu, claim_id="4.1/local"
        )
        if local_cert.holds:
            law_x.append(u.position[0])
            law_y.append(u.position[1])
            law_margins.append(-u.index)
    certs.append(
        diagnostics_service.build_certificate(
            "4.1/index-law",
            diagnostics_service.positions(law_x, law_y),
            np.array(law_margins),
            0.0,
            details={"checked": len(law_margins)},
        )
    )
    io_service.emit_diagram(samples, out / DIAGRAM_FILE)
    artifacts = {
        "umbilics": [u.model_dump() for u in umbilics],
        "totally_umbilical": search.totally_umbilical,
        "wedge_analysis": _wedge_analysis(samples, sc.c),
    }
    return certs, artifacts, {}


def _scan_surface(function: str) -> GraphSurface:
    if function == "quasiminimal":
        return construction_service.quasiminimal_polynomial()
    if function == "re-z-cubed":
        return construction_service.cubic_saddle()
    return construction_service.polynomial_graph(
        [(1.0, 2, 0), (-1.0, 0, 2)], name="saddle"
    )


def _elliptic_scan(sc: EllipticScanScenario, out: Path) -> Outcome:
    surface = _scan_surface(sc.function)
    scan = elliptic_service.critical_point_scan(
        surface, annulus=sc.annulus, n=sc.scan_n, loop_samples=sc.loop_samples
    )
    certs = [
        _single(
            "3.1/det-negative",
            -scan.det_max,
            strict=True,
            details={"det_max": scan.det_max},
        ),
        _single(
            "3.1/index",
            0.0 if (scan.indices_agree and scan.nonpositive) else -1.0,
            details={"index_ux": scan.index_ux, "index_uy": scan.index_uy},
        ),
    ]

    coeffs = elliptic_service.random_coefficients(
        sc.random_samples, sc.lambdas[0], sc.lambdas[1], sc.seed
    )
    belt = elliptic_service.beltrami(coeffs.a11, coeffs.a12, coeffs.a22)
    mu_bound = elliptic_service.ellipticity_bound(*sc.lambdas)
    # Witness x holds the sample number.
    certs.append(
        diagnostics_service.build_certificate(
            "3/beltrami-bound",
            diagnostics_service.positions(
                np.arange(sc.random_samples), 0.0, belt.modulus, belt.dilatation
            ),
            mu_bound + BELTRAMI_SLACK - belt.modulus,
            0.0,
            details={"bound": mu_bound, "lambdas": list(sc.lambdas)},
        )
    )

    rng = np.random.default_rng(sc.seed + 1)
    r, s, t = rng.uniform(-5.0, 5.0, (3, sc.random_samples))
    defect = np.abs(elliptic_service.j_hessian_identity_defect(r, s, t))
    certs.append(
        diagnostics_service.build_certificate(
            "3.2/j-identity",
            diagnostics_service.positions(np.arange(sc.random_samples), 0.0),
            J_IDENTITY_TOL - defect,
            0.0,
            details={"identity": "|u_zz|^2 - |u_zzbar|^2 = -det(D^2 u) / 4"},
        )
    )

    xs, ys = surface_service.annulus_points(
        sc.annulus[0], sc.annulus[1], sc.scan_n, sc.scan_n
    )
    jets = elliptic_service.complex_map_jets(sc.complex_map, xs, ys)
    certs.append(
        elliptic_service.similarity_inequality_check(jets, sc.mu0, sc.c, xs, ys)
    )
    J = elliptic_service.j_functional(jets)  # noqa: N806
    certs.append(
        diagnostics_service.build_certificate(
            "3.2/J-positive",
            diagnostics_service.positions(
                xs, ys, np.abs(jets.f_z), np.abs(jets.f_zbar)
            ),
            J,
            0.0,
            strict=True,
            details={"map": sc.complex_map},
        )
    )

    solution = elliptic_service.solution_coefficients(surface, xs, ys)
    mu_solution = elliptic_service.ellipticity_bound(solution.lambda1, solution.lambda2)
    certs.append(
        elliptic_service.similarity_inequality_check(
            elliptic_service.complex_gradient_jets(surface, xs, ys),
            mu_solution,
            0.0,
            xs,
            ys,
            claim_id="3.2/anaine-solution",
        )
    )
    io_service.emit_diagram(
        surface_service.curvature_samples(surface, xs, ys), out / DIAGRAM_FILE
    )
    artifacts = {
        "critical_point": scan.model_dump(),
        "beltrami_max": float(np.max(belt.modulus)),
        "beltrami_bound": mu_bound,
        "j_identity_max_defect": float(np.max(defect)),
        "j_min": float(np.min(J)),
        "solution_ellipticity": [solution.lambda1, solution.lambda2],
        "solution_mu0": mu_solution,
    }
    if sc.complex_map == "z_abs2":
        r2 = xs * xs + ys * ys
        closed_form = 3.0 * r2 * r2
        artifacts["j_closed_form_defect"] = float(
            np.max(np.abs(J - closed_form) / (r2 * r2))
        )
    conventions = {
        "wirtinger": "f_z = (f_x - i f_y) / 2, f_zbar = (f_x + i f_y) / 2",
        "verification": (
            "consequence-level verification on samples; "
            "existence is not reconstructed"
        ),
    }
    return certs, artifacts, conventions


PIPELINES: Dict[str, Callable[[Any, Path], Outcome]] = {
    "polynomial": _polynomial,
    "sandglass": _sandglass,
    "tube": _tube,
    "ellipsoid": _ellipsoid,
    "comparison-sphere": _comparison_sphere,
    "custom-graph": _custom_graph,
    "elliptic-scan": _elliptic_scan,
}


def run_scenario(scenario: Scenario, out: Optional[str | Path] = None) -> Report:
    """Run one scenario pipeline and write report.json next to its CSV files."""
    start = time.perf_counter()
    out_dir = get_output_dir(output_path(scenario, out))
    log.info(f"Running '{scenario.kind}' scenario into {out_dir}.")
    certs, artifacts, conventions = PIPELINES[scenario.kind](scenario, out_dir)
    report = Report(
        scenario=scenario.model_dump(mode="json"),
        certificates=certs,
        artifacts=io_service.to_builtin(artifacts),
        conventions={**CONVENTIONS, **conventions},
        tool_version=TOOL_VERSION,
        wall_clock_seconds=time.perf_counter() - start,
    )
    io_service.write_report(report, out_dir / REPORT_FILE)
    failing = [c.claim_id for c in certs if not c.holds]
    if failing:
        log.warning(f"{len(failing)} certificate(s) fail: {', '.join(failing)}.")
    else:
        log.info(f"All {len(certs)} certificates hold.")
    return report


def exit_code(report: Report) -> int:
    """0 when every certificate holds, else 2."""
    return 0 if report.all_hold else 2


def run(path: str | Path, out: Optional[str | Path] = None) -> int:
    """Load, run and report a scenario file; returns 0 or 2."""
    return exit_code(run_scenario(load_scenario(path), out))
