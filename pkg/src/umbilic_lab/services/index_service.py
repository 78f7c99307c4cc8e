import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy import ndimage

from ..core.config import settings, thread_count
from ..core.exceptions import FieldVanishesOnLoop, UnderSampled
from ..models import GraphSurface
from ..schemas.certificate import Certificate, Witness
from ..schemas.umbilic import LoopSampling, Umbilic, UmbilicSearch
from . import surface_service

log = logging.getLogger(__name__)

PlanarField = Callable[[np.ndarray, np.ndarray], Tuple[ArrayLike, ArrayLike]]

# Pattern-search refinement stops once the search cell diameter reaches this.
REFINE_DIAMETER = 1e-6


def winding_number(
    field: PlanarField,
    loop: LoopSampling,
    retries: Optional[int] = None,
    vanish_ratio: float = 1e-10,
) -> int:
    """Degree of a planar field along a sampled circle.

    Each angle increment is wrapped to (-pi, pi]; if any exceeds pi/2 the loop
    is resampled with twice as many points.
    """
    max_retries = settings.WINDING_RETRIES if retries is None else retries
    n = max(loop.n, settings.MIN_LOOP_SAMPLES)
    cx, cy = loop.center
    for attempt in range(max_retries + 1):
        phi = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        px = cx + loop.radius * np.cos(phi)
        py = cy + loop.radius * np.sin(phi)
        fx, fy = field(px, py)
        fx = np.broadcast_to(np.asarray(fx, dtype=float), px.shape)
        fy = np.broadcast_to(np.asarray(fy, dtype=float), px.shape)
        mag = np.hypot(fx, fy)
        scale = float(np.max(mag))
        if scale == 0.0 or float(np.min(mag)) < vanish_ratio * scale:
            k = int(np.argmin(mag))
            raise FieldVanishesOnLoop(
                f"Field vanishes on the loop of radius {loop.radius} near "
                f"({px[k]!r}, {py[k]!r}).",
                details={
                    "position": [float(px[k]), float(py[k])],
                    "magnitude": float(mag[k]),
                },
            )
        angle = np.arctan2(fy, fx)
        step = np.diff(np.append(angle, angle[0]))
        wrapped = np.pi - np.mod(np.pi - step, 2.0 * np.pi)
        if float(np.max(np.abs(wrapped))) > 0.5 * np.pi:
            log.debug(f"Loop under-sampled at n={n} (attempt {attempt}); doubling.")
            n *= 2
            continue
        return int(round(float(np.sum(wrapped)) / (2.0 * np.pi)))
    raise UnderSampled(
        f"Angle increments stay above pi/2 after {max_retries} retries.",
        details={"n": n // 2, "radius": loop.radius},
    )


def shape_deviation_field(surface: GraphSurface) -> PlanarField:
    """Traceless shape operator field (a11 - a22, 2 a12) of a graph."""

    def field(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        alpha = surface_service.shape_operator(surface.jet(x, y), x, y).matrix
        return alpha[..., 0, 0] - alpha[..., 1, 1], 2.0 * alpha[..., 0, 1]

    return field


def hessian_deviation_field(surface: GraphSurface) -> PlanarField:
    """(u_xx - u_yy, 2 u_xy), the traceless Hessian of the graph function."""

    def field(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        j = surface.jet(x, y)
        return np.asarray(j.r) - np.asarray(j.t), 2.0 * np.asarray(j.s)

    return field


def _gauge(
    surface: GraphSurface, x: np.ndarray, y: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    H, K = surface_service.mean_gauss_from_jet(surface.jet(x, y))  # noqa: N806
    disc = np.asarray(H * H - K, dtype=float)
    return disc / (1.0 + H * H), disc


def _refine(
    surface: GraphSurface, x0: float, y0: float, width: float
) -> Tuple[float, float, float]:
    offsets = np.linspace(-1.0, 1.0, 5)
    ox, oy = np.meshgrid(offsets, offsets, indexing="ij")
    ox, oy = ox.ravel(), oy.ravel()
    x, y, w = x0, y0, width
    while w * math.sqrt(2.0) > REFINE_DIAMETER:
        px = x + w * ox
        py = y + w * oy
        inside = surface.domain.contains(px, py)
        px, py = px[inside], py[inside]
        gauge, _ = _gauge(surface, px, py)
        k = int(np.argmin(gauge))
        x, y = float(px[k]), float(py[k])
        w *= 0.5
    _, disc = _gauge(surface, np.array([x]), np.array([y]))
    return x, y, float(disc[0])


def find_umbilics(
    surface: GraphSurface, n: int = 101, tol: float = 1e-3
) -> UmbilicSearch:
    """Scan the chart for H^2 - K <= tol (1 + H^2) and refine one point per cluster."""
    x0, x1, y0, y1 = surface.domain.bounds()
    gx = np.linspace(x0, x1, n)
    gy = np.linspace(y0, y1, n)
    X, Y = np.meshgrid(gx, gy, indexing="ij")  # noqa: N806
    inside = surface.domain.contains(X, Y)
    gauge = np.full(X.shape, np.inf)
    gauge[inside], _ = _gauge(surface, X[inside], Y[inside])
    flagged = inside & (gauge <= tol)
    n_inside = int(np.count_nonzero(inside))
    fraction = float(np.count_nonzero(flagged)) / n_inside if n_inside else 0.0
    if n_inside and bool(np.all(flagged[inside])):
        log.info(f"'{surface.name}' is umbilical at every grid node.")
        return UmbilicSearch(totally_umbilical=True, flagged_fraction=1.0, clusters=1)

    labels, count = ndimage.label(flagged, structure=np.ones((3, 3), dtype=int))
    cell = max((x1 - x0), (y1 - y0)) / (n - 1)
    umbilics: List[Umbilic] = []
    for label in range(1, count + 1):
        members = labels == label
        masked = np.where(members, gauge, np.inf)
        i, j = np.unravel_index(int(np.argmin(masked)), masked.shape)
        x, y, disc = _refine(surface, float(X[i, j]), float(Y[i, j]), cell)
        log.debug(f"Cluster {label} refined to ({x!r}, {y!r}) with H^2-K = {disc!r}.")
        umbilics.append(Umbilic(position=(x, y), residual=disc))
    umbilics.sort(key=lambda u: u.position)
    log.info(f"Found {len(umbilics)} umbilic(s) on '{surface.name}'.")
    return UmbilicSearch(umbilics=umbilics, flagged_fraction=fraction, clusters=count)


def line_field_index(
    surface: GraphSurface,
    umbilic: Umbilic,
    loop: Optional[LoopSampling] = None,
    radius: float = 0.05,
    n: int = 256,
) -> float:
    """Half the winding of the traceless shape operator field around an umbilic."""
    loop = loop or LoopSampling(center=umbilic.position, radius=radius, n=n)
    return 0.5 * winding_number(shape_deviation_field(surface), loop)


def hessian_index(surface: GraphSurface, loop: LoopSampling) -> float:
    """Half the winding of (u_xx - u_yy, 2 u_xy).

    At a critical point of the graph this agrees with line_field_index.
    """
    return 0.5 * winding_number(hessian_deviation_field(surface), loop)


def assign_indices(
    surface: GraphSurface, umbilics: Sequence[Umbilic], radius: float, n: int = 256
) -> List[Umbilic]:
    """Compute every umbilic's index on a worker pool, keeping the input order."""

    def one(u: Umbilic) -> Umbilic:
        index = line_field_index(surface, u, radius=radius, n=n)
        return u.model_copy(update={"index": index, "loop_radius": radius})

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        return list(pool.map(one, umbilics))


def poincare_hopf_check(
    indices: Sequence[float], genus: int, claim_id: str = "4.1/poincare-hopf"
) -> Certificate:
    """Sum of indices against the Euler characteristic 2 - 2 genus."""
    total = float(sum(indices))
    chi = 2 - 2 * genus
    integral = total == math.floor(total)
    gap = abs(total - chi)
    holds = integral and gap == 0.0
    margin = 0.0 if holds else -max(gap, 0.5)
    if not holds:
        log.warning(f"Index sum {total} differs from Euler characteristic {chi}.")
    return Certificate(
        claim_id=claim_id,
        verdict="holds" if holds else "fails",
        witness=Witness(position=(0.0, 0.0), kappa1=0.0, kappa2=0.0, margin=margin),
        sample_count=len(indices),
        details={
            "index_sum": total,
            "euler_characteristic": chi,
            "indices": list(indices),
        },
    )
