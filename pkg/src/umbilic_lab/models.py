"""Numeric records shared by the services.

Everything here may hold either plain floats or numpy arrays of a common shape;
the services broadcast over them. Records that get serialized live in
``umbilic_lab.schemas`` instead.
"""

import math
from dataclasses import dataclass, field
from typing import (
    Any,
    Callable,
    Dict,
    Iterator,
    List,
    Literal,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np
from numpy.typing import ArrayLike

Provenance = Literal["analytic", "finite-difference"]


def _all_finite(*values: Any) -> bool:
    return all(np.all(np.isfinite(np.asarray(v))) for v in values)


@dataclass(frozen=True)
class Jet2:
    """First and second partials (p, q, r, s, t) of a graph function."""

    p: ArrayLike
    q: ArrayLike
    r: ArrayLike
    s: ArrayLike
    t: ArrayLike
    value: Optional[ArrayLike] = None
    error: Optional[ArrayLike] = None

    def __post_init__(self) -> None:
        """Reject non-finite jet entries."""
        if not _all_finite(self.p, self.q, self.r, self.s, self.t):
            raise ValueError("Jet2 entries must be finite.")

    def hessian_det(self) -> ArrayLike:
        """Hessian determinant h_xx h_yy - h_xy^2."""
        return np.asarray(self.r) * self.t - np.asarray(self.s) ** 2

    def as_tuple(self) -> Tuple[Any, Any, Any, Any, Any]:
        """(p, q, r, s, t) in that order."""
        return (self.p, self.q, self.r, self.s, self.t)


@dataclass(frozen=True)
class Domain:
    """Rectangle or disk in the (x, y) chart."""

    kind: Literal["rectangle", "disk"]
    x_min: float = -1.0
    x_max: float = 1.0
    y_min: float = -1.0
    y_max: float = 1.0
    center: Tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self) -> None:
        """Reject empty rectangles and disks."""
        if self.kind == "rectangle":
            if not (self.x_min < self.x_max and self.y_min < self.y_max):
                raise ValueError("Rectangle domain must be nonempty.")
        elif self.radius <= 0:
            raise ValueError("Disk domain must have a positive radius.")

    @classmethod
    def rectangle(
        cls, x_min: float, x_max: float, y_min: float, y_max: float
    ) -> "Domain":
        """Axis-aligned rectangle domain."""
        return cls("rectangle", x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max)

    @classmethod
    def disk(cls, radius: float, center: Tuple[float, float] = (0.0, 0.0)) -> "Domain":
        """Disk domain of the given radius."""
        return cls("disk", center=center, radius=radius)

    def bounds(self) -> Tuple[float, float, float, float]:
        """Bounding box (x_min, x_max, y_min, y_max)."""
        if self.kind == "rectangle":
            return (self.x_min, self.x_max, self.y_min, self.y_max)
        cx, cy = self.center
        return (cx - self.radius, cx + self.radius, cy - self.radius, cy + self.radius)

    def contains(self, x: ArrayLike, y: ArrayLike) -> np.ndarray:
        """Mask of points inside the closed domain."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "rectangle":
            return (
                (x >= self.x_min)
                & (x <= self.x_max)
                & (y >= self.y_min)
                & (y <= self.y_max)
            )
        cx, cy = self.center
        return (x - cx) ** 2 + (y - cy) ** 2 <= self.radius**2

    def describe(self) -> Dict[str, Any]:
        """JSON-ready description for error details."""
        if self.kind == "rectangle":
            return {"kind": "rectangle", "bounds": list(self.bounds())}
        return {"kind": "disk", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class GraphSurface:
    """A graph z = u(x, y) given by a deterministic jet evaluator."""

    name: str
    value: Callable[[ArrayLike, ArrayLike], ArrayLike]
    jet: Callable[[ArrayLike, ArrayLike], Jet2]
    domain: Domain
    provenance: Provenance = "analytic"


@dataclass(frozen=True)
class CurvaturePoint:
    """One sample of a curvature diagram."""

    x: float
    y: float
    H: float
    K: float
    kappa1: float
    kappa2: float
    axis_adjacent: bool = False

    @property
    def discriminant(self) -> float:
        """H^2 - K."""
        return self.H * self.H - self.K

    @property
    def position(self) -> Tuple[float, float]:
        """(x, y)."""
        return (self.x, self.y)


@dataclass(frozen=True)
class CurvatureSamples:
    """Vectorized list of CurvaturePoint (kappa1 >= kappa2 sample-wise)."""

    x: np.ndarray
    y: np.ndarray
    H: np.ndarray
    K: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    axis_adjacent: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        """Check that every field has the length of H."""
        n = np.asarray(self.H).size
        for name in ("x", "y", "K", "kappa1", "kappa2"):
            if np.asarray(getattr(self, name)).size != n:
                raise ValueError(f"CurvatureSamples field '{name}' has a wrong length.")

    def __len__(self) -> int:
        """Number of samples."""
        return int(np.asarray(self.H).size)

    @classmethod
    def from_principal(
        cls,
        x: ArrayLike,
        y: ArrayLike,
        k_a: ArrayLike,
        k_b: ArrayLike,
        axis_adjacent: Optional[ArrayLike] = None,
    ) -> "CurvatureSamples":
        """Builds samples from two unordered principal curvature arrays."""
        k_a = np.ravel(np.asarray(k_a, dtype=float))
        k_b = np.ravel(np.asarray(k_b, dtype=float))
        k1 = np.maximum(k_a, k_b)
        k2 = np.minimum(k_a, k_b)
        return cls(
            x=np.ravel(np.asarray(x, dtype=float)),
            y=np.ravel(np.asarray(y, dtype=float)),
            H=0.5 * (k1 + k2),
            K=k1 * k2,
            kappa1=k1,
            kappa2=k2,
            axis_adjacent=None if axis_adjacent is None else np.ravel(axis_adjacent),
        )

    @classmethod
    def from_points(cls, points: Sequence[CurvaturePoint]) -> "CurvatureSamples":
        """Stack CurvaturePoint records into arrays."""
        return cls(
            x=np.array([p.x for p in points], dtype=float),
            y=np.array([p.y for p in points], dtype=float),
            H=np.array([p.H for p in points], dtype=float),
            K=np.array([p.K for p in points], dtype=float),
            kappa1=np.array([p.kappa1 for p in points], dtype=float),
            kappa2=np.array([p.kappa2 for p in points], dtype=float),
            axis_adjacent=np.array([p.axis_adjacent for p in points], dtype=bool),
        )

    def points(self) -> Iterator[CurvaturePoint]:
        """Iterate the samples as CurvaturePoint records."""
        flags = (
            self.axis_adjacent
            if self.axis_adjacent is not None
            else np.zeros(len(self), dtype=bool)
        )
        for i in range(len(self)):
            yield CurvaturePoint(
                x=float(self.x[i]),
                y=float(self.y[i]),
                H=float(self.H[i]),
                K=float(self.K[i]),
                kappa1=float(self.kappa1[i]),
                kappa2=float(self.kappa2[i]),
                axis_adjacent=bool(flags[i]),
            )

    def take(self, mask: ArrayLike) -> "CurvatureSamples":
        """Samples selected by a boolean mask or index array."""
        mask = np.asarray(mask)
        return CurvatureSamples(
            x=self.x[mask],
            y=self.y[mask],
            H=self.H[mask],
            K=self.K[mask],
            kappa1=self.kappa1[mask],
            kappa2=self.kappa2[mask],
            axis_adjacent=(
                None if self.axis_adjacent is None else self.axis_adjacent[mask]
            ),
        )

    @classmethod
    def concat(cls, parts: Sequence["CurvatureSamples"]) -> "CurvatureSamples":
        """Concatenate several sample sets in order."""
        flags = None
        if any(p.axis_adjacent is not None for p in parts):
            flags = np.concatenate(
                [
                    (
                        np.zeros(len(p), bool)
                        if p.axis_adjacent is None
                        else p.axis_adjacent
                    )
                    for p in parts
                ]
            )
        return cls(
            x=np.concatenate([p.x for p in parts]),
            y=np.concatenate([p.y for p in parts]),
            H=np.concatenate([p.H for p in parts]),
            K=np.concatenate([p.K for p in parts]),
            kappa1=np.concatenate([p.kappa1 for p in parts]),
            kappa2=np.concatenate([p.kappa2 for p in parts]),
            axis_adjacent=flags,
        )


def as_samples(
    points: "CurvatureSamples | Sequence[CurvaturePoint]",
) -> CurvatureSamples:
    """Accepts either representation of a curvature point list."""
    if isinstance(points, CurvatureSamples):
        return points
    return CurvatureSamples.from_points(list(points))


@dataclass(frozen=True)
class CurvatureDiagram:
    """The planar set of (kappa1, kappa2) pairs attained by a surface."""

    kappa1: np.ndarray
    kappa2: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        """Reject points with kappa1 < kappa2."""
        if np.any(np.asarray(self.kappa1) < np.asarray(self.kappa2) - 1e-12):
            raise ValueError("Curvature diagram points must satisfy kappa1 >= kappa2.")

    @classmethod
    def from_samples(cls, samples: CurvatureSamples) -> "CurvatureDiagram":
        """Diagram of the principal curvatures of a sample set."""
        return cls(
            kappa1=samples.kappa1, kappa2=samples.kappa2, x=samples.x, y=samples.y
        )

    def __len__(self) -> int:
        """Number of diagram points."""
        return int(np.asarray(self.kappa1).size)


@dataclass(frozen=True)
class ShapeOperatorSample:
    """The matrix II * I^-1 at a chart point (shape (..., 2, 2))."""

    matrix: np.ndarray
    x: ArrayLike = 0.0
    y: ArrayLike = 0.0

    @property
    def trace(self) -> np.ndarray:
        """Trace, equal to 2H."""
        return self.matrix[..., 0, 0] + self.matrix[..., 1, 1]

    @property
    def det(self) -> np.ndarray:
        """Determinant, equal to K."""
        m = self.matrix
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]

    def eigenvalues(self) -> Tuple[np.ndarray, np.ndarray]:
        """Real eigenvalues (larger first); the discriminant is clamped at zero."""
        half = 0.5 * self.trace
        disc = half * half - self.det
        scale = 1.0 + half * half
        if np.any(disc < -1e-12 * scale):
            raise ValueError("Shape operator has complex eigenvalues.")
        root = np.sqrt(np.maximum(disc, 0.0))
        return half + root, half - root


@dataclass(frozen=True)
class Profile:
    """Arc-length sampled generating curve of a rotational surface."""

    s: np.ndarray
    x: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    kappa: np.ndarray
    step: float
    closure_residual: float = 0.0
    postconditions: Dict[str, bool] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Check array lengths and that s increases."""
        n = self.s.size
        if any(arr.size != n for arr in (self.x, self.z, self.theta, self.kappa)):
            raise ValueError("Profile arrays must share one length.")
        ds = np.diff(self.s)
        if n > 1:
            jitter = np.max(np.abs(ds - self.step))
            if np.any(ds <= 0) or jitter > 1e-9 * max(1.0, self.step):
                raise ValueError("Profile arc length must increase uniformly.")

    def __len__(self) -> int:
        """Number of profile samples."""
        return int(self.s.size)

    def tangent_defect(self) -> float:
        """Max |(x, z)' - (cos theta, sin theta)| with finite-differenced x, z."""
        if self.s.size < 3:
            return 0.0
        dx = np.gradient(self.x, self.step)
        dz = np.gradient(self.z, self.step)
        defect = np.hypot(dx - np.cos(self.theta), dz - np.sin(self.theta))
        # One-sided differences at the ends are first order only.
        return float(np.max(defect[1:-1]))

    def rows(self) -> List[Tuple[float, float, float, float, float]]:
        """(s, x, z, theta, kappa) rows for profile.csv."""
        return list(
            zip(
                self.s.tolist(),
                self.x.tolist(),
                self.z.tolist(),
                self.theta.tolist(),
                self.kappa.tolist(),
            )
        )


@dataclass(frozen=True)
class RotationalCurvatures:
    """Meridian and parallel curvatures along a profile."""

    s: np.ndarray
    kappa_meridian: np.ndarray
    kappa_parallel: np.ndarray
    axis_adjacent: np.ndarray

    def rows(self) -> List[Tuple[float, float, float]]:
        """(s, kappa_meridian, kappa_parallel) rows."""
        return list(
            zip(
                self.s.tolist(),
                self.kappa_meridian.tolist(),
                self.kappa_parallel.tolist(),
            )
        )


@dataclass(frozen=True)
class ComplexJet:
    """Value and Wirtinger derivatives of a complex planar function."""

    f: ArrayLike
    f_z: ArrayLike
    f_zbar: ArrayLike

    def __post_init__(self) -> None:
        """Reject non-finite complex jets."""
        if not _all_finite(self.f, self.f_z, self.f_zbar):
            raise ValueError("ComplexJet entries must be finite.")


@dataclass(frozen=True)
class EllipticCoefficients:
    """Coefficients a_ij, b_i of a linear elliptic operator sampled at points."""

    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    lambda1: float
    lambda2: float
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        """Require 0 < lambda1 <= lambda2 < inf."""
        if not (0 < self.lambda1 <= self.lambda2) or not math.isfinite(self.lambda2):
            raise ValueError("Ellipticity constants need 0 < lambda1 <= lambda2.")

    def eigenvalues(self) -> Tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (larger, smaller) of the symmetric coefficient matrix."""
        a11 = np.asarray(self.a11, dtype=float)
        a22 = np.asarray(self.a22, dtype=float)
        half = 0.5 * (a11 + a22)
        root = np.hypot(0.5 * (a11 - a22), self.a12)
        return half - root, half + root


@dataclass(frozen=True)
class MuBound:
    """Smallest mu with (h_xx + h_yy)^2 <= mu ((h_xx - h_yy)^2 + 4 h_xy^2)."""

    mu_star: float
    theta_max: float
    samples: int
    homogeneity_defect: float

    def as_dict(self) -> Dict[str, Any]:
        """Plain dict for report artifacts."""
        return {
            "mu_star": self.mu_star,
            "theta_max": self.theta_max,
            "samples": self.samples,
            "homogeneity_defect": self.homogeneity_defect,
        }


@dataclass(frozen=True)
class TubeSamples:
    """Principal curvatures of a tube on the (t, phi) grid."""

    t: np.ndarray
    phi: np.ndarray
    k_profile: np.ndarray
    k_long: np.ndarray
    denominator_min: float

    def rows(self) -> List[Tuple[float, float, float, float]]:
        """(t, phi, k1, k2) rows for tube.csv."""
        return list(
            zip(
                self.t.tolist(),
                self.phi.tolist(),
                self.k_profile.tolist(),
                self.k_long.tolist(),
            )
        )


@dataclass(frozen=True)
class ConvergenceStudy:
    """Step-halving study of the sandglass profile."""

    steps: List[float]
    closure_residuals: List[float]
    endpoint_differences: List[float]
    ratios: List[float]

    @property
    def observed_orders(self) -> List[float]:
        """log(ratio) / log(refinement) per step pair."""
        out = []
        for k, ratio in enumerate(self.ratios):
            refine = self.steps[k] / self.steps[k + 1]
            order = math.log(ratio) / math.log(refine) if ratio > 0 else float("nan")
            out.append(order)
        return out

    def as_dict(self) -> Dict[str, Any]:
        """Plain dict for report artifacts."""
        return {
            "steps": self.steps,
            "closure_residuals": self.closure_residuals,
            "endpoint_differences": self.endpoint_differences,
            "ratios": self.ratios,
        }


@dataclass(frozen=True)
class BeltramiCoefficient:
    """Complex dilatation mu and drift beta of an elliptic operator at sample points."""

    mu: np.ndarray
    beta: np.ndarray
    modulus: np.ndarray
    dilatation: np.ndarray
    identity_defect: float
