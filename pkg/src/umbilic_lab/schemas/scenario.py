from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from .construction import SandglassSpec, TubeSpec


class _ScenarioBase(BaseModel):
    model_config = ConfigDict(extra="forbid")

    output_dir: str = "umbilic-lab-out"
    loop_samples: int = Field(256, ge=64)


class PolynomialScenario(_ScenarioBase):
    """Quasiminimal polynomial graph: det, mu*, index, quasi-CMC and asymptotics."""

    kind: Literal["polynomial"] = "polynomial"
    circle_samples: int = Field(4096, ge=1024)
    random_points: int = Field(10_000, ge=1)
    seed: int = 0
    inner_radius: float = Field(1e-3, gt=0.0)
    outer_radius: float = Field(0.5, gt=0.0)
    hxy_outer_radius: float = Field(10.0, gt=0.0)
    radial_samples: int = Field(48, ge=2)
    angular_samples: int = Field(256, ge=8)
    loop_radii: List[float] = Field(
        default_factory=lambda: [0.1, 0.3, 0.5], min_length=1
    )
    grid_n: int = Field(101, ge=5)
    radius_sweep: List[float] = [0.25, 0.5, 0.75, 1.0]

    @model_validator(mode="after")
    def _annulus(self) -> "PolynomialScenario":
        if not self.inner_radius < self.outer_radius:
            raise ValueError("inner_radius must be smaller than outer_radius.")
        if not self.inner_radius < self.hxy_outer_radius:
            raise ValueError("inner_radius must be smaller than hxy_outer_radius.")
        return self


class SandglassScenario(_ScenarioBase):
    """Rotational sandglass sphere with closure, curvature and refutation checks."""

    kind: Literal["sandglass"] = "sandglass"
    sandglass: SandglassSpec = SandglassSpec()
    mu_values: List[float] = [0.0, 0.5, 0.9, 0.99]
    neck_perturbation: float = Field(0.0, ge=0.0, le=1e-3)
    convergence_steps: List[float] = Field(default_factory=lambda: [4e-3, 2e-3, 1e-3])
    window_radius: Optional[float] = Field(None, gt=0.0)

    @model_validator(mode="after")
    def _steps(self) -> "SandglassScenario":
        if self.convergence_steps and len(self.convergence_steps) < 3:
            raise ValueError("convergence_steps needs at least three steps, or none.")
        if any(h <= 0.0 for h in self.convergence_steps):
            raise ValueError("convergence_steps must be positive.")
        return self


class TubeScenario(_ScenarioBase):
    """Thin tube around a closed curve."""

    kind: Literal["tube"] = "tube"
    tube: TubeSpec = TubeSpec()
    c: float = 10.0
    m1: float = Field(-0.9, lt=0.0, ge=-1.0, description="Upper wedge slope")
    genus: int = 1


class EllipsoidScenario(_ScenarioBase):
    """Ellipsoid charts: umbilic location, indices and the wedge contrast."""

    kind: Literal["ellipsoid"] = "ellipsoid"
    axes: Tuple[float, float, float] = (1.5, 1.2, 1.0)
    grid_n: int = Field(161, ge=5)
    loop_radius: float = Field(0.05, gt=0.0)
    lam_values: List[float] = [-1.0, -2.0, -10.0]
    wedge_radius: float = Field(0.05, gt=0.0)
    location_tol: float = Field(1e-4, gt=0.0)


class ComparisonSphereScenario(_ScenarioBase):
    """Totally umbilical graph of a sphere of curvature c."""

    kind: Literal["comparison-sphere"] = "comparison-sphere"
    c: float = 1.0
    radius: float = Field(0.8, gt=0.0)
    grid_n: int = Field(41, ge=5)


class CustomGraphScenario(_ScenarioBase):
    """Polynomial graph sum coef * x^i * y^j over a rectangle."""

    kind: Literal["custom-graph"] = "custom-graph"
    terms: List[Tuple[float, int, int]] = Field(
        default_factory=lambda: [(1.0, 3, 0), (-3.0, 1, 2)], min_length=1
    )
    bounds: Tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0)
    c: float = 0.0
    mu: float = Field(0.5, ge=0.0, lt=1.0)
    grid_n: int = Field(81, ge=5)
    loop_radius: float = Field(0.05, gt=0.0)

    @model_validator(mode="after")
    def _exponents(self) -> "CustomGraphScenario":
        if any(i < 0 or j < 0 for _, i, j in self.terms):
            raise ValueError("Monomial exponents must be non-negative.")
        x0, x1, y0, y1 = self.bounds
        if not (x0 < x1 and y0 < y1):
            raise ValueError("bounds must describe a nonempty rectangle.")
        return self


class EllipticScanScenario(_ScenarioBase):
    """Beltrami bounds, the J identity and critical point scans."""

    kind: Literal["elliptic-scan"] = "elliptic-scan"
    function: Literal["quasiminimal", "re-z-cubed", "saddle"] = "quasiminimal"
    annulus: Tuple[float, float] = (0.1, 0.5)
    scan_n: int = Field(64, ge=8)
    complex_map: Literal["z", "conj", "z_abs2", "z_cubed"] = "z_abs2"
    mu0: float = Field(0.5, ge=0.0, lt=1.0)
    c: float = Field(0.0, ge=0.0)
    random_samples: int = Field(10_000, ge=1)
    lambdas: Tuple[float, float] = (1.0, 3.0)
    seed: int = 0


Scenario = Annotated[
    Union[
        PolynomialScenario,
        SandglassScenario,
        TubeScenario,
        EllipsoidScenario,
        ComparisonSphereScenario,
        CustomGraphScenario,
        EllipticScanScenario,
    ],
    Field(discriminator="kind"),
]

scenario_adapter: TypeAdapter[Scenario] = TypeAdapter(Scenario)

SCENARIO_TYPES = {
    "polynomial": PolynomialScenario,
    "sandglass": SandglassScenario,
    "tube": TubeScenario,
    "ellipsoid": EllipsoidScenario,
    "comparison-sphere": ComparisonSphereScenario,
    "custom-graph": CustomGraphScenario,
    "elliptic-scan": EllipticScanScenario,
}


def output_path(scenario: _ScenarioBase, override: Optional[str | Path] = None) -> Path:
    """Output directory of a run, the override winning over the scenario."""
    return Path(override) if override is not None else Path(scenario.output_dir)
