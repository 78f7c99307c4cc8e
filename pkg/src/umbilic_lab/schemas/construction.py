import math
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator


class SandglassSpec(BaseModel):
    """Parameters of the rotational sandglass sphere."""

    a: float = 1.8
    b: float = 2.4
    amplitude: Optional[float] = Field(None, gt=0.0)
    step: float = Field(1e-4, gt=0.0, le=0.05)
    integral_residual: Optional[float] = None

    @model_validator(mode="after")
    def _standing_assumptions(self) -> "SandglassSpec":
        a, b = self.a, self.b
        if not (math.pi / 2 < a < b < math.pi):
            raise ValueError("Sandglass parameters need pi/2 < a < b < pi.")
        if not b < a + math.sin(a):
            raise ValueError("Sandglass parameters need b < a + sin(a).")
        return self


class FourierSeries(BaseModel):
    """One coordinate of a periodic curve: const + sum cos_k cos(kt) + sin_k sin(kt)."""

    const: float = 0.0
    cos: List[float] = []
    sin: List[float] = []


class TubeSpec(BaseModel):
    """Tube of fixed radius around a closed curve given by truncated Fourier series."""

    curve: List[FourierSeries] = Field(
        default_factory=lambda: [
            FourierSeries(cos=[1.0]),
            FourierSeries(sin=[1.0]),
            FourierSeries(),
        ],
        min_length=3,
        max_length=3,
    )
    drift: Tuple[float, float, float] = Field(
        (0.0, 0.0, 0.0), description="Linear term; nonzero only for open test tubes"
    )
    radius: float = Field(0.05, gt=0.0)
    n_t: int = Field(256, ge=8)
    n_phi: int = Field(64, ge=8)

    @property
    def closed(self) -> bool:
        """True when the curve has no linear drift."""
        return all(d == 0.0 for d in self.drift)
