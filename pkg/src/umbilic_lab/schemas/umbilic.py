from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator


class LoopSampling(BaseModel):
    """A sampled circle used for winding numbers."""

    center: Tuple[float, float] = (0.0, 0.0)
    radius: float = Field(..., gt=0.0)
    n: int = Field(256, ge=64)


class Umbilic(BaseModel):
    """An isolated umbilic located by a grid scan."""

    position: Tuple[float, float]
    residual: float = Field(..., description="H^2 - K at the refined position")
    index: Optional[float] = Field(None, description="Half-integer index, if defined")
    loop_radius: Optional[float] = None

    @field_validator("index")
    @classmethod
    def _half_integer(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and abs(2.0 * v - round(2.0 * v)) > 1e-12:
            raise ValueError("Umbilic index must be a multiple of 1/2.")
        return v


class UmbilicSearch(BaseModel):
    """Result of scanning a chart for umbilics."""

    umbilics: List[Umbilic] = []
    totally_umbilical: bool = False
    flagged_fraction: float = Field(0.0, ge=0.0, le=1.0)
    clusters: int = 0


class CriticalPointReport(BaseModel):
    """Hessian sign and gradient-field indices around a critical point."""

    center: Tuple[float, float]
    annulus: Tuple[float, float]
    samples: int
    det_max: float
    det_negative: bool
    index_ux: List[int] = Field(..., description="Winding of (u_xx, u_xy) per loop")
    index_uy: List[int] = Field(..., description="Winding of (u_xy, u_yy) per loop")

    @property
    def indices_agree(self) -> bool:
        """Whether both gradient windings agree."""
        return self.index_ux == self.index_uy

    @property
    def nonpositive(self) -> bool:
        """Whether every gradient winding is <= 0."""
        return all(i <= 0 for i in self.index_ux + self.index_uy)
