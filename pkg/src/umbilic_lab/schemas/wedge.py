from typing import Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator


class WedgeParams(BaseModel):
    """Mutually convertible constants (c, Lambda, m1, m2, mu) of the wedge condition."""

    c: float
    lam: float = Field(..., le=-1.0, description="Lambda = (mu + 1) / (mu - 1)")
    m1: float = Field(..., lt=0.0)
    m2: float = Field(..., lt=0.0)
    mu: float = Field(..., ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _consistent(self) -> "WedgeParams":
        if self.m1 < self.m2:
            raise ValueError("Wedge slopes must satisfy m1 >= m2.")
        scale = 1.0 + abs(self.lam)
        if abs(self.lam - (self.mu + 1.0) / (self.mu - 1.0)) > 1e-9 * scale:
            raise ValueError("Lambda and mu are inconsistent.")
        if abs(self.m1 * self.m2 - 1.0) > 1e-9:
            raise ValueError("Wedge slopes must satisfy m1 * m2 = 1.")
        if abs(0.5 * (self.m1 + self.m2) - self.lam) > 1e-9 * scale:
            raise ValueError("Wedge slopes must average to Lambda.")
        return self

    @property
    def slopes(self) -> Tuple[float, float]:
        """(m1, m2)."""
        return (self.m1, self.m2)


class TauResult(BaseModel):
    """Interpolation weight between the two boundary Weingarten functionals."""

    tau: float = Field(..., ge=0.0, le=1.0)
    undetermined: bool = False
    w1: float
    w2: float


class WedgeAnalysis(BaseModel):
    """Observed slope interval of a curvature diagram near the diagonal."""

    c: float
    window_radius: float
    points_in_window: int
    points_used: int
    ratio_min: Optional[float] = None
    ratio_max: Optional[float] = None
    verdict: Literal["holds", "fails", "degenerate-umbilical"]
    cusp_like: bool = Field(
        False, description="Observed ratios approach 0 or -infinity."
    )
