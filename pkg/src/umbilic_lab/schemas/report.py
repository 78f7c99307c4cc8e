from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

from .certificate import Certificate


class Report(BaseModel):
    """Full, self-describing outcome of one scenario run."""

    scenario: Dict[str, Any]
    certificates: List[Certificate]
    artifacts: Dict[str, Any] = Field(default_factory=dict)
    conventions: Dict[str, str] = Field(default_factory=dict)
    tool_version: str
    wall_clock_seconds: float = Field(0.0, ge=0.0)

    @field_validator("certificates")
    @classmethod
    def _claims_named(cls, v: List[Certificate]) -> List[Certificate]:
        for cert in v:
            if "/" not in cert.claim_id:
                raise ValueError(f"Claim id {cert.claim_id!r} must name its source.")
        return v

    @property
    def all_hold(self) -> bool:
        """True when every certificate holds."""
        return all(c.holds for c in self.certificates)


class DiffEntry(BaseModel):
    """One drifted field between two reports."""

    action: str
    path: str
    old: Any = None
    new: Any = None


class ReportDiff(BaseModel):
    """Field-wise comparison of two reports of one scenario kind."""

    kind: str
    entries: List[DiffEntry] = Field(default_factory=list)
    closure_ratio: Optional[float] = Field(
        None, description="|closure residual of A| / |closure residual of B|"
    )

    @property
    def drift(self) -> bool:
        """True when any field drifted."""
        return bool(self.entries)
