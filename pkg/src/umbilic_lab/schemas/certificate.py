from typing import Any, Dict, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

Verdict = Literal["holds", "fails"]


class Witness(BaseModel):
    """The worst sample of a certificate."""

    position: Tuple[float, float]
    kappa1: float
    kappa2: float
    margin: float


class Certificate(BaseModel):
    """Machine-checkable verdict on one claim over a finite sample."""

    claim_id: str = Field(..., min_length=1)
    verdict: Verdict
    witness: Optional[Witness] = None
    sample_count: int = Field(..., ge=0)
    details: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _failing_witness_is_negative(self) -> "Certificate":
        if self.verdict == "fails":
            if self.witness is None or not self.witness.margin < 0:
                raise ValueError("A failing certificate needs a negative margin.")
        return self

    @property
    def holds(self) -> bool:
        """True when the verdict is "holds"."""
        return self.verdict == "holds"
