from typing import Any, Optional

from pydantic import BaseModel


class LabError(BaseModel):
    """Pydantic model for errors printed by the command line."""

    error: str
    details: Optional[Any] = None
