"""Numerical lab for umbilics, quasi-CMC inequalities and their counterexamples."""

from .core.config import TOOL_VERSION

__version__ = TOOL_VERSION
