"""Polynomial-expansion pricing for defaultable local Levy-type models."""

__version__ = "0.1.0"

from .char_engine import CharApprox
from .errors import LevyxError
from .expansion import ExpansionScheme, expand
from .model import ModelSpec, validate
from .models import load_model

__all__ = ["CharApprox", "ExpansionScheme", "LevyxError", "ModelSpec", "expand", "load_model",
           "validate", "__version__"]
