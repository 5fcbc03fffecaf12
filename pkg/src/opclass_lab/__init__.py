"""Numerical toolkit for quasinormal-type operator classes on finite-dimensional spaces."""

from .errors import OpLabError
from .numkernel import DEFAULT_TOL, ToleranceProfile
from .opclass import classify, embry_battery, yamazaki_chain

__version__ = "0.1.0"

__all__ = ["DEFAULT_TOL", "OpLabError", "ToleranceProfile", "classify", "embry_battery", "yamazaki_chain"]
