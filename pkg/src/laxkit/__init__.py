"""laxkit: numerical checks for R-matrix-valued Lax pairs of elliptic Calogero-Moser
systems and the long-range spin chains obtained by freezing them."""

from ._accel import HAVE_NUMBA, use_numba
from .elliptic import EllipticContext, trigonometric
from .errors import (
    BackendError,
    ConfigError,
    DimensionCapError,
    HermiticityError,
    LaxkitError,
    PoleError,
    SeriesCapError,
    SpaceMismatchError,
)
from .operators import Operator, SpaceDescriptor
from .report import CheckRecord, CheckReport, Sampler
from .rmatrix import RModel, parse_model, register_model

__version__ = "0.1.0"

__all__ = [
    "HAVE_NUMBA",
    "use_numba",
    "EllipticContext",
    "trigonometric",
    "BackendError",
    "ConfigError",
    "DimensionCapError",
    "HermiticityError",
    "LaxkitError",
    "PoleError",
    "SeriesCapError",
    "SpaceMismatchError",
    "Operator",
    "SpaceDescriptor",
    "CheckRecord",
    "CheckReport",
    "Sampler",
    "RModel",
    "parse_model",
    "register_model",
]
