"""mslab: operator criteria on model spaces and H(Gamma, v) spaces of the upper half-plane."""

from .errors import (
    ConfigError,
    Divergent,
    ExprSyntaxError,
    MslabError,
    NonConvergence,
    NonHermitian,
    PoleHit,
    RangeViolation,
    SingularityOnGrid,
    SingularityOnPath,
    SpaceError,
    TooFewPoints,
)
from .hgamma import SpacePair
from .numerics import QuadratureSpec
from .symb import differentiate, parse_expr, to_text

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Divergent",
    "ExprSyntaxError",
    "MslabError",
    "NonConvergence",
    "NonHermitian",
    "PoleHit",
    "QuadratureSpec",
    "RangeViolation",
    "SingularityOnGrid",
    "SingularityOnPath",
    "SpaceError",
    "SpacePair",
    "TooFewPoints",
    "differentiate",
    "parse_expr",
    "to_text",
    "__version__",
]
