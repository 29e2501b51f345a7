"""Exception taxonomy shared across the package.

CLI exit codes: config/parse problems map to 4, inconclusive numerics to 3,
a computed-but-disagreeing index comparison to 2 (not an exception).
"""


class HindexError(Exception):
    """Base class for all package errors."""


class ConfigError(HindexError):
    """Invalid run configuration (unknown keys, bad types, missing fields)."""


class SymbolParseError(ConfigError):
    """Symbol expression failed to parse; carries the offending column."""

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (column {position})"
        super().__init__(message)


class ShapeError(ConfigError):
    """Expression tree does not shape-check to a scalar or square matrix."""


class UnsupportedModelError(HindexError):
    """Requested geometric data outside the implemented model range."""


class ResolutionError(HindexError):
    """Quadrature resolution below the supported floor."""


class NonInvertibleSymbolError(HindexError):
    """Symbol fails the pointwise invertibility check on the sample grid."""


class WindingResidualError(HindexError):
    """Winding integral too far from an integer; resolution insufficient."""


class EllipticityError(HindexError):
    """Operation requires a Heisenberg-elliptic coefficient field."""


class UnsupportedSymbolError(HindexError):
    """Coefficient field outside the class the analytic oracle can assemble."""


class NormalizationFailureError(HindexError):
    """Spectral threshold crossings landed off the odd integers.

    Designated bug signal for the frame-scaling chain.
    """


class InconclusiveError(HindexError):
    """Analytic index did not stabilize; carries diagnostics."""

    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table


class InternalConsistencyError(HindexError):
    """Two internal routes to the same integer disagreed (bug signal)."""
