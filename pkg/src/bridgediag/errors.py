"""Exception types shared across the package."""


class BridgeDiagError(Exception):
    """Base class for all estimation and diagnostic failures."""


class DimensionError(BridgeDiagError):
    """Shapes of points, draws, or factors do not agree."""


class DegenerateCovarianceError(BridgeDiagError):
    """Covariance stayed non-positive-definite through the whole jitter schedule."""


class ZeroVarianceError(BridgeDiagError):
    """A variance or ESS was requested for a constant sequence."""


class EvaluatorError(BridgeDiagError):
    """An external model subprocess misbehaved.

    Carries the raw payload (request or response line) that triggered the
    failure so the caller can inspect what actually went over the wire.
    """

    def __init__(self, message: str, payload: str | bytes | None = None):
        super().__init__(message if payload is None else f"{message}; payload: {payload!r}")
        self.payload = payload
