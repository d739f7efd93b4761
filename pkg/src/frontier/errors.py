"""Exception types shared across the package."""


class FrontierError(Exception):
    """Base class for all package-specific errors."""


class EmptyWindow(FrontierError):
    """No usable design points, even after window expansion."""


class NumericalFailure(FrontierError):
    """A numerical routine degenerated beyond its iteration or accuracy cap."""


class SingularDesign(FrontierError):
    """A weighted least-squares design is rank deficient."""


class DegenerateDenominator(FrontierError):
    """Every smoothing node was thresholded away; the ratio is 0/0."""


class DegenerateSpacings(FrontierError):
    """Residual log-spacings are non-positive; tail estimates undefined."""


class TruncationSuspect(FrontierError):
    """A sup-inf optimum was attained suspiciously deep in the truncated
    mark sequence; increase the truncation length."""


class EmptyNeighbourhood(FrontierError):
    """A quadrature node has no sampled points within unit radius."""


class MalformedRow(FrontierError):
    """A CSV row failed to parse; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
