"""Exception types shared across the package."""


class MemwalkError(Exception):
    """Base class for all memwalk-specific errors."""


class CouplingOutOfRange(MemwalkError):
    """A transfer probability left [0, 1] while clamping was disabled."""

    def __init__(self, x, step=None):
        self.x = x
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(
            f"transfer probability outside [0, 1] from state x={x}{where}"
        )


class DegeneratePdf(MemwalkError):
    """Moment ratios requested for a zero-variance distribution."""


class SingularEvaluationPoint(MemwalkError):
    """Generating function evaluated at q in {0, -1, +1}."""


class DegenerateDenominator(MemwalkError):
    """A term denominator 1/(2*eps) + k vanished in the literal closed form."""


class ParseError(MemwalkError):
    """Malformed input file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class NonPositivePrice(ParseError):
    """Price column contained a value <= 0."""


class EmptyFile(ParseError):
    """Input file contained no data rows."""


class InsufficientBins(MemwalkError):
    """Fewer than the minimum number of populated bins in the fit range."""


class InsufficientScales(MemwalkError):
    """Scaling-exponent regression needs more / wider-spread sizes."""


class NonConvergentNormalization(MemwalkError):
    """Width self-consistency iteration did not converge."""


class OptimizerStalled(MemwalkError):
    """No simplex start converged to the requested tolerance."""


class QuadratureFailure(MemwalkError):
    """Numerical integration did not reach the requested accuracy."""
