"""Exception hierarchy shared by all beaconpursuit modules."""


class BeaconPursuitError(Exception):
    """Base class for every error raised by this package."""

    code = "ERROR"


class DegenerateFrame(BeaconPursuitError, ValueError):
    code = "DEGENERATE_FRAME"


class TriangleInequalityViolated(BeaconPursuitError, ValueError):
    code = "TRIANGLE_INEQUALITY"


class SingularConfiguration(BeaconPursuitError, ArithmeticError):
    """Two of {agent 1, agent 2, beacon} are (numerically) collocated."""

    code = "SINGULAR_CONFIGURATION"


class ParameterViolation(BeaconPursuitError, ValueError):
    code = "PARAMETER_VIOLATION"


class AssumptionViolation(ParameterViolation):
    """Parameters do not satisfy the common-gain/common-offset assumptions."""

    code = "ASSUMPTION_VIOLATION"


class NoIntersection(BeaconPursuitError, ValueError):
    code = "NO_INTERSECTION"


class Collinear(BeaconPursuitError, ValueError):
    code = "COLLINEAR"


class UnrealizableShape(BeaconPursuitError, ValueError):
    code = "UNREALIZABLE_SHAPE"


class NullclineViolation(BeaconPursuitError, ValueError):
    code = "NULLCLINE_VIOLATION"


class DegenerateData(BeaconPursuitError, ValueError):
    code = "DEGENERATE_DATA"


class InsufficientData(BeaconPursuitError, ValueError):
    code = "INSUFFICIENT_DATA"


class ParseError(BeaconPursuitError, ValueError):
    """Malformed configuration text; ``line`` is 1-based (0 when not tied to a line)."""

    code = "PARSE_ERROR"

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class ValidationError(BeaconPursuitError, ValueError):
    """Well-formed configuration that violates an invariant."""

    code = "VALIDATION_ERROR"


class OutputError(BeaconPursuitError, OSError):
    code = "IO_FAILURE"
