"""
Error types raised by the numerical layers and the scenario runner
"""
from typing import Any, Optional, Sequence


class ReflexError(Exception):
    """Base class for every reflexcr error"""


class DomainViolationError(ReflexError):
    """Evaluation requested outside a declared domain"""

    def __init__(self, point: Sequence[complex], domain: str, detail: Optional[str] = None):
        self.point = tuple(complex(p) for p in point)
        self.domain = domain
        coords = ", ".join(f"{p.real:.6g}{p.imag:+.6g}j" for p in self.point)
        message = f"point ({coords}) outside {domain}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class NonFiniteValueError(ReflexError):
    """NaN or infinity supplied or produced"""


class PreconditionError(ReflexError):
    """A documented precondition does not hold"""


class TraceMismatchError(ReflexError):
    """Supplied trace series disagrees with the function it describes"""


class SeriesError(ReflexError):
    """Base class for power-series errors"""


class IncompatibleVariablesError(SeriesError):
    """Series operands live in different variable sets"""


class UnknownVariableError(SeriesError):
    """Variable name not present in the series"""


class NonInvertibleSeriesError(SeriesError):
    """Series reversion requested for a series with vanishing linear term"""


class PolyradiusError(SeriesError):
    """Declared polyradius does not cover the requested box"""


class SingularKernelError(ReflexError):
    """Möbius kernel denominator vanished"""


class SingularMatrixError(ReflexError):
    """Linear map is not invertible"""


class ConeError(ReflexError):
    """Generators do not describe a solid pointed polyhedral cone"""


class OutsideChartError(ReflexError):
    """Newton inverse of the extended chart did not converge"""


class QuadratureEscapeError(DomainViolationError):
    """A quadrature node was mapped outside the integrand's domain"""

    def __init__(self, theta: float, point: Sequence[complex], domain: str):
        self.theta = float(theta)
        super().__init__(point, domain, detail=f"quadrature node theta={self.theta:.6g}")


class ChartWedgeError(ReflexError):
    """Extended chart does not map the chart wedge into the wedge"""

    def __init__(self, report: Any):
        self.report = report
        super().__init__(
            f"chart wedge not contained in wedge: {report.violations} of {report.samples} samples violate"
        )


class InconsistentTraceError(ReflexError):
    """Reflected function is not real on the edge"""


class PipelineStageError(ReflexError):
    """A stage of the extension pipeline failed"""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


class ScenarioError(ReflexError):
    """Scenario configuration is invalid"""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
