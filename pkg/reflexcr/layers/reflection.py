"""
Layer 3: Reflection
One-variable reflection operators: classical Schwarz reflection, reflection
with a real-analytic imaginary trace, harmonic reflection and reflection
across a real-analytic curve
"""
from dataclasses import dataclass
from typing import Callable, Optional
import logging

import numpy as np

from reflexcr.config import settings
from reflexcr.exceptions import (
    NonInvertibleSeriesError,
    OutsideChartError,
    PreconditionError,
    TraceMismatchError,
)
from reflexcr.layers.analytic_core import (
    AnalyticFunction,
    Domain,
    DomainBox,
    Provenance,
    UnionDomain,
    as_points,
    discrete_laplacian,
)
from reflexcr.layers.series import (
    PowerSeries1D,
    SeriesPair,
    complexify,
    estimate_radius,
    series_from_name,
)

logger = logging.getLogger(__name__)

TRACE_TOLERANCE = 1e-8
HARMONIC_TOLERANCE = 1e-4
LAPLACIAN_STEP = 1e-3
_TRACE_SAMPLES = 33
_NEWTON_POLISH_STEPS = 8
_NEWTON_POLISH_TOLERANCE = 1e-10

RealField = Callable[[np.ndarray], np.ndarray]


def half_disc_domain(radius: float = 1.0) -> DomainBox:
    """Closed upper half disc D+ including the axis segment L"""
    return DomainBox.disc(radius, "upper", name=f"D+(0,{radius:g})")


class CurveSideDomain(Domain):
    """Points of a disc on or above the curve y = gamma(x)"""

    def __init__(self, gamma: PowerSeries1D, radius: float, tolerance: Optional[float] = None):
        self.gamma = gamma
        self.radius = radius
        self.tolerance = settings.domain_tolerance if tolerance is None else tolerance
        self.arity = 1
        self.name = f"above curve in D(0,{radius:g})"

    def mask(self, points: np.ndarray) -> np.ndarray:
        z = points[:, 0]
        inside = np.abs(z) <= self.radius + self.tolerance
        return inside & (z.imag >= self.gamma(z.real) - self.tolerance)


def effective_radius(trace: PowerSeries1D) -> float:
    """min(declared radius, root-test estimate, unit disc)"""
    return min(trace.radius, estimate_radius(trace), 1.0)


@dataclass(frozen=True)
class HalfDiscFunction:
    """Holomorphic f on D+ together with the series of Im f on the axis"""

    f: AnalyticFunction
    trace: PowerSeries1D

    def __post_init__(self):
        radius = min(self.trace.radius, 1.0)
        x = np.linspace(-0.95 * radius, 0.95 * radius, _TRACE_SAMPLES)
        mismatch = float(np.max(np.abs(self.f(x.astype(complex)).imag - self.trace(x))))
        if mismatch > TRACE_TOLERANCE:
            raise TraceMismatchError(
                f"Im {self.f.label} differs from its trace by {mismatch:.3e} on the axis"
            )


def classical_reflect(h: HalfDiscFunction) -> AnalyticFunction:
    """F = f above the axis and conj(f(conj z)) below; requires a vanishing trace"""
    if not h.trace.is_zero():
        raise PreconditionError(
            "classical reflection needs Im f = 0 on the axis; use general_reflect for a nonzero trace"
        )
    f = h.f

    def evaluate(points: np.ndarray) -> np.ndarray:
        z = points[:, 0]
        out = np.empty(z.shape, dtype=complex)
        upper = z.imag >= 0
        if np.any(upper):
            out[upper] = f(z[upper])
        if np.any(~upper):
            out[~upper] = np.conj(f(np.conj(z[~upper])))
        return out

    domain = DomainBox.disc(1.0, name="D(0,1)")
    return AnalyticFunction(1, evaluate, domain, Provenance.CONSTRUCTED_EXTENSION, f"reflect[{f.label}]")


def general_reflect(h: HalfDiscFunction, method: str = "closed-form") -> AnalyticFunction:
    """Extension of f to D+ | D_r using the complexified trace v(z,0).

    Below the axis F(z) = conj(f(conj z)) + 2i v(z,0). With ``method="two-step"``
    the real-on-axis remainder f - i v is reflected classically and i v added
    back, which is the same function.
    """
    if method not in ("closed-form", "two-step"):
        raise ValueError(f"unknown reflection method '{method}'")
    f = h.f
    v = complexify(h.trace, label="v(z,0)")
    radius = effective_radius(h.trace)
    logger.debug(f"general reflection of {f.label}: effective radius {radius:.6g}")

    def evaluate(points: np.ndarray) -> np.ndarray:
        z = points[:, 0]
        out = np.empty(z.shape, dtype=complex)
        upper = z.imag >= 0
        if np.any(upper):
            out[upper] = f(z[upper])
        lower = ~upper
        if np.any(lower):
            below = z[lower]
            if method == "closed-form":
                out[lower] = np.conj(f(np.conj(below))) + 2j * v(below)
            else:
                mirrored = np.conj(below)
                remainder = f(mirrored) - 1j * v(mirrored)
                out[lower] = np.conj(remainder) + 1j * v(below)
        return out

    domain = UnionDomain([half_disc_domain(), DomainBox.disc(radius, name=f"D(0,{radius:.6g})")])
    return AnalyticFunction(1, evaluate, domain, Provenance.CONSTRUCTED_EXTENSION, f"reflect[{f.label}]")


class HarmonicExtension:
    """Real-valued harmonic extension V on D+ | D_r"""

    def __init__(self, evaluator: RealField, radius: float, label: str = "V"):
        self._evaluator = evaluator
        self.radius = radius
        self.label = label
        self.domain = UnionDomain([half_disc_domain(), DomainBox.disc(radius, name=f"D(0,{radius:.6g})")])

    def __call__(self, z) -> np.ndarray:
        points = as_points(z, 1)
        self.domain.check(points)
        return np.asarray(self._evaluator(points[:, 0]), dtype=float)

    def laplacian(self, z, h: float = LAPLACIAN_STEP) -> np.ndarray:
        return discrete_laplacian(self, z, h)


def _spot_check_harmonic(v: RealField, samples: int, seed: int, h: float) -> float:
    rng = np.random.default_rng(seed)
    radius = np.sqrt(rng.uniform(0, 1, samples)) * (1 - 3 * h)
    angle = rng.uniform(0, np.pi, samples)
    z = radius * np.exp(1j * angle)
    z = z[z.imag > 2 * h]
    if z.size == 0:
        return 0.0
    return float(np.max(np.abs(discrete_laplacian(v, z, h))))


def harmonic_reflect(
    v: RealField,
    trace: PowerSeries1D,
    samples: int = 64,
    seed: int = 0,
    h: float = LAPLACIAN_STEP,
) -> HarmonicExtension:
    """V = v on D+ and V(x, y) = 2 Re v(z, 0) - v(x, -y) below the axis"""
    worst = _spot_check_harmonic(v, samples, seed, h)
    if worst > HARMONIC_TOLERANCE:
        raise PreconditionError(f"v is not harmonic on D+: discrete Laplacian reaches {worst:.3e}")
    limit = min(trace.radius, 1.0)
    x = np.linspace(-0.95 * limit, 0.95 * limit, _TRACE_SAMPLES)
    mismatch = float(np.max(np.abs(np.asarray(v(x.astype(complex)), dtype=float) - trace(x))))
    if mismatch > TRACE_TOLERANCE:
        raise TraceMismatchError(f"harmonic function differs from its trace by {mismatch:.3e} on the axis")

    v_complex = complexify(trace, label="v(z,0)")
    radius = effective_radius(trace)

    def evaluate(z: np.ndarray) -> np.ndarray:
        out = np.empty(z.shape, dtype=float)
        upper = z.imag >= 0
        if np.any(upper):
            out[upper] = v(z[upper])
        lower = ~upper
        if np.any(lower):
            below = z[lower]
            out[lower] = 2 * v_complex(below).real - np.asarray(v(np.conj(below)), dtype=float)
        return out

    return HarmonicExtension(evaluate, radius)


def harmonic_reflect_via_holomorphic(h: HalfDiscFunction) -> HarmonicExtension:
    """Harmonic extension of Im f computed as Im of the holomorphic extension"""
    extension = general_reflect(h)
    radius = effective_radius(h.trace)
    return HarmonicExtension(lambda z: extension(z).imag, radius, label=f"Im {extension.label}")


class _FlatteningChart:
    """psi(zeta) = zeta + i gamma(zeta) and its inverse near 0"""

    def __init__(self, gamma: PowerSeries1D):
        identity = series_from_name("identity", gamma.order, gamma.radius)
        pair = SeriesPair(identity, gamma)
        self.forward = complexify(pair, label="psi")
        self.derivative = complexify(SeriesPair(identity.derivative(), gamma.derivative()), label="psi'")
        try:
            inverse = pair.revert()
        except NonInvertibleSeriesError:
            logger.error("flattening chart is not invertible at 0")
            raise
        self.inverse_series = complexify(inverse, label="psi^-1")
        magnitudes = PowerSeries1D(np.abs(inverse.complex_coefficients()), gamma.radius)
        self.radius = min(estimate_radius(magnitudes), gamma.radius)

    def invert(self, z: np.ndarray) -> np.ndarray:
        """Reverted series as the first guess, polished by Newton steps on psi"""
        zeta = self.inverse_series(z)
        for _ in range(_NEWTON_POLISH_STEPS):
            delta = (self.forward(zeta) - z) / self.derivative(zeta)
            zeta = zeta - delta
            if np.max(np.abs(delta), initial=0.0) <= 1e-15 * max(1.0, float(np.max(np.abs(zeta), initial=0.0))):
                break
        residual = float(np.max(np.abs(self.forward(zeta) - z), initial=0.0))
        if residual > _NEWTON_POLISH_TOLERANCE:
            raise OutsideChartError(f"flattening chart inverse did not converge: residual {residual:.3e}")
        return zeta


def curve_flatten_reflect(
    f: AnalyticFunction,
    gamma: PowerSeries1D,
    trace: PowerSeries1D,
) -> AnalyticFunction:
    """Extend f from above the curve S = {x + i gamma(x)} across S near 0.

    ``trace`` is the series in x of Im f(x + i gamma(x)). The curve is
    flattened by psi, the flattened function is reflected with
    ``general_reflect`` and the result is mapped back with psi^-1.
    """
    if abs(gamma.coefficients[0]) > settings.domain_tolerance:
        raise PreconditionError(f"curve must pass through 0, gamma(0) = {gamma.coefficients[0]}")
    chart = _FlatteningChart(gamma)
    radius = min(trace.radius, gamma.radius)

    def flattened(points: np.ndarray) -> np.ndarray:
        return f(chart.forward(points[:, 0]))

    f_flat = AnalyticFunction(
        1, flattened, half_disc_domain(min(radius, 1.0)), Provenance.CONSTRUCTED_EXTENSION, f"{f.label}*psi"
    )
    reflected = general_reflect(HalfDiscFunction(f_flat, PowerSeries1D(trace.coefficients, radius)))

    def evaluate(points: np.ndarray) -> np.ndarray:
        z = points[:, 0]
        zeta = chart.invert(z)
        out = np.empty(z.shape, dtype=complex)
        upper = zeta.imag >= 0
        if np.any(upper):
            out[upper] = f(z[upper])
        if np.any(~upper):
            out[~upper] = reflected(zeta[~upper])
        return out

    logger.info(f"curve flattening chart for {f.label}: radius {chart.radius:.6g}")
    domain = DomainBox.disc(chart.radius, name=f"D(0,{chart.radius:.6g})")
    return AnalyticFunction(1, evaluate, domain, Provenance.CONSTRUCTED_EXTENSION, f"curve-reflect[{f.label}]")
