"""
Layer 1: Analytic Core
Complex points, domains, evaluable analytic functions, grids and numerical
holomorphy checks shared by every other layer
"""
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, List, Mapping, Optional, Sequence, Tuple
import logging

import numpy as np
from joblib import Parallel, delayed

from reflexcr.config import settings
from reflexcr.exceptions import DomainViolationError, NonFiniteValueError

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray], np.ndarray]


def complex_vector(entries: Iterable[complex]) -> np.ndarray:
    """Validated one-dimensional complex point"""
    vector = np.atleast_1d(np.asarray(entries, dtype=complex))
    if vector.ndim != 1 or vector.size == 0:
        raise ValueError(f"complex vector must be a non-empty 1-D sequence, got shape {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise NonFiniteValueError(f"complex vector has non-finite entries: {vector}")
    return vector


def as_points(points, arity: int) -> np.ndarray:
    """Coerce input to an (m, arity) complex array.

    A scalar or a flat sequence is read as a list of points when ``arity`` is 1
    and as a single point otherwise.
    """
    array = np.asarray(points, dtype=complex)
    if array.ndim == 0:
        array = array.reshape(1, 1)
    elif array.ndim == 1:
        array = array.reshape(-1, 1) if arity == 1 else array.reshape(1, -1)
    if array.ndim != 2 or array.shape[1] != arity:
        raise ValueError(f"expected points of arity {arity}, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        bad = array[~np.all(np.isfinite(array), axis=1)][0]
        raise NonFiniteValueError(f"non-finite point {bad}")
    return array


class Domain:
    """Closed region of C^arity with a vectorised membership test"""

    arity: int = 1
    name: str = "domain"

    def mask(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, point) -> bool:
        return bool(self.mask(as_points(point, self.arity))[0])

    def check(self, points: np.ndarray) -> None:
        """Raise naming the first point outside the domain"""
        inside = self.mask(points)
        if not np.all(inside):
            bad = points[np.argmin(inside)]
            raise DomainViolationError(bad, self.name)


class ComplexSpace(Domain):
    """All of C^arity (entire functions)"""

    def __init__(self, arity: int = 1):
        self.arity = arity
        self.name = f"C^{arity}"

    def mask(self, points: np.ndarray) -> np.ndarray:
        return np.ones(points.shape[0], dtype=bool)


_CONSTRAINTS = ("upper", "lower", "real")


class DomainBox(Domain):
    """Polydisc |z_j - c_j| <= r_j with optional half-plane constraints.

    Constraints are ``(coordinate, kind)`` pairs with kind ``upper`` (Im >= 0),
    ``lower`` (Im <= 0) or ``real`` (Im = 0). Membership is closed with the
    configured tolerance.
    """

    def __init__(
        self,
        center: Sequence[complex],
        radii: Sequence[float],
        constraints: Sequence[Tuple[int, str]] = (),
        name: Optional[str] = None,
        tolerance: Optional[float] = None,
    ):
        self.center = complex_vector(center)
        self.radii = np.atleast_1d(np.asarray(radii, dtype=float))
        if self.radii.shape != self.center.shape:
            raise ValueError("radii and center must have the same length")
        if np.any(self.radii <= 0):
            raise ValueError(f"radii must be positive, got {self.radii}")
        for coordinate, kind in constraints:
            if not 0 <= coordinate < self.center.size:
                raise ValueError(f"constraint references coordinate {coordinate} of {self.center.size}")
            if kind not in _CONSTRAINTS:
                raise ValueError(f"unknown constraint '{kind}'")
        self.constraints = tuple(constraints)
        self.arity = self.center.size
        self.tolerance = settings.domain_tolerance if tolerance is None else tolerance
        self.name = name or f"box(radii={self.radii.tolist()})"

    @classmethod
    def disc(cls, radius: float, constraint: Optional[str] = None, name: Optional[str] = None) -> "DomainBox":
        constraints = [(0, constraint)] if constraint else []
        return cls([0.0], [radius], constraints, name=name or f"D(0,{radius:g})")

    def mask(self, points: np.ndarray) -> np.ndarray:
        tol = self.tolerance
        inside = np.all(np.abs(points - self.center) <= self.radii + tol, axis=1)
        for coordinate, kind in self.constraints:
            imag = points[:, coordinate].imag
            if kind == "upper":
                inside &= imag >= -tol
            elif kind == "lower":
                inside &= imag <= tol
            else:
                inside &= np.abs(imag) <= tol
        return inside


class UnionDomain(Domain):
    """Union of domains of equal arity"""

    def __init__(self, parts: Sequence[Domain], name: Optional[str] = None):
        if not parts:
            raise ValueError("union of no domains")
        arities = {part.arity for part in parts}
        if len(arities) != 1:
            raise ValueError(f"union of domains with arities {sorted(arities)}")
        self.parts = tuple(parts)
        self.arity = parts[0].arity
        self.name = name or " | ".join(part.name for part in parts)

    def mask(self, points: np.ndarray) -> np.ndarray:
        inside = np.zeros(points.shape[0], dtype=bool)
        for part in self.parts:
            inside |= part.mask(points)
        return inside


class Provenance(str, Enum):
    BLACK_BOX = "black-box"
    POLYNOMIAL = "polynomial"
    SERIES_BACKED = "series-backed"
    CONSTRUCTED_EXTENSION = "constructed-extension"


@dataclass(frozen=True)
class AnalyticFunction:
    """Evaluable complex-valued map on a declared domain.

    The evaluator receives an ``(m, arity)`` complex array and returns ``m``
    values (a scalar is broadcast).
    """

    arity: int
    evaluator: Evaluator
    domain: Domain
    provenance: Provenance = Provenance.BLACK_BOX
    label: str = "f"

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be positive")
        if self.domain.arity != self.arity:
            raise ValueError(f"domain arity {self.domain.arity} does not match function arity {self.arity}")

    def __call__(self, points, check_domain: bool = True) -> np.ndarray:
        points = as_points(points, self.arity)
        if check_domain:
            self.domain.check(points)
        values = np.asarray(self.evaluator(points), dtype=complex)
        values = np.array(np.broadcast_to(values, (points.shape[0],)))
        if not np.all(np.isfinite(values)):
            bad = points[~np.isfinite(values)][0]
            raise NonFiniteValueError(f"{self.label} is not finite at {bad}")
        return values

    def at(self, point) -> complex:
        """Value at a single point"""
        return complex(self(as_points(point, self.arity))[0])


def polynomial_function(
    coefficients: Mapping[Tuple[int, ...], complex],
    arity: int,
    domain: Optional[Domain] = None,
    label: str = "p",
) -> AnalyticFunction:
    """Holomorphic polynomial sum c_a z^a with complex coefficients"""
    terms = [(tuple(int(e) for e in index), complex(value)) for index, value in coefficients.items()]
    for index, _ in terms:
        if len(index) != arity or min(index, default=0) < 0:
            raise ValueError(f"multi-index {index} does not fit arity {arity}")
    degree = max((max(index) for index, _ in terms), default=0)

    def evaluate(points: np.ndarray) -> np.ndarray:
        powers = [np.ones_like(points)]
        for _ in range(degree):
            powers.append(powers[-1] * points)
        total = np.zeros(points.shape[0], dtype=complex)
        for index, value in terms:
            term = np.full(points.shape[0], value, dtype=complex)
            for coordinate, exponent in enumerate(index):
                if exponent:
                    term = term * powers[exponent][:, coordinate]
            total += term
        return total

    return AnalyticFunction(arity, evaluate, domain or ComplexSpace(arity), Provenance.POLYNOMIAL, label)


@dataclass(frozen=True)
class GridSample:
    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.points.shape[0] != self.values.shape[0]:
            raise ValueError(f"{self.points.shape[0]} points but {self.values.shape[0]} values")
        flat = np.concatenate([self.points.real, self.points.imag], axis=1)
        if np.unique(flat, axis=0).shape[0] != flat.shape[0]:
            raise ValueError("grid points must be pairwise distinct")

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class ResidualReport:
    """Verification record: values, optional oracle values and CR residuals"""

    grid: GridSample
    oracle_values: Optional[np.ndarray] = None
    cr_residuals: Optional[np.ndarray] = None

    @property
    def abs_errors(self) -> Optional[np.ndarray]:
        if self.oracle_values is None:
            return None
        return np.abs(self.grid.values - self.oracle_values)

    @property
    def max_abs_error(self) -> Optional[float]:
        errors = self.abs_errors
        return None if errors is None or errors.size == 0 else float(np.max(errors))

    @property
    def max_cr_residual(self) -> Optional[float]:
        if self.cr_residuals is None or self.cr_residuals.size == 0:
            return None
        return float(np.max(self.cr_residuals))

    def summary(self) -> dict:
        return {
            "points": len(self.grid),
            "max_abs_error": self.max_abs_error,
            "max_cr_residual": self.max_cr_residual,
        }


def _chunks(points: np.ndarray, size: int) -> List[np.ndarray]:
    return [points[start:start + size] for start in range(0, points.shape[0], max(size, 1))]


def evaluate_on_grid(f: AnalyticFunction, points, threads: Optional[int] = None) -> GridSample:
    """Evaluate ``f`` on every point; chunks run on a thread pool when allowed"""
    points = as_points(points, f.arity)
    f.domain.check(points)
    chunks = _chunks(points, settings.chunk_size)
    n_jobs = settings.threads if threads is None else min(threads, settings.threads)
    if n_jobs > 1 and len(chunks) > 1:
        parts = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(f)(chunk, check_domain=False) for chunk in chunks
        )
    else:
        parts = [f(chunk, check_domain=False) for chunk in chunks]
    return GridSample(points=points, values=np.concatenate(parts))


def cr_residuals(
    f: AnalyticFunction,
    points,
    step: Optional[float] = None,
    coordinates: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Central-difference estimate of max_j |df/dzbar_j| at each point"""
    points = as_points(points, f.arity)
    h = settings.fd_step if step is None else step
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    coordinates = range(f.arity) if coordinates is None else coordinates
    m, n = points.shape
    residuals = np.zeros(m)
    for j in coordinates:
        e = np.zeros(n, dtype=complex)
        e[j] = 1.0
        # the 2h ball must lie in the domain, the h stencil is what gets evaluated
        ball = np.concatenate([points + 2 * h * e, points - 2 * h * e, points + 2j * h * e, points - 2j * h * e])
        f.domain.check(ball)
        stencil = np.stack([points + h * e, points - h * e, points + 1j * h * e, points - 1j * h * e], axis=1)
        values = f(stencil.reshape(-1, n), check_domain=False).reshape(m, 4)
        dbar = ((values[:, 0] - values[:, 1]) / (2 * h) + 1j * (values[:, 2] - values[:, 3]) / (2 * h)) / 2
        residuals = np.maximum(residuals, np.abs(dbar))
    return residuals


def cr_residual(f: AnalyticFunction, point, step: Optional[float] = None) -> float:
    return float(cr_residuals(f, as_points(point, f.arity)[:1], step)[0])


def compare(
    f: AnalyticFunction,
    oracle: Optional[AnalyticFunction],
    points,
    step: Optional[float] = None,
    cr_coordinates: Optional[Sequence[int]] = None,
    threads: Optional[int] = None,
) -> ResidualReport:
    """Pointwise |f - oracle| and the CR residual of ``f`` on a grid"""
    grid = evaluate_on_grid(f, points, threads)
    oracle_values = None
    if oracle is not None:
        oracle_values = evaluate_on_grid(oracle, grid.points, threads).values
    residuals = cr_residuals(f, grid.points, step, cr_coordinates)
    report = ResidualReport(grid=grid, oracle_values=oracle_values, cr_residuals=residuals)
    logger.debug(f"compare {f.label}: {report.summary()}")
    return report


def discrete_laplacian(fn: Callable[[np.ndarray], np.ndarray], points, h: float = 1e-3) -> np.ndarray:
    """Five-point Laplacian of a real function of z = x + iy"""
    z = np.asarray(points, dtype=complex).ravel()
    centre = np.asarray(fn(z), dtype=float)
    around = fn(z + h) + fn(z - h) + fn(z + 1j * h) + fn(z - 1j * h)
    return (np.asarray(around, dtype=float) - 4 * centre) / h ** 2
