"""
Layer 4: Wedge Geometry
Handles generic submanifolds in regular coordinates, the charts onto them,
polyhedral cones, wedge membership and the sampled containment checks
"""
from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy.optimize import linprog

from reflexcr.config import settings
from reflexcr.exceptions import (
    ConeError,
    DomainViolationError,
    NonFiniteValueError,
    OutsideChartError,
    SeriesError,
    SingularMatrixError,
)
from reflexcr.layers.analytic_core import Domain, DomainBox, as_points
from reflexcr.layers.series import MultiSeries

logger = logging.getLogger(__name__)

CONE_TOLERANCE = 1e-12
MIN_SHRINK_RADIUS = 1e-4


def chart_variables(n: int, d: int) -> Tuple[str, ...]:
    """Real variable names (Re z, Im z, s) used by graph and trace series"""
    return (
        tuple(f"x{j}" for j in range(1, n + 1))
        + tuple(f"y{j}" for j in range(1, n + 1))
        + tuple(f"s{k}" for k in range(1, d + 1))
    )


def _block(values, width: int, rows: int) -> np.ndarray:
    if width == 0:
        return np.zeros((rows, 0), dtype=complex)
    return np.asarray(values).reshape(-1, width)


def _series_values(z: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Stack (Re z, Im z, s) columns; s stays complex only when it is"""
    s = s if np.any(np.imag(s)) else np.real(s)
    return np.concatenate([z.real, z.imag, s], axis=1)


def validate_graph(components: Sequence[MultiSeries], names: Tuple[str, ...]) -> None:
    """Graph series must use ``names`` and vanish to second order at 0"""
    for component in components:
        if component.variables != names:
            raise SeriesError(f"graph series must use variables {names}, got {component.variables}")
        if abs(component.constant_term()) > 1e-14:
            raise SeriesError("graph function must vanish at 0")
        for column in range(len(names)):
            index = [0] * len(names)
            index[column] = 1
            if abs(component.coefficient(index)) > 1e-14:
                raise SeriesError(f"graph function has nonzero first derivative in {names[column]}")


class Cone:
    """Open polyhedral cone: interior of the positive hull of its generators"""

    def __init__(self, generators: Sequence[Sequence[float]], label: str = "cone"):
        generators = np.atleast_2d(np.asarray(generators, dtype=float))
        if generators.size == 0:
            raise ConeError("a cone needs at least one generator")
        if not np.all(np.isfinite(generators)):
            raise ConeError("cone generators must be finite")
        norms = np.linalg.norm(generators, axis=1)
        if np.any(norms == 0):
            raise ConeError("zero vector among cone generators")
        self.generators = generators
        self.unit_generators = generators / norms[:, None]
        self.dimension = generators.shape[1]
        self.label = label
        if np.linalg.matrix_rank(generators) < self.dimension:
            raise ConeError(f"generators of {label} do not span R^{self.dimension}; the cone has empty interior")
        self._check_pointed()
        self.normals = self._facet_normals()

    def _check_pointed(self) -> None:
        # maximise eps subject to u.g_i >= eps, |u_j| <= 1
        d = self.dimension
        objective = np.zeros(d + 1)
        objective[-1] = -1.0
        constraints = np.hstack([-self.unit_generators, np.ones((self.unit_generators.shape[0], 1))])
        result = linprog(
            c=objective,
            A_ub=constraints,
            b_ub=np.zeros(constraints.shape[0]),
            bounds=[(-1, 1)] * d + [(None, 1)],
            method="highs",
        )
        if not result.success or -result.fun <= CONE_TOLERANCE:
            raise ConeError(f"{self.label} is not pointed (contains a line)")

    def _facet_normals(self) -> np.ndarray:
        d = self.dimension
        if d == 1:
            return np.sign(self.generators[:1, :])
        if self.generators.shape[0] == d:
            inverse = np.linalg.inv(self.unit_generators.T)
            return inverse / np.linalg.norm(inverse, axis=1)[:, None]
        normals: List[np.ndarray] = []
        for subset in combinations(range(self.generators.shape[0]), d - 1):
            face = self.unit_generators[list(subset)]
            if np.linalg.matrix_rank(face) < d - 1:
                continue
            normal = np.linalg.svd(face)[2][-1]
            side = self.unit_generators @ normal
            if np.all(side >= -1e-10):
                candidate = normal
            elif np.all(side <= 1e-10):
                candidate = -normal
            else:
                continue
            if not any(np.allclose(candidate, other) for other in normals):
                normals.append(candidate)
        return np.array(normals)

    @classmethod
    def orthant(cls, d: int) -> "Cone":
        return cls(np.eye(d), label=f"orthant(R^{d})")

    def shrink(self, factor: float = 0.5) -> "Cone":
        """Subcone with each generator pulled ``factor`` of the way to the mean axis"""
        if not 0 < factor < 1:
            raise ConeError(f"shrink factor must lie in (0, 1), got {factor}")
        axis = self.unit_generators.mean(axis=0)
        axis = axis / np.linalg.norm(axis)
        pulled = (1 - factor) * self.unit_generators + factor * axis
        return Cone(pulled, label=f"{self.label}*{factor:g}")

    def margins(self, vectors: np.ndarray) -> np.ndarray:
        """Smallest facet value n.u of each row; positive exactly inside"""
        vectors = np.atleast_2d(vectors)
        return np.min(vectors @ self.normals.T, axis=1)

    def contains_many(self, vectors: np.ndarray, closed: bool = False, tolerance: float = CONE_TOLERANCE) -> np.ndarray:
        margins = self.margins(vectors)
        if closed:
            return margins >= -tolerance
        return margins > tolerance

    def contains(self, vector: Sequence[float]) -> bool:
        return bool(self.contains_many(np.asarray(vector, dtype=float).reshape(1, -1))[0])

    def unit_samples(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Random unit vectors of the open cone"""
        weights = rng.dirichlet(np.ones(self.generators.shape[0]), size=count)
        vectors = weights @ self.unit_generators
        return vectors / np.linalg.norm(vectors, axis=1)[:, None]

    def __repr__(self) -> str:
        return f"Cone({self.label}, generators={self.generators.tolist()})"


class GenericManifold:
    """Generic submanifold Im w = phi(z, zbar, Re w) of C^(n+d) near 0.

    ``graph_phi`` holds ``d`` real series in the variables of
    ``chart_variables(n, d)``. The box is the polydisc |z_j| <= z_radius,
    |w_k| <= w_radius.
    """

    def __init__(
        self,
        n: int,
        d: int,
        graph_phi: Sequence[MultiSeries],
        z_radius: float = 1.0,
        w_radius: float = 1.0,
    ):
        if n < 0 or d < 1:
            raise ValueError(f"need n >= 0 and d >= 1, got n={n}, d={d}")
        graph_phi = tuple(graph_phi)
        if len(graph_phi) != d:
            raise SeriesError(f"expected {d} graph components, got {len(graph_phi)}")
        names = chart_variables(n, d)
        validate_graph(graph_phi, names)
        self.n = n
        self.d = d
        self.graph_phi = graph_phi
        self.variables = names
        self.z_radius = float(z_radius)
        self.w_radius = float(w_radius)
        self.box = DomainBox(np.zeros(n + d), [z_radius] * n + [w_radius] * d, name="chart box")
        self._dphi = [[component.derivative(f"s{k}") for k in range(1, d + 1)] for component in graph_phi]

    @property
    def arity(self) -> int:
        return self.n + self.d

    def split(self, points) -> Tuple[np.ndarray, np.ndarray]:
        points = as_points(points, self.arity)
        return points[:, : self.n], points[:, self.n:]

    def phi(self, z: np.ndarray, s: np.ndarray) -> np.ndarray:
        """(m, d) values of the graph series at (z, s); s may be complex"""
        s = np.asarray(s).reshape(-1, self.d)
        values = _series_values(_block(np.asarray(z, dtype=complex), self.n, s.shape[0]), s)
        return np.stack([component.evaluate(values) for component in self.graph_phi], axis=1)

    def _jacobian(self, z: np.ndarray, w: np.ndarray) -> np.ndarray:
        values = _series_values(z, w.astype(complex))
        m = z.shape[0]
        jacobian = np.empty((m, self.d, self.d), dtype=complex)
        for j, row in enumerate(self._dphi):
            for k, derivative in enumerate(row):
                jacobian[:, j, k] = 1j * derivative.evaluate(values)
        jacobian += np.eye(self.d)
        return jacobian

    def rho(self, points) -> np.ndarray:
        """Defining map Im w - phi(z, zbar, Re w)"""
        z, w = self.split(points)
        return w.imag - np.real(self.phi(z, w.real))

    def _check_real_box(self, z: np.ndarray, s: np.ndarray) -> None:
        tol = settings.domain_tolerance
        bad = (np.any(np.abs(z) > self.z_radius + tol, axis=1)) | (np.any(np.abs(s) > self.w_radius + tol, axis=1))
        if np.any(bad):
            index = int(np.argmax(bad))
            raise DomainViolationError(np.concatenate([z[index], s[index]]), "chart box")

    def chart(self, z, s) -> np.ndarray:
        """Points (z, s + i phi(z, zbar, s)) of the manifold"""
        s = np.asarray(s, dtype=float).reshape(-1, self.d)
        z = _block(np.asarray(z, dtype=complex), self.n, s.shape[0])
        self._check_real_box(z, s)
        return np.concatenate([z, s + 1j * np.real(self.phi(z, s))], axis=1)

    def extended_chart(self, z, w) -> np.ndarray:
        """(z, w + i phi(z, zbar, w)) with the s variables complexified"""
        w = np.asarray(w, dtype=complex).reshape(-1, self.d)
        z = _block(np.asarray(z, dtype=complex), self.n, w.shape[0])
        self.box.check(np.concatenate([z, w], axis=1))
        return np.concatenate([z, w + 1j * self.phi(z, w)], axis=1)

    def extended_chart_inverse(self, points) -> Tuple[np.ndarray, np.ndarray]:
        """Newton inverse of ``extended_chart``; z passes through unchanged"""
        z, target = self.split(points)
        w = target - 1j * np.real(self.phi(z, target.real))
        tolerance = settings.newton_tolerance
        for iteration in range(settings.newton_max_iterations):
            residual = w + 1j * self.phi(z, w) - target
            if np.max(np.abs(residual), initial=0.0) <= tolerance:
                logger.debug(f"chart inverse converged after {iteration} Newton steps")
                return z, w
            step = np.linalg.solve(self._jacobian(z, w), residual[..., None])[..., 0]
            w = w - step
            if not np.all(np.isfinite(w)):
                raise OutsideChartError("Newton iterate for the chart inverse diverged")
        residual = w + 1j * self.phi(z, w) - target
        if np.max(np.abs(residual), initial=0.0) <= tolerance:
            return z, w
        worst = int(np.argmax(np.max(np.abs(residual), axis=1)))
        raise OutsideChartError(
            f"chart inverse did not converge in {settings.newton_max_iterations} iterations at "
            f"{np.concatenate([z[worst], target[worst]]).tolist()}"
        )


class Wedge(Domain):
    """Points of the chart box whose defining map lies in the cone"""

    def __init__(self, manifold: GenericManifold, cone: Cone, closed: bool = False, tolerance: Optional[float] = None):
        if cone.dimension != manifold.d:
            raise ConeError(f"cone dimension {cone.dimension} differs from codimension {manifold.d}")
        self.manifold = manifold
        self.cone = cone
        self.closed = closed
        self.tolerance = CONE_TOLERANCE if tolerance is None else tolerance
        self.arity = manifold.arity
        self.name = f"{'closed ' if closed else ''}wedge({cone.label})"

    def closure(self) -> "Wedge":
        return Wedge(self.manifold, self.cone, closed=True, tolerance=max(self.tolerance, 1e-10))

    def mask(self, points: np.ndarray) -> np.ndarray:
        inside = self.manifold.box.mask(points)
        if not np.any(inside):
            return inside
        rho = self.manifold.rho(points)
        return inside & self.cone.contains_many(rho, closed=self.closed, tolerance=self.tolerance)


def wedge_contains(wedge: Wedge, point) -> bool:
    """Membership of a single point; malformed input is simply not a member"""
    try:
        return wedge.contains(point)
    except (ValueError, NonFiniteValueError):
        return False


@dataclass(frozen=True)
class ContainmentReport:
    samples: int
    violations: int
    min_margin: float
    margin_degrees: float
    passed: bool

    def summary(self) -> dict:
        return {
            "samples": self.samples,
            "violations": self.violations,
            "min_margin": self.min_margin,
            "margin_degrees": self.margin_degrees,
            "passed": self.passed,
        }


def cone_containment_check(
    inner: Cone,
    matrix: np.ndarray,
    outer: Cone,
    samples: int = 1000,
    seed: int = 0,
) -> ContainmentReport:
    """Sampled check that B maps the inner cone into the outer cone with positive margin"""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if inner.dimension != outer.dimension or matrix.shape != (inner.dimension, inner.dimension):
        raise ConeError(
            f"dimension mismatch: inner {inner.dimension}, outer {outer.dimension}, matrix {matrix.shape}"
        )
    if abs(np.linalg.det(matrix)) <= 1e-12:
        raise SingularMatrixError(f"containment matrix is singular (det={np.linalg.det(matrix):.3e})")
    rng = np.random.default_rng(seed)
    mapped = inner.unit_samples(samples, rng) @ matrix.T
    mapped = mapped / np.linalg.norm(mapped, axis=1)[:, None]
    margins = outer.margins(mapped)
    violations = int(np.count_nonzero(margins <= 0))
    min_margin = float(np.min(margins))
    degrees = float(np.degrees(np.arcsin(np.clip(min_margin, -1.0, 1.0))))
    report = ContainmentReport(samples, violations, min_margin, degrees, violations == 0)
    logger.debug(f"cone containment {inner.label} -> {outer.label}: {report.summary()}")
    return report


@dataclass(frozen=True)
class ChartWedgeReport:
    samples: int
    violations: int
    worst_margin: float
    passed: bool
    z_radius: float
    s_radius: float

    def summary(self) -> dict:
        return {
            "samples": self.samples,
            "violations": self.violations,
            "worst_margin": self.worst_margin,
            "passed": self.passed,
            "z_radius": self.z_radius,
            "s_radius": self.s_radius,
        }


def _polydisc_samples(rng: np.random.Generator, count: int, width: int, radius: float) -> np.ndarray:
    modulus = radius * np.sqrt(rng.uniform(0, 1, (count, width)))
    return modulus * np.exp(2j * np.pi * rng.uniform(0, 1, (count, width)))


def verify_chart_wedge(
    manifold: GenericManifold,
    wedge: Wedge,
    sub_cone: Cone,
    z_radius: float,
    s_radius: float,
    samples: int = 100_000,
    seed: int = 0,
) -> ChartWedgeReport:
    """Sample (z, s, t) with t in the subcone and count extended-chart images outside the wedge"""
    if sub_cone.dimension != manifold.d:
        raise ConeError(f"subcone dimension {sub_cone.dimension} differs from codimension {manifold.d}")
    rng = np.random.default_rng(seed)
    z = _polydisc_samples(rng, samples, manifold.n, z_radius)
    s = rng.uniform(-s_radius, s_radius, (samples, manifold.d))
    t = sub_cone.unit_samples(samples, rng) * rng.uniform(0, s_radius, (samples, 1))
    w = s + 1j * t
    # parameters outside the chart box have no image and count as violations
    in_chart = manifold.box.mask(np.concatenate([z, w], axis=1))
    members = np.zeros(samples, dtype=bool)
    worst_margin = -1.0
    if np.any(in_chart):
        images = manifold.extended_chart(z[in_chart], w[in_chart])
        rho = manifold.rho(images)
        norms = np.linalg.norm(rho, axis=1)
        margins = wedge.cone.margins(rho / np.where(norms > 0, norms, 1.0)[:, None])
        members[in_chart] = manifold.box.mask(images) & wedge.cone.contains_many(rho)
        worst_margin = float(np.min(margins)) if np.all(in_chart) else -1.0
    violations = int(np.count_nonzero(~members))
    report = ChartWedgeReport(
        samples=samples,
        violations=violations,
        worst_margin=worst_margin,
        passed=violations == 0,
        z_radius=z_radius,
        s_radius=s_radius,
    )
    logger.info(f"chart wedge check: {violations} of {samples} samples outside {wedge.name}")
    return report


def certify_chart_wedge(
    manifold: GenericManifold,
    wedge: Wedge,
    sub_cone: Cone,
    z_radius: float,
    s_radius: float,
    samples: int = 100_000,
    seed: int = 0,
) -> ChartWedgeReport:
    """Halve both box radii until the chart wedge check passes or the radius drops below 1e-4"""
    report = verify_chart_wedge(manifold, wedge, sub_cone, z_radius, s_radius, samples, seed)
    while not report.passed:
        z_radius, s_radius = z_radius / 2, s_radius / 2
        if max(z_radius, s_radius) < MIN_SHRINK_RADIUS:
            logger.warning("chart wedge certification failed down to the minimum box radius")
            break
        logger.warning(f"chart wedge check failed; shrinking boxes to z={z_radius:.4g}, s={s_radius:.4g}")
        report = verify_chart_wedge(manifold, wedge, sub_cone, z_radius, s_radius, samples, seed)
    return report
