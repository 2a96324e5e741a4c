"""
Layer 5: Edge of the Wedge
Handles the Möbius kernel, the normalization of a cone onto the model orthant
and the circular-average extension of a function given on two opposite
wedges and their common edge
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence
import logging

import numpy as np

from reflexcr.config import settings
from reflexcr.exceptions import (
    ConeError,
    DomainViolationError,
    QuadratureEscapeError,
    SingularKernelError,
    SingularMatrixError,
)
from reflexcr.layers.analytic_core import AnalyticFunction, Domain, Provenance, as_points
from reflexcr.layers.wedge_geometry import Cone, ContainmentReport, cone_containment_check

logger = logging.getLogger(__name__)

MOBIUS_C = np.sqrt(2.0) - 1.0
# the model domain is |Re w_j| < 6, 0 < |Im w_j| < 6
MODEL_SCALE = 6.0
KERNEL_BOUND = (1 + 1 / MOBIUS_C) / (1 - MOBIUS_C)
_DENOMINATOR_FLOOR = 1e-14


def _check_bidisc(w: np.ndarray, lam: np.ndarray) -> None:
    tol = settings.domain_tolerance
    w, lam = np.broadcast_arrays(w, lam)
    bad = (np.abs(w) > 1 + tol) | (np.abs(lam) > 1 + tol)
    if np.any(bad):
        index = np.unravel_index(np.argmax(bad), bad.shape)
        raise DomainViolationError([w[index], lam[index]], "closed unit bidisc")


def _denominator(w: np.ndarray, lam: np.ndarray) -> np.ndarray:
    denominator = 1 + MOBIUS_C * lam * w
    if np.any(np.abs(denominator) < _DENOMINATOR_FLOOR):
        raise SingularKernelError("Möbius kernel denominator vanished")
    return denominator


def mobius_kernel(w, lam) -> np.ndarray:
    """(w + lam/c) / (1 + c lam w), broadcast over w and lam"""
    w = np.asarray(w, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    _check_bidisc(w, lam)
    return (w + lam / MOBIUS_C) / _denominator(w, lam)


def mobius_kernel_imag(w, lam) -> np.ndarray:
    """Imaginary part of the kernel from its closed form"""
    w = np.asarray(w, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    _check_bidisc(w, lam)
    denominator = _denominator(w, lam)
    cw = MOBIUS_C * w
    numerator = (1 - np.abs(lam) ** 2) * cw.imag + (1 - np.abs(cw) ** 2) * lam.imag
    return numerator / (MOBIUS_C * np.abs(denominator) ** 2)


def kernel_map(w, lam, fixed: int = 0) -> np.ndarray:
    """Componentwise kernel on the last axis of ``w``; the first ``fixed`` coordinates pass through.

    ``w`` has shape (..., fixed + d) and ``lam`` broadcasts against w[..., 0].
    """
    w = np.asarray(w, dtype=complex)
    lam = np.asarray(lam, dtype=complex)[..., None]
    moved = mobius_kernel(w[..., fixed:], lam)
    if not fixed:
        return moved
    kept = np.broadcast_to(w[..., :fixed], moved.shape[:-1] + (fixed,))
    return np.concatenate([kept, moved], axis=-1)


@dataclass(frozen=True)
class KernelPropertyReport:
    samples: int
    sign_violations_circle: int
    sign_violations_real: int
    identity_max_error: float
    imag_formula_max_error: float
    supremum: float
    bound: float = KERNEL_BOUND

    @property
    def passed(self) -> bool:
        return bool(
            self.sign_violations_circle == 0
            and self.sign_violations_real == 0
            and self.identity_max_error == 0.0
            and self.supremum < MODEL_SCALE
        )

    def summary(self) -> dict:
        return {
            "samples": self.samples,
            "sign_violations_circle": self.sign_violations_circle,
            "sign_violations_real": self.sign_violations_real,
            "identity_max_error": self.identity_max_error,
            "imag_formula_max_error": self.imag_formula_max_error,
            "supremum": self.supremum,
            "bound": float(self.bound),
            "passed": self.passed,
        }


def _disc_samples(rng: np.random.Generator, count: int) -> np.ndarray:
    return np.sqrt(rng.uniform(0, 1, count)) * np.exp(2j * np.pi * rng.uniform(0, 1, count))


def kernel_property_report(samples: int = 100_000, seed: int = 0) -> KernelPropertyReport:
    """Sampled sign, identity and modulus checks of the kernel on the closed bidisc"""
    rng = np.random.default_rng(seed)
    w = _disc_samples(rng, samples)
    circle = np.exp(2j * np.pi * rng.uniform(0, 1, samples))
    on_circle = mobius_kernel(w, circle)
    circle_violations = int(np.count_nonzero(np.sign(on_circle.imag) != np.sign(circle.imag)))

    real_w = rng.uniform(-1, 1, samples).astype(complex)
    lam = _disc_samples(rng, samples)
    on_real = mobius_kernel(real_w, lam)
    real_violations = int(np.count_nonzero(np.sign(on_real.imag) != np.sign(lam.imag)))

    identity_error = float(np.max(np.abs(mobius_kernel(w, np.zeros_like(w)) - w)))
    imag_error = float(np.max(np.abs(mobius_kernel_imag(w, lam) - mobius_kernel(w, lam).imag)))
    supremum = float(max(np.max(np.abs(on_circle)), np.max(np.abs(mobius_kernel(w, lam)))))
    report = KernelPropertyReport(samples, circle_violations, real_violations, identity_error, imag_error, supremum)
    logger.info(f"kernel properties over {samples} samples: supremum {supremum:.6f} (bound {KERNEL_BOUND:.6f})")
    return report


class EOWDomain(Domain):
    """W+ | W- | E with E = {|Re w_j| <= edge_radius} and V = cone with |Im w_j| <= cone_radius.

    The first ``n`` coordinates are parameters restricted to |z_j| <= z_radius.
    Cone membership is closed so that the edge belongs to both sides;
    ``one_sided`` keeps only the closed upper wedge.
    """

    def __init__(
        self,
        cone: Cone,
        edge_radius: float,
        cone_radius: Optional[float] = None,
        n: int = 0,
        z_radius: float = np.inf,
        tolerance: float = 1e-10,
        one_sided: bool = False,
    ):
        self.cone = cone
        self.one_sided = one_sided
        self.d = cone.dimension
        self.n = n
        self.edge_radius = float(edge_radius)
        self.cone_radius = float(edge_radius if cone_radius is None else cone_radius)
        self.z_radius = float(z_radius)
        self.tolerance = tolerance
        self.arity = n + self.d
        self.name = f"{'W+|E' if one_sided else 'W+|W-|E'}({cone.label}, {self.edge_radius:g})"

    def sides(self, points: np.ndarray) -> np.ndarray:
        """+1 on the closed upper wedge, -1 on the open lower wedge, 0 elsewhere"""
        t = points[:, self.n:].imag
        upper = self.cone.contains_many(t, closed=True, tolerance=self.tolerance)
        lower = self.cone.contains_many(-t, closed=True, tolerance=self.tolerance) & ~upper
        return np.where(upper, 1, np.where(lower, -1, 0))

    def mask(self, points: np.ndarray) -> np.ndarray:
        tol = settings.domain_tolerance
        z, w = points[:, : self.n], points[:, self.n:]
        inside = np.all(np.abs(z) <= self.z_radius + tol, axis=1)
        inside &= np.all(np.abs(w.real) <= self.edge_radius + tol, axis=1)
        inside &= np.all(np.abs(w.imag) <= self.cone_radius + tol, axis=1)
        sides = self.sides(points)
        return inside & ((sides == 1) if self.one_sided else (sides != 0))


class NormalizationMap:
    """Real invertible A on C^d sending the model orthant into a cone"""

    def __init__(self, matrix, label: str = "A"):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.shape[0] != matrix.shape[1]:
            raise SingularMatrixError(f"normalization matrix must be square, got {matrix.shape}")
        if abs(np.linalg.det(matrix)) <= 1e-12:
            raise SingularMatrixError(f"normalization matrix is singular (det={np.linalg.det(matrix):.3e})")
        self.matrix = matrix
        self.inverse = np.linalg.inv(matrix)
        self.d = matrix.shape[0]
        self.label = label

    @classmethod
    def identity(cls, d: int) -> "NormalizationMap":
        return cls(np.eye(d), label="I")

    @classmethod
    def for_cone(cls, cone: Cone, radius: float) -> "NormalizationMap":
        """Columns are d independent unit generators scaled so the model box of size 6 lands in |.| <= radius"""
        chosen: List[np.ndarray] = []
        for generator in cone.unit_generators:
            candidate = np.array(chosen + [generator])
            if np.linalg.matrix_rank(candidate) == len(chosen) + 1:
                chosen.append(generator)
            if len(chosen) == cone.dimension:
                break
        if len(chosen) < cone.dimension:
            raise ConeError(f"{cone.label} has no {cone.dimension} independent generators")
        columns = np.array(chosen).T
        scale = radius / (MODEL_SCALE * np.linalg.norm(columns, ord=np.inf))
        return cls(columns * scale, label=f"A({cone.label})")

    def scaled(self, factor: float) -> "NormalizationMap":
        return NormalizationMap(self.matrix * factor, label=f"{factor:g}*{self.label}")

    def apply(self, w: np.ndarray) -> np.ndarray:
        return np.asarray(w, dtype=complex) @ self.matrix.T

    def apply_inverse(self, w: np.ndarray) -> np.ndarray:
        return np.asarray(w, dtype=complex) @ self.inverse.T

    def certify(self, cone: Cone, samples: int = 1000, seed: int = 0) -> ContainmentReport:
        return cone_containment_check(Cone.orthant(self.d), self.matrix, cone, samples, seed)


class NormalizedPolydisc(Domain):
    """Points whose last d coordinates satisfy |A^-1 w|_inf <= 1"""

    def __init__(self, normalization: NormalizationMap, n: int = 0, z_radius: float = np.inf):
        self.normalization = normalization
        self.n = n
        self.z_radius = float(z_radius)
        self.arity = n + normalization.d
        self.name = f"{normalization.label}(unit polydisc)"

    def mask(self, points: np.ndarray) -> np.ndarray:
        tol = settings.domain_tolerance
        model = self.normalization.apply_inverse(points[:, self.n:])
        inside = np.all(np.abs(model) <= 1 + tol, axis=1)
        return inside & np.all(np.abs(points[:, : self.n]) <= self.z_radius + tol, axis=1)


def quadrature_nodes(nodes: int) -> np.ndarray:
    if nodes < 1:
        raise ValueError(f"quadrature needs at least one node, got {nodes}")
    return 2 * np.pi * np.arange(nodes) / nodes


def quadrature_points(points: np.ndarray, normalization: NormalizationMap, theta: np.ndarray, fixed: int = 0) -> np.ndarray:
    """A(Phi(A^-1 w, e^{i theta})) for every point and node, shape (m, N, fixed + d)"""
    model = np.concatenate([points[:, :fixed], normalization.apply_inverse(points[:, fixed:])], axis=1)
    lam = np.exp(1j * theta)[None, :]
    moved = kernel_map(model[:, None, :], lam, fixed)
    return np.concatenate([moved[..., :fixed], normalization.apply(moved[..., fixed:])], axis=-1)


def edge_of_wedge_extend(
    g: AnalyticFunction,
    normalization: NormalizationMap,
    nodes: Optional[int] = None,
    fixed: int = 0,
    z_radius: float = np.inf,
) -> AnalyticFunction:
    """Trapezoid average of g over A(Phi(A^-1 w, e^{i theta})), theta_k = 2 pi k / N"""
    nodes = settings.quadrature_nodes if nodes is None else nodes
    if g.arity != fixed + normalization.d:
        raise ValueError(f"g has arity {g.arity}, expected {fixed + normalization.d}")
    theta = quadrature_nodes(nodes)
    rows = max(1, settings.chunk_size // nodes)

    def evaluate(points: np.ndarray) -> np.ndarray:
        out = np.empty(points.shape[0], dtype=complex)
        for start in range(0, points.shape[0], rows):
            block = points[start:start + rows]
            mapped = quadrature_points(block, normalization, theta, fixed)
            flat = mapped.reshape(-1, g.arity)
            inside = g.domain.mask(flat)
            if not np.all(inside):
                index = int(np.argmin(inside))
                raise QuadratureEscapeError(theta[index % nodes], flat[index], g.domain.name)
            values = g(flat, check_domain=False).reshape(block.shape[0], nodes)
            out[start:start + block.shape[0]] = values.mean(axis=1)
        return out

    domain = NormalizedPolydisc(normalization, fixed, z_radius)
    logger.debug(f"edge-of-the-wedge extension of {g.label} with {nodes} nodes over {domain.name}")
    return AnalyticFunction(g.arity, evaluate, domain, Provenance.CONSTRUCTED_EXTENSION, f"eow[{g.label}]")


def sweep_nodes(
    g: AnalyticFunction,
    normalization: NormalizationMap,
    points,
    oracle: AnalyticFunction,
    node_counts: Sequence[int] = (16, 32, 64, 128, 256),
    fixed: int = 0,
) -> Dict[int, float]:
    """Max |G - oracle| on the points for each node count"""
    points = as_points(points, g.arity)
    expected = oracle(points)
    table = {}
    for nodes in node_counts:
        extension = edge_of_wedge_extend(g, normalization, nodes, fixed)
        table[int(nodes)] = float(np.max(np.abs(extension(points) - expected)))
        logger.info(f"nodes={nodes}: max error {table[int(nodes)]:.3e}")
    return table
