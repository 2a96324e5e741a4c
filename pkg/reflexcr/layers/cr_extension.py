"""
Layer 6: CR Extension
Handles the extension pipeline for wedge functions with a real-analytic
imaginary trace: pull-back by the extended chart, complexified trace,
reflected function, edge-of-the-wedge average and reassembly. Also the
uniqueness check and the rigid-target driver.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence
import logging

import numpy as np

from reflexcr.config import settings
from reflexcr.exceptions import (
    ChartWedgeError,
    IncompatibleVariablesError,
    InconsistentTraceError,
    PipelineStageError,
    PolyradiusError,
    QuadratureEscapeError,
    ReflexError,
    SeriesError,
    TraceMismatchError,
)
from reflexcr.layers.analytic_core import (
    AnalyticFunction,
    DomainBox,
    Provenance,
    ResidualReport,
    as_points,
    compare,
)
from reflexcr.layers.eow import (
    EOWDomain,
    NormalizationMap,
    edge_of_wedge_extend,
    quadrature_nodes,
    quadrature_points,
)
from reflexcr.layers.series import MultiSeries, SeriesPair, compose
from reflexcr.layers.wedge_geometry import (
    ChartWedgeReport,
    Cone,
    GenericManifold,
    Wedge,
    chart_variables,
    validate_graph,
    verify_chart_wedge,
)

logger = logging.getLogger(__name__)

TRACE_TOLERANCE = 1e-8
EDGE_REALITY_TOLERANCE = 1e-8
UNIQUENESS_GATE = 1e-10
UNIQUENESS_TOLERANCE = 1e-8
_PROBE_NODES = 64


def _polydisc(rng: np.random.Generator, count: int, width: int, radius: float) -> np.ndarray:
    modulus = radius * np.sqrt(rng.uniform(0, 1, (count, width)))
    return modulus * np.exp(2j * np.pi * rng.uniform(0, 1, (count, width)))


def _trace_values(trace: MultiSeries, points: np.ndarray, n: int) -> np.ndarray:
    """Trace series at chart points (z, w); w is complexified when it is not real"""
    z, w = points[:, :n], points[:, n:]
    w = w if np.any(w.imag) else w.real
    return trace.evaluate(np.concatenate([z.real, z.imag, w], axis=1))


@dataclass(frozen=True)
class ChartBoxes:
    """Parameter polydisc |z_j| <= z_radius and w box |Re w_k|, |Im w_k| <= w_radius"""

    z_radius: float
    w_radius: float


class WedgeFunction:
    """Function on a wedge, continuous up to the edge, with the series of Im f on the edge"""

    def __init__(self, f: AnalyticFunction, wedge: Wedge, trace: MultiSeries, samples: int = 64, seed: int = 0):
        manifold = wedge.manifold
        if f.arity != manifold.arity:
            raise ValueError(f"function arity {f.arity} differs from ambient dimension {manifold.arity}")
        if trace.variables != manifold.variables:
            raise IncompatibleVariablesError(f"trace must use variables {manifold.variables}, got {trace.variables}")
        self.f = f
        self.wedge = wedge
        self.trace = trace
        self.manifold = manifold
        rng = np.random.default_rng(seed)
        z = _polydisc(rng, samples, manifold.n, 0.5 * manifold.z_radius)
        s = rng.uniform(-0.5 * manifold.w_radius, 0.5 * manifold.w_radius, (samples, manifold.d))
        values = f(manifold.chart(z, s)).imag
        expected = trace.evaluate(np.concatenate([z.real, z.imag, s], axis=1))
        mismatch = float(np.max(np.abs(values - expected)))
        if mismatch > TRACE_TOLERANCE:
            raise TraceMismatchError(f"Im {f.label} differs from its trace on the edge by {mismatch:.3e}")


@dataclass(frozen=True)
class RigidManifold:
    """Graph Im w' = phi'(z', zbar') with no dependence on Re w'"""

    n: int
    d: int
    graph_phi: tuple

    def __post_init__(self):
        graph_phi = tuple(self.graph_phi)
        if len(graph_phi) != self.d:
            raise SeriesError(f"expected {self.d} graph components, got {len(graph_phi)}")
        validate_graph(graph_phi, chart_variables(self.n, 0))
        object.__setattr__(self, "graph_phi", graph_phi)


@dataclass(frozen=True)
class ExtensionResult:
    """Chart-coordinate extension F(z, zbar, w) = G + i v and the pieces that built it"""

    F_chart: AnalyticFunction
    G: AnalyticFunction
    g: AnalyticFunction
    v: AnalyticFunction
    pulled_back: AnalyticFunction
    manifold: GenericManifold
    normalization: NormalizationMap
    chart_report: Optional[ChartWedgeReport] = None
    report: Optional[ResidualReport] = None
    stages: List[str] = field(default_factory=list)

    @property
    def ambient(self) -> AnalyticFunction:
        """F_chart pushed forward by the Newton inverse of the extended chart"""
        manifold = self.manifold
        chart_function = self.F_chart

        def evaluate(points: np.ndarray) -> np.ndarray:
            z, w = manifold.extended_chart_inverse(points)
            return chart_function(np.concatenate([z, w], axis=1))

        return AnalyticFunction(
            manifold.arity,
            evaluate,
            manifold.box,
            Provenance.CONSTRUCTED_EXTENSION,
            f"ambient[{chart_function.label}]",
        )

    def stage_values(self, points) -> Dict[str, np.ndarray]:
        """Intermediate values g, G and F at chart points inside the extension domain"""
        points = as_points(points, self.F_chart.arity)
        return {"g": self.g(points), "G": self.G(points), "F": self.F_chart(points)}


@dataclass(frozen=True)
class PulledBackFunction(AnalyticFunction):
    """Pulled-back wedge function carrying its chart wedge certificate"""

    chart_report: Optional[ChartWedgeReport] = None


def pull_back(
    wf: WedgeFunction,
    sub_cone: Cone,
    boxes: ChartBoxes,
    samples: int = 20_000,
    seed: int = 0,
) -> "PulledBackFunction":
    """(z, w) -> f(extended_chart(z, w)) on the closed subcone side; refused unless the chart wedge check passes"""
    manifold = wf.manifold
    report = verify_chart_wedge(manifold, wf.wedge, sub_cone, boxes.z_radius, boxes.w_radius, samples, seed)
    if not report.passed:
        logger.error(f"chart wedge check failed: {report.summary()}")
        raise ChartWedgeError(report)
    f = wf.f

    def evaluate(points: np.ndarray) -> np.ndarray:
        z, w = points[:, : manifold.n], points[:, manifold.n:]
        return f(manifold.extended_chart(z, w))

    domain = EOWDomain(sub_cone, boxes.w_radius, boxes.w_radius, manifold.n, boxes.z_radius, one_sided=True)
    return PulledBackFunction(
        manifold.arity, evaluate, domain, Provenance.CONSTRUCTED_EXTENSION, f"{f.label}*Psi", chart_report=report
    )


def complexify_trace(wf: WedgeFunction, boxes: ChartBoxes) -> AnalyticFunction:
    """Trace series with the s variables replaced by complex w"""
    manifold = wf.manifold
    trace = wf.trace
    n, d = manifold.n, manifold.d
    needed = np.array([boxes.z_radius] * (2 * n) + [np.sqrt(2) * boxes.w_radius] * d)
    if np.any(trace.polyradius < needed - settings.domain_tolerance):
        raise PolyradiusError(
            f"trace polyradius {trace.polyradius.tolist()} does not cover the boxes {needed.tolist()}"
        )

    def evaluate(points: np.ndarray) -> np.ndarray:
        return _trace_values(trace, points, n)

    domain = DomainBox(
        np.zeros(n + d), [boxes.z_radius] * n + [np.sqrt(2) * boxes.w_radius] * d, name="complexified trace box"
    )
    return AnalyticFunction(n + d, evaluate, domain, Provenance.SERIES_BACKED, "v(z,w)")


def build_reflected(
    pulled: AnalyticFunction,
    v: AnalyticFunction,
    samples: int = 64,
    seed: int = 0,
) -> AnalyticFunction:
    """f*Psi - i v on the upper side and its conjugate reflection below.

    Below the edge the value is conj(f*Psi(z, conj w)) + i v(z, w), which is the
    conjugate of the upper expression at conj w because v has real coefficients.
    """
    upper_domain: EOWDomain = pulled.domain
    n = upper_domain.n
    domain = EOWDomain(
        upper_domain.cone,
        upper_domain.edge_radius,
        upper_domain.cone_radius,
        n,
        upper_domain.z_radius,
    )

    def evaluate(points: np.ndarray) -> np.ndarray:
        sides = domain.sides(points)
        out = np.empty(points.shape[0], dtype=complex)
        upper = sides >= 0
        if np.any(upper):
            block = points[upper]
            out[upper] = pulled(block, check_domain=False) - 1j * v(block, check_domain=False)
        lower = ~upper
        if np.any(lower):
            block = points[lower]
            mirrored = np.concatenate([block[:, :n], np.conj(block[:, n:])], axis=1)
            out[lower] = np.conj(pulled(mirrored, check_domain=False)) + 1j * v(block, check_domain=False)
        return out

    g = AnalyticFunction(pulled.arity, evaluate, domain, Provenance.CONSTRUCTED_EXTENSION, "g")
    rng = np.random.default_rng(seed)
    z = _polydisc(rng, samples, n, upper_domain.z_radius)
    s = rng.uniform(-upper_domain.edge_radius, upper_domain.edge_radius, (samples, domain.d))
    imaginary = float(np.max(np.abs(g(np.concatenate([z, s.astype(complex)], axis=1)).imag)))
    if imaginary > EDGE_REALITY_TOLERANCE:
        raise InconsistentTraceError(f"g is not real on the edge: max |Im g| = {imaginary:.3e}")
    return g


def _probe_escape(
    g: AnalyticFunction,
    normalization: NormalizationMap,
    n: int,
    z_radius: float,
    probes: int,
    seed: int,
) -> Optional[QuadratureEscapeError]:
    rng = np.random.default_rng(seed)
    model = np.exp(2j * np.pi * rng.uniform(0, 1, (probes, normalization.d)))
    z = _polydisc(rng, probes, n, z_radius) if np.isfinite(z_radius) else np.zeros((probes, n), complex)
    points = np.concatenate([z, normalization.apply(model)], axis=1)
    theta = quadrature_nodes(_PROBE_NODES)
    flat = quadrature_points(points, normalization, theta, n).reshape(-1, g.arity)
    inside = g.domain.mask(flat)
    if np.all(inside):
        return None
    index = int(np.argmin(inside))
    return QuadratureEscapeError(theta[index % _PROBE_NODES], flat[index], g.domain.name)


def extend(
    g: AnalyticFunction,
    normalization: NormalizationMap,
    nodes: Optional[int] = None,
    n: int = 0,
    z_radius: float = np.inf,
    probes: int = 64,
    seed: int = 0,
) -> AnalyticFunction:
    """Edge-of-the-wedge average of g; A is halved while probe nodes escape g's domain"""
    escape = None
    for attempt in range(settings.shrink_attempts + 1):
        escape = _probe_escape(g, normalization, n, z_radius, probes, seed)
        if escape is None:
            return edge_of_wedge_extend(g, normalization, nodes, fixed=n, z_radius=z_radius)
        if attempt < settings.shrink_attempts:
            logger.warning(f"quadrature left {g.domain.name} ({escape}); halving {normalization.label}")
            normalization = normalization.scaled(0.5)
    raise escape


def reassemble(G: AnalyticFunction, v: AnalyticFunction) -> AnalyticFunction:
    """F = G + i v on the extension domain"""

    def evaluate(points: np.ndarray) -> np.ndarray:
        return G(points, check_domain=False) + 1j * v(points, check_domain=False)

    return AnalyticFunction(G.arity, evaluate, G.domain, Provenance.CONSTRUCTED_EXTENSION, "F")


def sample_extension_grid(F: AnalyticFunction, count: int, seed: int = 0, fraction: float = 0.5) -> np.ndarray:
    """Seeded points of the extension domain at ``fraction`` of its radii"""
    domain = F.domain
    rng = np.random.default_rng(seed)
    z_radius = domain.z_radius if np.isfinite(domain.z_radius) else 1.0
    z = _polydisc(rng, count, domain.n, fraction * z_radius)
    model = _polydisc(rng, count, domain.normalization.d, fraction)
    return np.concatenate([z, domain.normalization.apply(model)], axis=1)


def extend_cr_function(
    wf: WedgeFunction,
    boxes: ChartBoxes,
    sub_cone: Optional[Cone] = None,
    normalization: Optional[NormalizationMap] = None,
    nodes: Optional[int] = None,
    oracle: Optional[AnalyticFunction] = None,
    grid_points: int = 1000,
    samples: int = 20_000,
    seed: int = 0,
    step: Optional[float] = None,
) -> ExtensionResult:
    """Run pull_back, complexify_trace, build_reflected, extend and reassemble.

    With an ambient oracle F0 the result carries a residual report against
    F0*Psi on a seeded half-radius grid, with CR residuals taken in w.
    """
    manifold = wf.manifold
    sub_cone = sub_cone or wf.wedge.cone.shrink(0.5)
    normalization = normalization or NormalizationMap.for_cone(sub_cone, boxes.w_radius)
    stages: List[str] = []

    def stage(name: str, action: Callable[[], object]):
        logger.info(f"stage {name}")
        try:
            value = action()
        except ReflexError as exc:
            logger.error(f"stage {name} failed: {exc}")
            raise PipelineStageError(name, exc) from exc
        stages.append(name)
        return value

    pulled = stage("pull_back", lambda: pull_back(wf, sub_cone, boxes, samples, seed))
    v = stage("complexify_trace", lambda: complexify_trace(wf, boxes))
    g = stage("build_g", lambda: build_reflected(pulled, v, seed=seed))
    G = stage("extend", lambda: extend(g, normalization, nodes, manifold.n, boxes.z_radius, seed=seed))
    F = stage("reassemble", lambda: reassemble(G, v))

    report = None
    if oracle is not None:
        def oracle_in_chart(points: np.ndarray) -> np.ndarray:
            return oracle(manifold.extended_chart(points[:, : manifold.n], points[:, manifold.n:]))

        chart_oracle = AnalyticFunction(F.arity, oracle_in_chart, F.domain, Provenance.BLACK_BOX, f"{oracle.label}*Psi")
        grid = sample_extension_grid(F, grid_points, seed)
        w_coordinates = list(range(manifold.n, manifold.arity))
        report = stage("verify", lambda: compare(F, chart_oracle, grid, step, w_coordinates))
        logger.info(f"extension of {wf.f.label}: {report.summary()}")

    return ExtensionResult(
        F_chart=F,
        G=G,
        g=g,
        v=v,
        pulled_back=pulled,
        manifold=manifold,
        normalization=G.domain.normalization,
        chart_report=pulled.chart_report,
        report=report,
        stages=stages,
    )


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    NOT_APPLICABLE = "NOT-APPLICABLE"


@dataclass(frozen=True)
class UniquenessReport:
    status: Verdict
    max_difference: float
    max_imag_difference: float
    base_difference: float

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "max_difference": self.max_difference,
            "max_imag_difference": self.max_imag_difference,
            "base_difference": self.base_difference,
        }


def uniqueness_check(
    f: AnalyticFunction,
    g: AnalyticFunction,
    points,
    base_point,
    tolerance: float = UNIQUENESS_TOLERANCE,
) -> UniquenessReport:
    """Compare two CR functions on edge samples that share Im and the base value"""
    f_values = f(points)
    g_values = g(points)
    imag_difference = float(np.max(np.abs(f_values.imag - g_values.imag)))
    base_difference = abs(f.at(base_point) - g.at(base_point))
    difference = float(np.max(np.abs(f_values - g_values)))
    if imag_difference >= UNIQUENESS_GATE or base_difference >= UNIQUENESS_GATE:
        status = Verdict.NOT_APPLICABLE
    elif difference < tolerance:
        status = Verdict.PASS
    else:
        status = Verdict.FAIL
    report = UniquenessReport(status, difference, imag_difference, float(base_difference))
    logger.info(f"uniqueness check: {report.summary()}")
    return report


def rigid_target_traces(tangential: Sequence[SeriesPair], target: RigidManifold) -> List[MultiSeries]:
    """Traces Im g_i = phi'_i(Re f, Im f) for the normal components of a map into a rigid target"""
    if len(tangential) != target.n:
        raise IncompatibleVariablesError(
            f"rigid target has {target.n} tangential coordinates, {len(tangential)} components given"
        )
    inners = [pair.real for pair in tangential] + [pair.imag for pair in tangential]
    return [compose(component, inners) for component in target.graph_phi]


def edge_trace(
    manifold: GenericManifold,
    builder: Callable[[List[SeriesPair], List[SeriesPair]], SeriesPair],
    order: Optional[int] = None,
) -> MultiSeries:
    """Im F0(Psi(z, s)) as a real series, for F0 built from coordinate series by ``builder``"""
    order = settings.multi_order if order is None else order
    names = manifold.variables
    polyradius = manifold.graph_phi[0].polyradius

    def variable(name: str) -> MultiSeries:
        return MultiSeries.variable(name, names, order, polyradius)

    z = [SeriesPair(variable(f"x{j}"), variable(f"y{j}")) for j in range(1, manifold.n + 1)]
    w = [
        SeriesPair(
            variable(f"s{k}"),
            MultiSeries.build(names, component.exponents, component.coefficients, order, polyradius),
        )
        for k, component in enumerate(manifold.graph_phi, start=1)
    ]
    return builder(z, w).imag


def extend_rigid_target(
    wedge: Wedge,
    tangential: Sequence[SeriesPair],
    target: RigidManifold,
    normal_components: Sequence[AnalyticFunction],
    boxes: ChartBoxes,
    oracles: Optional[Sequence[AnalyticFunction]] = None,
    **options,
) -> List[ExtensionResult]:
    """Extend each normal component of a CR map into a rigid target using its composed trace"""
    traces = rigid_target_traces(tangential, target)
    if len(normal_components) != len(traces):
        raise IncompatibleVariablesError(f"{len(traces)} normal traces but {len(normal_components)} components")
    results = []
    for index, (component, trace) in enumerate(zip(normal_components, traces)):
        oracle = oracles[index] if oracles is not None else None
        logger.info(f"rigid target: extending normal component {index + 1} of {len(traces)}")
        wf = WedgeFunction(component, wedge, trace)
        results.append(extend_cr_function(wf, boxes, oracle=oracle, **options))
    return results
