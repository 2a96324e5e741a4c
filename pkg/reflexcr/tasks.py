"""
Scenario runner
Runs a validated scenario stage by stage and writes the grid CSV and the
JSON summary
"""
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence
import csv
import json
import logging
import time

import numpy as np

from reflexcr.exceptions import PipelineStageError, ReflexError, ScenarioError
from reflexcr.expressions import Expression, coordinate_names, parse_holomorphic
from reflexcr.layers.analytic_core import AnalyticFunction, ResidualReport, compare
from reflexcr.layers.cr_extension import ChartBoxes, WedgeFunction, edge_trace, extend_cr_function
from reflexcr.layers.eow import (
    EOWDomain,
    NormalizationMap,
    edge_of_wedge_extend,
    kernel_property_report,
    sweep_nodes,
)
from reflexcr.layers.reflection import (
    CurveSideDomain,
    HalfDiscFunction,
    classical_reflect,
    curve_flatten_reflect,
    effective_radius,
    general_reflect,
    half_disc_domain,
    harmonic_reflect,
    harmonic_reflect_via_holomorphic,
)
from reflexcr.layers.series import MultiSeries, PowerSeries1D, SeriesPair, series_from_name
from reflexcr.layers.wedge_geometry import (
    Cone,
    GenericManifold,
    Wedge,
    certify_chart_wedge,
    verify_chart_wedge,
)
from reflexcr.schemas import (
    CheckRecord,
    CRExtendScenario,
    CurveScenario,
    EOWScenario,
    HarmonicScenario,
    ManifoldScenario,
    ReflectScenario,
    RunReport,
    Scenario,
    TraceSpec,
    VerifyScenario,
)

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


class GridTable:
    """Rows of the CSV grid: coordinates, values, oracle, error and residual"""

    def __init__(
        self,
        coordinates: Sequence[str],
        points: np.ndarray,
        values: np.ndarray,
        oracle: Optional[np.ndarray] = None,
        residuals: Optional[np.ndarray] = None,
    ):
        self.coordinates = list(coordinates)
        self.points = points
        self.values = values
        self.oracle = oracle
        self.residuals = residuals

    @classmethod
    def from_report(cls, coordinates: Sequence[str], report: ResidualReport) -> "GridTable":
        return cls(coordinates, report.grid.points, report.grid.values, report.oracle_values, report.cr_residuals)

    def header(self) -> List[str]:
        columns = []
        for name in self.coordinates:
            columns += [f"{name}_re", f"{name}_im"]
        return columns + ["F_re", "F_im", "oracle_re", "oracle_im", "abs_err", "cr_residual"]

    def rows(self) -> Iterator[List[str]]:
        def number(value: float) -> str:
            return format(float(value), ".17g")

        for index in range(self.points.shape[0]):
            row = []
            for value in self.points[index]:
                row += [number(value.real), number(value.imag)]
            value = self.values[index]
            row += [number(value.real), number(value.imag)]
            if self.oracle is not None:
                expected = self.oracle[index]
                row += [number(expected.real), number(expected.imag), number(abs(value - expected))]
            else:
                row += ["", "", ""]
            row.append(number(self.residuals[index]) if self.residuals is not None else "")
            yield row

    def write(self, path: Path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(self.header())
            writer.writerows(self.rows())


class ScenarioRun:
    """Mutable record of one run: stages, checks, metrics and the grid"""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.stages: List[str] = []
        self.timings: Dict[str, float] = {}
        self.checks: Dict[str, CheckRecord] = {}
        self.residuals: Dict[str, Optional[float]] = {}
        self.metrics: Dict[str, Any] = {}
        self.grid: Optional[GridTable] = None

    @contextmanager
    def setup(self) -> Iterator[None]:
        """Errors while building the inputs are configuration errors"""
        try:
            yield
        except ScenarioError:
            raise
        except (ReflexError, ValueError) as exc:
            raise ScenarioError(str(exc)) from exc

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        logger.info(f"[{self.scenario.name}] stage {name}")
        start = time.perf_counter()
        try:
            yield
        except PipelineStageError:
            raise
        except (ReflexError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            logger.error(f"[{self.scenario.name}] stage {name} failed: {exc}")
            raise PipelineStageError(name, exc) from exc
        finally:
            self.timings[name] = time.perf_counter() - start
        self.stages.append(name)

    def check(self, name: str, value: Optional[float], limit: float) -> bool:
        passed = value is not None and np.isfinite(value) and value <= limit
        self.checks[name] = CheckRecord(value=value, limit=limit, passed=bool(passed))
        if not passed:
            logger.warning(f"[{self.scenario.name}] check {name} failed: {value} > {limit}")
        return bool(passed)

    def record(self, coordinates: Sequence[str], report: ResidualReport) -> None:
        self.grid = GridTable.from_report(coordinates, report)
        self.residuals.update(
            max_abs_error=report.max_abs_error,
            max_cr_residual=report.max_cr_residual,
        )
        self.metrics["grid_points"] = len(report.grid)

    def report(self, failure: Optional[PipelineStageError] = None) -> RunReport:
        passed = failure is None and bool(self.checks) and all(check.passed for check in self.checks.values())
        return RunReport(
            scenario=self.scenario.model_dump(mode="json"),
            kind=self.scenario.kind,
            status="PASS" if passed else "FAIL",
            exit_code=EXIT_PASS if passed else EXIT_FAIL,
            stages=list(self.stages),
            checks=dict(self.checks),
            residuals=dict(self.residuals),
            metrics=dict(self.metrics),
            failed_stage=failure.stage if failure else None,
            error=str(failure.cause) if failure else None,
            partial=failure is not None,
            timings=dict(self.timings),
        )


def _disc_points(rng: np.random.Generator, count: int, radius: float, lower: bool = False) -> np.ndarray:
    modulus = radius * np.sqrt(rng.uniform(0, 1, count))
    angle = rng.uniform(np.pi, 2 * np.pi, count) if lower else rng.uniform(0, 2 * np.pi, count)
    return modulus * np.exp(1j * angle)


def _polydisc_points(rng: np.random.Generator, count: int, width: int, radius: float) -> np.ndarray:
    modulus = radius * np.sqrt(rng.uniform(0, 1, (count, width)))
    return modulus * np.exp(2j * np.pi * rng.uniform(0, 1, (count, width)))


def _pad(series: PowerSeries1D, order: int) -> PowerSeries1D:
    extra = max(0, order - series.order)
    return PowerSeries1D(np.pad(series.coefficients, (0, extra)), series.radius)


def _pair_of(value, like: SeriesPair) -> SeriesPair:
    """Series result of an expression; constants become constant pairs"""
    if isinstance(value, SeriesPair):
        return value
    return like * 0.0 + complex(value)


def one_variable_trace(
    spec: TraceSpec,
    expression: Expression,
    part: Callable[[SeriesPair], PowerSeries1D] = lambda pair: pair.imag,
    gamma: Optional[PowerSeries1D] = None,
) -> PowerSeries1D:
    """Explicit trace, or the chosen part of the expression along x + i gamma(x) (gamma = 0 by default)"""
    if not spec.derive:
        return spec.build()
    identity = series_from_name("identity", spec.order, spec.radius)
    curve = identity.scale(0.0) if gamma is None else _pad(gamma, spec.order)
    base = SeriesPair(identity, curve)
    pair = _pair_of(expression.series({"z": base}), base)
    return PowerSeries1D(part(pair).coefficients, spec.radius)


def run_reflect(scenario: ReflectScenario, run: ScenarioRun) -> None:
    with run.setup():
        expression = parse_holomorphic(scenario.f, ["z"])
        oracle = parse_holomorphic(scenario.oracle or scenario.f, ["z"]).to_function(label="oracle")
        f = expression.to_function(half_disc_domain(), label="f")
        trace = one_variable_trace(scenario.trace, expression)
    with run.stage("trace_check"):
        half_disc = HalfDiscFunction(f, trace)
    with run.stage("reflect"):
        if scenario.method == "classical":
            F = classical_reflect(half_disc)
        else:
            F = general_reflect(half_disc, scenario.method)
        run.metrics["effective_radius"] = effective_radius(trace)
    points = _disc_points(np.random.default_rng(scenario.seed), scenario.samples, scenario.radius, lower=True)
    with run.stage("verify"):
        report = compare(F, oracle, points)
    run.record(["z"], report)
    run.check("max_abs_error", report.max_abs_error, scenario.tolerance)
    run.check("max_cr_residual", report.max_cr_residual, scenario.cr_tolerance)


def run_harmonic(scenario: HarmonicScenario, run: ScenarioRun) -> None:
    take = (lambda values: values.real) if scenario.part == "re" else (lambda values: values.imag)
    with run.setup():
        expression = parse_holomorphic(scenario.h, ["z"])

        def v(z: np.ndarray) -> np.ndarray:
            return take(expression.evaluate(np.asarray(z).reshape(-1, 1)))

        part = (lambda pair: pair.real) if scenario.part == "re" else (lambda pair: pair.imag)
        trace = one_variable_trace(scenario.trace, expression, part)
    with run.stage("reflect"):
        if scenario.via_holomorphic:
            # Im(i h) = Re h
            factor = 1j if scenario.part == "re" else 1.0
            f = AnalyticFunction(
                1, lambda points: factor * expression.evaluate(points), half_disc_domain(), label="f"
            )
            V = harmonic_reflect_via_holomorphic(HalfDiscFunction(f, trace))
        else:
            V = harmonic_reflect(v, trace, seed=scenario.seed)
    points = _disc_points(np.random.default_rng(scenario.seed), scenario.samples, scenario.radius)
    with run.stage("verify"):
        values = V(points)
        expected = v(points)
        laplacian = np.abs(V.laplacian(points))
    run.grid = GridTable(["z"], points.reshape(-1, 1), values.astype(complex), expected.astype(complex), laplacian)
    run.residuals.update(
        max_abs_error=float(np.max(np.abs(values - expected))),
        max_laplacian=float(np.max(laplacian)),
    )
    run.metrics["grid_points"] = int(points.size)
    run.check("max_abs_error", run.residuals["max_abs_error"], scenario.tolerance)
    run.check("max_laplacian", run.residuals["max_laplacian"], scenario.laplacian_tolerance)


def run_curve(scenario: CurveScenario, run: ScenarioRun) -> None:
    with run.setup():
        expression = parse_holomorphic(scenario.f, ["z"])
        oracle = parse_holomorphic(scenario.oracle or scenario.f, ["z"]).to_function(label="oracle")
        order = max(scenario.trace.order, scenario.gamma.order)
        gamma = _pad(scenario.gamma.build(), order)
        f = expression.to_function(CurveSideDomain(gamma, scenario.side_radius), label="f")
        trace = one_variable_trace(scenario.trace, expression, gamma=gamma)
    with run.stage("reflect"):
        F = curve_flatten_reflect(f, gamma, trace)
        run.metrics["chart_radius"] = F.domain.radii[0]
    points = _disc_points(np.random.default_rng(scenario.seed), scenario.samples, scenario.radius)
    with run.stage("verify"):
        report = compare(F, oracle, points)
    run.record(["z"], report)
    run.check("max_abs_error", report.max_abs_error, scenario.tolerance)
    run.check("max_cr_residual", report.max_cr_residual, scenario.cr_tolerance)


def run_eow(scenario: EOWScenario, run: ScenarioRun) -> None:
    variables, aliases = coordinate_names(0, scenario.d)
    with run.setup():
        cone = Cone(scenario.cone, label="cone")
        g = parse_holomorphic(scenario.g, variables, aliases).to_function(
            EOWDomain(cone, scenario.domain_radius), label="g"
        )
        oracle = parse_holomorphic(scenario.oracle or scenario.g, variables, aliases).to_function(label="oracle")
        if scenario.matrix is not None:
            normalization = NormalizationMap(scenario.matrix)
        else:
            target = Cone(scenario.sub_cone, label="sub_cone") if scenario.sub_cone else cone
            normalization = NormalizationMap.for_cone(target, scenario.domain_radius)

    if scenario.kernel_samples:
        with run.stage("kernel"):
            kernel = kernel_property_report(scenario.kernel_samples, scenario.seed)
        run.metrics["kernel"] = kernel.summary()
        run.check("kernel_sign_violations", kernel.sign_violations_circle + kernel.sign_violations_real, 0)
        run.check("kernel_supremum", kernel.supremum, kernel.bound + 1e-9)

    with run.stage("certify"):
        containment = normalization.certify(cone, samples=scenario.samples, seed=scenario.seed)
    run.metrics["containment"] = containment.summary()
    if not run.check("containment_violations", containment.violations, 0):
        logger.error(f"{normalization.label} does not map the model orthant into {cone.label}; skipping quadrature")
        return

    with run.stage("extend"):
        G = edge_of_wedge_extend(g, normalization, scenario.nodes)
    rng = np.random.default_rng(scenario.seed)
    points = normalization.apply(_polydisc_points(rng, scenario.samples, scenario.d, scenario.radius))
    with run.stage("verify"):
        report = compare(G, oracle, points)
        edge = normalization.apply(rng.uniform(-scenario.radius, scenario.radius, (scenario.samples, scenario.d)))
        edge_error = float(np.max(np.abs(G(edge) - g(edge))))
    run.record(variables, report)
    run.residuals["edge_max_error"] = edge_error
    run.check("max_abs_error", report.max_abs_error, scenario.tolerance)
    run.check("edge_max_error", edge_error, scenario.tolerance)
    run.check("max_cr_residual", report.max_cr_residual, scenario.cr_tolerance)

    if scenario.sweep:
        with run.stage("sweep"):
            table = sweep_nodes(g, normalization, report.grid.points, oracle, scenario.sweep)
        run.metrics["sweep"] = {str(nodes): error for nodes, error in table.items()}


def _manifold(scenario: ManifoldScenario) -> GenericManifold:
    return GenericManifold(
        scenario.n,
        scenario.d,
        scenario.graph_components(),
        scenario.manifold_z_radius,
        scenario.manifold_w_radius,
    )


def run_crextend(scenario: CRExtendScenario, run: ScenarioRun) -> None:
    variables, aliases = coordinate_names(scenario.n, scenario.d)
    with run.setup():
        manifold = _manifold(scenario)
        wedge = Wedge(manifold, Cone(scenario.cone, label="cone"))
        sub_cone = Cone(scenario.sub_cone, label="sub_cone") if scenario.sub_cone else None
        expression = parse_holomorphic(scenario.f, variables, aliases)
        f = expression.to_function(wedge.closure(), label="f")
        oracle = parse_holomorphic(scenario.oracle or scenario.f, variables, aliases).to_function(label="F0")
        spec = scenario.trace
        if spec.derive:
            def builder(z: List[SeriesPair], w: List[SeriesPair]) -> SeriesPair:
                values = dict(zip(variables, list(z) + list(w)))
                return _pair_of(expression.series(values), w[0])

            trace = edge_trace(manifold, builder, spec.order)
        else:
            trace = MultiSeries.from_literal(manifold.variables, spec.terms, spec.order, spec.polyradius)
        boxes = ChartBoxes(scenario.z_radius, scenario.w_radius)
    with run.stage("trace_check"):
        wf = WedgeFunction(f, wedge, trace, seed=scenario.seed)
    with run.stage("extend"):
        result = extend_cr_function(
            wf,
            boxes,
            sub_cone=sub_cone,
            nodes=scenario.nodes,
            oracle=oracle,
            grid_points=scenario.samples,
            samples=scenario.chart_samples,
            seed=scenario.seed,
        )
    run.metrics["pipeline"] = result.stages
    run.metrics["chart_wedge"] = result.chart_report.summary()
    run.metrics["normalization"] = result.normalization.matrix.tolist()

    rng = np.random.default_rng(scenario.seed + 1)
    z = _polydisc_points(rng, scenario.samples, scenario.n, 0.5 * boxes.z_radius)
    s = rng.uniform(-0.5, 0.5, (scenario.samples, scenario.d))
    edge = np.concatenate([z, result.normalization.apply(s)], axis=1)
    with run.stage("edge_trace"):
        chart = edge[:, scenario.n:].real
        expected = trace.evaluate(np.concatenate([z.real, z.imag, chart], axis=1))
        edge_error = float(np.max(np.abs(result.F_chart(edge).imag - expected)))

    run.record(variables, result.report)
    run.residuals["edge_trace_error"] = edge_error
    run.check("chart_wedge_violations", result.chart_report.violations, 0)
    run.check("max_abs_error", result.report.max_abs_error, scenario.tolerance)
    run.check("edge_trace_error", edge_error, scenario.tolerance)
    run.check("max_cr_residual", result.report.max_cr_residual, scenario.cr_tolerance)


def run_verify(scenario: VerifyScenario, run: ScenarioRun) -> None:
    with run.setup():
        manifold = _manifold(scenario)
        cone = Cone(scenario.cone, label="cone")
        wedge = Wedge(manifold, cone)
        sub_cone = Cone(scenario.sub_cone, label="sub_cone") if scenario.sub_cone else cone.shrink(scenario.shrink_factor)
    check = certify_chart_wedge if scenario.certify else verify_chart_wedge
    with run.stage("chart_wedge"):
        report = check(
            manifold, wedge, sub_cone, scenario.z_radius, scenario.s_radius, scenario.samples, scenario.seed
        )
    run.metrics["chart_wedge"] = report.summary()
    run.check("chart_wedge_violations", report.violations, 0)


RUNNERS: Dict[str, Callable[[Any, ScenarioRun], None]] = {
    "reflect": run_reflect,
    "harmonic": run_harmonic,
    "curve": run_curve,
    "eow": run_eow,
    "crextend": run_crextend,
    "verify": run_verify,
}


def run_scenario(scenario: Scenario, out_dir: Optional[Path] = None) -> RunReport:
    """Run a scenario; with ``out_dir`` write <name>.csv (when a grid exists) and <name>.json.

    Configuration errors raise ScenarioError. A failing stage stops the run
    and yields a partial FAIL report.
    """
    run = ScenarioRun(scenario)
    logger.info(f"running {scenario.kind} scenario '{scenario.name}'")
    failure = None
    try:
        RUNNERS[scenario.kind](scenario, run)
    except PipelineStageError as exc:
        failure = exc
    report = run.report(failure)
    if out_dir is not None:
        report.outputs = write_outputs(report, run.grid, Path(out_dir), scenario.name)
    logger.info(f"scenario '{scenario.name}' finished: {report.status}")
    return report


def write_outputs(report: RunReport, grid: Optional[GridTable], out_dir: Path, stem: str) -> List[str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    if grid is not None:
        grid.write(out_dir / f"{stem}.csv")
        outputs.append(f"{stem}.csv")
    outputs.append(f"{stem}.json")
    report.outputs = outputs
    summary = report.model_dump(mode="json")
    (out_dir / f"{stem}.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return outputs
