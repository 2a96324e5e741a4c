"""End-to-end checks of the documented numerical guarantees"""
import json

import numpy as np
import pytest

from reflexcr.layers.analytic_core import AnalyticFunction, ComplexSpace, polynomial_function
from reflexcr.layers.cr_extension import (
    ChartBoxes,
    RigidManifold,
    Verdict,
    WedgeFunction,
    edge_trace,
    extend_cr_function,
    extend_rigid_target,
    sample_extension_grid,
    uniqueness_check,
)
from reflexcr.layers.eow import KERNEL_BOUND, kernel_property_report
from reflexcr.layers.reflection import HalfDiscFunction, classical_reflect, general_reflect, half_disc_domain
from reflexcr.layers.series import MultiSeries, PowerSeries1D, SeriesPair, series_from_name
from reflexcr.layers.wedge_geometry import Cone, GenericManifold, Wedge, chart_variables
from reflexcr.schemas import load_scenario, parse_scenario
from reflexcr.tasks import run_scenario

BOXES = ChartBoxes(0.2, 0.2)
FAST = dict(nodes=128, grid_points=1000, samples=2000)
SCENARIOS = [
    "reflect_exp",
    "reflect_classical",
    "harmonic",
    "curve",
    "eow",
    "eow_wrong_cone",
    "crextend",
    "crextend_codim2",
    "verify",
]


def run_bundled(scenarios_dir, tmp_path, name):
    return run_scenario(load_scenario(scenarios_dir / f"{name}.json"), tmp_path)


def test_reflection_of_exp_iz(scenarios_dir, tmp_path):
    report = run_bundled(scenarios_dir, tmp_path, "reflect_exp")
    assert report.status == "PASS"
    assert report.metrics["grid_points"] == 1000
    assert report.residuals["max_abs_error"] < 1e-10


def test_zero_trace_reflection_is_classical():
    rng = np.random.default_rng(0)
    f = AnalyticFunction(1, lambda p: np.cos(p[:, 0]), half_disc_domain())
    h = HalfDiscFunction(f, PowerSeries1D.zero(64))
    z = 0.9 * np.sqrt(rng.uniform(0, 1, 1000)) * np.exp(1j * rng.uniform(np.pi, 2 * np.pi, 1000))
    assert np.array_equal(general_reflect(h)(z), classical_reflect(h)(z))


def test_harmonic_reflection(scenarios_dir, tmp_path):
    report = run_bundled(scenarios_dir, tmp_path, "harmonic")
    assert report.status == "PASS"
    assert report.residuals["max_abs_error"] < 1e-12
    assert report.residuals["max_laplacian"] < 1e-4


def test_curve_flattening(scenarios_dir, tmp_path):
    report = run_bundled(scenarios_dir, tmp_path, "curve")
    assert report.status == "PASS"
    assert report.residuals["max_abs_error"] < 1e-6


def test_kernel_properties():
    report = kernel_property_report(100_000, seed=0)
    assert report.sign_violations_circle == 0
    assert report.sign_violations_real == 0
    assert report.identity_max_error == 0.0
    assert report.supremum < 6
    assert report.supremum <= KERNEL_BOUND + 1e-9


@pytest.mark.parametrize("g", ["w1*w2", "w1**3 + w2", "exp(w1 + w2)"])
def test_edge_of_the_wedge_oracles(g, tmp_path):
    scenario = parse_scenario(
        json.dumps(
            {
                "kind": "eow",
                "name": "eow_oracle",
                "d": 2,
                "g": g,
                "cone": [[1.0, 0.0], [0.0, 1.0]],
                "matrix": [[1.0, 0.0], [0.0, 1.0]],
                "radius": 0.5,
                "nodes": 256,
                "samples": 1000,
                "sweep": [16, 32, 64, 128, 256],
            }
        )
    )
    report = run_scenario(scenario, tmp_path)
    assert report.status == "PASS", report.checks
    assert report.residuals["max_abs_error"] < 1e-10
    assert report.residuals["edge_max_error"] < 1e-10
    sweep = {int(nodes): error for nodes, error in report.metrics["sweep"].items()}
    counts = sorted(sweep)
    for coarse, fine in zip(counts, counts[1:]):
        assert sweep[fine] <= max(sweep[coarse] / 10, 1e-10)


def test_chart_wedge_certification(scenarios_dir, tmp_path):
    report = run_bundled(scenarios_dir, tmp_path, "verify")
    assert report.status == "PASS"
    assert report.metrics["chart_wedge"]["samples"] == 100_000
    assert report.metrics["chart_wedge"]["violations"] == 0


def sphere_wedge():
    names = chart_variables(1, 1)
    graph = MultiSeries.from_literal(names, [([2, 0, 0], 1.0), ([0, 2, 0], 1.0)])
    manifold = GenericManifold(1, 1, [graph], 0.5, 0.5)
    return Wedge(manifold, Cone([[1.0]]))


def test_closed_form_pipeline():
    wedge = sphere_wedge()
    f = AnalyticFunction(2, lambda p: p[:, 1] ** 2, wedge.closure())
    wf = WedgeFunction(f, wedge, edge_trace(wedge.manifold, lambda z, w: w[0] ** 2))
    oracle = AnalyticFunction(2, lambda p: p[:, 1] ** 2, ComplexSpace(2))
    result = extend_cr_function(wf, BOXES, oracle=oracle, **FAST)
    assert result.report.max_abs_error < 1e-9

    points = sample_extension_grid(result.F_chart, 1000, seed=0)
    z, w = points[:, 0], points[:, 1]
    r2 = np.abs(z) ** 2
    values = result.stage_values(points)
    assert np.max(np.abs(values["g"] - (w ** 2 - r2 ** 2))) < 1e-10
    assert np.max(np.abs(values["F"] - (w ** 2 - r2 ** 2 + 2j * w * r2))) < 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_random_polynomial_instances(seed):
    rng = np.random.default_rng(100 + seed)
    # total degree <= 6, w-degree <= 3 keeps the trace exact at order 16 for a quartic graph
    terms = [(a, b) for b in range(4) for a in range(7 - b)]
    coefficients = [complex(c) for c in rng.normal(size=len(terms)) + 1j * rng.normal(size=len(terms))]
    F0 = polynomial_function(dict(zip(terms, coefficients)), 2)

    names = chart_variables(1, 1)
    graph = MultiSeries.from_literal(
        names,
        [
            ([2, 0, 0], 1.0),
            ([0, 2, 0], 1.0),
            ([1, 1, 0], rng.uniform(-0.5, 0.5)),
            ([3, 1, 0], rng.uniform(-0.5, 0.5)),
            ([0, 4, 0], rng.uniform(-0.5, 0.5)),
        ],
    )
    manifold = GenericManifold(1, 1, [graph], 0.5, 0.5)
    wedge = Wedge(manifold, Cone([[1.0]]))

    def builder(z, w):
        total = w[0] * 0.0
        for (a, b), c in zip(terms, coefficients):
            total = total + z[0] ** a * w[0] ** b * c
        return total

    wf = WedgeFunction(AnalyticFunction(2, F0.evaluator, wedge.closure()), wedge, edge_trace(manifold, builder))
    result = extend_cr_function(wf, BOXES, oracle=F0, seed=seed, **FAST)
    assert result.report.max_abs_error < 1e-8


def test_single_variable_pipeline_matches_reflection():
    names = chart_variables(0, 1)
    manifold = GenericManifold(0, 1, [MultiSeries.from_literal(names, [])])
    wedge = Wedge(manifold, Cone([[1.0]]))
    f = AnalyticFunction(1, lambda p: np.exp(1j * p[:, 0]), wedge.closure())
    wf = WedgeFunction(f, wedge, edge_trace(manifold, lambda z, w: (1j * w[0]).exp()))
    result = extend_cr_function(wf, ChartBoxes(0.6, 0.6), **FAST)

    g = AnalyticFunction(1, lambda p: np.exp(1j * p[:, 0]), half_disc_domain())
    reflected = general_reflect(HalfDiscFunction(g, series_from_name("sin", 64)))
    points = sample_extension_grid(result.F_chart, 1000, seed=1, fraction=0.9)
    assert np.max(np.abs(result.F_chart(points) - reflected(points[:, 0]))) < 1e-9


def test_uniqueness_gate():
    points = np.linspace(-0.5, 0.5, 101).astype(complex)
    f = polynomial_function({(3,): 1.0, (1,): 2.0, (0,): 0.5}, 1)
    same = polynomial_function({(3,): 1.0, (1,): 2.0, (0,): 0.5}, 1)
    report = uniqueness_check(f, same, points, 0.0)
    assert report.status is Verdict.PASS
    assert report.max_difference < 1e-10

    shifted = polynomial_function({(3,): 1.0, (1,): 2.0, (0,): 0.75}, 1)
    assert uniqueness_check(f, shifted, points, 0.0).status is Verdict.NOT_APPLICABLE


def test_rigid_target():
    wedge = sphere_wedge()
    names = chart_variables(1, 1)
    tangential = [SeriesPair(MultiSeries.variable("x1", names).scale(2.0), MultiSeries.variable("y1", names).scale(2.0))]
    target = RigidManifold(1, 1, (MultiSeries.from_literal(chart_variables(1, 0), [([2, 0], 1.0), ([0, 2], 1.0)]),))
    normal = AnalyticFunction(2, lambda p: 4 * p[:, 1], wedge.closure())
    oracle = AnalyticFunction(2, lambda p: 4 * p[:, 1], ComplexSpace(2))
    (result,) = extend_rigid_target(wedge, tangential, target, [normal], BOXES, oracles=[oracle], **FAST)
    assert result.report.max_abs_error < 1e-8


@pytest.mark.parametrize("name", SCENARIOS)
def test_reruns_are_byte_identical(scenarios_dir, tmp_path, name):
    first = run_bundled(scenarios_dir, tmp_path / "first", name)
    run_bundled(scenarios_dir, tmp_path / "second", name)
    for output in first.outputs:
        assert (tmp_path / "first" / output).read_bytes() == (tmp_path / "second" / output).read_bytes()
