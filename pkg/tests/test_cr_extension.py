import numpy as np
import pytest

from reflexcr.exceptions import IncompatibleVariablesError, PipelineStageError, TraceMismatchError
from reflexcr.layers.analytic_core import AnalyticFunction, ComplexSpace, polynomial_function
from reflexcr.layers.cr_extension import (
    ChartBoxes,
    RigidManifold,
    Verdict,
    WedgeFunction,
    edge_trace,
    extend_cr_function,
    extend_rigid_target,
    rigid_target_traces,
    sample_extension_grid,
    uniqueness_check,
)
from reflexcr.layers.reflection import HalfDiscFunction, general_reflect, half_disc_domain
from reflexcr.layers.series import MultiSeries, SeriesPair, series_from_name
from reflexcr.layers.wedge_geometry import Cone, GenericManifold, Wedge, chart_variables

from .helpers import sphere_graph

BOXES = ChartBoxes(0.2, 0.2)
FAST = dict(nodes=128, grid_points=200, samples=2000)


def ambient(fn, arity=2):
    return AnalyticFunction(arity, fn, ComplexSpace(arity), label="F0")


def wedge_function(wedge, fn, builder):
    f = AnalyticFunction(wedge.arity, fn, wedge.closure(), label="F0")
    return WedgeFunction(f, wedge, edge_trace(wedge.manifold, builder))


def exp_zw(points):
    z, w = points[:, 0], points[:, 1]
    return np.exp(z * w) + w ** 2


class TestPipeline:
    def test_exponential_over_the_sphere_graph(self, rigid_wedge):
        wf = wedge_function(rigid_wedge, exp_zw, lambda z, w: (z[0] * w[0]).exp() + w[0] ** 2)
        result = extend_cr_function(wf, BOXES, oracle=ambient(exp_zw), **FAST)
        assert result.stages == ["pull_back", "complexify_trace", "build_g", "extend", "reassemble", "verify"]
        assert result.chart_report.passed
        assert result.report.max_abs_error < 1e-8
        assert result.report.max_cr_residual < 1e-6

    def test_closed_form_square(self, rigid_wedge, rng):
        def square(points):
            return points[:, 1] ** 2

        wf = wedge_function(rigid_wedge, square, lambda z, w: w[0] ** 2)
        # Im (s + i|z|^2)^2 = 2 s |z|^2
        assert wf.trace.terms == {(2, 0, 1): 2.0, (0, 2, 1): 2.0}
        result = extend_cr_function(wf, BOXES, **FAST)
        points = sample_extension_grid(result.F_chart, 1000, seed=5)
        z, w = points[:, 0], points[:, 1]
        r2 = np.abs(z) ** 2
        values = result.stage_values(points)
        assert np.max(np.abs(values["g"] - (w ** 2 - r2 ** 2))) < 1e-10
        assert np.max(np.abs(values["F"] - (w ** 2 - r2 ** 2 + 2j * w * r2))) < 1e-9

    def test_ambient_pushes_forward(self, rigid_wedge):
        wf = wedge_function(rigid_wedge, exp_zw, lambda z, w: (z[0] * w[0]).exp() + w[0] ** 2)
        result = extend_cr_function(wf, BOXES, **FAST)
        grid = sample_extension_grid(result.F_chart, 20, seed=2)
        images = result.manifold.extended_chart(grid[:, :1], grid[:, 1:])
        assert np.allclose(result.ambient(images), exp_zw(images), atol=1e-8)

    def test_reflected_g_commutes_with_conjugating_w(self, rigid_wedge, rng):
        wf = wedge_function(rigid_wedge, exp_zw, lambda z, w: (z[0] * w[0]).exp() + w[0] ** 2)
        result = extend_cr_function(wf, BOXES, **FAST)
        z = 0.1 * (rng.uniform(-1, 1, 300) + 1j * rng.uniform(-1, 1, 300))
        w = rng.uniform(-0.1, 0.1, 300) + 1j * rng.uniform(0.01, 0.1, 300)
        upper = np.stack([z, w], axis=1)
        lower = np.stack([z, np.conj(w)], axis=1)
        assert np.max(np.abs(result.g(lower) - np.conj(result.g(upper)))) < 1e-12

    def test_reduces_to_one_variable_reflection(self):
        names = chart_variables(0, 1)
        manifold = GenericManifold(0, 1, [MultiSeries.from_literal(names, [])])
        wedge = Wedge(manifold, Cone([[1.0]]))
        wf = wedge_function(wedge, lambda p: np.exp(1j * p[:, 0]), lambda z, w: (1j * w[0]).exp())
        result = extend_cr_function(wf, ChartBoxes(0.6, 0.6), **FAST)

        f = AnalyticFunction(1, lambda p: np.exp(1j * p[:, 0]), half_disc_domain())
        reflected = general_reflect(HalfDiscFunction(f, series_from_name("sin", 64)))
        points = sample_extension_grid(result.F_chart, 500, seed=9, fraction=0.9)
        assert np.max(np.abs(result.F_chart(points) - reflected(points[:, 0]))) < 1e-9

    def test_opposite_subcone_stops_at_pull_back(self, rigid_wedge):
        wf = wedge_function(rigid_wedge, exp_zw, lambda z, w: (z[0] * w[0]).exp() + w[0] ** 2)
        with pytest.raises(PipelineStageError) as info:
            extend_cr_function(wf, BOXES, sub_cone=Cone([[-1.0]]), **FAST)
        assert info.value.stage == "pull_back"

    def test_small_polyradius_stops_at_complexify_trace(self):
        manifold = GenericManifold(1, 1, [sphere_graph(polyradius=[0.1] * 3)], z_radius=0.5, w_radius=0.5)
        wedge = Wedge(manifold, Cone([[1.0]]))
        wf = wedge_function(wedge, exp_zw, lambda z, w: (z[0] * w[0]).exp() + w[0] ** 2)
        with pytest.raises(PipelineStageError) as info:
            extend_cr_function(wf, BOXES, **FAST)
        assert info.value.stage == "complexify_trace"

    def test_trace_must_match(self, rigid_wedge):
        f = AnalyticFunction(2, lambda p: p[:, 1], rigid_wedge.closure())
        with pytest.raises(TraceMismatchError):
            WedgeFunction(f, rigid_wedge, MultiSeries.constant(0.0, chart_variables(1, 1)))


class TestRandomPolynomials:
    @pytest.mark.parametrize("seed", range(5))
    def test_reproduces_the_ambient_polynomial(self, seed):
        rng = np.random.default_rng(seed)
        terms = [(a, b) for a in range(4) for b in range(4) if a + b <= 4]
        coefficients = rng.normal(size=len(terms)) + 1j * rng.normal(size=len(terms))
        F0 = polynomial_function(dict(zip(terms, coefficients)), 2)

        graph_terms = [([2, 0, 0], 1.0), ([0, 2, 0], 1.0), ([1, 1, 0], rng.uniform(-0.5, 0.5)), ([3, 1, 0], 0.3)]
        manifold = GenericManifold(1, 1, [MultiSeries.from_literal(chart_variables(1, 1), graph_terms)], 0.5, 0.5)
        wedge = Wedge(manifold, Cone([[1.0]]))

        def builder(z, w):
            total = w[0] * 0.0
            for (a, b), c in zip(terms, coefficients):
                total = total + z[0] ** a * w[0] ** b * complex(c)
            return total

        f = AnalyticFunction(2, F0.evaluator, wedge.closure())
        wf = WedgeFunction(f, wedge, edge_trace(manifold, builder))
        result = extend_cr_function(wf, BOXES, oracle=F0, seed=seed, **FAST)
        assert result.report.max_abs_error < 1e-8


class TestUniqueness:
    def points(self):
        return np.linspace(-0.5, 0.5, 41).astype(complex)

    def test_same_function_passes(self):
        f = AnalyticFunction(1, lambda p: p[:, 0] ** 2 + 1j * p[:, 0], ComplexSpace(1))
        g = polynomial_function({(2,): 1.0, (1,): 1j}, 1)
        report = uniqueness_check(f, g, self.points(), 0.0)
        assert report.status is Verdict.PASS
        assert report.max_difference < 1e-10

    def test_shifted_base_value_is_not_applicable(self):
        f = polynomial_function({(1,): 1.0}, 1)
        g = polynomial_function({(1,): 1.0, (0,): 1.0}, 1)
        report = uniqueness_check(f, g, self.points(), 0.0)
        assert report.status is Verdict.NOT_APPLICABLE
        assert report.summary()["status"] == "NOT-APPLICABLE"

    def test_different_real_parts_fail(self):
        f = polynomial_function({(1,): 1.0}, 1)
        g = polynomial_function({(1,): 1.0, (2,): 1.0}, 1)
        report = uniqueness_check(f, g, self.points(), 0.0)
        assert report.status is Verdict.FAIL

    @pytest.mark.parametrize(
        "shift, status",
        [
            (0.0, Verdict.PASS),
            (0.3, Verdict.NOT_APPLICABLE),
            (-1e-3, Verdict.NOT_APPLICABLE),
            (0.2j, Verdict.NOT_APPLICABLE),
        ],
    )
    def test_on_manifold_samples(self, rigid_manifold, rng, shift, status):
        z = 0.4 * (rng.uniform(-1, 1, (200, 1)) + 1j * rng.uniform(-1, 1, (200, 1))) / np.sqrt(2)
        s = rng.uniform(-0.4, 0.4, (200, 1))
        points = rigid_manifold.chart(z, s)
        f = ambient(lambda p: p[:, 1] ** 2)
        g = ambient(lambda p: p[:, 1] ** 2 + shift)
        assert uniqueness_check(f, g, points, [0.0, 0.0]).status is status


class TestRigidTarget:
    def tangential(self):
        names = chart_variables(1, 1)
        return [SeriesPair(MultiSeries.variable("x1", names).scale(2.0), MultiSeries.variable("y1", names).scale(2.0))]

    def target(self):
        names = chart_variables(1, 0)
        return RigidManifold(1, 1, (MultiSeries.from_literal(names, [([2, 0], 1.0), ([0, 2], 1.0)]),))

    def test_composed_trace(self):
        (trace,) = rigid_target_traces(self.tangential(), self.target())
        assert trace.terms == {(2, 0, 0): 4.0, (0, 2, 0): 4.0}

    def test_normal_component_is_reproduced(self, rigid_wedge):
        # H = (2z, 4w) sends Im w = |z|^2 into Im w' = |z'|^2
        normal = AnalyticFunction(2, lambda p: 4 * p[:, 1], rigid_wedge.closure(), label="H2")
        oracle = ambient(lambda p: 4 * p[:, 1])
        (result,) = extend_rigid_target(
            rigid_wedge, self.tangential(), self.target(), [normal], BOXES, oracles=[oracle], **FAST
        )
        assert result.report.max_abs_error < 1e-8

    def test_component_count_must_match(self, rigid_wedge):
        with pytest.raises(IncompatibleVariablesError):
            rigid_target_traces(self.tangential() * 2, self.target())
