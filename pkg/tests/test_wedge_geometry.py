import numpy as np
import pytest

from reflexcr.exceptions import ConeError, SeriesError, SingularMatrixError
from reflexcr.layers.series import MultiSeries
from reflexcr.layers.wedge_geometry import (
    Cone,
    GenericManifold,
    Wedge,
    certify_chart_wedge,
    chart_variables,
    cone_containment_check,
    verify_chart_wedge,
    wedge_contains,
)

from .helpers import sphere_graph


class TestCone:
    def test_orthant_membership(self):
        cone = Cone.orthant(2)
        assert cone.contains([1.0, 2.0])
        assert not cone.contains([1.0, -0.1])
        assert not cone.contains([0.0, 1.0])
        assert cone.contains_many(np.array([[0.0, 1.0]]), closed=True)[0]

    def test_not_pointed(self):
        with pytest.raises(ConeError):
            Cone([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])

    def test_empty_interior(self):
        with pytest.raises(ConeError):
            Cone([[1.0, 0.0], [2.0, 0.0]])

    def test_more_generators_than_dimension(self):
        cone = Cone([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        assert cone.contains([1.0, 0.5])
        assert not cone.contains([-0.1, 1.0])

    def test_shrink_stays_inside(self, rng):
        cone = Cone.orthant(3)
        sub = cone.shrink(0.5)
        assert np.all(cone.contains_many(sub.unit_samples(500, rng)))
        with pytest.raises(ConeError):
            cone.shrink(1.5)


class TestContainment:
    def test_identity(self):
        report = cone_containment_check(Cone.orthant(2), np.eye(2), Cone.orthant(2))
        assert report.passed
        assert report.min_margin > 0

    def test_reversed_matrix(self):
        report = cone_containment_check(Cone.orthant(2), -np.eye(2), Cone.orthant(2), samples=200)
        assert not report.passed
        assert report.violations == 200

    def test_singular_matrix(self):
        with pytest.raises(SingularMatrixError):
            cone_containment_check(Cone.orthant(2), np.zeros((2, 2)), Cone.orthant(2))

    def test_dimension_mismatch(self):
        with pytest.raises(ConeError):
            cone_containment_check(Cone.orthant(2), np.eye(3), Cone.orthant(2))

    def test_narrow_cone_inside_the_orthant_reports_its_angle(self):
        # 10 degree cone around the diagonal, 35 degrees from either axis
        angles = np.radians([35.0, 55.0])
        narrow = Cone(np.stack([np.cos(angles), np.sin(angles)], axis=1))
        report = cone_containment_check(narrow, np.eye(2), Cone.orthant(2), samples=1000)
        assert report.passed
        assert report.margin_degrees >= 35.0 - 1e-9
        assert report.margin_degrees == pytest.approx(35.0, abs=0.5)


class TestGenericManifold:
    def test_graph_with_linear_term(self):
        names = chart_variables(1, 1)
        with pytest.raises(SeriesError):
            GenericManifold(1, 1, [MultiSeries.from_literal(names, [([1, 0, 0], 1.0)])])

    def test_graph_in_wrong_variables(self):
        with pytest.raises(SeriesError):
            GenericManifold(1, 1, [MultiSeries.from_literal(("x", "y"), [([2, 0], 1.0)])])

    def test_chart_lies_on_the_manifold(self, rigid_manifold, rng):
        z = 0.3 * (rng.uniform(-1, 1, (50, 1)) + 1j * rng.uniform(-1, 1, (50, 1)))
        s = rng.uniform(-0.3, 0.3, (50, 1))
        assert np.max(np.abs(rigid_manifold.rho(rigid_manifold.chart(z, s)))) < 1e-15

    def test_extended_chart_inverse(self, rng):
        manifold = GenericManifold(1, 1, [sphere_graph(extra=[([1, 0, 1], 1.0)])])
        z = 0.2 * (rng.uniform(-1, 1, (30, 1)) + 1j * rng.uniform(-1, 1, (30, 1)))
        w = 0.2 * (rng.uniform(-1, 1, (30, 1)) + 1j * rng.uniform(0, 1, (30, 1)))
        z_back, w_back = manifold.extended_chart_inverse(manifold.extended_chart(z, w))
        assert np.allclose(z_back, z)
        assert np.allclose(w_back, w, atol=1e-11)

    def test_extended_chart_agrees_with_the_chart_on_real_parameters(self, rng):
        manifold = GenericManifold(1, 1, [sphere_graph(extra=[([1, 0, 1], 1.0)])])
        z = 0.3 * (rng.uniform(-1, 1, (40, 1)) + 1j * rng.uniform(-1, 1, (40, 1)))
        s = rng.uniform(-0.3, 0.3, (40, 1))
        assert np.array_equal(manifold.extended_chart(z, s.astype(complex)), manifold.chart(z, s))


class TestWedge:
    def test_membership(self, rigid_wedge):
        assert wedge_contains(rigid_wedge, [0.1, 0.05 + 0.1j])
        assert not wedge_contains(rigid_wedge, [0.1, 0.05])

    def test_closure_contains_the_edge(self, rigid_wedge, rigid_manifold):
        edge = rigid_manifold.chart([[0.1]], [[0.05]])
        assert not rigid_wedge.mask(edge)[0]
        assert rigid_wedge.closure().mask(edge)[0]

    def test_malformed_point_is_not_a_member(self, rigid_wedge):
        assert not wedge_contains(rigid_wedge, [0.1, 0.2, 0.3])
        assert not wedge_contains(rigid_wedge, [np.nan, 0.1j])

    def test_cone_dimension_must_match(self, rigid_manifold):
        with pytest.raises(ConeError):
            Wedge(rigid_manifold, Cone.orthant(2))

    def test_membership_is_monotone_in_the_cone(self, rng):
        names = chart_variables(1, 2)
        graph = [
            MultiSeries.from_literal(names, [([2, 0, 0, 0], 1.0), ([0, 2, 0, 0], 1.0)]),
            MultiSeries.from_literal(names, [([1, 1, 0, 0], 1.0)]),
        ]
        manifold = GenericManifold(1, 2, graph)
        outer = Wedge(manifold, Cone.orthant(2))
        inner = Wedge(manifold, Cone.orthant(2).shrink(0.5))
        z = 0.3 * (rng.uniform(-1, 1, (2000, 1)) + 1j * rng.uniform(-1, 1, (2000, 1)))
        s = rng.uniform(-0.3, 0.3, (2000, 2))
        points = manifold.chart(z, s)
        points[:, 1:] += 1j * rng.uniform(-0.3, 0.3, (2000, 2))
        inside_inner = inner.mask(points)
        assert np.any(inside_inner)
        assert np.all(outer.mask(points)[inside_inner])


class TestChartWedge:
    def twisted(self):
        # phi = |z|^2 + s Re z
        manifold = GenericManifold(1, 1, [sphere_graph(extra=[([1, 0, 1], 1.0)])])
        return manifold, Wedge(manifold, Cone([[1.0]]))

    def test_twisted_graph_has_no_violations(self):
        manifold, wedge = self.twisted()
        report = verify_chart_wedge(manifold, wedge, wedge.cone.shrink(0.5), 0.05, 0.05, samples=100_000)
        assert report.passed
        assert report.violations == 0

    def test_opposite_subcone_fails_at_every_radius(self):
        manifold, wedge = self.twisted()
        report = certify_chart_wedge(manifold, wedge, Cone([[-1.0]]), 0.05, 0.05, samples=1000)
        assert not report.passed
        assert 1e-4 < report.z_radius < 2e-4

    def test_certify_returns_the_first_passing_report(self):
        manifold, wedge = self.twisted()
        report = certify_chart_wedge(manifold, wedge, Cone([[1.0]]), 0.05, 0.05, samples=1000)
        assert report.passed
        assert report.z_radius == 0.05

    def test_parameters_outside_the_chart_box_count_as_violations(self):
        manifold = GenericManifold(1, 1, [sphere_graph()], z_radius=1.0, w_radius=1.0)
        wedge = Wedge(manifold, Cone([[1.0]]))
        report = verify_chart_wedge(manifold, wedge, Cone([[1.0]]), 0.5, 0.9, samples=2000)
        assert not report.passed
        assert report.violations > 0
        assert report.worst_margin == -1.0

    def test_certify_shrinks_past_a_box_that_overflows_the_chart(self):
        manifold = GenericManifold(1, 1, [sphere_graph()], z_radius=1.0, w_radius=1.0)
        wedge = Wedge(manifold, Cone([[1.0]]))
        report = certify_chart_wedge(manifold, wedge, Cone([[1.0]]), 0.5, 0.9, samples=2000)
        assert report.passed
        assert report.z_radius == pytest.approx(0.25)
        assert report.s_radius == pytest.approx(0.45)
