import numpy as np
import pytest

from reflexcr.config import settings
from reflexcr.exceptions import DomainViolationError, NonFiniteValueError
from reflexcr.layers import analytic_core
from reflexcr.layers.analytic_core import (
    AnalyticFunction,
    ComplexSpace,
    DomainBox,
    UnionDomain,
    as_points,
    compare,
    cr_residual,
    cr_residuals,
    discrete_laplacian,
    evaluate_on_grid,
    polynomial_function,
)


def entire(fn, arity=1):
    return AnalyticFunction(arity, fn, ComplexSpace(arity))


class TestEvaluation:
    def test_square_at_i(self):
        f = polynomial_function({(2,): 1.0}, 1)
        assert f.at(1j) == pytest.approx(-1.0)

    def test_product_of_two_variables(self):
        f = polynomial_function({(1, 1): 1.0}, 2)
        assert f.at([1 + 1j, 2]) == pytest.approx(2 + 2j)

    def test_scalar_result_is_broadcast(self):
        one = entire(lambda points: 1.0)
        assert np.array_equal(one([0.1, 0.2, 0.3]), np.ones(3, dtype=complex))

    def test_outside_domain_names_the_point(self):
        f = AnalyticFunction(1, lambda p: p[:, 0], DomainBox.disc(1.0))
        with pytest.raises(DomainViolationError) as info:
            f([0.5, 2.0])
        assert info.value.point == (2 + 0j,)

    def test_non_finite_input_is_rejected(self):
        with pytest.raises(NonFiniteValueError):
            as_points([np.nan], 1)

    def test_arity_mismatch(self):
        with pytest.raises(ValueError):
            AnalyticFunction(2, lambda p: p[:, 0], ComplexSpace(1))


class TestDomains:
    def test_half_plane_constraint(self):
        upper = DomainBox.disc(1.0, "upper")
        assert upper.contains(0.5j)
        assert upper.contains(0.3)
        assert not upper.contains(-0.5j)

    def test_union(self):
        union = UnionDomain([DomainBox.disc(1.0, "upper"), DomainBox.disc(0.5)])
        mask = union.mask(as_points([0.9j, -0.4j, -0.9j], 1))
        assert mask.tolist() == [True, True, False]

    def test_union_rejects_mixed_arity(self):
        with pytest.raises(ValueError):
            UnionDomain([ComplexSpace(1), ComplexSpace(2)])


class TestGrids:
    def test_duplicate_points_are_rejected(self):
        with pytest.raises(ValueError):
            evaluate_on_grid(entire(lambda p: p[:, 0]), [0.1, 0.1])

    def test_chunked_threads_match_serial(self, monkeypatch):
        f = entire(lambda p: np.exp(p[:, 0]))
        points = np.linspace(-1, 1, 50) + 0.25j
        serial = evaluate_on_grid(f, points, threads=1)
        monkeypatch.setattr(settings, "chunk_size", 7)
        monkeypatch.setattr(settings, "threads", 2)
        parallel = evaluate_on_grid(f, points, threads=2)
        assert np.array_equal(serial.values, parallel.values)

    def test_threads_never_exceed_the_configured_cap(self, monkeypatch):
        def no_pool(*args, **kwargs):
            raise AssertionError("thread pool used above the cap")

        monkeypatch.setattr(settings, "chunk_size", 7)
        monkeypatch.setattr(settings, "threads", 1)
        monkeypatch.setattr(analytic_core, "Parallel", no_pool)
        grid = evaluate_on_grid(entire(lambda p: p[:, 0] ** 2), np.linspace(-1, 1, 50), threads=8)
        assert len(grid) == 50


class TestCauchyRiemann:
    def test_polynomial_is_holomorphic(self):
        assert cr_residual(polynomial_function({(3,): 1.0}, 1), 0.3 + 0.1j) < 1e-8

    def test_conjugation_has_unit_residual(self):
        conj = entire(lambda p: np.conj(p[:, 0]))
        assert cr_residual(conj, 0.0) == pytest.approx(1.0, abs=1e-9)

    def test_constant(self):
        assert cr_residual(entire(lambda p: 2.5 - 1j), 0.4j) < 1e-12

    def test_exponential_on_a_grid(self, rng):
        points = rng.uniform(-1, 1, 100) + 1j * rng.uniform(-1, 1, 100)
        assert np.max(cr_residuals(entire(lambda p: np.exp(p[:, 0])), points)) < 1e-8

    def test_stencil_must_fit_in_domain(self):
        f = AnalyticFunction(1, lambda p: p[:, 0], DomainBox.disc(1.0))
        with pytest.raises(DomainViolationError):
            cr_residual(f, 1.0)

    def test_only_requested_coordinates(self):
        # holomorphic in z1, anti-holomorphic in z2
        f = entire(lambda p: p[:, 0] + np.conj(p[:, 1]), arity=2)
        assert cr_residuals(f, [[0.1, 0.2]], coordinates=[0])[0] < 1e-10
        assert cr_residuals(f, [[0.1, 0.2]])[0] == pytest.approx(1.0, abs=1e-9)


def test_compare_against_oracle(rng):
    f = entire(lambda p: p[:, 0] ** 2)
    oracle = polynomial_function({(2,): 1.0}, 1)
    points = rng.uniform(-1, 1, 20) + 1j * rng.uniform(-1, 1, 20)
    report = compare(f, oracle, points)
    assert report.max_abs_error < 1e-14
    assert report.max_cr_residual < 1e-8
    assert report.summary()["points"] == 20


def test_compare_without_oracle():
    report = compare(entire(lambda p: p[:, 0]), None, [0.1, 0.2])
    assert report.max_abs_error is None
    assert report.abs_errors is None


def test_discrete_laplacian():
    z = np.array([0.1 + 0.2j, -0.3 + 0.05j])
    assert np.allclose(discrete_laplacian(lambda z: z.real ** 2 + z.imag ** 2, z), 4.0, atol=1e-6)
    assert np.allclose(discrete_laplacian(lambda z: z.real ** 2 - z.imag ** 2, z), 0.0, atol=1e-6)
