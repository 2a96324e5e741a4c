"""
Example usage of the reflexcr library
"""
import numpy as np

from reflexcr.layers import (
    ChartBoxes,
    Cone,
    GenericManifold,
    HalfDiscFunction,
    MultiSeries,
    NormalizationMap,
    Wedge,
    WedgeFunction,
    edge_of_wedge_extend,
    edge_trace,
    extend_cr_function,
    general_reflect,
    kernel_property_report,
    series_from_name,
)
from reflexcr.layers.analytic_core import AnalyticFunction, ComplexSpace, compare
from reflexcr.layers.eow import EOWDomain
from reflexcr.layers.reflection import half_disc_domain


def reflect_exponential():
    """Reflect exp(iz) from the upper half disc using Im exp(ix) = sin x"""
    print("Reflecting exp(iz) across the real axis...")
    f = AnalyticFunction(1, lambda p: np.exp(1j * p[:, 0]), half_disc_domain(), label="exp(iz)")
    F = general_reflect(HalfDiscFunction(f, series_from_name("sin", 64)))
    oracle = AnalyticFunction(1, lambda p: np.exp(1j * p[:, 0]), ComplexSpace(1), label="oracle")
    rng = np.random.default_rng(0)
    z = 0.9 * np.sqrt(rng.uniform(0, 1, 1000)) * np.exp(1j * rng.uniform(np.pi, 2 * np.pi, 1000))
    report = compare(F, oracle, z)
    print(f"✓ max error {report.max_abs_error:.2e}, max CR residual {report.max_cr_residual:.2e}")


def edge_of_the_wedge():
    """Average an entire function over Möbius-kernel images"""
    print("\nEdge-of-the-wedge extension on the model orthant...")
    print(f"  kernel: {kernel_property_report(10_000).summary()}")
    orthant = Cone.orthant(2)

    def g_eval(points):
        return np.exp(points.sum(axis=1) / 4)

    g = AnalyticFunction(2, g_eval, EOWDomain(orthant, 6.0), label="g")
    G = edge_of_wedge_extend(g, NormalizationMap.identity(2), nodes=256)
    w = np.array([[0.3 + 0.2j, -0.1 - 0.4j]])
    print(f"✓ G(w) = {G.at(w[0]):.12f}, g(w) = {g_eval(w)[0]:.12f}")


def extend_from_wedge():
    """Extend F0 = exp(zw) + w^2 from the wedge over Im w = |z|^2"""
    print("\nCR extension over Im w = |z|^2...")
    names = ("x1", "y1", "s1")
    phi = MultiSeries.from_literal(names, [([2, 0, 0], 1.0), ([0, 2, 0], 1.0)])
    manifold = GenericManifold(1, 1, [phi])
    wedge = Wedge(manifold, Cone([[1.0]]))

    def ambient(points):
        z, w = points[:, 0], points[:, 1]
        return np.exp(z * w) + w ** 2

    f = AnalyticFunction(2, ambient, wedge.closure(), label="F0")
    trace = edge_trace(manifold, lambda z, w: (z[0] * w[0]).exp() + w[0] ** 2)
    wf = WedgeFunction(f, wedge, trace)
    oracle = AnalyticFunction(2, ambient, ComplexSpace(2), label="F0")
    result = extend_cr_function(wf, ChartBoxes(0.2, 0.2), nodes=128, oracle=oracle, grid_points=200)
    print(f"✓ stages: {', '.join(result.stages)}")
    print(f"✓ {result.report.summary()}")


if __name__ == "__main__":
    print("=" * 50)
    print("reflexcr Example Usage")
    print("=" * 50)

    reflect_exponential()
    edge_of_the_wedge()
    extend_from_wedge()

    print("\n" + "=" * 50)
    print("Example completed!")
    print("=" * 50)
