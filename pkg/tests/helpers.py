from reflexcr.layers.series import MultiSeries
from reflexcr.layers.wedge_geometry import chart_variables


def sphere_graph(n: int = 1, extra=(), polyradius=None) -> MultiSeries:
    """|z|^2 in the chart variables of C^n x C, plus optional literal terms"""
    names = chart_variables(n, 1)
    terms = []
    for j in range(n):
        x, y = [0] * len(names), [0] * len(names)
        x[j] = 2
        y[n + j] = 2
        terms += [(x, 1.0), (y, 1.0)]
    return MultiSeries.from_literal(names, terms + list(extra), polyradius=polyradius)
