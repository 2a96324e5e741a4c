"""
reflexcr Layers
"""
from reflexcr.layers.analytic_core import (
    AnalyticFunction,
    ComplexSpace,
    Domain,
    DomainBox,
    GridSample,
    Provenance,
    ResidualReport,
    UnionDomain,
    compare,
    complex_vector,
    cr_residual,
    cr_residuals,
    discrete_laplacian,
    evaluate_on_grid,
    polynomial_function,
)
from reflexcr.layers.series import (
    MultiSeries,
    PowerSeries1D,
    SeriesPair,
    arith,
    complexify,
    compose,
    estimate_radius,
    fit_trace,
    revert,
    series_from_name,
)
from reflexcr.layers.reflection import (
    CurveSideDomain,
    HalfDiscFunction,
    HarmonicExtension,
    classical_reflect,
    curve_flatten_reflect,
    general_reflect,
    half_disc_domain,
    harmonic_reflect,
    harmonic_reflect_via_holomorphic,
)
from reflexcr.layers.wedge_geometry import (
    ChartWedgeReport,
    Cone,
    ContainmentReport,
    GenericManifold,
    Wedge,
    certify_chart_wedge,
    chart_variables,
    cone_containment_check,
    verify_chart_wedge,
    wedge_contains,
)
from reflexcr.layers.eow import (
    MOBIUS_C,
    EOWDomain,
    KernelPropertyReport,
    NormalizationMap,
    edge_of_wedge_extend,
    kernel_map,
    kernel_property_report,
    mobius_kernel,
    mobius_kernel_imag,
    sweep_nodes,
)
from reflexcr.layers.cr_extension import (
    ChartBoxes,
    ExtensionResult,
    RigidManifold,
    UniquenessReport,
    Verdict,
    WedgeFunction,
    build_reflected,
    complexify_trace,
    edge_trace,
    extend,
    extend_cr_function,
    extend_rigid_target,
    pull_back,
    reassemble,
    rigid_target_traces,
    uniqueness_check,
)

__all__ = [
    "AnalyticFunction",
    "ComplexSpace",
    "Domain",
    "DomainBox",
    "GridSample",
    "Provenance",
    "ResidualReport",
    "UnionDomain",
    "compare",
    "complex_vector",
    "cr_residual",
    "cr_residuals",
    "discrete_laplacian",
    "evaluate_on_grid",
    "polynomial_function",
    "MultiSeries",
    "PowerSeries1D",
    "SeriesPair",
    "arith",
    "complexify",
    "compose",
    "estimate_radius",
    "fit_trace",
    "revert",
    "series_from_name",
    "CurveSideDomain",
    "HalfDiscFunction",
    "HarmonicExtension",
    "classical_reflect",
    "curve_flatten_reflect",
    "general_reflect",
    "half_disc_domain",
    "harmonic_reflect",
    "harmonic_reflect_via_holomorphic",
    "ChartWedgeReport",
    "Cone",
    "ContainmentReport",
    "GenericManifold",
    "Wedge",
    "certify_chart_wedge",
    "chart_variables",
    "cone_containment_check",
    "verify_chart_wedge",
    "wedge_contains",
    "MOBIUS_C",
    "EOWDomain",
    "KernelPropertyReport",
    "NormalizationMap",
    "edge_of_wedge_extend",
    "kernel_map",
    "kernel_property_report",
    "mobius_kernel",
    "mobius_kernel_imag",
    "sweep_nodes",
    "ChartBoxes",
    "ExtensionResult",
    "RigidManifold",
    "UniquenessReport",
    "Verdict",
    "WedgeFunction",
    "build_reflected",
    "complexify_trace",
    "edge_trace",
    "extend",
    "extend_cr_function",
    "extend_rigid_target",
    "pull_back",
    "reassemble",
    "rigid_target_traces",
    "uniqueness_check",
]
