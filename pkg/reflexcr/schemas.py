"""
Pydantic models for scenario files and run reports
"""
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union
import json

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    TypeAdapter,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)

from reflexcr.exceptions import ScenarioError
from reflexcr.expressions import coordinate_names, parse_holomorphic
from reflexcr.layers.series import MultiSeries, PowerSeries1D, series_from_name
from reflexcr.layers.wedge_geometry import chart_variables

Term = Tuple[List[int], float]
Generators = List[List[float]]

KINDS = ("reflect", "harmonic", "curve", "eow", "crextend", "verify")


def _holomorphic(value: Optional[str], variables, aliases=None) -> Optional[str]:
    if value is None:
        return value
    try:
        parse_holomorphic(value, variables, aliases)
    except ScenarioError as exc:
        raise ValueError(str(exc)) from exc
    return value


def _generators(value: Optional[Generators], d: Optional[int]) -> Optional[Generators]:
    if value is None or d is None:
        return value
    if not value:
        raise ValueError("at least one generator is required")
    for generator in value:
        if len(generator) != d:
            raise ValueError(f"generator {generator} does not have {d} entries")
    return value


class TraceSpec(BaseModel):
    """One-variable series: a named series, explicit coefficients, or derived from the function"""

    model_config = ConfigDict(extra="forbid")

    name: Optional[Literal["zero", "identity", "exp", "sin", "cos", "sinh", "cosh", "geometric"]] = None
    coefficients: Optional[List[float]] = None
    derive: bool = False
    order: int = Field(64, ge=0, le=1024, description="Truncation order")
    radius: float = Field(1.0, gt=0, description="Declared radius of convergence")

    @model_validator(mode="after")
    def check_one_source(self):
        sources = sum([self.name is not None, self.coefficients is not None, self.derive])
        if sources != 1:
            raise ValueError("give exactly one of 'name', 'coefficients' or 'derive'")
        return self

    def build(self) -> PowerSeries1D:
        """Series for a named or explicit trace (derived traces are built by the runner)"""
        if self.name is not None:
            return series_from_name(self.name, self.order, self.radius)
        if self.coefficients is not None:
            return PowerSeries1D(self.coefficients, self.radius)
        raise ValueError("derived traces need the function they describe")


class MultiTraceSpec(BaseModel):
    """Edge trace in the chart variables x, y, s: literal terms or derived from the function"""

    model_config = ConfigDict(extra="forbid")

    terms: Optional[List[Term]] = None
    derive: bool = False
    order: int = Field(16, ge=0, le=64)
    polyradius: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_one_source(self):
        if (self.terms is not None) == self.derive:
            raise ValueError("give exactly one of 'terms' or 'derive'")
        return self


def _derived_trace() -> TraceSpec:
    return TraceSpec(derive=True)


class ScenarioBase(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field("scenario", pattern=r"^[A-Za-z0-9_.-]+$", description="Stem of the output files")
    seed: int = Field(0, ge=0)
    samples: int = Field(1000, gt=0, description="Verification grid size")
    nodes: int = Field(256, ge=1, description="Quadrature nodes")
    tolerance: float = Field(1e-10, gt=0, description="Bound on the maximum absolute error")
    cr_tolerance: float = Field(1e-6, gt=0, description="Bound on the maximum CR residual")


class ReflectScenario(ScenarioBase):
    kind: Literal["reflect"]
    f: str
    trace: TraceSpec = Field(default_factory=_derived_trace)
    method: Literal["closed-form", "two-step", "classical"] = "closed-form"
    radius: float = Field(0.9, gt=0, le=1)
    oracle: Optional[str] = None

    @field_validator("f", "oracle")
    @classmethod
    def check_one_variable(cls, value):
        return _holomorphic(value, ["z"])


class HarmonicScenario(ScenarioBase):
    kind: Literal["harmonic"]
    h: str = Field(..., description="Holomorphic h; the harmonic function is Re h or Im h")
    part: Literal["re", "im"] = "re"
    trace: TraceSpec = Field(default_factory=_derived_trace)
    via_holomorphic: bool = False
    radius: float = Field(0.8, gt=0, le=1)
    tolerance: float = Field(1e-12, gt=0)
    laplacian_tolerance: float = Field(1e-4, gt=0)

    @field_validator("h")
    @classmethod
    def check_one_variable(cls, value):
        return _holomorphic(value, ["z"])


class CurveScenario(ScenarioBase):
    kind: Literal["curve"]
    f: str
    gamma: TraceSpec
    trace: TraceSpec = Field(default_factory=_derived_trace)
    radius: float = Field(0.2, gt=0, le=1)
    side_radius: float = Field(2.0, gt=0, description="Radius of the region above the curve where f is given")
    tolerance: float = Field(1e-6, gt=0)
    oracle: Optional[str] = None

    @field_validator("f", "oracle")
    @classmethod
    def check_one_variable(cls, value):
        return _holomorphic(value, ["z"])

    @field_validator("gamma")
    @classmethod
    def check_explicit_curve(cls, value: TraceSpec):
        if value.derive:
            raise ValueError("the curve must be given by name or coefficients")
        return value


class EOWScenario(ScenarioBase):
    kind: Literal["eow"]
    d: int = Field(..., ge=1)
    g: str
    cone: Generators
    domain_radius: float = Field(6.0, gt=0)
    matrix: Optional[List[List[float]]] = None
    sub_cone: Optional[Generators] = None
    radius: float = Field(0.5, gt=0, le=1, description="Radius of the model polydisc sampled for verification")
    sweep: Optional[List[int]] = None
    kernel_samples: int = Field(0, ge=0)
    oracle: Optional[str] = None

    @field_validator("g", "oracle")
    @classmethod
    def check_edge_variables(cls, value, info: ValidationInfo):
        d = info.data.get("d")
        if d is None:
            return value
        variables, aliases = coordinate_names(0, d)
        return _holomorphic(value, variables, aliases)

    @field_validator("cone", "sub_cone")
    @classmethod
    def check_dimension(cls, value, info: ValidationInfo):
        return _generators(value, info.data.get("d"))

    @field_validator("matrix")
    @classmethod
    def check_square(cls, value, info: ValidationInfo):
        d = info.data.get("d")
        if value is not None and d is not None:
            if len(value) != d or any(len(row) != d for row in value):
                raise ValueError(f"matrix must be {d} x {d}")
        return value


class ManifoldScenario(ScenarioBase):
    n: int = Field(..., ge=0)
    d: int = Field(..., ge=1)
    phi: List[List[Term]] = Field(..., description="Graph components as lists of [exponents, coefficient] terms")
    cone: Generators
    sub_cone: Optional[Generators] = None
    manifold_z_radius: float = Field(1.0, gt=0)
    manifold_w_radius: float = Field(1.0, gt=0)

    @field_validator("phi")
    @classmethod
    def check_graph(cls, value, info: ValidationInfo):
        n, d = info.data.get("n"), info.data.get("d")
        if n is None or d is None:
            return value
        if len(value) != d:
            raise ValueError(f"expected {d} graph components, got {len(value)}")
        width = len(chart_variables(n, d))
        for component in value:
            for exponents, _ in component:
                if len(exponents) != width or min(exponents, default=0) < 0:
                    raise ValueError(f"exponents {exponents} must be {width} non-negative integers")
        return value

    @field_validator("cone", "sub_cone")
    @classmethod
    def check_dimension(cls, value, info: ValidationInfo):
        return _generators(value, info.data.get("d"))

    def graph_components(self, order: Optional[int] = None) -> List[MultiSeries]:
        names = chart_variables(self.n, self.d)
        return [MultiSeries.from_literal(names, terms, order) for terms in self.phi]


class CRExtendScenario(ManifoldScenario):
    kind: Literal["crextend"]
    f: str
    trace: MultiTraceSpec = Field(default_factory=lambda: MultiTraceSpec(derive=True))
    oracle: Optional[str] = None
    z_radius: float = Field(0.2, gt=0)
    w_radius: float = Field(0.2, gt=0)
    chart_samples: int = Field(20_000, gt=0)
    tolerance: float = Field(1e-8, gt=0)

    @field_validator("f", "oracle")
    @classmethod
    def check_ambient_variables(cls, value, info: ValidationInfo):
        n, d = info.data.get("n"), info.data.get("d")
        if n is None or d is None:
            return value
        variables, aliases = coordinate_names(n, d)
        return _holomorphic(value, variables, aliases)


class VerifyScenario(ManifoldScenario):
    kind: Literal["verify"]
    shrink_factor: float = Field(0.5, gt=0, lt=1)
    z_radius: float = Field(0.05, gt=0)
    s_radius: float = Field(0.05, gt=0)
    samples: int = Field(100_000, gt=0)
    certify: bool = False


Scenario = Annotated[
    Union[ReflectScenario, HarmonicScenario, CurveScenario, EOWScenario, CRExtendScenario, VerifyScenario],
    Field(discriminator="kind"),
]
_SCENARIO_ADAPTER = TypeAdapter(Scenario)


def _field_path(location: Tuple[Any, ...]) -> str:
    parts = [str(part) for part in location]
    if parts and parts[0] in KINDS:
        parts = parts[1:]
    return ".".join(parts) or "kind"


def parse_scenario(text: str) -> Scenario:
    """Validate scenario JSON; every failure is a ScenarioError naming the line or field"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise ScenarioError("a scenario must be a JSON object")
    try:
        return _SCENARIO_ADAPTER.validate_python(data)
    except ValidationError as exc:
        error = exc.errors()[0]
        raise ScenarioError(error["msg"], field=_field_path(tuple(error["loc"]))) from exc


def load_scenario(path: Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from exc
    return parse_scenario(text)


class CheckRecord(BaseModel):
    value: Optional[float] = Field(None, description="Measured quantity")
    limit: float = Field(..., description="Largest accepted value")
    passed: bool


class RunReport(BaseModel):
    """Summary written next to the grid; timings are kept out of files"""

    scenario: Dict[str, Any]
    kind: str
    status: Literal["PASS", "FAIL"]
    exit_code: int
    stages: List[str] = Field(default_factory=list)
    checks: Dict[str, CheckRecord] = Field(default_factory=dict)
    residuals: Dict[str, Optional[float]] = Field(default_factory=dict)
    metrics: Dict[str, Any] = Field(default_factory=dict)
    failed_stage: Optional[str] = None
    error: Optional[str] = None
    partial: bool = False
    outputs: List[str] = Field(default_factory=list)
    timings: Dict[str, float] = Field(default_factory=dict, exclude=True)
