"""
Layer 2: Series
Truncated real-coefficient power series in one or several real variables and
their complexification. Complex-coefficient series are carried as pairs of
real series.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union
import logging

import numpy as np
from numpy.polynomial import polynomial as npoly

from reflexcr.config import settings
from reflexcr.exceptions import (
    IncompatibleVariablesError,
    NonInvertibleSeriesError,
    SeriesError,
    UnknownVariableError,
)
from reflexcr.layers.analytic_core import (
    AnalyticFunction,
    DomainBox,
    Provenance,
)

logger = logging.getLogger(__name__)

# nonzero coefficients below this count make a series a polynomial for the root test
_ROOT_TEST_MIN_TERMS = 16
# pairwise products handled per vectorised block in MultiSeries multiplication
_PRODUCT_BLOCK = 2_000_000
# monomial values held per block in MultiSeries evaluation
_EVALUATION_BLOCK = 4_000_000


def _real_coefficients(values, what: str) -> np.ndarray:
    array = np.asarray(values)
    if np.iscomplexobj(array):
        if np.any(array.imag != 0):
            raise SeriesError(f"{what} must have real coefficients; split complex data into a SeriesPair")
        array = array.real
    array = np.asarray(array, dtype=float)
    if not np.all(np.isfinite(array)):
        raise SeriesError(f"{what} has non-finite coefficients")
    return array


def _truncated_product(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    return np.convolve(a, b)[: order + 1]


def _compose_coefficients(outer: np.ndarray, inner: np.ndarray, order: int) -> np.ndarray:
    """Horner composition outer(inner(x)) truncated at ``order``"""
    dtype = np.result_type(outer, inner)
    result = np.zeros(order + 1, dtype=dtype)
    inner = inner[: order + 1]
    for coefficient in outer[: order + 1][::-1]:
        result = _truncated_product(result, inner, order)
        if result.size < order + 1:
            result = np.pad(result, (0, order + 1 - result.size))
        result[0] += coefficient
    return result


def _revert_coefficients(coefficients: np.ndarray, order: int) -> np.ndarray:
    """Compositional inverse q with p(q(y)) = y through ``order``"""
    if abs(coefficients[0]) > 1e-14:
        raise NonInvertibleSeriesError(f"series reversion needs p(0)=0, got {coefficients[0]}")
    if coefficients.size < 2 or abs(coefficients[1]) < 1e-14:
        raise NonInvertibleSeriesError("series reversion needs p'(0) != 0")
    linear = coefficients[1]
    inverse = np.zeros(order + 1, dtype=coefficients.dtype)
    inverse[1] = 1 / linear
    for n in range(2, order + 1):
        composed = _compose_coefficients(coefficients[: n + 1], inverse[: n + 1], n)
        inverse[n] = -composed[n] / linear
    return inverse


def _horner(coefficients: np.ndarray, x: np.ndarray) -> np.ndarray:
    result = np.zeros_like(x, dtype=np.result_type(coefficients, x))
    for coefficient in coefficients[::-1]:
        result = result * x + coefficient
    return result


@dataclass(frozen=True, eq=False)
class PowerSeries1D:
    """Real power series sum a_n x^n truncated at order N with declared radius"""

    coefficients: np.ndarray
    radius: float = 1.0

    def __post_init__(self):
        coefficients = np.atleast_1d(_real_coefficients(self.coefficients, "PowerSeries1D"))
        if coefficients.ndim != 1:
            raise SeriesError("PowerSeries1D coefficients must be one-dimensional")
        if not self.radius > 0:
            raise SeriesError(f"declared radius must be positive, got {self.radius}")
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def order(self) -> int:
        return self.coefficients.size - 1

    @classmethod
    def zero(cls, order: Optional[int] = None, radius: float = 1.0) -> "PowerSeries1D":
        return cls(np.zeros((settings.series_order if order is None else order) + 1), radius)

    def is_zero(self) -> bool:
        return not np.any(self.coefficients)

    def __call__(self, x):
        return _horner(self.coefficients, np.asarray(x))

    def _pad(self, other: "PowerSeries1D") -> Tuple[np.ndarray, np.ndarray, int]:
        order = min(self.order, other.order)
        return self.coefficients[: order + 1], other.coefficients[: order + 1], order

    def __add__(self, other):
        if isinstance(other, PowerSeries1D):
            a, b, _ = self._pad(other)
            return PowerSeries1D(a + b, min(self.radius, other.radius))
        coefficients = self.coefficients.copy()
        coefficients[0] += float(other)
        return PowerSeries1D(coefficients, self.radius)

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries1D(-self.coefficients, self.radius)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PowerSeries1D):
            a, b, order = self._pad(other)
            return PowerSeries1D(_truncated_product(a, b, order), min(self.radius, other.radius))
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, factor: float) -> "PowerSeries1D":
        return PowerSeries1D(self.coefficients * float(factor), self.radius)

    def derivative(self) -> "PowerSeries1D":
        if self.order == 0:
            return PowerSeries1D(np.zeros(1), self.radius)
        return PowerSeries1D(npoly.polyder(self.coefficients), self.radius)

    def compose(self, inner: "PowerSeries1D") -> "PowerSeries1D":
        order = min(self.order, inner.order)
        return PowerSeries1D(_compose_coefficients(self.coefficients, inner.coefficients, order), inner.radius)

    def to_multi(self, variable: str = "x") -> "MultiSeries":
        exponents = np.arange(self.order + 1).reshape(-1, 1)
        return MultiSeries.build((variable,), exponents, self.coefficients, self.order, [self.radius])


def series_from_name(name: str, order: Optional[int] = None, radius: float = 1.0) -> PowerSeries1D:
    """Named Taylor series at 0 (sin, cos, exp, sinh, cosh, geometric, identity, zero)"""
    order = settings.series_order if order is None else order
    n = np.arange(order + 1)
    inverse_factorials = np.cumprod(np.concatenate([[1.0], 1.0 / np.arange(1, order + 1)]))
    if name == "zero":
        coefficients = np.zeros(order + 1)
    elif name == "identity":
        coefficients = (n == 1).astype(float)
    elif name == "exp":
        coefficients = inverse_factorials
    elif name == "sin":
        coefficients = np.where(n % 2 == 1, inverse_factorials * (-1.0) ** ((n - 1) // 2), 0.0)
    elif name == "cos":
        coefficients = np.where(n % 2 == 0, inverse_factorials * (-1.0) ** (n // 2), 0.0)
    elif name == "sinh":
        coefficients = np.where(n % 2 == 1, inverse_factorials, 0.0)
    elif name == "cosh":
        coefficients = np.where(n % 2 == 0, inverse_factorials, 0.0)
    elif name == "geometric":
        coefficients = np.ones(order + 1)
    else:
        raise SeriesError(f"unknown named series '{name}'")
    return PowerSeries1D(coefficients, radius)


def estimate_radius(p: PowerSeries1D) -> float:
    """Root-test radius 1/limsup |a_n|^(1/n) over the upper half of the indices, times the safety factor.

    Zero series and polynomials (fewer than 16 nonzero coefficients) get the
    declared radius.
    """
    indices = np.flatnonzero(p.coefficients)
    indices = indices[indices > 0]
    if indices.size < _ROOT_TEST_MIN_TERMS:
        logger.debug(f"series has {indices.size} nonzero terms, using declared radius {p.radius}")
        return p.radius
    tail = indices[indices >= p.order // 2]
    roots = np.abs(p.coefficients[tail]) ** (1.0 / tail)
    limsup = float(np.max(roots))
    if limsup == 0.0:
        return p.radius
    return settings.radius_safety / limsup


def fit_trace(f: AnalyticFunction, degree: int, radius: float, samples: int = 201) -> PowerSeries1D:
    """Least-squares polynomial fit of Im f on (-radius, radius). Approximate."""
    logger.warning(
        f"fitting trace of {f.label} by least squares (degree {degree}); result is approximate"
    )
    x = np.linspace(-radius, radius, samples)
    values = f(x.astype(complex)).imag
    coefficients = npoly.polyfit(x, values, degree)
    return PowerSeries1D(coefficients, radius)


@dataclass(frozen=True, eq=False)
class MultiSeries:
    """Real series in named real variables, truncated at total degree ``order``.

    Terms are held sparsely as an exponent matrix (terms x variables) and a
    coefficient vector.
    """

    variables: Tuple[str, ...]
    exponents: np.ndarray
    coefficients: np.ndarray
    order: int
    polyradius: np.ndarray = field(default=None)

    def __post_init__(self):
        if not self.variables:
            raise SeriesError("MultiSeries needs at least one variable")
        if len(set(self.variables)) != len(self.variables):
            raise SeriesError(f"duplicate variable names {self.variables}")
        polyradius = np.ones(len(self.variables)) if self.polyradius is None else np.asarray(self.polyradius, dtype=float)
        if polyradius.shape != (len(self.variables),) or np.any(polyradius <= 0):
            raise SeriesError(f"polyradius must be {len(self.variables)} positive numbers")
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "polyradius", polyradius)

    @classmethod
    def build(
        cls,
        variables: Sequence[str],
        exponents,
        coefficients,
        order: Optional[int] = None,
        polyradius=None,
    ) -> "MultiSeries":
        """Normalise raw terms: truncate, merge duplicates, drop zeros"""
        order = settings.multi_order if order is None else int(order)
        width = len(variables)
        exponents = np.asarray(exponents, dtype=np.int64).reshape(-1, width)
        coefficients = _real_coefficients(coefficients, "MultiSeries").reshape(-1)
        if exponents.shape[0] != coefficients.shape[0]:
            raise SeriesError("exponent rows and coefficients differ in length")
        if np.any(exponents < 0):
            raise SeriesError("negative exponent in MultiSeries")
        keep = exponents.sum(axis=1) <= order
        exponents, coefficients = exponents[keep], coefficients[keep]
        if exponents.shape[0]:
            base = order + 1
            weights = base ** np.arange(width, dtype=np.int64)
            keys = exponents @ weights
            unique, inverse = np.unique(keys, return_inverse=True)
            summed = np.bincount(inverse.ravel(), weights=coefficients, minlength=unique.size)
            nonzero = summed != 0
            unique, summed = unique[nonzero], summed[nonzero]
            exponents = (unique[:, None] // weights[None, :]) % base
            coefficients = summed
        return cls(tuple(variables), exponents.reshape(-1, width), coefficients, order, polyradius)

    @classmethod
    def from_literal(
        cls,
        variables: Sequence[str],
        pairs: Iterable[Tuple[Sequence[int], float]],
        order: Optional[int] = None,
        polyradius=None,
    ) -> "MultiSeries":
        pairs = list(pairs)
        exponents = [list(index) for index, _ in pairs]
        for index in exponents:
            if len(index) != len(variables):
                raise SeriesError(f"multi-index {index} does not match variables {tuple(variables)}")
        return cls.build(variables, exponents or np.zeros((0, len(variables))), [value for _, value in pairs], order, polyradius)

    @classmethod
    def constant(cls, value: float, variables: Sequence[str], order: Optional[int] = None, polyradius=None) -> "MultiSeries":
        return cls.build(variables, np.zeros((1, len(variables))), [value], order, polyradius)

    @classmethod
    def variable(cls, name: str, variables: Sequence[str], order: Optional[int] = None, polyradius=None) -> "MultiSeries":
        if name not in variables:
            raise UnknownVariableError(f"unknown variable '{name}' in {tuple(variables)}")
        exponent = np.zeros((1, len(variables)))
        exponent[0, list(variables).index(name)] = 1
        return cls.build(variables, exponent, [1.0], order, polyradius)

    @property
    def terms(self) -> Dict[Tuple[int, ...], float]:
        return {tuple(int(e) for e in row): float(value) for row, value in zip(self.exponents, self.coefficients)}

    def coefficient(self, index: Sequence[int]) -> float:
        return self.terms.get(tuple(int(e) for e in index), 0.0)

    def is_zero(self) -> bool:
        return self.coefficients.size == 0

    def constant_term(self) -> float:
        return self.coefficient([0] * len(self.variables))

    # -- arithmetic -------------------------------------------------------

    def _check_compatible(self, other: "MultiSeries") -> None:
        if self.variables != other.variables:
            raise IncompatibleVariablesError(f"variables {self.variables} and {other.variables} differ")

    def _like(self, exponents, coefficients, order: Optional[int] = None, polyradius=None) -> "MultiSeries":
        return MultiSeries.build(
            self.variables,
            exponents,
            coefficients,
            self.order if order is None else order,
            self.polyradius if polyradius is None else polyradius,
        )

    def __add__(self, other):
        if isinstance(other, MultiSeries):
            self._check_compatible(other)
            return self._like(
                np.vstack([self.exponents, other.exponents]),
                np.concatenate([self.coefficients, other.coefficients]),
                min(self.order, other.order),
                np.minimum(self.polyradius, other.polyradius),
            )
        return self + MultiSeries.constant(float(other), self.variables, self.order, self.polyradius)

    __radd__ = __add__

    def __neg__(self):
        return self._like(self.exponents, -self.coefficients)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor: float) -> "MultiSeries":
        return self._like(self.exponents, self.coefficients * float(factor))

    def __mul__(self, other):
        if not isinstance(other, MultiSeries):
            return self.scale(other)
        self._check_compatible(other)
        order = min(self.order, other.order)
        polyradius = np.minimum(self.polyradius, other.polyradius)
        if self.is_zero() or other.is_zero():
            return self._like(np.zeros((0, len(self.variables))), [], order, polyradius)
        left, right = (self, other) if self.coefficients.size <= other.coefficients.size else (other, self)
        right_degree = right.exponents.sum(axis=1)
        left_degree = left.exponents.sum(axis=1)
        block = max(1, _PRODUCT_BLOCK // right.coefficients.size)
        exponent_parts, coefficient_parts = [], []
        for start in range(0, left.coefficients.size, block):
            stop = start + block
            fits = (left_degree[start:stop, None] + right_degree[None, :]) <= order
            i, j = np.nonzero(fits)
            exponent_parts.append(left.exponents[start:stop][i] + right.exponents[j])
            coefficient_parts.append(left.coefficients[start:stop][i] * right.coefficients[j])
        return self._like(np.vstack(exponent_parts), np.concatenate(coefficient_parts), order, polyradius)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "MultiSeries":
        if power < 0:
            raise SeriesError("negative powers of series are not supported")
        result = MultiSeries.constant(1.0, self.variables, self.order, self.polyradius)
        base = self
        while power:
            if power & 1:
                result = result * base
            power >>= 1
            if power:
                base = base * base
        return result

    def derivative(self, name: str) -> "MultiSeries":
        if name not in self.variables:
            raise UnknownVariableError(f"unknown variable '{name}' in {self.variables}")
        column = self.variables.index(name)
        keep = self.exponents[:, column] > 0
        exponents = self.exponents[keep].copy()
        coefficients = self.coefficients[keep] * exponents[:, column]
        exponents[:, column] -= 1
        return self._like(exponents, coefficients, max(self.order - 1, 0))

    def embed(self, variables: Sequence[str], polyradius=None) -> "MultiSeries":
        """Re-express in a superset of variables (new variables appear with exponent 0)"""
        missing = [name for name in self.variables if name not in variables]
        if missing:
            raise IncompatibleVariablesError(f"variables {missing} missing from {tuple(variables)}")
        exponents = np.zeros((self.coefficients.size, len(variables)), dtype=np.int64)
        radius = np.ones(len(variables)) if polyradius is None else np.asarray(polyradius, dtype=float)
        for column, name in enumerate(self.variables):
            target = list(variables).index(name)
            exponents[:, target] = self.exponents[:, column]
            if polyradius is None:
                radius[target] = self.polyradius[column]
        return MultiSeries.build(variables, exponents, self.coefficients, self.order, radius)

    # -- evaluation -------------------------------------------------------

    def evaluate(self, values) -> np.ndarray:
        """Sum of terms at an (m, variables) real or complex array"""
        values = np.asarray(values)
        if values.ndim == 1:
            values = values.reshape(1, -1)
        m, width = values.shape
        if width != len(self.variables):
            raise SeriesError(f"expected {len(self.variables)} variable values, got {width}")
        dtype = np.result_type(values, float)
        out = np.zeros(m, dtype=dtype)
        if self.is_zero() or m == 0:
            return out
        highest = self.exponents.max(axis=0)
        powers = []
        for column in range(width):
            table = np.ones((highest[column] + 1, m), dtype=dtype)
            for k in range(1, highest[column] + 1):
                table[k] = table[k - 1] * values[:, column]
            powers.append(table)
        block = max(1, _EVALUATION_BLOCK // self.coefficients.size)
        for start in range(0, m, block):
            stop = min(start + block, m)
            monomials = np.ones((self.coefficients.size, stop - start), dtype=dtype)
            for column in range(width):
                if highest[column]:
                    monomials *= powers[column][self.exponents[:, column], start:stop]
            out[start:stop] = self.coefficients @ monomials
        return out

    def __call__(self, values) -> np.ndarray:
        return self.evaluate(values)


Series = Union[PowerSeries1D, MultiSeries]


def arith(p: Series, q, operation: str = "add"):
    """Truncated series arithmetic: add, sub, mul, or scale by a real number"""
    if operation == "add":
        return p + q
    if operation == "sub":
        return p - q
    if operation == "mul":
        return p * q
    if operation == "scale":
        return p.scale(q)
    raise SeriesError(f"unknown series operation '{operation}'")


def _compose_into_multi(outer: PowerSeries1D, inner: MultiSeries) -> MultiSeries:
    result = MultiSeries.constant(0.0, inner.variables, inner.order, inner.polyradius)
    for coefficient in outer.coefficients[: inner.order + 1][::-1]:
        result = result * inner + float(coefficient)
    return result


def compose(outer: Union[PowerSeries1D, MultiSeries], inners) -> Series:
    """Truncated composition outer(inners); exact through the order when inners have no constant term"""
    if isinstance(outer, PowerSeries1D):
        inner = inners[0] if isinstance(inners, (list, tuple)) else inners
        if isinstance(inner, PowerSeries1D):
            return outer.compose(inner)
        return _compose_into_multi(outer, inner)
    inners = list(inners)
    if len(inners) != len(outer.variables):
        raise IncompatibleVariablesError(
            f"outer series has {len(outer.variables)} variables but {len(inners)} inner series were given"
        )
    inners = [inner.to_multi() if isinstance(inner, PowerSeries1D) else inner for inner in inners]
    for inner in inners[1:]:
        inners[0]._check_compatible(inner)
    base = inners[0]
    order = min(inner.order for inner in inners)
    if any(abs(inner.constant_term()) > 0 for inner in inners):
        logger.debug("composing with inner series that have constant terms; result is the truncated polynomial")
    highest = outer.exponents.max(axis=0) if not outer.is_zero() else np.zeros(len(inners), dtype=int)
    one = MultiSeries.constant(1.0, base.variables, order, base.polyradius)
    powers = []
    for inner, top in zip(inners, highest):
        table = [one]
        for _ in range(int(top)):
            table.append(table[-1] * inner)
        powers.append(table)
    result = MultiSeries.constant(0.0, base.variables, order, base.polyradius)
    for row, coefficient in zip(outer.exponents, outer.coefficients):
        term = one.scale(coefficient)
        for table, exponent in zip(powers, row):
            if exponent:
                term = term * table[exponent]
        result = result + term
    return result


def revert(p: PowerSeries1D) -> PowerSeries1D:
    """Compositional inverse through the order of ``p``"""
    return PowerSeries1D(_revert_coefficients(p.coefficients, p.order), p.radius)


@dataclass(frozen=True, eq=False)
class SeriesPair:
    """Complex-coefficient series real + i*imag with real parts of the same shape"""

    real: Series
    imag: Series

    def __post_init__(self):
        if type(self.real) is not type(self.imag):
            raise IncompatibleVariablesError("SeriesPair parts must be of the same series type")
        if isinstance(self.real, MultiSeries):
            self.real._check_compatible(self.imag)

    @classmethod
    def from_real(cls, series: Series) -> "SeriesPair":
        return cls(series, series.scale(0.0))

    @classmethod
    def from_complex_coefficients(cls, coefficients, radius: float = 1.0) -> "SeriesPair":
        coefficients = np.asarray(coefficients, dtype=complex)
        return cls(PowerSeries1D(coefficients.real, radius), PowerSeries1D(coefficients.imag, radius))

    def complex_coefficients(self) -> np.ndarray:
        if not isinstance(self.real, PowerSeries1D):
            raise SeriesError("complex coefficient arrays exist only for one-variable pairs")
        order = min(self.real.order, self.imag.order)
        return self.real.coefficients[: order + 1] + 1j * self.imag.coefficients[: order + 1]

    def _constant(self, value: complex) -> "SeriesPair":
        value = complex(value)
        zero = self.real.scale(0.0)
        return SeriesPair(zero + value.real, zero + value.imag)

    def __add__(self, other):
        if not isinstance(other, SeriesPair):
            other = self._constant(other)
        return SeriesPair(self.real + other.real, self.imag + other.imag)

    __radd__ = __add__

    def __neg__(self):
        return SeriesPair(-self.real, -self.imag)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, SeriesPair):
            return SeriesPair(
                self.real * other.real - self.imag * other.imag,
                self.real * other.imag + self.imag * other.real,
            )
        if isinstance(other, (PowerSeries1D, MultiSeries)):
            return SeriesPair(self.real * other, self.imag * other)
        value = complex(other)
        return SeriesPair(
            self.real.scale(value.real) - self.imag.scale(value.imag),
            self.real.scale(value.imag) + self.imag.scale(value.real),
        )

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "SeriesPair":
        if power < 0:
            raise SeriesError("negative powers of series are not supported")
        result = self._constant(1.0)
        base = self
        while power:
            if power & 1:
                result = result * base
            power >>= 1
            if power:
                base = base * base
        return result

    def conj(self) -> "SeriesPair":
        return SeriesPair(self.real, -self.imag)

    def _order(self) -> int:
        return min(self.real.order, self.imag.order)

    def _split_constant(self, part: Series) -> Tuple[float, Series]:
        if isinstance(part, PowerSeries1D):
            c0 = float(part.coefficients[0])
        else:
            c0 = part.constant_term()
        return c0, part - c0

    def _apply(self, name: str, part: Series) -> Series:
        """Real function of a real series: f(c0 + p) with p free of constants"""
        c0, rest = self._split_constant(part)
        order = self._order()

        def named(series_name: str) -> Series:
            return compose(series_from_name(series_name, order), rest)

        if name == "exp":
            return named("exp").scale(np.exp(c0))
        if name == "cos":
            return named("cos").scale(np.cos(c0)) - named("sin").scale(np.sin(c0))
        if name == "sin":
            return named("sin").scale(np.cos(c0)) + named("cos").scale(np.sin(c0))
        if name == "cosh":
            return named("cosh").scale(np.cosh(c0)) + named("sinh").scale(np.sinh(c0))
        if name == "sinh":
            return named("sinh").scale(np.cosh(c0)) + named("cosh").scale(np.sinh(c0))
        raise SeriesError(f"unknown function '{name}'")

    def exp(self) -> "SeriesPair":
        magnitude = self._apply("exp", self.real)
        return SeriesPair(magnitude * self._apply("cos", self.imag), magnitude * self._apply("sin", self.imag))

    def sin(self) -> "SeriesPair":
        return SeriesPair(
            self._apply("sin", self.real) * self._apply("cosh", self.imag),
            self._apply("cos", self.real) * self._apply("sinh", self.imag),
        )

    def cos(self) -> "SeriesPair":
        return SeriesPair(
            self._apply("cos", self.real) * self._apply("cosh", self.imag),
            -(self._apply("sin", self.real) * self._apply("sinh", self.imag)),
        )

    def revert(self) -> "SeriesPair":
        """Compositional inverse of a one-variable complex series"""
        coefficients = self.complex_coefficients()
        return SeriesPair.from_complex_coefficients(
            _revert_coefficients(coefficients, coefficients.size - 1), self.real.radius
        )

    def evaluate(self, values) -> np.ndarray:
        real = self.real(values) if isinstance(self.real, PowerSeries1D) else self.real.evaluate(values)
        imag = self.imag(values) if isinstance(self.imag, PowerSeries1D) else self.imag.evaluate(values)
        return real + 1j * imag


def _series_domain(p: Series, complexified: Sequence[int], name: str) -> DomainBox:
    if isinstance(p, PowerSeries1D):
        return DomainBox.disc(p.radius, name=name)
    constraints = [(column, "real") for column in range(len(p.variables)) if column not in complexified]
    return DomainBox(np.zeros(len(p.variables)), p.polyradius, constraints, name=name)


def complexify(p: Union[Series, SeriesPair], variables: Optional[Sequence[str]] = None, label: Optional[str] = None) -> AnalyticFunction:
    """Series-backed function substituting complex values for the chosen real variables.

    Unchosen variables stay real (their coordinates are constrained to the real
    axis). Real inputs are evaluated on the real path, so results there agree
    with direct evaluation bit for bit.
    """
    parts = (p.real, p.imag) if isinstance(p, SeriesPair) else (p, None)
    head = parts[0]
    if isinstance(head, PowerSeries1D):
        if variables is not None and list(variables) not in ([], ["x"]):
            raise UnknownVariableError(f"one-variable series has only 'x', got {variables}")
        names: Tuple[str, ...] = ("x",)
        complexified = [0]
    else:
        names = head.variables
        chosen = list(names) if variables is None else list(variables)
        unknown = [name for name in chosen if name not in names]
        if unknown:
            raise UnknownVariableError(f"unknown variables {unknown} in {names}")
        complexified = [names.index(name) for name in chosen]

    def real_part_eval(series: Series, points: np.ndarray) -> np.ndarray:
        if isinstance(series, PowerSeries1D):
            return series(points[:, 0])
        return series.evaluate(points)

    def evaluate(points: np.ndarray) -> np.ndarray:
        on_real_axis = not np.any(points.imag)
        arguments = points.real if on_real_axis else points
        value = real_part_eval(parts[0], arguments).astype(complex)
        if parts[1] is not None:
            value = value + 1j * real_part_eval(parts[1], arguments)
        return value

    label = label or ("series" if isinstance(head, PowerSeries1D) else f"series({', '.join(names)})")
    domain = _series_domain(head, complexified, f"polyradius of {label}")
    return AnalyticFunction(len(names), evaluate, domain, Provenance.SERIES_BACKED, label)
