"""
Closed-form holomorphic expressions for scenario files.

The grammar is +, -, *, /, integer powers, exp, sin, cos (and the sinh/cosh
that sympy produces from them) over the declared complex variables. Anything
else, conjugation in particular, is rejected. Expressions are read with
``ast`` against an allow-list and translated to sympy, so nothing is executed.
"""
from functools import reduce
from typing import Dict, Mapping, Optional, Sequence
import ast
import logging
import operator

import numpy as np
import sympy

from reflexcr.exceptions import ScenarioError
from reflexcr.layers.analytic_core import AnalyticFunction, ComplexSpace, Domain, Provenance
from reflexcr.layers.series import SeriesPair

logger = logging.getLogger(__name__)

_FUNCTIONS = {
    "exp": sympy.exp,
    "sin": sympy.sin,
    "cos": sympy.cos,
    "sinh": sympy.sinh,
    "cosh": sympy.cosh,
}
_ALLOWED_NODES = (
    sympy.Symbol,
    sympy.Number,
    sympy.NumberSymbol,
    sympy.core.numbers.ImaginaryUnit,
    sympy.Add,
    sympy.Mul,
    sympy.Pow,
) + tuple(_FUNCTIONS.values())
_BINARY_OPERATORS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_NOT_HOLOMORPHIC = ("conjugate", "conj", "re", "im", "abs", "Abs", "arg")


class _TreeBuilder:
    """Builds a sympy tree from a Python expression AST, accepting only the grammar's nodes"""

    def __init__(self, text: str, names: Mapping[str, sympy.Expr]):
        self.text = text
        self.names = names

    def build(self, node: ast.AST) -> sympy.Expr:
        if isinstance(node, ast.Expression):
            return self.build(node.body)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINARY_OPERATORS:
            return _BINARY_OPERATORS[type(node.op)](self.build(node.left), self.build(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            operand = self.build(node.operand)
            return -operand if isinstance(node.op, ast.USub) else operand
        if isinstance(node, ast.Constant):
            return self._constant(node.value)
        if isinstance(node, ast.Name):
            if node.id not in self.names:
                raise ScenarioError(f"unknown variable '{node.id}' in '{self.text}'")
            return self.names[node.id]
        if isinstance(node, ast.Call):
            return self._call(node)
        raise ScenarioError(f"'{self.text}' uses {type(node).__name__}, which is outside the expression grammar")

    def _constant(self, value) -> sympy.Expr:
        if isinstance(value, bool) or not isinstance(value, (int, float, complex)):
            raise ScenarioError(f"'{self.text}' contains the literal {value!r}, which is not a number")
        if isinstance(value, int):
            return sympy.Integer(value)
        if isinstance(value, float):
            return sympy.Float(value)
        return sympy.Float(value.real) + sympy.Float(value.imag) * sympy.I

    def _call(self, node: ast.Call) -> sympy.Expr:
        name = node.func.id if isinstance(node.func, ast.Name) else None
        if name in _NOT_HOLOMORPHIC:
            raise ScenarioError(f"'{self.text}' is not holomorphic: {name} is not allowed")
        if name not in _FUNCTIONS:
            raise ScenarioError(f"'{self.text}' calls something other than {sorted(_FUNCTIONS)}")
        if len(node.args) != 1 or node.keywords:
            raise ScenarioError(f"'{self.text}': {name} takes exactly one argument")
        return _FUNCTIONS[name](self.build(node.args[0]))


class Expression:
    """Parsed holomorphic expression over named complex variables"""

    def __init__(self, text: str, tree: sympy.Expr, symbols: Sequence[sympy.Symbol]):
        self.text = text
        self.tree = tree
        self.symbols = tuple(symbols)
        self.variables = tuple(symbol.name for symbol in self.symbols)
        self._numeric = sympy.lambdify(self.symbols, tree, modules="numpy")

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at an (m, variables) complex array"""
        points = np.asarray(points, dtype=complex).reshape(-1, len(self.symbols))
        with np.errstate(all="ignore"):
            return np.asarray(self._numeric(*points.T), dtype=complex)

    def to_function(self, domain: Optional[Domain] = None, label: Optional[str] = None) -> AnalyticFunction:
        return AnalyticFunction(
            len(self.symbols),
            self.evaluate,
            domain or ComplexSpace(len(self.symbols)),
            Provenance.BLACK_BOX,
            label or self.text,
        )

    def series(self, values: Mapping[str, SeriesPair]):
        """Evaluate the expression tree over SeriesPair arithmetic"""
        missing = [name for name in self.variables if name in self._used and name not in values]
        if missing:
            raise ScenarioError(f"no series given for variables {missing}")
        return _series_of(self.tree, values)

    @property
    def _used(self):
        return {symbol.name for symbol in self.tree.free_symbols}


def _series_of(node: sympy.Expr, values: Mapping[str, SeriesPair]):
    if not node.free_symbols:
        return complex(node)
    if node.is_Symbol:
        return values[node.name]
    if node.is_Add:
        return reduce(operator.add, (_series_of(arg, values) for arg in node.args))
    if node.is_Mul:
        return reduce(operator.mul, (_series_of(arg, values) for arg in node.args))
    if node.is_Pow:
        base, exponent = node.args
        if not (exponent.is_Integer and exponent >= 0):
            raise ScenarioError(f"series evaluation needs non-negative integer powers, got {node}")
        return _series_of(base, values) ** int(exponent)
    argument = _series_of(node.args[0], values)
    if isinstance(node, sympy.exp):
        return argument.exp()
    if isinstance(node, sympy.sin):
        return argument.sin()
    if isinstance(node, sympy.cos):
        return argument.cos()
    if isinstance(node, sympy.sinh):
        return (argument.exp() - (-argument).exp()) * 0.5
    if isinstance(node, sympy.cosh):
        return (argument.exp() + (-argument).exp()) * 0.5
    raise ScenarioError(f"no series rule for {node.func.__name__}")


def _check_tree(tree: sympy.Expr, symbols: Dict[str, sympy.Symbol], text: str) -> None:
    for node in sympy.preorder_traversal(tree):
        if isinstance(node, sympy.Symbol):
            if node.name not in symbols or symbols[node.name] != node:
                raise ScenarioError(f"unknown variable '{node.name}' in '{text}'")
            continue
        if not isinstance(node, _ALLOWED_NODES):
            name = getattr(node.func, "__name__", str(node.func))
            raise ScenarioError(f"'{text}' uses '{name}', which is outside the expression grammar")
        if isinstance(node, sympy.Pow) and not node.exp.is_Integer:
            raise ScenarioError(f"'{text}' raises to the power {node.exp}; only integer powers are allowed")


def parse_holomorphic(
    text: str,
    variables: Sequence[str],
    aliases: Optional[Mapping[str, str]] = None,
) -> Expression:
    """Parse and validate an expression over ``variables`` (``aliases`` map extra names onto them)

    The text is read with ``ast`` and translated node by node; it is never evaluated as Python.
    """
    if not isinstance(text, str) or not text.strip():
        raise ScenarioError("expression must be a non-empty string")
    symbols = {name: sympy.Symbol(name) for name in variables}
    names: Dict[str, sympy.Expr] = dict(symbols)
    for alias, target in (aliases or {}).items():
        names[alias] = symbols[target]
    names.update({"i": sympy.I, "I": sympy.I, "pi": sympy.pi})
    try:
        syntax = ast.parse(text.strip(), mode="eval")
    except (SyntaxError, RecursionError, MemoryError) as exc:
        raise ScenarioError(f"malformed expression '{text}': {getattr(exc, 'msg', type(exc).__name__)}") from exc
    try:
        tree = _TreeBuilder(text, names).build(syntax)
    except (TypeError, ValueError, ZeroDivisionError, RecursionError) as exc:
        logger.debug(f"expression builder raised {type(exc).__name__}")
        raise ScenarioError(f"malformed expression '{text}': {exc}") from exc
    if not isinstance(tree, sympy.Expr):
        raise ScenarioError(f"'{text}' is not an expression")
    _check_tree(tree, symbols, text)
    return Expression(text, tree, [symbols[name] for name in variables])


def coordinate_names(n: int, d: int):
    """Variable names and aliases for an expression on C^n x C^d"""
    variables = [f"z{j}" for j in range(1, n + 1)] + [f"w{k}" for k in range(1, d + 1)]
    aliases = {}
    if n == 1:
        aliases["z"] = "z1"
    if d == 1:
        aliases["w"] = "w1"
    return variables, aliases
