"""Whitelisted analytic expressions in (t, x, y) and the signals built from them."""
from __future__ import annotations

import ast
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy

from .errors import ScenarioParseError, ValidationError
from .fields import BoundarySignal, FieldPair
from .grid import FloatArray, Grid, SegmentTag

logger = logging.getLogger(__name__)

T, X, Y = sympy.symbols("t x y", real=True)

NAMES = {"t": T, "x": X, "y": Y, "pi": sympy.pi, "e": sympy.E}
FUNCTIONS = {"sin": sympy.sin, "cos": sympy.cos, "exp": sympy.exp, "sqrt": sympy.sqrt}

_OPERATORS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)

MAX_EXPONENT = 64


def _reject(text: str, node: ast.AST, what: str, key: str | None) -> ScenarioParseError:
    column = getattr(node, "col_offset", 0) + 1
    return ScenarioParseError(f"{what} not allowed in expression {text!r}", column=column, key=key)


def _is_power(node: ast.AST) -> bool:
    return isinstance(node, ast.BinOp) and isinstance(node.op, ast.Pow)


def _check_power(text: str, node: ast.BinOp, key: str | None) -> None:
    """Powers do not nest and constant exponents stay within ``MAX_EXPONENT``."""
    for side in (node.left, node.right):
        for inner in ast.walk(side):
            if _is_power(inner):
                raise _reject(text, inner, "nested power", key)
    for inner in ast.walk(node.right):
        if not isinstance(inner, ast.Constant) or not isinstance(inner.value, (int, float)):
            continue
        if abs(inner.value) > MAX_EXPONENT:
            raise _reject(text, inner, f"exponent {inner.value!r} beyond {MAX_EXPONENT}", key)


def check_expression(text: str, key: str | None = None) -> ast.Expression:
    """Parse ``text`` and reject anything outside the whitelist."""
    if not isinstance(text, str) or not text.strip():
        raise ScenarioParseError("expression must be a non-empty string", key=key)
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ScenarioParseError(f"malformed expression {text!r}: {exc.msg}", column=exc.offset, key=key) from exc
    for node in ast.walk(tree):
        if _is_power(node):
            _check_power(text, node, key)  # type: ignore[arg-type]
        if isinstance(node, (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Load)) or isinstance(node, _OPERATORS):
            continue
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise _reject(text, node, f"literal {node.value!r}", key)
        elif isinstance(node, ast.Name):
            if node.id not in NAMES and node.id not in FUNCTIONS:
                raise _reject(text, node, f"name {node.id!r}", key)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise _reject(text, node, "call", key)
            if node.keywords or len(node.args) != 1:
                raise _reject(text, node, f"{node.func.id} with other than one argument", key)
        else:
            raise _reject(text, node, type(node).__name__, key)
    return tree  # type: ignore[return-value]


@dataclass(frozen=True)
class Expression:
    """A checked expression compiled to a numpy callable ``f(t, x, y)``."""

    text: str
    key: str | None = None
    expr: sympy.Expr = field(init=False, repr=False, compare=False)
    _fn: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        check_expression(self.text, self.key)
        try:
            expr = sympy.sympify(self.text, locals={**NAMES, **FUNCTIONS})
        except (sympy.SympifyError, TypeError) as exc:
            raise ScenarioParseError(f"cannot interpret expression {self.text!r}", key=self.key) from exc
        object.__setattr__(self, "expr", expr)
        object.__setattr__(self, "_fn", sympy.lambdify((T, X, Y), expr, "numpy"))

    def __call__(self, t: float, x, y) -> FloatArray:
        x_arr, y_arr = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.array(np.broadcast_to(self._fn(float(t), x_arr, y_arr), x_arr.shape), dtype=float)


def segment_coordinates(tag: SegmentTag, s: FloatArray, length: float) -> tuple[FloatArray, FloatArray]:
    """(x, y) of the nodes of a segment from their arclength coordinate."""
    s = np.asarray(s, dtype=float)
    if tag is SegmentTag.GAMMA1:
        return s, np.zeros_like(s)
    if tag is SegmentTag.GAMMA3:
        return s, np.full_like(s, length)
    if tag is SegmentTag.GAMMA2:
        return np.zeros_like(s), s
    return np.ones_like(s), s


def _pair_of(texts: Sequence[str], key: str) -> tuple[Expression, Expression]:
    if len(texts) != 2:
        raise ValidationError(f"expected two expressions (feed, permeate), got {len(texts)}", key=key)
    return Expression(texts[0], f"{key}[0]"), Expression(texts[1], f"{key}[1]")


def signal_from_expressions(tag: SegmentTag, texts: Sequence[str], length: float, key: str) -> BoundarySignal:
    ef, ep = _pair_of(texts, key)

    def evaluate(t: float, s: FloatArray) -> FloatArray:
        x, y = segment_coordinates(tag, s, length)
        return np.vstack([ef(t, x, y), ep(t, x, y)])

    return BoundarySignal(tag, evaluate, label=f"{key} = ({ef.text}, {ep.text})")


def signal_from_table(
    tag: SegmentTag, times: Sequence[float], values: Sequence[Sequence[float]], key: str
) -> BoundarySignal:
    """Spatially uniform signal, linear in time between samples and held outside them."""
    times_arr = np.asarray(times, dtype=float)
    values_arr = np.asarray(values, dtype=float)
    if times_arr.ndim != 1 or times_arr.size < 2:
        raise ValidationError("tabulated signal needs at least two sample times", key=f"{key}.times")
    if np.any(np.diff(times_arr) <= 0):
        raise ValidationError("tabulated sample times must be strictly increasing", key=f"{key}.times")
    if values_arr.shape != (2, times_arr.size):
        raise ValidationError(
            f"tabulated values have shape {values_arr.shape}, expected (2, {times_arr.size})", key=f"{key}.values"
        )

    def evaluate(t: float, s: FloatArray) -> FloatArray:
        now = [np.interp(t, times_arr, row) for row in values_arr]
        return np.array(now)[:, None] * np.ones((1, s.size))

    return BoundarySignal(tag, evaluate, label=f"{key} (tabulated, {times_arr.size} samples)")


def field_from_expressions(grid: Grid, texts: Sequence[str], key: str) -> FieldPair:
    """Initial field (f, p) from expressions in x and y evaluated at t = 0."""
    ef, ep = _pair_of(texts, key)
    return FieldPair.from_functions(grid, lambda x, y: ef(0.0, x, y), lambda x, y: ep(0.0, x, y))
