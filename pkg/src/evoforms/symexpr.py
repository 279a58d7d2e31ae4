# Copyright 2025 evoforms developers
#
# Licensed under the Apache License, Version 2.0 (the "License"); you may
# not use this file except in compliance with the License. You may obtain
# a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
# WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
# License for the specific language governing permissions and limitations
#  under the License.

"""Symbolic scalar expressions over a chart.

Expressions are sympy expressions whose free symbols are chart variables,
possibly joined by parameter symbols (the constants of symbolic
pseudostructures). Constants are rationals; transcendental calls are kept
as opaque atoms by simplify. Zero testing is exact on rational functions
and probabilistic otherwise, and every verdict carries its confidence.
"""

import enum
import functools
import logging
import math
import typing
import zlib

import numpy
import pydantic
import sympy
import typing_extensions
from sympy.printing.str import StrPrinter

from evoforms.config import DEFAULT_CONFIG, EngineConfig
from evoforms.exceptions import ChartError, UnsupportedIntegrandError


logger = logging.getLogger(__name__)

Expr: typing.TypeAlias = sympy.Expr
Variable: typing.TypeAlias = str | sympy.Symbol

MAX_CHART_DIMENSION = 8

TRANSCENDENTALS = {"sin": sympy.sin, "cos": sympy.cos, "exp": sympy.exp, "log": sympy.log}

# function names of the expression grammar
FUNCTIONS = {**TRANSCENDENTALS, "sqrt": sympy.sqrt, "abs": sympy.Abs}

_EXPAND_HINTS = {
    "deep": True,
    "mul": True,
    "multinomial": True,
    "power_exp": False,
    "power_base": False,
    "log": False,
}


class Confidence(str, enum.Enum):
    """How much a verdict can be trusted."""

    EXACT = "exact"
    PROBABLE = "probable"
    INDETERMINATE = "indeterminate"


class ZeroVerdict(pydantic.BaseModel):
    """Outcome of a zero test.

    Attributes:
        zero (bool | None): True if the expression vanishes, False if it
            does not, None when the test was indeterminate.
        confidence (Confidence): EXACT when decided symbolically or by a
            nonzero sample, PROBABLE when every sample vanished.
    """

    model_config = pydantic.ConfigDict(frozen=True)
    zero: bool | None
    confidence: Confidence

    @property
    def exact_zero(self) -> bool:
        """True only for an EXACT zero verdict."""
        return self.zero is True and self.confidence == Confidence.EXACT

    @property
    def exact_nonzero(self) -> bool:
        """True only for an EXACT nonzero verdict."""
        return self.zero is False and self.confidence == Confidence.EXACT


EXACT_ZERO = ZeroVerdict(zero=True, confidence=Confidence.EXACT)
EXACT_NONZERO = ZeroVerdict(zero=False, confidence=Confidence.EXACT)
INDETERMINATE = ZeroVerdict(zero=None, confidence=Confidence.INDETERMINATE)


def combine_zero(verdicts: typing.Iterable[ZeroVerdict]) -> ZeroVerdict:
    """Combine the zero verdicts of several coefficients.

    The collection vanishes when every member vanishes. One EXACT nonzero
    member decides the result; otherwise an indeterminate member makes
    the whole indeterminate, and a probable member makes it probable.

    Args:
        verdicts (Iterable[ZeroVerdict]): Verdicts of the members.

    Returns:
        The combined verdict. An empty collection is an EXACT zero.

    Raises:
        None
    """
    verdicts = list(verdicts)
    if any(v.zero is False for v in verdicts):
        if any(v.exact_nonzero for v in verdicts):
            return EXACT_NONZERO
        return ZeroVerdict(zero=False, confidence=Confidence.PROBABLE)
    if any(v.zero is None for v in verdicts):
        return INDETERMINATE
    if all(v.confidence == Confidence.EXACT for v in verdicts):
        return EXACT_ZERO
    return ZeroVerdict(zero=True, confidence=Confidence.PROBABLE)


def weakest(*confidences: Confidence) -> Confidence:
    """Return the least trustworthy of the given confidences."""
    order = [Confidence.EXACT, Confidence.PROBABLE, Confidence.INDETERMINATE]
    return max(confidences, key=order.index, default=Confidence.EXACT)


class Chart(pydantic.BaseModel):
    """An ordered set of named coordinates.

    Attributes:
        names (tuple[str, ...]): Variable names, x^1 ... x^n in order.
        induced (bool): True for the chart of the free variables of a
            pseudostructure, which may have dimension 0.
    """

    model_config = pydantic.ConfigDict(frozen=True)
    names: tuple[str, ...]
    induced: bool = False

    @pydantic.field_validator("names")
    @classmethod
    def validate_names(cls, value):
        """Names must be unique identifiers and at most 8 of them."""
        if len(set(value)) != len(value):
            raise ValueError(f"chart variable names are not unique: {value}")
        if len(value) > MAX_CHART_DIMENSION:
            raise ValueError(f"chart dimension {len(value)} exceeds {MAX_CHART_DIMENSION}")
        for name in value:
            if not name.isidentifier():
                raise ValueError(f"invalid chart variable name {name!r}")
        return value

    @pydantic.model_validator(mode="after")
    def validate_dimension(self) -> typing_extensions.Self:
        """A declared chart has dimension at least 1."""
        if not self.induced and len(self.names) < 1:
            raise ValueError("chart dimension must be at least 1")
        return self

    @property
    def dimension(self) -> int:
        """Number of variables."""
        return len(self.names)

    @functools.cached_property
    def symbols(self) -> tuple[sympy.Symbol, ...]:
        """Sympy symbols of the variables, in chart order."""
        return tuple(sympy.Symbol(name) for name in self.names)

    def index(self, var: Variable) -> int:
        """Return the 0-based index of a chart variable.

        Args:
            var (str | Symbol): Variable name or symbol.

        Returns:
            Position of the variable in the chart.

        Raises:
            ChartError: The variable does not belong to the chart.
        """
        name = var.name if isinstance(var, sympy.Symbol) else var
        try:
            return self.names.index(name)
        except ValueError as err:
            raise ChartError(f"unknown variable {name!r} for chart {self.names}") from err

    def symbol(self, var: Variable) -> sympy.Symbol:
        """Return the chart symbol of a variable name or symbol."""
        return self.symbols[self.index(var)]

    def check_expr(self, e: Expr, parameters: typing.Iterable[sympy.Symbol] = ()) -> None:
        """Check that every free symbol of e is a chart variable or parameter.

        Args:
            e (Expr): Expression to check.
            parameters (Iterable[Symbol]): Additional allowed symbols.

        Returns:
            None

        Raises:
            ChartError: A free symbol is unknown.
        """
        allowed = set(self.symbols) | set(parameters)
        unknown = sorted(str(s) for s in e.free_symbols - allowed)
        if unknown:
            raise ChartError(f"unknown variables {unknown} for chart {self.names}")


def chart(*names: str) -> Chart:
    """Shorthand for Chart(names=names)."""
    return Chart(names=tuple(names))


def _is_atom(e: Expr) -> bool:
    """True for a subterm simplify must not look into."""
    if isinstance(e, sympy.Function):
        return True
    return isinstance(e, sympy.Pow) and not e.exp.is_Integer


def _mask_atoms(e: Expr, table: dict[Expr, sympy.Dummy]) -> Expr:
    """Replace every outermost transcendental atom of e by a dummy."""
    if _is_atom(e):
        if e not in table:
            table[e] = sympy.Dummy(f"atom{len(table)}")
        return table[e]
    if not e.args:
        return e
    return e.func(*(_mask_atoms(a, table) for a in e.args))


def simplify(e: Expr | int | str) -> Expr:
    """Bring an expression to canonical form.

    The canonical form is a quotient of expanded polynomials in the
    variables and in the transcendental atoms, with common factors
    cancelled. Transcendental atoms are compared syntactically: they
    are masked by dummies while expanding, so exp(x + y) or sqrt(x*y)
    are never rewritten.

    Args:
        e (Expr): Expression to simplify.

    Returns:
        The canonical expression.

    Raises:
        None
    """
    e = sympy.sympify(e)
    if e.is_Number:
        return e
    table: dict[Expr, sympy.Dummy] = {}
    masked = _mask_atoms(e, table)
    masked = sympy.expand(masked, **_EXPAND_HINTS)
    masked = sympy.cancel(sympy.together(masked))
    num, den = sympy.fraction(masked)
    num = sympy.expand(num, **_EXPAND_HINTS)
    den = sympy.expand(den, **_EXPAND_HINTS)
    restore = {dummy: atom for atom, dummy in table.items()}
    num = num.xreplace(restore)
    den = den.xreplace(restore)
    if den == 1:
        return num
    return num / den


def differentiate(e: Expr, var: Variable, chart_: Chart) -> Expr:
    """Return the partial derivative of e with respect to a chart variable.

    Args:
        e (Expr): Expression to differentiate.
        var (str | Symbol): Variable of the chart.
        chart_ (Chart): Chart the variable belongs to.

    Returns:
        The derivative in canonical form.

    Raises:
        ChartError: The variable does not belong to the chart.
    """
    symbol = chart_.symbol(var)
    return simplify(sympy.diff(e, symbol))


def is_rational_function(e: Expr) -> bool:
    """True when e has no transcendental atom and only integer powers."""
    if e.atoms(sympy.Function):
        return False
    return all(p.exp.is_Integer for p in e.atoms(sympy.Pow))


def _sample_points(rng: numpy.random.Generator, count: int, size: int) -> numpy.ndarray:
    """Draw random rational points with small numerators and denominators."""
    numerators = rng.integers(-40, 41, size=(count, size))
    denominators = rng.integers(1, 9, size=(count, size))
    return numerators / denominators


def is_zero(e: Expr, config: EngineConfig | None = None) -> ZeroVerdict:
    """Decide whether an expression vanishes identically.

    Rational functions are decided exactly after simplify. Expressions
    with transcendental atoms are evaluated at random rational points:
    one value clearly away from zero is an EXACT nonzero verdict, while
    vanishing at every sample is only PROBABLE. Points where evaluation
    fails (poles, logarithm of a nonpositive number) are resampled.

    Args:
        e (Expr): Expression to test.
        config (EngineConfig | None): Sampler settings. If omitted, the
            packaged defaults.

    Returns:
        The zero verdict.

    Raises:
        None
    """
    config = config or DEFAULT_CONFIG
    s = simplify(e)
    if s == 0:
        return EXACT_ZERO
    if is_rational_function(s):
        return EXACT_NONZERO

    symbols = sorted(s.free_symbols, key=str)
    terms = sympy.Add.make_args(s)
    evaluate = sympy.lambdify(symbols, list(terms), modules="math")
    rng = numpy.random.default_rng([config.seed, zlib.crc32(sympy.srepr(s).encode("utf-8"))])
    valid = 0
    attempts = 0
    limit = config.samples * config.max_resample
    while valid < config.samples and attempts < limit:
        batch = _sample_points(rng, config.samples, len(symbols))
        for point in batch:
            attempts += 1
            try:
                values = [complex(v) for v in evaluate(*point)]
            except (ValueError, ZeroDivisionError, OverflowError, TypeError):
                continue
            if any(v.imag != 0 or not math.isfinite(v.real) for v in values):
                continue
            valid += 1
            total = sum(v.real for v in values)
            scale = 1.0 + sum(abs(v.real) for v in values)
            if abs(total) > config.tolerance * scale:
                return EXACT_NONZERO
            if valid >= config.samples:
                break
    if valid < config.samples:
        logger.warning("Zero test of %s found only %d valid points in %d attempts", s, valid, attempts)
        return INDETERMINATE
    return ZeroVerdict(zero=True, confidence=Confidence.PROBABLE)


def substitute(e: Expr, bindings: typing.Mapping[Variable, Expr | int], chart_: Chart) -> Expr:
    """Substitute chart variables simultaneously, then simplify.

    Args:
        e (Expr): Expression to substitute into.
        bindings (Mapping[str | Symbol, Expr]): Replacement of each bound
            variable.
        chart_ (Chart): Chart the bound variables belong to.

    Returns:
        The substituted expression in canonical form.

    Raises:
        ChartError: A bound variable does not belong to the chart.
    """
    replacements = {chart_.symbol(var): sympy.sympify(value) for var, value in bindings.items()}
    return simplify(e.subs(replacements, simultaneous=True))


def integrate_polynomial(e: Expr, symbol: sympy.Symbol) -> Expr:
    """Antiderivative of e in symbol with zero constant.

    Any symbol is accepted, which lets the homotopy operator integrate
    along its radial parameter.

    Args:
        e (Expr): Integrand, polynomial in symbol.
        symbol (Symbol): Integration variable.

    Returns:
        The antiderivative in canonical form.

    Raises:
        UnsupportedIntegrandError: e is not polynomial in symbol.
    """
    s = simplify(e)
    if not s.is_polynomial(symbol):
        raise UnsupportedIntegrandError(f"{s} is not polynomial in {symbol}")
    return simplify(sympy.Poly(s, symbol).integrate().as_expr())


def integrate_poly(e: Expr, var: Variable, chart_: Chart) -> Expr:
    """Antiderivative of a polynomial in a chart variable, zero constant.

    Args:
        e (Expr): Integrand, polynomial in var.
        var (str | Symbol): Chart variable.
        chart_ (Chart): Chart the variable belongs to.

    Returns:
        The antiderivative; its derivative in var equals e.

    Raises:
        ChartError: The variable does not belong to the chart.
        UnsupportedIntegrandError: e is not polynomial in var.
    """
    return integrate_polynomial(e, chart_.symbol(var))


def evaluate(e: Expr, point: typing.Mapping[sympy.Symbol, typing.Any]) -> sympy.Expr:
    """Evaluate e exactly at a point given as a symbol mapping."""
    return sympy.sympify(e).subs(point, simultaneous=True)


class _DSLPrinter(StrPrinter):
    """sympy printer that writes powers with the DSL caret."""

    def _print_Pow(self, expr, rational=False):
        text = super()._print_Pow(expr, rational)
        return text.replace("**", "^")

    def _print_Rational(self, expr):
        return f"{expr.p}/{expr.q}"


def _factor_text(base: Expr, power: int, chart_: Chart | None) -> str:
    """Render one generator power."""
    if isinstance(base, sympy.Symbol):
        text = base.name
    elif isinstance(base, sympy.Pow) and base.exp == sympy.Rational(1, 2):
        text = f"sqrt({to_text(base.base, chart_)})"
    elif isinstance(base, sympy.Pow):
        text = f"({to_text(base.base, chart_)})^({_DSLPrinter().doprint(base.exp)})"
    else:
        args = ", ".join(to_text(a, chart_) for a in base.args)
        name = "abs" if isinstance(base, sympy.Abs) else type(base).__name__
        text = f"{name}({args})"
    return text if power == 1 else f"{text}^{power}"


def _polynomial_text(e: Expr, chart_: Chart | None) -> str:
    """Render an expanded polynomial in graded lexicographic order."""
    if e == 0:
        return "0"
    table: dict[Expr, sympy.Dummy] = {}
    replaced = _mask_atoms(e, table)
    atoms = sorted(table, key=sympy.srepr)
    atom_dummies = [table[a] for a in atoms]
    order = list(chart_.symbols) if chart_ is not None else []
    extra_symbols = sorted((s for s in replaced.free_symbols if s not in order and s not in atom_dummies), key=str)
    gens = order + extra_symbols + atoms
    if not gens:
        return _DSLPrinter().doprint(e)
    poly = sympy.Poly(replaced, *(order + extra_symbols + atom_dummies))
    parts = []
    for monomial, coeff in poly.terms(order="grlex"):
        factors = [_factor_text(g, p, chart_) for g, p in zip(gens, monomial) if p]
        coeff_text = _DSLPrinter().doprint(abs(coeff)) if coeff.is_Number else f"({_DSLPrinter().doprint(coeff)})"
        negative = coeff.is_Number and coeff < 0
        if factors and coeff_text == "1":
            body = "*".join(factors)
        else:
            body = "*".join([coeff_text] + factors)
        parts.append(("-" if negative else "+", body))
    sign, body = parts[0]
    text = f"-{body}" if sign == "-" else body
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text


def to_text(e: Expr, chart_: Chart | None = None) -> str:
    """Canonical DSL text of an expression.

    Monomials are listed in graded lexicographic order of the chart
    variables, then of other symbols by name, then of transcendental
    atoms. The text parses back to the same canonical expression.

    Args:
        e (Expr): Expression to render.
        chart_ (Chart | None): Chart giving the variable order.

    Returns:
        The rendered text.

    Raises:
        None
    """
    s = simplify(e)
    num, den = sympy.fraction(s)
    try:
        if den.is_Number:
            return _polynomial_text(s, chart_)
        text = _polynomial_text(num, chart_)
        return f"({text})/({_polynomial_text(den, chart_)})"
    except sympy.PolynomialError:
        return _DSLPrinter().doprint(s)
