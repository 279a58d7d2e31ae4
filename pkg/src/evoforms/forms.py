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

"""The exterior algebra on a chart.

A Form stores one coefficient per strictly increasing multi-index; the
basis element of the multi-index (i_1, ..., i_p) is dx^i_1 ^ ... ^ dx^i_p.
Indices are 0-based internally and rendered with the chart names.
"""

import itertools
import logging
import typing

import sympy

from evoforms import symexpr
from evoforms.config import EngineConfig
from evoforms.exceptions import (
    ChartError,
    ChartMismatchError,
    DegreeError,
    MetricError,
    NotClosedError,
    UnsupportedIntegrandError,
    UnsupportedMetricError,
)
from evoforms.symexpr import Chart, Expr, ZeroVerdict


logger = logging.getLogger(__name__)

MultiIndex: typing.TypeAlias = tuple[int, ...]


def permutation_sign(idx: typing.Sequence[int]) -> tuple[int, MultiIndex]:
    """Sort a multi-index and return the sign of the sorting permutation.

    Args:
        idx (Sequence[int]): Multi-index in any order.

    Returns:
        A tuple (sign, sorted index). The sign is 0 when an index is
        repeated, since the basis element then vanishes.

    Raises:
        None
    """
    items = list(idx)
    if len(set(items)) != len(items):
        return 0, tuple(sorted(items))
    sign = 1
    for i, _ in enumerate(items):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return sign, tuple(items)


class Form:
    """A skew-symmetric differential form of fixed degree on a chart.

    Forms are immutable. The coefficient table only holds strictly
    increasing multi-indices with coefficients that are not identically
    zero after simplify; the zero form of any degree has an empty table.

    Attributes:
        chart (Chart): Chart the form lives on.
        degree (int): Degree p. Degrees above the chart dimension are
            allowed for the zero form only.
        coefficients (dict[MultiIndex, Expr]): Coefficient table.
    """

    __slots__ = ("chart", "degree", "coefficients")

    def __init__(self, chart: Chart, degree: int, coefficients: typing.Mapping[typing.Sequence[int], typing.Any]):
        """Constructor of the Form class.

        Unsorted multi-indices are normalized with the permutation sign
        folded into the coefficient, and duplicate entries are summed.

        Args:
            chart (Chart): Chart the form lives on.
            degree (int): Degree of the form.
            coefficients (Mapping[Sequence[int], Expr]): Coefficient of
                each multi-index.

        Raises:
            DegreeError: A multi-index length differs from the degree,
                or the degree is negative.
            ChartError: An index is outside the chart.
        """
        if degree < 0:
            raise DegreeError(f"negative form degree {degree}")
        table: dict[MultiIndex, Expr] = {}
        for idx, value in coefficients.items():
            idx = tuple(idx)
            if len(idx) != degree:
                raise DegreeError(f"multi-index {idx} does not have degree {degree}")
            if any(i < 0 or i >= chart.dimension for i in idx):
                raise ChartError(f"multi-index {idx} outside chart {chart.names}")
            sign, key = permutation_sign(idx)
            if sign == 0:
                continue
            table[key] = table.get(key, sympy.Integer(0)) + sign * sympy.sympify(value)
        simplified = {key: symexpr.simplify(value) for key, value in table.items()}
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "coefficients", {k: simplified[k] for k in sorted(simplified) if simplified[k] != 0})

    def __setattr__(self, name, value):
        raise AttributeError(f"Form is immutable, cannot set {name}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Form):
            return NotImplemented
        return self.chart == other.chart and self.degree == other.degree and self.coefficients == other.coefficients

    def __hash__(self) -> int:
        return hash((self.chart, self.degree, tuple(self.coefficients.items())))

    def __repr__(self) -> str:
        return f"Form({self.degree}, {self.to_text()!r} on {self.chart.names})"

    def _check_same(self, other: "Form") -> None:
        if self.chart != other.chart:
            raise ChartMismatchError(f"charts {self.chart.names} and {other.chart.names} differ")
        if self.degree != other.degree:
            raise DegreeError(f"degrees {self.degree} and {other.degree} differ")

    def __add__(self, other: "Form") -> "Form":
        self._check_same(other)
        table = dict(self.coefficients)
        for idx, value in other.coefficients.items():
            table[idx] = table.get(idx, sympy.Integer(0)) + value
        return Form(self.chart, self.degree, table)

    def __neg__(self) -> "Form":
        return self.scale(-1)

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, factor: Expr | int) -> "Form":
        """Multiply every coefficient by a scalar expression."""
        factor = sympy.sympify(factor)
        return Form(self.chart, self.degree, {idx: factor * value for idx, value in self.coefficients.items()})

    def map_coefficients(self, func: typing.Callable[[Expr], Expr]) -> "Form":
        """Apply func to every coefficient."""
        return Form(self.chart, self.degree, {idx: func(value) for idx, value in self.coefficients.items()})

    def coefficient(self, idx: typing.Sequence[int]) -> Expr:
        """Return the coefficient of a multi-index in any order, with sign."""
        sign, key = permutation_sign(idx)
        return sign * self.coefficients.get(key, sympy.Integer(0))

    @property
    def is_empty(self) -> bool:
        """True when the coefficient table is empty."""
        return not self.coefficients

    def is_zero(self, config: EngineConfig | None = None) -> ZeroVerdict:
        """Combined zero verdict of all coefficients."""
        return symexpr.combine_zero(symexpr.is_zero(value, config) for value in self.coefficients.values())

    def is_polynomial(self) -> bool:
        """True when every coefficient is polynomial in the chart variables."""
        return all(value.is_polynomial(*self.chart.symbols) for value in self.coefficients.values())

    def evaluate(self, point: typing.Sequence[typing.Any]) -> dict[MultiIndex, sympy.Expr]:
        """Evaluate every coefficient at a point given in chart order.

        Args:
            point (Sequence): One coordinate per chart variable.

        Returns:
            The value of each stored coefficient.

        Raises:
            ChartError: The point does not have the chart dimension.
        """
        if len(point) != self.chart.dimension:
            raise ChartError(f"point {tuple(point)} does not have dimension {self.chart.dimension}")
        binding = {s: sympy.sympify(v) for s, v in zip(self.chart.symbols, point)}
        return {idx: symexpr.evaluate(value, binding) for idx, value in self.coefficients.items()}

    def basis_text(self, idx: MultiIndex) -> str:
        """Render the basis element of a multi-index, e.g. dx^dy."""
        return "^".join(f"d{self.chart.names[i]}" for i in idx)

    def to_text(self) -> str:
        """Canonical text, terms in graded lexicographic index order.

        Args:
            None

        Returns:
            The text of the form in the DSL form grammar; "0" for the
            zero form.

        Raises:
            None
        """
        if self.is_empty:
            return "0"
        parts = []
        for idx, value in self.coefficients.items():
            text = symexpr.to_text(value, self.chart)
            compound = isinstance(value, sympy.Add)
            if self.degree == 0:
                parts.append(f"({text})" if compound and len(self.coefficients) > 1 else text)
                continue
            basis = self.basis_text(idx)
            if compound:
                parts.append(f"({text}) {basis}")
            elif text == "1":
                parts.append(basis)
            elif text == "-1":
                parts.append(f"-{basis}")
            else:
                parts.append(f"{text} {basis}")
        text = parts[0]
        for part in parts[1:]:
            text += f" - {part[1:]}" if part.startswith("-") else f" + {part}"
        return text


def zero_form(chart: Chart, degree: int) -> Form:
    """The zero form of a degree."""
    return Form(chart, degree, {})


def scalar_form(chart: Chart, e: Expr | int) -> Form:
    """The 0-form with coefficient e."""
    return Form(chart, 0, {(): e})


def basis_form(chart: Chart, idx: typing.Sequence[int], coefficient: Expr | int = 1) -> Form:
    """The form coefficient * dx^idx."""
    return Form(chart, len(idx), {tuple(idx): coefficient})


def one_form(chart: Chart, coefficients: typing.Sequence[Expr | int]) -> Form:
    """The 1-form sum_mu A_mu dx^mu.

    Raises:
        DegreeError: The number of coefficients is not the chart dimension.
    """
    if len(coefficients) != chart.dimension:
        raise DegreeError(f"{len(coefficients)} coefficients for a chart of dimension {chart.dimension}")
    return Form(chart, 1, {(mu,): a for mu, a in enumerate(coefficients)})


def wedge(a: Form, b: Form) -> Form:
    """Exterior product a ^ b.

    Args:
        a (Form): Left factor of degree p.
        b (Form): Right factor of degree q.

    Returns:
        The product of degree p + q; the zero form when p + q exceeds
        the chart dimension.

    Raises:
        ChartMismatchError: The factors live on different charts.
    """
    if a.chart != b.chart:
        raise ChartMismatchError(f"charts {a.chart.names} and {b.chart.names} differ")
    degree = a.degree + b.degree
    table: dict[MultiIndex, Expr] = {}
    for (ia, ca), (ib, cb) in itertools.product(a.coefficients.items(), b.coefficients.items()):
        sign, key = permutation_sign(ia + ib)
        if sign == 0:
            continue
        table[key] = table.get(key, sympy.Integer(0)) + sign * ca * cb
    return Form(a.chart, degree, table)


def exterior_derivative_flat(t: Form) -> Form:
    """Exterior derivative with d(basis) = 0.

    Args:
        t (Form): Form of degree p.

    Returns:
        The form of degree p + 1 with antisymmetrized partial
        derivatives as coefficients.

    Raises:
        None
    """
    table: dict[MultiIndex, Expr] = {}
    for idx, value in t.coefficients.items():
        for j, symbol in enumerate(t.chart.symbols):
            if j in idx:
                continue
            derivative = sympy.diff(value, symbol)
            if derivative == 0:
                continue
            sign, key = permutation_sign((j,) + idx)
            table[key] = table.get(key, sympy.Integer(0)) + sign * derivative
    return Form(t.chart, t.degree + 1, table)


def exact_differential(chart: Chart, e: Expr | int) -> Form:
    """The differential of a scalar function as a 1-form."""
    return exterior_derivative_flat(scalar_form(chart, e))


class Metric:
    """A symmetric metric g_ij on a chart.

    Attributes:
        chart (Chart): Chart of the metric.
        entries (ImmutableMatrix): Symmetric table of Expr entries.
        determinant (Expr): Cached determinant of entries.
    """

    __slots__ = ("chart", "entries", "determinant")

    def __init__(self, chart: Chart, entries: typing.Sequence[typing.Sequence[Expr | int]]):
        """Constructor of the Metric class.

        Args:
            chart (Chart): Chart of the metric.
            entries (Sequence[Sequence[Expr]]): n x n table.

        Raises:
            MetricError: The table is not n x n, not symmetric, or its
                determinant vanishes at (1, ..., 1).
        """
        n = chart.dimension
        if len(entries) != n or any(len(row) != n for row in entries):
            raise MetricError(f"metric table is not {n}x{n}")
        matrix = sympy.ImmutableMatrix([[symexpr.simplify(sympy.sympify(v)) for v in row] for row in entries])
        if matrix != matrix.T:
            raise MetricError("metric table is not symmetric")
        determinant = symexpr.simplify(matrix.det())
        spot = determinant.subs({s: 1 for s in chart.symbols}, simultaneous=True)
        if spot == 0:
            raise MetricError(f"metric determinant {determinant} vanishes at (1, ..., 1)")
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "entries", matrix)
        object.__setattr__(self, "determinant", determinant)

    def __setattr__(self, name, value):
        raise AttributeError(f"Metric is immutable, cannot set {name}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Metric):
            return NotImplemented
        return self.chart == other.chart and self.entries == other.entries

    def __hash__(self) -> int:
        return hash((self.chart, self.entries))

    def __repr__(self) -> str:
        return f"Metric({self.entries.tolist()} on {self.chart.names})"

    @property
    def is_diagonal(self) -> bool:
        """True when every off-diagonal entry is zero."""
        n = self.chart.dimension
        return all(self.entries[i, j] == 0 for i in range(n) for j in range(n) if i != j)

    @property
    def is_euclidean(self) -> bool:
        """True for the identity table."""
        return self.entries == sympy.eye(self.chart.dimension)


def euclidean_metric(chart: Chart) -> Metric:
    """The Euclidean metric of a chart."""
    n = chart.dimension
    return Metric(chart, [[1 if i == j else 0 for j in range(n)] for i in range(n)])


def diagonal_metric(chart: Chart, diagonal: typing.Sequence[Expr | int]) -> Metric:
    """The diagonal metric with the given entries."""
    n = chart.dimension
    return Metric(chart, [[diagonal[i] if i == j else 0 for j in range(n)] for i in range(n)])


def hodge_star(t: Form, g: Metric) -> Form:
    """Hodge dual of a form with respect to a diagonal metric.

    For a basis p-form, *(dx^I) = sign(I, I') sqrt|det g| prod_{i in I}
    g^ii dx^I', where I' is the complementary multi-index.

    Args:
        t (Form): Form of degree p.
        g (Metric): Diagonal metric on the same chart.

    Returns:
        The dual form of degree n - p.

    Raises:
        ChartMismatchError: The metric lives on another chart.
        UnsupportedMetricError: The metric is not diagonal.
        DegreeError: p exceeds the chart dimension.
    """
    if t.chart != g.chart:
        raise ChartMismatchError(f"charts {t.chart.names} and {g.chart.names} differ")
    if not g.is_diagonal:
        raise UnsupportedMetricError("hodge_star supports diagonal metrics only")
    n = t.chart.dimension
    if t.degree > n:
        raise DegreeError(f"degree {t.degree} exceeds chart dimension {n}")
    volume = sympy.sqrt(sympy.Abs(g.determinant)) if not g.is_euclidean else sympy.Integer(1)
    table: dict[MultiIndex, Expr] = {}
    for idx, value in t.coefficients.items():
        complement = tuple(i for i in range(n) if i not in idx)
        sign, _ = permutation_sign(idx + complement)
        factor = sympy.Mul(*(1 / g.entries[i, i] for i in idx))
        table[complement] = sign * volume * factor * value
    return Form(t.chart, n - t.degree, table)


class Pseudostructure:
    """A coordinate slice {x^j = c_j} of a chart.

    The constants are rationals, or symbols when the slice stands for a
    whole family of parallel slices.

    Attributes:
        chart (Chart): Chart the slice lies in.
        constraints (dict[int, Expr]): Constant of each constrained
            index, ordered by index.
        induced_chart (Chart): Chart of the free variables.
    """

    __slots__ = ("chart", "constraints", "induced_chart")

    def __init__(self, chart: Chart, constraints: typing.Mapping[int | str, Expr | int]):
        """Constructor of the Pseudostructure class.

        Args:
            chart (Chart): Chart the slice lies in.
            constraints (Mapping[int | str, Expr]): Constant of each
                constrained variable, keyed by index or name.

        Raises:
            ChartError: A key is not a chart variable, a variable is
                constrained twice, or a constant depends on a chart
                variable.
        """
        table: dict[int, Expr] = {}
        for key, value in constraints.items():
            index = chart.index(key) if isinstance(key, str) else key
            if index < 0 or index >= chart.dimension:
                raise ChartError(f"constrained index {index} outside chart {chart.names}")
            if index in table:
                raise ChartError(f"variable {chart.names[index]} constrained twice")
            constant = sympy.sympify(value)
            if constant.free_symbols & set(chart.symbols):
                raise ChartError(f"constant {constant} of {chart.names[index]} depends on chart variables")
            table[index] = constant
        free = tuple(name for i, name in enumerate(chart.names) if i not in table)
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "constraints", dict(sorted(table.items())))
        object.__setattr__(self, "induced_chart", Chart(names=free, induced=True))
        if not table:
            logger.warning("Pseudostructure on %s has no constraint, it is the whole chart", chart.names)

    def __setattr__(self, name, value):
        raise AttributeError(f"Pseudostructure is immutable, cannot set {name}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pseudostructure):
            return NotImplemented
        return self.chart == other.chart and self.constraints == other.constraints

    def __hash__(self) -> int:
        return hash((self.chart, tuple(self.constraints.items())))

    def __repr__(self) -> str:
        return f"Pseudostructure({self.to_text()} in {self.chart.names})"

    @property
    def is_whole_chart(self) -> bool:
        """True for the degenerate slice without constraints."""
        return not self.constraints

    @property
    def dimension(self) -> int:
        """Dimension n - |J| of the slice."""
        return self.induced_chart.dimension

    @property
    def free_indices(self) -> tuple[int, ...]:
        """Chart indices of the free variables."""
        return tuple(i for i in range(self.chart.dimension) if i not in self.constraints)

    @property
    def bindings(self) -> dict[sympy.Symbol, Expr]:
        """Substitution of every constrained chart symbol."""
        return {self.chart.symbols[i]: c for i, c in self.constraints.items()}

    @property
    def parameters(self) -> set[sympy.Symbol]:
        """Symbolic constants of the slice."""
        found: set[sympy.Symbol] = set()
        for constant in self.constraints.values():
            found |= constant.free_symbols
        return found

    def restrict(self, e: Expr) -> Expr:
        """Substitute the constrained variables in an expression."""
        return symexpr.simplify(sympy.sympify(e).subs(self.bindings, simultaneous=True))

    def to_text(self) -> str:
        """Render as {y = 2, z = 0}."""
        items = ", ".join(f"{self.chart.names[i]} = {symexpr.to_text(c)}" for i, c in self.constraints.items())
        return "{" + items + "}"


def pullback_to(t: Form, pi: Pseudostructure) -> Form:
    """Restrict a form to a pseudostructure.

    Constrained variables are replaced by their constants and every
    multi-index containing a constrained direction is dropped, since its
    differential vanishes on the slice.

    Args:
        t (Form): Form on the chart of pi.
        pi (Pseudostructure): Slice to restrict to.

    Returns:
        The restricted form on the induced chart.

    Raises:
        ChartMismatchError: The form lives on another chart.
    """
    if t.chart != pi.chart:
        raise ChartMismatchError(f"charts {t.chart.names} and {pi.chart.names} differ")
    position = {old: new for new, old in enumerate(pi.free_indices)}
    table: dict[MultiIndex, Expr] = {}
    for idx, value in t.coefficients.items():
        if any(i in pi.constraints for i in idx):
            continue
        table[tuple(position[i] for i in idx)] = pi.restrict(value)
    return Form(pi.induced_chart, t.degree, table)


def homotopy_antiderivative(t: Form, config: EngineConfig | None = None) -> Form:
    """A potential of a closed polynomial form.

    Uses the homotopy operator of the star-shaped domain centered at
    the origin: each coefficient is scaled along the ray x -> s x,
    multiplied by s^(p-1), integrated over s in [0, 1], and contracted
    with the position vector.

    Args:
        t (Form): Closed form of degree p >= 1 with polynomial
            coefficients.
        config (EngineConfig | None): Sampler settings for the closure
            check.

    Returns:
        A form chi of degree p - 1 with d chi = t.

    Raises:
        DegreeError: p is 0.
        UnsupportedIntegrandError: A coefficient is not polynomial.
        NotClosedError: d t is not an EXACT zero.
    """
    logger.debug("entry: homotopy_antiderivative(%s)", t)
    if t.degree < 1:
        raise DegreeError("homotopy_antiderivative needs a form of degree at least 1")
    if not t.is_polynomial():
        raise UnsupportedIntegrandError(f"coefficients of {t.to_text()} are not polynomial")
    closure = exterior_derivative_flat(t).is_zero(config)
    if not closure.exact_zero:
        raise NotClosedError(f"{t.to_text()} is not closed", additional_message=closure.confidence.value)

    s = sympy.Dummy("s")
    scaling = {x: s * x for x in t.chart.symbols}
    table: dict[MultiIndex, Expr] = {}
    for idx, value in t.coefficients.items():
        radial = s ** (t.degree - 1) * value.subs(scaling, simultaneous=True)
        integral = symexpr.integrate_polynomial(radial, s).subs(s, 1)
        for j, i in enumerate(idx):
            key = idx[:j] + idx[j + 1 :]
            table[key] = table.get(key, sympy.Integer(0)) + (-1) ** j * integral * t.chart.symbols[i]
    return Form(t.chart, t.degree - 1, table)
