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

"""Deforming-manifold data: connections, torsion and commutators.

On a deforming manifold the basis differentials do not vanish. With the
torsion T^s_ab = G^s_ba - G^s_ab of a connection G, the differential of
a basis 1-form is d(dx^s) = sum_{a<b} T^s_ab dx^a ^ dx^b, and the
evolutionary differential of a form adds the coefficient-weighted basis
differentials to the flat exterior derivative.
"""

import itertools
import logging
import math
import typing

import pydantic
import sympy

from evoforms import symexpr
from evoforms.config import EngineConfig
from evoforms.exceptions import ChartError, ChartMismatchError, PreconditionError, ProbeDimensionError
from evoforms.forms import Form, MultiIndex, Pseudostructure, basis_form, exterior_derivative_flat, wedge, zero_form
from evoforms.symexpr import Chart, Expr, ZeroVerdict


logger = logging.getLogger(__name__)

ConnectionIndex: typing.TypeAlias = tuple[int, int, int]


class Connection:
    """Connection coefficients G^s_ab on a chart.

    The table is total: entries that were not given are zero. Only the
    antisymmetric part in the lower indices (the torsion) enters the
    evolutionary differential; the symmetric part is stored but inert.

    Attributes:
        chart (Chart): Chart of the connection.
        table (ImmutableDenseNDimArray): Entries indexed [s, a, b]
            with s the upper index.
        torsion (ImmutableDenseNDimArray): T[s, a, b] = G[s, b, a] -
            G[s, a, b].
    """

    __slots__ = ("chart", "table", "torsion")

    def __init__(self, chart: Chart, entries: typing.Mapping[ConnectionIndex, Expr | int] | None = None):
        """Constructor of the Connection class.

        Args:
            chart (Chart): Chart of the connection.
            entries (Mapping[tuple[int, int, int], Expr] | None):
                Nonzero entries keyed by 0-based (upper, lower, lower).

        Raises:
            ChartError: An index is outside the chart.
        """
        n = chart.dimension
        array = sympy.MutableDenseNDimArray.zeros(n, n, n) if n else sympy.MutableDenseNDimArray([], (0, 0, 0))
        for key, value in (entries or {}).items():
            if len(key) != 3 or any(i < 0 or i >= n for i in key):
                raise ChartError(f"connection index {key} outside chart {chart.names}")
            array[key] = symexpr.simplify(sympy.sympify(value))
        table = sympy.ImmutableDenseNDimArray(array)
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "torsion", torsion_of_table(table, n))

    def __setattr__(self, name, value):
        raise AttributeError(f"Connection is immutable, cannot set {name}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Connection):
            return NotImplemented
        return self.chart == other.chart and self.table == other.table

    def __hash__(self) -> int:
        return hash((self.chart, self.table))

    def __repr__(self) -> str:
        return f"Connection({self.entries()} on {self.chart.names})"

    def entries(self) -> dict[ConnectionIndex, Expr]:
        """Nonzero entries keyed by (upper, lower, lower)."""
        n = self.chart.dimension
        return {
            key: self.table[key] for key in itertools.product(range(n), repeat=3) if self.table[key] != 0
        }

    @property
    def is_zero(self) -> bool:
        """True when every entry is zero."""
        return not self.entries()

    @property
    def is_symmetric(self) -> bool:
        """True when the torsion vanishes structurally."""
        n = self.chart.dimension
        return all(self.torsion[key] == 0 for key in itertools.product(range(n), repeat=3))

    def pullback_to(self, pi: Pseudostructure) -> "Connection":
        """Restrict the connection to a pseudostructure.

        Rows and columns of constrained indices are dropped and the
        constrained variables are replaced by their constants.

        Args:
            pi (Pseudostructure): Slice of the connection chart.

        Returns:
            The connection on the induced chart.

        Raises:
            ChartMismatchError: pi lies in another chart.
        """
        if pi.chart != self.chart:
            raise ChartMismatchError(f"charts {self.chart.names} and {pi.chart.names} differ")
        free = pi.free_indices
        entries = {}
        for new_key in itertools.product(range(len(free)), repeat=3):
            old_key = tuple(free[i] for i in new_key)
            value = self.table[old_key]
            if value != 0:
                entries[new_key] = pi.restrict(value)
        return Connection(pi.induced_chart, entries)


def torsion_of_table(table: sympy.ImmutableDenseNDimArray, n: int) -> sympy.ImmutableDenseNDimArray:
    """Antisymmetric part T[s, a, b] = G[s, b, a] - G[s, a, b] of a table."""
    if n == 0:
        return table
    result = sympy.MutableDenseNDimArray.zeros(n, n, n)
    for s, a, b in itertools.product(range(n), repeat=3):
        result[s, a, b] = symexpr.simplify(table[s, b, a] - table[s, a, b])
    return sympy.ImmutableDenseNDimArray(result)


def zero_connection(chart: Chart) -> Connection:
    """The connection with every entry zero."""
    return Connection(chart)


def torsion(c: Connection) -> sympy.ImmutableDenseNDimArray:
    """Commutator of the first-degree metric form.

    Args:
        c (Connection): Connection G.

    Returns:
        The table T[s, a, b] = G[s, b, a] - G[s, a, b], antisymmetric
        in a and b.

    Raises:
        None
    """
    return c.torsion


def _basis_one_differential(c: Connection, sigma: int) -> Form:
    """d(dx^sigma) as the torsion 2-form."""
    n = c.chart.dimension
    table = {(a, b): c.torsion[sigma, a, b] for a, b in itertools.combinations(range(n), 2)}
    return Form(c.chart, 2, table)


def basis_differential(c: Connection, idx: typing.Sequence[int]) -> Form:
    """Differential of a basis form on the deforming manifold.

    d(dx^s) = sum_{a<b} T^s_ab dx^a ^ dx^b, extended to basis p-forms by
    the graded Leibniz rule over the wedge factors.

    Args:
        c (Connection): Connection giving the torsion.
        idx (Sequence[int]): Strictly increasing multi-index.

    Returns:
        The form d(dx^i_1 ^ ... ^ dx^i_p) of degree p + 1.

    Raises:
        PreconditionError: idx is not strictly increasing.
    """
    idx = tuple(idx)
    if any(a >= b for a, b in zip(idx, idx[1:])):
        raise PreconditionError(f"multi-index {idx} is not strictly increasing")
    result = zero_form(c.chart, len(idx) + 1)
    for k, sigma in enumerate(idx):
        before = basis_form(c.chart, idx[:k])
        after = basis_form(c.chart, idx[k + 1 :])
        term = wedge(wedge(before, _basis_one_differential(c, sigma)), after)
        result = result + (term if k % 2 == 0 else -term)
    return result


def metric_term(t: Form, c: Connection) -> Form:
    """sum over the entries of t of a_idx * basis_differential(c, idx)."""
    result = zero_form(t.chart, t.degree + 1)
    if c.is_symmetric:
        return result
    for idx, value in t.coefficients.items():
        result = result + basis_differential(c, idx).scale(value)
    return result


def evolutionary_derivative(t: Form, c: Connection) -> Form:
    """Differential of an evolutionary form.

    Args:
        t (Form): Form of degree p.
        c (Connection): Connection of the deforming manifold.

    Returns:
        exterior_derivative_flat(t) plus the basis-deformation term.

    Raises:
        ChartMismatchError: t and c live on different charts.
    """
    if t.chart != c.chart:
        raise ChartMismatchError(f"charts {t.chart.names} and {c.chart.names} differ")
    return exterior_derivative_flat(t) + metric_term(t, c)


class CommutatorReport(pydantic.BaseModel):
    """The two-term commutator of an evolutionary form.

    Attributes:
        coefficient_term (Form): Derivatives of the form coefficients.
        metric_term (Form): Contribution of the torsion.
        total (Form): coefficient_term + metric_term.
        coefficient_verdict (ZeroVerdict): Vanishing of coefficient_term.
        metric_verdict (ZeroVerdict): Vanishing of metric_term.
        total_verdict (ZeroVerdict): Vanishing of total.
        probe (tuple): Point the indicators were evaluated at.
        discontinuity_indicator (float | None): Euclidean magnitude of
            the total coefficients at the probe; None when a coefficient
            does not evaluate to a number there.
        quantum_indicator (float | None): Same magnitude for the
            coefficient term.
        deformation_indicator (float | None): Same magnitude for the
            metric term.
    """

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True, frozen=True)
    coefficient_term: Form
    metric_term: Form
    total: Form
    coefficient_verdict: ZeroVerdict
    metric_verdict: ZeroVerdict
    total_verdict: ZeroVerdict
    probe: tuple[typing.Any, ...]
    discontinuity_indicator: float | None
    quantum_indicator: float | None
    deformation_indicator: float | None


def probe_magnitude(t: Form, probe: typing.Sequence[typing.Any]) -> float | None:
    """Euclidean norm of the coefficients of t at a probe point.

    Args:
        t (Form): Form to evaluate.
        probe (Sequence): One rational coordinate per chart variable.

    Returns:
        The magnitude, or None when a coefficient does not evaluate to
        a real number at the probe.

    Raises:
        ProbeDimensionError: The probe has the wrong dimension.
    """
    if len(probe) != t.chart.dimension:
        raise ProbeDimensionError(f"probe {tuple(probe)} does not have dimension {t.chart.dimension}")
    values = t.evaluate(probe)
    squares = sympy.Add(*(v**2 for v in values.values()))
    try:
        magnitude = float(sympy.sqrt(squares).evalf())
    except TypeError:
        logger.warning("Commutator of %s is not numeric at probe %s", t.to_text(), tuple(probe))
        return None
    if not math.isfinite(magnitude):
        return None
    return magnitude


def form_commutator(
    t: Form, c: Connection, probe: typing.Sequence[typing.Any], config: EngineConfig | None = None
) -> CommutatorReport:
    """Commutator of an evolutionary form split into its two terms.

    Args:
        t (Form): Evolutionary form.
        c (Connection): Connection of the deforming manifold.
        probe (Sequence): Point with one rational coordinate per chart
            variable.
        config (EngineConfig | None): Sampler settings.

    Returns:
        The commutator report.

    Raises:
        ChartMismatchError: t and c live on different charts.
        ProbeDimensionError: The probe has the wrong dimension.
    """
    logger.debug("entry: form_commutator(%s, %s)", t, probe)
    if t.chart != c.chart:
        raise ChartMismatchError(f"charts {t.chart.names} and {c.chart.names} differ")
    probe = check_probe(t.chart, probe)
    coefficient = exterior_derivative_flat(t)
    metric = metric_term(t, c)
    total = coefficient + metric
    return CommutatorReport(
        coefficient_term=coefficient,
        metric_term=metric,
        total=total,
        coefficient_verdict=coefficient.is_zero(config),
        metric_verdict=metric.is_zero(config),
        total_verdict=total.is_zero(config),
        probe=probe,
        discontinuity_indicator=probe_magnitude(total, probe),
        quantum_indicator=probe_magnitude(coefficient, probe),
        deformation_indicator=probe_magnitude(metric, probe),
    )


def commutator_components(t: Form, c: Connection) -> dict[MultiIndex, Expr]:
    """Coefficients K_ab (a < b) of the total commutator of t."""
    return dict(evolutionary_derivative(t, c).coefficients)


def symmetric_connection(chart: Chart, entries: typing.Mapping[ConnectionIndex, Expr | int]) -> Connection:
    """Connection with G^s_ab = G^s_ba = the given entry for every given key."""
    table: dict[ConnectionIndex, Expr | int] = {}
    for (s, a, b), value in entries.items():
        table[(s, a, b)] = value
        table[(s, b, a)] = value
    return Connection(chart, table)


def check_probe(chart: Chart, probe: typing.Sequence[typing.Any]) -> tuple[sympy.Rational, ...]:
    """Validate and convert a probe point to rationals.

    Raises:
        ProbeDimensionError: Wrong dimension or a non-rational coordinate.
    """
    if len(probe) != chart.dimension:
        raise ProbeDimensionError(f"probe {tuple(probe)} does not have dimension {chart.dimension}")
    try:
        return tuple(sympy.Rational(v) for v in probe)
    except (TypeError, ValueError) as err:
        raise ProbeDimensionError(f"probe {tuple(probe)} has a non-rational coordinate") from err

