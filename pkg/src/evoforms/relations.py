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

"""Closure, relations and the origination of closed inexact forms.

A relation d(psi) = omega is identical when omega is closed under the
evolutionary differential and psi is a potential of omega; it is
nonidentical when the commutator of omega does not vanish. Restricting a
nonidentical relation to a pseudostructure on which omega and its dual
become closed produces an identical relation there: an origination event.
"""

import concurrent.futures
import enum
import itertools
import logging
import typing

import pydantic
import sympy
import typing_extensions

from evoforms import symexpr
from evoforms.config import DEFAULT_CONFIG, EngineConfig
from evoforms.exceptions import (
    ArityError,
    BaseEvoFormsError,
    ChartMismatchError,
    ClassificationRangeError,
    DegreeError,
    NoOriginationError,
    PreconditionError,
    UnsupportedMetricError,
)
from evoforms.forms import (
    Form,
    Metric,
    Pseudostructure,
    basis_form,
    euclidean_metric,
    exterior_derivative_flat,
    homotopy_antiderivative,
    hodge_star,
    one_form,
    pullback_to,
    scalar_form,
    wedge,
    zero_form,
)
from evoforms.geometry import Connection, evolutionary_derivative, zero_connection
from evoforms.symexpr import Chart, Confidence, Expr, ZeroVerdict


logger = logging.getLogger(__name__)


class RelationKind(str, enum.Enum):
    """Diagnosed kind of a relation d(psi) = omega."""

    IDENTICAL = "identical"
    NONIDENTICAL = "nonidentical"
    INDETERMINATE = "indeterminate"


class Interaction(str, enum.Enum):
    """Interaction label of a generated structure, fixed by k."""

    STRONG = "strong"
    WEAK = "weak"
    ELECTROMAGNETIC = "electromagnetic"
    GRAVITATIONAL = "gravitational"


_INTERACTIONS = {
    0: Interaction.STRONG,
    1: Interaction.WEAK,
    2: Interaction.ELECTROMAGNETIC,
    3: Interaction.GRAVITATIONAL,
}


class ClosureVerdict(pydantic.BaseModel):
    """Whether a form is closed.

    Attributes:
        closed (bool | None): True if the differential vanishes, None if
            the zero test was indeterminate.
        confidence (Confidence): Confidence of the underlying zero test.
    """

    model_config = pydantic.ConfigDict(frozen=True)
    closed: bool | None
    confidence: Confidence

    @classmethod
    def from_zero(cls, verdict: ZeroVerdict) -> "ClosureVerdict":
        """Closure verdict of a differential with the given zero verdict."""
        return cls(closed=verdict.zero, confidence=verdict.confidence)

    @property
    def label(self) -> str:
        """CLOSED, NOT CLOSED or INDETERMINATE."""
        if self.closed is None:
            return "INDETERMINATE"
        return "CLOSED" if self.closed else "NOT CLOSED"


class Relation(pydantic.BaseModel):
    """A relation d(lhs) = rhs with its diagnosis.

    The forms live on the chart of the relation: the chart of the
    document, or the induced chart of the pseudostructure the relation
    was restricted to.

    Attributes:
        lhs (Form | None): Potential psi of degree p - 1, or None when
            unknown.
        rhs (Form): Form omega of degree p.
        connection (Connection): Connection on the chart of rhs.
        kind (RelationKind): Diagnosed kind.
        confidence (Confidence): Confidence of the diagnosis.
        reason (str): Short reason for the kind.
        commutator_verdict (ZeroVerdict): Vanishing of the total
            commutator of rhs.
        potential_verdict (ZeroVerdict | None): Vanishing of
            d(lhs) - rhs, None when lhs is unknown.
        pseudostructure (Pseudostructure | None): Slice the relation
            lives on.
    """

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True, frozen=True)
    lhs: Form | None
    rhs: Form
    connection: Connection
    kind: RelationKind
    confidence: Confidence
    reason: str
    commutator_verdict: ZeroVerdict
    potential_verdict: ZeroVerdict | None = None
    pseudostructure: Pseudostructure | None = None

    @pydantic.model_validator(mode="after")
    def validate_degrees(self) -> typing_extensions.Self:
        """deg(rhs) = deg(lhs) + 1 and one chart for every part."""
        if self.lhs is not None:
            if self.lhs.degree + 1 != self.rhs.degree:
                raise ValueError(f"lhs degree {self.lhs.degree} does not match rhs degree {self.rhs.degree}")
            if self.lhs.chart != self.rhs.chart:
                raise ValueError("lhs and rhs live on different charts")
        if self.connection.chart != self.rhs.chart:
            raise ValueError("connection and rhs live on different charts")
        return self

    @property
    def degree(self) -> int:
        """Degree p of the rhs."""
        return self.rhs.degree


class OriginationEvent(pydantic.BaseModel):
    """A pseudostructure on which a form and its dual become closed.

    Attributes:
        pseudostructure (Pseudostructure): Slice with symbolic constants.
        restricted_form (Form): The form pulled back to the slice.
        closure_verdict (ClosureVerdict): d_pi omega = 0.
        dual_verdict (ClosureVerdict): d_pi *omega = 0.
        relation (Relation): The identical relation d_pi phi = omega_pi.
        residual (Form): Total commutator of the form off the slice.
        residual_verdict (ZeroVerdict): Vanishing of residual; never a
            zero verdict for an emitted event.
        interior_torsion_vanishes (bool): Whether the pulled-back
            connection is symmetric on the slice.
    """

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True, frozen=True)
    pseudostructure: Pseudostructure
    restricted_form: Form
    closure_verdict: ClosureVerdict
    dual_verdict: ClosureVerdict
    relation: Relation
    residual: Form
    residual_verdict: ZeroVerdict
    interior_torsion_vanishes: bool


class StructureClass(pydantic.BaseModel):
    """The (p, k, n) classification of a generated structure.

    Attributes:
        p (int): Degree of the evolutionary form.
        k (int): Degree of the generated closed form.
        n (int): Dimension of the original space.
        formed_dimension (int): Formed space dimension N.
        pseudostructure_dimension (int): N - k.
        interaction (Interaction): Label fixed by k.
    """

    model_config = pydantic.ConfigDict(frozen=True)
    p: int
    k: int
    n: int
    formed_dimension: int
    pseudostructure_dimension: int
    interaction: Interaction


class ChainLink(pydantic.BaseModel):
    """One closed form produced by sequential integration.

    Attributes:
        k (int): Degree of the closed form.
        form (Form): The closed form, on the chart of its slice.
        pseudostructure (Pseudostructure | None): Slice of the previous
            chart the form lives on; None for the starting chart.
        constraints (dict[str, Expr]): Every constraint accumulated
            along the chain, keyed by variable name.
        closure_verdict (ClosureVerdict): Closure of form on its slice.
        relation (Relation): Relation the form is the rhs of.
    """

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True, frozen=True)
    k: int
    form: Form
    pseudostructure: Pseudostructure | None
    constraints: dict[str, typing.Any]
    closure_verdict: ClosureVerdict
    relation: Relation


class DegeneracyIndicators(pydantic.BaseModel):
    """Functional expressions whose vanishing signals degeneracy.

    Attributes:
        jacobian (Expr | None): Jacobian determinant, when the number of
            functions equals the chart dimension.
        poisson_bracket (Expr | None): {f, g}, for two functions on an
            even-dimensional (q, p) chart.
        jacobian_verdict (ZeroVerdict | None): Vanishing of jacobian.
        bracket_verdict (ZeroVerdict | None): Vanishing of the bracket.
    """

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True, frozen=True)
    jacobian: typing.Any = None
    poisson_bracket: typing.Any = None
    jacobian_verdict: ZeroVerdict | None = None
    bracket_verdict: ZeroVerdict | None = None


class CanonicalCheck(pydantic.BaseModel):
    """Result of verify_canonical.

    Attributes:
        is_canonical (ClosureVerdict): Closure of delta.
        delta (Form): sum p dq - sum P dQ.
        generating_function (Form | None): W with dW = delta, when
            delta is closed and polynomial.
    """

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True, frozen=True)
    is_canonical: ClosureVerdict
    delta: Form
    generating_function: Form | None


class IntegrabilityReport(pydantic.BaseModel):
    """Whether dU = A_mu dx^mu can be solved for U.

    Attributes:
        form (Form): The 1-form A_mu dx^mu.
        integrable (ClosureVerdict): Closure of form.
        potential (Form | None): U when integrable and polynomial.
    """

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True, frozen=True)
    form: Form
    integrable: ClosureVerdict
    potential: Form | None


def _connection_for(t: Form, c: Connection | None) -> Connection:
    """Return c, or the zero connection of the chart of t."""
    if c is None:
        return zero_connection(t.chart)
    if c.chart != t.chart:
        raise ChartMismatchError(f"charts {t.chart.names} and {c.chart.names} differ")
    return c


def is_closed(t: Form, c: Connection | None = None, config: EngineConfig | None = None) -> ClosureVerdict:
    """Whether every coefficient of the evolutionary differential vanishes.

    Args:
        t (Form): Form to test.
        c (Connection | None): Connection; the zero connection if
            omitted.
        config (EngineConfig | None): Sampler settings.

    Returns:
        The closure verdict.

    Raises:
        ChartMismatchError: c lives on another chart.
    """
    c = _connection_for(t, c)
    return ClosureVerdict.from_zero(evolutionary_derivative(t, c).is_zero(config))


def is_closed_on(
    t: Form, pi: Pseudostructure, c: Connection | None = None, config: EngineConfig | None = None
) -> ClosureVerdict:
    """Closure of a form restricted to a pseudostructure.

    Args:
        t (Form): Form on the chart of pi.
        pi (Pseudostructure): Slice to restrict to.
        c (Connection | None): Connection on the chart; the zero
            connection if omitted.
        config (EngineConfig | None): Sampler settings.

    Returns:
        The closure verdict of the pulled-back form under the
        pulled-back connection.

    Raises:
        ChartMismatchError: t, pi or c live on different charts.
    """
    c = _connection_for(t, c)
    return is_closed(pullback_to(t, pi), c.pullback_to(pi), config)


def _diagnose(
    lhs: Form | None, rhs: Form, c: Connection, config: EngineConfig
) -> tuple[RelationKind, Confidence, str, ZeroVerdict, ZeroVerdict | None]:
    """Kind, confidence, reason and evidence of d(lhs) = rhs."""
    commutator = evolutionary_derivative(rhs, c).is_zero(config)
    potential = None
    if lhs is not None:
        potential = (exterior_derivative_flat(lhs) - rhs).is_zero(config)
    if commutator.exact_nonzero:
        return RelationKind.NONIDENTICAL, Confidence.EXACT, "unclosed-rhs", commutator, potential
    if potential is not None and potential.exact_nonzero:
        return RelationKind.NONIDENTICAL, Confidence.EXACT, "potential-mismatch", commutator, potential
    evidence = [commutator] + ([potential] if potential is not None else [])
    if any(v.zero is not True for v in evidence):
        return RelationKind.INDETERMINATE, Confidence.INDETERMINATE, "indeterminate-zero-test", commutator, potential
    if all(v.confidence == Confidence.EXACT for v in evidence):
        return RelationKind.IDENTICAL, Confidence.EXACT, "closed-rhs", commutator, potential
    if config.accept_probable:
        return RelationKind.IDENTICAL, Confidence.PROBABLE, "closed-rhs", commutator, potential
    return RelationKind.INDETERMINATE, Confidence.PROBABLE, "probable-zero-only", commutator, potential


def make_relation(
    rhs: Form,
    lhs: Form | None = None,
    connection: Connection | None = None,
    pseudostructure: Pseudostructure | None = None,
    config: EngineConfig | None = None,
) -> Relation:
    """Build and diagnose the relation d(lhs) = rhs.

    Args:
        rhs (Form): Form omega of degree p.
        lhs (Form | None): Potential psi of degree p - 1, or None when
            the kind is to be judged from rhs alone.
        connection (Connection | None): Connection on the chart of rhs;
            the zero connection if omitted.
        pseudostructure (Pseudostructure | None): Slice the relation
            lives on.
        config (EngineConfig | None): Sampler settings.

    Returns:
        The diagnosed relation.

    Raises:
        DegreeError: deg(rhs) is not deg(lhs) + 1.
        ChartMismatchError: The parts live on different charts.
    """
    config = config or DEFAULT_CONFIG
    if lhs is not None and lhs.degree + 1 != rhs.degree:
        raise DegreeError(f"lhs degree {lhs.degree} does not match rhs degree {rhs.degree}")
    if lhs is not None and lhs.chart != rhs.chart:
        raise ChartMismatchError(f"charts {lhs.chart.names} and {rhs.chart.names} differ")
    connection = _connection_for(rhs, connection)
    kind, confidence, reason, commutator, potential = _diagnose(lhs, rhs, connection, config)
    return Relation(
        lhs=lhs,
        rhs=rhs,
        connection=connection,
        kind=kind,
        confidence=confidence,
        reason=reason,
        commutator_verdict=commutator,
        potential_verdict=potential,
        pseudostructure=pseudostructure,
    )


def relation_kind(r: Relation, config: EngineConfig | None = None) -> RelationKind:
    """Diagnose a relation from its forms.

    IDENTICAL when rhs is closed and d(lhs) - rhs vanishes, NONIDENTICAL
    when the commutator of rhs (or the potential mismatch) is an EXACT
    nonzero, INDETERMINATE when the decision rests on probable or
    indeterminate zero tests.

    Args:
        r (Relation): Relation to diagnose.
        config (EngineConfig | None): Sampler settings.

    Returns:
        The relation kind.

    Raises:
        DegreeError: deg(rhs) is not deg(lhs) + 1.
    """
    if r.lhs is not None and r.lhs.degree + 1 != r.rhs.degree:
        raise DegreeError(f"lhs degree {r.lhs.degree} does not match rhs degree {r.rhs.degree}")
    return _diagnose(r.lhs, r.rhs, r.connection, config or DEFAULT_CONFIG)[0]


def _parameter_symbols(t: Form) -> dict[int, sympy.Symbol]:
    """Symbolic constant c_<name> of each chart variable of t.

    A name already taken by a chart variable, a coefficient symbol or
    another constant gets trailing underscores until it is free.
    """
    taken = set(t.chart.names)
    for coefficient in t.coefficients.values():
        taken.update(str(s) for s in coefficient.free_symbols)
    constants = {}
    for i, name in enumerate(t.chart.names):
        candidate = f"c_{name}"
        while candidate in taken:
            candidate += "_"
        taken.add(candidate)
        constants[i] = sympy.Symbol(candidate)
    return constants


def _restricted_potential(rhs: Form, config: EngineConfig) -> Form | None:
    """Homotopy potential of a closed restricted form, None if unsupported."""
    if rhs.degree == 0:
        return None
    if rhs.is_empty:
        return zero_form(rhs.chart, rhs.degree - 1)
    try:
        return homotopy_antiderivative(rhs, config)
    except BaseEvoFormsError:
        logger.warning("No polynomial potential for %s", rhs.to_text(), exc_info=True)
        return None


def _search_candidate(
    t: Form, star: Form, c: Connection, pi: Pseudostructure, residual: Form, residual_verdict: ZeroVerdict,
    config: EngineConfig,
) -> OriginationEvent | None:
    """Test both closure conditions of one candidate slice."""
    restricted = pullback_to(t, pi)
    if restricted.is_zero(config).zero is not False:
        return None
    c_pi = c.pullback_to(pi)
    closure = is_closed(restricted, c_pi, config)
    if closure.closed is not True:
        return None
    dual = is_closed(pullback_to(star, pi), c_pi, config)
    if dual.closed is not True:
        return None
    relation = make_relation(restricted, _restricted_potential(restricted, config), c_pi, pi, config)
    return OriginationEvent(
        pseudostructure=pi,
        restricted_form=restricted,
        closure_verdict=closure,
        dual_verdict=dual,
        relation=relation,
        residual=residual,
        residual_verdict=residual_verdict,
        interior_torsion_vanishes=c_pi.is_symmetric,
    )


def origination_on(
    t: Form, g: Metric, pi: Pseudostructure, c: Connection | None = None, config: EngineConfig | None = None
) -> OriginationEvent | None:
    """Test one given pseudostructure for an origination event.

    Args:
        t (Form): Evolutionary form.
        g (Metric): Diagonal metric for the dual form.
        pi (Pseudostructure): Candidate slice.
        c (Connection | None): Connection; the zero connection if
            omitted.
        config (EngineConfig | None): Sampler settings.

    Returns:
        The event when the total commutator of t is nonzero and both
        the restricted form and its restricted dual are closed on pi,
        None otherwise.

    Raises:
        UnsupportedMetricError: g is not diagonal.
        ChartMismatchError: pi lies in another chart.
    """
    config = config or DEFAULT_CONFIG
    c = _connection_for(t, c)
    if not g.is_diagonal:
        raise UnsupportedMetricError("origination_on supports diagonal metrics only")
    if pi.chart != t.chart:
        raise ChartMismatchError(f"charts {t.chart.names} and {pi.chart.names} differ")
    residual = evolutionary_derivative(t, c)
    residual_verdict = residual.is_zero(config)
    if residual_verdict.zero is not False:
        return None
    return _search_candidate(t, hodge_star(t, g), c, pi, residual, residual_verdict, config)


def pseudostructure_search(
    t: Form, g: Metric, c: Connection | None = None, config: EngineConfig | None = None
) -> list[OriginationEvent]:
    """Search coordinate slices on which a form and its dual are closed.

    Every nonempty subset J of the chart indices is tried with symbolic
    constants, so one event stands for the family of parallel slices
    {x^j = c_j}. Only minimal passing subsets are reported, and only
    subsets on which the restricted form does not vanish. No event is
    reported when the total commutator of the form vanishes, since the
    form is then closed outright.

    Args:
        t (Form): Evolutionary form.
        g (Metric): Diagonal metric for the dual form.
        c (Connection | None): Connection; the zero connection if
            omitted.
        config (EngineConfig | None): Sampler and search settings.

    Returns:
        Origination events ordered by |J|, then by the indices of J.

    Raises:
        UnsupportedMetricError: g is not diagonal.
        PreconditionError: The chart is too large to search.
    """
    config = config or DEFAULT_CONFIG
    logger.debug("entry: pseudostructure_search(%s)", t)
    c = _connection_for(t, c)
    if not g.is_diagonal:
        raise UnsupportedMetricError("pseudostructure_search supports diagonal metrics only")
    n = t.chart.dimension
    if n > config.max_search_dimension:
        raise PreconditionError(f"chart dimension {n} exceeds search bound {config.max_search_dimension}")

    residual = evolutionary_derivative(t, c)
    residual_verdict = residual.is_zero(config)
    if residual_verdict.zero is not False:
        logger.debug("Commutator of %s is not a nonzero, no origination", t)
        return []
    star = hodge_star(t, g)
    constants = _parameter_symbols(t)

    events: list[OriginationEvent] = []
    passed: list[frozenset[int]] = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=config.workers) as pool:
        for size in range(1, n + 1):
            subsets = [
                frozenset(j)
                for j in itertools.combinations(range(n), size)
                if not any(p <= frozenset(j) for p in passed)
            ]
            candidates = [Pseudostructure(t.chart, {i: constants[i] for i in sorted(j)}) for j in subsets]
            found = pool.map(
                lambda pi: _search_candidate(t, star, c, pi, residual, residual_verdict, config), candidates
            )
            for subset, event in zip(subsets, found):
                if event is not None:
                    passed.append(subset)
                    events.append(event)
    return events


def restrict_relation(r: Relation, pi: Pseudostructure, config: EngineConfig | None = None) -> Relation:
    """Restrict a nonidentical relation to a pseudostructure.

    Both sides are pulled back and the kind is diagnosed again under the
    pulled-back connection. When the restriction is identical, the
    restricted potential psi_pi is the homotopy potential of the
    restricted rhs; it is defined up to a closed form. A restricted rhs
    that is closed but not polynomial has no such potential: the
    relation stays IDENTICAL with lhs None and reason
    "no-polynomial-potential".

    Args:
        r (Relation): Relation that is not IDENTICAL.
        pi (Pseudostructure): Slice of the chart of r.
        config (EngineConfig | None): Sampler settings.

    Returns:
        The restricted relation. Its confidence never exceeds the
        confidence of r.

    Raises:
        PreconditionError: r is already IDENTICAL.
        NoOriginationError: The restricted relation is still
            nonidentical.
        ChartMismatchError: pi lies in another chart.
    """
    config = config or DEFAULT_CONFIG
    logger.debug("entry: restrict_relation(%s, %s)", r.rhs, pi)
    if r.kind == RelationKind.IDENTICAL:
        raise PreconditionError("restrict_relation needs a relation that is not identical")
    rhs = pullback_to(r.rhs, pi)
    c_pi = r.connection.pullback_to(pi)
    kind, confidence, reason, commutator, _ = _diagnose(None, rhs, c_pi, config)
    if kind == RelationKind.NONIDENTICAL:
        raise NoOriginationError(
            f"relation is still nonidentical on {pi.to_text()}", additional_message=rhs.to_text()
        )
    lhs = _restricted_potential(rhs, config) if kind == RelationKind.IDENTICAL else None
    potential = None
    if lhs is not None:
        kind, confidence, reason, commutator, potential = _diagnose(lhs, rhs, c_pi, config)
    elif kind == RelationKind.IDENTICAL and rhs.degree > 0:
        reason = "no-polynomial-potential"
        logger.warning("Restriction of %s to %s is identical without a potential", r.rhs.to_text(), pi.to_text())

    capped = symexpr.weakest(r.confidence, confidence)
    if kind == RelationKind.IDENTICAL and capped != Confidence.EXACT and not config.accept_probable:
        kind = RelationKind.INDETERMINATE
        reason = "probable-input"
    return Relation(
        lhs=lhs,
        rhs=rhs,
        connection=c_pi,
        kind=kind,
        confidence=capped,
        reason=reason,
        commutator_verdict=commutator,
        potential_verdict=potential,
        pseudostructure=pi,
    )


def integrate_relation(r: Relation, config: EngineConfig | None = None) -> Relation:
    """Integrate an identical relation once.

    The rhs is replaced by its homotopy potential chi, one degree lower,
    and the new relation d(?) = chi is diagnosed from chi alone on the
    same chart and connection. It is generically nonidentical, because
    chi itself is not closed.

    Args:
        r (Relation): IDENTICAL relation with rhs of degree >= 1 and
            polynomial coefficients.
        config (EngineConfig | None): Sampler settings.

    Returns:
        The integrated relation.

    Raises:
        PreconditionError: r is not IDENTICAL.
        DegreeError: The rhs has degree 0.
        UnsupportedIntegrandError: The rhs is not polynomial.
    """
    logger.debug("entry: integrate_relation(%s)", r.rhs)
    if r.kind != RelationKind.IDENTICAL:
        raise PreconditionError("integrate_relation needs an identical relation")
    if r.rhs.degree < 1:
        raise DegreeError("integrate_relation needs an rhs of degree at least 1")
    potential = homotopy_antiderivative(r.rhs, config) if not r.rhs.is_empty else zero_form(r.rhs.chart, r.degree - 1)
    return make_relation(potential, None, r.connection, r.pseudostructure, config)


def _metric_for(chart: Chart, metric: Metric | None) -> Metric:
    """The given metric if it lives on chart, else the Euclidean one."""
    if metric is not None and metric.chart == chart:
        return metric
    return euclidean_metric(chart)


def integration_chain(
    r: Relation, metric: Metric | None = None, config: EngineConfig | None = None
) -> list[ChainLink]:
    """Sequentially integrate a relation down to degree 0.

    Each identical relation contributes its rhs as a closed form of
    degree k. Integrating it gives a nonidentical relation; a
    pseudostructure found by pseudostructure_search makes it identical
    again on a smaller slice, and the chain continues. The chain stops
    early when no slice makes the integrated relation identical.

    Args:
        r (Relation): Starting relation. A relation that is not
            identical is first restricted to its first origination
            event.
        metric (Metric | None): Metric of the starting chart; Euclidean
            metrics are used on the induced charts.
        config (EngineConfig | None): Sampler and search settings.

    Returns:
        One link per degree k = p, ..., 0 reached.

    Raises:
        UnsupportedIntegrandError: A form on the way is not polynomial.
    """
    config = config or DEFAULT_CONFIG
    links: list[ChainLink] = []
    constraints: dict[str, typing.Any] = {}
    if r.pseudostructure is not None:
        constraints.update({r.pseudostructure.chart.names[i]: v for i, v in r.pseudostructure.constraints.items()})
    current: Relation | None = r
    if r.kind != RelationKind.IDENTICAL:
        current = _degenerate_restriction(r, _metric_for(r.rhs.chart, metric), config)
    while current is not None:
        if current.pseudostructure is not None and current is not r:
            pi = current.pseudostructure
            constraints.update({pi.chart.names[i]: v for i, v in pi.constraints.items()})
        links.append(
            ChainLink(
                k=current.degree,
                form=current.rhs,
                pseudostructure=current.pseudostructure,
                constraints=dict(constraints),
                closure_verdict=is_closed(current.rhs, current.connection, config),
                relation=current,
            )
        )
        if current.degree == 0:
            break
        integrated = integrate_relation(current, config)
        if integrated.kind == RelationKind.IDENTICAL:
            current = integrated
            continue
        current = _degenerate_restriction(integrated, _metric_for(integrated.rhs.chart, metric), config)
    if links and links[-1].k != 0:
        logger.warning("Integration chain stopped at degree %d", links[-1].k)
    return links


def _degenerate_restriction(r: Relation, g: Metric, config: EngineConfig) -> Relation | None:
    """Restrict r to its first origination event, None without one."""
    events = pseudostructure_search(r.rhs, g, r.connection, config)
    for event in events:
        try:
            return restrict_relation(r, event.pseudostructure, config)
        except NoOriginationError:
            logger.warning("Event %s did not restrict", event.pseudostructure, exc_info=True)
    return None


def _split(chart: Chart) -> tuple[tuple[sympy.Symbol, ...], tuple[sympy.Symbol, ...]]:
    """(q_1..q_m), (p_1..p_m) halves of an even-dimensional chart."""
    if chart.dimension % 2:
        raise ArityError(f"chart dimension {chart.dimension} is not even")
    m = chart.dimension // 2
    return chart.symbols[:m], chart.symbols[m:]


def degeneracy_indicators(
    fns: typing.Sequence[Expr], chart: Chart, config: EngineConfig | None = None
) -> DegeneracyIndicators:
    """Jacobian determinant and Poisson bracket of functions on a chart.

    The Jacobian is computed when there is one function per chart
    variable; the bracket {f, g} = sum (df/dq dg/dp - df/dp dg/dq) when
    there are two functions on a (q_1..q_m, p_1..p_m) chart.

    Args:
        fns (Sequence[Expr]): Functions of the chart variables.
        chart (Chart): Chart of the functions.
        config (EngineConfig | None): Sampler settings.

    Returns:
        The indicators that apply, with their zero verdicts.

    Raises:
        ArityError: Neither indicator applies.
    """
    fns = [sympy.sympify(f) for f in fns]
    for f in fns:
        chart.check_expr(f)
    jacobian = None
    bracket = None
    if len(fns) == chart.dimension:
        jacobian = symexpr.simplify(sympy.Matrix(fns).jacobian(sympy.Matrix(chart.symbols)).det())
    if len(fns) == 2 and chart.dimension % 2 == 0:
        qs, ps = _split(chart)
        f, g = fns
        bracket = symexpr.simplify(
            sympy.Add(*(sympy.diff(f, q) * sympy.diff(g, p) - sympy.diff(f, p) * sympy.diff(g, q) for q, p in zip(qs, ps)))
        )
    if jacobian is None and bracket is None:
        raise ArityError(f"{len(fns)} functions fit neither a Jacobian nor a Poisson bracket on {chart.names}")
    return DegeneracyIndicators(
        jacobian=jacobian,
        poisson_bracket=bracket,
        jacobian_verdict=symexpr.is_zero(jacobian, config) if jacobian is not None else None,
        bracket_verdict=symexpr.is_zero(bracket, config) if bracket is not None else None,
    )


def degenerate_slices(e: Expr, chart: Chart, config: EngineConfig | None = None) -> list[Pseudostructure]:
    """Coordinate slices {x_j = c} with rational c on which e vanishes.

    Args:
        e (Expr): Indicator expression.
        chart (Chart): Chart of e.
        config (EngineConfig | None): Sampler settings.

    Returns:
        The slices, ordered by variable index and constant.

    Raises:
        None
    """
    e = symexpr.simplify(e)
    slices = []
    for i, symbol in enumerate(chart.symbols):
        if not e.has(symbol):
            continue
        try:
            roots = sympy.solve(e, symbol)
        except NotImplementedError:
            logger.warning("Cannot solve %s for %s", e, symbol)
            continue
        for root in sorted({r for r in roots if r.is_Rational}):
            if symexpr.is_zero(e.subs(symbol, root), config).exact_zero:
                slices.append(Pseudostructure(chart, {i: root}))
    return slices


def liouville_form(chart: Chart) -> Form:
    """sum_j p_j dq_j on a (q_1..q_m, p_1..p_m) chart."""
    qs, ps = _split(chart)
    m = len(qs)
    return Form(chart, 1, {(j,): ps[j] for j in range(m)})


def symplectic_form(chart: Chart) -> Form:
    """sum_j dp_j ^ dq_j on a (q_1..q_m, p_1..p_m) chart."""
    qs, _ = _split(chart)
    m = len(qs)
    result = zero_form(chart, 2)
    for j in range(m):
        result = result + wedge(basis_form(chart, (m + j,)), basis_form(chart, (j,)))
    return result


def verify_canonical(
    qp_form: Form | None, qp_map: typing.Sequence[Expr], chart: Chart, config: EngineConfig | None = None
) -> CanonicalCheck:
    """Check p dq = P dQ + dW for a transformation (q, p) -> (Q, P).

    Args:
        qp_form (Form | None): The form sum p_j dq_j; the Liouville form
            of the chart if omitted.
        qp_map (Sequence[Expr]): Q_1..Q_m, P_1..P_m as expressions in
            (q, p).
        chart (Chart): The (q_1..q_m, p_1..p_m) chart.
        config (EngineConfig | None): Sampler settings.

    Returns:
        The closure verdict of delta = sum p dq - sum P dQ, delta
        itself, and the generating function W when delta is closed and
        polynomial.

    Raises:
        ArityError: The map does not give one expression per chart
            variable, or the chart is odd-dimensional.
    """
    logger.debug("entry: verify_canonical(%s)", qp_map)
    qs, _ = _split(chart)
    if len(qp_map) != chart.dimension:
        raise ArityError(f"canonical map has {len(qp_map)} components for a chart of dimension {chart.dimension}")
    if qp_form is None:
        qp_form = liouville_form(chart)
    if qp_form.chart != chart or qp_form.degree != 1:
        raise ArityError("qp_form must be a 1-form on the chart")
    m = len(qs)
    images = [sympy.sympify(e) for e in qp_map]
    for e in images:
        chart.check_expr(e)
    delta = qp_form
    for j in range(m):
        d_q = exterior_derivative_flat(scalar_form(chart, images[j]))
        delta = delta - d_q.scale(images[m + j])
    verdict = is_closed(delta, None, config)
    generating = None
    if verdict.closed is True and verdict.confidence == Confidence.EXACT and delta.is_polynomial():
        generating = homotopy_antiderivative(delta, config) if not delta.is_empty else scalar_form(chart, 0)
    return CanonicalCheck(is_canonical=verdict, delta=delta, generating_function=generating)


def integrability(
    coefficients: typing.Sequence[Expr], chart: Chart, config: EngineConfig | None = None
) -> IntegrabilityReport:
    """Whether the equations dU/dx^mu = A_mu reduce to dphi = dU.

    Args:
        coefficients (Sequence[Expr]): A_mu, one per chart variable.
        chart (Chart): Chart of the equations.
        config (EngineConfig | None): Sampler settings.

    Returns:
        The closure verdict of A_mu dx^mu and U when it exists as a
        polynomial.

    Raises:
        DegreeError: The number of coefficients is not the dimension.
    """
    form = one_form(chart, coefficients)
    verdict = is_closed(form, None, config)
    potential = None
    if verdict.closed is True and verdict.confidence == Confidence.EXACT and form.is_polynomial():
        potential = homotopy_antiderivative(form, config) if not form.is_empty else scalar_form(chart, 0)
    return IntegrabilityReport(form=form, integrable=verdict, potential=potential)


def classify(p: int, k: int, n: int, formed_dimension: int) -> StructureClass:
    """Classify a generated structure by (p, k, n) and the formed dimension.

    Args:
        p (int): Degree of the evolutionary form.
        k (int): Degree of the generated closed form.
        n (int): Dimension of the original space.
        formed_dimension (int): Formed space dimension N.

    Returns:
        The structure class; the interaction depends on k alone and the
        pseudostructure dimension is N - k.

    Raises:
        ClassificationRangeError: Not 0 <= k <= p <= 3, N < k, or n < 1.
    """
    if not 0 <= k <= p <= 3:
        raise ClassificationRangeError(f"degrees p={p}, k={k} outside 0 <= k <= p <= 3")
    if formed_dimension < k:
        raise ClassificationRangeError(f"formed dimension {formed_dimension} is smaller than k={k}")
    if n < 1:
        raise ClassificationRangeError(f"space dimension {n} is smaller than 1")
    return StructureClass(
        p=p,
        k=k,
        n=n,
        formed_dimension=formed_dimension,
        pseudostructure_dimension=formed_dimension - k,
        interaction=_INTERACTIONS[k],
    )
