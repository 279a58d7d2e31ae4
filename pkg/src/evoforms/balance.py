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

"""Balance conservation laws of a material system.

The energy and momentum equations of a material system are convoluted
into the relation d(psi) = A_mu dxi^mu on the accompanying chart. The
relation is identical, and the system in equilibrium, exactly when the
commutator of the right-hand side vanishes.
"""

import enum
import logging
import typing

import pydantic
import sympy
import typing_extensions

from evoforms.config import DEFAULT_CONFIG, EngineConfig
from evoforms.exceptions import (
    ArityError,
    BaseEvoFormsError,
    DegreeError,
    UnsupportedDegreeError,
    UnsupportedMetricError,
)
from evoforms.forms import Form, Metric, Pseudostructure, one_form
from evoforms.geometry import CommutatorReport, Connection, form_commutator
from evoforms.relations import (
    OriginationEvent,
    Relation,
    RelationKind,
    make_relation,
    origination_on,
    pseudostructure_search,
    restrict_relation,
)
from evoforms.symexpr import Chart


logger = logging.getLogger(__name__)


class LawGroup(str, enum.Enum):
    """Groups of balance conservation laws of a material system."""

    ENERGY = "energy"
    MOMENTUM = "momentum"
    ANGULAR_MOMENTUM = "angular-momentum"
    MASS = "mass"


_LADDER = (LawGroup.ENERGY, LawGroup.MOMENTUM, LawGroup.ANGULAR_MOMENTUM, LawGroup.MASS)


def degree_for_laws(laws: typing.Iterable[LawGroup]) -> int:
    """Degree of the evolutionary form of a set of law groups.

    Energy alone gives 0, energy and momentum give 1, adding angular
    momentum gives 2 and adding mass gives 3.

    Args:
        laws (Iterable[LawGroup]): Declared law groups.

    Returns:
        The degree p.

    Raises:
        DegreeError: The groups are not a step of the ladder.
    """
    declared = frozenset(laws)
    for p in range(len(_LADDER)):
        if declared == frozenset(_LADDER[: p + 1]):
            return p
    names = sorted(law.value for law in declared)
    raise DegreeError(f"law groups {names} are not a step of the energy, momentum, angular-momentum, mass ladder")


class EquilibriumState(str, enum.Enum):
    """State of a material system."""

    EQUILIBRIUM = "equilibrium"
    NONEQUILIBRIUM = "nonequilibrium"
    LOCALLY_EQUILIBRIUM = "locally-equilibrium"
    INDETERMINATE = "indeterminate"


class BalanceSystem(pydantic.BaseModel):
    """A material system described by its balance conservation laws.

    Attributes:
        chart (Chart): Accompanying chart; the first variable is the
            trajectory coordinate.
        coefficients (tuple[Expr, ...]): Action coefficients A_mu, one
            per chart variable. Empty when form is given.
        connection (Connection | None): Connection of the accompanying
            manifold; the zero connection if omitted.
        degree (int): Declared degree p of the evolutionary form.
        laws (frozenset[LawGroup] | None): Declared law groups, checked
            against degree.
        form (Form | None): User-supplied evolutionary form, used for
            degrees that are not assembled from coefficients.
    """

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True, frozen=True)
    chart: Chart
    coefficients: tuple[typing.Any, ...] = ()
    connection: Connection | None = None
    degree: int = 1
    laws: frozenset[LawGroup] | None = None
    form: Form | None = None

    @pydantic.field_validator("coefficients", mode="before")
    @classmethod
    def validate_coefficients(cls, value):
        """Convert the coefficients to sympy expressions."""
        return tuple(sympy.sympify(v) for v in value)

    @pydantic.model_validator(mode="after")
    def validate_system(self) -> typing_extensions.Self:
        """Check the coefficient count, the degree ladder and the parts' charts."""
        if not 0 <= self.degree <= 3:
            raise DegreeError(f"balance degree {self.degree} outside 0..3")
        if self.coefficients and len(self.coefficients) != self.chart.dimension:
            raise ArityError(f"{len(self.coefficients)} coefficients for a chart of dimension {self.chart.dimension}")
        for value in self.coefficients:
            self.chart.check_expr(value)
        if self.laws is not None and degree_for_laws(self.laws) != self.degree:
            raise DegreeError(
                f"declared degree {self.degree} does not match law groups of degree {degree_for_laws(self.laws)}"
            )
        if self.connection is not None and self.connection.chart != self.chart:
            raise ArityError("connection does not live on the accompanying chart")
        if self.form is not None and (self.form.chart != self.chart or self.form.degree != self.degree):
            raise DegreeError("supplied form does not have the declared degree on the accompanying chart")
        return self


class LocalStateFunction(pydantic.BaseModel):
    """A state function that exists on a pseudostructure.

    Attributes:
        pseudostructure (Pseudostructure): Slice of local equilibrium.
        psi (Form): Potential of the restricted form on the slice.
        relation (Relation): The identical restricted relation.
    """

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True, frozen=True)
    pseudostructure: Pseudostructure
    psi: Form
    relation: Relation


class EquilibriumDiagnosis(pydantic.BaseModel):
    """Equilibrium diagnosis of a material system.

    Attributes:
        relation (Relation): The evolutionary relation d(psi) = omega.
        commutator (CommutatorReport): Commutator of omega.
        state (EquilibriumState): Diagnosed state.
        internal_force (float | None): Probe magnitude of the total
            commutator.
        events (list[OriginationEvent]): Origination events found.
        state_functions (list[LocalStateFunction]): Restricted state
            functions that re-verify as identical.
    """

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True, frozen=True)
    relation: Relation
    commutator: CommutatorReport
    state: EquilibriumState
    internal_force: float | None
    events: list[OriginationEvent]
    state_functions: list[LocalStateFunction]

    @property
    def pseudostructures(self) -> list[Pseudostructure]:
        """Slices of local equilibrium."""
        return [item.pseudostructure for item in self.state_functions]


def assemble_balance_form(s: BalanceSystem) -> Form:
    """The evolutionary form omega = A_mu dxi^mu of a system.

    Args:
        s (BalanceSystem): Material system.

    Returns:
        The supplied form when there is one, otherwise the 1-form
        assembled from the action coefficients.

    Raises:
        UnsupportedDegreeError: The declared degree is not 1 and no form
            was supplied.
        ArityError: There are no coefficients to assemble.
    """
    if s.form is not None:
        return s.form
    if s.degree != 1:
        raise UnsupportedDegreeError(f"only degree 1 balance forms are assembled, got degree {s.degree}")
    if not s.coefficients:
        raise ArityError("balance system has neither coefficients nor a form")
    return one_form(s.chart, s.coefficients)


def build_evolutionary_relation(
    s: BalanceSystem, psi_candidate: Form | None = None, config: EngineConfig | None = None
) -> Relation:
    """Build the evolutionary relation d(psi) = omega of a system.

    Args:
        s (BalanceSystem): Material system.
        psi_candidate (Form | None): Candidate state function; the kind
            is judged from omega alone when omitted.
        config (EngineConfig | None): Sampler settings.

    Returns:
        The diagnosed relation.

    Raises:
        UnsupportedDegreeError: The declared degree is 0.
        DegreeError: psi_candidate has the wrong degree.
    """
    logger.debug("entry: build_evolutionary_relation(%s)", s.chart.names)
    if s.degree == 0:
        raise UnsupportedDegreeError("the degree 0 evolutionary relation has no differential form structure")
    omega = assemble_balance_form(s)
    return make_relation(omega, psi_candidate, s.connection, None, config)


def _state_functions(r: Relation, events: list[OriginationEvent], config: EngineConfig) -> list[LocalStateFunction]:
    found = []
    for event in events:
        try:
            restricted = restrict_relation(r, event.pseudostructure, config)
        except BaseEvoFormsError:
            logger.warning("Event %s did not restrict", event.pseudostructure.to_text(), exc_info=True)
            continue
        if restricted.kind == RelationKind.IDENTICAL and restricted.lhs is not None:
            found.append(
                LocalStateFunction(pseudostructure=event.pseudostructure, psi=restricted.lhs, relation=restricted)
            )
    return found


def equilibrium_report(
    s: BalanceSystem,
    g: Metric,
    probe: typing.Sequence[typing.Any],
    candidates: typing.Sequence[Pseudostructure] | None = None,
    config: EngineConfig | None = None,
) -> EquilibriumDiagnosis:
    """Diagnose equilibrium of a material system.

    Args:
        s (BalanceSystem): Material system.
        g (Metric): Diagonal metric of the accompanying chart.
        probe (Sequence): Point for the internal force indicator.
        candidates (Sequence[Pseudostructure] | None): Slices to test for
            local equilibrium; the full pseudostructure search if
            omitted.
        config (EngineConfig | None): Sampler and search settings.

    Returns:
        EQUILIBRIUM when the commutator vanishes, LOCALLY_EQUILIBRIUM
        when a slice carries an identical restricted relation,
        NONEQUILIBRIUM otherwise, and INDETERMINATE when the commutator
        zero test is indeterminate.

    Raises:
        UnsupportedMetricError: g is not diagonal.
        UnsupportedDegreeError: The degree is 0, or not 1 without a
            supplied form.
        ProbeDimensionError: The probe has the wrong dimension.
    """
    config = config or DEFAULT_CONFIG
    logger.debug("entry: equilibrium_report(%s, %s)", s.chart.names, tuple(probe))
    if not g.is_diagonal:
        raise UnsupportedMetricError("equilibrium_report supports diagonal metrics only")
    relation = build_evolutionary_relation(s, None, config)
    commutator = form_commutator(relation.rhs, relation.connection, probe, config)
    events: list[OriginationEvent] = []
    state_functions: list[LocalStateFunction] = []
    verdict = commutator.total_verdict
    if verdict.zero is True:
        state = EquilibriumState.EQUILIBRIUM
    elif verdict.zero is None:
        logger.warning("Commutator of %s is indeterminate", relation.rhs.to_text())
        state = EquilibriumState.INDETERMINATE
    else:
        if candidates is None:
            events = pseudostructure_search(relation.rhs, g, relation.connection, config)
        else:
            tested = (origination_on(relation.rhs, g, pi, relation.connection, config) for pi in candidates)
            events = [event for event in tested if event is not None]
        state_functions = _state_functions(relation, events, config)
        state = EquilibriumState.LOCALLY_EQUILIBRIUM if state_functions else EquilibriumState.NONEQUILIBRIUM
    return EquilibriumDiagnosis(
        relation=relation,
        commutator=commutator,
        state=state,
        internal_force=commutator.discontinuity_indicator,
        events=events,
        state_functions=state_functions,
    )
