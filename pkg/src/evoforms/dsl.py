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

"""The .exo document language: parser, Document and printer.

A document declares one chart and then named metrics, connections,
forms, pseudostructures, relations, canonical maps and balance systems.
Every name is defined before it is used. Indices in brackets are 1-based.

    chart x y z;
    metric g euclidean;
    connection G { [1][2][3] = x; }
    form w(1) = y dx;
    pseudostructure pi { y = 2 };
    relation r: d(?) = w with G on pi;
"""

import logging
import typing

import lark
import pydantic
import sympy

from evoforms import symexpr
from evoforms.balance import BalanceSystem, LawGroup
from evoforms.exceptions import (
    ArityError,
    ChartError,
    DegreeError,
    DimensionError,
    LexicalError,
    NameResolutionError,
    SyntacticError,
)
from evoforms.forms import Form, Metric, MultiIndex, Pseudostructure, euclidean_metric
from evoforms.geometry import Connection
from evoforms.symexpr import Chart, Expr


logger = logging.getLogger(__name__)

GRAMMAR = r"""
start: statement*

?statement: chart_stmt
          | metric_stmt
          | connection_stmt
          | form_stmt
          | pseudo_stmt
          | relation_stmt
          | canonical_stmt
          | balance_stmt

chart_stmt: "chart" NAME+ ";"

metric_stmt: "metric" NAME "euclidean" ";"                  -> euclidean_metric_stmt
           | "metric" NAME "{" metric_entry* "}" ";"?       -> table_metric_stmt
metric_entry: "[" INT "]" "[" INT "]" "=" expr ";"

connection_stmt: "connection" NAME "{" connection_entry* "}" ";"?
connection_entry: "[" INT "]" "[" INT "]" "[" INT "]" "=" expr ";"

form_stmt: "form" NAME "(" INT ")" "=" form_body ";"
form_body: expr                                 -> scalar_body
         | basis_sum                            -> basis_body
basis_sum: basis_term
         | basis_sum "+" basis_term             -> basis_add
         | basis_sum "-" basis_term             -> basis_sub
basis_term: product BASIS                       -> scaled_basis
          | BASIS                               -> unit_basis
          | "-" BASIS                           -> negated_basis

pseudo_stmt: "pseudostructure" NAME "{" (constraint ("," constraint)*)? "}" ";"?
constraint: NAME "=" expr

relation_stmt: "relation" NAME ":" "d" "(" potential ")" "=" NAME with_clause? on_clause? ";"
potential: NAME
         | "?"                                  -> unknown_potential
with_clause: "with" NAME
on_clause: "on" NAME

canonical_stmt: "canonical" canonical_name? "(" NAME ("," NAME)* ")" "->" "(" image ("," image)* ")" ";"
canonical_name: NAME ":"
image: NAME "=" expr

balance_stmt: "balance" "system" NAME "{" balance_item* "}" ";"?
balance_item: NAME INT ";"                      -> balance_chart
            | NAME "[" INT "]" "=" expr ";"     -> balance_coefficient
            | "degree" INT ";"                  -> balance_degree
            | "laws" NAME+ ";"                  -> balance_laws
            | "connection" NAME ";"             -> balance_connection
            | "form" NAME ";"                   -> balance_form

?expr: sum
?sum: product
    | sum "+" product                           -> add
    | sum "-" product                           -> sub
?product: factor
        | product "*" factor                    -> mul
        | product "/" factor                    -> div
?factor: power
       | "-" factor                             -> neg
?power: atom
      | atom "^" factor                         -> pow
?atom: INT                                      -> number
     | NAME                                     -> variable
     | NAME "(" expr ")"                        -> call
     | "(" expr ")"

BASIS.2: /d[A-Za-z_][A-Za-z0-9_]*(\^d[A-Za-z_][A-Za-z0-9_]*)*/
NAME: /[A-Za-z_][A-Za-z0-9_]*/
INT: /[0-9]+/
COMMENT: /#[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

_PARSER = lark.Lark(GRAMMAR, parser="lalr", lexer="contextual", propagate_positions=True)

RESERVED_METRIC = "euclidean"


class RelationDecl(pydantic.BaseModel):
    """A declared relation d(lhs) = rhs, by names.

    Attributes:
        lhs (str | None): Potential form name; None for d(?).
        rhs (str): Form name of the right-hand side.
        connection (str | None): Connection name of the with clause.
        pseudostructure (str | None): Pseudostructure name of the on
            clause.
    """

    model_config = pydantic.ConfigDict(frozen=True)
    lhs: str | None
    rhs: str
    connection: str | None = None
    pseudostructure: str | None = None


class CanonicalDecl(pydantic.BaseModel):
    """A declared map (q, p) -> (Q = ..., P = ...).

    Attributes:
        images (tuple[str, ...]): Names of the image coordinates.
        expressions (tuple[Expr, ...]): Image expressions, one per
            chart variable.
    """

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True, frozen=True)
    images: tuple[str, ...]
    expressions: tuple[typing.Any, ...]


class BalanceDecl(pydantic.BaseModel):
    """A declared balance system.

    Attributes:
        prefix (str): Variable prefix of the accompanying chart.
        system (BalanceSystem): The system.
        connection (str | None): Connection name.
        form (str | None): Name of a supplied evolutionary form.
    """

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True, frozen=True)
    prefix: str
    system: BalanceSystem
    connection: str | None = None
    form: str | None = None


class Document(pydantic.BaseModel):
    """A parsed .exo document.

    Attributes:
        chart (Chart | None): The single chart of the document.
        metrics (dict[str, Metric]): Named metrics.
        connections (dict[str, Connection]): Named connections.
        forms (dict[str, Form]): Named forms.
        pseudostructures (dict[str, Pseudostructure]): Named slices.
        relations (dict[str, RelationDecl]): Named relations.
        canonicals (dict[str, CanonicalDecl]): Named canonical maps.
        balances (dict[str, BalanceDecl]): Named balance systems.
    """

    model_config = pydantic.ConfigDict(arbitrary_types_allowed=True)
    chart: Chart | None = None
    metrics: dict[str, Metric] = {}
    connections: dict[str, Connection] = {}
    forms: dict[str, Form] = {}
    pseudostructures: dict[str, Pseudostructure] = {}
    relations: dict[str, RelationDecl] = {}
    canonicals: dict[str, CanonicalDecl] = {}
    balances: dict[str, BalanceDecl] = {}

    def names(self) -> set[str]:
        """Every defined name."""
        found: set[str] = set()
        for table in (
            self.metrics,
            self.connections,
            self.forms,
            self.pseudostructures,
            self.relations,
            self.canonicals,
            self.balances,
        ):
            found |= set(table)
        return found

    def metric(self, name: str) -> Metric:
        """Named metric, or the Euclidean metric of the chart for "euclidean".

        Raises:
            KeyError: The name is not a metric of the document.
        """
        if name == RESERVED_METRIC and self.chart is not None:
            return euclidean_metric(self.chart)
        return self.metrics[name]

    def to_text(self) -> str:
        """Canonical text of the document."""
        return print_document(self)


class _ExpressionBuilder(lark.Transformer):
    """Turn expression subtrees into sympy expressions over known symbols."""

    def __init__(self, symbols: typing.Mapping[str, sympy.Symbol]):
        super().__init__()
        self.symbols = symbols

    def number(self, children):
        return sympy.Integer(int(children[0]))

    def variable(self, children):
        token = children[0]
        if str(token) not in self.symbols:
            raise NameResolutionError(f"undefined variable {token}", token.line, token.column)
        return self.symbols[str(token)]

    def call(self, children):
        token, argument = children
        if str(token) not in symexpr.FUNCTIONS:
            raise NameResolutionError(
                f"unknown function {token}", token.line, token.column, expected=list(symexpr.FUNCTIONS)
            )
        return symexpr.FUNCTIONS[str(token)](argument)

    def add(self, children):
        return children[0] + children[1]

    def sub(self, children):
        return children[0] - children[1]

    def mul(self, children):
        return children[0] * children[1]

    @lark.v_args(meta=True)
    def div(self, meta, children):
        if children[1] == 0:
            raise DimensionError("division by zero", meta.line, meta.column)
        return children[0] / children[1]

    def neg(self, children):
        return -children[0]

    def pow(self, children):
        return sympy.Pow(children[0], children[1])


def _position(node: lark.Tree | lark.Token) -> tuple[int, int]:
    if isinstance(node, lark.Token):
        return node.line or 0, node.column or 0
    if node.meta.empty:
        return 0, 0
    return node.meta.line, node.meta.column


class _DocumentBuilder:
    """Resolve statements in order into a Document."""

    def __init__(self):
        self.document = Document()

    def build(self, tree: lark.Tree) -> Document:
        for statement in tree.children:
            handler = getattr(self, f"_{statement.data}")
            try:
                handler(statement)
            except (ChartError, DegreeError, ArityError) as err:
                line, column = _position(statement)
                raise DimensionError(str(err), line, column, additional_message=err.additional_message) from err
        return self.document

    def _chart(self, node) -> Chart:
        if self.document.chart is None:
            line, column = _position(node)
            raise NameResolutionError("chart is not declared", line, column, expected=["chart"])
        return self.document.chart

    def _define(self, token: lark.Token) -> str:
        name = str(token)
        if name in self.document.names() or name == RESERVED_METRIC:
            raise NameResolutionError(f"name {name} is already defined", token.line, token.column)
        return name

    def _lookup(self, token: lark.Token, table: dict, kind: str) -> typing.Any:
        name = str(token)
        if name not in table:
            raise NameResolutionError(f"undefined {kind} {name}", token.line, token.column, expected=list(table))
        return table[name]

    def _expression(self, node, parameters: bool = False) -> Expr:
        symbols = {} if parameters else dict(zip(self._chart(node).names, self._chart(node).symbols))
        try:
            value = _ExpressionBuilder(symbols).transform(node)
        except lark.exceptions.VisitError as err:
            raise err.orig_exc from err
        return symexpr.simplify(value)

    def _index(self, token: lark.Token, bound: int) -> int:
        value = int(token)
        if not 1 <= value <= bound:
            raise DimensionError(f"index {value} outside 1..{bound}", token.line, token.column)
        return value - 1

    def _set_chart(self, names: list[str], node) -> None:
        for token in node.children if isinstance(node, lark.Tree) else []:
            if isinstance(token, lark.Token) and str(token).startswith("d"):
                raise NameResolutionError(
                    f"chart variable {token} starts with d, reserved for differentials", token.line, token.column
                )
        if self.document.chart is not None:
            line, column = _position(node)
            raise NameResolutionError("a document has a single chart", line, column)
        try:
            self.document.chart = Chart(names=tuple(names))
        except pydantic.ValidationError as err:
            line, column = _position(node)
            raise DimensionError("invalid chart", line, column, additional_message=str(err)) from err

    def _chart_stmt(self, node) -> None:
        self._set_chart([str(t) for t in node.children], node)

    def _euclidean_metric_stmt(self, node) -> None:
        name = self._define(node.children[0])
        self.document.metrics[name] = euclidean_metric(self._chart(node))

    def _table_metric_stmt(self, node) -> None:
        chart = self._chart(node)
        name = self._define(node.children[0])
        n = chart.dimension
        table: list[list[Expr]] = [[sympy.Integer(0)] * n for _ in range(n)]
        seen: set[tuple[int, int]] = set()
        for entry in node.children[1:]:
            i = self._index(entry.children[0], n)
            j = self._index(entry.children[1], n)
            if (i, j) in seen or (j, i) in seen:
                line, column = _position(entry)
                raise DimensionError(f"metric entry [{i + 1}][{j + 1}] given twice", line, column)
            seen.add((i, j))
            table[i][j] = table[j][i] = self._expression(entry.children[2])
        self.document.metrics[name] = Metric(chart, table)

    def _connection_stmt(self, node) -> None:
        chart = self._chart(node)
        name = self._define(node.children[0])
        entries = {}
        for entry in node.children[1:]:
            key = tuple(self._index(token, chart.dimension) for token in entry.children[:3])
            if key in entries:
                line, column = _position(entry)
                raise DimensionError(f"connection entry {[k + 1 for k in key]} given twice", line, column)
            entries[key] = self._expression(entry.children[3])
        self.document.connections[name] = Connection(chart, entries)

    def _basis_index(self, token: lark.Token) -> MultiIndex:
        chart = self._chart(token)
        index = []
        for part in str(token).split("^"):
            variable = part[1:]
            if variable not in chart.names:
                raise NameResolutionError(
                    f"undefined variable {variable} in {token}", token.line, token.column, expected=list(chart.names)
                )
            index.append(chart.names.index(variable))
        return tuple(index)

    def _basis_terms(self, node) -> list[tuple[MultiIndex, Expr]]:
        if node.data == "basis_sum":
            return self._basis_terms(node.children[0])
        if node.data in ("basis_add", "basis_sub"):
            left = self._basis_terms(node.children[0])
            right = self._basis_terms(node.children[1])
            if node.data == "basis_sub":
                right = [(idx, -value) for idx, value in right]
            return left + right
        if node.data == "scaled_basis":
            return [(self._basis_index(node.children[1]), self._expression(node.children[0]))]
        if node.data == "unit_basis":
            return [(self._basis_index(node.children[0]), sympy.Integer(1))]
        return [(self._basis_index(node.children[0]), sympy.Integer(-1))]

    def _form_stmt(self, node) -> None:
        chart = self._chart(node)
        token, degree_token, body = node.children
        name = self._define(token)
        degree = int(degree_token)
        if body.data == "scalar_body":
            value = self._expression(body.children[0])
            if value == 0:
                self.document.forms[name] = Form(chart, degree, {})
                return
            terms = [((), value)]
        else:
            terms = self._basis_terms(body.children[0])
        for idx, _ in terms:
            if len(idx) != degree:
                raise DimensionError(
                    f"form {name} declared with degree {degree} has a term of degree {len(idx)}",
                    degree_token.line,
                    degree_token.column,
                )
        table: dict[MultiIndex, Expr] = {}
        for idx, value in terms:
            table[idx] = table.get(idx, sympy.Integer(0)) + value
        self.document.forms[name] = Form(chart, degree, table)

    def _pseudo_stmt(self, node) -> None:
        chart = self._chart(node)
        name = self._define(node.children[0])
        constraints: dict[str, Expr] = {}
        for constraint in node.children[1:]:
            token, value = constraint.children
            if str(token) not in chart.names:
                raise NameResolutionError(
                    f"undefined variable {token}", token.line, token.column, expected=list(chart.names)
                )
            if str(token) in constraints:
                raise NameResolutionError(f"variable {token} constrained twice", token.line, token.column)
            constraints[str(token)] = self._expression(value, parameters=True)
        self.document.pseudostructures[name] = Pseudostructure(chart, constraints)

    def _relation_stmt(self, node) -> None:
        name = self._define(node.children[0])
        potential, rhs_token = node.children[1], node.children[2]
        lhs = None
        if potential.data == "potential":
            lhs = str(potential.children[0])
            lhs_form = self._lookup(potential.children[0], self.document.forms, "form")
        rhs = self._lookup(rhs_token, self.document.forms, "form")
        if lhs is not None and lhs_form.degree + 1 != rhs.degree:
            raise DimensionError(
                f"relation {name}: d of a {lhs_form.degree}-form cannot equal a {rhs.degree}-form",
                rhs_token.line,
                rhs_token.column,
            )
        connection = pseudostructure = None
        for clause in node.children[3:]:
            if clause.data == "with_clause":
                connection = str(clause.children[0])
                self._lookup(clause.children[0], self.document.connections, "connection")
            else:
                pseudostructure = str(clause.children[0])
                self._lookup(clause.children[0], self.document.pseudostructures, "pseudostructure")
        self.document.relations[name] = RelationDecl(
            lhs=lhs, rhs=str(rhs_token), connection=connection, pseudostructure=pseudostructure
        )

    def _canonical_stmt(self, node) -> None:
        chart = self._chart(node)
        variables = [child for child in node.children if isinstance(child, lark.Token)]
        images = [child for child in node.children if isinstance(child, lark.Tree) and child.data == "image"]
        named = [child for child in node.children if isinstance(child, lark.Tree) and child.data == "canonical_name"]
        if named:
            name = self._define(named[0].children[0])
        else:
            name = self._define(lark.Token("NAME", f"canonical{len(self.document.canonicals) + 1}"))
        if tuple(str(t) for t in variables) != chart.names:
            line, column = _position(node)
            raise DimensionError(f"canonical map source must be the chart {chart.names}", line, column)
        if len(images) != chart.dimension:
            line, column = _position(node)
            raise DimensionError(f"canonical map needs {chart.dimension} images, got {len(images)}", line, column)
        self.document.canonicals[name] = CanonicalDecl(
            images=tuple(str(image.children[0]) for image in images),
            expressions=tuple(self._expression(image.children[1]) for image in images),
        )

    def _balance_stmt(self, node) -> None:
        name = self._define(node.children[0])
        items = node.children[1:]
        prefix = None
        for item in items:
            if item.data == "balance_chart":
                token, size = item.children
                prefix = str(token)
                names = [f"{prefix}{i}" for i in range(1, int(size) + 1)]
                if self.document.chart is None:
                    self._set_chart(names, item)
                elif tuple(names) != self.document.chart.names:
                    raise DimensionError(
                        f"balance chart {prefix} {size} is not the document chart {self.document.chart.names}",
                        token.line,
                        token.column,
                    )
        if prefix is None:
            line, column = _position(node)
            raise SyntacticError("balance system needs its chart, e.g. xi 2;", line, column)
        chart = self._chart(node)
        coefficients: dict[int, Expr] = {}
        degree = 1
        laws = None
        connection = form = None
        for item in items:
            if item.data == "balance_coefficient":
                token, index, value = item.children
                if str(token) != "A":
                    raise NameResolutionError(f"unknown coefficient table {token}", token.line, token.column, ["A"])
                position = self._index(index, chart.dimension)
                if position in coefficients:
                    raise DimensionError(f"A[{index}] given twice", index.line, index.column)
                coefficients[position] = self._expression(value)
            elif item.data == "balance_degree":
                degree = int(item.children[0])
            elif item.data == "balance_laws":
                laws = frozenset(self._law(token) for token in item.children)
            elif item.data == "balance_connection":
                connection = str(item.children[0])
                self._lookup(item.children[0], self.document.connections, "connection")
            elif item.data == "balance_form":
                form = str(item.children[0])
                self._lookup(item.children[0], self.document.forms, "form")
        if coefficients and len(coefficients) != chart.dimension:
            line, column = _position(node)
            raise DimensionError(f"balance system {name} needs A[1]..A[{chart.dimension}]", line, column)
        system = BalanceSystem(
            chart=chart,
            coefficients=tuple(coefficients[i] for i in sorted(coefficients)),
            connection=self.document.connections[connection] if connection else None,
            degree=degree,
            laws=laws,
            form=self.document.forms[form] if form else None,
        )
        self.document.balances[name] = BalanceDecl(prefix=prefix, system=system, connection=connection, form=form)

    def _law(self, token: lark.Token) -> LawGroup:
        for law in LawGroup:
            if law.value.replace("-", "_") == str(token):
                return law
        raise NameResolutionError(
            f"unknown law group {token}",
            token.line,
            token.column,
            expected=[law.value.replace("-", "_") for law in LawGroup],
        )


def parse_document(text: str) -> Document:
    """Parse and resolve an .exo document.

    Args:
        text (str): Document text.

    Returns:
        The resolved Document.

    Raises:
        LexicalError: A character starts no token.
        SyntacticError: A token is not allowed where it appears.
        NameResolutionError: A name is undefined or defined twice.
        DimensionError: A degree, index or dimension disagrees with the
            chart or the body.
    """
    logger.debug("entry: parse_document(%d characters)", len(text))
    try:
        tree = _PARSER.parse(text)
    except lark.exceptions.UnexpectedCharacters as err:
        raise LexicalError(
            f"unexpected character {text[err.pos_in_stream]!r}", err.line, err.column, sorted(err.allowed or [])
        ) from err
    except lark.exceptions.UnexpectedToken as err:
        raise SyntacticError(
            f"unexpected token {err.token!s}", err.line, err.column, sorted(err.expected or [])
        ) from err
    except lark.exceptions.UnexpectedEOF as err:
        raise SyntacticError(
            "unexpected end of document", err.line, err.column, sorted(err.expected or [])
        ) from err
    return _DocumentBuilder().build(tree)


def _text(e: Expr, chart: Chart | None) -> str:
    return symexpr.to_text(e, chart)


def print_document(doc: Document) -> str:
    """Render a Document as canonical .exo text.

    Statements are grouped by kind in definition-safe order; parsing the
    text gives back an equal Document.

    Args:
        doc (Document): Document to render.

    Returns:
        The text, one statement per line.

    Raises:
        None
    """
    chart = doc.chart
    lines = []
    if chart is not None:
        lines.append(f"chart {' '.join(chart.names)};")
    for name, metric in doc.metrics.items():
        if metric.is_euclidean:
            lines.append(f"metric {name} euclidean;")
            continue
        n = metric.chart.dimension
        entries = [
            f"[{i + 1}][{j + 1}] = {_text(metric.entries[i, j], chart)};"
            for i in range(n)
            for j in range(i, n)
            if metric.entries[i, j] != 0
        ]
        lines.append(f"metric {name} {{ {' '.join(entries)} }}")
    for name, connection in doc.connections.items():
        entries = [
            f"[{s + 1}][{a + 1}][{b + 1}] = {_text(value, chart)};" for (s, a, b), value in connection.entries().items()
        ]
        lines.append(f"connection {name} {{ {' '.join(entries)} }}" if entries else f"connection {name} {{ }}")
    for name, form in doc.forms.items():
        lines.append(f"form {name}({form.degree}) = {form.to_text()};")
    for name, pi in doc.pseudostructures.items():
        lines.append(f"pseudostructure {name} {pi.to_text()};")
    for name, decl in doc.relations.items():
        text = f"relation {name}: d({decl.lhs or '?'}) = {decl.rhs}"
        if decl.connection:
            text += f" with {decl.connection}"
        if decl.pseudostructure:
            text += f" on {decl.pseudostructure}"
        lines.append(text + ";")
    for name, decl in doc.canonicals.items():
        images = ", ".join(f"{image} = {_text(e, chart)}" for image, e in zip(decl.images, decl.expressions))
        lines.append(f"canonical {name}: ({', '.join(chart.names)}) -> ({images});")
    for name, decl in doc.balances.items():
        system = decl.system
        items = [f"{decl.prefix} {system.chart.dimension};"]
        items += [f"A[{mu + 1}] = {_text(a, chart)};" for mu, a in enumerate(system.coefficients)]
        items.append(f"degree {system.degree};")
        if system.laws is not None:
            items.append(f"laws {' '.join(law.value.replace('-', '_') for law in LawGroup if law in system.laws)};")
        if decl.connection:
            items.append(f"connection {decl.connection};")
        if decl.form:
            items.append(f"form {decl.form};")
        lines.append(f"balance system {name} {{ {' '.join(items)} }}")
    return "\n".join(lines) + "\n"

