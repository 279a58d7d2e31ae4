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

"""Command line front end: run one verb over the objects of a document.

    evoforms closure doc.exo w --json
    evoforms pseudo-search doc.exo w --metric euclidean
    evoforms classify --p 2 --k 2 --N 4
"""

import argparse
import json
import logging
import pathlib
import sys
import typing

import pydantic
import sympy
import typing_extensions

from evoforms import __version__, symexpr
from evoforms.balance import equilibrium_report
from evoforms.config import EngineConfig, load_config
from evoforms.dsl import Document, parse_document
from evoforms.exceptions import (
    BaseEvoFormsError,
    DocumentError,
    ErrorCtrl,
    ErrorType,
    LexicalError,
    NoOriginationError,
    UsageError,
)
from evoforms.forms import Form, Metric, Pseudostructure, hodge_star, pullback_to, wedge
from evoforms.geometry import Connection, evolutionary_derivative, form_commutator, zero_connection
from evoforms.relations import (
    ClosureVerdict,
    Relation,
    classify,
    integrate_relation,
    integration_chain,
    is_closed,
    is_closed_on,
    make_relation,
    pseudostructure_search,
    relation_kind,
    restrict_relation,
    verify_canonical,
)
from evoforms.symexpr import Confidence, ZeroVerdict


logger = logging.getLogger(__name__)

VERBS = (
    "d",
    "wedge",
    "star",
    "commutator",
    "closure",
    "pseudo-search",
    "restrict",
    "integrate",
    "classify",
    "canonical",
    "balance",
    "print",
)


class ChartInfo(pydantic.BaseModel):
    """Chart echo of a report."""

    dim: int
    vars: list[str]


class ResultItem(pydantic.BaseModel):
    """One result of a report.

    Attributes:
        name (str): Name of the object or derived object.
        kind (str): form, verdict, event or class.
        value (Any): Canonical text, label or mapping.
        confidence (Confidence): Confidence of the result.
    """

    name: str
    kind: typing.Literal["form", "verdict", "event", "class"]
    value: typing.Any
    confidence: Confidence = Confidence.EXACT


class Report(pydantic.BaseModel):
    """Output of one command, with stable key order."""

    command: str
    chart: ChartInfo
    results: list[ResultItem]
    seed: int
    version: str = __version__

    def to_json(self) -> str:
        """Byte-stable JSON text."""
        return json.dumps(self.model_dump(mode="json"), indent=2, ensure_ascii=False) + "\n"

    def to_text(self) -> str:
        """Human readable text, one result per line."""
        lines = [f"# {self.command}"]
        for item in self.results:
            value = item.value if isinstance(item.value, str) else json.dumps(item.value, ensure_ascii=False)
            lines.append(f"{item.name}: {value} [{item.confidence.value}]")
        return "\n".join(lines) + "\n"


def _magnitude(value: float | None) -> float | None:
    """Round a probe magnitude to 12 significant digits."""
    if value is None:
        return None
    return float(f"{value:.12g}")


def _zero_label(verdict: ZeroVerdict) -> str:
    if verdict.zero is None:
        return "INDETERMINATE"
    return "ZERO" if verdict.zero else "NONZERO"


class _ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting."""

    @typing_extensions.override
    def error(self, message: str) -> typing.NoReturn:
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per verb."""
    common = _ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit the JSON report")
    common.add_argument("--seed", type=int, default=None, help="seed of the zero-test sampler")
    common.add_argument("--config", default=None, help="engine YAML configuration file")
    common.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    common.add_argument("--probe", default=None, help="probe point, e.g. 1,1/2,0")
    common.add_argument("--metric", default="euclidean", help="euclidean or a metric name of the document")
    common.add_argument("--connection", default=None, help="connection name of the document")
    common.add_argument("--on", default=None, help="pseudostructure name of the document")

    parser = _ArgumentParser(prog="evoforms", description="Exterior calculus of evolutionary forms.")
    subparsers = parser.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        sub = subparsers.add_parser(verb, parents=[common])
        if verb == "classify":
            sub.add_argument("--p", type=int, required=True, help="degree of the evolutionary form")
            sub.add_argument("--k", type=int, required=True, help="degree of the generated closed form")
            sub.add_argument("--N", type=int, required=True, help="formed space dimension")
            sub.add_argument("--n", type=int, default=None, help="space dimension, N if omitted")
            continue
        sub.add_argument("document", help=".exo document")
        sub.add_argument("names", nargs="*", help="objects of the document, all of the verb's kind if omitted")
        if verb == "integrate":
            sub.add_argument("--chain", action="store_true", help="integrate down to degree 0")
    return parser


class Runner:
    """Run one verb over the objects of a document.

    Attributes:
        args (Namespace): Parsed command line.
        doc (Document): Parsed document; empty for classify.
        config (EngineConfig): Engine configuration.
        errors (ErrorCtrl): Errors of the targets that failed.
        results (list[ResultItem]): Results in target order.
    """

    def __init__(self, args: argparse.Namespace, doc: Document, config: EngineConfig):
        self.args = args
        self.doc = doc
        self.config = config
        self.errors = ErrorCtrl()
        self.results: list[ResultItem] = []

    def run(self) -> Report:
        """Run the verb and build the report."""
        handler = getattr(self, "_" + self.args.verb.replace("-", "_"))
        for target in self._targets():
            try:
                handler(target)
            except BaseEvoFormsError as err:
                logger.warning("%s %s failed", self.args.verb, target, exc_info=True)
                print(f"error: {target}: {err}", file=sys.stderr)
                self.errors.put(err)
        chart = self.doc.chart
        return Report(
            command=" ".join([self.args.verb] + list(getattr(self.args, "names", []))),
            chart=ChartInfo(dim=chart.dimension if chart else 0, vars=list(chart.names) if chart else []),
            results=self.results,
            seed=self.config.seed,
        )

    def _targets(self) -> list[str]:
        names = list(getattr(self.args, "names", []))
        verb = self.args.verb
        if verb in ("classify", "print", "wedge"):
            return [verb]
        if names:
            return names
        defaults = {
            "restrict": self.doc.relations,
            "integrate": self.doc.relations,
            "canonical": self.doc.canonicals,
            "balance": self.doc.balances,
        }
        return list(defaults.get(verb, self.doc.forms))

    def _add(self, name: str, kind: str, value: typing.Any, confidence: Confidence = Confidence.EXACT) -> None:
        self.results.append(ResultItem(name=name, kind=kind, value=value, confidence=confidence))

    def _form(self, name: str) -> Form:
        if name not in self.doc.forms:
            raise UsageError(f"unknown form {name}")
        return self.doc.forms[name]

    def _connection(self) -> Connection | None:
        name = self.args.connection
        if name is None:
            return None
        if name not in self.doc.connections:
            raise UsageError(f"unknown connection {name}")
        return self.doc.connections[name]

    def _metric(self) -> Metric:
        try:
            return self.doc.metric(self.args.metric)
        except KeyError as err:
            raise UsageError(f"unknown metric {self.args.metric}") from err

    def _pseudostructure(self, name: str | None) -> Pseudostructure:
        if name is None or name not in self.doc.pseudostructures:
            raise UsageError(f"unknown pseudostructure {name}")
        return self.doc.pseudostructures[name]

    def _probe(self) -> tuple[sympy.Rational, ...]:
        n = self.doc.chart.dimension if self.doc.chart else 0
        if self.args.probe is None:
            return (sympy.Integer(1),) * n
        try:
            return tuple(sympy.Rational(part.strip()) for part in self.args.probe.split(","))
        except (TypeError, ValueError) as err:
            raise UsageError(f"malformed probe {self.args.probe}") from err

    def _relation(self, name: str, restricted: bool = True) -> Relation:
        """Diagnosed relation of a declaration, on its pseudostructure if restricted."""
        if name not in self.doc.relations:
            raise UsageError(f"unknown relation {name}")
        decl = self.doc.relations[name]
        rhs = self.doc.forms[decl.rhs]
        lhs = self.doc.forms[decl.lhs] if decl.lhs else None
        c = self.doc.connections[decl.connection] if decl.connection else None
        pi = None
        if restricted and decl.pseudostructure:
            pi = self.doc.pseudostructures[decl.pseudostructure]
            c = (c or zero_connection(rhs.chart)).pullback_to(pi)
            rhs = pullback_to(rhs, pi)
            lhs = pullback_to(lhs, pi) if lhs is not None else None
        return make_relation(rhs, lhs, c, pi, self.config)

    def _add_closure(self, name: str, verdict: ClosureVerdict) -> None:
        self._add(name, "verdict", verdict.label, verdict.confidence)

    def _d(self, name: str) -> None:
        t = self._form(name)
        c = self._connection() or zero_connection(t.chart)
        self._add(f"d({name})", "form", evolutionary_derivative(t, c).to_text())

    def _wedge(self, _: str) -> None:
        names = list(self.args.names)
        if len(names) != 2:
            raise UsageError(f"wedge takes two forms, got {len(names)}")
        a, b = (self._form(n) for n in names)
        self._add(f"{names[0]}^{names[1]}", "form", wedge(a, b).to_text())

    def _star(self, name: str) -> None:
        self._add(f"*{name}", "form", hodge_star(self._form(name), self._metric()).to_text())

    def _commutator(self, name: str) -> None:
        t = self._form(name)
        report = form_commutator(t, self._connection() or zero_connection(t.chart), self._probe(), self.config)
        self._add(f"{name}.coefficient_term", "form", report.coefficient_term.to_text())
        self._add(f"{name}.metric_term", "form", report.metric_term.to_text())
        self._add(f"{name}.total", "form", report.total.to_text())
        value = {
            "label": _zero_label(report.total_verdict),
            "discontinuity": _magnitude(report.discontinuity_indicator),
            "quantum": _magnitude(report.quantum_indicator),
            "deformation": _magnitude(report.deformation_indicator),
        }
        self._add(f"{name}.commutator", "verdict", value, report.total_verdict.confidence)

    def _closure(self, name: str) -> None:
        if name in self.doc.relations:
            r = self._relation(name)
            kind = relation_kind(r, self.config)
            self._add(name, "verdict", kind.value.upper(), r.confidence)
            return
        t = self._form(name)
        c = self._connection()
        if self.args.on is not None:
            self._add_closure(name, is_closed_on(t, self._pseudostructure(self.args.on), c, self.config))
        else:
            self._add_closure(name, is_closed(t, c, self.config))

    def _pseudo_search(self, name: str) -> None:
        t = self._form(name)
        events = pseudostructure_search(t, self._metric(), self._connection(), self.config)
        if not events:
            self._add(name, "verdict", "NO ORIGINATION")
        for event in events:
            value = {
                "pseudostructure": event.pseudostructure.to_text(),
                "restricted_form": event.restricted_form.to_text(),
                "closure": event.closure_verdict.label,
                "dual_closure": event.dual_verdict.label,
                "relation": event.relation.kind.value,
                "potential": event.relation.lhs.to_text() if event.relation.lhs is not None else None,
                "gauge": "homotopy",
                "residual": event.residual.to_text(),
                "interior_torsion_vanishes": event.interior_torsion_vanishes,
            }
            confidence = symexpr.weakest(event.closure_verdict.confidence, event.dual_verdict.confidence)
            self._add(name, "event", value, confidence)

    def _restrict(self, name: str) -> None:
        r = self._relation(name, restricted=False)
        pi = self._pseudostructure(self.args.on or self.doc.relations[name].pseudostructure)
        try:
            restricted = restrict_relation(r, pi, self.config)
        except NoOriginationError as err:
            logger.warning("No origination for %s on %s", name, pi.to_text(), exc_info=True)
            value = {"kind": "nonidentical", "reason": "no-origination", "rhs": err.additional_message}
            self._add(f"{name}@{pi.to_text()}", "verdict", value)
            return
        value = {
            "kind": restricted.kind.value,
            "reason": restricted.reason,
            "rhs": restricted.rhs.to_text(),
            "lhs": restricted.lhs.to_text() if restricted.lhs is not None else None,
            "gauge": "homotopy",
        }
        self._add(f"{name}@{pi.to_text()}", "verdict", value, restricted.confidence)

    def _integrate(self, name: str) -> None:
        r = self._relation(name)
        if not self.args.chain:
            integrated = integrate_relation(r, self.config)
            value = {"kind": integrated.kind.value, "rhs": integrated.rhs.to_text()}
            self._add(f"{name}.integrated", "form", value, integrated.confidence)
            return
        for link in integration_chain(r, self._metric(), self.config):
            value = {
                "k": link.k,
                "form": link.form.to_text(),
                "pseudostructure": link.pseudostructure.to_text() if link.pseudostructure is not None else None,
                "constraints": {var: str(c) for var, c in link.constraints.items()},
                "closure": link.closure_verdict.label,
                "relation": link.relation.kind.value,
            }
            self._add(f"{name}.k{link.k}", "form", value, link.closure_verdict.confidence)

    def _classify(self, _: str) -> None:
        a = self.args
        n = a.n if a.n is not None else a.N
        structure = classify(a.p, a.k, n, a.N)
        self._add(f"p{a.p}k{a.k}N{a.N}", "class", structure.model_dump(mode="json"))

    def _canonical(self, name: str) -> None:
        if name not in self.doc.canonicals:
            raise UsageError(f"unknown canonical map {name}")
        decl = self.doc.canonicals[name]
        check = verify_canonical(None, decl.expressions, self.doc.chart, self.config)
        labels = {"CLOSED": "CANONICAL", "NOT CLOSED": "NOT CANONICAL"}
        value = {
            "label": labels.get(check.is_canonical.label, check.is_canonical.label),
            "delta": check.delta.to_text(),
            "generating_function": (
                check.generating_function.to_text() if check.generating_function is not None else None
            ),
        }
        self._add(name, "verdict", value, check.is_canonical.confidence)

    def _balance(self, name: str) -> None:
        if name not in self.doc.balances:
            raise UsageError(f"unknown balance system {name}")
        diagnosis = equilibrium_report(self.doc.balances[name].system, self._metric(), self._probe(), None, self.config)
        value = {
            "state": diagnosis.state.value,
            "internal_force": _magnitude(diagnosis.internal_force),
            "relation": diagnosis.relation.kind.value,
            "commutator": diagnosis.commutator.total.to_text(),
        }
        self._add(name, "verdict", value, diagnosis.commutator.total_verdict.confidence)
        for event in diagnosis.events:
            self._add(name, "event", event.pseudostructure.to_text(), event.closure_verdict.confidence)
        for item in diagnosis.state_functions:
            self._add(f"{name}.psi@{item.pseudostructure.to_text()}", "form", item.psi.to_text())

    def _print(self, _: str) -> None:
        self._add("document", "form", self.doc.to_text())


def _load(args: argparse.Namespace) -> EngineConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    return config


def _read_document(path: pathlib.Path) -> str:
    """Read a document as UTF-8, positioning undecodable bytes."""
    data = path.read_bytes()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as err:
        line = data.count(b"\n", 0, err.start) + 1
        column = err.start - data.rfind(b"\n", 0, err.start)
        raise LexicalError(f"invalid UTF-8 byte 0x{data[err.start]:02x}", line, column) from err


def main(argv: typing.Sequence[str] | None = None) -> int:
    """Entry point of the evoforms command.

    Args:
        argv (Sequence[str] | None): Arguments without the program name;
            sys.argv[1:] if omitted.

    Returns:
        The exit status: 0 on success, 1 on document or engine errors,
        2 on usage errors.

    Raises:
        None
    """
    errors = ErrorCtrl()
    try:
        args = build_parser().parse_args(argv)
        config = _load(args)
    except (UsageError, pydantic.ValidationError) as err:
        print(f"usage error: {err}", file=sys.stderr)
        errors.put(ErrorType.ERROR_USAGE)
        return errors.exit_status()
    except BaseEvoFormsError as err:
        print(f"error: {err}", file=sys.stderr)
        errors.put(err)
        return errors.exit_status()

    logging.basicConfig(level=logging.DEBUG if args.verbose else config.log_level)
    logger.debug("entry: main(%s)", argv)

    doc = Document()
    if args.verb != "classify":
        path = pathlib.Path(args.document)
        try:
            doc = parse_document(_read_document(path))
        except OSError as err:
            print(f"usage error: cannot read {path}: {err}", file=sys.stderr)
            errors.put(ErrorType.ERROR_USAGE)
            return errors.exit_status()
        except DocumentError as err:
            print(f"{path}:{err}", file=sys.stderr)
            errors.put(err)
            return errors.exit_status()

    runner = Runner(args, doc, config)
    report = runner.run()
    if args.json:
        sys.stdout.write(report.to_json())
    elif args.verb == "print":
        sys.stdout.write(doc.to_text())
    else:
        sys.stdout.write(report.to_text())
    for line in runner.errors.describe():
        logger.info("failed target: %s", line)
    return runner.errors.exit_status()


if __name__ == "__main__":
    sys.exit(main())
