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

"""
Test program for dsl module
"""

import pathlib
from unittest import TestCase

import sympy

from evoforms import dsl, forms
from evoforms.balance import LawGroup
from evoforms.dsl import parse_document, print_document
from evoforms.exceptions import DimensionError, LexicalError, NameResolutionError, SyntacticError
from evoforms.symexpr import chart

GOLDEN = pathlib.Path(__file__).with_name("golden")
x, y, z = sympy.symbols("x y z")


class TestParseDocument(TestCase):
    """Test class for parse_document function."""

    def test_parse_document_forms(self):
        """Test for forms, pseudostructures and relations."""
        doc = parse_document(
            "chart x y z;\n"
            "form w(1) = y dx;\n"
            "form area(2) = dy^dx + (x + z) dx^dz;\n"
            "pseudostructure pi { y = 2, z = -1/2 };\n"
            "relation r: d(?) = w on pi;\n"
        )
        c = chart("x", "y", "z")
        self.assertEqual(c, doc.chart)
        self.assertEqual(forms.one_form(c, [y, 0, 0]), doc.forms["w"])
        self.assertEqual(forms.Form(c, 2, {(0, 1): -1, (0, 2): x + z}), doc.forms["area"])
        self.assertEqual({1: 2, 2: sympy.Rational(-1, 2)}, doc.pseudostructures["pi"].constraints)
        self.assertEqual(dsl.RelationDecl(lhs=None, rhs="w", pseudostructure="pi"), doc.relations["r"])

    def test_parse_document_scalar_form(self):
        """Test for a 0-form with a transcendental coefficient."""
        doc = parse_document("chart x y;\nform f(0) = sin(x)*y^2 - 1;\n")
        self.assertEqual(forms.scalar_form(doc.chart, sympy.sin(x) * y**2 - 1), doc.forms["f"])

    def test_parse_document_connection(self):
        """Test for 1-based connection indices."""
        doc = parse_document("chart x y z;\nconnection G { [1][2][3] = x; [3][1][1] = 2; }\n")
        self.assertEqual({(0, 1, 2): x, (2, 0, 0): 2}, doc.connections["G"].entries())

    def test_parse_document_metric(self):
        """Test for a symmetric metric table and the reserved Euclidean name."""
        doc = parse_document("chart x y;\nmetric g { [1][1] = 2; [1][2] = x; [2][2] = 3; }\n")
        self.assertEqual(sympy.ImmutableMatrix([[2, x], [x, 3]]), doc.metrics["g"].entries)
        self.assertTrue(doc.metric("euclidean").is_euclidean)
        with self.assertRaises(KeyError):
            doc.metric("h")

    def test_parse_document_canonical(self):
        """Test for named and unnamed canonical maps."""
        doc = parse_document("chart q p;\ncanonical (q, p) -> (Q = p, P = -q);\ncanonical s: (q, p) -> (Q = q, P = p);\n")
        q, p = doc.chart.symbols
        self.assertEqual(["canonical1", "s"], list(doc.canonicals))
        self.assertEqual((p, -q), doc.canonicals["canonical1"].expressions)
        self.assertEqual(("Q", "P"), doc.canonicals["s"].images)

    def test_parse_document_balance(self):
        """Test when a balance system declares the chart."""
        doc = parse_document("balance system S { xi 2; A[1] = xi2; A[2] = 0; laws energy momentum; }\n")
        self.assertEqual(("xi1", "xi2"), doc.chart.names)
        system = doc.balances["S"].system
        self.assertEqual((sympy.Symbol("xi2"), 0), system.coefficients)
        self.assertEqual(frozenset({LawGroup.ENERGY, LawGroup.MOMENTUM}), system.laws)

    def test_parse_document_comment(self):
        """Test when the document has comments."""
        doc = parse_document("# header\nchart x; # one variable\nform f(0) = x;\n")
        self.assertEqual(["f"], list(doc.forms))

    def test_parse_document_undefined_variable(self):
        """Test when a coefficient uses a variable outside the chart."""
        with self.assertRaises(NameResolutionError) as cm:
            parse_document("chart x y;\nform w(1) = q dx;\n")
        self.assertEqual((2, 13), (cm.exception.line, cm.exception.column))
        self.assertTrue(str(cm.exception).startswith("2:13: undefined variable q"))

    def test_parse_document_undefined_basis(self):
        """Test when a basis differential names an unknown variable."""
        with self.assertRaises(NameResolutionError):
            parse_document("chart x y;\nform w(1) = x dq;\n")

    def test_parse_document_no_chart(self):
        """Test when a form is declared before the chart."""
        with self.assertRaises(NameResolutionError):
            parse_document("form w(1) = dx;\n")

    def test_parse_document_second_chart(self):
        """Test when a second chart is declared."""
        with self.assertRaises(NameResolutionError):
            parse_document("chart x y;\nchart z;\n")

    def test_parse_document_reserved_prefix(self):
        """Test when a chart variable starts with d."""
        with self.assertRaises(NameResolutionError):
            parse_document("chart delta y;\n")

    def test_parse_document_redefined(self):
        """Test when a name is defined twice."""
        with self.assertRaises(NameResolutionError):
            parse_document("chart x y;\nform w(1) = dx;\nform w(1) = dy;\n")

    def test_parse_document_unknown_function(self):
        """Test when a call names an unsupported function."""
        with self.assertRaises(NameResolutionError) as cm:
            parse_document("chart x;\nform f(0) = tan(x);\n")
        self.assertIn("sin", cm.exception.expected)

    def test_parse_document_degree_mismatch(self):
        """Test when a term does not have the declared degree."""
        with self.assertRaises(DimensionError):
            parse_document("chart x y;\nform w(2) = y dx;\n")

    def test_parse_document_relation_degree(self):
        """Test when d of the potential cannot equal the rhs."""
        with self.assertRaises(DimensionError):
            parse_document("chart x y;\nform a(0) = x;\nform b(2) = dx^dy;\nrelation r: d(a) = b;\n")

    def test_parse_document_undefined_form(self):
        """Test when a relation names an undefined form."""
        with self.assertRaises(NameResolutionError):
            parse_document("chart x y;\nrelation r: d(?) = w;\n")

    def test_parse_document_index_range(self):
        """Test when a connection index is outside the chart."""
        with self.assertRaises(DimensionError):
            parse_document("chart x y;\nconnection G { [3][1][1] = 1; }\n")

    def test_parse_document_duplicate_metric_entry(self):
        """Test when a metric entry is given twice."""
        with self.assertRaises(DimensionError):
            parse_document("chart x y;\nmetric g { [1][2] = 1; [2][1] = 1; [1][1] = 2; [2][2] = 2; }\n")

    def test_parse_document_division_by_zero(self):
        """Test when a coefficient divides by zero."""
        with self.assertRaises(DimensionError):
            parse_document("chart x y;\nform f(0) = x/0;\n")

    def test_parse_document_chart_too_large(self):
        """Test when the chart has more than eight variables."""
        with self.assertRaises(DimensionError):
            parse_document("chart a b c e f g h i j;\n")

    def test_parse_document_balance_chart_mismatch(self):
        """Test when a balance chart differs from the document chart."""
        with self.assertRaises(DimensionError):
            parse_document("chart x y;\nbalance system S { xi 2; A[1] = 1; A[2] = 0; }\n")

    def test_parse_document_balance_laws(self):
        """Test when the law groups do not fit the degree."""
        with self.assertRaises(DimensionError):
            parse_document("balance system S { xi 2; A[1] = 1; A[2] = 0; degree 1; laws energy; }\n")

    def test_parse_document_lexical_error(self):
        """Test when a character starts no token."""
        with self.assertRaises(LexicalError) as cm:
            parse_document("chart x y;\nform w(1) = y @ dx;\n")
        self.assertEqual(2, cm.exception.line)

    def test_parse_document_syntactic_error(self):
        """Test when a statement is not terminated."""
        with self.assertRaises(SyntacticError):
            parse_document("chart x y;\nform w(1) = y dx\n")

    def test_parse_document_unparenthesized_sum(self):
        """Test when a coefficient sum is not parenthesized."""
        with self.assertRaises(SyntacticError):
            parse_document("chart x y;\nform w(1) = x + y dx;\n")


class TestPrintDocument(TestCase):
    """Test class for print_document function."""

    def test_print_document_canonical_text(self):
        """Test for the canonical text of a small document."""
        doc = parse_document("chart x y;\nform w(2) = dy^dx;\nform v(1) = x dy + (y + x) dx;\n")
        expected = "chart x y;\nform w(2) = -dx^dy;\nform v(1) = (x + y) dx + x dy;\n"
        self.assertEqual(expected, print_document(doc))
        self.assertEqual(expected, doc.to_text())

    def test_print_document_hodge_dual_round_trip(self):
        """Test when a form is the dual of dx under a metric that is not Euclidean."""
        c = chart("x", "y")
        star = forms.hodge_star(forms.basis_form(c, (0,)), forms.diagonal_metric(c, [x**2 + 1, 1]))
        self.assertEqual("(sqrt(abs(x^2 + 1)))/(x^2 + 1) dy", star.to_text())
        text = f"chart x y;\nform s(1) = {star.to_text()};\n"
        doc = parse_document(text)
        self.assertEqual(star, doc.forms["s"])
        self.assertEqual(text, print_document(doc))

    def test_print_document_fractional_power(self):
        """Test when a coefficient has a cube root."""
        doc = parse_document("chart x;\nform f(0) = x^(1/3) + 1;\n")
        self.assertEqual(forms.scalar_form(doc.chart, x ** sympy.Rational(1, 3) + 1), doc.forms["f"])
        self.assertEqual(doc, parse_document(print_document(doc)))

    def test_print_document_golden_round_trip(self):
        """Test for parse(print(doc)) == doc over the golden corpus."""
        paths = sorted(GOLDEN.glob("*.exo"))
        self.assertTrue(paths)
        for path in paths:
            with self.subTest(path=path.name):
                doc = parse_document(path.read_text(encoding="utf-8"))
                text = print_document(doc)
                again = parse_document(text)
                self.assertEqual(doc, again)
                self.assertEqual(text, print_document(again))
