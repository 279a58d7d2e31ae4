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
Test program for forms module
"""

import itertools
from unittest import TestCase

import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from evoforms import forms
from evoforms.exceptions import (
    ChartError,
    ChartMismatchError,
    DegreeError,
    MetricError,
    NotClosedError,
    UnsupportedIntegrandError,
    UnsupportedMetricError,
)
from evoforms.forms import Form, Pseudostructure
from evoforms.symexpr import chart

CHART = chart("x", "y", "z")
x, y, z = CHART.symbols


@st.composite
def polynomials(draw):
    """Small polynomials in x, y, z with integer coefficients."""
    terms = draw(
        st.lists(
            st.tuples(st.integers(-3, 3), st.integers(0, 2), st.integers(0, 2), st.integers(0, 2)),
            max_size=3,
        )
    )
    return sympy.Add(*(c * x**a * y**b * z**e for c, a, b, e in terms))


@st.composite
def polynomial_forms(draw, degree):
    """Forms of a given degree on the x, y, z chart."""
    indices = list(itertools.combinations(range(3), degree))
    return Form(CHART, degree, {idx: draw(polynomials()) for idx in indices})


NAMES = ("x", "y", "z", "w")


@st.composite
def coefficients(draw, symbols):
    """Polynomials of total degree 3 or less in the given symbols."""
    exponents = st.lists(st.integers(0, 3), min_size=len(symbols), max_size=len(symbols)).filter(
        lambda powers: sum(powers) <= 3
    )
    terms = draw(st.lists(st.tuples(st.integers(-3, 3), exponents), max_size=3))
    return sympy.Add(*(c * sympy.Mul(*(s**e for s, e in zip(symbols, powers))) for c, powers in terms))


@st.composite
def forms_on(draw, n, degree):
    """Forms of a given degree on the chart of the first n names."""
    c = chart(*NAMES[:n])
    indices = itertools.combinations(range(n), degree)
    return Form(c, degree, {idx: draw(coefficients(c.symbols)) for idx in indices})


@st.composite
def small_forms(draw):
    """Forms of degree 3 or less on charts of dimension 1 to 4."""
    n = draw(st.integers(1, 4))
    return draw(forms_on(n, draw(st.integers(0, min(3, n)))))


@st.composite
def form_pairs(draw):
    """Two forms of degree 3 or less on one chart of dimension 1 to 4."""
    n = draw(st.integers(1, 4))
    a = draw(forms_on(n, draw(st.integers(0, min(3, n)))))
    b = draw(forms_on(n, draw(st.integers(0, min(3, n)))))
    return a, b


class TestPermutationSign(TestCase):
    """Test class for permutation_sign function."""

    def test_permutation_sign_sorted(self):
        """Test when the multi-index is already sorted."""
        self.assertEqual((1, (0, 1, 2)), forms.permutation_sign([0, 1, 2]))

    def test_permutation_sign_odd(self):
        """Test when one transposition sorts the multi-index."""
        self.assertEqual((-1, (0, 1, 2)), forms.permutation_sign([1, 0, 2]))

    def test_permutation_sign_cycle(self):
        """Test when a 3-cycle sorts the multi-index."""
        self.assertEqual((1, (0, 1, 2)), forms.permutation_sign([2, 0, 1]))

    def test_permutation_sign_repeated(self):
        """Test when an index is repeated."""
        self.assertEqual(0, forms.permutation_sign([1, 1])[0])


class TestForm(TestCase):
    """Test class for Form construction and arithmetic."""

    def test_form_normalizes_indices(self):
        """Test when an unsorted multi-index is given."""
        t = Form(CHART, 2, {(1, 0): x})
        self.assertEqual({(0, 1): -x}, t.coefficients)
        self.assertEqual(x, t.coefficient((1, 0)))

    def test_form_drops_zero_coefficients(self):
        """Test when a coefficient simplifies to zero."""
        t = Form(CHART, 1, {(0,): x - x, (1,): (x + 1) ** 2 - x**2 - 2 * x - 1})
        self.assertTrue(t.is_empty)
        self.assertEqual(forms.zero_form(CHART, 1), t)

    def test_form_degree_mismatch(self):
        """Test when a multi-index does not have the form degree."""
        with self.assertRaises(DegreeError):
            Form(CHART, 2, {(0,): 1})

    def test_form_index_outside_chart(self):
        """Test when an index is outside the chart."""
        with self.assertRaises(ChartError):
            Form(CHART, 1, {(3,): 1})

    def test_form_immutable(self):
        """Test when an attribute is assigned."""
        with self.assertRaises(AttributeError):
            forms.scalar_form(CHART, x).degree = 1

    def test_form_add_chart_mismatch(self):
        """Test when forms on different charts are added."""
        with self.assertRaises(ChartMismatchError):
            _ = forms.scalar_form(CHART, x) + forms.scalar_form(chart("x"), x)

    def test_form_add_degree_mismatch(self):
        """Test when forms of different degree are added."""
        with self.assertRaises(DegreeError):
            _ = forms.scalar_form(CHART, x) + forms.basis_form(CHART, (0,))

    def test_form_subtract(self):
        """Test when a form is subtracted from itself."""
        t = forms.one_form(CHART, [y, x, z])
        self.assertTrue((t - t).is_empty)

    def test_form_to_text(self):
        """Test for the canonical text of a form."""
        t = Form(CHART, 2, {(0, 1): 1, (1, 2): -x, (0, 2): x + y})
        self.assertEqual("dx^dy + (x + y) dx^dz - x dy^dz", t.to_text())

    def test_form_to_text_zero(self):
        """Test for the canonical text of the zero form."""
        self.assertEqual("0", forms.zero_form(CHART, 2).to_text())

    def test_one_form_arity(self):
        """Test when the number of coefficients is not the dimension."""
        with self.assertRaises(DegreeError):
            forms.one_form(CHART, [x, y])

    def test_form_evaluate(self):
        """Test for the evaluation of coefficients at a point."""
        t = forms.one_form(CHART, [y * z, 0, x])
        self.assertEqual({(0,): 6, (2,): 1}, t.evaluate([1, 2, 3]))


class TestWedge(TestCase):
    """Test class for wedge function."""

    def test_wedge_basis(self):
        """Test for dx ^ dy and dy ^ dx."""
        dx = forms.basis_form(CHART, (0,))
        dy = forms.basis_form(CHART, (1,))
        self.assertEqual(forms.basis_form(CHART, (0, 1)), forms.wedge(dx, dy))
        self.assertEqual(forms.basis_form(CHART, (0, 1), -1), forms.wedge(dy, dx))

    def test_wedge_self_one_form(self):
        """Test when a 1-form is wedged with itself."""
        t = forms.one_form(CHART, [x, y, z])
        self.assertTrue(forms.wedge(t, t).is_empty)

    def test_wedge_exceeds_dimension(self):
        """Test when the degree sum exceeds the dimension."""
        t = forms.basis_form(CHART, (0, 1))
        self.assertEqual(4, forms.wedge(t, t).degree)
        self.assertTrue(forms.wedge(t, t).is_empty)

    def test_wedge_chart_mismatch(self):
        """Test when the factors live on different charts."""
        with self.assertRaises(ChartMismatchError):
            forms.wedge(forms.scalar_form(CHART, 1), forms.scalar_form(chart("x"), 1))

    @settings(max_examples=1000, deadline=None)
    @given(form_pairs())
    def test_wedge_graded_commutative(self, pair):
        """Test for a ^ b = (-1)^(pq) b ^ a."""
        a, b = pair
        self.assertEqual(forms.wedge(a, b), forms.wedge(b, a).scale((-1) ** (a.degree * b.degree)))


class TestExteriorDerivativeFlat(TestCase):
    """Test class for exterior_derivative_flat function."""

    def test_exterior_derivative_flat_scalar(self):
        """Test for the differential of a scalar."""
        self.assertEqual(forms.one_form(CHART, [2 * x * y, x**2, 0]), forms.exact_differential(CHART, x**2 * y))

    def test_exterior_derivative_flat_one_form(self):
        """Test for d(y dx) = -dx^dy."""
        t = forms.one_form(CHART, [y, 0, 0])
        self.assertEqual(forms.basis_form(CHART, (0, 1), -1), forms.exterior_derivative_flat(t))

    def test_exterior_derivative_flat_top_degree(self):
        """Test when the form has the chart dimension."""
        t = forms.basis_form(CHART, (0, 1, 2), x * y * z)
        self.assertTrue(forms.exterior_derivative_flat(t).is_empty)

    @settings(max_examples=1000, deadline=None)
    @given(small_forms())
    def test_exterior_derivative_flat_nilpotent(self, t):
        """Test for d(d t) = 0."""
        dd = forms.exterior_derivative_flat(forms.exterior_derivative_flat(t))
        self.assertEqual(t.degree + 2, dd.degree)
        self.assertTrue(dd.is_empty)

    @settings(max_examples=1000, deadline=None)
    @given(form_pairs())
    def test_exterior_derivative_flat_leibniz(self, pair):
        """Test for d(a ^ b) = da ^ b + (-1)^p a ^ db."""
        a, b = pair
        d = forms.exterior_derivative_flat
        left = d(forms.wedge(a, b))
        right = forms.wedge(d(a), b) + forms.wedge(a, d(b)).scale((-1) ** a.degree)
        self.assertEqual(left, right)


class TestMetric(TestCase):
    """Test class for Metric class."""

    def test_metric_euclidean(self):
        """Test for the Euclidean metric."""
        g = forms.euclidean_metric(CHART)
        self.assertTrue(g.is_diagonal)
        self.assertTrue(g.is_euclidean)
        self.assertEqual(1, g.determinant)

    def test_metric_not_symmetric(self):
        """Test when the table is not symmetric."""
        with self.assertRaises(MetricError):
            forms.Metric(chart("x", "y"), [[1, 1], [0, 1]])

    def test_metric_wrong_shape(self):
        """Test when the table is not n x n."""
        with self.assertRaises(MetricError):
            forms.Metric(chart("x", "y"), [[1, 0]])

    def test_metric_degenerate(self):
        """Test when the determinant vanishes at (1, ..., 1)."""
        with self.assertRaises(MetricError):
            forms.diagonal_metric(chart("x", "y"), [1, sympy.Symbol("x") - 1])


class TestHodgeStar(TestCase):
    """Test class for hodge_star function."""

    def test_hodge_star_euclidean_basis(self):
        """Test for the duals of the Euclidean basis in three dimensions."""
        g = forms.euclidean_metric(CHART)
        self.assertEqual(forms.basis_form(CHART, (1, 2)), forms.hodge_star(forms.basis_form(CHART, (0,)), g))
        self.assertEqual(forms.basis_form(CHART, (0, 2), -1), forms.hodge_star(forms.basis_form(CHART, (1,)), g))
        self.assertEqual(forms.basis_form(CHART, (0, 1, 2)), forms.hodge_star(forms.scalar_form(CHART, 1), g))

    def test_hodge_star_minkowski(self):
        """Test for the dual of dt under the metric diag(-1, 1)."""
        c = chart("t", "x")
        g = forms.diagonal_metric(c, [-1, 1])
        self.assertEqual(forms.basis_form(c, (1,), -1), forms.hodge_star(forms.basis_form(c, (0,)), g))

    def test_hodge_star_not_diagonal(self):
        """Test when the metric is not diagonal."""
        c = chart("x", "y")
        with self.assertRaises(UnsupportedMetricError):
            forms.hodge_star(forms.basis_form(c, (0,)), forms.Metric(c, [[2, 1], [1, 2]]))

    def test_hodge_star_chart_mismatch(self):
        """Test when the metric lives on another chart."""
        with self.assertRaises(ChartMismatchError):
            forms.hodge_star(forms.basis_form(CHART, (0,)), forms.euclidean_metric(chart("x", "y")))

    def test_hodge_star_involution(self):
        """Test for ** = (-1)^(p(n-p)) sign(det g) on every basis form up to n = 4."""
        for n in range(1, 5):
            c = chart(*NAMES[:n])
            diagonals = [[1] * n, [-1] + [1] * (n - 1), [2, 3, 5, 7][:n], [-2, 3, -5, 7][:n]]
            for diagonal in diagonals:
                g = forms.diagonal_metric(c, diagonal)
                sign = 1 if g.determinant > 0 else -1
                for p in range(n + 1):
                    for idx in itertools.combinations(range(n), p):
                        with self.subTest(n=n, diagonal=diagonal, idx=idx):
                            t = forms.basis_form(c, idx)
                            twice = forms.hodge_star(forms.hodge_star(t, g), g)
                            self.assertEqual(t.scale(sign * (-1) ** (p * (n - p))), twice)

    @settings(max_examples=200, deadline=None)
    @given(small_forms())
    def test_hodge_star_involution_polynomial(self, t):
        """Test for ** t = (-1)^(p(n-p)) t under the Euclidean metric."""
        n = t.chart.dimension
        g = forms.euclidean_metric(t.chart)
        twice = forms.hodge_star(forms.hodge_star(t, g), g)
        self.assertEqual(t.scale((-1) ** (t.degree * (n - t.degree))), twice)


class TestPseudostructure(TestCase):
    """Test class for Pseudostructure class and pullback_to function."""

    def test_pseudostructure_normal(self):
        """Test for the induced chart of a slice."""
        pi = Pseudostructure(CHART, {"z": 0})
        self.assertEqual(("x", "y"), pi.induced_chart.names)
        self.assertEqual(2, pi.dimension)
        self.assertEqual("{z = 0}", pi.to_text())

    def test_pseudostructure_point(self):
        """Test when every variable is constrained."""
        pi = Pseudostructure(CHART, {"x": 1, "y": 2, "z": 3})
        self.assertEqual(0, pi.dimension)

    def test_pseudostructure_whole_chart(self):
        """Test when there is no constraint."""
        with self.assertLogs("evoforms.forms", level="WARNING"):
            pi = Pseudostructure(CHART, {})
        self.assertTrue(pi.is_whole_chart)

    def test_pseudostructure_depends_on_variable(self):
        """Test when a constant depends on a chart variable."""
        with self.assertRaises(ChartError):
            Pseudostructure(CHART, {"z": x})

    def test_pseudostructure_symbolic_constant(self):
        """Test when the constant is a parameter symbol."""
        c_z = sympy.Symbol("c_z")
        pi = Pseudostructure(CHART, {2: c_z})
        self.assertEqual({c_z}, pi.parameters)

    def test_pullback_to_drops_constrained_directions(self):
        """Test for the restriction of a 1-form to {z = 2}."""
        t = forms.one_form(CHART, [z * y, x, x])
        pi = Pseudostructure(CHART, {"z": 2})
        expected = forms.one_form(pi.induced_chart, [2 * y, x])
        self.assertEqual(expected, forms.pullback_to(t, pi))

    def test_pullback_to_point(self):
        """Test when the slice is a point and the form a 1-form."""
        pi = Pseudostructure(CHART, {"x": 1, "y": 2, "z": 3})
        result = forms.pullback_to(forms.one_form(CHART, [x, y, z]), pi)
        self.assertTrue(result.is_empty)
        self.assertEqual(0, result.chart.dimension)

    def test_pullback_to_chart_mismatch(self):
        """Test when the form lives on another chart."""
        with self.assertRaises(ChartMismatchError):
            forms.pullback_to(forms.scalar_form(chart("x"), 1), Pseudostructure(CHART, {"z": 0}))

    @settings(max_examples=25, deadline=None)
    @given(polynomial_forms(1))
    def test_pullback_to_commutes_with_d(self, t):
        """Test for d(t|pi) = (dt)|pi."""
        pi = Pseudostructure(CHART, {"y": 1})
        left = forms.exterior_derivative_flat(forms.pullback_to(t, pi))
        right = forms.pullback_to(forms.exterior_derivative_flat(t), pi)
        self.assertEqual(left, right)


class TestHomotopyAntiderivative(TestCase):
    """Test class for homotopy_antiderivative function."""

    def test_homotopy_antiderivative_area_form(self):
        """Test for a potential of dx^dy."""
        t = forms.basis_form(CHART, (0, 1))
        chi = forms.homotopy_antiderivative(t)
        self.assertEqual(forms.one_form(CHART, [-y / 2, x / 2, 0]), chi)
        self.assertEqual(t, forms.exterior_derivative_flat(chi))

    def test_homotopy_antiderivative_not_closed(self):
        """Test when the form is not closed."""
        with self.assertRaises(NotClosedError):
            forms.homotopy_antiderivative(forms.one_form(CHART, [y, 0, 0]))

    def test_homotopy_antiderivative_degree_zero(self):
        """Test when the form is a scalar."""
        with self.assertRaises(DegreeError):
            forms.homotopy_antiderivative(forms.scalar_form(CHART, x))

    def test_homotopy_antiderivative_not_polynomial(self):
        """Test when a coefficient is transcendental."""
        with self.assertRaises(UnsupportedIntegrandError):
            forms.homotopy_antiderivative(forms.one_form(CHART, [sympy.cos(x), 0, 0]))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2).flatmap(polynomial_forms))
    def test_homotopy_antiderivative_inverts_d(self, chi):
        """Test for d(h(d chi)) = d chi on exact forms."""
        t = forms.exterior_derivative_flat(chi)
        self.assertEqual(t, forms.exterior_derivative_flat(forms.homotopy_antiderivative(t)))
