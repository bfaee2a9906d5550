from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import fig3_graph, iv_graph
from degid.ident import H, build_ideal, lam, om, sig
from degid.polyring import (
    MonomialOrder,
    Polynomial,
    TableMismatch,
    VariableTable,
    ZeroPolynomial,
    add,
    compare,
    dehomogenize,
    default_order,
    from_terms,
    homogenize,
    is_w_homogeneous,
    leading_term,
    mul,
    var_name,
    weighted_degree,
)

XY = VariableTable(["x", "y", "z"])


def gens(table=XY):
    return [table.gen(v) for v in table.variables]


def iv_table():
    return build_ideal(iv_graph()).table


def tau23(t):
    w11, w22, w23 = (t.gen(om(*e)) for e in [(1, 1), (2, 2), (2, 3)])
    l12, l23 = t.gen(lam(1, 2)), t.gen(lam(2, 3))
    return w23 + w22 * l23 + w11 * l12**2 * l23


def test_add_examples():
    x, y, _ = gens()
    assert add(x, -x).is_zero()
    assert add(x + y, y) == x + 2 * y
    t = build_ideal(fig3_graph()).table
    g = t.gen(lam(1, 2)) * t.gen(sig(1, 1)) - t.gen(sig(1, 2))
    assert add(g, t.gen(sig(1, 2))) == t.gen(lam(1, 2)) * t.gen(sig(1, 1))


def test_mul_examples():
    x, _, _ = gens()
    assert mul(x, XY.zero()).is_zero()
    assert mul(x + 1, x - 1) == x**2 - 1
    t = iv_table()
    w11, l12, l23 = t.gen(om(1, 1)), t.gen(lam(1, 2)), t.gen(lam(2, 3))
    m = mul(w11 * l12, l12 * l23)
    assert len(m) == 1
    assert t.sparse(next(iter(m.terms))) == {lam(1, 2): 2, lam(2, 3): 1, om(1, 1): 1}


def test_mismatched_tables():
    other = VariableTable(["x", "y", "z"], [1, 2, 1])
    with pytest.raises(TableMismatch):
        add(XY.gen("x"), other.gen("x"))


def test_weighted_degree_examples():
    t = iv_table()
    assert weighted_degree(t.gen(om(1, 1)) * t.gen(lam(1, 2)) ** 2 * t.gen(lam(2, 3))) == 4
    assert weighted_degree(t.gen(sig(2, 3))) == 4
    assert weighted_degree(t.zero()) is None


def test_is_w_homogeneous_examples():
    t = iv_table()
    h = t.gen(H)
    w23, w22, w11 = t.gen(om(2, 3)), t.gen(om(2, 2)), t.gen(om(1, 1))
    l12, l23 = t.gen(lam(1, 2)), t.gen(lam(2, 3))
    f = t.gen(sig(2, 3)) - w23 * h**3 - w22 * l23 * h**2 - w11 * l12**2 * l23
    assert is_w_homogeneous(f)
    assert not is_w_homogeneous(t.gen(sig(2, 3)) - w23)
    assert is_w_homogeneous(3 * l12 * t.gen(sig(3, 3)))


def test_homogenize_examples():
    t = iv_table()
    h = t.gen(H)
    w23, w22 = t.gen(om(2, 3)), t.gen(om(2, 2))
    l12, l23, w11 = t.gen(lam(1, 2)), t.gen(lam(2, 3)), t.gen(om(1, 1))
    expected = w23 * h**3 + w22 * l23 * h**2 + w11 * l12**2 * l23
    assert homogenize(tau23(t)) == expected
    already = w11 * l12 * l23 + t.gen(sig(1, 3))
    assert homogenize(already) == already
    assert homogenize(l12) == l12
    with pytest.raises(ValueError):
        homogenize(expected)
    with pytest.raises(ZeroPolynomial):
        homogenize(t.zero())


def test_dehomogenize_examples():
    t = iv_table()
    h = t.gen(H)
    assert dehomogenize(homogenize(tau23(t))) == tau23(t)
    f = t.gen(lam(1, 2)) + t.gen(sig(1, 1))
    assert dehomogenize(f) == f
    assert dehomogenize(h**3) == t.const(1)


def test_compare_examples():
    t = build_ideal(fig3_graph()).table
    order = MonomialOrder(t, [lam(3, 4)])
    one = 0
    m = t.var_monomial(sig(2, 4))
    assert compare(order, one, m) == -1
    assert compare(order, m, m + t.var_monomial(H)) == -1
    assert compare(order, m, m) == 0
    # lex on lambda_34 decides between monomials of equal weighted degree
    a = t.var_monomial(lam(3, 4)) + t.var_monomial(sig(2, 3)) + t.var_monomial(H)
    assert t.wdeg(a) == t.wdeg(m)
    assert compare(order, a, m) == 1


def test_leading_term_examples():
    t = build_ideal(fig3_graph()).table
    h = t.gen(H)
    g = t.gen(lam(3, 4)) * t.gen(sig(2, 3)) * h + t.gen(lam(1, 2)) * t.gen(sig(1, 4)) - t.gen(sig(2, 4))
    order = MonomialOrder(t, [lam(3, 4)])
    lm, c = leading_term(g, order)
    assert t.sparse(lm) == {lam(3, 4): 1, sig(2, 3): 1, H: 1}
    assert c == 1
    single = 5 * t.gen(sig(1, 1))
    assert leading_term(single, order) == (t.var_monomial(sig(1, 1)), 5)
    with pytest.raises(ZeroPolynomial):
        leading_term(t.zero(), order)


def test_leading_term_generators_under_sigma_elimination():
    ideal = build_ideal(iv_graph())
    t = ideal.table
    sigmas = [v for v in t.variables if v[0] == "s"]
    order = MonomialOrder(t, sigmas)
    for (u, v), g in zip(ideal.sigma, ideal.generators):
        lm, _ = leading_term(g, order)
        assert lm == t.var_monomial(sig(u, v))


def test_order_key_is_additive():
    t = iv_table()
    order = MonomialOrder(t, [lam(2, 3), lam(1, 2)])
    a = t.monomial({lam(1, 2): 2, sig(1, 3): 1})
    b = t.monomial({om(2, 3): 1, H: 3})
    assert order.key(a + b) == order.key(a) + order.key(b)


def test_monomial_helpers():
    t = VariableTable(["a", "b"], [1, 3])
    a2b = t.monomial({"a": 2, "b": 1})
    assert t.wdeg(a2b) == 5 and t.degree(a2b) == 3
    assert t.divides(t.var_monomial("a"), a2b)
    assert not t.divides(t.var_monomial("b") * 2, a2b)
    assert t.lcm(t.monomial({"a": 1, "b": 2}), a2b) == t.monomial({"a": 2, "b": 2})
    with pytest.raises(ValueError):
        t.monomial({"a": -1})


def test_evaluate_and_substitute():
    x, y, z = gens()
    f = x * y - 2 * z
    assert f.evaluate({"x": Fraction(1, 2), "y": 4, "z": 3}) == -4
    g = f.substitute({"x": y + 1})
    assert g == y * y + y - 2 * z


def test_from_terms_and_names():
    f = from_terms(XY, [(2, {"x": 1}), (-1, {"y": 2})])
    assert f == 2 * XY.gen("x") - XY.gen("y") ** 2
    assert var_name(("l", 1, 2)) == "l_{1,2}"
    assert var_name(("h",)) == "h"


# -- ring axioms ---------------------------------------------------------------

coeff = st.fractions(min_value=-5, max_value=5, max_denominator=4)
term = st.tuples(coeff, st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)))
small = st.fractions(-3, 3, max_denominator=3)
poly = st.lists(term, max_size=5).map(
    lambda ts: from_terms(XY, [(c, dict(zip("xyz", e))) for c, e in ts])
)


@settings(max_examples=100, deadline=None)
@given(poly, poly, poly)
def test_ring_axioms(f, g, k):
    assert f + g == g + f
    assert (f + g) + k == f + (g + k)
    assert f * g == g * f
    assert (f * g) * k == f * (g * k)
    assert f * (g + k) == f * g + f * k
    assert (f - f).is_zero()
    assert f * XY.const(1) == f


@settings(max_examples=100, deadline=None)
@given(poly, poly)
def test_degree_and_leading_term_multiplicative(f, g):
    if f.is_zero() or g.is_zero():
        assert (f * g).is_zero()
        return
    order = default_order(XY)
    assert (f * g).total_degree() == f.total_degree() + g.total_degree()
    lf, cf = leading_term(f, order)
    lg, cg = leading_term(g, order)
    assert leading_term(f * g, order) == (lf + lg, cf * cg)


@settings(max_examples=100, deadline=None)
@given(poly, small, small, small)
def test_evaluation_is_homomorphism(f, a, b, c):
    pt = {"x": a, "y": b, "z": c}
    g = f * f + f
    assert g.evaluate(pt) == f.evaluate(pt) ** 2 + f.evaluate(pt)


def test_homogenize_dehomogenize_roundtrip():
    t = VariableTable(["x", "y", "h"], [1, 2, 1])
    x, y, h = (t.gen(v) for v in t.variables)
    f = x**3 + y + 1
    fh = homogenize(f)
    assert is_w_homogeneous(fh)
    assert fh == x**3 + y * h + h**3
    assert dehomogenize(fh) == f
