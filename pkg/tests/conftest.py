from fractions import Fraction

import pytest
from hypothesis import settings

from lik.expr import LatticeMonomial, LatticePoly, VarRef
from lik.params import ParamCoeff
from lik.parser import parse_expression, parse_system
from lik.scaling import compute_weights

settings.register_profile("lik", deadline=None)
settings.load_profile("lik")

TODA = """\
u' = v[-1] - v[0]
v' = v[0]*(u[0] - u[1])
"""

PARAM_TODA = """\
params: a, b
u' = a*v[-1] - v[0]
v' = v[0]*(b*u[0] - u[1])
"""

BROKEN_TODA = """\
u' = 2*v[-1] - v[0]
v' = v[0]*(u[0] - u[1])
"""

VOLTERRA = "u' = u[0]*(u[1] - u[-1])\n"

UV = ("u", "v")


@pytest.fixture(scope="session")
def toda():
    return parse_system(TODA)


@pytest.fixture(scope="session")
def toda_w(toda):
    return compute_weights(toda)


@pytest.fixture(scope="session")
def param_toda():
    return parse_system(PARAM_TODA)


@pytest.fixture(scope="session")
def broken_toda():
    return parse_system(BROKEN_TODA)


@pytest.fixture(scope="session")
def volterra():
    return parse_system(VOLTERRA)


def P(text: str, params=()) -> LatticePoly:
    """Parse an expression over components u, v (test shorthand)."""
    return parse_expression(text, UV, params)


def M(text: str) -> LatticeMonomial:
    """Single monomial over u, v."""
    p = P(text)
    ((m, c),) = p.items()
    assert c == ParamCoeff.one()
    return m


# -- hypothesis strategies ---------------------------------------------------

import hypothesis.strategies as st  # noqa: E402


def var_refs(n_comp=2, max_shift=3):
    return st.builds(
        VarRef,
        st.integers(0, n_comp - 1),
        st.integers(-max_shift, max_shift),
    )


def monomials(n_comp=2, max_shift=3, max_exp=3, laurent=True, max_vars=3):
    lo = -max_exp if laurent else 1
    exps = st.integers(lo, max_exp).filter(bool)
    return st.lists(
        st.tuples(var_refs(n_comp, max_shift), exps),
        min_size=0,
        max_size=max_vars,
    ).map(LatticeMonomial)


def rationals():
    return st.fractions(
        min_value=Fraction(-5), max_value=Fraction(5), max_denominator=3
    ).filter(bool)


def polys(
    n_comp=2,
    max_shift=3,
    max_exp=3,
    laurent=True,
    max_terms=4,
    min_terms=0,
    max_vars=3,
):
    def build(pairs):
        acc = LatticePoly.zero()
        for m, c in pairs:
            acc = acc + LatticePoly.from_monomial(m, c)
        return acc

    return st.lists(
        st.tuples(
            monomials(n_comp, max_shift, max_exp, laurent, max_vars), rationals()
        ),
        min_size=min_terms,
        max_size=max_terms,
    ).map(build)


def nonzero_polys(**kw):
    return polys(min_terms=1, **kw).filter(lambda p: not p.is_zero)
