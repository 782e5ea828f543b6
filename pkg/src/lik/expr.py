"""Symbolic kernel: Laurent polynomials in shifted lattice variables.

A variable is a component of the dependent vector at a shifted site,
written u[k] for component ``u`` at site n+k.  Monomials map such
variables to nonzero integer exponents (negative exponents allowed, e.g.
1/v[0]).  Polynomials map monomials to exact coefficients that may be
polynomial in declared scalar parameters.

Everything here is immutable and pure; all arithmetic is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Mapping, NamedTuple, Sequence, Union

from .params import ParamCoeff, Scalar

if TYPE_CHECKING:  # pragma: no cover
    from .system import DdeSystem


class VarRef(NamedTuple):
    """Component index and signed lattice-shift offset of one variable."""

    comp: int
    shift: int


class LatticeMonomial:
    """Product of shifted variables with nonzero integer exponents.

    The empty product is the constant monomial 1.
    """

    __slots__ = ("_vars",)

    def __init__(self, pairs: Iterable[tuple[VarRef, int]] = ()):
        acc: dict[VarRef, int] = {}
        for x, e in pairs:
            acc[x] = acc.get(x, 0) + e
        self._vars = tuple(sorted((x, e) for x, e in acc.items() if e != 0))

    @classmethod
    def constant(cls) -> "LatticeMonomial":
        return cls(())

    @classmethod
    def var(cls, comp: int, shift: int = 0, exp: int = 1) -> "LatticeMonomial":
        return cls(((VarRef(comp, shift), exp),))

    # -- inspection ------------------------------------------------------

    @property
    def pairs(self) -> tuple[tuple[VarRef, int], ...]:
        return self._vars

    @property
    def is_constant(self) -> bool:
        return not self._vars

    def degree(self) -> int:
        return sum(e for _, e in self._vars)

    def exponent(self, x: VarRef) -> int:
        for y, e in self._vars:
            if y == x:
                return e
        return 0

    def var_refs(self) -> tuple[VarRef, ...]:
        return tuple(x for x, _ in self._vars)

    def components(self) -> set[int]:
        return {x.comp for x, _ in self._vars}

    # -- algebra ---------------------------------------------------------

    def __mul__(self, other: "LatticeMonomial") -> "LatticeMonomial":
        return LatticeMonomial(self._vars + other._vars)

    def __pow__(self, k: int) -> "LatticeMonomial":
        return LatticeMonomial(tuple((x, e * k) for x, e in self._vars))

    def shifted(self, r: int) -> "LatticeMonomial":
        if r == 0:
            return self
        return LatticeMonomial(
            tuple((VarRef(x.comp, x.shift + r), e) for x, e in self._vars)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LatticeMonomial):
            return NotImplemented
        return self._vars == other._vars

    def __hash__(self) -> int:
        return hash(self._vars)

    def __repr__(self) -> str:
        return f"LatticeMonomial({self._vars!r})"


def term_key(m: LatticeMonomial):
    """Deterministic total term order: total degree descending, then the
    variable sequence by (component, shift, exponent descending)."""
    return (-m.degree(), tuple((x.comp, x.shift, -e) for x, e in m.pairs))


class LatticePoly:
    """Finite sum of monomials with exact parameter-polynomial coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[LatticeMonomial, ParamCoeff]):
        self._terms = {m: c for m, c in terms.items() if not c.is_zero}

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "LatticePoly":
        return cls({})

    @classmethod
    def const(cls, value: Scalar) -> "LatticePoly":
        return cls({LatticeMonomial.constant(): ParamCoeff.coerce(value)})

    @classmethod
    def var(cls, comp: int, shift: int = 0, exp: int = 1) -> "LatticePoly":
        return cls({LatticeMonomial.var(comp, shift, exp): ParamCoeff.one()})

    @classmethod
    def from_monomial(
        cls, m: LatticeMonomial, c: Scalar = 1
    ) -> "LatticePoly":
        return cls({m: ParamCoeff.coerce(c)})

    # -- inspection ----------------------------------------------------------

    def items(self) -> list[tuple[LatticeMonomial, ParamCoeff]]:
        return sorted(self._terms.items(), key=lambda t: term_key(t[0]))

    def monomials(self) -> list[LatticeMonomial]:
        return [m for m, _ in self.items()]

    def coeff(self, m: LatticeMonomial) -> ParamCoeff:
        return self._terms.get(m, ParamCoeff.zero())

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def leading(self) -> tuple[LatticeMonomial, ParamCoeff]:
        if not self._terms:
            return LatticeMonomial.constant(), ParamCoeff.zero()
        m = min(self._terms, key=term_key)
        return m, self._terms[m]

    def var_refs(self) -> list[VarRef]:
        seen: set[VarRef] = set()
        for m in self._terms:
            seen.update(m.var_refs())
        return sorted(seen)

    def components(self) -> set[int]:
        return {x.comp for x in self.var_refs()}

    def parameters(self) -> set[str]:
        out: set[str] = set()
        for c in self._terms.values():
            out |= c.parameters()
        return out

    def has_negative_exponent(self) -> bool:
        return any(e < 0 for m in self._terms for _, e in m.pairs)

    def sort_key(self):
        return tuple(
            (term_key(m), tuple(sorted(c._terms.items())))
            for m, c in self.items()
        )

    # -- arithmetic ------------------------------------------------------------

    def __add__(self, other: Union["LatticePoly", Scalar]) -> "LatticePoly":
        other = _coerce_poly(other)
        acc = dict(self._terms)
        for m, c in other._terms.items():
            acc[m] = acc.get(m, ParamCoeff.zero()) + c
        return LatticePoly(acc)

    __radd__ = __add__

    def __neg__(self) -> "LatticePoly":
        return LatticePoly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: Union["LatticePoly", Scalar]) -> "LatticePoly":
        return self + (-_coerce_poly(other))

    def __rsub__(self, other: Union["LatticePoly", Scalar]) -> "LatticePoly":
        return _coerce_poly(other) + (-self)

    def __mul__(self, other: Union["LatticePoly", Scalar]) -> "LatticePoly":
        if isinstance(other, (int, Fraction, ParamCoeff)):
            k = ParamCoeff.coerce(other)
            return LatticePoly({m: c * k for m, c in self._terms.items()})
        acc: dict[LatticeMonomial, ParamCoeff] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                m = ma * mb
                prod = ca * cb
                acc[m] = acc.get(m, ParamCoeff.zero()) + prod
        return LatticePoly(acc)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "LatticePoly":
        if k < 0:
            if len(self._terms) != 1:
                raise ValueError("negative power of a multi-term polynomial")
            ((m, c),) = self._terms.items()
            if not c.is_rational:
                raise ValueError("cannot invert a parametric coefficient")
            f = c.as_fraction()
            return LatticePoly({m**k: ParamCoeff.from_value(Fraction(1) / f ** (-k))})
        out = LatticePoly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = LatticePoly.const(other)
        if not isinstance(other, LatticePoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(tuple((m, c) for m, c in self.items()))

    def __repr__(self) -> str:
        return f"LatticePoly<{len(self._terms)} terms>"

    # -- structural operations -------------------------------------------------

    def shifted(self, r: int) -> "LatticePoly":
        if r == 0:
            return self
        return LatticePoly({m.shifted(r): c for m, c in self._terms.items()})

    def compose(self, mapping: Mapping[VarRef, "LatticePoly"]) -> "LatticePoly":
        """Substitute whole polynomials for variables (missing variables map
        to themselves)."""
        out = LatticePoly.zero()
        for m, c in self._terms.items():
            piece = LatticePoly.const(c)
            for x, e in m.pairs:
                if x in mapping:
                    piece = piece * mapping[x] ** e
                else:
                    piece = piece * LatticePoly.var(x.comp, x.shift, e)
            out = out + piece
        return out

    def param_coefficient(self, name: str, power: int) -> "LatticePoly":
        """Extract the coefficient of name**power across every term."""
        return LatticePoly(
            {m: c.coeff_of(name, power) for m, c in self._terms.items()}
        )

    def substitute_params(
        self, assignment: Mapping[str, ParamCoeff]
    ) -> "LatticePoly":
        return LatticePoly(
            {m: c.substitute(assignment) for m, c in self._terms.items()}
        )


def _coerce_poly(value: Union[LatticePoly, Scalar]) -> LatticePoly:
    if isinstance(value, LatticePoly):
        return value
    return LatticePoly.const(value)


# -- calculus -------------------------------------------------------------------


def shift(p: LatticePoly, r: int) -> LatticePoly:
    """Apply the shift operator D**r to every variable of p."""
    return p.shifted(r)


def partial(p: LatticePoly, x: VarRef) -> LatticePoly:
    """Formal partial derivative with the Laurent power rule."""
    acc: dict[LatticeMonomial, ParamCoeff] = {}
    for m, c in p._terms.items():
        e = m.exponent(x)
        if e == 0:
            continue
        rest = LatticeMonomial(m.pairs + ((x, -1),))
        acc[rest] = acc.get(rest, ParamCoeff.zero()) + c.scale(e)
    return LatticePoly(acc)


def dir_derivative(p: LatticePoly, directions: Sequence[LatticePoly]) -> LatticePoly:
    """Derivative of p along component directions: sum over variables x=(i,k)
    of (dp/dx) * D**k(directions[i])."""
    out = LatticePoly.zero()
    for x in p.var_refs():
        out = out + partial(p, x) * directions[x.comp].shifted(x.shift)
    return out


def total_time_derivative(p: LatticePoly, sys: "DdeSystem") -> LatticePoly:
    """Total t-derivative of p on solutions of the evolution system."""
    return dir_derivative(p, sys.rhs)


# -- shift-equivalence canonical forms ---------------------------------------


def canonical_offset(m: LatticeMonomial) -> int:
    """Offset r such that m == canonical_rep(m).shifted(r).

    The canonical representative places the lowest-indexed component present
    at zero shift (its minimal occurrence).
    """
    if m.is_constant:
        return 0
    low = min(m.components())
    return min(x.shift for x in m.var_refs() if x.comp == low)


def canonical_rep(m: LatticeMonomial) -> LatticeMonomial:
    """Unique shift-equivalence representative of m."""
    return m.shifted(-canonical_offset(m))


def delta_decompose(p: LatticePoly) -> tuple[LatticePoly, LatticePoly]:
    """Split p = canonical + (D - I) J.

    Every monomial is replaced by its canonical representative; the
    telescoping corrections accumulate in J.  Constants stay in the
    canonical part (a nonzero constant is not a forward difference of any
    autonomous expression).  Linear in p.
    """
    canonical: dict[LatticeMonomial, ParamCoeff] = {}
    j_terms: dict[LatticeMonomial, ParamCoeff] = {}

    def bump(store: dict[LatticeMonomial, ParamCoeff], m: LatticeMonomial, c: ParamCoeff):
        store[m] = store.get(m, ParamCoeff.zero()) + c

    for m, c in p._terms.items():
        r = canonical_offset(m)
        rep = m.shifted(-r)
        bump(canonical, rep, c)
        if r > 0:
            # D^r rep = rep + (D - I)(rep + D rep + ... + D^(r-1) rep)
            for j in range(r):
                bump(j_terms, rep.shifted(j), c)
        elif r < 0:
            # D^r rep = rep - (D - I)(D^r rep + ... + D^-1 rep)
            for j in range(r, 0):
                bump(j_terms, rep.shifted(j), -c)
    return LatticePoly(canonical), LatticePoly(j_terms)


@dataclass(frozen=True)
class NotExact:
    """Outcome of antidifference when p is not a forward difference: the
    canonical obstruction plus the exact part J with p = canonical + (D-I)J."""

    canonical: LatticePoly
    exact_part: LatticePoly


def antidifference(p: LatticePoly) -> Union[LatticePoly, NotExact]:
    """Invert the forward difference: return q with (D - I) q = p, or a
    NotExact signal carrying both decomposition parts."""
    canonical, j = delta_decompose(p)
    if canonical.is_zero:
        return j
    return NotExact(canonical, j)


# -- rendering ------------------------------------------------------------------


def render_monomial(m: LatticeMonomial, names: Sequence[str]) -> str:
    if m.is_constant:
        return "1"
    factors = []
    for x, e in m.pairs:
        base = f"{names[x.comp]}[{x.shift}]"
        factors.append(base if e == 1 else f"{base}^{e}")
    return "*".join(factors)


def _coeff_prefix(c: ParamCoeff) -> tuple[str, str]:
    """(sign, factor-string) for a coefficient; empty factor means 1."""
    if c.is_rational:
        f = c.as_fraction()
        sign = "-" if f < 0 else "+"
        mag = abs(f)
        if mag == 1:
            return sign, ""
        if mag.denominator == 1:
            return sign, str(mag.numerator)
        return sign, f"({mag.numerator}/{mag.denominator})"
    items = c.items()
    if len(items) == 1:
        m, f = items[0]
        sign = "-" if f < 0 else "+"
        body = ParamCoeff({m: abs(f)}).render()
        return sign, body if body != "1" else ""
    return "+", f"({c.render()})"


def render_poly(p: LatticePoly, names: Sequence[str]) -> str:
    """Deterministic plain-text form; parses back to exactly p."""
    if p.is_zero:
        return "0"
    pieces: list[str] = []
    for m, c in p.items():
        sign, factor = _coeff_prefix(c)
        mono = render_monomial(m, names)
        if m.is_constant:
            body = factor if factor else "1"
        elif factor:
            body = f"{factor}*{mono}"
        else:
            body = mono
        if not pieces:
            pieces.append(body if sign == "+" else "-" + body)
        else:
            pieces.append(("+ " if sign == "+" else "- ") + body)
    return " ".join(pieces)
