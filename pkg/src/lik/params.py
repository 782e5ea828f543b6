"""Exact coefficient ring: multivariate polynomials in declared scalar
parameters with Fraction coefficients.

With no parameters declared a coefficient degenerates to a plain rational.
No floating point anywhere.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Union

# A parameter monomial: ((name, exponent), ...) sorted by name, exponents > 0.
PMono = tuple[tuple[str, int], ...]

Scalar = Union[int, Fraction, "ParamCoeff"]

_ONE_PM: PMono = ()


def _pmono_mul(a: PMono, b: PMono) -> PMono:
    if not a:
        return b
    if not b:
        return a
    acc: dict[str, int] = dict(a)
    for name, e in b:
        acc[name] = acc.get(name, 0) + e
    return tuple(sorted((n, e) for n, e in acc.items() if e != 0))


def _pmono_degree(m: PMono) -> int:
    return sum(e for _, e in m)


def _pmono_key(m: PMono):
    # total degree descending, then lexicographic by (name, exponent desc)
    return (-_pmono_degree(m), tuple((n, -e) for n, e in m))


class ParamCoeff:
    """Polynomial in parameter symbols over exact rationals."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[PMono, Fraction]):
        self._terms = {m: c for m, c in terms.items() if c != 0}

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "ParamCoeff":
        return cls({})

    @classmethod
    def one(cls) -> "ParamCoeff":
        return cls({_ONE_PM: Fraction(1)})

    @classmethod
    def from_value(cls, value: Union[int, Fraction]) -> "ParamCoeff":
        return cls({_ONE_PM: Fraction(value)})

    @classmethod
    def param(cls, name: str) -> "ParamCoeff":
        return cls({((name, 1),): Fraction(1)})

    @staticmethod
    def coerce(value: Scalar) -> "ParamCoeff":
        if isinstance(value, ParamCoeff):
            return value
        return ParamCoeff.from_value(value)

    # -- inspection ----------------------------------------------------

    def items(self) -> list[tuple[PMono, Fraction]]:
        return sorted(self._terms.items(), key=lambda t: _pmono_key(t[0]))

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_rational(self) -> bool:
        return all(m == _ONE_PM for m in self._terms)

    def as_fraction(self) -> Fraction:
        if not self._terms:
            return Fraction(0)
        if not self.is_rational:
            raise ValueError(f"not a rational constant: {self.render()}")
        return self._terms[_ONE_PM]

    def parameters(self) -> set[str]:
        return {n for m in self._terms for n, _ in m}

    def degree_in(self, name: str) -> int:
        deg = 0
        for m in self._terms:
            for n, e in m:
                if n == name:
                    deg = max(deg, e)
        return deg

    def total_degree(self) -> int:
        if not self._terms:
            return 0
        return max(_pmono_degree(m) for m in self._terms)

    def is_unit_monomial(self) -> bool:
        """Single term c * prod(params): invertible once parameters are
        assumed nonzero."""
        return len(self._terms) == 1

    def leading(self) -> tuple[PMono, Fraction]:
        if not self._terms:
            return _ONE_PM, Fraction(0)
        m = min(self._terms, key=_pmono_key)
        return m, self._terms[m]

    def content(self) -> Fraction:
        """Positive rational content (gcd of coefficients), 0 for the zero
        polynomial."""
        if not self._terms:
            return Fraction(0)
        from math import gcd

        num = 0
        den = 1
        for c in self._terms.values():
            num = gcd(num, abs(c.numerator))
            den = den * c.denominator // gcd(den, c.denominator)
        return Fraction(num, den)

    def monomial_content(self) -> PMono:
        """Common parameter-monomial factor of every term."""
        common: dict[str, int] | None = None
        for m in self._terms:
            md = dict(m)
            if common is None:
                common = md
            else:
                common = {
                    n: min(e, md.get(n, 0)) for n, e in common.items() if n in md
                }
            if not common:
                return _ONE_PM
        if not common:
            return _ONE_PM
        return tuple(sorted((n, e) for n, e in common.items() if e > 0))

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other: Scalar) -> "ParamCoeff":
        other = ParamCoeff.coerce(other)
        acc = dict(self._terms)
        for m, c in other._terms.items():
            acc[m] = acc.get(m, Fraction(0)) + c
        return ParamCoeff(acc)

    __radd__ = __add__

    def __neg__(self) -> "ParamCoeff":
        return ParamCoeff({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: Scalar) -> "ParamCoeff":
        return self + (-ParamCoeff.coerce(other))

    def __rsub__(self, other: Scalar) -> "ParamCoeff":
        return ParamCoeff.coerce(other) + (-self)

    def __mul__(self, other: Scalar) -> "ParamCoeff":
        other = ParamCoeff.coerce(other)
        acc: dict[PMono, Fraction] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                m = _pmono_mul(ma, mb)
                acc[m] = acc.get(m, Fraction(0)) + ca * cb
        return ParamCoeff(acc)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "ParamCoeff":
        if k < 0:
            raise ValueError("negative powers of parameter polynomials")
        out = ParamCoeff.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, value: Union[int, Fraction]) -> "ParamCoeff":
        f = Fraction(value)
        return ParamCoeff({m: c * f for m, c in self._terms.items()})

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = ParamCoeff.from_value(other)
        if not isinstance(other, ParamCoeff):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(tuple(sorted(self._terms.items())))

    # -- structure -----------------------------------------------------

    def coeff_of(self, name: str, power: int) -> "ParamCoeff":
        """Coefficient of name**power, as a polynomial in the remaining
        parameters."""
        acc: dict[PMono, Fraction] = {}
        for m, c in self._terms.items():
            d = dict(m)
            if d.pop(name, 0) != power:
                continue
            rest = tuple(sorted(d.items()))
            acc[rest] = acc.get(rest, Fraction(0)) + c
        return ParamCoeff(acc)

    def substitute(self, assignment: Mapping[str, "ParamCoeff"]) -> "ParamCoeff":
        out = ParamCoeff.zero()
        for m, c in self._terms.items():
            piece = ParamCoeff.from_value(c)
            for n, e in m:
                if n in assignment:
                    piece = piece * assignment[n] ** e
                else:
                    piece = piece * ParamCoeff({((n, e),): Fraction(1)})
            out = out + piece
        return out

    def substitute_cleared(
        self, name: str, num: "ParamCoeff", den: "ParamCoeff", clear_to: int
    ) -> "ParamCoeff":
        """Substitute name := num/den and multiply by den**clear_to so the
        result stays polynomial; clear_to must be >= degree_in(name)."""
        out = ParamCoeff.zero()
        for m, c in self._terms.items():
            d = dict(m)
            k = d.pop(name, 0)
            rest = ParamCoeff({tuple(sorted(d.items())): c})
            out = out + rest * num**k * den ** (clear_to - k)
        return out

    # -- rendering -------------------------------------------------------

    def render(self) -> str:
        if not self._terms:
            return "0"
        pieces: list[str] = []
        for m, c in self.items():
            factors = [f"{n}^{e}" if e > 1 else n for n, e in m]
            mag = abs(c)
            if not factors:
                body = _render_fraction(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([_render_fraction(mag)] + factors)
            if not pieces:
                pieces.append(body if c > 0 else "-" + body)
            else:
                pieces.append(("+ " if c > 0 else "- ") + body)
        return " ".join(pieces)

    def __repr__(self) -> str:
        return f"ParamCoeff({self.render()})"


def _render_fraction(f: Fraction) -> str:
    if f.denominator == 1:
        return str(f.numerator)
    return f"({f.numerator}/{f.denominator})"

