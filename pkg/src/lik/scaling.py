"""Dilation weights, ranks, and rank-targeted monomial generation.

Requiring every equation of the system to be uniform in rank (with the
time derivative carrying weight 1) gives a small linear system for the
component weights.  Weighted monomial enumeration plus t-derivative
completion then produces the building blocks for density and symmetry
candidates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .expr import (
    LatticeMonomial,
    LatticePoly,
    VarRef,
    canonical_rep,
    term_key,
    total_time_derivative,
)
from .system import DdeSystem


class ScalingError(ValueError):
    """System is not dilation invariant (no positive rational weights)."""


@dataclass(frozen=True)
class WeightVector:
    """One rational weight per component; the time derivative has weight 1."""

    weights: tuple[Fraction, ...]

    def __getitem__(self, i: int) -> Fraction:
        return self.weights[i]

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class WeightFamily:
    """Underdetermined outcome: an affine family particular + span(directions).

    free_components lists indices whose weight is not pinned by the balance
    equations; a caller-supplied normalization resolves the family.
    """

    particular: tuple[Fraction, ...]
    directions: tuple[tuple[Fraction, ...], ...]
    free_components: tuple[int, ...]


def rank_of(m: LatticeMonomial, w: WeightVector) -> Fraction:
    """Total weight of a monomial; shift offsets are irrelevant."""
    total = Fraction(0)
    for x, e in m.pairs:
        total += e * w[x.comp]
    return total


def _balance_rows(sys: DdeSystem) -> list[tuple[tuple[Fraction, ...], Fraction]]:
    """Rows (a, b) meaning a . w = b: the lhs monomial of equation i has
    weight w_i + 1 and every rhs monomial must match it."""
    n = sys.n
    rows: list[tuple[tuple[Fraction, ...], Fraction]] = []
    seen: set[tuple[tuple[Fraction, ...], Fraction]] = set()
    for i, f in enumerate(sys.rhs):
        for m in f.monomials():
            coeffs = [Fraction(0)] * n
            for x, e in m.pairs:
                coeffs[x.comp] += e
            coeffs[i] -= 1
            row = (tuple(coeffs), Fraction(1))
            if row not in seen:
                seen.add(row)
                rows.append(row)
    return rows


def compute_weights(
    sys: DdeSystem, pins: dict[int, Fraction] | None = None
) -> WeightVector | WeightFamily:
    """Solve the rank-uniformity balance equations over the rationals.

    Parameters are weightless constants.  Returns a WeightVector when the
    solution is unique (and positive), a WeightFamily when a free scale
    remains, and raises ScalingError when no positive solution exists.
    """
    n = sys.n
    rows = _balance_rows(sys)
    all_pins = dict(sys.weight_pins)
    if pins:
        all_pins.update(pins)
    for i, val in sorted(all_pins.items()):
        coeffs = [Fraction(0)] * n
        coeffs[i] = Fraction(1)
        rows.append((tuple(coeffs), Fraction(val)))

    # Gaussian elimination on the augmented matrix, exact rationals.
    aug = [list(a) + [b] for a, b in rows]
    pivot_of_col: dict[int, int] = {}
    r = 0
    for c in range(n):
        pr = next((k for k in range(r, len(aug)) if aug[k][c] != 0), None)
        if pr is None:
            continue
        aug[r], aug[pr] = aug[pr], aug[r]
        piv = aug[r][c]
        aug[r] = [v / piv for v in aug[r]]
        for k in range(len(aug)):
            if k != r and aug[k][c] != 0:
                fac = aug[k][c]
                aug[k] = [vk - fac * vr for vk, vr in zip(aug[k], aug[r])]
        pivot_of_col[c] = r
        r += 1
    for k in range(r, len(aug)):
        if aug[k][n] != 0:
            raise ScalingError(
                "system is not dilation invariant: rank balance equations "
                "are inconsistent"
            )

    free = [c for c in range(n) if c not in pivot_of_col]
    particular = [Fraction(0)] * n
    for c, pr in pivot_of_col.items():
        particular[c] = aug[pr][n]
    if free:
        directions = []
        for fc in free:
            d = [Fraction(0)] * n
            d[fc] = Fraction(1)
            for c, pr in pivot_of_col.items():
                d[c] = -aug[pr][fc]
            directions.append(tuple(d))
        return WeightFamily(tuple(particular), tuple(directions), tuple(free))

    if any(v <= 0 for v in particular):
        raise ScalingError(
            "system is not dilation invariant: no positive rational weights "
            f"(solution was {tuple(str(v) for v in particular)})"
        )
    return WeightVector(tuple(particular))


def equation_ranks(sys: DdeSystem, w: WeightVector) -> list[Fraction]:
    """Rank of each equation; raises if any equation fails uniformity."""
    out = []
    for i, f in enumerate(sys.rhs):
        target = w[i] + 1
        for m in f.monomials():
            if rank_of(m, w) != target:
                raise ScalingError(
                    f"equation {sys.names[i]} is not uniform in rank"
                )
        out.append(target)
    return out


def monomials_upto_rank(
    w: WeightVector, max_rank: Fraction
) -> tuple[LatticeMonomial, ...]:
    """All zero-shift monomials with nonnegative exponents and rank in
    (0, max_rank], in the deterministic term order."""
    max_rank = Fraction(max_rank)
    if max_rank <= 0:
        raise ValueError("rank bound must be positive")
    if any(v <= 0 for v in w.weights):
        raise ValueError("monomial enumeration needs strictly positive weights")

    out: list[LatticeMonomial] = []

    def extend(comp: int, pairs: tuple, budget: Fraction):
        if comp == len(w):
            if pairs:
                out.append(LatticeMonomial(pairs))
            return
        e = 0
        while e * w[comp] <= budget:
            new_pairs = pairs + ((VarRef(comp, 0), e),) if e else pairs
            extend(comp + 1, new_pairs, budget - e * w[comp])
            e += 1

    extend(0, (), max_rank)
    return tuple(sorted(out, key=term_key))


def derivative_completion(
    ms: Iterable[LatticeMonomial],
    w: WeightVector,
    target: Fraction,
    sys: DdeSystem,
    canonicalize: bool = True,
) -> tuple[LatticeMonomial, ...]:
    """Raise each monomial to the target rank with t-derivatives and collect
    the monomials that appear.

    A monomial of rank target - d contributes the monomials of its d-th
    t-derivative (d must be a nonnegative integer; other deficits drop).
    With canonicalize=True each collected monomial is replaced by its
    shift-equivalence representative and duplicates merge.
    """
    target = Fraction(target)
    collected: set[LatticeMonomial] = set()
    for m in ms:
        deficit = target - rank_of(m, w)
        if deficit < 0 or deficit.denominator != 1:
            continue
        p = LatticePoly.from_monomial(m)
        for _ in range(int(deficit)):
            p = total_time_derivative(p, sys)
        for mono in p.monomials():
            collected.add(canonical_rep(mono) if canonicalize else mono)
    return tuple(sorted(collected, key=term_key))


def building_blocks(
    sys: DdeSystem, w: WeightVector, target: Fraction, canonicalize: bool
) -> tuple[LatticeMonomial, ...]:
    """Candidate blocks of exactly the target rank: enumerate up to the
    rank, then complete with t-derivatives."""
    pool = monomials_upto_rank(w, Fraction(target))
    return derivative_completion(pool, w, Fraction(target), sys, canonicalize)


def achievable_ranks(w: WeightVector, max_rank: Fraction) -> list[Fraction]:
    """Distinct positive ranks realized by zero-shift monomials up to the
    bound, ascending."""
    ranks = {rank_of(m, w) for m in monomials_upto_rank(w, Fraction(max_rank))}
    return sorted(ranks)
