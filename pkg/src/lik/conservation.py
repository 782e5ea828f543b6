"""Polynomial conserved densities and fluxes.

A density rho of a chosen rank is sought as a linear combination of
shift-canonical building blocks.  Its time derivative on solutions splits
into a canonical part plus a forward difference; requiring the canonical
part to vanish coefficient-wise gives the linear system for the unknown
coefficients, and the difference part supplies the flux:

    Dt(rho) = (D - I) Jdec   on solutions,  so  Dt(rho) + (D - I)(-Jdec) = 0.

The stored flux is -Jdec, which satisfies the conservation identity
exactly; it coincides with the flux obtained by accumulating telescoping
corrections with the opposite sign convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .expr import (
    LatticeMonomial,
    LatticePoly,
    delta_decompose,
    total_time_derivative,
)
from .linalg import (
    Branch,
    LinearSystem,
    fresh_tags,
    normalize_basis_vector,
    nullspace,
    parametric_solve,
)
from .params import ParamCoeff
from .scaling import WeightVector, building_blocks
from .system import DdeSystem


@dataclass(frozen=True)
class DensityCandidate:
    rank: Fraction
    blocks: tuple[LatticeMonomial, ...]
    unknowns: tuple[str, ...]

    @property
    def poly(self) -> LatticePoly:
        """The candidate as one polynomial with unknown-tag coefficients."""
        acc = LatticePoly.zero()
        for tag, m in zip(self.unknowns, self.blocks):
            acc = acc + LatticePoly.from_monomial(m, ParamCoeff.param(tag))
        return acc


@dataclass(frozen=True)
class DensityResult:
    rank: Fraction
    density: LatticePoly
    flux: LatticePoly
    flux_decomposition: LatticePoly
    normalization: str
    eq_conditions: tuple[ParamCoeff, ...] = ()
    neq_conditions: tuple[ParamCoeff, ...] = ()


def build_density_candidate(
    sys: DdeSystem, w: WeightVector, rank: Fraction
) -> DensityCandidate:
    """Linear combination of the rank-complete canonical blocks."""
    rank = Fraction(rank)
    blocks = building_blocks(sys, w, rank, canonicalize=True)
    if not blocks:
        raise ValueError(f"no density candidate at rank {rank}")
    tags = fresh_tags(len(blocks), sys.params)
    return DensityCandidate(rank, blocks, tags)


def _pure_power_normalization(
    vec: dict[str, ParamCoeff], cand: DensityCandidate
) -> tuple[dict[str, ParamCoeff], str]:
    """Scale so the first pure-power block x^k has coefficient 1/k, else the
    leading block has coefficient 1."""
    for tag, m in zip(cand.unknowns, cand.blocks):
        pairs = m.pairs
        if len(pairs) == 1 and pairs[0][0].shift == 0 and tag in vec:
            c = vec[tag]
            if c.is_rational and c.as_fraction() != 0:
                k = pairs[0][1]
                return (
                    normalize_basis_vector(vec, tag, Fraction(1, k)),
                    f"coefficient of pure power set to 1/{k}",
                )
    for tag in cand.unknowns:
        c = vec.get(tag)
        if c is not None and c.is_rational and c.as_fraction() != 0:
            return (
                normalize_basis_vector(vec, tag, Fraction(1)),
                "leading coefficient set to 1",
            )
    return vec, "unnormalized (parametric leading coefficient)"


def solve_density(
    cand: DensityCandidate,
    sys: DdeSystem,
    max_depth: int = 6,
) -> tuple[list[DensityResult], list[Branch]]:
    """Determine the unknown coefficients; one result per nullspace basis
    vector on each branch with solutions.  Returns (results, branches)."""
    e = total_time_derivative(cand.poly, sys)
    canonical, j_dec = delta_decompose(e)
    system = LinearSystem.from_poly_coeffs(
        cand.unknowns, (c for _, c in canonical.items())
    )
    if not system.parameters:
        branches = [Branch((), (), nullspace(system))]
    else:
        branches = parametric_solve(system, max_depth)

    results: list[DensityResult] = []
    for br in branches:
        if br.outcome is None:
            continue
        for vec in br.outcome.basis:
            vec2, note = _pure_power_normalization(vec, cand)
            assignment = {t: vec2.get(t, ParamCoeff.zero()) for t in cand.unknowns}
            rho = cand.poly.substitute_params(assignment)
            jd = j_dec.substitute_params(assignment)
            if rho.is_zero:
                continue
            results.append(
                DensityResult(
                    rank=cand.rank,
                    density=rho,
                    flux=-jd,
                    flux_decomposition=-jd,
                    normalization=note,
                    eq_conditions=br.eq_conditions,
                    neq_conditions=br.neq_conditions,
                )
            )
    return _drop_equivalent(results), branches


def _drop_equivalent(results: list[DensityResult]) -> list[DensityResult]:
    kept: list[DensityResult] = []
    for r in results:
        if any(
            r2.eq_conditions == r.eq_conditions
            and equivalent(r.density, r2.density) is not None
            for r2 in kept
        ):
            continue
        kept.append(r)
    return kept


def is_trivial(rho: LatticePoly) -> bool:
    """True iff rho is a forward difference of some polynomial."""
    canonical, _ = delta_decompose(rho)
    return canonical.is_zero


def equivalent(rho1: LatticePoly, rho2: LatticePoly) -> Fraction | None:
    """Nonzero rational k with rho1 + k*rho2 a forward difference, else None.

    Both densities trivial counts as equivalent with k = -1.
    """
    c1, _ = delta_decompose(rho1)
    c2, _ = delta_decompose(rho2)
    if c1.is_zero and c2.is_zero:
        return Fraction(-1)
    if c1.is_zero or c2.is_zero:
        return None
    m1, a1 = c1.leading()
    a2 = c2.coeff(m1)
    if not (a1.is_rational and a2.is_rational):
        return None
    if a2.as_fraction() == 0:
        return None
    k = -a1.as_fraction() / a2.as_fraction()
    if (c1 + c2 * k).is_zero and k != 0:
        return k
    return None


def conservation_residual(
    rho: LatticePoly, flux: LatticePoly, sys: DdeSystem
) -> LatticePoly:
    """Dt(rho) + (D - I) flux; identically zero for a conservation law."""
    return total_time_derivative(rho, sys) + flux.shifted(1) - flux
