"""Generalized symmetries and Fréchet derivatives.

A vector function G is a symmetry when Dt G = F'(u)[G] holds on
solutions, F' being the linearization of the right-hand side.  Candidate
components are linear combinations of rank-exact building blocks kept in
full shifted form (unlike densities, symmetry blocks are not reduced to
shift-equivalence representatives: distinct shifts of the same monomial
are independent directions).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .expr import (
    LatticeMonomial,
    LatticePoly,
    partial,
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
from .operators import DiffOperator, LocalOpTerm, OpEntry
from .params import ParamCoeff
from .scaling import WeightVector, building_blocks, rank_of
from .system import DdeSystem


def frechet_apply(
    f: Sequence[LatticePoly], g: Sequence[LatticePoly]
) -> list[LatticePoly]:
    """Directional derivative of f along g: the first-order coefficient of
    f evaluated at u + eps*g."""
    out = []
    for fi in f:
        acc = LatticePoly.zero()
        for x in fi.var_refs():
            acc = acc + partial(fi, x) * g[x.comp].shifted(x.shift)
        out.append(acc)
    return out


def frechet_operator(f: Sequence[LatticePoly]) -> DiffOperator:
    """Linearization of f as a matrix of local shift-operator terms."""
    n = len(f)
    entries = []
    for i in range(n):
        row = []
        refs = f[i].var_refs()
        for j in range(n):
            terms = [
                LocalOpTerm(partial(f[i], x), x.shift)
                for x in refs
                if x.comp == j
            ]
            row.append(OpEntry(terms))
        entries.append(row)
    return DiffOperator(entries)


@dataclass(frozen=True)
class SymmetryCandidate:
    ranks: tuple[Fraction, ...]
    blocks: tuple[tuple[LatticeMonomial, ...], ...]  # per component
    unknowns: tuple[str, ...]  # flat, numbered across components

    def component_tags(self, i: int) -> tuple[str, ...]:
        start = sum(len(b) for b in self.blocks[:i])
        return self.unknowns[start : start + len(self.blocks[i])]

    @property
    def components(self) -> tuple[LatticePoly, ...]:
        out = []
        for i, blocks in enumerate(self.blocks):
            acc = LatticePoly.zero()
            for tag, m in zip(self.component_tags(i), blocks):
                acc = acc + LatticePoly.from_monomial(m, ParamCoeff.param(tag))
            out.append(acc)
        return tuple(out)


@dataclass(frozen=True)
class SymmetryResult:
    ranks: tuple[Fraction, ...]
    components: tuple[LatticePoly, ...]
    eq_conditions: tuple[ParamCoeff, ...] = ()
    neq_conditions: tuple[ParamCoeff, ...] = ()


def build_symmetry_candidate(
    sys: DdeSystem, w: WeightVector, ranks: Sequence[Fraction]
) -> SymmetryCandidate:
    """One rank-exact block list per component, all shifts kept."""
    if len(ranks) != sys.n:
        raise ValueError("one target rank per component required")
    ranks = tuple(Fraction(r) for r in ranks)
    blocks = tuple(
        building_blocks(sys, w, r, canonicalize=False) for r in ranks
    )
    if any(not b for b in blocks):
        raise ValueError(f"no symmetry candidate at ranks {ranks}")
    tags = fresh_tags(sum(len(b) for b in blocks), sys.params)
    return SymmetryCandidate(ranks, blocks, tags)


def symmetry_residual(
    g: Sequence[LatticePoly], sys: DdeSystem
) -> list[LatticePoly]:
    """Dt G - F'[G] with time derivatives eliminated on solutions."""
    fr = frechet_apply(sys.rhs, g)
    return [
        total_time_derivative(gi, sys) - fi for gi, fi in zip(g, fr)
    ]


def solve_symmetry(
    cand: SymmetryCandidate,
    sys: DdeSystem,
    w: WeightVector,
    normalize_tag: str | None = None,
    max_depth: int = 6,
) -> tuple[list[SymmetryResult], list[Branch]]:
    """Impose the defining identity monomial-wise and solve.

    Each returned symmetry is scaled so the designated unknown (default:
    the last one, in deterministic order, with a nonzero value) equals 1.
    """
    residual = symmetry_residual(cand.components, sys)
    coeffs = [c for ri in residual for _, c in ri.items()]
    system = LinearSystem.from_poly_coeffs(cand.unknowns, coeffs)
    if not system.parameters:
        branches = [Branch((), (), nullspace(system))]
    else:
        branches = parametric_solve(system, max_depth)

    results: list[SymmetryResult] = []
    for br in branches:
        if br.outcome is None:
            continue
        for vec in br.outcome.basis:
            vec2 = _normalize(vec, cand, normalize_tag)
            assignment = {
                t: vec2.get(t, ParamCoeff.zero()) for t in cand.unknowns
            }
            comps = tuple(
                c.substitute_params(assignment) for c in cand.components
            )
            if all(c.is_zero for c in comps):
                continue
            if not _rank_uniform(comps, cand.ranks, w):
                continue
            results.append(
                SymmetryResult(
                    cand.ranks, comps, br.eq_conditions, br.neq_conditions
                )
            )
    return results, branches


def _normalize(
    vec: dict[str, ParamCoeff],
    cand: SymmetryCandidate,
    normalize_tag: str | None,
) -> dict[str, ParamCoeff]:
    order = [normalize_tag] if normalize_tag else list(reversed(cand.unknowns))
    for tag in order:
        if tag is None:
            continue
        c = vec.get(tag)
        if c is not None and c.is_rational and c.as_fraction() != 0:
            return normalize_basis_vector(vec, tag, Fraction(1))
    return vec


def _rank_uniform(
    comps: tuple[LatticePoly, ...],
    ranks: tuple[Fraction, ...],
    w: WeightVector,
) -> bool:
    for c, r in zip(comps, ranks):
        for m in c.monomials():
            if rank_of(m, w) != r:
                return False
    return True


def level_ranks(
    sys: DdeSystem, w: WeightVector, level: int, gap: int = 1
) -> tuple[Fraction, ...]:
    """Rank vector of the level-th symmetry in the hierarchy: each
    component weight raised by level steps of the gap size."""
    return tuple(wi + level * gap for wi in w.weights)

