from fractions import Fraction

import pytest

from lik.linalg import (
    LinearSolveError,
    LinearSystem,
    evaluate_row,
    fresh_tags,
    normalize_basis_vector,
    nullspace,
    parametric_solve,
)
from lik.params import ParamCoeff


def R(v) -> ParamCoeff:
    return ParamCoeff.from_value(Fraction(v))


def rows_from(entries, unknowns):
    return LinearSystem.build(
        unknowns,
        [
            {t: R(c) for t, c in row.items()}
            for row in entries
        ],
    )


class TestNullspace:
    def test_density_rank3_system(self):
        # 3c1 - c2 = 0, c3 - 3c1 = 0, c2 - c3 = 0
        sys = rows_from(
            [{"c1": 3, "c2": -1}, {"c3": 1, "c1": -3}, {"c2": 1, "c3": -1}],
            ("c1", "c2", "c3"),
        )
        out = nullspace(sys)
        assert out.dimension == 1
        vec = normalize_basis_vector(out.basis[0], "c1", Fraction(1, 3))
        assert {t: c.as_fraction() for t, c in vec.items()} == {
            "c1": Fraction(1, 3),
            "c2": Fraction(1),
            "c3": Fraction(1),
        }

    def test_identity_system_empty_basis(self):
        sys = rows_from([{"c1": 1}, {"c2": 1}], ("c1", "c2"))
        assert nullspace(sys).dimension == 0

    def test_exactness(self):
        sys = rows_from(
            [
                {"c1": 2, "c2": 3, "c3": -1},
                {"c1": 1, "c2": -1, "c4": 5},
            ],
            ("c1", "c2", "c3", "c4"),
        )
        out = nullspace(sys)
        assert out.dimension == 2
        for vec in out.basis:
            for row in sys.rows:
                assert evaluate_row(row, sys.unknowns, vec).is_zero

    def test_rejects_parametric_entries(self):
        sys = LinearSystem.build(
            ("c1",), [{"c1": ParamCoeff.param("a") + 1}]
        )
        with pytest.raises(LinearSolveError):
            nullspace(sys)


class TestFromPolyCoeffs:
    def test_extracts_linear_rows(self):
        c1 = ParamCoeff.param("c1")
        c2 = ParamCoeff.param("c2")
        a = ParamCoeff.param("a")
        sys = LinearSystem.from_poly_coeffs(
            ("c1", "c2"), [c1 * 3 - c2 * a, c2 * (a - 1)]
        )
        assert len(sys.rows) == 2
        assert sys.parameters == {"a"}

    def test_rejects_nonlinear(self):
        c1 = ParamCoeff.param("c1")
        with pytest.raises(LinearSolveError):
            LinearSystem.from_poly_coeffs(("c1",), [c1 * c1])


class TestParametricSolve:
    def test_single_condition(self):
        # (a - 1) * c1 = 0 splits into a generic empty branch and a = 1
        a = ParamCoeff.param("a")
        c1 = ParamCoeff.param("c1")
        sys = LinearSystem.from_poly_coeffs(("c1",), [(a - 1) * c1])
        branches = parametric_solve(sys)
        by_conds = {
            tuple(c.render() for c in b.eq_conditions): b for b in branches
        }
        generic = by_conds[()]
        assert generic.outcome is not None and generic.outcome.dimension == 0
        special = by_conds[("a - 1",)]
        assert special.outcome is not None and special.outcome.dimension == 1

    def test_no_parameters_single_branch(self):
        sys = rows_from([{"c1": 1, "c2": -1}], ("c1", "c2"))
        branches = parametric_solve(sys)
        assert len(branches) == 1
        assert branches[0].eq_conditions == ()
        assert branches[0].outcome.dimension == 1

    def test_nonzero_parameter_assumption(self):
        # a * c1 = 0 with a a declared nonzero parameter: no case split
        a = ParamCoeff.param("a")
        c1 = ParamCoeff.param("c1")
        sys = LinearSystem.from_poly_coeffs(("c1",), [a * c1])
        branches = parametric_solve(sys)
        assert len(branches) == 1
        assert branches[0].outcome.dimension == 0

    def test_branch_soundness_by_substitution(self):
        # c1*(a-2) + c2 = 0 and c2*(b-3) = 0
        a, b = ParamCoeff.param("a"), ParamCoeff.param("b")
        c1, c2 = ParamCoeff.param("c1"), ParamCoeff.param("c2")
        coeffs = [c1 * (a - 2) + c2, c2 * (b - 3)]
        sys = LinearSystem.from_poly_coeffs(("c1", "c2"), coeffs)
        samples = {
            (): {"a": R(7), "b": R(11)},
            ("a - 2",): {"a": R(2), "b": R(5)},
            ("b - 3",): {"a": R(9), "b": R(3)},
            ("a - 2", "b - 3"): {"a": R(2), "b": R(3)},
        }
        for br in parametric_solve(sys):
            if br.outcome is None:
                continue
            key = tuple(c.render() for c in br.eq_conditions)
            values = samples.get(key)
            if values is None:
                continue
            for vec in br.outcome.basis:
                for row in sys.rows:
                    resid = evaluate_row(row, sys.unknowns, vec)
                    assert resid.substitute(values).is_zero

    def test_nonlinear_pivot_via_cleared_substitution(self):
        # (a*b - 1)*c1 = 0: solvable because parameters are nonzero
        a, b = ParamCoeff.param("a"), ParamCoeff.param("b")
        c1 = ParamCoeff.param("c1")
        sys = LinearSystem.from_poly_coeffs(("c1",), [(a * b - 1) * c1])
        branches = parametric_solve(sys)
        dims = {
            tuple(c.render() for c in b2.eq_conditions): b2.outcome.dimension
            for b2 in branches
            if b2.outcome
        }
        assert dims[()] == 0
        assert dims[("a*b - 1",)] == 1

    def test_determinism(self):
        a, b = ParamCoeff.param("a"), ParamCoeff.param("b")
        c1, c2 = ParamCoeff.param("c1"), ParamCoeff.param("c2")
        coeffs = [c1 * (a - 1) + c2 * (b - 1), c2 * (a + b)]
        sys = LinearSystem.from_poly_coeffs(("c1", "c2"), coeffs)
        first = [
            (
                tuple(c.render() for c in br.eq_conditions),
                tuple(c.render() for c in br.neq_conditions),
                br.status,
            )
            for br in parametric_solve(sys)
        ]
        second = [
            (
                tuple(c.render() for c in br.eq_conditions),
                tuple(c.render() for c in br.neq_conditions),
                br.status,
            )
            for br in parametric_solve(sys)
        ]
        assert first == second


def test_fresh_tags_avoid_reserved():
    assert fresh_tags(3, ()) == ("c1", "c2", "c3")
    assert fresh_tags(2, ("c1",)) == ("k1", "k2")
