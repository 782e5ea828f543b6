"""Command line interface: orchestration and deterministic reporting.

Subcommands
    weights     solve the dilation-weight balance
    densities   conserved densities at one rank or up to a bound
    symmetries  generalized symmetries at explicit ranks or by level
    recursion   recursion operator from a computed symmetry chain
    verify      recheck a density, symmetry, or operator file from scratch

Exit codes: 0 success, 1 usage or parse error, 2 no result at the
requested rank, 3 verification failure.  All symbolic output round-trips
through the expression grammar; identical inputs give byte-identical
reports.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .conservation import (
    build_density_candidate,
    conservation_residual,
    solve_density,
)
from .expr import LatticePoly, render_poly
from .linalg import Branch
from .operators import DiffOperator, render_entry
from .params import ParamCoeff
from .parser import (
    ParseError,
    parse_assignments,
    parse_expression,
    parse_operator_matrix,
    parse_system,
)
from .recursion import RecursionOutcome, recursion_pipeline
from .scaling import (
    ScalingError,
    WeightFamily,
    WeightVector,
    achievable_ranks,
    compute_weights,
)
from .symmetry import (
    build_symmetry_candidate,
    frechet_operator,
    solve_symmetry,
    symmetry_residual,
)
from .system import DdeSystem

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_RESULT = 2
EXIT_VERIFY_FAIL = 3

DEFAULT_BRANCH_DEPTH = 6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep exit code 1 for usage problems
        raise UsageError(message)


def _render_eq_condition(pc: ParamCoeff) -> str:
    params = sorted(pc.parameters())
    if len(params) == 1:
        p = params[0]
        if pc.degree_in(p) == 1:
            g = pc.coeff_of(p, 1)
            h = pc.coeff_of(p, 0)
            if g.is_rational and h.is_rational:
                val = -h.as_fraction() / g.as_fraction()
                return f"{p} = {val}"
    return f"{pc.render()} = 0"


def _render_neq_condition(pc: ParamCoeff) -> str:
    params = sorted(pc.parameters())
    if len(params) == 1:
        p = params[0]
        if pc.degree_in(p) == 1:
            g = pc.coeff_of(p, 1)
            h = pc.coeff_of(p, 0)
            if g.is_rational and h.is_rational:
                val = -h.as_fraction() / g.as_fraction()
                return f"{p} != {val}"
    return f"{pc.render()} != 0"


class Report:
    """Accumulates results and renders them as text or JSON."""

    def __init__(self, command: str, sys_: DdeSystem):
        self.doc: dict = {
            "schema_version": "1",
            "command": command,
            "system": {
                "components": [
                    {"name": n, "rhs": render_poly(f, sys_.names)}
                    for n, f in zip(sys_.names, sys_.rhs)
                ],
                "params": list(sys_.params),
            },
            "weights": None,
            "densities": [],
            "symmetries": [],
            "recursion_operator": None,
            "conditions": [],
            "verification": [],
        }
        self.names = sys_.names

    def set_weights(self, w: WeightVector):
        self.doc["weights"] = {
            n: str(v) for n, v in zip(self.names, w.weights)
        }

    def add_density(self, r):
        self.doc["densities"].append(
            {
                "rank": str(r.rank),
                "rho": render_poly(r.density, self.names),
                "flux": render_poly(r.flux, self.names),
                "flux_decomposition": render_poly(r.flux_decomposition, self.names),
                "normalization": r.normalization,
                "conditions": [
                    _render_eq_condition(c) for c in r.eq_conditions
                ],
            }
        )

    def add_symmetry(self, r):
        self.doc["symmetries"].append(
            {
                "ranks": [str(x) for x in r.ranks],
                "components": {
                    n: render_poly(c, self.names)
                    for n, c in zip(self.names, r.components)
                },
                "conditions": [
                    _render_eq_condition(c) for c in r.eq_conditions
                ],
            }
        )

    def add_branches(self, subject: str, branches: list[Branch], found: str):
        for br in branches:
            if br.outcome is None:
                outcome = br.status
            elif any(b for b in br.outcome.basis):
                outcome = found
            else:
                outcome = "no candidate"
            self.doc["conditions"].append(
                {
                    "subject": subject,
                    "assumptions": [
                        _render_eq_condition(c) for c in br.eq_conditions
                    ],
                    "nonzero": [
                        _render_neq_condition(c) for c in br.neq_conditions
                    ],
                    "outcome": outcome,
                }
            )

    def set_recursion(self, outcome: RecursionOutcome):
        operator = outcome.operator
        entries = []
        if operator is not None:
            n = operator.n
            for i in range(n):
                for j in range(n):
                    entries.append(
                        f"R[{i + 1}][{j + 1}] = "
                        f"{render_entry(operator.entries[i][j], self.names)}"
                    )
        self.doc["recursion_operator"] = {
            "entries": entries,
            "coefficients": {
                t: str(v) for t, v in sorted(
                    outcome.coefficients.items(),
                    key=lambda kv: (len(kv[0]), kv[0]),
                )
            },
            "verified": outcome.ok,
            "checks": list(outcome.checks),
            "failure_family": outcome.failure_family,
            "message": outcome.message,
        }

    def add_verification(self, subject: str, identity: str, ok: bool):
        self.doc["verification"].append(
            {
                "subject": subject,
                "identity": identity,
                "verdict": "pass" if ok else "fail",
            }
        )

    # -- rendering ---------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(self.doc, indent=2) + "\n"

    def to_text(self) -> str:
        d = self.doc
        lines: list[str] = ["system:"]
        for comp in d["system"]["components"]:
            lines.append(f"  {comp['name']}' = {comp['rhs']}")
        if d["system"]["params"]:
            lines.append("  params: " + ", ".join(d["system"]["params"]))
        if d["weights"] is not None:
            lines.append("weights:")
            for n in self.names:
                lines.append(f"  w({n}) = {d['weights'][n]}")
        if d["densities"]:
            lines.append("densities:")
            for e in d["densities"]:
                lines.append(f"  rank {e['rank']}:")
                if e["conditions"]:
                    lines.append(
                        "    conditions: " + ", ".join(e["conditions"])
                    )
                lines.append(f"    rho = {e['rho']}")
                lines.append(f"    flux = {e['flux']}")
                lines.append(
                    f"    flux_decomposition = {e['flux_decomposition']}"
                )
        if d["symmetries"]:
            lines.append("symmetries:")
            for e in d["symmetries"]:
                lines.append(f"  ranks ({', '.join(e['ranks'])}):")
                if e["conditions"]:
                    lines.append(
                        "    conditions: " + ", ".join(e["conditions"])
                    )
                for n in self.names:
                    lines.append(f"    G_{n} = {e['components'][n]}")
        if d["recursion_operator"] is not None:
            r = d["recursion_operator"]
            lines.append("recursion operator:")
            for entry in r["entries"]:
                lines.append(f"  {entry}")
            if r["coefficients"]:
                nonzero = {
                    t: v for t, v in r["coefficients"].items() if v != "0"
                }
                lines.append(
                    "  coefficients: "
                    + ", ".join(f"{t} = {v}" for t, v in nonzero.items())
                )
            for c in r["checks"]:
                lines.append(f"  check: {c}")
            if r["verified"]:
                lines.append("  verdict: " + self._recursion_verdict(r))
            else:
                lines.append(
                    f"  verdict: no operator ({r['failure_family']}): {r['message']}"
                )
        if d["conditions"]:
            lines.append("conditions:")
            for e in d["conditions"]:
                parts = e["assumptions"] + e["nonzero"]
                label = "[" + ", ".join(parts) + "]" if parts else "[generic]"
                lines.append(f"  {e['subject']} {label}: {e['outcome']}")
        if d["verification"]:
            lines.append("verification:")
            for e in d["verification"]:
                lines.append(
                    f"  {e['subject']}: {e['identity']}: {e['verdict']}"
                )
        return "\n".join(lines) + "\n"

    def _recursion_verdict(self, r: dict) -> str:
        levels = []
        for c in r["checks"]:
            if c.startswith("R G(1) = G("):
                levels.append(c[len("R G(1) = "):].split()[0])
            elif c.startswith("generated G("):
                levels.append(c.split()[1].rstrip(":"))
        if levels:
            return "generates " + ", ".join(levels) + ": verified"
        return "verified"


# -- argument handling -----------------------------------------------------------


def _parse_rational(text: str, positive: bool = False) -> Fraction:
    try:
        if "/" in text:
            num, den = text.split("/")
            value = Fraction(int(num), int(den))
        else:
            value = Fraction(int(text))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad rational value {text!r}") from None
    if positive and value <= 0:
        raise UsageError(f"value must be positive, got {text!r}")
    return value


def _load_system(path: str, weight_flags: list[str] | None) -> DdeSystem:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    sys_ = parse_system(text)
    if weight_flags:
        pins = dict(sys_.weight_pins)
        index = {n: i for i, n in enumerate(sys_.names)}
        for flag in weight_flags:
            if "=" not in flag:
                raise UsageError(f"--weight expects name=value, got {flag!r}")
            name, val = flag.split("=", 1)
            name = name.strip()
            if name not in index:
                raise UsageError(f"unknown component {name!r} in --weight")
            pins[index[name]] = _parse_rational(val.strip())
        sys_ = DdeSystem(sys_.names, sys_.rhs, sys_.params, pins)
    return sys_


def _resolve_weights(sys_: DdeSystem) -> WeightVector:
    w = compute_weights(sys_)
    if isinstance(w, WeightFamily):
        free = ", ".join(sys_.names[i] for i in w.free_components)
        raise _NoResult(
            "weights are underdetermined: pin a free component with "
            f"--weight (free: {free})"
        )
    return w


class _NoResult(Exception):
    pass


def _branch_depth(args) -> int:
    if args.branch_depth is not None:
        return args.branch_depth
    env = os.environ.get("LIK_BRANCH_DEPTH")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"bad LIK_BRANCH_DEPTH value {env!r}") from None
    return DEFAULT_BRANCH_DEPTH


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("file", help="system definition file")
    sub.add_argument("--json", action="store_true", help="emit a JSON report")
    sub.add_argument(
        "--weight",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="pin a component weight (repeatable)",
    )
    sub.add_argument(
        "--branch-depth",
        type=int,
        default=None,
        help="parameter case-split depth (default 6, env LIK_BRANCH_DEPTH)",
    )


def build_argparser() -> _Parser:
    top = _Parser(
        prog="lik",
        description="integrability toolkit for polynomial lattice equations",
    )
    subs = top.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("weights", help="solve the dilation-weight balance")
    _add_common(sub)

    sub = subs.add_parser("densities", help="conserved densities and fluxes")
    _add_common(sub)
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--rank", type=str, help="single density rank")
    group.add_argument("--max-rank", type=str, help="all ranks up to a bound")

    sub = subs.add_parser("symmetries", help="generalized symmetries")
    _add_common(sub)
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument(
        "--ranks", type=str, help="comma-separated rank per component"
    )
    group.add_argument(
        "--levels", type=int, help="compute this many successive symmetries"
    )
    sub.add_argument("--gap", type=int, default=1, help="level step (default 1)")
    sub.add_argument(
        "--normalize", type=str, default=None, metavar="TAG",
        help="unknown tag scaled to 1 (default: last nonzero)",
    )

    sub = subs.add_parser("recursion", help="recursion operator")
    _add_common(sub)
    sub.add_argument(
        "--levels", type=int, default=3,
        help="symmetry levels to compute first (default 3)",
    )
    sub.add_argument("--gap", type=int, default=1, help="symmetry gap (default 1)")

    sub = subs.add_parser("verify", help="recheck results from their files")
    _add_common(sub)
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--density", type=str, metavar="FILE")
    group.add_argument("--symmetry", type=str, metavar="FILE")
    group.add_argument("--operator", type=str, metavar="FILE")

    return top


# -- subcommand implementations ----------------------------------------------------


def _cmd_weights(args) -> tuple[Report, int]:
    sys_ = _load_system(args.file, args.weight)
    report = Report("weights", sys_)
    w = _resolve_weights(sys_)
    report.set_weights(w)
    return report, EXIT_OK


def _cmd_densities(args) -> tuple[Report, int]:
    sys_ = _load_system(args.file, args.weight)
    report = Report("densities", sys_)
    w = _resolve_weights(sys_)
    report.set_weights(w)
    depth = _branch_depth(args)
    if args.rank is not None:
        ranks = [_parse_rational(args.rank, positive=True)]
    else:
        ranks = achievable_ranks(w, _parse_rational(args.max_rank, positive=True))
    found = 0
    for rank in ranks:
        try:
            cand = build_density_candidate(sys_, w, rank)
        except ValueError:
            continue
        results, branches = solve_density(cand, sys_, depth)
        for r in results:
            report.add_density(r)
            found += 1
        if sys_.params:
            report.add_branches(
                f"density rank {rank}", branches, "density found"
            )
    return report, EXIT_OK if found else EXIT_NO_RESULT


def _cmd_symmetries(args) -> tuple[Report, int]:
    sys_ = _load_system(args.file, args.weight)
    report = Report("symmetries", sys_)
    w = _resolve_weights(sys_)
    report.set_weights(w)
    depth = _branch_depth(args)
    if args.gap < 1:
        raise UsageError("--gap must be at least 1")
    rank_vectors = []
    if args.ranks is not None:
        parts = [p.strip() for p in args.ranks.split(",")]
        if len(parts) != sys_.n:
            raise UsageError(
                f"--ranks needs {sys_.n} comma-separated values for this system"
            )
        rank_vectors.append(
            tuple(_parse_rational(p, positive=True) for p in parts)
        )
    else:
        if args.levels < 1:
            raise UsageError("--levels must be at least 1")
        for level in range(1, args.levels + 1):
            rank_vectors.append(
                tuple(wi + level * args.gap for wi in w.weights)
            )
    found = 0
    for ranks in rank_vectors:
        try:
            cand = build_symmetry_candidate(sys_, w, ranks)
        except ValueError:
            continue
        results, branches = solve_symmetry(
            cand, sys_, w, normalize_tag=args.normalize, max_depth=depth
        )
        for r in results:
            report.add_symmetry(r)
            found += 1
        if sys_.params:
            report.add_branches(
                f"symmetry ranks ({', '.join(str(r) for r in ranks)})",
                branches,
                "symmetry found",
            )
    return report, EXIT_OK if found else EXIT_NO_RESULT


def _cmd_recursion(args) -> tuple[Report, int]:
    sys_ = _load_system(args.file, args.weight)
    report = Report("recursion", sys_)
    w = _resolve_weights(sys_)
    report.set_weights(w)
    depth = _branch_depth(args)
    if args.gap < 1:
        raise UsageError("--gap must be at least 1")
    if args.levels < 1:
        raise UsageError("--levels must be at least 1")
    outcome, level_info = recursion_pipeline(
        sys_, w, levels=args.levels, gap=args.gap, max_depth=depth
    )
    for _level, _ranks, results, _branches in level_info:
        for r in results:
            if not r.eq_conditions:
                report.add_symmetry(r)
    report.set_recursion(outcome)
    if outcome.ok:
        return report, EXIT_OK
    family = outcome.failure_family or ""
    code = EXIT_VERIFY_FAIL if family.startswith("verification") else EXIT_NO_RESULT
    return report, code


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _cmd_verify(args) -> tuple[Report, int]:
    sys_ = _load_system(args.file, args.weight)
    report = Report("verify", sys_)
    w = _resolve_weights(sys_)
    report.set_weights(w)
    ok = True
    if args.density:
        assigns = dict_of_assignments(args.density, sys_)
        for key in ("rho", "flux"):
            if key not in assigns:
                raise UsageError(f"density file must assign {key}")
        rho, flux = assigns["rho"], assigns["flux"]
        good = conservation_residual(rho, flux, sys_).is_zero
        report.add_verification(
            "density", "Dt(rho) + Delta(flux) = 0", good
        )
        ok &= good
    elif args.symmetry:
        assigns = dict_of_assignments(args.symmetry, sys_)
        comps = []
        for n in sys_.names:
            key = f"G_{n}"
            if key not in assigns:
                raise UsageError(f"symmetry file must assign {key}")
            comps.append(assigns[key])
        res = symmetry_residual(comps, sys_)
        good = all(x.is_zero for x in res)
        report.add_verification("symmetry", "Dt(G) - F'[G] = 0", good)
        ok &= good
    else:
        text = _read_text(args.operator)
        op = parse_operator_matrix(text, sys_.names, sys_.params)
        ok = _verify_operator(sys_, op, report)
    return report, EXIT_OK if ok else EXIT_VERIFY_FAIL


def dict_of_assignments(path: str, sys_: DdeSystem) -> dict[str, LatticePoly]:
    text = _read_text(path)
    out = {}
    for key, rhs, ln in parse_assignments(text):
        out[key] = parse_expression(rhs, sys_.names, sys_.params, line_no=ln)
    return out


def _verify_operator(sys_: DdeSystem, op: DiffOperator, report: Report) -> bool:
    """Generation plus defining-identity probes, recomputed from scratch.

    The seed of the chain is the time-translation symmetry, which is the
    right-hand side itself.
    """
    fp = frechet_operator(sys_.rhs)
    residual_op = op.frechet(sys_.rhs) + op.compose(fp) - fp.compose(op)
    ok = True
    chain = [list(sys_.rhs)]
    for step in range(1, 4):
        nxt = op.apply(chain[-1])
        subject = f"operator: level {step + 1} from level {step}"
        if not all(x.is_local for x in nxt):
            report.add_verification(
                subject, "generated symmetry is local", False
            )
            ok = False
            break
        polys = [x.local for x in nxt]
        good = all(x.is_zero for x in symmetry_residual(polys, sys_))
        report.add_verification(subject, "Dt(G) - F'[G] = 0", good)
        ok &= good
        chain.append(polys)
    for k, g in enumerate(chain[:3], start=1):
        res = residual_op.apply(g)
        good = all(x.is_zero for x in res)
        report.add_verification(
            f"operator: probe on level {k}",
            "(R'[F] + R o F' - F' o R) G = 0",
            good,
        )
        ok &= good
    return ok


def main(argv: list[str] | None = None) -> int:
    parser = build_argparser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "weights": _cmd_weights,
            "densities": _cmd_densities,
            "symmetries": _cmd_symmetries,
            "recursion": _cmd_recursion,
            "verify": _cmd_verify,
        }[args.command]
        report, code = handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScalingError as exc:
        print(f"no result: {exc}", file=sys.stderr)
        return EXIT_NO_RESULT
    except _NoResult as exc:
        print(f"no result: {exc}", file=sys.stderr)
        return EXIT_NO_RESULT
    sys.stdout.write(report.to_json() if args.json else report.to_text())
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
