"""Command-line interface.

Subcommands: zeros (pencil zero structure), subspaces (accumulated
subspace bases), check (solvability of one problem instance), synth
(feedback/feedforward synthesis), verify (independent closed-loop check).
Outputs are deterministic JSON documents.  Exit codes: 0 for computed
verdicts (even negative ones), 1 for usage and input errors, 2 for
numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys

import numpy as np

from . import errors
from .subspaces import l_i, r_star, r_star_i, v_star, v_star_g, v_star_g_i
from .synthesis import synthesize_feedback
from .system import StabilityRegion, load_system
from .transversal import ProblemSpec, check_problem
from .verification import (
    check_decoupling,
    closed_loop_static_gain,
    mode_output_map,
    simulate_error,
)
from .zeros import invariant_zeros

_USAGE_ERRORS = (
    errors.ParseError,
    errors.BadSpec,
    errors.BadIndex,
    errors.DimensionMismatch,
    errors.InvalidMatrix,
)
_NUMERIC_ERRORS = (
    errors.SynthesisFailed,
    errors.VerificationFailed,
    errors.NoWitness,
    errors.NotStabilized,
    errors.DefectiveClosedLoop,
    errors.UnsupportedPencil,
    errors.InternalInconsistency,
    errors.ProblemTooLarge,
    errors.InfeasibleCounts,
    errors.NotRightInvertible,
)

_SUBSPACE_TOKENS = ("r_star", "v_star", "v_star_g", "r_star_i", "v_star_g_i", "l_i")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise errors.ParseError(message)


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _matrix_list(mat) -> list:
    return [[float(x) for x in row] for row in np.asarray(mat)]


def _complex_obj(value: complex) -> dict:
    value = complex(value)
    return {"re": float(value.real), "im": float(value.imag)}


def _emit(obj, path) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        _sys.stdout.write(text)


def _region_from(args) -> StabilityRegion | None:
    tag = getattr(args, "region", None)
    return StabilityRegion.for_domain(tag) if tag else None


def _load_problem(text: str, region) -> ProblemSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise errors.ParseError(f"invalid problem JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise errors.ParseError("problem description must be a JSON object")
    if "problem" not in obj or "nu" not in obj:
        raise errors.ParseError("problem description needs 'problem' and 'nu'")
    problem = obj["problem"]
    if not isinstance(problem, str):
        raise errors.ParseError("'problem' must be a string")
    nu = obj["nu"]
    if not isinstance(nu, list):
        raise errors.ParseError("'nu' must be a list of counts")
    modes = obj.get("modes", [])
    if not isinstance(modes, list) or any(not isinstance(row, list) for row in modes):
        raise errors.ParseError("'modes' must be a list of per-output lists")
    hidden = obj.get("unobservable_modes", [])
    if not isinstance(hidden, list):
        raise errors.ParseError("'unobservable_modes' must be a list")
    spec_region = region
    if "region" in obj:
        tag = obj["region"]
        if tag not in ("continuous", "discrete"):
            raise errors.ParseError(f"unknown region {tag!r}")
        spec_region = StabilityRegion.for_domain(tag)
    return ProblemSpec(
        problem,
        tuple(nu),
        tuple(tuple(row) for row in modes),
        tuple(hidden),
        region=spec_region,
    )


def _load_gains(text: str, sys_obj) -> tuple:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise errors.ParseError(f"invalid feedback JSON: {exc}") from exc
    if not isinstance(obj, dict) or "F" not in obj:
        raise errors.ParseError("feedback description needs at least 'F'")
    feedback = np.asarray(obj["F"], dtype=float)
    feedforward = None
    if obj.get("G") is not None:
        feedforward = np.asarray(obj["G"], dtype=float)
    if feedback.shape != (sys_obj.m, sys_obj.n):
        raise errors.DimensionMismatch(
            f"F must be {sys_obj.m}x{sys_obj.n}, got {feedback.shape}"
        )
    if feedforward is not None and feedforward.shape != (sys_obj.m, sys_obj.p):
        raise errors.DimensionMismatch(
            f"G must be {sys_obj.m}x{sys_obj.p}, got {feedforward.shape}"
        )
    return feedback, feedforward


def _cmd_zeros(args) -> int:
    sys_obj = load_system(_read_text(args.system))
    structure = invariant_zeros(sys_obj, rtol=args.rtol)
    region = _region_from(args) or sys_obj.region()
    rows = []
    for zero in structure.zeros:
        rows.append(
            {
                "re": float(zero.value.real),
                "im": float(zero.value.imag),
                "geometric": int(zero.geometric),
                "algebraic": int(zero.algebraic),
                "minimum_phase": bool(region.contains(zero.value)),
            }
        )
    _emit({"zeros": rows, "normal_rank": int(structure.normal_rank)}, args.output)
    return 0


def _basis_obj(basis) -> dict:
    mat = basis.basis
    if np.iscomplexobj(mat):
        mat = mat.real
    return {"dim": int(basis.dim), "basis": _matrix_list(mat)}


def _cmd_subspaces(args) -> int:
    sys_obj = load_system(_read_text(args.system))
    region = _region_from(args)
    tokens = [t.strip() for t in args.which.split(",") if t.strip()]
    for token in tokens:
        if token not in _SUBSPACE_TOKENS:
            raise errors.BadSpec(
                f"unknown subspace {token!r}; choose from {', '.join(_SUBSPACE_TOKENS)}"
            )
    out = {}
    for token in tokens:
        if token == "r_star":
            out[token] = _basis_obj(r_star(sys_obj, seed=args.seed))
        elif token == "v_star":
            out[token] = _basis_obj(v_star(sys_obj, seed=args.seed))
        elif token == "v_star_g":
            out[token] = _basis_obj(v_star_g(sys_obj, region, seed=args.seed))
        elif token == "r_star_i":
            out[token] = {
                str(i): _basis_obj(r_star_i(sys_obj, i, seed=args.seed))
                for i in range(1, sys_obj.p + 1)
            }
        elif token == "v_star_g_i":
            out[token] = {
                str(i): _basis_obj(v_star_g_i(sys_obj, i, region, seed=args.seed))
                for i in range(1, sys_obj.p + 1)
            }
        elif token == "l_i":
            out[token] = {
                str(i): _basis_obj(l_i(sys_obj, i, region, seed=args.seed))
                for i in range(1, sys_obj.p + 1)
            }
    _emit(out, args.output)
    return 0


def _ledger_obj(label, ledger) -> dict:
    return {
        "label": label,
        "verdict": bool(ledger.verdict),
        "entries": [
            {
                "subset": list(entry.subset),
                "achieved": int(entry.achieved),
                "required": int(entry.required),
                "passed": bool(entry.passed),
            }
            for entry in ledger.entries
        ],
    }


def _report_obj(report) -> dict:
    return {
        "problem": report.problem,
        "verdict": bool(report.verdict),
        "ledgers": [_ledger_obj(label, ledger) for label, ledger in report.ledgers],
        "hidden_split": list(report.hidden_split) if report.hidden_split else None,
        "output_splits": (
            [list(split) for split in report.output_splits]
            if report.output_splits
            else None
        ),
        "selection": (
            [list(row) for row in report.selection] if report.selection else None
        ),
        "notes": list(report.notes),
    }


def _cmd_check(args) -> int:
    sys_obj = load_system(_read_text(args.system))
    spec = _load_problem(_read_text(args.problem), _region_from(args))
    report = check_problem(sys_obj, spec, rtol=args.rtol, seed=args.seed)
    _emit(_report_obj(report), args.output)
    return 0


def _cmd_synth(args) -> int:
    sys_obj = load_system(_read_text(args.system))
    spec = _load_problem(_read_text(args.problem), _region_from(args))
    solution = synthesize_feedback(sys_obj, spec, seed=args.seed)
    assignment = [
        {"lambda": _complex_obj(slot.value), "output": int(slot.tag)}
        for slot in solution.slots
    ]
    _emit(
        {
            "problem": spec.problem,
            "seed": int(args.seed),
            "F": _matrix_list(solution.F),
            "G": _matrix_list(solution.G),
            "assignment": assignment,
        },
        args.output,
    )
    return 0


def _cmd_verify(args) -> int:
    sys_obj = load_system(_read_text(args.system))
    spec = _load_problem(_read_text(args.problem), _region_from(args))
    feedback, feedforward = _load_gains(_read_text(args.feedback), sys_obj)
    verdict = check_decoupling(sys_obj, feedback, spec)
    mode_rows = []
    per_output = [0] * sys_obj.p
    if verdict.modal is not None:
        for mode in verdict.modal.modes:
            mode_rows.append(
                {
                    "lambda": _complex_obj(mode.value),
                    "outputs": [int(i) for i in mode.outputs],
                }
            )
            if len(mode.outputs) == 1:
                per_output[mode.outputs[0] - 1] += 1
    tracking_residual = None
    if feedforward is not None:
        try:
            static = closed_loop_static_gain(sys_obj, feedback)
            gap = static @ feedforward - np.eye(sys_obj.p)
            tracking_residual = float(np.max(np.abs(gap)))
        except errors.NotStabilized:
            tracking_residual = None
    out = {
        "verdict": bool(verdict.passed),
        "clauses": [
            {"name": name, "passed": bool(ok), "detail": detail}
            for name, ok, detail in verdict.clauses
        ],
        "mode_map": mode_rows,
        "per_output_counts": [int(c) for c in per_output],
        "tracking_residual": tracking_residual,
    }
    _emit(out, args.output)
    if args.trace:
        if feedforward is None:
            raise errors.BadSpec("a feedforward gain G is required for --trace")
        rng = np.random.default_rng(args.seed)
        x0 = rng.standard_normal(sys_obj.n)
        reference = np.ones(sys_obj.p)
        result = simulate_error(sys_obj, feedback, feedforward, x0, reference)
        with open(args.trace, "w", encoding="utf-8") as handle:
            header = ["time"] + [f"eps{i}" for i in range(1, sys_obj.p + 1)]
            handle.write(",".join(header) + "\n")
            for row_idx in range(result.times.shape[0]):
                cells = [repr(float(result.times[row_idx]))]
                cells += [repr(float(v)) for v in result.error[row_idx]]
                handle.write(",".join(cells) + "\n")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="modesplit",
        description="Solvability, synthesis, and verification of "
        "state-to-output mode decoupling problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_seed=True, with_rtol=False):
        p.add_argument("-o", "--output", default=None, help="write JSON here instead of stdout")
        p.add_argument(
            "--region",
            choices=("continuous", "discrete"),
            default=None,
            help="override the stability region",
        )
        if with_seed:
            p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        if with_rtol:
            p.add_argument("--rtol", type=float, default=None, help="rank tolerance")

    p_zeros = sub.add_parser("zeros", help="invariant zero structure of a system")
    p_zeros.add_argument("system", help="system JSON file")
    add_common(p_zeros, with_seed=False, with_rtol=True)
    p_zeros.set_defaults(func=_cmd_zeros)

    p_sub = sub.add_parser("subspaces", help="accumulated subspace bases")
    p_sub.add_argument("system", help="system JSON file")
    p_sub.add_argument(
        "--which",
        default="r_star,v_star,v_star_g",
        help="comma list from: " + ", ".join(_SUBSPACE_TOKENS),
    )
    add_common(p_sub)
    p_sub.set_defaults(func=_cmd_subspaces)

    p_check = sub.add_parser("check", help="decide solvability of a problem instance")
    p_check.add_argument("system", help="system JSON file")
    p_check.add_argument("problem", help="problem JSON file")
    add_common(p_check, with_rtol=True)
    p_check.set_defaults(func=_cmd_check)

    p_synth = sub.add_parser("synth", help="synthesize feedback and feedforward gains")
    p_synth.add_argument("system", help="system JSON file")
    p_synth.add_argument("problem", help="problem JSON file")
    add_common(p_synth)
    p_synth.set_defaults(func=_cmd_synth)

    p_verify = sub.add_parser("verify", help="independently verify a closed loop")
    p_verify.add_argument("system", help="system JSON file")
    p_verify.add_argument("feedback", help="feedback JSON file with F (and G)")
    p_verify.add_argument("problem", help="problem JSON file")
    p_verify.add_argument("--trace", default=None, help="write an error-trace CSV here")
    add_common(p_verify)
    p_verify.set_defaults(func=_cmd_verify)

    return parser


def run(argv=None) -> int:
    """Run the CLI; returns the process exit code instead of exiting."""
    try:
        parser = _build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 0
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(run())
