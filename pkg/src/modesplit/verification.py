"""Independent closed-loop verification.

Given a synthesized feedback, these routines re-derive everything from
the closed-loop matrices alone: which outputs each mode reaches, whether
the mode-to-output assignment satisfies a problem instance, a real
block-diagonal realization of the error dynamics per output, and a direct
simulation of the tracking error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import DefectiveClosedLoop, DimensionMismatch, NotStabilized
from .linalg import eig_decomp
from .system import LtiSystem

_EIGVEC_COND_LIMIT = 1e8
_RESIDUE_TOL = 1e-7
_MODE_MATCH_TOL = 1e-6
_REAL_MODE_TOL = 1e-9


def _check_gain(sys: LtiSystem, F, rows: int, cols: int, name: str) -> np.ndarray:
    mat = np.asarray(F, dtype=float)
    if mat.shape != (rows, cols):
        raise DimensionMismatch(
            f"{name} must be {rows}x{cols}, got {mat.shape}"
        )
    return mat


@dataclass(frozen=True)
class ModeEntry:
    """One closed-loop mode: value, unit eigenvector, reached outputs."""

    value: complex
    vector: np.ndarray
    outputs: tuple
    residues: np.ndarray


@dataclass(frozen=True)
class ModalMap:
    """All closed-loop modes with their output visibility."""

    modes: tuple
    eigenvector_condition: float
    residue_tol: float


def mode_output_map(sys: LtiSystem, F, tol: float = _RESIDUE_TOL) -> ModalMap:
    """Which outputs each closed-loop mode is visible from.

    The closed loop must be diagonalizable: an eigenvector matrix with
    condition number above 1e8 raises DefectiveClosedLoop.  A mode reaches
    output i when the modulus of the i-th entry of (C + DF) v exceeds tol
    for its unit eigenvector v.
    """
    F = _check_gain(sys, F, sys.m, sys.n, "feedback gain")
    closed_a = sys.A + sys.B @ F
    pairs = eig_decomp(closed_a)
    vmat = np.column_stack([vec for _, vec in pairs])
    condition = float(np.linalg.cond(vmat))
    if condition > _EIGVEC_COND_LIMIT:
        raise DefectiveClosedLoop(
            f"closed-loop eigenvector condition {condition:.3e} exceeds 1e8"
        )
    closed_c = sys.C + sys.D @ F
    modes = []
    for value, vec in pairs:
        residues = closed_c @ vec
        outputs = tuple(
            i + 1 for i in range(sys.p) if abs(residues[i]) > tol
        )
        modes.append(ModeEntry(value, vec, outputs, residues))
    return ModalMap(tuple(modes), condition, tol)


def _match_multiset(observed, targets, tol=_MODE_MATCH_TOL):
    """Greedy one-to-one matching of observed values onto targets."""
    if len(observed) != len(targets):
        return False
    remaining = list(observed)
    for t in targets:
        best = None
        best_gap = None
        for idx, z in enumerate(remaining):
            gap = abs(z - t)
            if best_gap is None or gap < best_gap:
                best, best_gap = idx, gap
        if best is None or best_gap > tol * (1.0 + abs(t)):
            return False
        remaining.pop(best)
    return True


def _contains_multiset(observed, targets, tol=_MODE_MATCH_TOL):
    """Each target matched to a distinct observed value."""
    remaining = list(observed)
    for t in targets:
        best = None
        best_gap = None
        for idx, z in enumerate(remaining):
            gap = abs(z - t)
            if best_gap is None or gap < best_gap:
                best, best_gap = idx, gap
        if best is None or best_gap > tol * (1.0 + abs(t)):
            return False
        remaining.pop(best)
    return True


def _within_multiset(observed, targets, tol=_MODE_MATCH_TOL):
    """Each observed value matched to a distinct target."""
    remaining = list(targets)
    for z in observed:
        best = None
        best_gap = None
        for idx, t in enumerate(remaining):
            gap = abs(z - t)
            if best_gap is None or gap < best_gap:
                best, best_gap = idx, gap
        if best is None or best_gap > tol * (1.0 + abs(z)):
            return False
        remaining.pop(best)
    return True


@dataclass(frozen=True)
class DecouplingReport:
    """Clause-by-clause verdict of a closed-loop decoupling check."""

    passed: bool
    clauses: tuple
    modal: Optional[ModalMap]


def check_decoupling(sys: LtiSystem, F, spec, tol: float = _RESIDUE_TOL) -> DecouplingReport:
    """Does the closed loop solve the given problem instance?

    Clauses: (a) every mode reaches at most one output; (b) per-output
    observable counts are exactly nu (problems 1 and 2) or at most nu
    (problem 3); (c) mode values agree with the assignment where the
    variant fixes them; (d) all closed-loop modes lie in the stability
    region.  Never raises for a failing loop; structural diagnostics land
    in the clause details.
    """
    region = spec.region or sys.region()
    try:
        modal = mode_output_map(sys, F, tol)
    except DefectiveClosedLoop as exc:
        clause = ("diagonalizable closed loop", False, str(exc))
        return DecouplingReport(False, (clause,), None)
    clauses = []

    shared = [m.value for m in modal.modes if len(m.outputs) > 1]
    clauses.append(
        (
            "each mode reaches at most one output",
            not shared,
            f"modes on several outputs: {shared}" if shared else "none shared",
        )
    )

    per_output = [
        [m.value for m in modal.modes if m.outputs == (i,)]
        for i in range(1, sys.p + 1)
    ]
    counts = [len(vals) for vals in per_output]
    if spec.index == "3":
        counts_ok = all(c <= v for c, v in zip(counts, spec.nu))
        wording = "at most"
    else:
        counts_ok = counts == list(spec.nu)
        wording = "exactly"
    clauses.append(
        (
            "per-output observable counts",
            counts_ok,
            f"observed {counts}, {wording} {list(spec.nu)} required",
        )
    )

    hidden = [m.value for m in modal.modes if not m.outputs]
    values_ok = True
    detail = "no assigned values for this variant"
    if spec.variant in ("A", "B"):
        problems = []
        for i, row in enumerate(spec.modes, start=1):
            observed = per_output[i - 1]
            if spec.index == "3":
                ok = _within_multiset(observed, row)
            else:
                ok = _match_multiset(observed, row)
            if not ok:
                problems.append(f"output {i}: observed {observed}, assigned {list(row)}")
        if spec.variant == "A":
            if spec.index == "3":
                if not _contains_multiset(hidden, spec.unobservable_modes):
                    problems.append(
                        f"hidden modes {hidden} miss assigned {list(spec.unobservable_modes)}"
                    )
            else:
                if not _match_multiset(hidden, spec.unobservable_modes):
                    problems.append(
                        f"hidden modes {hidden}, assigned {list(spec.unobservable_modes)}"
                    )
        values_ok = not problems
        detail = "; ".join(problems) if problems else "all assigned values placed"
    clauses.append(("assigned mode values", values_ok, detail))

    unstable = [m.value for m in modal.modes if not region.contains(m.value)]
    clauses.append(
        (
            "closed-loop stability",
            not unstable,
            f"modes outside the region: {unstable}" if unstable else "spectrum inside the region",
        )
    )

    passed = all(ok for _, ok, _ in clauses)
    return DecouplingReport(passed, tuple(clauses), modal)


@dataclass(frozen=True)
class OutputBlock:
    """Real modal realization of the error dynamics seen by one output."""

    output_index: int
    A: np.ndarray
    C: np.ndarray
    state_map: np.ndarray
    mode_values: tuple


@dataclass(frozen=True)
class DecoupledRealization:
    """Per-output real block realizations of the closed-loop error."""

    domain: str
    state_dim: int
    blocks: tuple

    def error_response(self, x0, times):
        """Evaluate every block's output over the given times (rows) per
        output (columns), starting from the full-state initial condition."""
        x0 = np.asarray(x0, dtype=float).reshape(-1)
        if x0.shape[0] != self.state_dim:
            raise DimensionMismatch(
                f"initial state has {x0.shape[0]} entries, expected {self.state_dim}"
            )
        times = np.asarray(times, dtype=float).reshape(-1)
        out = np.zeros((times.shape[0], len(self.blocks)))
        for bi, block in enumerate(self.blocks):
            if block.A.shape[0] == 0:
                continue
            z0 = block.state_map @ x0
            for ti, t in enumerate(times):
                if self.domain == "continuous":
                    zt = scipy.linalg.expm(block.A * t) @ z0
                else:
                    zt = np.linalg.matrix_power(block.A, int(round(t))) @ z0
                out[ti, bi] = float(np.asarray(block.C @ zt).reshape(-1)[0])
        return out

    def initial_state_for(self, block_states):
        """Least-squares full initial state reproducing the given per-block
        initial states; returns (x0, residual)."""
        rows = []
        targets = []
        for block, wanted in zip(self.blocks, block_states):
            wanted = np.asarray(wanted, dtype=float).reshape(-1)
            if wanted.shape[0] != block.A.shape[0]:
                raise DimensionMismatch(
                    f"block for output {block.output_index} has state dimension "
                    f"{block.A.shape[0]}, got {wanted.shape[0]} targets"
                )
            if wanted.shape[0]:
                rows.append(block.state_map)
                targets.append(wanted)
        if not rows:
            return np.zeros(self.state_dim), 0.0
        stacked = np.vstack(rows)
        target = np.concatenate(targets)
        x0 = np.linalg.lstsq(stacked, target, rcond=None)[0]
        residual = float(np.linalg.norm(stacked @ x0 - target))
        return x0, residual


def decoupled_realization(sys: LtiSystem, F, tol: float = _RESIDUE_TOL) -> DecoupledRealization:
    """Real block-diagonal realization of each output's error dynamics.

    Every closed-loop mode visible from output i contributes a 1x1 block
    (real mode) or a 2x2 rotation block (conjugate pair) to that output's
    realization.  state_map sends a full initial state to the block state,
    so block output sums reproduce the free error response.
    """
    modal = mode_output_map(sys, F, tol)
    vmat = np.column_stack([m.vector for m in modal.modes])
    vinv = np.linalg.inv(vmat)
    blocks = []
    for i in range(1, sys.p + 1):
        sub_blocks = []
        c_entries = []
        map_rows = []
        values = []
        consumed = set()
        for j, mode in enumerate(modal.modes):
            if i not in mode.outputs or j in consumed:
                continue
            value = mode.value
            residue = complex(mode.residues[i - 1])
            row = vinv[j]
            if abs(value.imag) <= _REAL_MODE_TOL * (1.0 + abs(value.real)):
                sub_blocks.append(np.array([[value.real]]))
                c_entries.append(residue.real)
                map_rows.append(row.real)
                values.append(complex(value.real, 0.0))
                consumed.add(j)
                continue
            if value.imag < 0.0:
                continue
            partner = None
            for k, other in enumerate(modal.modes):
                if k in consumed or k == j:
                    continue
                if abs(other.value - np.conj(value)) <= _MODE_MATCH_TOL * (1.0 + abs(value)):
                    partner = k
                    break
            if partner is None:
                raise DefectiveClosedLoop(
                    f"complex mode {value} has no conjugate partner"
                )
            alpha, beta = value.real, value.imag
            sub_blocks.append(np.array([[alpha, -beta], [beta, alpha]]))
            c_entries.extend([2.0 * residue.real, -2.0 * residue.imag])
            map_rows.append(row.real)
            map_rows.append(row.imag)
            values.append(value)
            consumed.add(j)
            consumed.add(partner)
        if sub_blocks:
            a_block = scipy.linalg.block_diag(*sub_blocks)
            c_block = np.array(c_entries).reshape(1, -1)
            state_map = np.vstack(map_rows)
        else:
            a_block = np.zeros((0, 0))
            c_block = np.zeros((1, 0))
            state_map = np.zeros((0, sys.n))
        blocks.append(OutputBlock(i, a_block, c_block, state_map, tuple(values)))
    return DecoupledRealization(sys.domain, sys.n, tuple(blocks))


def closed_loop_static_gain(sys: LtiSystem, F) -> np.ndarray:
    """Steady-state gain from the tracking input to the outputs under F."""
    F = _check_gain(sys, F, sys.m, sys.n, "feedback gain")
    closed_a = sys.A + sys.B @ F
    closed_c = sys.C + sys.D @ F
    try:
        if sys.domain == "continuous":
            return sys.D - closed_c @ np.linalg.solve(closed_a, sys.B)
        return closed_c @ np.linalg.solve(np.eye(sys.n) - closed_a, sys.B) + sys.D
    except np.linalg.LinAlgError as exc:
        raise NotStabilized(
            f"closed loop is singular at the steady-state point: {exc}"
        ) from exc


@dataclass(frozen=True)
class SimulationResult:
    """Sampled tracking-error trajectory with its modal coefficients."""

    times: np.ndarray
    error: np.ndarray
    beta: np.ndarray
    eigenvalues: tuple
    steady_state: np.ndarray
    tracking_residual: float


def simulate_error(
    sys: LtiSystem,
    F,
    G,
    x0,
    r_bar,
    horizon: Optional[float] = None,
    steps: int = 21,
) -> SimulationResult:
    """Free response of the tracking error under constant reference r_bar.

    The steady state is removed first, the remaining transient is expanded
    over closed-loop modes, and the error is sampled on a horizon chosen
    so the slowest mode has decayed to about 1e-6 unless one is given.
    """
    F = _check_gain(sys, F, sys.m, sys.n, "feedback gain")
    G = _check_gain(sys, G, sys.m, sys.p, "feedforward gain")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    r_bar = np.asarray(r_bar, dtype=float).reshape(-1)
    if x0.shape[0] != sys.n:
        raise DimensionMismatch(f"initial state needs {sys.n} entries")
    if r_bar.shape[0] != sys.p:
        raise DimensionMismatch(f"reference needs {sys.p} entries")
    region = sys.region()
    closed_a = sys.A + sys.B @ F
    pairs = eig_decomp(closed_a)
    lams = np.array([value for value, _ in pairs])
    outside = [value for value, _ in pairs if not region.contains(value)]
    if outside:
        raise NotStabilized(f"closed-loop modes outside the region: {outside}")
    vmat = np.column_stack([vec for _, vec in pairs])
    condition = float(np.linalg.cond(vmat))
    if condition > _EIGVEC_COND_LIMIT:
        raise DefectiveClosedLoop(
            f"closed-loop eigenvector condition {condition:.3e} exceeds 1e8"
        )
    forcing = sys.B @ (G @ r_bar)
    if sys.domain == "continuous":
        steady = -np.linalg.solve(closed_a, forcing)
    else:
        steady = np.linalg.solve(np.eye(sys.n) - closed_a, forcing)
    transient = x0 - steady
    weights = np.linalg.solve(vmat, transient)
    closed_c = sys.C + sys.D @ F
    beta = (closed_c @ vmat) * weights[None, :]
    if sys.domain == "continuous":
        if horizon is None:
            decay = min(-value.real for value in lams)
            horizon = 8.0 / decay
        times = np.linspace(0.0, float(horizon), steps)
        phases = np.exp(np.outer(times, lams))
    else:
        if horizon is None:
            radius = max(abs(value) for value in lams)
            if radius <= 0.0:
                horizon = 1
            else:
                horizon = int(np.ceil(np.log(1e-6) / np.log(radius)))
                horizon = min(max(horizon, 1), 100_000)
        ticks = np.unique(np.round(np.linspace(0, int(horizon), steps)).astype(int))
        times = ticks.astype(float)
        phases = lams[None, :] ** ticks[:, None]
    error = np.real(phases @ beta.T)
    tracking_residual = float(np.max(np.abs(error[-1]))) if error.size else 0.0
    return SimulationResult(
        times, error, beta, tuple(complex(v) for v in lams), steady, tracking_residual
    )
