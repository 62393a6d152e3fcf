"""Subspace families underlying the decoupling solvability tests.

Everything here is built from frequency-domain slices of the system
pencil: kernel slices (state projections of the pencil kernel at a point),
directed slices (solution sets that push a unit impulse into one chosen
output), and their accumulations over the stability region.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BadIndex, BadSpec, InternalInconsistency
from .linalg import (
    DERIVED_RTOL,
    AffineSet,
    Infeasible,
    SubspaceBasis,
    affine_solution_set,
    null_space,
    orthonormalize,
    rank_of,
    subspace_sum_dim,
)
from .system import LtiSystem, StabilityRegion, normal_rank_pencil
from .zeros import invariant_zeros, rosenbrock

_AVOID_TOL = 1e-6


@dataclass(frozen=True)
class KernelSlice:
    """State projection of the pencil kernel at one complex point.

    state_basis holds an orthonormal basis of the projected states; column
    k of input_map is an input vector w such that (state_basis[:, k], w)
    lies in the pencil kernel.
    """

    lam: complex
    state_basis: SubspaceBasis
    input_map: np.ndarray

    @property
    def dim(self) -> int:
        return self.state_basis.dim

    def conjugate(self) -> "KernelSlice":
        return KernelSlice(
            np.conj(self.lam),
            self.state_basis.conjugate(),
            np.conj(self.input_map),
        )


@dataclass(frozen=True)
class DirectedSlice:
    """Solutions of the pencil equation driving a unit impulse into output i.

    affine is the full solution set over (state, input) when one exists;
    feasible is False when the unit-impulse equation has no solution, in
    which case state_span falls back to the homogeneous kernel states.
    At a rank-drop point of the pencil the recorded state_span is only the
    particular state direction: the homogeneous states there belong to the
    zero structure, not to the directed family.
    """

    lam: complex
    output_index: int
    affine: Optional[AffineSet]
    feasible: bool
    state_span: SubspaceBasis

    @property
    def dim(self) -> int:
        return self.state_span.dim

    def conjugate(self) -> "DirectedSlice":
        affine = None
        if self.affine is not None:
            affine = AffineSet(
                np.conj(self.affine.particular), self.affine.directions.conjugate()
            )
        return DirectedSlice(
            np.conj(self.lam),
            self.output_index,
            affine,
            self.feasible,
            self.state_span.conjugate(),
        )


@dataclass(frozen=True)
class ComplexZeroFamily:
    """Region-zero decomposition of an accumulated subspace.

    real_part_span collects the base subspace together with the slices at
    real region zeros; pair_spans holds, per complex-conjugate zero pair,
    the slice at the upper zero and its conjugate.
    """

    kind: str
    real_part_span: SubspaceBasis
    pair_spans: tuple
    pair_values: tuple


def _check_output_index(sys: LtiSystem, i: int) -> None:
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= sys.p:
        raise BadIndex(f"output index {i} outside 1..{sys.p}")


def _deleted_rows(sys: LtiSystem, i: int):
    _check_output_index(sys, i)
    keep = [r for r in range(sys.p) if r != i - 1]
    return sys.C[keep, :], sys.D[keep, :]


def _kernel_slice(sys: LtiSystem, lam, c_rows: np.ndarray, d_rows: np.ndarray) -> KernelSlice:
    lam = complex(lam)
    if lam.imag == 0.0:
        lam = lam.real
    n, m = sys.n, sys.m
    shifted = sys.A - lam * np.eye(n)
    top = np.hstack([shifted, sys.B])
    if c_rows.shape[0]:
        pencil = np.vstack([top, np.hstack([c_rows, d_rows])])
    else:
        pencil = top
    kernel = null_space(pencil, DERIVED_RTOL)
    states = orthonormalize(kernel.basis[:n, :], ambient_dim=n, rtol=DERIVED_RTOL)
    if states.dim:
        lhs = np.vstack([sys.B, d_rows])
        rhs = -np.vstack([shifted, c_rows]) @ states.basis
        input_map = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    else:
        dtype = complex if np.iscomplexobj(states.basis) else float
        input_map = np.zeros((m, 0), dtype=dtype)
    return KernelSlice(complex(lam), states, input_map)


def r_lambda(sys: LtiSystem, lam) -> KernelSlice:
    """Kernel slice of the full system pencil at one point."""
    return _kernel_slice(sys, lam, sys.C, sys.D)


def r_i_lambda(sys: LtiSystem, i: int, lam) -> KernelSlice:
    """Kernel slice of the pencil with output row i removed."""
    c_rows, d_rows = _deleted_rows(sys, i)
    return _kernel_slice(sys, lam, c_rows, d_rows)


def r_hat_i(sys: LtiSystem, i: int, lam) -> DirectedSlice:
    """Directed slice: pencil solutions sending a unit impulse to output i."""
    _check_output_index(sys, i)
    lam = complex(lam)
    pencil = rosenbrock(sys, lam)
    n = sys.n
    rhs = np.zeros(n + sys.p, dtype=pencil.dtype)
    rhs[n + i - 1] = 1.0
    solution = affine_solution_set(pencil, rhs, DERIVED_RTOL)
    if isinstance(solution, Infeasible):
        homogeneous = null_space(pencil, DERIVED_RTOL)
        span = orthonormalize(homogeneous.basis[:n, :], ambient_dim=n, rtol=DERIVED_RTOL)
        return DirectedSlice(lam, i, None, False, span)
    rank_drop = rank_of(pencil, DERIVED_RTOL) < normal_rank_pencil(sys)
    particular_state = solution.particular[:n].reshape(-1, 1)
    if rank_drop:
        span = orthonormalize(particular_state, ambient_dim=n, rtol=DERIVED_RTOL)
    else:
        columns = np.hstack([particular_state, solution.directions.basis[:n, :]])
        span = orthonormalize(columns, ambient_dim=n, rtol=DERIVED_RTOL)
    return DirectedSlice(lam, i, solution, True, span)


def _draw_point(rng, domain: str, avoid, used) -> float:
    while True:
        if domain == "continuous":
            lam = float(rng.uniform(-10.0, -1.0))
        else:
            lam = float(rng.uniform(0.1, 0.9))
        clear = all(abs(lam - z) > _AVOID_TOL for z in avoid)
        clear = clear and all(abs(lam - u) > _AVOID_TOL for u in used)
        if clear:
            return lam


def _accumulate_states(sys, c_rows, d_rows, avoid, seed) -> SubspaceBasis:
    """Sum of kernel-slice states at random region points.

    Every slice at a generic point lies inside the accumulated subspace
    exactly, so extra draws can never inflate the result; the loop always
    takes a few more points than the ambient dimension rather than
    trusting an early stall, which can quit one direction short when two
    consecutive draws land nearly parallel.
    """
    rng = np.random.default_rng(seed)
    n = sys.n
    columns = np.zeros((n, 0))
    used = []
    for _ in range(n + 4):
        lam = _draw_point(rng, sys.domain, avoid, used)
        used.append(lam)
        piece = _kernel_slice(sys, lam, c_rows, d_rows)
        if piece.dim:
            columns = np.hstack([columns, piece.state_basis.basis])
        if columns.shape[1] and rank_of(columns, DERIVED_RTOL) >= n:
            break
    return orthonormalize(columns, ambient_dim=n, rtol=DERIVED_RTOL)


def r_star(sys: LtiSystem, seed: int = 0) -> SubspaceBasis:
    """Accumulated kernel-slice states at generic points: the reachable core."""
    avoid = invariant_zeros(sys).values()
    return _accumulate_states(sys, sys.C, sys.D, avoid, seed)


def r_star_i(sys: LtiSystem, i: int, seed: int = 0) -> SubspaceBasis:
    """Accumulated row-deleted kernel-slice states at generic points."""
    c_rows, d_rows = _deleted_rows(sys, i)
    avoid = invariant_zeros(sys).values()
    return _accumulate_states(sys, c_rows, d_rows, avoid, seed)


def _zero_slice_columns(sys, zero_values):
    """Real column stack of full-kernel slices at the given zeros.

    Complex zeros must come in conjugate pairs ordered upper-first; the
    upper member contributes its real and imaginary parts and the lower
    member is skipped.
    """
    columns = []
    for value in zero_values:
        if value.imag < 0.0:
            continue
        piece = r_lambda(sys, value)
        if piece.dim == 0:
            continue
        basis = piece.state_basis.basis
        if value.imag > 0.0:
            columns.extend([basis.real, basis.imag])
        else:
            columns.append(basis.real)
    return columns


def _v_star_from(sys, zero_values, seed) -> SubspaceBasis:
    base = r_star(sys, seed)
    columns = [base.basis] + _zero_slice_columns(sys, zero_values)
    return orthonormalize(np.hstack(columns), ambient_dim=sys.n, rtol=DERIVED_RTOL)


def v_star(sys: LtiSystem, seed: int = 0) -> SubspaceBasis:
    """Largest output-nulling subspace: reachable core plus all zero slices."""
    return _v_star_from(sys, invariant_zeros(sys).values(), seed)


def v_star_g(
    sys: LtiSystem, region: Optional[StabilityRegion] = None, seed: int = 0
) -> SubspaceBasis:
    """Largest stabilizability subspace: core plus region-zero slices."""
    region = region or sys.region()
    values = [z.value for z in invariant_zeros(sys).zeros if region.contains(z.value)]
    return _v_star_from(sys, values, seed)


def v_star_g_i(
    sys: LtiSystem, i: int, region: Optional[StabilityRegion] = None, seed: int = 0
) -> SubspaceBasis:
    """Largest stabilizability subspace of the system without output i.

    When the full system pencil has full normal rank the result is
    cross-checked against the sum of the full-system stabilizability
    subspace and the row-deleted reachable core; disagreement raises
    InternalInconsistency.
    """
    _check_output_index(sys, i)
    region = region or sys.region()
    deleted = sys.delete_output(i)
    result = v_star_g(deleted, region, seed)
    if normal_rank_pencil(sys) == sys.n + sys.p:
        direct = orthonormalize(
            np.hstack([v_star_g(sys, region, seed).basis, r_star_i(sys, i, seed).basis]),
            ambient_dim=sys.n,
            rtol=DERIVED_RTOL,
        )
        same_dim = direct.dim == result.dim
        same_span = subspace_sum_dim([direct, result], DERIVED_RTOL) == result.dim
        if not (same_dim and same_span):
            raise InternalInconsistency(
                f"row-deleted stabilizability subspace for output {i} disagrees "
                f"with its sum decomposition ({result.dim} vs {direct.dim})"
            )
    return result


def l_i(
    sys: LtiSystem, i: int, region: Optional[StabilityRegion] = None, seed: int = 0
) -> SubspaceBasis:
    """Directed accumulation for output i: row-deleted core plus feasible
    directed slices at the region zeros."""
    _check_output_index(sys, i)
    region = region or sys.region()
    base = r_star_i(sys, i, seed)
    columns = [base.basis]
    for zero in invariant_zeros(sys).zeros:
        value = zero.value
        if not region.contains(value) or value.imag < 0.0:
            continue
        piece = r_hat_i(sys, i, value)
        if not piece.feasible or piece.dim == 0:
            continue
        basis = piece.state_span.basis
        if value.imag > 0.0:
            columns.extend([basis.real, basis.imag])
        else:
            columns.append(basis.real)
    return orthonormalize(np.hstack(columns), ambient_dim=sys.n, rtol=DERIVED_RTOL)


def complex_zero_decomposition(
    sys: LtiSystem,
    region: Optional[StabilityRegion] = None,
    kind: str = "Eg",
    i: Optional[int] = None,
    seed: int = 0,
) -> ComplexZeroFamily:
    """Split an accumulated subspace along the complex region-zero pairs.

    kind "Eg" decomposes the hidden-dynamics family (reachable core plus
    real-zero kernel slices, with one complex span per zero pair); kind
    "Li" does the same for the directed family of output i, and kind "Ti"
    for the row-deleted kernel family of output i.
    """
    if kind not in ("Eg", "Li", "Ti"):
        raise BadSpec(f"unknown decomposition kind {kind!r}")
    if kind != "Eg":
        if i is None:
            raise BadIndex("an output index is required for per-output decompositions")
        _check_output_index(sys, i)
    region = region or sys.region()
    structure = invariant_zeros(sys)
    region_zeros = [z for z in structure.zeros if region.contains(z.value)]
    real_values = [z.value for z in region_zeros if z.value.imag == 0.0]
    pair_values = [z.value for z in region_zeros if z.value.imag > 0.0]
    n = sys.n

    def slice_at(value):
        if kind == "Eg":
            return r_lambda(sys, value).state_basis
        if kind == "Ti":
            return r_i_lambda(sys, i, value).state_basis
        piece = r_hat_i(sys, i, value)
        if not piece.feasible:
            return SubspaceBasis(n, np.zeros((n, 0)))
        return piece.state_span

    if kind == "Eg":
        base = r_star(sys, seed)
    else:
        base = r_star_i(sys, i, seed)
    columns = [base.basis]
    for value in real_values:
        piece = slice_at(value)
        if piece.dim:
            columns.append(piece.basis.real)
    real_part = orthonormalize(np.hstack(columns), ambient_dim=n, rtol=DERIVED_RTOL)
    pairs = []
    for value in pair_values:
        upper = slice_at(value)
        pairs.append((upper, upper.conjugate()))
    return ComplexZeroFamily(kind, real_part, tuple(pairs), tuple(pair_values))
