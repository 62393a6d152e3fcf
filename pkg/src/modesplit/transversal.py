"""Counted span-dimension conditions and the nine-problem dispatcher.

A counted family is a list of subspaces, each carrying a required count,
optionally together with a ground subspace.  The solvability tests reduce
to checking, over every subset of the family, that the dimension of the
subspace sum meets the total required count.  A passing check certifies
that independent vectors can be drawn with the required multiplicities;
extract_transversal produces such a draw.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Optional

import numpy as np

from .errors import (
    BadSpec,
    DimensionMismatch,
    InfeasibleCounts,
    NoWitness,
    ProblemTooLarge,
)
from .linalg import DERIVED_RTOL, SubspaceBasis, rank_of, subspace_sum_dim
from .subspaces import (
    DirectedSlice,
    KernelSlice,
    complex_zero_decomposition,
    l_i,
    r_hat_i,
    r_i_lambda,
    r_lambda,
    r_star_i,
    v_star_g,
    v_star_g_i,
)
from .system import LtiSystem, StabilityRegion, validate_assumption1
from .zeros import invariant_zeros

_ENTRY_CAP = 2 ** 20
_COMBO_CAP = 20_000
_PROBLEMS = ("1A", "1B", "1C", "2A", "2B", "2C", "3A", "3B", "3C")
_MODE_ZERO_TOL = 1e-6
_DISTINCT_TOL = 1e-9


@dataclass(frozen=True)
class CountedMember:
    """One subspace of a counted family with its required count."""

    label: str
    basis: SubspaceBasis
    count: int
    source: object = None
    conjugate_of: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.count, (int, np.integer)) or self.count < 0:
            raise BadSpec(f"member {self.label!r} has invalid count {self.count!r}")


@dataclass(frozen=True)
class CountedFamily:
    """A counted family, optionally with a ground subspace and its count."""

    members: tuple
    ground: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if self.ground is not None:
            basis, count = self.ground
            if not isinstance(count, (int, np.integer)) or count < 0:
                raise BadSpec(f"ground count {count!r} is invalid")
            object.__setattr__(self, "ground", (basis, int(count)))

    @property
    def ambient_dim(self) -> Optional[int]:
        if self.ground is not None:
            return self.ground[0].ambient_dim
        if self.members:
            return self.members[0].basis.ambient_dim
        return None


@dataclass(frozen=True)
class LedgerEntry:
    """One subset row of a condition check."""

    subset: tuple
    achieved: int
    required: int
    passed: bool


@dataclass(frozen=True)
class ConditionLedger:
    """All subset rows of one condition check plus the overall verdict."""

    entries: tuple
    verdict: bool
    witness: Optional[np.ndarray] = None


def _check_family_ambient(family: CountedFamily) -> int:
    ambient = family.ambient_dim
    if ambient is None:
        raise BadSpec("family has no members and no ground")
    for member in family.members:
        if member.basis.ambient_dim != ambient:
            raise DimensionMismatch(
                f"member {member.label!r} lives in dimension "
                f"{member.basis.ambient_dim}, family in {ambient}"
            )
    return ambient


def _same_span(a: SubspaceBasis, b: SubspaceBasis, rtol) -> bool:
    if a.dim != b.dim:
        return False
    if a.dim == 0:
        return True
    return subspace_sum_dim([a, b], rtol) == a.dim


def check_counted(family: CountedFamily, rtol=None) -> ConditionLedger:
    """Subset dimension test: every subset's span must cover its counts.

    Members with identical spans are merged with summed counts; members
    with required count zero are dropped.  One ledger entry is produced
    per subset of the surviving members (the ground subspace, when
    present, participates in every entry with its own count).
    """
    if rtol is None:
        rtol = DERIVED_RTOL
    _check_family_ambient(family)
    active = [m for m in family.members if m.count > 0]
    merged = []
    for member in active:
        for idx, existing in enumerate(merged):
            if _same_span(existing.basis, member.basis, rtol):
                merged[idx] = CountedMember(
                    f"{existing.label}+{member.label}",
                    existing.basis,
                    existing.count + member.count,
                )
                break
        else:
            merged.append(member)
    k = len(merged)
    if 2 ** k > _ENTRY_CAP:
        raise ProblemTooLarge(f"{k} distinct members exceed the subset budget")
    ground = family.ground
    entries = []
    verdict = True
    for size in range(k + 1):
        for subset in combinations(range(k), size):
            bases = [merged[j].basis for j in subset]
            required = sum(merged[j].count for j in subset)
            labels = tuple(merged[j].label for j in subset)
            if ground is not None:
                bases = [ground[0]] + bases
                required += ground[1]
                labels = ("ground",) + labels
            achieved = subspace_sum_dim(bases, rtol) if bases else 0
            passed = achieved >= required
            verdict = verdict and passed
            entries.append(LedgerEntry(labels, achieved, required, passed))
    return ConditionLedger(tuple(entries), verdict)


def check_bounded(family: CountedFamily, ground: SubspaceBasis, n: int, rtol=None) -> ConditionLedger:
    """Bounded-count test: members are expanded into single-count copies.

    With q total copies and a ground of dimension h, feasibility requires
    h >= n - q; every subset S with card S > h - (n - q) must then satisfy
    dim(ground + span S) >= (n - q) + card S.
    """
    if rtol is None:
        rtol = DERIVED_RTOL
    copies = []
    for member in family.members:
        if member.basis.ambient_dim != ground.ambient_dim:
            raise DimensionMismatch(
                f"member {member.label!r} lives in dimension "
                f"{member.basis.ambient_dim}, ground in {ground.ambient_dim}"
            )
        for c in range(member.count):
            label = member.label if member.count == 1 else f"{member.label}#{c + 1}"
            copies.append((label, member.basis))
    q = len(copies)
    h = ground.dim
    if h < n - q:
        raise InfeasibleCounts(
            f"ground dimension {h} cannot supply the {n - q} hidden directions"
        )
    if 2 ** q > _ENTRY_CAP:
        raise ProblemTooLarge(f"{q} member copies exceed the subset budget")
    gate = h - (n - q)
    entries = []
    verdict = True
    for size in range(q + 1):
        if size <= gate:
            continue
        for subset in combinations(range(q), size):
            bases = [ground] + [copies[j][1] for j in subset]
            required = (n - q) + size
            achieved = subspace_sum_dim(bases, rtol)
            passed = achieved >= required
            verdict = verdict and passed
            labels = ("ground",) + tuple(copies[j][0] for j in subset)
            entries.append(LedgerEntry(labels, achieved, required, passed))
    if not entries:
        entries.append(LedgerEntry(("ground",), h, n - q, True))
    return ConditionLedger(tuple(entries), verdict)


def extract_transversal(family: CountedFamily, seed: int = 0, max_retries: int = 50, rtol=None) -> np.ndarray:
    """Draw an independent vector set honoring every member count.

    Returns a full-column-rank matrix with one column per required draw:
    ground draws first, then member draws in family order.  Members marked
    conjugate_of reuse the conjugated draws of their partner.  Raises
    NoWitness when repeated random draws never reach full rank.
    """
    if rtol is None:
        rtol = DERIVED_RTOL
    ambient = _check_family_ambient(family)
    rng = np.random.default_rng(seed)
    base_members = [m for m in family.members if m.conjugate_of is None]
    mirror_members = [m for m in family.members if m.conjugate_of is not None]
    labels = {m.label for m in family.members}
    for member in mirror_members:
        if member.conjugate_of not in labels:
            raise BadSpec(
                f"member {member.label!r} mirrors unknown member {member.conjugate_of!r}"
            )
    total = sum(m.count for m in family.members)
    if family.ground is not None:
        total += family.ground[1]
    if total == 0:
        return np.zeros((ambient, 0))

    def draw_vector(member):
        source = member.source
        if isinstance(source, DirectedSlice) and source.feasible and source.affine is not None:
            directions = source.affine.directions
            coeff = _gaussian(rng, directions.dim, directions.is_complex)
            point = source.affine.sample(coeff)
            return point[:ambient]
        basis = member.basis
        coeff = _gaussian(rng, basis.dim, basis.is_complex)
        return basis.basis @ coeff if basis.dim else np.zeros(ambient)

    for _ in range(max_retries):
        draws = {}
        for member in base_members:
            draws[member.label] = [draw_vector(member) for _ in range(member.count)]
        ok = True
        for member in mirror_members:
            partner = draws.get(member.conjugate_of)
            if partner is None or len(partner) != member.count:
                raise BadSpec(
                    f"member {member.label!r} needs {member.count} mirrored draws"
                )
            draws[member.label] = [np.conj(v) for v in partner]
        columns = []
        if family.ground is not None:
            gbasis, gcount = family.ground
            for _ in range(gcount):
                coeff = _gaussian(rng, gbasis.dim, gbasis.is_complex)
                if gbasis.dim == 0:
                    ok = False
                    break
                columns.append(gbasis.basis @ coeff)
        if not ok:
            break
        for member in family.members:
            columns.extend(draws[member.label])
        stacked = np.column_stack(columns)
        if rank_of(stacked, rtol) == total:
            return stacked
    raise NoWitness(f"no independent draw of {total} vectors found")


def _gaussian(rng, size: int, want_complex: bool):
    if size == 0:
        return np.zeros(0)
    real = rng.standard_normal(size)
    if want_complex:
        return real + 1j * rng.standard_normal(size)
    return real


@dataclass(frozen=True)
class ProblemSpec:
    """One decoupling problem instance.

    problem names the variant ("1A" through "3C").  nu gives the
    per-output observable mode counts (exact for problems 1 and 2, upper
    bounds for problem 3).  modes lists the assigned observable values per
    output for variants A and B; unobservable_modes lists the assigned
    hidden values for variant A.  region optionally overrides the default
    stability region.
    """

    problem: str
    nu: tuple
    modes: tuple = ()
    unobservable_modes: tuple = ()
    region: Optional[StabilityRegion] = None

    def __post_init__(self):
        if self.problem not in _PROBLEMS:
            raise BadSpec(f"unknown problem {self.problem!r}")
        nu = tuple(int(v) for v in self.nu)
        if any(v < 0 for v in nu):
            raise BadSpec("mode counts must be nonnegative")
        if tuple(self.nu) != nu and any(
            not isinstance(v, (int, np.integer)) for v in self.nu
        ):
            raise BadSpec("mode counts must be integers")
        object.__setattr__(self, "nu", nu)
        modes = tuple(tuple(float(x) for x in row) for row in self.modes)
        object.__setattr__(self, "modes", modes)
        hidden = tuple(float(x) for x in self.unobservable_modes)
        object.__setattr__(self, "unobservable_modes", hidden)
        variant = self.variant
        if variant in ("A", "B"):
            if len(modes) != len(nu):
                raise BadSpec(
                    f"problem {self.problem} needs one mode list per output"
                )
            for i, row in enumerate(modes, start=1):
                if len(row) != nu[i - 1]:
                    raise BadSpec(
                        f"output {i} lists {len(row)} modes but count is {nu[i - 1]}"
                    )
        else:
            if any(row for row in modes):
                raise BadSpec(f"problem {self.problem} takes no assigned modes")
            object.__setattr__(self, "modes", ())
        if variant != "A" and hidden:
            raise BadSpec(f"problem {self.problem} takes no assigned hidden modes")

    @property
    def variant(self) -> str:
        return self.problem[1]

    @property
    def index(self) -> str:
        return self.problem[0]

    def assigned_pairs(self):
        """All (output, value) pairs of assigned observable modes."""
        return [
            (i, lam)
            for i, row in enumerate(self.modes, start=1)
            for lam in row
        ]


@dataclass(frozen=True)
class SolvabilityReport:
    """Verdict of check_problem together with every condition ledger."""

    problem: str
    verdict: bool
    ledgers: tuple
    hidden_split: Optional[tuple] = None
    output_splits: Optional[tuple] = None
    selection: Optional[tuple] = None
    notes: tuple = ()


def _validate_problem_modes(sys, spec, region, zero_values, hidden_count):
    if spec.variant == "A" and len(spec.unobservable_modes) != hidden_count:
        raise BadSpec(
            f"problem {spec.problem} must assign exactly {hidden_count} hidden modes, "
            f"got {len(spec.unobservable_modes)}"
        )
    observable = [lam for _, lam in spec.assigned_pairs()]
    assigned = list(observable)
    if spec.variant == "A":
        assigned = assigned + list(spec.unobservable_modes)
    for lam in assigned:
        if not region.contains(lam):
            raise BadSpec(f"assigned mode {lam} lies outside the stability region")
    for a, b in combinations(assigned, 2):
        if abs(a - b) <= _DISTINCT_TOL:
            raise BadSpec(f"assigned modes must be pairwise distinct, found {a} twice")
    if spec.index == "1":
        # Only the observable modes are barred from invariant zeros; hidden
        # modes often must sit exactly on a zero to be unobservable at all.
        for lam in observable:
            if any(abs(lam - z) <= _MODE_ZERO_TOL for z in zero_values):
                raise BadSpec(
                    f"assigned mode {lam} coincides with an invariant zero"
                )


def _observable_members(sys, spec, mode_lists=None):
    """Counted members for assigned observable modes (variants A and B)."""
    members = []
    lists = spec.modes if mode_lists is None else mode_lists
    directed = spec.index == "2"
    n = sys.n
    for i, row in enumerate(lists, start=1):
        for j, lam in enumerate(row, start=1):
            label = f"out{i}.{j}@{lam:g}"
            if directed:
                piece = r_hat_i(sys, i, lam)
                if piece.feasible:
                    members.append(CountedMember(label, piece.state_span, 1, source=piece))
                else:
                    empty = SubspaceBasis(n, np.zeros((n, 0)))
                    members.append(CountedMember(label, empty, 1))
            else:
                piece = r_i_lambda(sys, i, lam)
                members.append(CountedMember(label, piece.state_basis, 1, source=piece))
    return members


def _hidden_kernel_members(sys, spec):
    """Counted members for assigned hidden modes (variant A)."""
    members = []
    for k, lam in enumerate(spec.unobservable_modes, start=1):
        piece = r_lambda(sys, lam)
        members.append(
            CountedMember(f"hidden.{k}@{lam:g}", piece.state_basis, 1, source=piece)
        )
    return members


def _pair_splits(total: int, pairs: int):
    """All (base, pair counts...) with base + 2 * sum(pairs) == total, sorted."""
    out = []
    for rest in product(range(total // 2 + 1), repeat=pairs):
        doubled = 2 * sum(rest)
        if doubled <= total:
            out.append((total - doubled,) + rest)
    out.sort()
    return out


def _decomposition_members(tag: str, decomposition, split):
    """Counted members realizing one split of a zero-pair decomposition."""
    members = []
    if split[0] > 0:
        members.append(CountedMember(f"{tag}.0", decomposition.real_part_span, split[0]))
    for j, (upper, lower) in enumerate(decomposition.pair_spans, start=1):
        if split[j] > 0:
            members.append(CountedMember(f"{tag}.{j}", upper, split[j]))
            members.append(
                CountedMember(
                    f"{tag}.{j}~", lower, split[j], conjugate_of=f"{tag}.{j}"
                )
            )
    return members


def _failed_ledger(label_tuple, achieved, required):
    entry = LedgerEntry(label_tuple, achieved, required, False)
    return ConditionLedger((entry,), False)


def _real_case_ledgers(sys, spec, region, hidden_count, rtol, seed):
    """The real-shaped condition ledgers for variants B and C.

    These are the full test when no complex region zeros exist and the
    necessary prescreen otherwise.
    """
    problem = spec.problem
    n = sys.n
    if problem in ("1B", "2B"):
        members = _observable_members(sys, spec)
        ground = (v_star_g(sys, region, seed), hidden_count)
        with_ground = check_counted(CountedFamily(tuple(members), ground), rtol)
        members_only = check_counted(CountedFamily(tuple(members)), rtol)
        ledgers = [("with ground", with_ground), ("members only", members_only)]
        return ledgers, with_ground.verdict and members_only.verdict
    if problem in ("1C", "2C"):
        members = []
        for i in range(1, sys.p + 1):
            if problem == "1C":
                basis = r_star_i(sys, i, seed)
                label = f"core{i}"
            else:
                basis = l_i(sys, i, region, seed)
                label = f"directed{i}"
            members.append(CountedMember(label, basis, spec.nu[i - 1]))
        ground = (v_star_g(sys, region, seed), hidden_count)
        with_ground = check_counted(CountedFamily(tuple(members), ground), rtol)
        members_only = check_counted(CountedFamily(tuple(members)), rtol)
        ledgers = [("with ground", with_ground), ("members only", members_only)]
        return ledgers, with_ground.verdict and members_only.verdict
    if problem == "3B":
        members = _observable_members(sys, spec)
        ground = v_star_g(sys, region, seed)
        try:
            ledger = check_bounded(CountedFamily(tuple(members)), ground, n, rtol)
        except InfeasibleCounts:
            q = sum(spec.nu)
            ledger = _failed_ledger(("ground",), ground.dim, n - q)
        return [("bounded", ledger)], ledger.verdict
    if problem == "3C":
        members = [
            CountedMember(f"deleted{i}", v_star_g_i(sys, i, region, seed), spec.nu[i - 1])
            for i in range(1, sys.p + 1)
        ]
        ground = (v_star_g(sys, region, seed), hidden_count)
        with_ground = check_counted(CountedFamily(tuple(members), ground), rtol)
        return [("with ground", with_ground)], with_ground.verdict
    raise BadSpec(f"problem {problem} has no real-shaped ledger")


def _search_single_split(sys, spec, region, hidden_count, rtol, seed, observable_members):
    """Split search where only the hidden counts split over zero pairs."""
    decomposition = complex_zero_decomposition(sys, region, "Eg", seed=seed)
    splits = _pair_splits(hidden_count, len(decomposition.pair_spans))
    first = None
    for split in splits:
        members = _decomposition_members("Eg", decomposition, split) + observable_members
        ledger = check_counted(CountedFamily(tuple(members)), rtol)
        if first is None:
            first = (split, ledger)
        if ledger.verdict:
            return split, ledger, True
    return first[0], first[1], False


def _search_output_splits(sys, spec, region, hidden_count, rtol, seed, kind, counts):
    """Split search where hidden and per-output counts all split over pairs."""
    eg = complex_zero_decomposition(sys, region, "Eg", seed=seed)
    pairs = len(eg.pair_spans)
    per_output = [
        complex_zero_decomposition(sys, region, kind, i, seed)
        for i in range(1, sys.p + 1)
    ]
    split_lists = [_pair_splits(hidden_count, pairs)] + [
        _pair_splits(counts[i - 1], pairs) for i in range(1, sys.p + 1)
    ]
    combos = 1
    for lst in split_lists:
        combos *= len(lst)
    if combos > _COMBO_CAP:
        raise ProblemTooLarge(f"split search space of {combos} combinations")
    first = None
    for combo in product(*split_lists):
        members = _decomposition_members("Eg", eg, combo[0])
        for i in range(1, sys.p + 1):
            members += _decomposition_members(f"T{i}" if kind == "Ti" else f"L{i}",
                                              per_output[i - 1], combo[i])
        ledger = check_counted(CountedFamily(tuple(members)), rtol)
        if first is None:
            first = (combo, ledger)
        if ledger.verdict:
            return combo, ledger, True
    return first[0], first[1], False


def _search_selection_splits(sys, spec, region, rtol, seed):
    """Problem 3B with complex zero pairs: choose modes, then split hidden."""
    eg = complex_zero_decomposition(sys, region, "Eg", seed=seed)
    pairs = len(eg.pair_spans)
    n = sys.n
    per_output_subsets = []
    for row in spec.modes:
        subsets = []
        for size in range(len(row), -1, -1):
            for chosen in combinations(row, size):
                subsets.append(chosen)
        per_output_subsets.append(subsets)
    combos = 1
    for lst in per_output_subsets:
        combos *= len(lst)
    if combos > _COMBO_CAP:
        raise ProblemTooLarge(f"selection search space of {combos} combinations")
    first = None
    for selection in product(*per_output_subsets):
        hidden_count = n - sum(len(chosen) for chosen in selection)
        observable = _observable_members(sys, spec, mode_lists=selection)
        for split in _pair_splits(hidden_count, pairs):
            members = _decomposition_members("Eg", eg, split) + observable
            ledger = check_counted(CountedFamily(tuple(members)), rtol)
            if first is None:
                first = (selection, split, ledger)
            if ledger.verdict:
                return selection, split, ledger, True
    return first[0], first[1], first[2], False


def check_problem(sys: LtiSystem, spec: ProblemSpec, rtol=None, seed: int = 0) -> SolvabilityReport:
    """Decide solvability of one decoupling problem instance."""
    region = spec.region or sys.region()
    assumption = validate_assumption1(sys, region)
    if not assumption.ok:
        raise BadSpec(
            "system violates the standing assumption: "
            f"right invertible {assumption.right_invertible}, "
            f"stabilizable {assumption.stabilizable}, "
            f"steady-state rank {assumption.no_steady_state_zero}"
        )
    n, p = sys.n, sys.p
    if len(spec.nu) != p:
        raise BadSpec(f"spec lists {len(spec.nu)} outputs, system has {p}")
    total = sum(spec.nu)
    if total > n:
        raise BadSpec(f"total mode count {total} exceeds state dimension {n}")
    hidden_count = n - total
    structure = invariant_zeros(sys, rtol)
    zero_values = structure.values()
    _validate_problem_modes(sys, spec, region, zero_values, hidden_count)
    pair_count = sum(
        1 for z in structure.zeros if region.contains(z.value) and z.value.imag > 0.0
    )

    if spec.variant == "A":
        members = _hidden_kernel_members(sys, spec) + _observable_members(sys, spec)
        ledger = check_counted(CountedFamily(tuple(members)), rtol)
        return SolvabilityReport(spec.problem, ledger.verdict, (("counted", ledger),))

    real_ledgers, real_verdict = _real_case_ledgers(
        sys, spec, region, hidden_count, rtol, seed
    )
    if pair_count == 0:
        return SolvabilityReport(spec.problem, real_verdict, tuple(real_ledgers))

    # Complex region zeros present: the real-shaped ledgers are necessary
    # conditions; a passing split over the zero pairs is needed on top.
    if not real_verdict:
        return SolvabilityReport(
            spec.problem,
            False,
            tuple(real_ledgers),
            notes=("real-shaped necessary conditions failed; split search skipped",),
        )

    if spec.problem in ("1B", "2B"):
        observable = _observable_members(sys, spec)
        split, ledger, ok = _search_single_split(
            sys, spec, region, hidden_count, rtol, seed, observable
        )
        ledgers = tuple(real_ledgers) + ((f"split {split}", ledger),)
        return SolvabilityReport(
            spec.problem, ok, ledgers, hidden_split=split if ok else None
        )
    if spec.problem == "1C":
        observable = [
            CountedMember(f"core{i}", r_star_i(sys, i, seed), spec.nu[i - 1])
            for i in range(1, p + 1)
        ]
        split, ledger, ok = _search_single_split(
            sys, spec, region, hidden_count, rtol, seed, observable
        )
        ledgers = tuple(real_ledgers) + ((f"split {split}", ledger),)
        return SolvabilityReport(
            spec.problem, ok, ledgers, hidden_split=split if ok else None
        )
    if spec.problem in ("2C", "3C"):
        kind = "Li" if spec.problem == "2C" else "Ti"
        combo, ledger, ok = _search_output_splits(
            sys, spec, region, hidden_count, rtol, seed, kind, spec.nu
        )
        ledgers = tuple(real_ledgers) + ((f"split {combo}", ledger),)
        return SolvabilityReport(
            spec.problem,
            ok,
            ledgers,
            hidden_split=combo[0] if ok else None,
            output_splits=combo if ok else None,
        )
    if spec.problem == "3B":
        selection, split, ledger, ok = _search_selection_splits(
            sys, spec, region, rtol, seed
        )
        ledgers = tuple(real_ledgers) + ((f"selection {selection} split {split}", ledger),)
        return SolvabilityReport(
            spec.problem,
            ok,
            ledgers,
            hidden_split=split if ok else None,
            selection=selection if ok else None,
        )
    raise BadSpec(f"problem {spec.problem} is not dispatchable")
