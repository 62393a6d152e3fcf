"""LTI state-space model: ingestion, validation, stability regions.

A system is x' = Ax + Bu (or x+ = Ax + Bu), y = Cx + Du.  Systems are
loaded from a small JSON schema and validated for the standing structural
assumption: right invertibility, stabilizability, and no transmission
blocking at the steady-state point of the time domain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BadIndex, DimensionMismatch, InvalidMatrix, ParseError
from .linalg import DERIVED_RTOL, rank_of

_DOMAINS = ("continuous", "discrete")
_NORMAL_RANK_SEED = 20_240_601


@dataclass(frozen=True)
class StabilityRegion:
    """The open region of the complex plane where closed-loop modes may live.

    The default region is the open left half plane for continuous time and
    the open unit disc for discrete time.  A custom membership predicate can
    replace the default test; the steady-state point (0 or 1) is fixed by
    the domain tag regardless of the predicate.
    """

    domain: str
    predicate: Optional[Callable[[complex], bool]] = None

    def __post_init__(self):
        if self.domain not in _DOMAINS:
            raise ParseError(f"unknown domain {self.domain!r}")

    @classmethod
    def for_domain(cls, domain: str) -> "StabilityRegion":
        return cls(domain)

    def contains(self, lam) -> bool:
        lam = complex(lam)
        if self.predicate is not None:
            return bool(self.predicate(lam))
        if self.domain == "continuous":
            return lam.real < 0.0
        return abs(lam) < 1.0

    @property
    def steady_state_point(self) -> float:
        """The pencil point whose rank governs steady-state tracking."""
        return 0.0 if self.domain == "continuous" else 1.0


@dataclass(frozen=True)
class LtiSystem:
    """Immutable state-space quadruple with a time-domain tag."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    domain: str = "continuous"

    def __post_init__(self):
        mats = {}
        for name in ("A", "B", "C", "D"):
            raw = np.asarray(getattr(self, name))
            if raw.dtype == object:
                raise InvalidMatrix(f"{name} is not a numeric grid")
            if raw.ndim != 2:
                raise DimensionMismatch(f"{name} must be two-dimensional")
            mat = raw.astype(float)
            if mat.size and not np.all(np.isfinite(mat)):
                raise InvalidMatrix(f"{name} has non-finite entries")
            mat.setflags(write=False)
            mats[name] = mat
        n = mats["A"].shape[0]
        if mats["A"].shape != (n, n) or n < 1:
            raise DimensionMismatch(f"A must be square and nonempty, got {mats['A'].shape}")
        m = mats["B"].shape[1]
        if mats["B"].shape != (n, m) or m < 1:
            raise DimensionMismatch(f"B must be {n}xm with m >= 1, got {mats['B'].shape}")
        p = mats["C"].shape[0]
        if mats["C"].shape != (p, n):
            raise DimensionMismatch(f"C must be px{n}, got {mats['C'].shape}")
        if mats["D"].shape != (p, m):
            raise DimensionMismatch(f"D must be {p}x{m}, got {mats['D'].shape}")
        if self.domain not in _DOMAINS:
            raise ParseError(f"unknown domain {self.domain!r}")
        for name, mat in mats.items():
            object.__setattr__(self, name, mat)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def delete_output(self, i: int) -> "LtiSystem":
        """The system with output row i (1-based) removed."""
        if not 1 <= i <= self.p:
            raise BadIndex(f"output index {i} outside 1..{self.p}")
        keep = [r for r in range(self.p) if r != i - 1]
        return LtiSystem(self.A, self.B[:, :], self.C[keep, :], self.D[keep, :], self.domain)

    def region(self) -> StabilityRegion:
        return StabilityRegion.for_domain(self.domain)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the structural checks a problem instance relies on."""

    right_invertible: bool
    stabilizable: bool
    no_steady_state_zero: bool
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.right_invertible and self.stabilizable and self.no_steady_state_zero


def _matrix_from_json(raw, name: str) -> np.ndarray:
    if not isinstance(raw, list) or not raw:
        raise ParseError(f"{name} must be a nonempty list of rows")
    width = None
    for row in raw:
        if not isinstance(row, list):
            raise ParseError(f"{name} rows must be lists")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DimensionMismatch(f"{name} rows have inconsistent lengths")
        for entry in row:
            if isinstance(entry, bool) or not isinstance(entry, (int, float)):
                raise ParseError(f"{name} entries must be real numbers")
    return np.array(raw, dtype=float)


def load_system(text: str) -> LtiSystem:
    """Parse a system from its JSON description."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("system description must be a JSON object")
    for key in ("A", "B", "C", "D", "domain"):
        if key not in obj:
            raise ParseError(f"missing key {key!r}")
    domain = obj["domain"]
    if domain not in _DOMAINS:
        raise ParseError(f"domain must be one of {_DOMAINS}, got {domain!r}")
    mats = {name: _matrix_from_json(obj[name], name) for name in ("A", "B", "C", "D")}
    system = LtiSystem(mats["A"], mats["B"], mats["C"], mats["D"], domain)
    if system.p < 1:
        raise ParseError("system must have at least one output")
    return system


def dump_system(sys: LtiSystem) -> str:
    """Serialize a system back to its JSON description."""
    return json.dumps(
        {
            "A": sys.A.tolist(),
            "B": sys.B.tolist(),
            "C": sys.C.tolist(),
            "D": sys.D.tolist(),
            "domain": sys.domain,
        },
        indent=2,
    )


def system_pencil(sys: LtiSystem, lam) -> np.ndarray:
    """The (n+p) x (n+m) first-order pencil [[A - lam I, B], [C, D]]."""
    lam = complex(lam)
    if lam.imag == 0.0:
        lam = lam.real
    n = sys.n
    top = np.hstack([sys.A - lam * np.eye(n), sys.B])
    bottom = np.hstack([sys.C, sys.D])
    return np.vstack([top, bottom])


def normal_rank_pencil(sys: LtiSystem) -> int:
    """Generic rank of the system pencil, via deterministic sampling.

    Samples eight random real points away from the eigenvalues of A plus one
    point beyond the spectral radius; the maximum rank observed is the
    normal rank.
    """
    eigs = np.linalg.eigvals(sys.A)
    rng = np.random.default_rng(_NORMAL_RANK_SEED)
    samples = []
    while len(samples) < 8:
        lam = float(rng.uniform(-10.0, 10.0))
        if np.min(np.abs(eigs - lam)) > 1e-3:
            samples.append(lam)
    samples.append(1.0 + float(np.max(np.abs(eigs))))
    return max(rank_of(system_pencil(sys, lam), DERIVED_RTOL) for lam in samples)


def validate_assumption1(sys: LtiSystem, region: Optional[StabilityRegion] = None) -> ValidationReport:
    """Check right invertibility, stabilizability, and steady-state rank."""
    region = region or sys.region()
    rho = normal_rank_pencil(sys)
    right_invertible = rho == sys.n + sys.p
    unstabilizable = []
    for lam in np.linalg.eigvals(sys.A):
        if not region.contains(lam):
            pbh = np.hstack([sys.A - lam * np.eye(sys.n), sys.B])
            if rank_of(pbh, DERIVED_RTOL) < sys.n:
                unstabilizable.append(complex(lam))
    s0 = region.steady_state_point
    no_steady_state_zero = rank_of(system_pencil(sys, s0), DERIVED_RTOL) == rho
    details = {
        "normal_rank": rho,
        "unstabilizable_modes": tuple(unstabilizable),
        "steady_state_point": s0,
    }
    return ValidationReport(right_invertible, not unstabilizable, no_steady_state_zero, details)
