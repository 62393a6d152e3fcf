"""Test utilities: span comparisons and random system generators."""

import numpy as np

from modesplit import (
    LtiSystem,
    ProblemSpec,
    check_problem,
    invariant_zeros,
    orthonormalize,
    principal_angles,
    r_star,
    subspace_sum_dim,
    validate_assumption1,
)
from modesplit.errors import ModesplitError

SPAN_TOL = 1e-8
STACK_TOL = 1e-9


def span_of(columns, n):
    """Orthonormal basis of the span of the given column list."""
    mat = np.asarray(columns, dtype=float).T.reshape(n, -1)
    return orthonormalize(mat, ambient_dim=n)


def max_principal_angle(a, b):
    angles = principal_angles(a, b)
    return float(np.max(angles)) if angles.size else 0.0


def assert_same_span(a, b, tol=SPAN_TOL):
    assert a.dim == b.dim, f"dims differ: {a.dim} vs {b.dim}"
    if a.dim:
        gap = max_principal_angle(a, b)
        assert gap <= tol, f"principal angle {gap:.2e} above {tol:.0e}"


def contains_span(big, small, rtol=STACK_TOL):
    """Stacked-rank containment test: small lies inside big."""
    return subspace_sum_dim([big, small], rtol) == big.dim


def random_square_system(rng):
    """Random continuous system with m = p and the baseline assumptions."""
    while True:
        n = int(rng.integers(2, 9))
        p = int(rng.integers(2, 4))
        sys = LtiSystem(
            rng.standard_normal((n, n)),
            rng.standard_normal((n, p)),
            rng.standard_normal((p, n)),
            rng.standard_normal((p, p)),
            "continuous",
        )
        if validate_assumption1(sys).ok:
            return sys


def random_wide_system(rng, min_core=2):
    """Random continuous system with m > p and a reachable core of at
    least the requested dimension."""
    while True:
        n = int(rng.integers(3, 7))
        p = int(rng.integers(1, 3))
        m = p + int(rng.integers(1, 3))
        sys = LtiSystem(
            rng.standard_normal((n, n)),
            rng.standard_normal((n, m)),
            rng.standard_normal((p, n)),
            rng.standard_normal((p, m)),
            "continuous",
        )
        if not validate_assumption1(sys).ok:
            continue
        if r_star(sys).dim >= min_core:
            return sys


def random_mixed_system(rng):
    """Random continuous system, square or wide at even odds."""
    while True:
        n = int(rng.integers(2, 7))
        p = int(rng.integers(1, 4))
        m = p if rng.random() < 0.5 else p + int(rng.integers(1, 3))
        sys = LtiSystem(
            rng.standard_normal((n, n)),
            rng.standard_normal((n, m)),
            rng.standard_normal((p, n)),
            rng.standard_normal((p, m)),
            "continuous",
        )
        if validate_assumption1(sys).ok:
            return sys


def solvable_spec(sys, rng, order=("1B", "2B")):
    """Search for a solvable problem instance on the given system.

    Tries hidden-mode counts from the forced minimum upward, spreads the
    assigned modes evenly over the outputs at random stable values away
    from the zeros, and returns the first spec whose check passes.
    """
    structure = invariant_zeros(sys)
    z_hidden = sum(z.geometric for z in structure.zeros if z.minimum_phase)
    n, p = sys.n, sys.p
    for nu0 in (z_hidden, z_hidden + 1, z_hidden + 2):
        total = n - nu0
        if total < 0:
            continue
        nu = [total // p] * p
        for i in range(total % p):
            nu[i] += 1
        values = []
        lam = -1.0
        while len(values) < total:
            lam -= float(rng.uniform(0.3, 0.9))
            if all(abs(lam - z.value) > 1e-3 for z in structure.zeros):
                values.append(lam)
        modes = []
        k = 0
        for count in nu:
            modes.append(tuple(values[k:k + count]))
            k += count
        for problem in order:
            spec = ProblemSpec(problem, tuple(nu), tuple(modes))
            try:
                report = check_problem(sys, spec)
            except ModesplitError:
                continue
            if report.verdict:
                return spec
    return None


def mu_set(r, rng):
    """Random self-conjugate list of r distinct values away from the
    origin and the imaginary axis."""
    values = []
    remaining = r
    while remaining >= 2 and rng.random() < 0.5:
        re = -float(rng.uniform(1.0, 5.0))
        im = float(rng.uniform(0.5, 3.0))
        values += [complex(re, im), complex(re, -im)]
        remaining -= 2
    lam = -0.5
    while remaining > 0:
        lam -= float(rng.uniform(0.4, 1.1))
        values.append(complex(lam))
        remaining -= 1
    return values
