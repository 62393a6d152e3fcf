"""Feedback and feedforward synthesis."""

import numpy as np
import pytest

from modesplit import (
    BadSpec,
    LtiSystem,
    NotStabilized,
    ProblemSpec,
    SynthesisFailed,
    check_decoupling,
    closed_loop_static_gain,
    feedforward_gain,
    friend_of_rstar,
    r_star,
    synthesize_feedback,
)

SYS_B_1A = ProblemSpec(
    "1A", (1, 1), ((-2.0,), (-4.0,)), unobservable_modes=(-3.0,)
)


def scalar_system(a, domain="continuous", c=1.0, d=0.0):
    return LtiSystem(
        np.array([[a]]), np.array([[1.0]]), np.array([[c]]), np.array([[d]]), domain
    )


def test_feedforward_scalar_continuous():
    # static gain of dx = -x + u, y = 2x is 2, so the reference gain halves
    sys = scalar_system(-1.0, c=2.0)
    G = feedforward_gain(sys, np.zeros((1, 1)))
    assert np.allclose(G, [[0.5]])


def test_feedforward_scalar_discrete():
    # static gain of x+ = 0.5 x + u is 1 / (1 - 0.5) = 2
    sys = scalar_system(0.5, domain="discrete")
    G = feedforward_gain(sys, np.zeros((1, 1)))
    assert np.allclose(G, [[0.5]])


def test_feedforward_requires_stability():
    sys = scalar_system(1.0)
    with pytest.raises(NotStabilized):
        feedforward_gain(sys, np.zeros((1, 1)))


def test_static_gain_formulas():
    sys = scalar_system(-2.0, c=3.0, d=1.0)
    # continuous: D - C A^{-1} B
    assert np.allclose(closed_loop_static_gain(sys, np.zeros((1, 1))), [[2.5]])
    disc = scalar_system(0.5, domain="discrete", c=1.0, d=1.0)
    # discrete: C (I - A)^{-1} B + D
    assert np.allclose(closed_loop_static_gain(disc, np.zeros((1, 1))), [[3.0]])


def test_friend_golden(sys_a):
    core = r_star(sys_a)
    mus = [-2.0, -4.0]
    F = friend_of_rstar(sys_a, mus, seed=0)
    assert F.shape == (sys_a.m, sys_a.n)
    assert np.isrealobj(F)
    Q = core.basis
    proj = Q @ Q.T
    closed = sys_a.A + sys_a.B @ F
    assert np.linalg.norm((np.eye(3) - proj) @ closed @ proj) <= 1e-8
    assert np.linalg.norm((sys_a.C + sys_a.D @ F) @ proj) <= 1e-8
    restricted = Q.T @ closed @ Q
    eigs = sorted(np.linalg.eigvals(restricted).real)
    assert np.allclose(eigs, sorted(mus), atol=1e-6)


def test_friend_complex_pair(sys_a):
    mus = [complex(-3.0, 1.0), complex(-3.0, -1.0)]
    F = friend_of_rstar(sys_a, mus, seed=0)
    assert np.isrealobj(F)
    Q = r_star(sys_a).basis
    eigs = np.linalg.eigvals(Q.T @ (sys_a.A + sys_a.B @ F) @ Q)
    got = sorted(eigs, key=lambda z: z.imag)
    want = sorted(mus, key=lambda z: z.imag)
    assert all(abs(a - b) <= 1e-6 for a, b in zip(got, want))


def test_friend_validates_value_lists(sys_a):
    with pytest.raises(BadSpec):
        friend_of_rstar(sys_a, [-2.0])
    with pytest.raises(BadSpec):
        friend_of_rstar(sys_a, [-2.0, -2.0])
    with pytest.raises(BadSpec):
        # a lone complex value has no conjugate partner
        friend_of_rstar(sys_a, [complex(-2.0, 1.0), -4.0])


def test_synthesis_round_trip(sys_b):
    sol = synthesize_feedback(sys_b, SYS_B_1A, seed=0)
    assert sol.F.shape == (2, 3)
    assert sol.G.shape == (2, 2)
    closed = sys_b.A + sys_b.B @ sol.F
    eigs = sorted(np.linalg.eigvals(closed).real)
    assert np.allclose(eigs, [-4.0, -3.0, -2.0], atol=1e-6)
    report = check_decoupling(sys_b, sol.F, SYS_B_1A)
    assert report.passed
    static = closed_loop_static_gain(sys_b, sol.F)
    assert np.max(np.abs(static @ sol.G - np.eye(2))) <= 1e-8


def test_synthesis_slots_cover_all_modes(sys_b):
    sol = synthesize_feedback(sys_b, SYS_B_1A, seed=0)
    values = sorted(s.value.real for s in sol.slots)
    assert np.allclose(values, [-4.0, -3.0, -2.0], atol=1e-6)


def test_synthesis_is_deterministic(sys_b):
    first = synthesize_feedback(sys_b, SYS_B_1A, seed=3)
    second = synthesize_feedback(sys_b, SYS_B_1A, seed=3)
    assert np.array_equal(first.F, second.F)
    assert np.array_equal(first.G, second.G)


def test_synthesis_rejects_unsolvable(sys_c):
    spec = ProblemSpec("1B", (1, 1), ((-3.0,), (-5.0,)))
    with pytest.raises(SynthesisFailed):
        synthesize_feedback(sys_c, spec, seed=0)
