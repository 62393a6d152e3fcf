"""Invariant zero extraction from the system pencil."""

import numpy as np
import pytest

from modesplit import (
    LtiSystem,
    StabilityRegion,
    UnsupportedPencil,
    invariant_zeros,
    minimum_phase_zeros,
    rosenbrock,
)

# companion-form system whose transfer is (s+1)^2 / (s+3)^3: the zero at -1
# appears with a nontrivial chain (geometric 1, algebraic 2)
CHAIN_A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-27.0, -27.0, -9.0]])
CHAIN_B = np.array([[0.0], [0.0], [1.0]])
CHAIN_C = np.array([[1.0, 2.0, 1.0]])
CHAIN_D = np.array([[0.0]])


def test_sys_b_zero_structure(sys_b):
    structure = invariant_zeros(sys_b)
    assert structure.normal_rank == 5
    assert len(structure.zeros) == 1
    zero = structure.zeros[0]
    assert abs(zero.value - (-3.0)) <= 1e-6
    assert zero.geometric == 1 and zero.algebraic == 1
    assert zero.minimum_phase


def test_sys_c_zero_structure(sys_c):
    structure = invariant_zeros(sys_c)
    assert structure.normal_rank == 6
    stable = sorted(
        (z.value for z in structure.zeros if z.minimum_phase),
        key=lambda z: (z.real, z.imag),
    )
    expected = sorted(
        [-21.0, complex(-2.0, -np.sqrt(7.0)), complex(-2.0, np.sqrt(7.0))],
        key=lambda z: (z.real, z.imag),
    )
    assert len(stable) == 3
    for got, want in zip(stable, expected):
        assert abs(got - want) <= 1e-6
    unstable = [z.value for z in structure.zeros if not z.minimum_phase]
    assert len(unstable) == 1
    assert abs(unstable[0] - 1.0) <= 1e-6


def test_sys_c_complex_pairs(sys_c):
    structure = invariant_zeros(sys_c)
    pairs = structure.complex_pairs
    assert len(pairs) == 1
    assert abs(pairs[0].value.conjugate() - complex(-2.0, -np.sqrt(7.0))) <= 1e-6


def test_sys_a_has_no_zeros(sys_a):
    structure = invariant_zeros(sys_a)
    assert structure.zeros == ()


def test_rosenbrock_rank_drop(sys_b):
    normal = np.linalg.matrix_rank(rosenbrock(sys_b, 0.7))
    at_zero = np.linalg.matrix_rank(rosenbrock(sys_b, -3.0))
    assert normal == 5 and at_zero == 4


def test_defective_zero_rejected():
    sys = LtiSystem(CHAIN_A, CHAIN_B, CHAIN_C, CHAIN_D, "continuous")
    with pytest.raises(UnsupportedPencil, match="nontrivial chain"):
        invariant_zeros(sys)


def test_minimum_phase_filter(sys_c):
    structure = invariant_zeros(sys_c)
    region = StabilityRegion.for_domain("continuous")
    stable = minimum_phase_zeros(structure, region)
    assert stable.normal_rank == structure.normal_rank
    assert {round(z.value.real) for z in stable.zeros} == {-21, -2}
    assert all(z.minimum_phase for z in stable.zeros)
