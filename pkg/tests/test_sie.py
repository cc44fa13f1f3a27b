"""Chord integral-equation system: assembly structure, solves, conditioning."""

import numpy as np
import numpy.testing as npt
import pytest

from momenta_vt import sie
from momenta_vt.geometry import build_chord_grid


def test_two_node_matrix_is_exact():
    # J=2 midpoint nodes at +/-0.5, step 1: off-diagonals are -i*step/(pi*dx).
    sys = sie.assemble(build_chord_grid(2))
    expected = np.array(
        [[1.0, 1j / np.pi], [-1j / np.pi, 1.0]], dtype=complex
    )
    npt.assert_array_equal(sys.matrix, expected)
    assert sys.J == 2
    assert sys.s == 1.0


def test_matrix_structure_unit_diagonal_antisymmetric_imaginary():
    sys = sie.assemble(build_chord_grid(17))
    A = sys.matrix
    npt.assert_array_equal(np.diagonal(A), np.ones(17, dtype=complex))
    # Off-diagonal part is purely imaginary and antisymmetric...
    off = A - np.eye(17)
    npt.assert_array_equal(off.real, np.zeros((17, 17)))
    npt.assert_allclose(off + off.T, np.zeros((17, 17)), atol=0.0)
    # ...which makes the whole matrix Hermitian.
    npt.assert_array_equal(A, A.conj().T)


def test_assemble_rejects_tiny_grids():
    from momenta_vt.geometry import ChordGrid

    one = ChordGrid(nodes=np.array([0.0]), step=2.0, half_length=1.0)
    with pytest.raises(ValueError, match="at least 2 nodes"):
        sie.assemble(one)
    with pytest.raises(ValueError, match="chord grid needs J >= 2"):
        build_chord_grid(1)


def test_apply_is_matrix_multiplication():
    sys = sie.assemble(build_chord_grid(9))
    rng = np.random.default_rng(7)
    v = rng.standard_normal((9, 3)) + 1j * rng.standard_normal((9, 3))
    npt.assert_array_equal(sys.apply(v), sys.matrix @ v)


def test_solve_inverts_apply():
    sys = sie.assemble(build_chord_grid(48))
    rng = np.random.default_rng(101)
    v = rng.standard_normal((48, 4)) + 1j * rng.standard_normal((48, 4))
    rhs = sys.apply(v)
    table = sie.solve_modes(sys, rhs, "even", 0)
    # Frozen round-trip accuracy 5.6e-16 at this size.
    err = np.abs(table.values - v).max() / np.abs(v).max()
    assert err < 1e-12
    assert table.parity == "even"
    assert table.level == 0
    assert table.M == 4


def test_reported_residual_is_tiny_on_a_good_solve():
    sys = sie.assemble(build_chord_grid(32))
    rng = np.random.default_rng(3)
    rhs = rng.standard_normal((32, 2)) + 1j * rng.standard_normal((32, 2))
    table = sie.solve_modes(sys, rhs, "odd", 1)
    assert sie.max_relative_residual(sys, rhs, table.values) < 1e-12


def test_batched_solve_matches_single_columns_bitwise():
    sys = sie.assemble(build_chord_grid(24))
    rng = np.random.default_rng(55)
    rhs = rng.standard_normal((24, 5)) + 1j * rng.standard_normal((24, 5))
    batch = sie.solve_modes(sys, rhs, "even", 0).values
    for m in range(5):
        single = sie.solve_modes(sys, rhs[:, m], "even", 0).values
        npt.assert_array_equal(batch[:, m], single[:, 0])


def test_solve_is_column_permutation_equivariant():
    sys = sie.assemble(build_chord_grid(24))
    rng = np.random.default_rng(56)
    rhs = rng.standard_normal((24, 6)) + 1j * rng.standard_normal((24, 6))
    perm = np.array([3, 0, 5, 1, 4, 2])
    direct = sie.solve_modes(sys, rhs[:, perm], "even", 0).values
    permuted = sie.solve_modes(sys, rhs, "even", 0).values[:, perm]
    npt.assert_array_equal(direct, permuted)


def test_one_dimensional_rhs_yields_single_mode_table():
    sys = sie.assemble(build_chord_grid(12))
    rng = np.random.default_rng(9)
    rhs = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    table = sie.solve_modes(sys, rhs, "odd", 1)
    assert table.values.shape == (12, 1)
    assert table.M == 1


def test_rhs_row_mismatch_is_reported():
    sys = sie.assemble(build_chord_grid(8))
    with pytest.raises(ValueError, match="rhs has 5 rows, system has 8 nodes"):
        sie.solve_modes(sys, np.zeros((5, 2), dtype=complex), "even", 0)


def test_negative_regularization_is_rejected():
    sys = sie.assemble(build_chord_grid(8))
    rhs = np.zeros((8, 1), dtype=complex)
    with pytest.raises(ValueError, match="regularization weight must be nonnegative"):
        sie.solve_modes(sys, rhs, "even", 0, tikhonov=-1e-12)


def test_tiny_regularization_matches_plain_solve():
    sys = sie.assemble(build_chord_grid(40))
    rng = np.random.default_rng(21)
    rhs = rng.standard_normal((40, 3)) + 1j * rng.standard_normal((40, 3))
    plain = sie.solve_modes(sys, rhs, "even", 0).values
    reg = sie.solve_modes(sys, rhs, "even", 0, tikhonov=1e-14).values
    npt.assert_allclose(reg, plain, atol=1e-8)


def test_condition_number_frozen_values_and_growth():
    # Frozen: cond ~ 46.05 at J=64 and ~ 86.51 at J=128; near-linear growth.
    c64 = sie.condition_number(sie.assemble(build_chord_grid(64)))
    c128 = sie.condition_number(sie.assemble(build_chord_grid(128)))
    npt.assert_allclose(c64, 46.05, rtol=5e-3)
    npt.assert_allclose(c128, 86.51, rtol=5e-3)
    assert c128 > c64
