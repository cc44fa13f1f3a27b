"""Angular Fourier reduction: mode lists, exact coefficients, reality, energy."""

import warnings

import numpy as np
import numpy.testing as npt
import pytest

from momenta_vt import geometry, harmonics

K, N, M = 16, 64, 8
ARC = geometry.build_arc_grid(K)
DIRS = geometry.build_direction_grid(N)


def test_mode_lists_are_contiguous_negative():
    npt.assert_array_equal(harmonics.mode_list("even", 4), [-2, -4, -6, -8])
    npt.assert_array_equal(harmonics.mode_list("odd", 4), [-1, -3, -5, -7])
    with pytest.raises(ValueError, match="parity"):
        harmonics.mode_list("mixed", 4)


def test_mode_table_shape_validation():
    with pytest.raises(ValueError, match="shape"):
        harmonics.ModeTable(values=np.zeros((5, 3), complex), parity="even", M=4)
    with pytest.raises(ValueError, match="arc grid"):
        harmonics.ModeTable(values=np.zeros((5, 3), complex), parity="even", M=3, arc=ARC)
    tab = harmonics.ModeTable(values=np.zeros((K, 3), complex), parity="odd", M=3, arc=ARC)
    npt.assert_array_equal(tab.modes, [-1, -3, -5])


def test_constant_data_has_no_negative_modes():
    tab = harmonics.fourier_modes(np.ones((K, N)), "even", M, DIRS, arc=ARC)
    assert np.abs(tab.values).max() < 1e-12
    assert tab.arc is ARC


def test_single_cosine_lands_in_one_even_mode():
    g = np.cos(2 * DIRS.angles)[None, :] * np.ones((K, 1))
    tab = harmonics.fourier_modes(g, "even", M, DIRS, arc=ARC)
    idx = list(harmonics.mode_list("even", M)).index(-2)
    npt.assert_allclose(tab.values[:, idx], 0.5, atol=1e-12)
    assert np.abs(np.delete(tab.values, idx, axis=1)).max() < 1e-12


def test_single_sine_lands_in_one_odd_mode():
    g = np.sin(DIRS.angles)[None, :] * np.ones((K, 1))
    tab = harmonics.fourier_modes(g, "odd", M, DIRS, arc=ARC)
    idx = list(harmonics.mode_list("odd", M)).index(-1)
    npt.assert_allclose(tab.values[:, idx], 0.5j, atol=1e-12)
    assert np.abs(np.delete(tab.values, idx, axis=1)).max() < 1e-12


def test_real_data_reality_relation():
    """For real data the +|m| coefficient is the conjugate of the stored -|m| one."""
    rng = np.random.default_rng(5)
    g = rng.normal(size=(K, N))
    tab = harmonics.fourier_modes(g, "even", M, DIRS, arc=ARC)
    worst = 0.0
    for m in (-2, -4, -8, -16):
        plus = (g * np.exp(-1j * (-m) * DIRS.angles)[None, :]).sum(axis=1) / N
        stored = tab.values[:, list(harmonics.mode_list("even", M)).index(m)]
        worst = max(worst, float(np.abs(plus - np.conj(stored)).max()))
    assert worst < 1e-12


def test_mode_energy_bounded_by_data_energy():
    rng = np.random.default_rng(5)
    g = rng.normal(size=(K, N))
    tab = harmonics.fourier_modes(g, "even", M, DIRS, arc=ARC)
    lhs = (np.abs(tab.values) ** 2).sum(axis=1)
    rhs = (np.abs(g) ** 2).sum(axis=1) / N
    assert np.all(lhs <= rhs + 1e-10)


def test_linearity_of_the_reduction():
    rng = np.random.default_rng(8)
    g1 = rng.normal(size=(K, N))
    g2 = rng.normal(size=(K, N))
    t1 = harmonics.fourier_modes(g1, "odd", M, DIRS, arc=ARC).values
    t2 = harmonics.fourier_modes(g2, "odd", M, DIRS, arc=ARC).values
    t3 = harmonics.fourier_modes(2.0 * g1 - 0.5 * g2, "odd", M, DIRS, arc=ARC).values
    npt.assert_allclose(t3, 2.0 * t1 - 0.5 * t2, atol=1e-13)


def test_undersampled_depth_warns():
    g = np.zeros((K, N))
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always")
        harmonics.fourier_modes(g, "even", 20, DIRS, arc=ARC)
    messages = [str(w.message) for w in wlist]
    assert any("direction count N=64 < 4M=80" in m for m in messages)
    # and no warning at a safe depth
    with warnings.catch_warnings(record=True) as wlist:
        warnings.simplefilter("always")
        harmonics.fourier_modes(g, "even", M, DIRS, arc=ARC)
    assert not [w for w in wlist if "alias" in str(w.message).lower()]


def test_fourier_modes_input_validation():
    with pytest.raises(ValueError, match="mode order"):
        harmonics.fourier_modes(np.zeros((K, N)), "even", 0, DIRS, arc=ARC)
    with pytest.raises(ValueError, match="does not match direction count"):
        harmonics.fourier_modes(np.zeros((K, N + 2)), "even", M, DIRS, arc=ARC)


def test_modes_csv_layout(tmp_path):
    rng = np.random.default_rng(5)
    g = rng.normal(size=(K, N))
    tab = harmonics.fourier_modes(g, "even", M, DIRS, arc=ARC)
    path = tmp_path / "modes.csv"
    harmonics.write_modes_csv(tab, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,m,Re,Im"
    assert len(lines) - 1 == K * M
    # spot-check one row round-trips the complex value at full precision
    k, m, re, im = lines[1 + 3 * M + 2].split(",")
    a = list(harmonics.mode_list("even", M)).index(int(m))
    assert complex(float(re), float(im)) == tab.values[int(k), a]
