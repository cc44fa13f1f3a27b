"""Numba and numpy kernel paths must agree to floating-point roundoff."""

import numpy as np
import numpy.testing as npt
import pytest

from momenta_vt import forward, kernels, pipeline
from momenta_vt.backend import HAS_NUMBA, backend, set_backend, set_threads
from momenta_vt.geometry import build_arc_grid, build_direction_grid
from momenta_vt.phantom import make_phantom

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba not importable")


@pytest.fixture
def restore_backend():
    before = backend()
    yield
    set_backend(before)


def test_active_backend_is_valid():
    assert backend() in ("numba", "numpy")


def test_set_backend_rejects_unknown_names(restore_backend):
    with pytest.raises(ValueError, match=r"backend 'cuda': expected one of \('numba', 'numpy'\)"):
        set_backend("cuda")


def test_set_threads_caps_to_one():
    assert set_threads(1) == 1


@needs_numba
def test_span_harmonics_agree_across_backends(coarse_mesh, restore_backend):
    pack = kernels.pack_triangles(coarse_mesh)
    c = 0.3 + 0.4j
    set_backend("numpy")
    a = kernels.psi_for_point(c, pack, 4, 256, "kinksplit")
    set_backend("numba")
    b = kernels.psi_for_point(c, pack, 4, 256, "kinksplit")
    # Frozen maximum disagreement 6.9e-17.
    assert np.abs(a - b).max() < 1e-14


@needs_numba
def test_ray_traces_agree_across_backends(restore_backend):
    spec = make_phantom("experiment1")
    arc = build_arc_grid(24)
    dirs = build_direction_grid(48)
    set_backend("numpy")
    ta = forward.simulate_traces(spec, arc, dirs, q=16)
    set_backend("numba")
    tb = forward.simulate_traces(spec, arc, dirs, q=16)
    # Frozen maximum disagreement 4.4e-16.
    assert np.abs(ta.v0 - tb.v0).max() < 1e-13
    assert np.abs(ta.v1 - tb.v1).max() < 1e-13
    npt.assert_array_equal(ta.mask, tb.mask)


@needs_numba
def test_tiny_reconstruction_agrees_across_backends(tiny_cfg, tiny_sin, restore_backend):
    set_backend("numpy")
    a = pipeline.reconstruct(tiny_cfg, tiny_sin)
    set_backend("numba")
    b = pipeline.reconstruct(tiny_cfg, tiny_sin)
    npt.assert_allclose(a.f1, b.f1, atol=1e-10)
    npt.assert_allclose(a.f2, b.f2, atol=1e-10)
