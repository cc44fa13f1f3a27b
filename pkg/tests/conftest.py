"""Shared fixtures: small/coarse reconstruction runs and the acceptance report.

Session-scoped fixtures hold expensive shared state (simulated data,
finished reconstructions, meshes).  Tests must treat them as read-only;
anything that wants to mutate a mesh or table builds its own.
"""

import time

import numpy as np
import pytest

from momenta_vt import forward, harmonics, kernels, pipeline, sie
from momenta_vt.geometry import build_chord_grid

# Small-but-complete configuration: every pipeline stage runs in well under
# a second, deep enough that no near-node rejection fires (the chord step
# 2/J must stay below the lowest mesh centroid height).
TINY = dict(K=64, N=128, J=40, M=8, mesh_diameter=0.35, neighborhood_radius=0.8)


@pytest.fixture(scope="session")
def tiny_cfg():
    return pipeline.ReconConfig(**TINY)


@pytest.fixture(scope="session")
def tiny_sin(tiny_cfg):
    return pipeline.simulate_sinogram(tiny_cfg)


@pytest.fixture(scope="session")
def tiny_recon(tiny_cfg, tiny_sin):
    return pipeline.reconstruct(tiny_cfg, tiny_sin)


@pytest.fixture(scope="session")
def coarse_cfg():
    return pipeline.ReconConfig.coarse_preset(phantom="experiment1")


@pytest.fixture(scope="session")
def coarse_sin(coarse_cfg):
    return pipeline.simulate_sinogram(coarse_cfg)


@pytest.fixture(scope="session")
def coarse_recon(coarse_cfg, coarse_sin):
    return pipeline.reconstruct(coarse_cfg, coarse_sin)


@pytest.fixture(scope="session")
def coarse_cfg2():
    return pipeline.ReconConfig.coarse_preset(phantom="experiment2")


@pytest.fixture(scope="session")
def coarse_sin2(coarse_cfg2):
    return pipeline.simulate_sinogram(coarse_cfg2)


@pytest.fixture(scope="session")
def coarse_recon2(coarse_cfg2, coarse_sin2):
    return pipeline.reconstruct(coarse_cfg2, coarse_sin2)


@pytest.fixture(scope="session")
def coarse_mesh(coarse_cfg):
    """Half-disc mesh at the coarse preset, neighborhoods attached.

    Shared read-only; tests that re-attach different neighborhoods or
    otherwise mutate the mesh must build a private one.
    """
    return pipeline.make_mesh(coarse_cfg)


@pytest.fixture(scope="session")
def reference_mesh():
    """Half-disc mesh at the production scale (diameter 0.0766, R = 0.15)."""
    return pipeline.make_mesh(pipeline.ReconConfig())


# ---------------------------------------------------------------------------
# expensive shared measurements (computed once, asserted in two places)

@pytest.fixture(scope="session")
def chord_solve_vs_oracle(coarse_cfg, coarse_sin):
    """Even chord solve against the direct ray-quadrature oracle.

    Returns (trimmed_gap, rhs_defect) for the shallowest even mode at the
    coarse preset: the relative L2 distance between solved and directly
    integrated chord values with 5% of the nodes dropped at each end, and
    the relative residual of the oracle values under the assembled system.
    """
    cfg, sin = coarse_cfg, coarse_sin
    chord = build_chord_grid(cfg.J)
    g0, _ = forward.build_boundary_data(sin)
    G0 = harmonics.fourier_modes(g0, "even", cfg.M, sin.dirs, arc=sin.arc)
    rhs0 = kernels.chord_rhs_table(G0, chord)
    system = sie.assemble(chord)
    V0 = sie.solve_modes(system, rhs0, parity="even", level=0)
    oracle = pipeline.chord_trace_oracle(
        pipeline.make_phantom(cfg.phantom), chord, sin.dirs, harmonics.mode_list("even", 4)
    )
    trim = int(round(0.05 * cfg.J))
    keep = slice(trim, cfg.J - trim)
    a = V0.values[keep, 0]
    b = oracle.values[keep, 0]
    gap = float(np.sqrt(np.sum(np.abs(a - b) ** 2) / np.sum(np.abs(b) ** 2)))
    lhs = system.matrix @ oracle.values[:, 0]
    r = rhs0[:, 0]
    defect = float(np.sqrt(np.sum(np.abs(lhs - r) ** 2) / np.sum(np.abs(r) ** 2)))
    return gap, defect


@pytest.fixture(scope="session")
def linearity_gap(coarse_cfg, coarse_sin, coarse_recon, coarse_sin2, coarse_recon2):
    """Relative departure from linearity of the coarse partial-data pipeline.

    Reconstructs a fixed linear combination of the two experiment sinograms
    and compares with the same combination of the individual outputs.
    """
    import dataclasses

    al, be = 0.7, -1.3
    combined = dataclasses.replace(
        coarse_sin,
        I0=al * coarse_sin.I0 + be * coarse_sin2.I0,
        I1=al * coarse_sin.I1 + be * coarse_sin2.I1,
        clean_I0=None,
        clean_I1=None,
    )
    rec3 = pipeline.reconstruct(coarse_cfg, combined)
    want1 = al * coarse_recon.f1 + be * coarse_recon2.f1
    want2 = al * coarse_recon.f2 + be * coarse_recon2.f2
    num = np.sqrt(np.sum((rec3.f1 - want1) ** 2 + (rec3.f2 - want2) ** 2))
    den = np.sqrt(np.sum(want1**2 + want2**2))
    return float(num / den)


# ---------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion in the final summary

_ACCEPTANCE_LINES: list = []
_SUITE_T0 = time.perf_counter()


def record_acceptance(ok: bool, line: str) -> None:
    _ACCEPTANCE_LINES.append((bool(ok), str(line)))


@pytest.fixture(scope="session")
def acceptance():
    """Recorder: call acceptance(ok, text) before asserting, so the summary
    carries one line per criterion even when the assert fails."""
    return record_acceptance


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for ok, line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(("PASS  " if ok else "FAIL  ") + line)
    n_fail = sum(1 for ok, _ in _ACCEPTANCE_LINES if not ok)
    terminalreporter.write_line(
        f"{len(_ACCEPTANCE_LINES) - n_fail}/{len(_ACCEPTANCE_LINES)} criteria lines passed; "
        f"suite wall time {time.perf_counter() - _SUITE_T0:.1f}s"
    )
