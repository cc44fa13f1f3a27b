"""End-to-end reconstruction drivers and evaluation metrics.

Two variants share one staging skeleton:

* partial-boundary data: angular modes of the measured arc data, a chord
  singular-equation solve per parity (the second one sourced by the area
  term of the already-recovered even modes), interior extension, and
  least-squares differentiation on the half-disc mesh;
* full-boundary data: the chord solves disappear, the interior extension
  uses boundary sums only, and all interior work happens on the mirrored
  full-disc mesh (the area term integrates over the whole disc); the output
  field is restricted back to the half-disc mesh.

Stages emit timing/diagnostic records (JSON-serializable dicts) and the
expensive interior tables can be checkpointed to .npz files keyed by a
hash of the configuration and the input data.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .backend import backend
from .calculus import FieldOnMesh, assemble_F1, assemble_field, differentiate
from .forward import (
    Sinogram,
    add_noise,
    build_boundary_data,
    simulate_traces,
    traces_to_sinograms,
)
from .geometry import (
    ChordGrid,
    DirectionGrid,
    Triangulation,
    build_arc_grid,
    build_chord_grid,
    build_circle_grid,
    build_direction_grid,
    mirror_triangulation,
    neighborhoods,
    triangulate_half_disc,
)
from .harmonics import fourier_modes, mode_list
from .kernels import (
    ChordModeTable,
    InteriorModeTable,
    area_term_all_modes,
    area_term_single,
    chord_rhs_table,
    extension_table,
    pack_triangles,
    psi_for_point,
)
from .phantom import PhantomSpec, eval_field, make_phantom
from .sie import assemble, max_relative_residual, solve_modes

log = logging.getLogger(__name__)

MODES = ("partial", "full")
UPPER_Y_CUTOFF = 0.1
REGIONS = ("all", "upper")


@dataclass(frozen=True)
class ReconConfig:
    """Run parameters; the defaults are the production-scale settings."""

    K: int = 720
    N: int = 1440
    J: int = 458
    M: int = 128
    mesh_diameter: float = 0.0766
    neighborhood_radius: float = 0.15
    Q_psi: int = 512
    quad_order: int = 32
    mode: str = "partial"
    phantom: str = "experiment1"
    noise_level: float = 0.0
    noise_seed: int = 0
    psi_rule: str = "kinksplit"

    def __post_init__(self):
        for name in ("K", "N", "J", "M", "Q_psi", "quad_order"):
            if int(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.mesh_diameter <= 0 or self.neighborhood_radius <= 0:
            raise ValueError("mesh diameter and neighborhood radius must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.noise_level < 0:
            raise ValueError("noise level must be nonnegative")
        PhantomSpec(make_phantom(self.phantom).id)  # validates the id

    @classmethod
    def reference_defaults(cls, **overrides) -> "ReconConfig":
        return cls(**overrides)

    @classmethod
    def coarse_preset(cls, **overrides) -> "ReconConfig":
        base = dict(
            K=180, N=360, J=114, M=32, mesh_diameter=0.2, neighborhood_radius=0.392
        )
        base.update(overrides)
        return cls(**base)

    def with_mode(self, mode: str) -> "ReconConfig":
        return replace(self, mode=mode)

    def to_dict(self) -> dict:
        return asdict(self)

    def key(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()[:16]


def make_mesh(cfg: ReconConfig) -> Triangulation:
    """The half-disc mesh a configuration implies (deterministic)."""
    tri = triangulate_half_disc(cfg.mesh_diameter)
    neighborhoods(tri, cfg.neighborhood_radius)
    return tri


def simulate_sinogram(cfg: ReconConfig) -> Sinogram:
    """Forward-simulate the two data channels for a configuration."""
    spec = make_phantom(cfg.phantom)
    arc = build_circle_grid(cfg.K) if cfg.mode == "full" else build_arc_grid(cfg.K)
    dirs = build_direction_grid(cfg.N)
    traces = simulate_traces(spec, arc, dirs, q=cfg.quad_order)
    sin = traces_to_sinograms(traces, arc, dirs)
    if cfg.noise_level > 0.0:
        sin = add_noise(sin, cfg.noise_level, cfg.noise_seed)
    return sin


def analytic_field(phantom, tri: Triangulation) -> FieldOnMesh:
    """Ground-truth field sampled at the mesh centroids."""
    spec = phantom if isinstance(phantom, PhantomSpec) else make_phantom(phantom)
    vals = eval_field(spec, tri.centroids)
    return FieldOnMesh(f1=vals[:, 0], f2=vals[:, 1], mesh=tri, provenance="analytic")


# ---------------------------------------------------------------------------
# staging helpers

@contextmanager
def _stage(records: list, name: str):
    info: dict = {}
    t0 = time.perf_counter()
    try:
        yield info
    except Exception as e:
        raise RuntimeError(f"stage {name!r} failed: {e}") from e
    rec = {"stage": name, "seconds": round(time.perf_counter() - t0, 6)}
    rec.update(info)
    records.append(rec)
    log.info("stage %-18s %8.2fs %s", name, rec["seconds"], info or "")


def _ckpt_path(checkpoint_dir, cfg: ReconConfig, sin: Sinogram, stage: str):
    if checkpoint_dir is None:
        return None
    h = hashlib.sha256()
    h.update(json.dumps(cfg.to_dict(), sort_keys=True).encode())
    h.update(np.ascontiguousarray(sin.I0).tobytes())
    h.update(np.ascontiguousarray(sin.I1).tobytes())
    d = Path(checkpoint_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d / f"{stage}-{h.hexdigest()[:16]}.npz"


def _ckpt_load(path):
    if path is None or not path.exists():
        return None
    with np.load(path, allow_pickle=False) as z:
        return {k: z[k] for k in z.files}


def _ckpt_save(path, **arrays):
    if path is not None:
        np.savez(path, **arrays)


def _check_grids(cfg: ReconConfig, sin: Sinogram, full: bool) -> None:
    want_mode = "full" if full else "partial"
    if cfg.mode != want_mode:
        raise ValueError(f"grid mismatch: config mode {cfg.mode!r}, requested {want_mode!r}")
    if sin.arc.full_circle != full:
        have = "full-circle" if sin.arc.full_circle else "arc-only"
        raise ValueError(f"grid mismatch: sinogram is {have}, reconstruction wants {want_mode}-data")
    if sin.arc.count != cfg.K or sin.dirs.count != cfg.N:
        raise ValueError(
            f"grid mismatch: sinogram is {sin.arc.count}x{sin.dirs.count}, "
            f"config wants {cfg.K}x{cfg.N}"
        )


# ---------------------------------------------------------------------------
# reconstruction drivers

def reconstruct_partial(
    cfg: ReconConfig,
    sin: Sinogram,
    diagnostics: list | None = None,
    checkpoint_dir=None,
) -> FieldOnMesh:
    """Reconstruct from data measured on the upper boundary arc only."""
    records = [] if diagnostics is None else diagnostics
    _check_grids(cfg, sin, full=False)

    with _stage(records, "geometry") as info:
        chord = build_chord_grid(cfg.J)
        tri = make_mesh(cfg)
        info.update(triangles=tri.count, backend=backend())

    with _stage(records, "angular-modes"):
        g0, g1 = build_boundary_data(sin)
        G0 = fourier_modes(g0, "even", cfg.M, sin.dirs, arc=sin.arc)
        G1 = fourier_modes(g1, "odd", cfg.M, sin.dirs, arc=sin.arc)

    with _stage(records, "span-harmonics") as info:
        pack = pack_triangles(tri)
        info.update(rule=cfg.psi_rule, Q_psi=cfg.Q_psi)

    with _stage(records, "chord-solve-even") as info:
        system = assemble(chord)
        rhs0 = chord_rhs_table(G0, chord)
        V0_L = solve_modes(system, rhs0, "even", 0)
        info["residual"] = max_relative_residual(system, rhs0, V0_L.values)

    with _stage(records, "interior-even") as info:
        path = _ckpt_path(checkpoint_dir, cfg, sin, "interior-even")
        got = _ckpt_load(path)
        if got is None:
            vals0 = extension_table(V0_L, G0, tri.centroids_c)
            _ckpt_save(path, values=vals0)
        else:
            vals0 = got["values"]
            info["resumed"] = True
        V0 = InteriorModeTable(values=vals0, parity="even", level=0, M=cfg.M)

    with _stage(records, "chord-solve-odd") as info:
        path = _ckpt_path(checkpoint_dir, cfg, sin, "chord-solve-odd")
        got = _ckpt_load(path)
        rhs1 = chord_rhs_table(G1, chord)
        if got is None:
            area = np.empty_like(rhs1)
            for j, x in enumerate(chord.nodes):
                row = psi_for_point(complex(x), pack, cfg.M, cfg.Q_psi, cfg.psi_rule)
                area[j] = area_term_all_modes(V0.values, row)
            _ckpt_save(path, area=area)
        else:
            area = got["area"]
            info["resumed"] = True
        rhs1 = rhs1 + 2.0 * area
        V1_L = solve_modes(system, rhs1, "odd", 1)
        info["residual"] = max_relative_residual(system, rhs1, V1_L.values)

    with _stage(records, "interior-odd") as info:
        path = _ckpt_path(checkpoint_dir, cfg, sin, "interior-odd")
        got = _ckpt_load(path)
        if got is None:
            ext = extension_table(V1_L, G1, tri.centroids_c, single_mode_index=0)
            area1 = np.array(
                [
                    area_term_single(
                        V0.values, psi_for_point(c, pack, cfg.M, cfg.Q_psi, cfg.psi_rule), 0
                    )
                    for c in tri.centroids_c
                ]
            )
            V1m1 = ext + area1
            _ckpt_save(path, values=V1m1)
        else:
            V1m1 = got["values"]
            info["resumed"] = True

    with _stage(records, "derivatives"):
        bundle = differentiate(tri, V0.values[:, 0], V1m1)

    with _stage(records, "field"):
        out = assemble_field(assemble_F1(bundle), tri)
    return out


def reconstruct_full(
    cfg: ReconConfig,
    sin: Sinogram,
    diagnostics: list | None = None,
    checkpoint_dir=None,
) -> FieldOnMesh:
    """Reconstruct from data measured on the entire boundary circle.

    No chord solves: the interior extension uses boundary sums alone, and
    all interior stages run on the mirrored full-disc mesh so the area term
    integrates over the whole disc.  The returned field lives on the
    half-disc mesh (the mirrored triangles are dropped at the end).
    """
    records = [] if diagnostics is None else diagnostics
    _check_grids(cfg, sin, full=True)

    with _stage(records, "geometry") as info:
        tri = make_mesh(cfg)
        tri_full = mirror_triangulation(tri)
        neighborhoods(tri_full, cfg.neighborhood_radius)
        info.update(triangles=tri.count, full_triangles=tri_full.count, backend=backend())

    with _stage(records, "angular-modes"):
        g0, g1 = build_boundary_data(sin)
        G0 = fourier_modes(g0, "even", cfg.M, sin.dirs, arc=sin.arc)
        G1 = fourier_modes(g1, "odd", cfg.M, sin.dirs, arc=sin.arc)

    with _stage(records, "span-harmonics") as info:
        pack = pack_triangles(tri_full)
        info.update(rule=cfg.psi_rule, Q_psi=cfg.Q_psi)

    with _stage(records, "interior-even") as info:
        path = _ckpt_path(checkpoint_dir, cfg, sin, "interior-even")
        got = _ckpt_load(path)
        if got is None:
            vals0 = extension_table(None, G0, tri_full.centroids_c)
            _ckpt_save(path, values=vals0)
        else:
            vals0 = got["values"]
            info["resumed"] = True
        V0 = InteriorModeTable(values=vals0, parity="even", level=0, M=cfg.M)

    with _stage(records, "interior-odd") as info:
        path = _ckpt_path(checkpoint_dir, cfg, sin, "interior-odd")
        got = _ckpt_load(path)
        if got is None:
            ext = extension_table(None, G1, tri_full.centroids_c, single_mode_index=0)
            area1 = np.array(
                [
                    area_term_single(
                        V0.values, psi_for_point(c, pack, cfg.M, cfg.Q_psi, cfg.psi_rule), 0
                    )
                    for c in tri_full.centroids_c
                ]
            )
            V1m1 = ext + area1
            _ckpt_save(path, values=V1m1)
        else:
            V1m1 = got["values"]
            info["resumed"] = True

    with _stage(records, "derivatives"):
        bundle = differentiate(tri_full, V0.values[:, 0], V1m1)

    with _stage(records, "field"):
        full_field = assemble_field(assemble_F1(bundle), tri_full)
        out = FieldOnMesh(
            f1=full_field.f1[: tri.count],
            f2=full_field.f2[: tri.count],
            mesh=tri,
            provenance="reconstructed",
        )
    return out


def reconstruct(
    cfg: ReconConfig,
    sin: Sinogram,
    diagnostics: list | None = None,
    checkpoint_dir=None,
) -> FieldOnMesh:
    """Dispatch on cfg.mode."""
    fn = reconstruct_full if cfg.mode == "full" else reconstruct_partial
    return fn(cfg, sin, diagnostics=diagnostics, checkpoint_dir=checkpoint_dir)


# ---------------------------------------------------------------------------
# evaluation

def _rel_l2(rec: np.ndarray, truth: np.ndarray, areas: np.ndarray, cy: np.ndarray, region: str):
    if region not in REGIONS:
        raise ValueError(f"region must be one of {REGIONS}, got {region!r}")
    keep = cy > UPPER_Y_CUTOFF if region == "upper" else np.ones_like(cy, dtype=bool)
    diff2 = ((rec - truth) ** 2).sum(axis=1)
    ref2 = (truth**2).sum(axis=1)
    denom = float(np.sqrt((ref2 * areas)[keep].sum()))
    if denom == 0.0:
        raise ValueError(f"reference field vanishes on region {region!r} (zero denominator)")
    return float(np.sqrt((diff2 * areas)[keep].sum())) / denom


def relative_l2_error(rec: FieldOnMesh, truth: FieldOnMesh, region: str = "all") -> float:
    """Area-weighted relative L2 mismatch over the whole mesh or the upper part."""
    if rec.mesh.count != truth.mesh.count or not np.allclose(
        rec.mesh.centroids, truth.mesh.centroids, atol=1e-12
    ):
        raise ValueError("fields live on different meshes")
    return _rel_l2(
        rec.vectors, truth.vectors, truth.mesh.areas, truth.mesh.centroids[:, 1], region
    )


def error_table(rec: FieldOnMesh, truth: FieldOnMesh) -> dict:
    return {region: relative_l2_error(rec, truth, region) for region in REGIONS}


# ---------------------------------------------------------------------------
# chord-trace oracle

def chord_trace_oracle(
    spec: PhantomSpec,
    chord: ChordGrid,
    dirs: DirectionGrid,
    modes,
    q: int = 32,
) -> ChordModeTable:
    """Ground-truth mode values on the chord by direct ray quadrature.

    For each chord point and direction, integrates the phantom along the
    ray from its circle entry point up to the chord point (plain values
    for the even modes, entry-distance-weighted for the odd modes), then
    takes the same angular Fourier sums the reconstruction uses.  Serves
    as an independent check of the chord solves.
    """
    modes = np.asarray(list(modes), dtype=int)
    if modes.size == 0 or np.any(modes >= 0):
        raise ValueError("oracle modes must be negative integers")
    parity = "even" if modes[0] % 2 == 0 else "odd"
    if not np.array_equal(modes, mode_list(parity, modes.size)):
        raise ValueError(
            f"modes must be the shallowest {modes.size} of the {parity} list, got {modes.tolist()}"
        )
    level = 0 if parity == "even" else 1
    nodes, wts = np.polynomial.legendre.leggauss(q)
    a = 0.5 * (nodes + 1.0)
    w = 0.5 * wts
    theta = dirs.directions_xy  # (N, 2)
    u = np.empty((chord.count, dirs.count))
    for j, x in enumerate(chord.nodes):
        dot = x * theta[:, 0]
        t_x = dot + np.sqrt(dot**2 + 1.0 - x * x)  # distance from circle entry
        entry = np.column_stack([x - t_x * theta[:, 0], -t_x * theta[:, 1]])
        pts = entry[:, None, :] + (t_x[:, None] * a[None, :])[:, :, None] * theta[:, None, :]
        along = (eval_field(spec, pts) * theta[:, None, :]).sum(axis=2)  # (N, q)
        if level == 0:
            u[j] = t_x * (along @ w)
        else:
            u[j] = t_x**2 * (along @ (w * (1.0 - a)))
    E = np.exp(-1j * np.outer(dirs.angles, modes))
    values = (u @ E) * (dirs.step / (2.0 * np.pi))
    return ChordModeTable(values=values, parity=parity, level=level, M=modes.size, chord=chord)


# ---------------------------------------------------------------------------
# field CSV

FIELD_CSV_HEADER = "s,cx,cy,area,f1,f2"


def write_field_csv(field: FieldOnMesh, path) -> None:
    tri = field.mesh
    rows = np.column_stack(
        [
            np.arange(tri.count, dtype=float),
            tri.centroids[:, 0],
            tri.centroids[:, 1],
            tri.areas,
            field.f1,
            field.f2,
        ]
    )
    np.savetxt(
        path,
        rows,
        fmt=["%d", "%.17g", "%.17g", "%.17g", "%.17g", "%.17g"],
        delimiter=",",
        header=FIELD_CSV_HEADER,
        comments="",
    )


def read_field_csv(path, mesh: Triangulation | None = None, provenance: str = "reconstructed"):
    """Load a field CSV.

    With a mesh, validates centroids/areas against it and returns a
    FieldOnMesh; without one, returns the raw (s, cx, cy, area, f1, f2)
    column arrays.
    """
    with open(path) as fh:
        header = fh.readline().strip()
        if header != FIELD_CSV_HEADER:
            raise ValueError(f"bad field file: expected header {FIELD_CSV_HEADER!r}, got {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != 6:
        raise ValueError(f"bad field file: expected 6 columns, got {data.shape[1]}")
    s = data[:, 0].astype(int)
    if not np.array_equal(np.sort(s), np.arange(data.shape[0])):
        raise ValueError("bad field file: triangle indices must cover 0..S-1")
    data = data[np.argsort(s)]
    cols = (data[:, 0].astype(int), data[:, 1], data[:, 2], data[:, 3], data[:, 4], data[:, 5])
    if mesh is None:
        return cols
    if data.shape[0] != mesh.count:
        raise ValueError(f"field file has {data.shape[0]} rows, mesh has {mesh.count} triangles")
    if not (
        np.allclose(cols[1], mesh.centroids[:, 0], atol=1e-9)
        and np.allclose(cols[2], mesh.centroids[:, 1], atol=1e-9)
        and np.allclose(cols[3], mesh.areas, atol=1e-9)
    ):
        raise ValueError("field file does not match the mesh (centroid/area mismatch)")
    return FieldOnMesh(f1=cols[4], f2=cols[5], mesh=mesh, provenance=provenance)
