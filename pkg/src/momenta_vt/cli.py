"""Command-line surface: mesh, simulate, noise, reconstruct, evaluate, render.

Configuration precedence (lowest to highest): preset defaults, a flat
``key=value`` config file, explicit flags.  Every command can write a JSON
run manifest (config snapshot, SHA-256 of inputs/outputs, realized noise,
error tables, per-stage wall clock) making runs reproducible and auditable.

Exit codes: 0 success, 2 usage, 3 data error, 4 numerical-stage failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import fields as dc_fields
from pathlib import Path

import numpy as np

from .backend import set_threads
from .forward import (
    add_noise,
    read_sinogram_csv,
    realized_noise_levels,
    simulate_traces,
    traces_to_sinograms,
    write_sinogram_csv,
)
from .geometry import read_mesh, triangulate_half_disc, write_mesh
from .phantom import make_phantom
from .pipeline import (
    REGIONS,
    UPPER_Y_CUTOFF,
    ReconConfig,
    _rel_l2,
    read_field_csv,
    reconstruct,
    write_field_csv,
)
from .render import render_arrows_ppm, render_field_ppm, render_sinogram_ppm

USAGE_ERROR = 2
DATA_ERROR = 3
NUMERICAL_ERROR = 4

_CFG_FIELDS = {f.name: f.type for f in dc_fields(ReconConfig)}


# ---------------------------------------------------------------------------
# config plumbing

def parse_config_file(path) -> dict:
    """Flat key=value file; '#' comments and blank lines ignored."""
    out = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _CFG_FIELDS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = _coerce(key, val, f"{path}:{lineno}")
    return out


def _coerce(key: str, val: str, where: str):
    kind = str(_CFG_FIELDS[key])
    try:
        if "int" in kind:
            return int(val)
        if "float" in kind:
            return float(val)
        return val
    except ValueError as e:
        raise ValueError(f"{where}: bad value for {key}: {val!r}") from e


_FLAG_DESTS = (
    "K", "N", "J", "M", "mesh_diameter", "neighborhood_radius", "Q_psi",
    "quad_order", "mode", "phantom", "noise_level", "noise_seed", "psi_rule",
)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=("reference", "coarse"), default="reference",
                   help="base defaults: full-resolution reference scale or the coarse desk-scale preset")
    p.add_argument("--config", metavar="FILE", help="flat key=value config file")
    p.add_argument("--K", type=int, help="boundary nodes")
    p.add_argument("--N", type=int, help="direction nodes")
    p.add_argument("--J", type=int, help="chord nodes")
    p.add_argument("--M", type=int, help="mode truncation")
    p.add_argument("--diameter", "--target-h", dest="mesh_diameter", type=float,
                   help="target mesh diameter")
    p.add_argument("--radius", dest="neighborhood_radius", type=float,
                   help="differentiation neighborhood radius")
    p.add_argument("--Q-psi", dest="Q_psi", type=int, help="angular quadrature order")
    p.add_argument("--q", "--quad", dest="quad_order", type=int, help="ray quadrature order")
    p.add_argument("--mode", choices=("partial", "full"), help="data coverage variant")
    p.add_argument("--psi-rule", dest="psi_rule", choices=("kinksplit", "trapezoid"),
                   help="angular quadrature rule for the area operator")
    p.add_argument("--noise-level", dest="noise_level", type=float, help="target relative noise")
    p.add_argument("--noise-seed", dest="noise_seed", type=int, help="noise RNG seed")


def resolve_config(args, file_defaults: dict | None = None) -> ReconConfig:
    """preset defaults <- optional file-derived defaults <- config file <- flags."""
    base = ReconConfig.coarse_preset() if args.preset == "coarse" else ReconConfig()
    vals = base.to_dict()
    if file_defaults:
        vals.update(file_defaults)
    if getattr(args, "config", None):
        vals.update(parse_config_file(args.config))
    if getattr(args, "phantom", None) is not None:
        vals["phantom"] = args.phantom
    for dest in _FLAG_DESTS:
        v = getattr(args, dest, None)
        if v is not None:
            vals[dest] = v
    return ReconConfig(**vals)


# ---------------------------------------------------------------------------
# manifests

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command: str, cfg: ReconConfig | None = None,
                   inputs=(), outputs=(), **extra) -> None:
    doc = {
        "command": command,
        "config": cfg.to_dict() if cfg is not None else None,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
    }
    doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def verify_manifest(path) -> bool:
    """True iff every referenced file exists and hash-matches."""
    doc = json.loads(Path(path).read_text())
    for group in ("inputs", "outputs"):
        for p, want in (doc.get(group) or {}).items():
            if not Path(p).exists() or sha256_file(p) != want:
                return False
    return True


# ---------------------------------------------------------------------------
# commands

def cmd_mesh(args) -> int:
    cfg = resolve_config(args)
    tri = triangulate_half_disc(cfg.mesh_diameter)
    write_mesh(tri, args.out)
    print(f"mesh: {tri.vertices.shape[0]} vertices, {tri.count} triangles, "
          f"mean diameter {tri.diameters.mean():.4f} -> {args.out}")
    if args.manifest:
        write_manifest(args.manifest, "mesh", cfg, outputs=[args.out],
                       mesh={"vertices": int(tri.vertices.shape[0]), "triangles": int(tri.count)})
    return 0


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    t0 = time.perf_counter()
    from .geometry import build_arc_grid, build_circle_grid, build_direction_grid

    spec = make_phantom(cfg.phantom)
    arc = build_circle_grid(cfg.K) if cfg.mode == "full" else build_arc_grid(cfg.K)
    dirs = build_direction_grid(cfg.N)
    traces = simulate_traces(spec, arc, dirs, q=cfg.quad_order)
    sin = traces_to_sinograms(traces, arc, dirs)
    noise_info = None
    if cfg.noise_level > 0.0:
        sin = add_noise(sin, cfg.noise_level, cfg.noise_seed)
        r0, r1 = realized_noise_levels(sin)
        noise_info = {"target": cfg.noise_level, "seed": cfg.noise_seed,
                      "realized_I0": r0, "realized_I1": r1}
        print(f"noise: target {cfg.noise_level:.3%}, realized {r0:.3%} / {r1:.3%}")
    write_sinogram_csv(sin, args.out)
    print(f"simulate: phantom {cfg.phantom}, {cfg.K}x{cfg.N} rays ({cfg.mode}), "
          f"{time.perf_counter() - t0:.1f}s -> {args.out}")
    if args.manifest:
        write_manifest(args.manifest, "simulate", cfg, outputs=[args.out], noise=noise_info)
    return 0


def cmd_noise(args) -> int:
    sin = read_sinogram_csv(args.input)
    sin = add_noise(sin, args.level, args.seed)
    r0, r1 = realized_noise_levels(sin)
    write_sinogram_csv(sin, args.out)
    print(f"noise: target {args.level:.3%}, realized {r0:.3%} / {r1:.3%} -> {args.out}")
    if args.manifest:
        write_manifest(args.manifest, "noise", None, inputs=[args.input], outputs=[args.out],
                       noise={"target": args.level, "seed": args.seed,
                              "realized_I0": r0, "realized_I1": r1})
    return 0


def cmd_reconstruct(args) -> int:
    sin = read_sinogram_csv(args.input)
    file_defaults = {
        "K": sin.arc.count,
        "N": sin.dirs.count,
        "mode": "full" if sin.arc.full_circle else "partial",
    }
    cfg = resolve_config(args, file_defaults)
    diagnostics: list = []
    t0 = time.perf_counter()
    field = reconstruct(cfg, sin, diagnostics=diagnostics, checkpoint_dir=args.checkpoint_dir)
    total = time.perf_counter() - t0
    write_field_csv(field, args.out)
    for rec in diagnostics:
        extras = {k: v for k, v in rec.items() if k not in ("stage", "seconds")}
        print(f"  {rec['stage']:<18} {rec['seconds']:8.2f}s  {extras if extras else ''}")
    print(f"reconstruct: {cfg.mode} data, {field.mesh.count} triangles, {total:.1f}s -> {args.out}")
    if args.diagnostics:
        with open(args.diagnostics, "w") as fh:
            for rec in diagnostics:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    if args.manifest:
        write_manifest(args.manifest, "reconstruct", cfg, inputs=[args.input],
                       outputs=[args.out], stages=diagnostics, seconds=total)
    return 0


def _load_columns(path):
    cols = read_field_csv(path)
    return cols  # (s, cx, cy, area, f1, f2)


def cmd_evaluate(args) -> int:
    truth = _load_columns(args.truth)
    recs = []
    for item in args.rec:
        label, _, path = item.rpartition("=")
        label = label or Path(path).stem
        recs.append((label, _load_columns(path)))
    table: dict[str, dict[str, float]] = {}
    for label, cols in recs:
        if cols[0].size != truth[0].size or not (
            np.allclose(cols[1], truth[1], atol=1e-9) and np.allclose(cols[2], truth[2], atol=1e-9)
        ):
            raise ValueError(f"field grids differ between {args.truth} and rec {label!r}")
        rv = np.column_stack([cols[4], cols[5]])
        tv = np.column_stack([truth[4], truth[5]])
        table[label] = {
            region: _rel_l2(rv, tv, truth[3], truth[2], region) for region in REGIONS
        }
    labels = [label for label, _ in recs]
    region_names = {"all": "whole mesh", "upper": f"cy > {UPPER_Y_CUTOFF}"}
    widths = max(12, *(len(x) for x in labels)) + 2
    print("relative L2 error" + " " * 7 + "".join(f"{x:>{widths}}" for x in labels))
    lines = []
    for region in REGIONS:
        row = "".join(f"{table[x][region]:>{widths}.2%}" for x in labels)
        print(f"{region_names[region]:<24}{row}")
        lines.extend(f"{region},{x},{table[x][region]:.17g}" for x in labels)
    if args.out:
        Path(args.out).write_text("region,dataset,error\n" + "\n".join(lines) + "\n")
    if args.manifest:
        write_manifest(args.manifest, "evaluate", None,
                       inputs=[args.truth] + [p for _, _, p in
                               (item.rpartition("=") for item in args.rec)],
                       outputs=[args.out] if args.out else [],
                       errors=table)
    return 0


def cmd_render(args) -> int:
    if args.kind == "sinogram":
        sin = read_sinogram_csv(args.input)
        values = sin.I0 if args.channel == "I0" else sin.I1
        render_sinogram_ppm(values, sin.mask, args.out,
                            vmin=args.vmin, vmax=args.vmax, scale=args.scale)
        print(f"render: {args.channel} heatmap {values.shape[1]}x{values.shape[0]} px"
              f" (x{args.scale}) -> {args.out}")
        if args.manifest:
            write_manifest(args.manifest, "render", None,
                           inputs=[args.input], outputs=[args.out])
        return 0
    if not args.mesh:
        raise ValueError(f"--mesh is required for kind {args.kind!r}")
    tri = read_mesh(args.mesh)
    field = read_field_csv(args.input, mesh=tri)
    if args.kind == "field":
        rgb = render_field_ppm(field, args.component, args.out,
                               vmin=args.vmin, vmax=args.vmax, width=args.width)
    else:
        rgb = render_arrows_ppm(field, args.out, width=args.width, stride=args.stride)
    print(f"render: {args.kind} {rgb.shape[1]}x{rgb.shape[0]} px -> {args.out}")
    if args.manifest:
        write_manifest(args.manifest, "render", None,
                       inputs=[args.input, args.mesh], outputs=[args.out])
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="momenta-vt",
        description="Planar vector-field reconstruction from zeroth and first "
                    "moment ray data on a boundary arc.",
    )
    p.add_argument("--threads", type=int, default=None,
                   help="worker thread cap (env MOMENTA_VT_THREADS)")
    sub = p.add_subparsers(dest="command", required=True)

    mesh = sub.add_parser("mesh", help="triangulate the half disc and write a mesh file")
    _add_config_flags(mesh)
    mesh.add_argument("--out", required=True, help="output mesh file")
    mesh.add_argument("--manifest", help="write a JSON run manifest")
    mesh.set_defaults(func=cmd_mesh)

    sim = sub.add_parser("simulate", help="forward-simulate the two data channels")
    _add_config_flags(sim)
    sim.add_argument("--phantom", required=True,
                     help="phantom id (experiment1/ex1, experiment2/ex2, ...)")
    sim.add_argument("--out", required=True, help="output sinogram CSV")
    sim.add_argument("--manifest", help="write a JSON run manifest")
    sim.set_defaults(func=cmd_simulate)

    noi = sub.add_parser("noise", help="add calibrated uniform noise to a sinogram file")
    noi.add_argument("--input", "--in", required=True, help="input sinogram CSV")
    noi.add_argument("--level", type=float, required=True, help="target relative noise level")
    noi.add_argument("--seed", type=int, default=0, help="RNG seed")
    noi.add_argument("--out", required=True, help="output sinogram CSV")
    noi.add_argument("--manifest", help="write a JSON run manifest")
    noi.set_defaults(func=cmd_noise)

    rec = sub.add_parser("reconstruct", help="reconstruct the field from a sinogram file")
    _add_config_flags(rec)
    rec.add_argument("--input", required=True, help="input sinogram CSV")
    rec.add_argument("--out", required=True, help="output field CSV")
    rec.add_argument("--diagnostics", help="write per-stage JSON-lines diagnostics")
    rec.add_argument("--checkpoint-dir", help="directory for resumable stage checkpoints")
    rec.add_argument("--manifest", help="write a JSON run manifest")
    rec.set_defaults(func=cmd_reconstruct)

    ev = sub.add_parser("evaluate", help="error table of reconstructions against a reference")
    ev.add_argument("--truth", required=True, help="reference field CSV")
    ev.add_argument("--rec", required=True, action="append", metavar="[LABEL=]PATH",
                    help="reconstructed field CSV (repeatable)")
    ev.add_argument("--out", help="also write the table as CSV")
    ev.add_argument("--manifest", help="write a JSON run manifest")
    ev.set_defaults(func=cmd_evaluate)

    ren = sub.add_parser("render", help="rasterize sinograms or fields to text PPM images")
    ren.add_argument("--kind", choices=("sinogram", "field", "arrows"), required=True)
    ren.add_argument("--input", required=True, help="sinogram or field CSV")
    ren.add_argument("--mesh", help="mesh file (required for field/arrows)")
    ren.add_argument("--channel", choices=("I0", "I1"), default="I0",
                     help="sinogram channel to render")
    ren.add_argument("--component", choices=("f1", "f2"), default="f1",
                     help="field component to render")
    ren.add_argument("--out", required=True, help="output PPM path")
    ren.add_argument("--vmin", type=float, help="fixed color-scale minimum")
    ren.add_argument("--vmax", type=float, help="fixed color-scale maximum")
    ren.add_argument("--scale", type=int, default=1, help="integer pixel zoom (sinogram)")
    ren.add_argument("--width", type=int, default=400, help="image width in pixels (field/arrows)")
    ren.add_argument("--stride", type=int, default=1, help="draw every n-th arrow")
    ren.add_argument("--manifest", help="write a JSON run manifest")
    ren.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    threads = args.threads
    if threads is None:
        env = os.environ.get("MOMENTA_VT_THREADS")
        threads = int(env) if env else None
    if threads is not None:
        set_threads(threads)
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError, ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return DATA_ERROR
    except (RuntimeError, MemoryError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
