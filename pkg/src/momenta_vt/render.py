"""Deterministic text-PPM rendering of sinograms and mesh fields.

Everything here writes plain-text portable pixmaps (P3): byte-exact across
platforms, no external encoders.  A fixed three-stop diverging color map
(blue - light gray - red) encodes values; cells excluded by the data mask
render pure white, which the color map itself never produces.  Constant
data lands exactly on the mid-scale gray.
"""

from __future__ import annotations

import numpy as np

from .calculus import FieldOnMesh
from .geometry import Triangulation
from .kernels import pack_triangles

_STOPS = np.array([[0.0, 0, 60, 180], [0.5, 240, 240, 240], [1.0, 180, 30, 30]])
WHITE = np.array([255, 255, 255], dtype=np.uint8)


def colormap(t: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] to RGB; input clipped, output uint8 (..., 3)."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    out = np.empty(t.shape + (3,), dtype=np.uint8)
    lo = t <= 0.5
    for c in range(3):
        a, b = _STOPS[0, 1 + c], _STOPS[1, 1 + c]
        out[..., c] = np.where(
            lo,
            np.rint(a + (b - a) * (t / 0.5)),
            np.rint(b + (_STOPS[2, 1 + c] - b) * ((t - 0.5) / 0.5)),
        ).astype(np.uint8)
    return out


def normalize(values: np.ndarray, vmin=None, vmax=None) -> np.ndarray:
    """Affine map to [0, 1]; constant data (or vmin == vmax) maps to 0.5."""
    v = np.asarray(values, dtype=float)
    lo = float(np.min(v)) if vmin is None else float(vmin)
    hi = float(np.max(v)) if vmax is None else float(vmax)
    if hi <= lo:
        return np.full(v.shape, 0.5)
    return np.clip((v - lo) / (hi - lo), 0.0, 1.0)


def write_ppm(path, rgb: np.ndarray) -> None:
    """Write an (H, W, 3) uint8 array as a text PPM, one pixel row per line."""
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {rgb.shape}")
    h, w = rgb.shape[:2]
    with open(path, "w", newline="\n") as fh:
        fh.write(f"P3\n{w} {h}\n255\n")
        flat = rgb.reshape(h, w * 3)
        for row in flat:
            fh.write(" ".join(map(str, row)))
            fh.write("\n")


def render_sinogram_ppm(
    values: np.ndarray,
    mask: np.ndarray,
    path,
    vmin=None,
    vmax=None,
    scale: int = 1,
) -> np.ndarray:
    """Heatmap of one data channel: rows = boundary nodes, columns = directions.

    With ``scale=1`` the image is exactly one pixel per cell (width = number
    of directions, height = number of boundary nodes).  Masked-out cells are
    white.  Returns the RGB array it wrote.
    """
    v = np.asarray(values, dtype=float)
    m = np.asarray(mask, dtype=bool)
    if v.ndim != 2 or v.shape != m.shape:
        raise ValueError(f"values {v.shape} and mask {m.shape} must be equal 2-D shapes")
    if scale < 1:
        raise ValueError("scale must be a positive integer")
    rgb = np.empty(v.shape + (3,), dtype=np.uint8)
    rgb[:] = WHITE
    if m.any():
        full = np.full(v.shape, 0.5)
        lo = float(v[m].min()) if vmin is None else float(vmin)
        hi = float(v[m].max()) if vmax is None else float(vmax)
        if hi > lo:
            full = np.clip((v - lo) / (hi - lo), 0.0, 1.0)
        rgb[m] = colormap(full)[m]
    if scale > 1:
        rgb = np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)
    write_ppm(path, rgb)
    return rgb


def _rasterize(tri: Triangulation, values: np.ndarray, width: int, vmin, vmax):
    pack = pack_triangles(tri)
    xmin, ymin = tri.vertices.min(axis=0) - 0.01
    xmax, ymax = tri.vertices.max(axis=0) + 0.01
    height = max(2, int(round(width * (ymax - ymin) / (xmax - xmin))))
    xs = xmin + (np.arange(width) + 0.5) * (xmax - xmin) / width
    ys = ymax - (np.arange(height) + 0.5) * (ymax - ymin) / height  # row 0 at the top
    t = normalize(values, vmin, vmax)
    shade = colormap(t)
    rgb = np.empty((height, width, 3), dtype=np.uint8)
    rgb[:] = WHITE
    for s in range(tri.count):
        verts = pack.verts[s]
        ci = np.nonzero((xs >= verts[:, 0].min()) & (xs <= verts[:, 0].max()))[0]
        ri = np.nonzero((ys >= verts[:, 1].min()) & (ys <= verts[:, 1].max()))[0]
        if ci.size == 0 or ri.size == 0:
            continue
        gx, gy = np.meshgrid(xs[ci], ys[ri])
        inside = np.ones(gx.shape, dtype=bool)
        for e in range(3):
            inside &= (
                pack.normals[s, e, 0] * gx + pack.normals[s, e, 1] * gy
                >= pack.offsets[s, e] - 1e-12
            )
        rows, cols = np.nonzero(inside)
        rgb[ri[rows], ci[cols]] = shade[s]
    return rgb


def render_field_ppm(
    field: FieldOnMesh,
    component: str,
    path,
    vmin=None,
    vmax=None,
    width: int = 400,
) -> np.ndarray:
    """Mesh-rasterized heatmap of one field component ('f1' or 'f2').

    The color scale is symmetric about zero by default so that sign
    structure is readable; pass vmin/vmax explicitly to pin it.
    """
    if component not in ("f1", "f2"):
        raise ValueError(f"component must be 'f1' or 'f2', got {component!r}")
    values = getattr(field, component)
    if vmin is None and vmax is None:
        amp = float(np.max(np.abs(values))) if values.size else 0.0
        if amp > 0.0:
            vmin, vmax = -amp, amp
    rgb = _rasterize(field.mesh, values, width, vmin, vmax)
    write_ppm(path, rgb)
    return rgb


def render_arrows_ppm(
    field: FieldOnMesh,
    path,
    width: int = 400,
    stride: int = 1,
    scale: float | None = None,
) -> np.ndarray:
    """Arrow-style plot: a line segment per triangle centroid, dark dot at base."""
    if stride < 1:
        raise ValueError("stride must be a positive integer")
    tri = field.mesh
    xmin, ymin = tri.vertices.min(axis=0) - 0.01
    xmax, ymax = tri.vertices.max(axis=0) + 0.01
    height = max(2, int(round(width * (ymax - ymin) / (xmax - xmin))))
    rgb = np.empty((height, width, 3), dtype=np.uint8)
    rgb[:] = WHITE

    def to_px(p):
        col = (p[0] - xmin) / (xmax - xmin) * width
        row = (ymax - p[1]) / (ymax - ymin) * height
        return row, col

    vecs = field.vectors[::stride]
    cents = tri.centroids[::stride]
    vmax = float(np.max(np.hypot(vecs[:, 0], vecs[:, 1]))) if vecs.size else 0.0
    if scale is None:
        scale = 0.0 if vmax == 0.0 else (0.06 * (xmax - xmin)) / vmax
    for c, v in zip(cents, vecs):
        r0, c0 = to_px(c)
        r1, c1 = to_px(c + scale * v)
        n = int(max(abs(r1 - r0), abs(c1 - c0))) + 1
        rows = np.clip(np.rint(np.linspace(r0, r1, n)).astype(int), 0, height - 1)
        cols = np.clip(np.rint(np.linspace(c0, c1, n)).astype(int), 0, width - 1)
        rgb[rows, cols] = (60, 60, 60)
        rgb[int(np.clip(round(r0), 0, height - 1)), int(np.clip(round(c0), 0, width - 1))] = (
            180,
            30,
            30,
        )
    write_ppm(path, rgb)
    return rgb
