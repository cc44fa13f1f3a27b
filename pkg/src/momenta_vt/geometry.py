"""Discrete geometry for the half-disc reconstruction domain.

Builds the boundary-arc, direction, and chord grids, a structured
triangulation of the upper unit half-disc whose bottom edge lies on the
chord [-1, 1], centroid neighborhoods for least-squares differentiation,
and the ray/triangle span lengths feeding the angular area-kernel table.

Orientation conventions (used by every contour sum downstream):
the domain boundary is traversed counterclockwise — chord left to right,
arc right to left; arc tangents are i*node for the unit circle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

TANGENT_TOL = 1e-12


# ---------------------------------------------------------------------------
# grids

@dataclass(frozen=True)
class ArcGrid:
    """Midpoint nodes on a circular boundary arc, counterclockwise order."""

    angles: np.ndarray    # (K,) parameter midpoints omega_k
    weights: np.ndarray   # (K,) parameter interval widths
    nodes: np.ndarray     # (K,) complex points on the unit circle
    tangents: np.ndarray  # (K,) complex unit tangents, CCW
    normals: np.ndarray   # (K,) complex outward unit normals
    full_circle: bool = False

    @property
    def count(self) -> int:
        return self.angles.size

    @property
    def nodes_xy(self) -> np.ndarray:
        return np.column_stack([self.nodes.real, self.nodes.imag])

    @property
    def total_length(self) -> float:
        return float(self.weights.sum())


def build_arc_grid(K: int) -> ArcGrid:
    """Measurement arc: upper half unit circle, K midpoint nodes.

    Nodes run from angle 0 toward pi, i.e. from the chord endpoint +1 to
    the endpoint -1, which is counterclockwise around the half-disc.
    """
    if K < 2:
        raise ValueError(f"arc grid needs K >= 2, got {K}")
    dw = np.pi / K
    angles = (np.arange(1, K + 1) - 0.5) * dw
    nodes = np.exp(1j * angles)
    return ArcGrid(
        angles=angles,
        weights=np.full(K, dw),
        nodes=nodes,
        tangents=1j * nodes,
        normals=nodes.copy(),
        full_circle=False,
    )


def build_circle_grid(K: int) -> ArcGrid:
    """Full-circle boundary grid for the full-measurement variant."""
    if K < 2:
        raise ValueError(f"circle grid needs K >= 2, got {K}")
    dw = 2.0 * np.pi / K
    angles = (np.arange(1, K + 1) - 0.5) * dw
    nodes = np.exp(1j * angles)
    return ArcGrid(
        angles=angles,
        weights=np.full(K, dw),
        nodes=nodes,
        tangents=1j * nodes,
        normals=nodes.copy(),
        full_circle=True,
    )


@dataclass(frozen=True)
class DirectionGrid:
    """Midpoint direction angles phi_n = (n - 1/2) * 2pi/N."""

    angles: np.ndarray      # (N,) radians
    directions: np.ndarray  # (N,) complex unit vectors
    step: float

    @property
    def count(self) -> int:
        return self.angles.size

    @property
    def directions_xy(self) -> np.ndarray:
        return np.column_stack([self.directions.real, self.directions.imag])


def build_direction_grid(N: int) -> DirectionGrid:
    if N < 4 or N % 2:
        raise ValueError(f"direction grid needs even N >= 4, got {N}")
    step = 2.0 * np.pi / N
    angles = (np.arange(1, N + 1) - 0.5) * step
    return DirectionGrid(angles=angles, directions=np.exp(1j * angles), step=step)


@dataclass(frozen=True)
class ChordGrid:
    """Midpoint nodes x_j = -s + (j - 1/2) dx on the open chord (-s, s)."""

    nodes: np.ndarray  # (J,) reals
    step: float
    half_length: float

    @property
    def count(self) -> int:
        return self.nodes.size


def build_chord_grid(J: int, s: float = 1.0) -> ChordGrid:
    if J < 2:
        raise ValueError(f"chord grid needs J >= 2, got {J}")
    if s <= 0:
        raise ValueError(f"chord half-length must be positive, got {s}")
    dx = 2.0 * s / J
    nodes = -s + (np.arange(1, J + 1) - 0.5) * dx
    return ChordGrid(nodes=nodes, step=dx, half_length=s)


# ---------------------------------------------------------------------------
# triangulation

@dataclass
class Triangulation:
    """Conforming triangle mesh with per-triangle derived quantities.

    ``neighborhoods`` is filled by :func:`neighborhoods`; differentiation
    refuses to run until it is present.
    """

    vertices: np.ndarray   # (V, 2) float
    triangles: np.ndarray  # (S, 3) int, counterclockwise vertex order
    centroids: np.ndarray = field(init=False)
    areas: np.ndarray = field(init=False)
    diameters: np.ndarray = field(init=False)
    neighborhoods: list | None = None
    neighborhood_radius: float | None = None

    def __post_init__(self):
        v = self.vertices[self.triangles]  # (S, 3, 2)
        self.centroids = v.mean(axis=1)
        d01 = v[:, 1] - v[:, 0]
        d02 = v[:, 2] - v[:, 0]
        cross = d01[:, 0] * d02[:, 1] - d01[:, 1] * d02[:, 0]
        if np.any(cross <= 0):
            bad = int(np.argmax(cross <= 0))
            raise ValueError(f"triangle {bad} is not counterclockwise/positive-area")
        self.areas = 0.5 * cross
        e0 = np.linalg.norm(d01, axis=1)
        e1 = np.linalg.norm(v[:, 2] - v[:, 1], axis=1)
        e2 = np.linalg.norm(d02, axis=1)
        self.diameters = np.maximum(np.maximum(e0, e1), e2)

    @property
    def count(self) -> int:
        return self.triangles.shape[0]

    @property
    def centroids_c(self) -> np.ndarray:
        return self.centroids[:, 0] + 1j * self.centroids[:, 1]

    def triangle_vertices(self) -> np.ndarray:
        """(S, 3, 2) vertex coordinates per triangle."""
        return self.vertices[self.triangles]


def _orient_ccw(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Return triangles with vertex order flipped where needed for CCW."""
    v = vertices[triangles]
    d01 = v[:, 1] - v[:, 0]
    d02 = v[:, 2] - v[:, 0]
    cross = d01[:, 0] * d02[:, 1] - d01[:, 1] * d02[:, 0]
    out = triangles.copy()
    flip = cross < 0
    out[flip, 1], out[flip, 2] = triangles[flip, 2], triangles[flip, 1]
    return out


_RIM_RING_FACTOR = 1.5  # outermost strip is this factor thicker than the rest


def _half_disc_mesh(n_rings: int) -> tuple[np.ndarray, np.ndarray]:
    """Structured ring mesh of the upper half-disc.

    Interior rings are uniformly spaced; the outermost strip is thicker by
    _RIM_RING_FACTOR so that no centroid sits close to the curved boundary,
    where the boundary-sum extension operators lose accuracy exponentially
    in the distance.  Each ring carries enough equal-angle segments to keep
    tangential spacing near the radial one, with both straight edges of
    every ring on the chord; consecutive rings are stitched by an
    angle-merge walk, which keeps the mesh conforming even though ring node
    counts differ.
    """
    h0 = 1.0 / (n_rings - 1 + _RIM_RING_FACTOR)
    radii = [min(i * h0, 1.0) for i in range(n_rings)] + [1.0]

    ring_angles = [np.array([0.0])]  # ring 0: the origin (angle unused)
    for i in range(1, n_rings + 1):
        segs = max(2, int(round(np.pi * radii[i] / h0)))
        ring_angles.append(np.linspace(0.0, np.pi, segs + 1))

    vertices = [np.array([0.0, 0.0])]
    ring_offsets = [0]
    for i in range(1, n_rings + 1):
        r = radii[i]
        ring_offsets.append(len(vertices))
        for a in ring_angles[i]:
            vertices.append(np.array([r * np.cos(a), r * np.sin(a)]))
    vertices = np.array(vertices)
    # snap the on-chord endpoints exactly onto y = 0
    on_chord = np.abs(vertices[:, 1]) < 1e-14
    vertices[on_chord, 1] = 0.0

    triangles = []
    # innermost fan around the origin
    base = ring_offsets[1]
    for b in range(len(ring_angles[1]) - 1):
        triangles.append((0, base + b, base + b + 1))
    # annulus strips
    for i in range(2, n_rings + 1):
        inner, outer = ring_angles[i - 1], ring_angles[i]
        oi, oo = ring_offsets[i - 1], ring_offsets[i]
        a = b = 0
        while a < len(inner) - 1 or b < len(outer) - 1:
            if a == len(inner) - 1:
                adv_outer = True
            elif b == len(outer) - 1:
                adv_outer = False
            else:
                adv_outer = outer[b + 1] <= inner[a + 1]
            if adv_outer:
                triangles.append((oi + a, oo + b, oo + b + 1))
                b += 1
            else:
                triangles.append((oi + a, oo + b, oi + a + 1))
                a += 1
    triangles = _orient_ccw(vertices, np.array(triangles, dtype=np.int64))
    return vertices, triangles


def triangulate_half_disc(target_mean_diameter: float) -> Triangulation:
    """Mesh the upper half-disc aiming at a given mean triangle diameter.

    Tries a small window of ring counts and keeps the best match; fails if
    no candidate lands within 25% of the target.
    """
    if not 0 < target_mean_diameter < 1:
        raise ValueError(f"target diameter must lie in (0, 1), got {target_mean_diameter}")
    guess = max(2, int(round(1.17 / target_mean_diameter)))
    best = None
    for n_rings in range(max(2, guess - 3), guess + 4):
        verts, tris = _half_disc_mesh(n_rings)
        tri = Triangulation(verts, tris)
        miss = abs(tri.diameters.mean() - target_mean_diameter)
        if best is None or miss < best[0]:
            best = (miss, tri)
    miss, tri = best
    if miss > 0.25 * target_mean_diameter:
        raise RuntimeError(
            f"mesh generator missed target diameter {target_mean_diameter} "
            f"by {miss:.4g} (mean {tri.diameters.mean():.4g})"
        )
    return tri


def mirror_triangulation(tri: Triangulation) -> Triangulation:
    """Reflect a half-disc mesh across the chord into a full-disc mesh.

    The first tri.count triangles of the result are the input triangles
    (same indices, same vertex numbering), so quantities computed on the
    doubled mesh restrict to the original mesh by slicing [:tri.count].
    """
    verts = tri.vertices
    on_chord = np.abs(verts[:, 1]) <= 1e-14
    V = verts.shape[0]
    new_index = np.full(V, -1, dtype=np.int64)
    new_index[on_chord] = np.nonzero(on_chord)[0]
    extra = np.nonzero(~on_chord)[0]
    new_index[extra] = V + np.arange(extra.size)
    mirrored = verts[extra] * np.array([1.0, -1.0])
    all_verts = np.vstack([verts, mirrored])
    lower = new_index[tri.triangles]
    all_tris = np.vstack([tri.triangles, _orient_ccw(all_verts, lower)])
    return Triangulation(all_verts, all_tris)


def neighborhoods(tri: Triangulation, R: float) -> list:
    """Attach per-triangle neighbor lists: centroids within distance R.

    Each list includes the triangle itself.  Raises if any neighborhood has
    fewer than 6 members (the quadratic-fit differentiation needs 5 usable
    offsets besides the center).
    """
    if R <= 0:
        raise ValueError(f"neighborhood radius must be positive, got {R}")
    c = tri.centroids
    nbrs = []
    too_small = []
    for s in range(tri.count):
        d2 = np.sum((c - c[s]) ** 2, axis=1)
        members = np.nonzero(d2 < R * R)[0]
        if members.size < 6:
            too_small.append(s)
        nbrs.append(members)
    if too_small:
        raise ValueError(
            f"neighborhood too small (<6 members) at triangles {too_small[:10]}"
            + ("..." if len(too_small) > 10 else "")
        )
    tri.neighborhoods = nbrs
    tri.neighborhood_radius = R
    return nbrs


# ---------------------------------------------------------------------------
# rays

def triangle_edge_frames(tri: Triangulation) -> tuple[np.ndarray, np.ndarray]:
    """Per-edge inward normals and offsets for fast ray clipping.

    Returns (normals (S,3,2), offsets (S,3)) with the convention that a
    point p is inside triangle s iff normals[s,e] . p >= offsets[s,e] for
    all three edges.  Assumes CCW triangles (guaranteed by Triangulation).
    """
    v = tri.triangle_vertices()
    normals = np.empty((tri.count, 3, 2))
    offsets = np.empty((tri.count, 3))
    for e in range(3):
        p0 = v[:, e]
        p1 = v[:, (e + 1) % 3]
        d = p1 - p0
        n = np.column_stack([-d[:, 1], d[:, 0]])  # left normal = inward for CCW
        normals[:, e] = n
        offsets[:, e] = np.einsum("ij,ij->i", n, p0)
    return normals, offsets


def ray_triangle_span(c, phi: float, triangle) -> float:
    """Length of {c + t*(cos phi, sin phi), t > 0} inside the triangle.

    For c inside this is the distance to the boundary along the direction;
    for c outside it is exit minus entry (0 when the semi-line misses).
    Computed by clipping the parameter t against the three edge half-planes.
    """
    tv = np.asarray(triangle, dtype=float).reshape(3, 2)
    d01 = tv[1] - tv[0]
    d02 = tv[2] - tv[0]
    if d01[0] * d02[1] - d01[1] * d02[0] < 0:
        tv = tv[::-1]
    cx, cy = float(np.asarray(c, dtype=float).reshape(2)[0]), float(
        np.asarray(c, dtype=float).reshape(2)[1]
    )
    tx, ty = np.cos(phi), np.sin(phi)
    t_lo, t_hi = 0.0, np.inf
    for e in range(3):
        p0 = tv[e]
        p1 = tv[(e + 1) % 3]
        nx, ny = -(p1[1] - p0[1]), p1[0] - p0[0]
        b = nx * (cx - p0[0]) + ny * (cy - p0[1])
        den = nx * tx + ny * ty
        if den == 0.0:
            if b < 0.0:
                return 0.0
            continue
        t_cross = -b / den
        if den > 0.0:
            t_lo = max(t_lo, t_cross)
        else:
            t_hi = min(t_hi, t_cross)
    return max(0.0, t_hi - t_lo)


def line_entry_point(zeta, theta) -> tuple[np.ndarray, float]:
    """Entry point of the line through boundary point zeta with direction theta.

    Returns (z_in, t0) with z_in = zeta + t0*theta on the unit circle and
    t0 <= 0.  Rejects tangent or incoming directions (outward normal dot
    theta below tolerance), for which the ray does not cross the disc.
    """
    z = np.asarray(zeta, dtype=float).reshape(2)
    th = np.asarray(theta, dtype=float).reshape(2)
    dot = z @ th  # outward normal on the unit circle is the point itself
    if dot <= TANGENT_TOL:
        raise ValueError(f"tangent or incoming direction (normal.theta = {dot:.3e})")
    t0 = -2.0 * dot
    return z + t0 * th, t0


# ---------------------------------------------------------------------------
# mesh file I/O: line 1 "V S"; V vertex lines "x y"; S triangle lines "i1 i2 i3"

def write_mesh(tri: Triangulation, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{tri.vertices.shape[0]} {tri.count}\n")
        for x, y in tri.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
        for a, b, c in tri.triangles:
            fh.write(f"{a} {b} {c}\n")


def read_mesh(path) -> Triangulation:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        V, S = map(int, lines[0].split())
        if len(lines) != 1 + V + S:
            raise ValueError(f"expected {1 + V + S} lines, found {len(lines)}")
        vertices = np.array([[float(t) for t in ln.split()] for ln in lines[1 : 1 + V]])
        triangles = np.array(
            [[int(t) for t in ln.split()] for ln in lines[1 + V :]], dtype=np.int64
        )
        if vertices.shape != (V, 2) or triangles.shape != (S, 3):
            raise ValueError("malformed vertex or triangle row")
        if triangles.min() < 0 or triangles.max() >= V:
            raise ValueError("triangle index out of range")
    except (ValueError, IndexError) as exc:
        raise ValueError(f"bad mesh file {path}: {exc}") from exc
    return Triangulation(vertices, _orient_ccw(vertices, triangles))
