"""The three discretized integral operators of the reconstruction.

* ``eval_F``  - boundary-arc sums producing the right-hand side of the
  chord singular-integral solves (Cauchy sum + conjugate-ratio tail).
* ``eval_B``  - boundary-to-interior analytic extension: Cauchy sums over
  chord and arc plus the two reflected tail sums.
* ``eval_T``  - area potential: contraction of interior mode values with
  the per-triangle angular span harmonics Psi.

All tail sums couple mode m only to the modes m-2, m-4, ... of the same
parity.  Mode tables store columns shallowest-first, so "two modes deeper"
is a column shift by +1 and the tail contractions become anti-diagonal
sums of small dense matrix products (delegated to BLAS in both backends).

The span harmonics Psi_j(c; tau) = int rho_tau(c; phi) e^{-i(2j+1)phi} dphi
are computed by splitting the angle range at the directions of tau's
vertices (where the span length rho has derivative kinks) and applying
Gauss-Legendre on each smooth sub-arc, sized to resolve the highest
harmonic.  A uniform periodic-trapezoid rule is available as
``rule="trapezoid"`` for comparison, but the kinks limit it to quadratic
convergence.  The per-point assembly is the hottest kernel in the package
and exists as a numba loop and a vectorized numpy twin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import njit, using_numba
from .geometry import ArcGrid, ChordGrid, Triangulation
from .harmonics import ModeTable, mode_list

try:
    from numba import prange
except ImportError:  # pragma: no cover
    prange = range

ARC_EPS = 1e-13
PSI_RULES = ("kinksplit", "trapezoid")


# ---------------------------------------------------------------------------
# mode-value containers

@dataclass(frozen=True)
class ChordModeTable:
    """Mode values on the chord nodes, (J, M) complex, shallowest mode first."""

    values: np.ndarray
    parity: str
    level: int
    M: int
    chord: ChordGrid

    @property
    def modes(self) -> np.ndarray:
        return mode_list(self.parity, self.M)


@dataclass(frozen=True)
class InteriorModeTable:
    """Mode values at triangle centroids, (S, M) complex, shallowest first."""

    values: np.ndarray
    parity: str
    level: int
    M: int

    @property
    def modes(self) -> np.ndarray:
        return mode_list(self.parity, self.M)


def _mode_index(m: int, parity: str, M: int) -> int:
    start = -2 if parity == "even" else -1
    if (start - m) % 2 or not (0 <= (start - m) // 2 < M):
        raise ValueError(f"mode {m} not in the {parity} list of order {M}")
    return (start - m) // 2


# ---------------------------------------------------------------------------
# tail-sum helpers

def _power_table(ratios: np.ndarray, weights: np.ndarray, M: int) -> np.ndarray:
    """P[k, j] = ratios[k]^j * weights[k], j = 0..M-1 (stable: |ratios| = 1)."""
    P = np.empty((ratios.size, M), dtype=complex)
    P[:, 0] = weights
    for j in range(1, M):
        P[:, j] = P[:, j - 1] * ratios
    return P


def _tail_sums(values: np.ndarray, ratios: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Tail[a] = sum_k sum_{j>=1} values[k, a+j] ratios[k]^j weights[k].

    values: (K, M) mode columns shallowest-first.  The sum over k is one
    complex matmul; the (mode, power) pairing is an anti-diagonal sum.
    """
    M = values.shape[1]
    D = values.T @ _power_table(ratios, weights, M)  # (M, M)
    return np.array([np.diagonal(D, -a)[1:].sum() for a in range(M)])


def _tail_single(values: np.ndarray, ratios: np.ndarray, weights: np.ndarray, a: int):
    """Tail[a] alone, by Horner recursion over the deeper columns."""
    M = values.shape[1]
    H = np.zeros(values.shape[0], dtype=complex)
    for col in range(M - 1, a, -1):
        H = (H + values[:, col]) * ratios
    return H @ weights


def _require_arc(G: ModeTable) -> ArcGrid:
    if G.arc is None:
        raise ValueError("mode table carries no arc grid; build it with fourier_modes(..., arc=...)")
    return G.arc


# ---------------------------------------------------------------------------
# chord right-hand sides (arc sums only; the area term is added by the pipeline)

def chord_rhs_table(G: ModeTable, chord: ChordGrid) -> np.ndarray:
    """All-mode right-hand sides at every chord node, (J, M) complex."""
    arc = _require_arc(G)
    out = np.empty((chord.count, G.M), dtype=complex)
    tang_w = arc.tangents * arc.weights
    for j, x in enumerate(chord.nodes):
        dz = arc.nodes - x
        first = (G.values.T @ (tang_w / dz)) / (1j * np.pi)
        tails = _tail_sums(G.values, np.conj(dz) / dz, np.imag(arc.tangents / dz) * arc.weights)
        out[j] = first + (2.0 / np.pi) * tails
    return out


def eval_F(m: int, G: ModeTable, x: float, M: int | None = None) -> complex:
    """Right-hand-side value for one mode at one chord point."""
    arc = _require_arc(G)
    M = G.M if M is None else M
    s = 1.0
    if not -s < x < s:
        raise ValueError(f"chord evaluation point must lie strictly inside (-1, 1), got {x}")
    a = _mode_index(m, G.parity, M)
    dz = arc.nodes - x
    tang_w = arc.tangents * arc.weights
    first = (G.values[:, a] @ (tang_w / dz)) / (1j * np.pi)
    tail = _tail_single(G.values, np.conj(dz) / dz, np.imag(arc.tangents / dz) * arc.weights, a)
    return complex(first + (2.0 / np.pi) * tail)


# ---------------------------------------------------------------------------
# boundary-to-interior extension

def _extension_point(
    V_chord: np.ndarray | None,
    G_arc: np.ndarray,
    chord: ChordGrid | None,
    arc: ArcGrid,
    c: complex,
) -> np.ndarray:
    """All-mode extension values at one interior point, (M,) complex."""
    dz_arc = arc.nodes - c
    tang_w = arc.tangents * arc.weights
    out = (G_arc.T @ (tang_w / dz_arc)) / (2j * np.pi)
    out += (1.0 / np.pi) * _tail_sums(
        G_arc, np.conj(dz_arc) / dz_arc, np.imag(arc.tangents / dz_arc) * arc.weights
    )
    if V_chord is not None:
        dz = chord.nodes - c
        dzc = chord.nodes - np.conj(c)
        out += (V_chord.T @ (chord.step / dz)) / (2j * np.pi)
        out += _tail_sums(V_chord, dzc / dz, (1.0 / dz - 1.0 / dzc) * chord.step) / (2j * np.pi)
    return out


def _extension_point_single(
    V_chord: np.ndarray | None,
    G_arc: np.ndarray,
    chord: ChordGrid | None,
    arc: ArcGrid,
    c: complex,
    a: int,
) -> complex:
    """Extension value for one mode column a at one point (Horner tails)."""
    dz_arc = arc.nodes - c
    tang_w = arc.tangents * arc.weights
    val = (G_arc[:, a] @ (tang_w / dz_arc)) / (2j * np.pi)
    val += (1.0 / np.pi) * _tail_single(
        G_arc, np.conj(dz_arc) / dz_arc, np.imag(arc.tangents / dz_arc) * arc.weights, a
    )
    if V_chord is not None:
        dz = chord.nodes - c
        dzc = chord.nodes - np.conj(c)
        val += (V_chord[:, a] @ (chord.step / dz)) / (2j * np.pi)
        val += _tail_single(V_chord, dzc / dz, (1.0 / dz - 1.0 / dzc) * chord.step, a) / (2j * np.pi)
    return complex(val)


def check_extension_point(c: complex, chord: ChordGrid | None, arc: ArcGrid) -> None:
    """Reject evaluation points numerically too close to a quadrature node."""
    if np.min(np.abs(arc.nodes - c)) < arc.weights.min():
        raise ValueError(f"point {c} within one arc step of an arc node (numerically singular)")
    if chord is not None and np.min(np.abs(chord.nodes - c)) < chord.step:
        raise ValueError(f"point {c} within one chord step of a chord node (numerically singular)")


def eval_B(
    m: int,
    V_L: ChordModeTable | None,
    G: ModeTable,
    c: complex,
    M: int | None = None,
) -> complex:
    """Interior extension of one mode at one point.

    ``V_L=None`` selects the arc-only form used with full-boundary data
    (no chord sums; G's arc grid must then cover the whole circle).
    """
    arc = _require_arc(G)
    M = G.M if M is None else M
    c = complex(c)
    a = _mode_index(m, G.parity, M)
    chord = None
    if V_L is not None:
        if V_L.parity != G.parity:
            raise ValueError(f"parity mismatch: chord table {V_L.parity}, arc table {G.parity}")
        chord = V_L.chord
    check_extension_point(c, chord, arc)
    return _extension_point_single(
        V_L.values if V_L is not None else None, G.values, chord, arc, c, a
    )


def extension_table(
    V_L: ChordModeTable | None,
    G: ModeTable,
    points: np.ndarray,
    single_mode_index: int | None = None,
) -> np.ndarray:
    """Extension at many interior points: (P, M) complex, or (P,) for one column."""
    arc = _require_arc(G)
    pts = np.asarray(points, dtype=complex).ravel()
    Vv = V_L.values if V_L is not None else None
    chord = V_L.chord if V_L is not None else None
    for c in pts:
        check_extension_point(complex(c), chord, arc)
    if single_mode_index is not None:
        return np.array(
            [
                _extension_point_single(Vv, G.values, chord, arc, complex(c), single_mode_index)
                for c in pts
            ]
        )
    out = np.empty((pts.size, G.M), dtype=complex)
    for i, c in enumerate(pts):
        out[i] = _extension_point(Vv, G.values, chord, arc, complex(c))
    return out


# ---------------------------------------------------------------------------
# span harmonics Psi

# Gauss-Legendre rule table shared by both backends (nodes on [-1, 1])
RULE_SIZES = np.array([8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256, 384, 512, 768, 1024, 1536, 2048])
_gl_nodes = []
_gl_weights = []
for _n in RULE_SIZES:
    _x, _w = np.polynomial.legendre.leggauss(int(_n))
    _gl_nodes.append(_x)
    _gl_weights.append(_w)
GL_OFFSETS = np.concatenate([[0], np.cumsum(RULE_SIZES)])[:-1].astype(np.int64)
GL_NODES_FLAT = np.concatenate(_gl_nodes)
GL_WEIGHTS_FLAT = np.concatenate(_gl_weights)
del _gl_nodes, _gl_weights, _n, _x, _w

PSI_MARGIN = 16  # extra Gauss nodes per sub-arc beyond the bandwidth estimate


@dataclass(frozen=True)
class TrianglePack:
    """Triangle data laid out for the ray-clip kernels."""

    verts: np.ndarray    # (S, 3, 2)
    normals: np.ndarray  # (S, 3, 2) inward edge normals (not unit)
    offsets: np.ndarray  # (S, 3) normals . edge base point
    areas: np.ndarray    # (S,) signed CCW areas (>= 0 required; 0 = skip)

    @property
    def count(self) -> int:
        return self.verts.shape[0]


def pack_triangles(tri) -> TrianglePack:
    """Accepts a Triangulation or a raw (S, 3, 2) vertex array."""
    v = tri.triangle_vertices() if isinstance(tri, Triangulation) else np.asarray(tri, dtype=float)
    if v.ndim == 2:
        v = v[None]
    S = v.shape[0]
    normals = np.empty((S, 3, 2))
    offsets = np.empty((S, 3))
    for e in range(3):
        p0 = v[:, e]
        d = v[:, (e + 1) % 3] - p0
        n = np.column_stack([-d[:, 1], d[:, 0]])
        normals[:, e] = n
        offsets[:, e] = np.einsum("ij,ij->i", n, p0)
    d01 = v[:, 1] - v[:, 0]
    d02 = v[:, 2] - v[:, 0]
    areas = 0.5 * (d01[:, 0] * d02[:, 1] - d01[:, 1] * d02[:, 0])
    if np.any(areas < 0):
        raise ValueError("triangle pack requires counterclockwise triangles")
    return TrianglePack(
        verts=np.ascontiguousarray(v),
        normals=np.ascontiguousarray(normals),
        offsets=np.ascontiguousarray(offsets),
        areas=areas,
    )


@njit(cache=True)
def _rho_jit(verts, normals, offsets, s, cx, cy, tx, ty):  # pragma: no cover - jit
    """Span of {c + t theta, t > 0} inside triangle s via half-plane clipping."""
    t_lo = 0.0
    t_hi = np.inf
    for e in range(3):
        nx = normals[s, e, 0]
        ny = normals[s, e, 1]
        b = nx * cx + ny * cy - offsets[s, e]
        den = nx * tx + ny * ty
        if den == 0.0:
            if b < 0.0:
                return 0.0
        elif den > 0.0:
            t = -b / den
            if t > t_lo:
                t_lo = t
        else:
            t = -b / den
            if t < t_hi:
                t_hi = t
    span = t_hi - t_lo
    return span if span > 0.0 else 0.0


@njit(cache=True, parallel=True)
def _psi_point_jit(
    cx, cy, verts, normals, offsets, areas, density, margin, sizes, gl_off, glx, glw, out
):  # pragma: no cover - jit
    S = verts.shape[0]
    M = out.shape[1]
    n_rules = sizes.size
    for s in prange(S):
        for j in range(M):
            out[s, j] = 0.0 + 0.0j
        if areas[s] <= 0.0:
            continue
        # angles of the triangle's vertices seen from c (= rho's kink directions)
        ang = np.empty(3)
        degenerate = -1
        for i in range(3):
            rx = verts[s, i, 0] - cx
            ry = verts[s, i, 1] - cy
            if rx * rx + ry * ry < 1e-28:
                degenerate = i
                ang[i] = 0.0
            else:
                ang[i] = math.atan2(ry, rx)
        if degenerate >= 0:
            ang[degenerate] = ang[(degenerate + 1) % 3]
        # 3-element sort
        if ang[0] > ang[1]:
            ang[0], ang[1] = ang[1], ang[0]
        if ang[1] > ang[2]:
            ang[1], ang[2] = ang[2], ang[1]
        if ang[0] > ang[1]:
            ang[0], ang[1] = ang[1], ang[0]
        for arc_i in range(3):
            start = ang[arc_i]
            end = ang[arc_i + 1] if arc_i < 2 else ang[0] + 2.0 * np.pi
            width = end - start
            if width < ARC_EPS:
                continue
            mid = start + 0.5 * width
            if _rho_jit(verts, normals, offsets, s, cx, cy, math.cos(mid), math.sin(mid)) <= 0.0:
                continue  # whole sub-arc misses the triangle
            nreq = int(width * density) + margin
            ci = n_rules - 1
            for r in range(n_rules):
                if sizes[r] >= nreq:
                    ci = r
                    break
            n = sizes[ci]
            off = gl_off[ci]
            half = 0.5 * width
            for qi in range(n):
                phi = start + (glx[off + qi] + 1.0) * half
                ct = math.cos(phi)
                st = math.sin(phi)
                rho = _rho_jit(verts, normals, offsets, s, cx, cy, ct, st)
                if rho == 0.0:
                    continue
                amp = rho * glw[off + qi] * half
                base = complex(amp * ct, -amp * st)  # rho w e^{-i phi}
                step = complex(ct * ct - st * st, -2.0 * st * ct)  # e^{-2i phi}
                for j in range(M):
                    out[s, j] += base
                    base = base * step


def _rho_numpy(pack: TrianglePack, cx, cy, phi, tri_idx):
    """Vectorized span lengths: phi (A, n) angles, tri_idx (A,) triangle per row."""
    tx = np.cos(phi)
    ty = np.sin(phi)
    n = pack.normals[tri_idx]  # (A, 3, 2)
    b = (n[:, :, 0] * cx + n[:, :, 1] * cy - pack.offsets[tri_idx])[:, :, None]  # (A, 3, 1)
    den = n[:, :, 0, None] * tx[:, None, :] + n[:, :, 1, None] * ty[:, None, :]  # (A, 3, n)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -b / den
    t_lo = np.where(den > 0, t, 0.0).max(axis=1)
    t_hi = np.where(den < 0, t, np.inf).min(axis=1)
    miss = ((den == 0) & (b < 0)).any(axis=1)
    span = np.clip(t_hi - t_lo, 0.0, None)
    span[miss] = 0.0
    return span


def _psi_point_numpy(cx, cy, pack: TrianglePack, M, density, margin):
    S = pack.count
    out = np.zeros((S, M), dtype=complex)
    rel = pack.verts - np.array([cx, cy])
    r2 = np.einsum("sij,sij->si", rel, rel)
    ang = np.arctan2(rel[:, :, 1], rel[:, :, 0])
    deg = r2 < 1e-28
    if deg.any():
        rolled = np.roll(ang, -1, axis=1)
        ang[deg] = rolled[deg]
    ang = np.sort(ang, axis=1)
    starts = ang
    ends = np.column_stack([ang[:, 1], ang[:, 2], ang[:, 0] + 2.0 * np.pi])
    widths = ends - starts
    tri_of_arc = np.repeat(np.arange(S), 3)
    st_f = starts.ravel()
    wd_f = widths.ravel()
    ok = (wd_f >= ARC_EPS) & (pack.areas[tri_of_arc] > 0.0)
    mids = (st_f + 0.5 * wd_f)[ok, None]
    rho_mid = _rho_numpy(pack, cx, cy, mids, tri_of_arc[ok])[:, 0]
    active = np.zeros(wd_f.size, dtype=bool)
    active[np.nonzero(ok)[0][rho_mid > 0.0]] = True
    if not active.any():
        return out
    nreq = (wd_f[active] * density).astype(int) + margin
    cls = np.minimum(np.searchsorted(RULE_SIZES, nreq), RULE_SIZES.size - 1)
    a_tri = tri_of_arc[active]
    a_st = st_f[active]
    a_wd = wd_f[active]
    for ci in np.unique(cls):
        sel = cls == ci
        tri_idx = a_tri[sel]
        start = a_st[sel][:, None]
        half = 0.5 * a_wd[sel][:, None]
        n = int(RULE_SIZES[ci])
        o = int(GL_OFFSETS[ci])
        glx = GL_NODES_FLAT[o : o + n]
        glw = GL_WEIGHTS_FLAT[o : o + n]
        phi = start + (glx + 1.0) * half
        rho = _rho_numpy(pack, cx, cy, phi, tri_idx)
        base = rho * (glw * half) * np.exp(-1j * phi)
        step = np.exp(-2j * phi)
        contrib = np.empty((tri_idx.size, M), dtype=complex)
        for j in range(M):
            contrib[:, j] = base.sum(axis=1)
            base *= step
        np.add.at(out, tri_idx, contrib)
    return out


def _psi_point_trapezoid(cx, cy, pack: TrianglePack, M, Q):
    """Reference periodic-trapezoid rule (kept for comparison runs)."""
    phi = -np.pi + (np.arange(Q) + 0.5) * (2.0 * np.pi / Q)
    S = pack.count
    rho = _rho_numpy(pack, cx, cy, np.broadcast_to(phi, (S, Q)), np.arange(S))
    rho = rho * (pack.areas > 0.0)[:, None]
    base = rho * (2.0 * np.pi / Q) * np.exp(-1j * phi)
    step = np.exp(-2j * phi)
    out = np.empty((S, M), dtype=complex)
    for j in range(M):
        out[:, j] = base.sum(axis=1)
        base = base * step
    return out


def psi_for_point(
    c: complex,
    pack: TrianglePack,
    M: int,
    Q_psi: int = 512,
    rule: str = "kinksplit",
) -> np.ndarray:
    """Span harmonics of every triangle for one evaluation point: (S, M) complex."""
    if rule not in PSI_RULES:
        raise ValueError(f"unknown angular rule {rule!r}; choose from {PSI_RULES}")
    c = complex(c)
    if rule == "trapezoid":
        return _psi_point_trapezoid(c.real, c.imag, pack, M, Q_psi)
    density = max(Q_psi, 2 * (2 * M + 1)) / (2.0 * np.pi)
    if using_numba():
        out = np.empty((pack.count, M), dtype=complex)
        _psi_point_jit(
            c.real,
            c.imag,
            pack.verts,
            pack.normals,
            pack.offsets,
            pack.areas,
            density,
            PSI_MARGIN,
            RULE_SIZES,
            GL_OFFSETS,
            GL_NODES_FLAT,
            GL_WEIGHTS_FLAT,
            out,
        )
        return out
    return _psi_point_numpy(c.real, c.imag, pack, M, density, PSI_MARGIN)


@dataclass(frozen=True)
class PsiTable:
    """Materialized span-harmonic table for a fixed evaluation point set.

    The pipeline streams per-point rows instead of materializing this (the
    full table at production scale is ~2 GB); the table form serves tests,
    small runs, and the optional cache file.
    """

    points: np.ndarray  # (P,) complex
    values: np.ndarray  # (P, S, M) complex
    M: int
    Q_psi: int
    rule: str

    def row_for_point(self, c: complex) -> np.ndarray:
        i = np.nonzero(np.abs(self.points - complex(c)) < 1e-12)[0]
        if i.size == 0:
            raise KeyError(f"point {c} is not in this table")
        return self.values[int(i[0])]


MATERIALIZE_LIMIT_BYTES = 600_000_000


def build_psi_table(
    points, tri, M: int, Q_psi: int = 512, rule: str = "kinksplit"
) -> PsiTable:
    """Materialize span harmonics for an evaluation point set (small scales)."""
    if Q_psi < 64:
        raise ValueError(f"angular order must be >= 64, got {Q_psi}")
    pack = tri if isinstance(tri, TrianglePack) else pack_triangles(tri)
    pts = np.asarray(points, dtype=complex).ravel()
    need = pts.size * pack.count * M * 16
    if need > MATERIALIZE_LIMIT_BYTES:
        raise MemoryError(
            f"materialized table would need {need / 1e9:.2f} GB; "
            "stream psi_for_point per evaluation point instead"
        )
    values = np.empty((pts.size, pack.count, M), dtype=complex)
    for i, c in enumerate(pts):
        values[i] = psi_for_point(complex(c), pack, M, Q_psi, rule)
    return PsiTable(points=pts, values=values, M=M, Q_psi=Q_psi, rule=rule)


PSI_CACHE_VERSION = 1


def save_psi_table(table: PsiTable, path, key: str = "") -> None:
    """Optional binary cache of a materialized table (versioned header)."""
    np.savez_compressed(
        path,
        version=np.array([PSI_CACHE_VERSION]),
        key=np.array([key]),
        points=table.points,
        values=table.values,
        M=np.array([table.M]),
        Q_psi=np.array([table.Q_psi]),
        rule=np.array([table.rule]),
    )


def load_psi_table(path, key: str = "") -> PsiTable:
    with np.load(path, allow_pickle=False) as z:
        if int(z["version"][0]) != PSI_CACHE_VERSION:
            raise ValueError(f"psi cache version {z['version'][0]} unsupported")
        if key and str(z["key"][0]) != key:
            raise ValueError("psi cache key mismatch (different mesh/config)")
        return PsiTable(
            points=z["points"],
            values=z["values"],
            M=int(z["M"][0]),
            Q_psi=int(z["Q_psi"][0]),
            rule=str(z["rule"][0]),
        )


# ---------------------------------------------------------------------------
# area potential

def area_term_all_modes(V_values: np.ndarray, psi_row: np.ndarray) -> np.ndarray:
    """Area term for every odd mode at one point from its psi row.

    V_values: (S, M) even-parity interior modes (columns -2, -4, ...).
    psi_row:  (S, M) span harmonics at the evaluation point.
    Returns (M,) complex over the odd list (-1, -3, ...): entry p couples
    column p+j of V with harmonic j.
    """
    M = V_values.shape[1]
    D = V_values.T @ psi_row  # (M, M): D[b, j] = sum_s V[s, b] psi[s, j]
    return np.array([-np.diagonal(D, -p).sum() / np.pi for p in range(M)])


def area_term_single(V_values: np.ndarray, psi_row: np.ndarray, p: int) -> complex:
    """Area term for odd mode index p (mode -(2p+1)) at one point."""
    M = V_values.shape[1]
    return complex(-np.einsum("sj,sj->", V_values[:, p:M], psi_row[:, : M - p]) / np.pi)


def eval_T(m: int, V_interior: InteriorModeTable, psi: PsiTable, c: complex) -> complex:
    """Area term for one odd mode at one tabulated evaluation point."""
    if m % 2 == 0:
        raise ValueError(f"area term is defined for odd modes, got {m}")
    if V_interior.parity != "even":
        raise ValueError(f"interior table must hold even modes, got {V_interior.parity}")
    p = _mode_index(m, "odd", V_interior.M)
    row = psi.row_for_point(complex(c))
    return area_term_single(V_interior.values, row, p)
