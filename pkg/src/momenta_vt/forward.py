"""Forward data simulation by ray quadrature.

Boundary traces of the transport problem are simulated directly as line
integrals (Gauss-Legendre along each ray; the first-moment trace uses a
nested rule so the inner running integral is itself quadrature-evaluated).
No transport PDE is ever solved, which keeps the forward data independent
of the reconstruction discretization.

Given traces v0, v1 at an outgoing boundary/direction pair (dot = node.theta):

    moment data     I0 = v0,              I1 = dot * v0 - v1
    reduced data    g0 = I0,              g1 = dot * I0 - I1   (= v1)

on observed pairs (dot > 0); unobserved entries are stored as zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .backend import njit, using_numba
from .geometry import ArcGrid, DirectionGrid, build_arc_grid, build_circle_grid, build_direction_grid
from .phantom import PhantomSpec, eval_field, field_eval_jit

MASK_TOL = 1e-12

try:
    from numba import prange
except ImportError:  # pragma: no cover
    prange = range


# ---------------------------------------------------------------------------
# data containers

@dataclass
class TraceTable:
    v0: np.ndarray       # (K, N)
    v1: np.ndarray       # (K, N)
    mask: np.ndarray     # (K, N) bool: outgoing pairs


@dataclass(frozen=True)
class NoiseDescriptor:
    seed: int
    target_level: float
    realized_I0: float
    realized_I1: float


@dataclass
class Sinogram:
    I0: np.ndarray
    I1: np.ndarray
    mask: np.ndarray
    arc: ArcGrid
    dirs: DirectionGrid
    noise: NoiseDescriptor | None = None
    clean_I0: np.ndarray | None = None
    clean_I1: np.ndarray | None = None

    @property
    def shape(self) -> tuple:
        return self.I0.shape

    def boundary_direction_dots(self) -> np.ndarray:
        """(K, N) table of node . direction (positive = outgoing)."""
        return np.real(np.conj(self.arc.nodes)[:, None] * self.dirs.directions[None, :])


# ---------------------------------------------------------------------------
# ray quadrature kernels (numba and numpy twins)

def _gl01(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


@njit(cache=True, parallel=True)
def _rays_jit(code, zin_x, zin_y, tx, ty, length, tq, wq):  # pragma: no cover - jit
    C = zin_x.size
    q = tq.size
    v0 = np.empty(C)
    v1 = np.empty(C)
    for i in prange(C):
        T = length[i]
        dx = tx[i]
        dy = ty[i]
        ox = zin_x[i]
        oy = zin_y[i]
        acc0 = 0.0
        for a in range(q):
            px = ox + T * tq[a] * dx
            py = oy + T * tq[a] * dy
            f1, f2 = field_eval_jit(code, px, py)
            acc0 += wq[a] * (dx * f1 + dy * f2)
        v0[i] = T * acc0
        acc1 = 0.0
        for a in range(q):
            sub = T * tq[a]
            inner = 0.0
            for b in range(q):
                px = ox + sub * tq[b] * dx
                py = oy + sub * tq[b] * dy
                f1, f2 = field_eval_jit(code, px, py)
                inner += wq[b] * (dx * f1 + dy * f2)
            acc1 += wq[a] * sub * inner
        v1[i] = T * acc1
    return v0, v1


def _rays_numpy(code, zin_x, zin_y, tx, ty, length, tq, wq, chunk=1024):
    spec_map = {1: "experiment1", 2: "experiment2", 3: "solenoidal-only", 4: "custom-gradient"}
    spec = PhantomSpec(spec_map[code])
    C = zin_x.size
    q = tq.size
    v0 = np.empty(C)
    v1 = np.empty(C)
    for lo in range(0, C, chunk):
        hi = min(lo + chunk, C)
        T = length[lo:hi, None]
        dx = tx[lo:hi, None]
        dy = ty[lo:hi, None]
        ox = zin_x[lo:hi, None]
        oy = zin_y[lo:hi, None]
        px = ox + T * tq * dx
        py = oy + T * tq * dy
        fv = eval_field(spec, np.stack([px, py], axis=-1))
        v0[lo:hi] = T[:, 0] * ((dx * fv[..., 0] + dy * fv[..., 1]) @ wq)
        # nested rule: running integral evaluated at the outer nodes
        sub = T * tq  # (c, q) inner upper limits
        px = ox[..., None] + sub[..., None] * tq * dx[..., None]
        py = oy[..., None] + sub[..., None] * tq * dy[..., None]
        fv = eval_field(spec, np.stack([px, py], axis=-1))
        inner = (dx[..., None] * fv[..., 0] + dy[..., None] * fv[..., 1]) @ wq  # (c, q)
        v1[lo:hi] = T[:, 0] * ((sub * inner) @ wq)
    return v0, v1


def trace_rays(spec: PhantomSpec, zin_x, zin_y, tx, ty, length, q: int):
    """(v0, v1) line integrals from entry points along unit directions.

    v0 integrates direction . field over [0, length]; v1 integrates the
    running v0 along the same segment (nested quadrature).
    """
    tq, wq = _gl01(q)
    args = (
        np.ascontiguousarray(zin_x, dtype=float),
        np.ascontiguousarray(zin_y, dtype=float),
        np.ascontiguousarray(tx, dtype=float),
        np.ascontiguousarray(ty, dtype=float),
        np.ascontiguousarray(length, dtype=float),
        tq,
        wq,
    )
    if using_numba():
        return _rays_jit(spec.code, *args)
    return _rays_numpy(spec.code, *args)


# ---------------------------------------------------------------------------
# operations

def simulate_traces(
    spec: PhantomSpec, arc: ArcGrid, dirs: DirectionGrid, q: int = 32
) -> TraceTable:
    """Boundary traces v0, v1 on the (arc node x direction) grid over outgoing pairs."""
    if q < 2:
        raise ValueError(f"quadrature order must be >= 2, got {q}")
    dots = np.real(np.conj(arc.nodes)[:, None] * dirs.directions[None, :])
    mask = dots > MASK_TOL
    kk, nn = np.nonzero(mask)
    length = 2.0 * dots[kk, nn]
    tx = dirs.directions.real[nn]
    ty = dirs.directions.imag[nn]
    zin_x = arc.nodes.real[kk] - length * tx
    zin_y = arc.nodes.imag[kk] - length * ty
    v0f, v1f = trace_rays(spec, zin_x, zin_y, tx, ty, length, q)
    v0 = np.zeros(mask.shape)
    v1 = np.zeros(mask.shape)
    v0[kk, nn] = v0f
    v1[kk, nn] = v1f
    return TraceTable(v0=v0, v1=v1, mask=mask)


def traces_to_sinograms(tr: TraceTable, arc: ArcGrid, dirs: DirectionGrid) -> Sinogram:
    """Convert traces to moment-transform data: I0 = v0, I1 = dot*v0 - v1."""
    if tr.v0.shape != (arc.count, dirs.count):
        raise ValueError(
            f"trace table shape {tr.v0.shape} does not match grids "
            f"({arc.count}, {dirs.count})"
        )
    dots = np.real(np.conj(arc.nodes)[:, None] * dirs.directions[None, :])
    I0 = np.where(tr.mask, tr.v0, 0.0)
    I1 = np.where(tr.mask, dots * tr.v0 - tr.v1, 0.0)
    return Sinogram(I0=I0, I1=I1, mask=tr.mask.copy(), arc=arc, dirs=dirs)


def build_boundary_data(sin: Sinogram) -> tuple[np.ndarray, np.ndarray]:
    """Reduced boundary tables: g0 = I0 and g1 = dot*I0 - I1 on observed pairs, else 0."""
    dots = sin.boundary_direction_dots()
    g0 = np.where(sin.mask, sin.I0, 0.0)
    g1 = np.where(sin.mask, dots * sin.I0 - sin.I1, 0.0)
    return g0, g1


def _channel_noise(values, mask, target, seed, channel):
    """Uniform [-a, a] noise on observed cells, a calibrated to the target level."""
    n_obs = int(mask.sum())
    clean_norm = float(np.sqrt(np.sum(values[mask] ** 2)))
    if n_obs == 0 or clean_norm == 0.0 or target == 0.0:
        return np.zeros_like(values), 0.0
    amp = target * clean_norm * np.sqrt(3.0 / n_obs)
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, channel], dtype=np.uint64)))
    noise = gen.uniform(-amp, amp, size=values.shape)
    noise[~mask] = 0.0
    realized = float(np.sqrt(np.sum(noise[mask] ** 2)) / clean_norm)
    return noise, realized


def add_noise(sin: Sinogram, target_level: float, seed: int) -> Sinogram:
    """Additive i.i.d. uniform noise per channel over observed cells.

    The amplitude is calibrated per channel so the relative L2 perturbation
    lands at the target; the realized levels are recorded in the descriptor.
    Deterministic: counter-based generator keyed by (seed, channel).
    """
    if target_level < 0:
        raise ValueError(f"noise level must be >= 0, got {target_level}")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    clean_I0 = sin.I0.copy()
    clean_I1 = sin.I1.copy()
    n0, r0 = _channel_noise(clean_I0, sin.mask, target_level, seed, 0)
    n1, r1 = _channel_noise(clean_I1, sin.mask, target_level, seed, 1)
    return replace(
        sin,
        I0=clean_I0 + n0,
        I1=clean_I1 + n1,
        noise=NoiseDescriptor(seed=seed, target_level=target_level, realized_I0=r0, realized_I1=r1),
        clean_I0=clean_I0,
        clean_I1=clean_I1,
    )


def realized_noise_levels(sin: Sinogram) -> tuple[float, float]:
    """Recompute realized per-channel noise levels from the stored clean pair."""
    if sin.clean_I0 is None:
        return 0.0, 0.0
    out = []
    for noisy, clean in ((sin.I0, sin.clean_I0), (sin.I1, sin.clean_I1)):
        cn = np.sqrt(np.sum(clean[sin.mask] ** 2))
        dn = np.sqrt(np.sum((noisy - clean)[sin.mask] ** 2))
        out.append(float(dn / cn) if cn > 0 else 0.0)
    return tuple(out)


# ---------------------------------------------------------------------------
# CSV interface: header k,n,zeta_x,zeta_y,theta_x,theta_y,mask,I0,I1

CSV_HEADER = "k,n,zeta_x,zeta_y,theta_x,theta_y,mask,I0,I1"


def write_sinogram_csv(sin: Sinogram, path) -> None:
    K, N = sin.shape
    kk, nn = np.meshgrid(np.arange(K), np.arange(N), indexing="ij")
    cols = np.column_stack(
        [
            kk.ravel(),
            nn.ravel(),
            np.repeat(sin.arc.nodes.real, N),
            np.repeat(sin.arc.nodes.imag, N),
            np.tile(sin.dirs.directions.real, K),
            np.tile(sin.dirs.directions.imag, K),
            sin.mask.ravel().astype(float),
            sin.I0.ravel(),
            sin.I1.ravel(),
        ]
    )
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        np.savetxt(
            fh,
            cols,
            fmt=["%d", "%d", "%.17g", "%.17g", "%.17g", "%.17g", "%d", "%.17g", "%.17g"],
            delimiter=",",
        )


def read_sinogram_csv(path) -> Sinogram:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"bad sinogram header in {path}: {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != 9:
        raise ValueError(f"bad sinogram file {path}: expected 9 columns")
    kk = data[:, 0].astype(int)
    nn = data[:, 1].astype(int)
    K, N = kk.max() + 1, nn.max() + 1
    if data.shape[0] != K * N:
        raise ValueError(f"bad sinogram file {path}: incomplete {K}x{N} grid")
    dirs = build_direction_grid(N)
    # choose arc layout by matching the stored nodes
    stored = np.zeros(K, dtype=complex)
    stored[kk] = data[:, 2] + 1j * data[:, 3]
    arc = build_arc_grid(K)
    if not np.allclose(arc.nodes, stored, atol=1e-9):
        arc = build_circle_grid(K)
        if not np.allclose(arc.nodes, stored, atol=1e-9):
            raise ValueError(f"bad sinogram file {path}: nodes match no supported boundary grid")
    seen = np.zeros((K, N), dtype=bool)
    seen[kk, nn] = True
    if not seen.all():
        raise ValueError(f"bad sinogram file {path}: duplicate or missing (k, n) rows")
    I0 = np.zeros((K, N))
    I1 = np.zeros((K, N))
    mask = np.zeros((K, N), dtype=bool)
    I0[kk, nn] = data[:, 7]
    I1[kk, nn] = data[:, 8]
    mask[kk, nn] = data[:, 6] > 0.5
    I0[~mask] = 0.0
    I1[~mask] = 0.0
    return Sinogram(I0=I0, I1=I1, mask=mask, arc=arc, dirs=dirs)
