"""Angular Fourier reduction of boundary data.

Boundary tables g(node, direction) are reduced to complex coefficient
tables over a contiguous arithmetic list of negative modes with step -2:

    even list  m = -2, -4, ..., -2M
    odd list   m = -1, -3, ..., -2M+1

Positive modes are never stored; for real data they are complex conjugates
of the stored ones, and consumers apply the conjugation explicitly where
they need it.  Column a of a table holds mode ``modes[a]`` (shallowest
first), so the "two modes deeper" shift used by the operator tail sums is
just a column shift by one.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import ArcGrid, DirectionGrid

PARITIES = ("even", "odd")


def mode_list(parity: str, M: int) -> np.ndarray:
    """The stored mode numbers, shallowest first."""
    if parity not in PARITIES:
        raise ValueError(f"parity must be one of {PARITIES}, got {parity!r}")
    start = -2 if parity == "even" else -1
    return start - 2 * np.arange(M)


@dataclass(frozen=True)
class ModeTable:
    """Per-boundary-node Fourier coefficients, (K, M) complex.

    Carries the arc grid the rows live on so the contour operators can be
    called with the table alone.
    """

    values: np.ndarray
    parity: str
    M: int
    arc: ArcGrid | None = None

    def __post_init__(self):
        expect = (self.values.shape[0], self.M)
        if self.values.shape != expect:
            raise ValueError(f"mode table shape {self.values.shape} != {expect}")
        if self.arc is not None and self.arc.count != self.values.shape[0]:
            raise ValueError("mode table row count does not match its arc grid")

    @property
    def modes(self) -> np.ndarray:
        return mode_list(self.parity, self.M)


def fourier_modes(
    g: np.ndarray, parity: str, M: int, dirs: DirectionGrid, arc: ArcGrid | None = None
) -> ModeTable:
    """Coefficients (1/2pi) sum_n g(., theta_n) exp(-i m phi_n) dphi for the parity's modes."""
    if M < 1:
        raise ValueError(f"mode order must be >= 1, got {M}")
    N = dirs.count
    if g.ndim != 2 or g.shape[1] != N:
        raise ValueError(f"data shape {g.shape} does not match direction count {N}")
    if N < 4 * M:
        warnings.warn(
            f"direction count N={N} < 4M={4 * M}: deepest modes risk aliasing",
            stacklevel=2,
        )
    modes = mode_list(parity, M)
    # (N, M) sampling matrix; data is real so one real-complex matmul suffices
    E = np.exp(-1j * np.outer(dirs.angles, modes))
    values = (g @ E) * (dirs.step / (2.0 * np.pi))
    return ModeTable(values=values, parity=parity, M=M, arc=arc)


MODES_CSV_HEADER = "k,m,Re,Im"


def write_modes_csv(table: ModeTable, path) -> None:
    """Debug dump of a coefficient table, one row per (boundary node, mode)."""
    K = table.values.shape[0]
    modes = table.modes
    with open(path, "w") as fh:
        fh.write(MODES_CSV_HEADER + "\n")
        for k in range(K):
            for a, m in enumerate(modes):
                v = table.values[k, a]
                fh.write(f"{k},{m},{v.real:.17g},{v.imag:.17g}\n")
