"""Dense solve of the chord singular integral equation, one mode at a time.

The discretized equation is (I - i H) v = rhs with H the principal-value
chord convolution 1/(pi (x_j - x_l)) times the node spacing.  The matrix is
assembled once per chord grid, LU-factorized once, and the factorization is
shared by every mode's back-substitution, so solving the ~2M right-hand
sides costs a single factorization plus one triangular solve per mode.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve

from .geometry import ChordGrid
from .kernels import ChordModeTable

log = logging.getLogger(__name__)

RESIDUAL_LIMIT = 1e-9


@dataclass(frozen=True)
class HilbertSystem:
    """Assembled chord system: unit diagonal, purely imaginary Cauchy off-diagonal."""

    matrix: np.ndarray
    J: int
    s: float
    chord: ChordGrid
    _lu: tuple = field(repr=False)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v


def assemble(chord: ChordGrid) -> HilbertSystem:
    """Build and LU-factorize the chord system for a node grid."""
    x = chord.nodes
    J = x.size
    if J < 2:
        raise ValueError(f"chord system needs at least 2 nodes, got {J}")
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    A = (-1j * chord.step / np.pi) / diff
    np.fill_diagonal(A, 1.0)
    lu = lu_factor(A)
    if not np.all(np.isfinite(lu[0])) or np.any(np.diagonal(lu[0]) == 0.0):
        raise RuntimeError("chord system factorization is singular")
    return HilbertSystem(matrix=A, J=J, s=chord.half_length, chord=chord, _lu=lu)


def solve_modes(
    sys: HilbertSystem,
    rhs: np.ndarray,
    parity: str,
    level: int,
    tikhonov: float = 0.0,
) -> ChordModeTable:
    """Solve the chord system for each right-hand-side column.

    ``rhs`` is (J, M) complex, one column per mode, shallowest mode first.
    Every solution's residual max|Av - b| / (max|b| + eps) must stay below
    ``RESIDUAL_LIMIT``; a breach raises with the offending mode indices.
    A positive ``tikhonov`` switches to the regularized normal equations
    (experimental; the residual gate is then reported but not enforced).
    """
    b = np.asarray(rhs, dtype=complex)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if b.shape[0] != sys.J:
        raise ValueError(f"rhs has {b.shape[0]} rows, system has {sys.J} nodes")
    if tikhonov < 0.0:
        raise ValueError("regularization weight must be nonnegative")
    if tikhonov > 0.0:
        AH = sys.matrix.conj().T
        chol = cho_factor(AH @ sys.matrix + tikhonov * np.eye(sys.J))
        v = cho_solve(chol, AH @ b)
    else:
        v = lu_solve(sys._lu, b)
    resid = np.abs(sys.matrix @ v - b).max(axis=0) / (np.abs(b).max(axis=0) + 1e-30)
    worst = float(resid.max())
    log.debug("chord solve: %d modes, max relative residual %.3e", b.shape[1], worst)
    if tikhonov == 0.0 and worst >= RESIDUAL_LIMIT:
        bad = np.nonzero(resid >= RESIDUAL_LIMIT)[0]
        raise RuntimeError(
            f"chord solve residual breach at mode columns {bad.tolist()}: "
            f"max {worst:.3e} >= {RESIDUAL_LIMIT}"
        )
    return ChordModeTable(
        values=v, parity=parity, level=level, M=v.shape[1], chord=sys.chord
    )


def max_relative_residual(sys: HilbertSystem, rhs: np.ndarray, values: np.ndarray) -> float:
    """Recompute the solve-quality figure for diagnostics."""
    b = np.asarray(rhs, dtype=complex)
    v = np.asarray(values, dtype=complex)
    if b.ndim == 1:
        b = b[:, None]
        v = v[:, None]
    resid = np.abs(sys.matrix @ v - b).max(axis=0) / (np.abs(b).max(axis=0) + 1e-30)
    return float(resid.max())


def condition_number(sys: HilbertSystem) -> float:
    """2-norm condition number (the matrix is Hermitian: real eigenvalues)."""
    lam = np.abs(np.linalg.eigvalsh(sys.matrix))
    return float(lam.max() / lam.min())
