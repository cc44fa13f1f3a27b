"""Neighborhood least-squares differentiation on the mesh and field assembly.

Derivatives at a triangle's centroid are fit from the value differences to
the centroids of its neighborhood (triangles within the configured radius):
an affine model for first derivatives, a quadratic model for first plus
second.  The fits are unweighted normal-equation solves; a distance
weighting can be switched on experimentally but defaults to off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Triangulation

PROVENANCES = ("reconstructed", "analytic")
EXACTNESS_TOL = 1e-10


@dataclass(frozen=True)
class FieldOnMesh:
    """Per-triangle planar vector field sampled at centroids."""

    f1: np.ndarray
    f2: np.ndarray
    mesh: Triangulation
    provenance: str

    def __post_init__(self):
        f1 = np.asarray(self.f1, dtype=float)
        f2 = np.asarray(self.f2, dtype=float)
        object.__setattr__(self, "f1", f1)
        object.__setattr__(self, "f2", f2)
        if f1.shape != (self.mesh.count,) or f2.shape != (self.mesh.count,):
            raise ValueError(
                f"field has {f1.shape}/{f2.shape} entries for a mesh of {self.mesh.count} triangles"
            )
        if not (np.all(np.isfinite(f1)) and np.all(np.isfinite(f2))):
            raise ValueError("field contains non-finite values")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}, got {self.provenance!r}")

    @property
    def vectors(self) -> np.ndarray:
        return np.column_stack([self.f1, self.f2])


@dataclass(frozen=True)
class DerivativeBundle:
    """First derivatives of the deep even interior mode and first plus
    second derivatives of the leading odd interior mode."""

    even_dx: np.ndarray
    even_dy: np.ndarray
    odd_dx: np.ndarray
    odd_dy: np.ndarray
    odd_dxx: np.ndarray
    odd_dxy: np.ndarray
    odd_dyy: np.ndarray

    def __post_init__(self):
        for name in ("even_dx", "even_dy", "odd_dx", "odd_dy", "odd_dxx", "odd_dxy", "odd_dyy"):
            a = np.asarray(getattr(self, name), dtype=complex)
            object.__setattr__(self, name, a)
            if not np.all(np.isfinite(a)):
                raise ValueError(f"derivative array {name} contains non-finite values")


def _neighbor_offsets(tri: Triangulation, s: int):
    if tri.neighborhoods is None:
        raise ValueError("mesh has no neighborhoods attached; call neighborhoods(tri, R) first")
    members = tri.neighborhoods[s]
    others = members[members != s]
    d = tri.centroids[others] - tri.centroids[s]
    return others, d


def lsq_gradient(
    tri: Triangulation, values: np.ndarray, distance_weighting: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Per-triangle (d/dx, d/dy) from an affine fit over the neighborhood.

    With distance_weighting, rows are weighted by inverse squared distance
    so near members dominate; that sharpens smooth-function accuracy but
    smooths less, so the reconstruction pipeline keeps uniform weights.
    Affine inputs are reproduced exactly either way.
    """
    v = np.asarray(values, dtype=complex)
    if v.shape != (tri.count,):
        raise ValueError(f"need one value per triangle ({tri.count}), got shape {v.shape}")
    dx = np.empty(tri.count, dtype=complex)
    dy = np.empty(tri.count, dtype=complex)
    for s in range(tri.count):
        others, d = _neighbor_offsets(tri, s)
        rhs = v[others] - v[s]
        if distance_weighting:
            w = 1.0 / (d[:, 0] ** 2 + d[:, 1] ** 2)
            d = d * w[:, None]
            rhs = rhs * w
        AtA = d.T @ d
        Atb = d.T @ rhs
        try:
            g = np.linalg.solve(AtA, Atb)
        except np.linalg.LinAlgError as e:
            raise ValueError(f"rank-deficient gradient neighborhood at triangle {s}") from e
        dx[s], dy[s] = g
    return dx, dy


def _quadratic_rows(d: np.ndarray) -> np.ndarray:
    return np.column_stack(
        [
            d[:, 0],
            d[:, 1],
            0.5 * d[:, 0] ** 2,
            d[:, 0] * d[:, 1],
            0.5 * d[:, 1] ** 2,
        ]
    )


def lsq_hessian(
    tri: Triangulation, values: np.ndarray, distance_weighting: bool = False
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-triangle (dx, dy, dxx, dxy, dyy) from a quadratic fit.

    Same optional inverse-square row weighting as the gradient fit;
    quadratic inputs are reproduced exactly either way.
    """
    v = np.asarray(values, dtype=complex)
    if v.shape != (tri.count,):
        raise ValueError(f"need one value per triangle ({tri.count}), got shape {v.shape}")
    out = np.empty((5, tri.count), dtype=complex)
    for s in range(tri.count):
        others, d = _neighbor_offsets(tri, s)
        if others.size < 5:
            raise ValueError(
                f"triangle {s} has only {others.size} neighbors; the quadratic fit needs 5"
            )
        A = _quadratic_rows(d)
        rhs = v[others] - v[s]
        if distance_weighting:
            w = 1.0 / (d[:, 0] ** 2 + d[:, 1] ** 2)
            A = A * w[:, None]
            rhs = rhs * w
        AtA = A.T @ A
        Atb = A.T @ rhs
        try:
            sol = np.linalg.solve(AtA, Atb)
        except np.linalg.LinAlgError as e:
            raise ValueError(f"rank-deficient quadratic neighborhood at triangle {s}") from e
        out[:, s] = sol
    return tuple(out)


def differentiate(tri: Triangulation, even_deep: np.ndarray, odd_lead: np.ndarray) -> DerivativeBundle:
    """Both fits in one call: gradient of the even input, full quadratic of the odd."""
    gdx, gdy = lsq_gradient(tri, even_deep)
    udx, udy, udxx, udxy, udyy = lsq_hessian(tri, odd_lead)
    return DerivativeBundle(
        even_dx=gdx, even_dy=gdy,
        odd_dx=udx, odd_dy=udy, odd_dxx=udxx, odd_dxy=udxy, odd_dyy=udyy,
    )


def assemble_F1(d: DerivativeBundle) -> np.ndarray:
    """Combine the derivative bundle into the complex field density F1."""
    lap = d.odd_dxx + d.odd_dyy
    defect = d.odd_dxx - d.odd_dyy - 2j * d.odd_dxy
    return 0.25 * lap + 0.25 * np.conj(defect) + 0.5 * (d.even_dx - 1j * d.even_dy)


def assemble_field(F1: np.ndarray, tri: Triangulation) -> FieldOnMesh:
    """Planar field from the complex density: components (2 Re F1, 2 Im F1)."""
    F1 = np.asarray(F1, dtype=complex)
    return FieldOnMesh(
        f1=2.0 * F1.real, f2=2.0 * F1.imag, mesh=tri, provenance="reconstructed"
    )
