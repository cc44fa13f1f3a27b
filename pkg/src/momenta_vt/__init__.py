"""Reconstruction of a planar vector field on the convex hull of a boundary
arc from the zeroth and first moments of its ray transform.

The package is organized bottom-up:

* :mod:`momenta_vt.geometry`   - boundary/direction/chord grids, half-disc mesh
* :mod:`momenta_vt.phantom`    - built-in test fields
* :mod:`momenta_vt.forward`    - data simulation by ray quadrature, noise, CSV
* :mod:`momenta_vt.harmonics`  - angular Fourier mode tables
* :mod:`momenta_vt.kernels`    - boundary, extension, and area operators
* :mod:`momenta_vt.sie`        - chord singular-equation solve
* :mod:`momenta_vt.calculus`   - least-squares differentiation, field assembly
* :mod:`momenta_vt.pipeline`   - end-to-end drivers and error metrics
* :mod:`momenta_vt.render`     - deterministic text-PPM images
* :mod:`momenta_vt.cli`        - the ``momenta-vt`` command

Hot kernels run through numba when available; set ``MOMENTA_VT_BACKEND=numpy``
to force the pure-numpy twin implementations.
"""

from .backend import backend, set_backend, set_threads, using_numba
from .calculus import (
    DerivativeBundle,
    FieldOnMesh,
    assemble_F1,
    assemble_field,
    differentiate,
    lsq_gradient,
    lsq_hessian,
)
from .forward import (
    NoiseDescriptor,
    Sinogram,
    TraceTable,
    add_noise,
    build_boundary_data,
    read_sinogram_csv,
    realized_noise_levels,
    simulate_traces,
    traces_to_sinograms,
    write_sinogram_csv,
)
from .geometry import (
    ArcGrid,
    ChordGrid,
    DirectionGrid,
    Triangulation,
    build_arc_grid,
    build_chord_grid,
    build_circle_grid,
    build_direction_grid,
    mirror_triangulation,
    neighborhoods,
    read_mesh,
    triangulate_half_disc,
    write_mesh,
)
from .harmonics import ModeTable, fourier_modes, mode_list
from .kernels import (
    ChordModeTable,
    InteriorModeTable,
    PsiTable,
    build_psi_table,
    eval_B,
    eval_F,
    eval_T,
    psi_for_point,
)
from .phantom import PhantomSpec, eval_field, eval_potential, make_phantom
from .pipeline import (
    ReconConfig,
    analytic_field,
    chord_trace_oracle,
    error_table,
    make_mesh,
    read_field_csv,
    reconstruct,
    reconstruct_full,
    reconstruct_partial,
    relative_l2_error,
    simulate_sinogram,
    write_field_csv,
)
from .sie import HilbertSystem, assemble, condition_number, solve_modes

__version__ = "0.1.0"

__all__ = [
    "ArcGrid", "ChordGrid", "ChordModeTable", "DerivativeBundle", "DirectionGrid",
    "FieldOnMesh", "HilbertSystem", "InteriorModeTable", "ModeTable",
    "NoiseDescriptor", "PhantomSpec", "PsiTable", "ReconConfig", "Sinogram",
    "TraceTable", "Triangulation",
    "add_noise", "analytic_field", "assemble", "assemble_F1", "assemble_field",
    "backend", "build_arc_grid", "build_boundary_data", "build_chord_grid",
    "build_circle_grid", "build_direction_grid", "build_psi_table",
    "chord_trace_oracle", "condition_number", "differentiate", "error_table",
    "eval_B", "eval_F", "eval_T", "eval_field", "eval_potential", "fourier_modes",
    "lsq_gradient", "lsq_hessian", "make_mesh", "make_phantom",
    "mirror_triangulation", "mode_list", "neighborhoods", "psi_for_point",
    "read_field_csv", "read_mesh", "read_sinogram_csv", "realized_noise_levels",
    "reconstruct", "reconstruct_full", "reconstruct_partial", "relative_l2_error",
    "set_backend", "set_threads", "simulate_sinogram", "simulate_traces",
    "solve_modes", "traces_to_sinograms", "triangulate_half_disc", "using_numba",
    "write_field_csv", "write_mesh", "write_sinogram_csv",
]
