"""Closed-form test vector fields and their scalar potentials.

Two benchmark fields share one divergence-free (solenoidal) part and differ
in the gradient part:

    experiment1     grad( sin(pi*(x^2+y^2)) ) + solenoidal part
    experiment2     grad( arctan(y/(2+x)) )   + solenoidal part
    solenoidal-only the shared divergence-free part alone
    custom-gradient the experiment1 gradient part alone

The experiment1 potential vanishes on the unit circle, which makes the
zeroth-moment data of experiment1 and solenoidal-only coincide — a useful
end-to-end oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import njit

_IDS = ("experiment1", "experiment2", "solenoidal-only", "custom-gradient")
_ALIASES = {
    "ex1": "experiment1",
    "ex2": "experiment2",
    "solenoidal": "solenoidal-only",
    "gradient": "custom-gradient",
}
# integer codes for the jit-compiled evaluators
_CODES = {"experiment1": 1, "experiment2": 2, "solenoidal-only": 3, "custom-gradient": 4}


@dataclass(frozen=True)
class PhantomSpec:
    id: str

    def __post_init__(self):
        if self.id not in _IDS:
            raise ValueError(f"unknown phantom {self.id!r}; choose from {_IDS}")

    @property
    def code(self) -> int:
        return _CODES[self.id]

    @property
    def has_gradient_part(self) -> bool:
        return self.id != "solenoidal-only"


def make_phantom(name: str) -> PhantomSpec:
    """Accepts both full ids and the CLI short names ex1/ex2/solenoidal/gradient."""
    return PhantomSpec(_ALIASES.get(name, name))


def _solenoidal(x, y):
    r2 = x * x + y * y
    w = 6.0 * x * y
    f1 = 2.0 * x * y * np.cos(r2) + np.cos(w) - w * np.sin(w)
    f2 = -np.sin(r2) - 2.0 * x * x * np.cos(r2) + 6.0 * y * y * np.sin(w)
    return f1, f2


def _gradient_part(code, x, y):
    if code == 1 or code == 4:
        c = 2.0 * np.pi * np.cos(np.pi * (x * x + y * y))
        return c * x, c * y
    # experiment2: grad arctan(y/(2+x))
    den = (2.0 + x) ** 2 + y * y
    return -y / den, (2.0 + x) / den


def eval_field(spec: PhantomSpec, p) -> np.ndarray:
    """Field values at p: input a single (x, y) pair or an (..., 2) array,
    output an array of the same shape with components along the last axis."""
    pt = np.asarray(p, dtype=float)
    x, y = pt[..., 0], pt[..., 1]
    code = spec.code
    if code == 3:
        f1, f2 = _solenoidal(x, y)
    else:
        f1, f2 = _gradient_part(code, x, y)
        if code != 4:
            s1, s2 = _solenoidal(x, y)
            f1 = f1 + s1
            f2 = f2 + s2
    return np.stack([np.broadcast_to(f1, x.shape), np.broadcast_to(f2, x.shape)], axis=-1)


def eval_potential(spec: PhantomSpec, p):
    """Scalar potential of the gradient part (rejects solenoidal-only)."""
    if not spec.has_gradient_part:
        raise ValueError("solenoidal-only phantom has no scalar potential")
    pt = np.asarray(p, dtype=float)
    x, y = pt[..., 0], pt[..., 1]
    if spec.code == 2:
        return np.arctan(y / (2.0 + x))
    return np.sin(np.pi * (x * x + y * y))


@njit(cache=True)
def field_eval_jit(code: int, x: float, y: float):
    """Scalar field evaluation usable inside jit-compiled quadrature loops."""
    f1 = 0.0
    f2 = 0.0
    if code == 1 or code == 4:
        c = 2.0 * np.pi * np.cos(np.pi * (x * x + y * y))
        f1 += c * x
        f2 += c * y
    elif code == 2:
        den = (2.0 + x) * (2.0 + x) + y * y
        f1 += -y / den
        f2 += (2.0 + x) / den
    if code != 4:
        r2 = x * x + y * y
        w = 6.0 * x * y
        f1 += 2.0 * x * y * np.cos(r2) + np.cos(w) - w * np.sin(w)
        f2 += -np.sin(r2) - 2.0 * x * x * np.cos(r2) + 6.0 * y * y * np.sin(w)
    return f1, f2
