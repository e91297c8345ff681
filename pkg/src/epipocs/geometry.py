"""
Lifted-space primitives: signals, lifted points, hyperplanes and the
elementary projections everything else is built from.

Signals are plain float64 numpy arrays. Images are 2-D arrays of shape
``(H, W)``; flattening is row-major, so pixel ``(i, j)`` sits at index
``i * W + j`` of the vectorised signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NumericalError(FloatingPointError):
    """Raised when an iteration produces NaN or Inf."""


def as_signal(x, name: str = "signal") -> np.ndarray:
    """Return `x` as a float64 array, rejecting empty or non-finite input."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} contains NaN or Inf")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LiftedPoint:
    """A point ``(w, y)`` of R^{N+1}: a signal plus one extra coordinate."""

    w: np.ndarray
    y: float

    def __post_init__(self):
        object.__setattr__(self, "w", _frozen(as_signal(self.w, "w")))
        y = float(self.y)
        if not np.isfinite(y):
            raise NumericalError("lifted coordinate y is not finite")
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.w.size

    def vector(self) -> np.ndarray:
        """Flat ``[w, y]`` vector of length N+1."""
        return np.append(self.w.ravel(), self.y)

    @classmethod
    def from_vector(cls, z, shape=None) -> "LiftedPoint":
        z = np.asarray(z, dtype=np.float64)
        w = z[:-1] if shape is None else z[:-1].reshape(shape)
        return cls(w, z[-1])


@dataclass(frozen=True)
class Hyperplane:
    """The affine set ``{x : normal . x = offset}``.

    A zero normal is rejected here so that projections never divide by zero.
    """

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = as_signal(self.normal, "normal").ravel()
        nsq = float(a @ a)
        if nsq == 0.0:
            raise ValueError("hyperplane normal must be nonzero")
        object.__setattr__(self, "normal", _frozen(a))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "_norm_sq", nsq)

    @property
    def dim(self) -> int:
        return self.normal.size

    @property
    def norm_sq(self) -> float:
        return self._norm_sq

    def residual(self, x) -> float:
        """Signed residual ``normal . x - offset``."""
        return float(self.normal @ np.asarray(x, dtype=np.float64).ravel()) - self.offset


def project_onto_hyperplane(x, h: Hyperplane) -> np.ndarray:
    """Orthogonal projection of `x` onto the hyperplane `h`.

    Returns ``x - ((a.x - b) / |a|^2) a`` with the same shape as `x`.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size != h.dim:
        raise ValueError(f"dimension mismatch: point has {x.size} entries, hyperplane {h.dim}")
    flat = x.ravel()
    step = (h.normal @ flat - h.offset) / h.norm_sq
    return (flat - step * h.normal).reshape(x.shape)


def project_onto_level_set(p: LiftedPoint, alpha: float) -> LiftedPoint:
    """Project onto the half-space ``{(w, y) : y <= alpha}``."""
    if p.y <= alpha:
        return p
    return LiftedPoint(p.w, alpha)


def euclidean_distance(x, z) -> float:
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.size != z.size:
        raise ValueError(f"dimension mismatch: {x.size} vs {z.size}")
    return float(np.linalg.norm(x.ravel() - z.ravel()))
