"""
Convex costs with subgradient oracles.

Every cost maps an array to a nonnegative float and returns a subgradient of
the same shape as its argument. The subgradient of ``|t|`` at ``t = 0`` is
taken as 0 throughout.
"""

from __future__ import annotations

import numpy as np


class ConvexCost:
    """Interface for a convex function with a subgradient oracle.

    Subclasses implement `eval` and `subgradient`. `eval_batch` evaluates a
    stack of flat points (one per row) and is only used by the brute-force
    oracle, so the default loop is adequate for anything without a
    vectorised form.
    """

    name = "cost"

    def eval(self, w) -> float:
        raise NotImplementedError

    def subgradient(self, w) -> np.ndarray:
        raise NotImplementedError

    def eval_batch(self, points: np.ndarray) -> np.ndarray:
        return np.array([self.eval(p) for p in points])

    def __call__(self, w) -> float:
        return self.eval(w)

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


# --------------------------------------------------------------------------
# total variation

def _tv_1d(w: np.ndarray) -> float:
    return float(np.abs(np.diff(w)).sum())


def _tv_2d(w: np.ndarray) -> float:
    return float(np.abs(np.diff(w, axis=0)).sum() + np.abs(np.diff(w, axis=1)).sum())


def _tv_subgradient_1d(w: np.ndarray) -> np.ndarray:
    s = np.sign(np.diff(w))
    g = np.zeros_like(w)
    g[1:] += s
    g[:-1] -= s
    return g


def _tv_subgradient_2d(w: np.ndarray) -> np.ndarray:
    g = np.zeros_like(w)
    s = np.sign(np.diff(w, axis=0))
    g[1:] += s
    g[:-1] -= s
    s = np.sign(np.diff(w, axis=1))
    g[:, 1:] += s
    g[:, :-1] -= s
    return g


class TVCost(ConvexCost):
    """Anisotropic total variation.

    In ``"1d"`` mode the argument is flattened and the absolute forward
    differences are summed. In ``"2d"`` mode the argument is read as an
    ``(H, W)`` image and vertical plus horizontal absolute differences are
    summed; differences that would leave the image are dropped, so constant
    images have zero TV.

    Parameters
    ----------
    mode : {"1d", "2d"}
    shape : tuple of int, optional
        Image shape used to unflatten vectors in 2-D mode. A 2-D array
        argument carries its own shape; a flat argument without `shape`
        is an error.
    """

    def __init__(self, mode: str = "1d", shape=None):
        if mode not in ("1d", "2d"):
            raise ValueError(f"unknown TV mode {mode!r}")
        if shape is not None:
            shape = tuple(int(s) for s in shape)
            if len(shape) != 2 or min(shape) < 1:
                raise ValueError(f"bad image shape {shape}")
        self.mode = mode
        self.shape = shape
        self.name = f"tv{mode}"

    @classmethod
    def for_signal(cls, x) -> "TVCost":
        """TV cost matching the dimensionality of `x`."""
        x = np.asarray(x)
        return cls("2d", x.shape) if x.ndim == 2 else cls("1d")

    def _grid(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=np.float64)
        if self.mode == "1d":
            return w.ravel()
        if w.ndim == 2 and (self.shape is None or w.shape == self.shape):
            return w
        if self.shape is None:
            raise ValueError("2-D total variation needs an image shape")
        if w.size != self.shape[0] * self.shape[1]:
            raise ValueError(f"signal of size {w.size} does not match image shape {self.shape}")
        return w.reshape(self.shape)

    def eval(self, w) -> float:
        grid = self._grid(w)
        return _tv_1d(grid) if self.mode == "1d" else _tv_2d(grid)

    def subgradient(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=np.float64)
        grid = self._grid(w)
        g = _tv_subgradient_1d(grid) if self.mode == "1d" else _tv_subgradient_2d(grid)
        return g.reshape(w.shape)

    def eval_batch(self, points):
        points = np.asarray(points, dtype=np.float64)
        if self.mode == "1d":
            return np.abs(np.diff(points, axis=1)).sum(axis=1)
        return super().eval_batch(points)


def tv_eval(w) -> float:
    """TV of a 1-D signal or a 2-D image (chosen by ``ndim``)."""
    return TVCost.for_signal(w).eval(w)


def tv_subgradient(w) -> np.ndarray:
    return TVCost.for_signal(w).subgradient(w)


# --------------------------------------------------------------------------
# l1 and LASSO

class L1Cost(ConvexCost):
    name = "l1"

    def eval(self, w) -> float:
        return float(np.abs(np.asarray(w, dtype=np.float64)).sum())

    def subgradient(self, w) -> np.ndarray:
        return np.sign(np.asarray(w, dtype=np.float64))

    def eval_batch(self, points):
        return np.abs(np.asarray(points, dtype=np.float64)).sum(axis=1)


def l1_eval(w) -> float:
    return L1Cost().eval(w)


def l1_subgradient(w) -> np.ndarray:
    return L1Cost().subgradient(w)


class LassoCost(ConvexCost):
    """``0.5 * |v - w|^2 + lam * |w|_1`` for a fixed observation `v`."""

    name = "lasso"

    def __init__(self, v, lam: float):
        if lam < 0:
            raise ValueError("lam must be nonnegative")
        self.v = np.asarray(v, dtype=np.float64)
        self.lam = float(lam)

    def _check(self, w):
        w = np.asarray(w, dtype=np.float64)
        if w.size != self.v.size:
            raise ValueError(f"dimension mismatch: {w.size} vs {self.v.size}")
        return w

    def eval(self, w) -> float:
        w = self._check(w)
        r = self.v.ravel() - w.ravel()
        return float(0.5 * r @ r + self.lam * np.abs(w).sum())

    def subgradient(self, w) -> np.ndarray:
        w = self._check(w)
        return w - self.v.reshape(w.shape) + self.lam * np.sign(w)

    def eval_batch(self, points):
        points = np.asarray(points, dtype=np.float64)
        r = points - self.v.ravel()
        return 0.5 * (r * r).sum(axis=1) + self.lam * np.abs(points).sum(axis=1)


def lasso_eval(w, v, lam: float) -> float:
    return LassoCost(v, lam).eval(w)


class ScaledCost(ConvexCost):
    """``alpha * inner``; its epigraph is ``{(w, y) : y >= alpha * inner(w)}``."""

    def __init__(self, inner: ConvexCost, alpha: float = 1.0):
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        self.inner = inner
        self.alpha = float(alpha)
        self.name = inner.name if self.alpha == 1.0 else f"{self.alpha:g}*{inner.name}"

    def eval(self, w) -> float:
        return self.alpha * self.inner.eval(w)

    def subgradient(self, w) -> np.ndarray:
        return self.alpha * self.inner.subgradient(w)

    def eval_batch(self, points):
        return self.alpha * self.inner.eval_batch(points)
