"""
Piecewise-constant synthetic test images on the 8-bit intensity scale.
"""

from __future__ import annotations

import numpy as np


def make_phantom(size: int = 64, seed=None) -> np.ndarray:
    """Piecewise-constant ``size x size`` image.

    Without a seed this is a fixed image: background 60, a large block of
    180 and an overlapping smaller block of 120. With a seed the image is a
    random background plus 3 to 6 rectangles and discs of random levels in
    [0, 255].
    """
    if size < 4:
        raise ValueError("phantom size must be at least 4")
    if seed is None:
        img = np.full((size, size), 60.0)
        s = size / 64.0
        r = lambda a: int(round(a * s))  # noqa: E731
        img[r(16) : r(48), r(12) : r(40)] = 180.0
        img[r(40) : r(60), r(44) : r(60)] = 120.0
        return img
    rng = np.random.default_rng(seed)
    img = np.full((size, size), float(rng.integers(20, 100)))
    ii, jj = np.mgrid[0:size, 0:size]
    for _ in range(rng.integers(3, 7)):
        level = float(rng.integers(0, 256))
        if rng.random() < 0.5:
            h, w = rng.integers(size // 8, size // 2, size=2)
            i0, j0 = rng.integers(0, size - h), rng.integers(0, size - w)
            img[i0 : i0 + h, j0 : j0 + w] = level
        else:
            rad = rng.uniform(size / 12, size / 4)
            ci, cj = rng.uniform(rad, size - rad, size=2)
            img[(ii - ci) ** 2 + (jj - cj) ** 2 <= rad**2] = level
    return img


def synthetic_corpus(n: int = 10, size: int = 64, seed: int = 0) -> list:
    """`n` seeded phantoms; phantom ``i`` uses seed ``(seed, i)``."""
    return [make_phantom(size, seed=[seed, i]) for i in range(n)]
