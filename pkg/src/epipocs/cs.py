"""
Compressive-sensing reconstruction by alternating projections.

Each outer iteration sweeps the measurement hyperplanes ``theta_i . s = v_i``
in natural order (a Kaczmarz sweep) and then projects the lifted iterate
``(s, y)`` onto the epigraph of the sparsity cost. The lifted coordinate is
untouched by the measurement hyperplanes, so it is carried from one epigraph
projection to the next.

Conventions: ``psi`` is an orthonormal sparsifying transform with
coefficients ``s = psi x``, ``phi`` is the M x N measurement matrix, the
measurements are ``v = phi x`` and the system matrix acting on coefficients
is ``theta = phi psi^T``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct, dctn, idct, idctn

from .costs import ConvexCost, L1Cost, ScaledCost, TVCost
from .epigraph import CutPool, project_onto_epigraph
from .geometry import LiftedPoint, NumericalError, as_signal

# --------------------------------------------------------------------------
# transforms


def dct_forward(x) -> np.ndarray:
    """Orthonormal type-II DCT of a 1-D signal (``dctn`` for 2-D input)."""
    x = np.asarray(x, dtype=np.float64)
    return dct(x, norm="ortho") if x.ndim == 1 else dctn(x, norm="ortho")


def dct_inverse(s) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    return idct(s, norm="ortho") if s.ndim == 1 else idctn(s, norm="ortho")


@dataclass(frozen=True)
class TransformOp:
    """Orthonormal sparsifying transform on flat vectors.

    ``kind="dct"`` applies the 1-D DCT, or the separable 2-D DCT when
    `shape` is a 2-tuple. ``kind="identity"`` does nothing.
    """

    kind: str = "identity"
    shape: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("dct", "identity"):
            raise ValueError(f"unknown transform {self.kind!r}")

    def _grid(self, x):
        x = np.asarray(x, dtype=np.float64)
        return x.reshape(self.shape) if self.shape is not None else x.ravel()

    def forward(self, x) -> np.ndarray:
        if self.kind == "identity":
            return np.asarray(x, dtype=np.float64).ravel().copy()
        return dct_forward(self._grid(x)).ravel()

    def inverse(self, s) -> np.ndarray:
        if self.kind == "identity":
            return np.asarray(s, dtype=np.float64).ravel().copy()
        return dct_inverse(self._grid(s)).ravel()

    def system_matrix(self, phi) -> np.ndarray:
        """``phi psi^T``: each row is the forward transform of a row of `phi`."""
        phi = np.asarray(phi, dtype=np.float64)
        return np.array([self.forward(row) for row in phi])


# --------------------------------------------------------------------------
# measurements


@dataclass(frozen=True)
class MeasurementSystem:
    """Linear measurements ``measurements = matrix @ s``.

    With ``transform`` set, `matrix` acts on transform coefficients and
    reconstructions are mapped back through ``transform.inverse``.
    """

    matrix: np.ndarray
    measurements: np.ndarray
    transform: TransformOp | None = None

    def __post_init__(self):
        A = as_signal(self.matrix, "matrix")
        if A.ndim != 2:
            raise ValueError("measurement matrix must be 2-D")
        m, n = A.shape
        if m > n:
            raise ValueError(f"more measurements than unknowns ({m} > {n})")
        row_sq = (A * A).sum(axis=1)
        if np.any(row_sq == 0):
            raise ValueError("measurement matrix has a zero row")
        v = as_signal(self.measurements, "measurements").ravel()
        if v.size != m:
            raise ValueError(f"{v.size} measurements for a {m}-row matrix")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "measurements", v)
        object.__setattr__(self, "_row_sq", row_sq)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def domain(self) -> str:
        return "signal" if self.transform is None else "transform"

    @classmethod
    def from_signal(cls, phi, x, transform: TransformOp | None = None):
        """Measure `x` with `phi` and express the system in the domain of `transform`."""
        phi = np.asarray(phi, dtype=np.float64)
        v = measure(phi, np.asarray(x, dtype=np.float64).ravel())
        theta = phi if transform is None else transform.system_matrix(phi)
        return cls(theta, v, transform)

    def residual(self, s) -> float:
        return float(np.linalg.norm(self.matrix @ s - self.measurements))

    def to_signal(self, s) -> np.ndarray:
        return s.copy() if self.transform is None else self.transform.inverse(s)


def gaussian_measurement_matrix(m: int, n: int, seed) -> np.ndarray:
    """Seeded i.i.d. standard normal ``m x n`` matrix with unit-norm rows."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    A = np.random.default_rng(seed).standard_normal((m, n))
    return A / np.linalg.norm(A, axis=1, keepdims=True)


def measure(matrix, s) -> np.ndarray:
    A = np.asarray(matrix, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64).ravel()
    if A.ndim != 2 or A.shape[1] != s.size:
        raise ValueError(f"cannot apply a {A.shape} matrix to {s.size} samples")
    return A @ s


def kaczmarz_sweep(s, system: MeasurementSystem) -> np.ndarray:
    """Project `s` onto each measurement hyperplane in turn, rows 1..M."""
    A = system.matrix
    v = system.measurements
    scale = 1.0 / system._row_sq
    s = np.array(s, dtype=np.float64).ravel()
    if s.size != A.shape[1]:
        raise ValueError(f"signal of size {s.size} for a system with {A.shape[1]} unknowns")
    for i in range(A.shape[0]):
        s += ((v[i] - A[i] @ s) * scale[i]) * A[i]
    return s


# --------------------------------------------------------------------------
# reconstruction


@dataclass
class CSTrace:
    """Outer-iteration record of `cs_reconstruct`.

    `w_int` is the iterate after the last measurement sweep and `w_f` the
    epigraph point (first N coordinates) that followed it, with lifted
    coordinate `y`. Per-iteration lists hold the measurement residual and
    the (unscaled) cost of the swept iterate and the change of the outer
    iterate.
    """

    residuals: list = field(default_factory=list)
    costs: list = field(default_factory=list)
    changes: list = field(default_factory=list)
    w_int: np.ndarray | None = None
    w_f: np.ndarray | None = None
    y: float = 0.0
    epigraph_steps: int = 0
    stop_reason: str = "max_iter"

    @property
    def iterations(self) -> int:
        return len(self.changes)


def cs_reconstruct(
    system: MeasurementSystem,
    cost: ConvexCost,
    alpha: float = 1.0,
    tol: float = 1e-6,
    max_outer: int = 1000,
    inner_iter: int = 30,
    lift: str = "carry",
    callback=None,
):
    """Reconstruct from compressive measurements.

    Parameters
    ----------
    system : MeasurementSystem
    cost : ConvexCost
        Sparsity cost of the unknown (the coefficients when the system has a
        transform).
    alpha : float
        Epigraph weight.
    tol : float
        Stop when the outer iterate moves by at most `tol` in norm.
    max_outer : int
    inner_iter : int
        Supporting hyperplanes added per epigraph projection. Cuts persist
        in a pool across outer iterations.
    lift : {"carry", "reset"}
        Lifted coordinate handed to each epigraph projection: the value
        left by the previous projection, or 0 (projection onto the level
        set ``y <= 0`` before every epigraph step).
    callback : callable, optional
        Called as ``callback(iteration, swept)`` after every outer
        iteration with the swept iterate in the coefficient domain.

    Returns
    -------
    estimate : ndarray
        Swept iterate of the last outer iteration, in the signal domain.
    trace : CSTrace
    """
    if max_outer < 1:
        raise ValueError("max_outer must be at least 1")
    if lift not in ("carry", "reset"):
        raise ValueError(f"unknown lift rule {lift!r}")
    scaled = ScaledCost(cost, alpha)
    n = system.shape[1]
    s = np.zeros(n)
    y = 0.0
    pool = CutPool()
    trace = CSTrace()
    for _ in range(max_outer):
        swept = kaczmarz_sweep(s, system)
        if not np.all(np.isfinite(swept)):
            raise NumericalError("non-finite iterate after measurement sweep")
        point, ptrace = project_onto_epigraph(
            scaled,
            LiftedPoint(swept, y if lift == "carry" else 0.0),
            tol=tol,
            max_iter=inner_iter,
            stop_on_increase=False,
            pool=pool,
        )
        trace.epigraph_steps += len(ptrace)
        change = float(np.linalg.norm(point.w - s))
        s, y = np.array(point.w), point.y
        trace.residuals.append(system.residual(swept))
        trace.costs.append(cost.eval(swept))
        trace.changes.append(change)
        trace.w_int = swept
        if callback is not None:
            callback(trace.iterations, swept)
        if change <= tol:
            trace.stop_reason = "tolerance"
            break
    trace.w_f = s
    trace.y = y
    return system.to_signal(trace.w_int), trace


# --------------------------------------------------------------------------
# block-based 2-D reconstruction


@dataclass(frozen=True)
class BlockScheme:
    block_size: int = 32
    ratio: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError("block size must be positive")
        if not 0 < self.ratio <= 1:
            raise ValueError("measurement ratio must lie in (0, 1]")

    @property
    def measurements(self) -> int:
        return max(1, round(self.ratio * self.block_size**2))


def _block_system(scheme: BlockScheme, cost_kind: str):
    B = scheme.block_size
    phi = gaussian_measurement_matrix(scheme.measurements, B * B, scheme.seed)
    if cost_kind == "tv":
        return phi, None, TVCost("2d", (B, B))
    if cost_kind == "l1_dct":
        return phi, TransformOp("dct", (B, B)), L1Cost()
    raise ValueError(f"unknown block cost {cost_kind!r}")


def _reconstruct_block(args):
    phi, transform, cost, block, alpha, tol, max_outer, inner_iter = args
    system = MeasurementSystem.from_signal(phi, block, transform)
    estimate, _ = cs_reconstruct(system, cost, alpha, tol, max_outer, inner_iter)
    return estimate.reshape(block.shape)


def block_cs_reconstruct(
    image,
    scheme: BlockScheme,
    cost_kind: str = "tv",
    alpha: float = 1.0,
    *,
    tol: float = 1e-6,
    max_outer: int = 1000,
    inner_iter: int = 30,
    order=None,
    workers: int | None = None,
) -> np.ndarray:
    """Measure and reconstruct `image` block by block.

    The image is edge-replicated up to a multiple of the block size, every
    block is measured with the same seeded matrix and reconstructed on its
    own, and the result is cropped back. `order` permutes the processing
    order of the blocks (row-major indices) and `workers` > 1 spreads blocks
    over processes; neither affects the output.
    """
    image = as_signal(image, "image")
    if image.ndim != 2:
        raise ValueError("block reconstruction needs a 2-D image")
    B = scheme.block_size
    H, W = image.shape
    padded = np.pad(image, ((0, -H % B), (0, -W % B)), mode="edge")
    phi, transform, cost = _block_system(scheme, cost_kind)
    corners = [(i, j) for i in range(0, padded.shape[0], B) for j in range(0, padded.shape[1], B)]
    if order is None:
        order = range(len(corners))
    order = list(order)
    if sorted(order) != list(range(len(corners))):
        raise ValueError("order must be a permutation of the block indices")
    jobs = [
        (phi, transform, cost, padded[i : i + B, j : j + B], alpha, tol, max_outer, inner_iter)
        for i, j in (corners[k] for k in order)
    ]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            blocks = list(ex.map(_reconstruct_block, jobs))
    else:
        blocks = [_reconstruct_block(job) for job in jobs]
    out = np.empty_like(padded)
    for k, blk in zip(order, blocks):
        i, j = corners[k]
        out[i : i + B, j : j + B] = blk
    return out[:H, :W]


# --------------------------------------------------------------------------
# test signals


@dataclass(frozen=True)
class SparseSpec:
    """K-sparse test vector: `k` random positions of `n`.

    ``amplitude="unit"`` gives values of +-1 with random signs and
    ``"gaussian"`` standard normal values.
    """

    n: int
    k: int
    amplitude: str = "unit"
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.k <= self.n:
            raise ValueError("need 0 <= k <= n")
        if self.amplitude not in ("unit", "gaussian"):
            raise ValueError(f"unknown amplitude law {self.amplitude!r}")


def make_sparse(spec: SparseSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    x = np.zeros(spec.n)
    support = rng.choice(spec.n, size=spec.k, replace=False)
    if spec.amplitude == "unit":
        x[support] = rng.choice([-1.0, 1.0], size=spec.k)
    else:
        vals = rng.standard_normal(spec.k)
        vals[vals == 0] = 1.0
        x[support] = vals
    return x


def make_cusp(n: int) -> np.ndarray:
    """``sqrt(|t - 0.37|)`` sampled at ``t = k / (n - 1)``."""
    if n < 2:
        raise ValueError("cusp needs at least 2 samples")
    t = np.arange(n) / (n - 1)
    return np.sqrt(np.abs(t - 0.37))
