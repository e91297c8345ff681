"""
Projection onto the epigraph ``{(w, y) : y >= f(w)}`` of a convex cost using
nothing but supporting hyperplanes.

Each step builds the supporting hyperplane of the epigraph at the current
anchor ``(w_i, f(w_i))`` and projects the target onto the half-spaces
collected so far (a single hyperplane at the first step). The first N
coordinates of that projection become the next anchor. The squared lifted
distance ``d_i = |target - (w_i, f(w_i))|^2`` is monitored; the squared
distance to the cut polyhedron is a certified lower bound on the true
squared distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import nnls

from .costs import ConvexCost
from .geometry import Hyperplane, LiftedPoint, NumericalError, project_onto_hyperplane

STOP_REASONS = ("distance_increase", "tolerance", "max_iter")


def supporting_hyperplane(cost: ConvexCost, w) -> Hyperplane:
    """Hyperplane supporting the epigraph of `cost` at ``(w, cost(w))``.

    With ``g`` a subgradient at `w` the normal is ``[g, -1]`` and the offset
    ``g.w - f(w)``; every epigraph point satisfies ``normal . p <= offset``.
    """
    w = np.asarray(w, dtype=np.float64)
    g = np.asarray(cost.subgradient(w), dtype=np.float64).ravel()
    fw = cost.eval(w)
    return Hyperplane(np.append(g, -1.0), float(g @ w.ravel()) - fw)


@dataclass(frozen=True)
class EpigraphSet:
    cost: ConvexCost

    def contains(self, p: LiftedPoint, tol: float = 1e-9) -> bool:
        return p.y >= self.cost.eval(p.w) - tol


@dataclass
class ProjectionTrace:
    """Per-step record of `project_onto_epigraph`.

    ``iterates[i]`` is the re-lifted anchor ``(w_{i+1}, f(w_{i+1}))`` and
    ``distances[i]`` its squared distance to the target. ``lower_bounds[i]``
    is the squared distance from the target to the cut polyhedron at that
    step.
    """

    iterates: list = field(default_factory=list)
    distances: list = field(default_factory=list)
    lower_bounds: list = field(default_factory=list)
    stop_reason: str = "max_iter"
    refinements: int = 0

    def __len__(self):
        return len(self.distances)

    def record(self, point: LiftedPoint, distance: float, bound: float):
        self.iterates.append(point)
        self.distances.append(float(distance))
        self.lower_bounds.append(float(bound))


class CutPool:
    """Supporting half-spaces ``a . z <= b`` of one epigraph.

    Cuts stay valid for the lifetime of the cost, so a pool may be carried
    across projections of different targets. Cuts with a zero multiplier
    in the latest projection are dropped.
    """

    def __init__(self, capacity: int = 256):
        self.capacity = capacity
        self._normals: list = []
        self._offsets: list = []
        self._active = 0

    def __len__(self):
        return len(self._offsets)

    def add(self, h: Hyperplane):
        self._normals.append(np.asarray(h.normal))
        self._offsets.append(h.offset)
        if len(self._offsets) > self.capacity:
            del self._normals[0], self._offsets[0]
            self._active = max(0, self._active - 1)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Project `x` onto the intersection of the pooled half-spaces.

        Solves the dual ``min_{mu >= 0} 0.5 mu'G mu - mu'c`` with
        ``G = A A'`` and ``c = A x - b``, warm-started from the cuts that
        were active in the previous projection.
        """
        A = np.array(self._normals)
        b = np.array(self._offsets)
        c = A @ x - b
        if np.all(c <= 0):
            self._normals, self._offsets, self._active = [], [], 0
            return x.copy()
        k = len(b)
        gram = A @ A.T
        gram[np.diag_indices(k)] += 1e-13 * np.trace(gram) / k
        mu = _nonneg_qp(gram, c, range(self._active))
        if mu is None:
            mu = _nonneg_qp_cold(gram, c)
        keep = np.flatnonzero(mu > 0)
        self._normals = [self._normals[i] for i in keep]
        self._offsets = [self._offsets[i] for i in keep]
        self._active = len(keep)
        return x - A[keep].T @ mu[keep]


def _nonneg_qp(G, c, start, max_steps=None):
    """Lawson-Hanson active set for ``min 0.5 mu'G mu - c'mu, mu >= 0``.

    `start` seeds the passive (free) set. Returns None when the step budget
    runs out or the iteration stalls, so the caller can fall back to a cold
    solve.
    """
    k = len(c)
    tol = 1e-12 * (1.0 + np.abs(c).max())
    free = np.zeros(k, dtype=bool)
    free[list(start)] = True
    mu = np.zeros(k)

    def solve(mask):
        z = np.zeros(k)
        idx = np.flatnonzero(mask)
        if idx.size:
            z[idx] = np.linalg.solve(G[np.ix_(idx, idx)], c[idx])
        return z

    # shrink the seed until the free-set solution is positive
    while free.any():
        z = solve(free)
        bad = free & (z <= 0)
        if not bad.any():
            mu = z
            break
        free &= ~bad

    for _ in range(max_steps or 3 * k + 10):
        grad = c - G @ mu
        grad[free] = -np.inf
        j = int(np.argmax(grad))
        if grad[j] <= tol:
            return mu
        free[j] = True
        while True:
            z = solve(free)
            bad = free & (z <= 0)
            if not bad.any():
                mu = z
                break
            step = np.min(mu[bad] / (mu[bad] - z[bad]))
            mu = mu + step * (z - mu)
            free &= mu > 0
            mu[~free] = 0.0
            if not free[j]:
                return None
    return None


def _nonneg_qp_cold(G, c):
    for ridge in (0.0, 1e-10, 1e-8, 1e-6):
        try:
            chol = np.linalg.cholesky(G + ridge * np.trace(G) / len(c) * np.eye(len(c)))
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise NumericalError("cut Gram matrix is not positive definite")
    rhs = solve_triangular(chol, c, lower=True)
    mu, _ = nnls(chol.T, rhs, maxiter=50 * len(c) + 100)
    return mu


def project_onto_epigraph(
    cost: ConvexCost,
    target: LiftedPoint,
    tol: float = 1e-6,
    max_iter: int = 500,
    *,
    refine: int = 10,
    stop_on_increase: bool = True,
    pool: CutPool | None = None,
):
    """Project `target` onto the epigraph of `cost`.

    Parameters
    ----------
    cost : ConvexCost
    target : LiftedPoint
    tol : float
        Relative tolerance for both the change in lifted distance and the
        certified gap between the best distance and the cut lower bound.
    max_iter : int
        Maximum number of supporting-hyperplane steps.
    refine : int
        Number of refinement projections after a distance increase.
    stop_on_increase : bool
        Stop as soon as the lifted distance increases. This is the
        early-stopping rule used for denoising; with ``False`` the cutting
        continues until `tol` or `max_iter` and the closest anchor wins.
    pool : CutPool, optional
        Cuts of the same epigraph gathered by earlier calls. New cuts are
        added to it.

    Returns
    -------
    point : LiftedPoint
        Epigraph boundary point ``(w, f(w))`` closest to the target among
        the anchors visited (the target itself when it is a member).
    trace : ProjectionTrace
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if not tol > 0:
        raise ValueError("tol must be positive")

    shape = target.w.shape
    tw = target.w.ravel()
    ty = target.y
    trace = ProjectionTrace()

    f0 = cost.eval(target.w)
    if ty >= f0:
        trace.record(target, 0.0, 0.0)
        trace.stop_reason = "tolerance"
        return target, trace

    if not np.any(cost.subgradient(target.w)):
        # target.w minimises f, so the epigraph is supported by y = f(target.w) there
        p = LiftedPoint(target.w, max(ty, f0))
        d = (f0 - ty) ** 2
        trace.record(p, d, d)
        trace.stop_reason = "tolerance"
        return p, trace

    def lifted_distance(w):
        fw = cost.eval(w.reshape(shape))
        r = tw - w
        return float(r @ r + (ty - fw) ** 2), fw

    pool = CutPool() if pool is None else pool
    t = target.vector()
    best_w, best_d = tw, (f0 - ty) ** 2
    w = tw
    w_next = tw
    prev = None
    for _ in range(max_iter):
        pool.add(supporting_hyperplane(cost, w.reshape(shape)))
        z = pool.project(t)
        if not np.all(np.isfinite(z)):
            raise NumericalError("non-finite iterate in epigraph projection")
        bound = float((t - z) @ (t - z))
        w_next = z[:-1]
        d, fw = lifted_distance(w_next)
        trace.record(LiftedPoint(w_next.reshape(shape), fw), d, bound)
        if stop_on_increase and prev is not None and d > prev:
            trace.stop_reason = "distance_increase"
            break
        if d < best_d:
            best_w, best_d = w_next, d
        if best_d - bound <= tol * (1.0 + best_d):
            trace.stop_reason = "tolerance"
            break
        if prev is not None and abs(d - prev) <= tol * (1.0 + prev):
            trace.stop_reason = "tolerance"
            break
        prev = d
        w = w_next

    if trace.stop_reason == "distance_increase":
        # bisect between the best anchor and the one that overshot, also
        # trying the single-hyperplane projection seeded at each midpoint
        far = w_next
        for _ in range(refine):
            mid = 0.5 * (best_w + far)
            h = supporting_hyperplane(cost, mid.reshape(shape))
            seeded = project_onto_hyperplane(t, h)[:-1]
            d_mid, _ = lifted_distance(mid)
            d_seed, _ = lifted_distance(seeded)
            if min(d_mid, d_seed) < best_d:
                far = best_w
                best_w, best_d = (mid, d_mid) if d_mid <= d_seed else (seeded, d_seed)
            else:
                far = mid
            trace.refinements += 1

    best = best_w.reshape(shape)
    return LiftedPoint(best, cost.eval(best)), trace


def oracle_project_epigraph(cost: ConvexCost, target: LiftedPoint, box=(-3.0, 3.0), step: float = 1e-3):
    """Brute-force epigraph projection for testing, in at most 3 dimensions.

    Minimises ``|w - target.w|^2 + max(f(w) - target.y, 0)^2`` (the squared
    distance from the target to the epigraph slice above `w`) over grids of
    decreasing spacing: an exhaustive scan of `box` at about 60 points per
    axis, then scans of a window around the incumbent, down to `step`.
    Accuracy is O(step). No supporting hyperplanes are used.
    """
    n = target.w.size
    if n > 3:
        raise ValueError("oracle is limited to 3 dimensions")
    if not step > 0:
        raise ValueError("step must be positive")
    tw = target.w.ravel()
    ty = target.y
    if ty >= cost.eval(target.w):
        return target
    lo = np.broadcast_to(np.asarray(box[0], dtype=np.float64), (n,))
    hi = np.broadcast_to(np.asarray(box[1], dtype=np.float64), (n,))

    def scan(lower, upper, h):
        axes = [np.arange(a, b + 0.5 * h, h) for a, b in zip(lower, upper)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        excess = np.maximum(cost.eval_batch(pts) - ty, 0.0)
        obj = ((pts - tw) ** 2).sum(axis=1) + excess**2
        return pts[np.argmin(obj)]

    h = max(step, float(np.max(hi - lo)) / 60.0)
    best = scan(lo, hi, h)
    while h > step:
        h_new = max(step, h / 5.0)
        lower = np.maximum(lo, best - 4 * h)
        upper = np.minimum(hi, best + 4 * h)
        best = scan(lower, upper, h_new)
        h = h_new
    w = best.reshape(target.w.shape)
    return LiftedPoint(w, max(ty, cost.eval(w)))
