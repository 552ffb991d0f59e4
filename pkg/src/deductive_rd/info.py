"""Finite-alphabet information measures and alternating-minimization solvers.

All quantities are in bits.  The rate-distortion solver and the constrained
minimum-information solver share one engine: for a nonnegative weight matrix
``A`` (``2**(-s*d)`` for a Lagrange slope ``s``, or a 0/1 support mask) it
minimizes the convex function ``f(q) = -sum_i p_i log2 (A q)_i`` over output
distributions ``q`` by the Blahut-Arimoto / EM update ``q_j <- q_j c_j`` with
``c_j = sum_i p_i A_ij / (A q)_i``.  The quantity ``(max_j c_j - 1) / ln 2`` is a
certified bound on ``f(q) - min f`` and is used as the stopping rule.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

LN2 = math.log(2.0)


class InfeasibleError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class InstanceTooLarge(ValueError):
    pass


def _as_dist(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("expected a probability vector")
    return p


def entropy(p) -> float:
    """Shannon entropy in bits with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum()) + 0.0


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary entropy needs p in [0,1], got {p}")
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


def mutual_information(p, kernel) -> float:
    """``I(X;Y)`` for input law ``p`` and channel rows ``kernel[x]``."""
    p = np.asarray(p, dtype=float)
    k = np.asarray(kernel, dtype=float)
    if k.shape[0] != p.shape[0]:
        raise ValueError("kernel rows must match the input alphabet")
    out = p @ k
    cond = sum(pi * entropy(row) for pi, row in zip(p, k) if pi > 0)
    return max(entropy(out) - cond, 0.0)


# ---------------------------------------------------------------------------
# shared alternating engine


@dataclass
class _Solve:
    value: float  # min_q f(q) in bits
    q: np.ndarray
    kernel: np.ndarray
    iterations: int
    gap: float
    trace: list[float] = field(default_factory=list)


POLISH_EVERY = 100


def _objective(p, A, q) -> float:
    z = A @ q
    return float(-(p * np.log2(z)).sum())


def _em_step(p, A, q):
    z = A @ q
    c = (p / z) @ A
    out = q * c
    return out / out.sum(), (c.max() - 1.0) / LN2


def _newton(p, B, q, max_iter=60):
    """Damped Newton for ``min -sum p log(B q)`` on the simplex, all of ``B``'s columns kept.

    Returns the minimizer, or ``None`` when it runs into the boundary (the
    support guess was too large) or stalls.
    """
    m = B.shape[1]
    q = np.maximum(q, 1e-3 / m)
    q = q / q.sum()
    f = _objective(p, B, q)
    for _ in range(max_iter):
        z = B @ q
        c = (p / z) @ B
        H = B.T @ (B * (p / z**2)[:, None])
        kkt = np.block([[H, np.ones((m, 1))], [np.ones((1, m)), np.zeros((1, 1))]])
        rhs = np.concatenate([c, [0.0]])
        step = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:m]
        decrement = float(step @ H @ step)
        if decrement < 1e-26:
            return q
        t = 1.0
        while np.any(q + t * step <= 0):
            t *= 0.5
            if t < 1e-10:
                return None
        while True:
            cand = q + t * step
            f_cand = _objective(p, B, cand)
            if f_cand <= f + 1e-16:
                break
            t *= 0.5
            if t < 1e-10:
                return q if decrement < 1e-20 else None
        q, f = cand / cand.sum(), f_cand
    return None


def _polish(p, A, q, tol):
    """Newton re-solve on guessed supports; ``None`` unless the result is certified.

    EM is sublinear when the optimum has zero outputs and crawls on nearly
    flat problems.  Outputs ranked by their multiplier ``c_j`` give nested
    support guesses; the first one whose Newton optimum passes the certified
    gap on the full problem wins.
    """
    z = A @ q
    c = (p / z) @ A
    order = np.argsort(-c, kind="stable")
    for k in range(1, A.shape[1] + 1):
        keep = np.zeros(A.shape[1], dtype=bool)
        keep[order[:k]] = True
        B = A[:, keep]
        if np.any(B.sum(axis=1) <= 0):
            continue
        sub = _newton(p, B, q[keep] + 1e-300)
        if sub is None:
            continue
        full = np.zeros_like(q)
        full[keep] = sub
        _, gap = _em_step(p, A, full)
        if gap <= tol:
            return full
    return None


def _alternate(p, A, q0=None, tol=1e-12, max_iter=200_000, trace=False, accelerate=True, polish=True) -> _Solve:
    """Minimize ``-sum p_i log2 (A q)_i`` over the simplex.

    Plain EM steps are interleaved with SQUAREM extrapolation (accepted only
    when the objective does not increase).  Stopping uses the certified gap.
    Every ``POLISH_EVERY`` iterations a support-restricted re-solve is tried.
    """
    n_out = A.shape[1]
    q = np.full(n_out, 1.0 / n_out) if q0 is None else np.array(q0, dtype=float)
    if np.any(A @ q <= 0):
        raise InfeasibleError("some input has no admissible output")
    history = []
    gap = math.inf
    it = 0
    while it < max_iter:
        q1, gap = _em_step(p, A, q)
        it += 1
        if trace:
            history.append(_objective(p, A, q))
        if gap <= tol:
            break
        if polish and it % POLISH_EVERY < 2 and it > 2:
            done = _polish(p, A, q, tol)
            if done is not None and _objective(p, A, done) <= _objective(p, A, q) + tol:
                q = done
                if trace:
                    history.append(_objective(p, A, q))
                break
        q2, gap2 = _em_step(p, A, q1)
        it += 1
        if trace:
            history.append(_objective(p, A, q1))
        if gap2 <= tol:
            q = q1
            break
        if not accelerate:
            q = q2
            continue
        r = q1 - q
        v = q2 - 2.0 * q1 + q
        nv = np.linalg.norm(v)
        if nv == 0.0:
            q = q2
            continue
        alpha = min(-np.linalg.norm(r) / nv, -1.0)
        cand = q - 2.0 * alpha * r + alpha * alpha * v
        # a multiplicative update can never revive a zeroed output; keep a floor
        cand = np.where(cand > 0, cand, q2 * 1e-3)
        cand /= cand.sum()
        if _objective(p, A, cand) <= _objective(p, A, q2):
            q = cand
        else:
            q = q2
    z = A @ q
    c = (p / z) @ A
    gap = (c.max() - 1.0) / LN2
    kernel = A * q / z[:, None]
    value = float(-(p[p > 0] * np.log2(z[p > 0])).sum())
    return _Solve(value, q, kernel, it, max(gap, 0.0), history)


def _reinsert(kernel_nz: np.ndarray, mask: np.ndarray, n_rows: int, fill: np.ndarray) -> np.ndarray:
    full = np.tile(fill, (n_rows, 1))
    full[mask] = kernel_nz
    return full


# ---------------------------------------------------------------------------
# constrained minimum information


def _support_mask(supports: Sequence[Sequence[int]], n_out: int | None) -> np.ndarray:
    supports = [sorted(set(s)) for s in supports]
    if any(not s for s in supports):
        raise InfeasibleError("empty allowed output set")
    if n_out is None:
        n_out = max(max(s) for s in supports) + 1
    mask = np.zeros((len(supports), n_out))
    for i, s in enumerate(supports):
        mask[i, s] = 1.0
    return mask


def min_information_constrained(
    p,
    supports: Sequence[Sequence[int]],
    n_outputs: int | None = None,
    tol: float = 1e-12,
    max_iter: int = 200_000,
    trace: bool = False,
):
    """Minimum of ``I(X;Y)`` over kernels with row ``x`` supported in ``supports[x]``.

    Returns ``(bits, kernel)``; with ``trace=True`` a third item lists the
    objective after every iteration (non-increasing).
    """
    p = _as_dist(p)
    mask = _support_mask(supports, n_outputs)
    keep = p > 0
    sol = _alternate(p[keep], mask[keep], tol=tol, max_iter=max_iter, trace=trace)
    if sol.gap > max(tol, 1e-7):
        raise ConvergenceError(f"constrained solver stopped with gap {sol.gap:.3g}")
    fill = sol.q
    kernel = np.empty_like(mask)
    kernel[keep] = sol.kernel
    for i in np.flatnonzero(~keep):
        row = mask[i] * fill
        kernel[i] = row / row.sum() if row.sum() > 0 else mask[i] / mask[i].sum()
    value = sol.value if sol.value > 0 else 0.0
    if trace:
        return value, kernel, sol.trace
    return value, kernel


def _simplex_grid(k: int, steps: int) -> np.ndarray:
    """All points of the ``k``-simplex with coordinates in multiples of ``1/steps``."""
    pts = []
    for cuts in itertools.combinations(range(steps + k - 1), k - 1):
        parts = np.diff((-1, *cuts, steps + k - 1)) - 1
        pts.append(parts)
    return np.asarray(pts, dtype=float) / steps


def brute_force_min_information(
    p, supports: Sequence[Sequence[int]], grid_step: float = 0.02, max_points: int = 5_000_000
) -> float:
    """Grid search over kernel rows; an upper bound within ``O(grid_step)`` of the minimum."""
    p = _as_dist(p)
    supports = [sorted(set(s)) for s in supports]
    if len(p) > 3 or any(len(s) > 4 for s in supports):
        raise InstanceTooLarge("brute force is limited to 3 inputs and 4 outputs per support")
    if grid_step < 0.01:
        raise InstanceTooLarge("grid_step must be at least 0.01")
    if any(not s for s in supports):
        raise InfeasibleError("empty allowed output set")
    steps = int(round(1.0 / grid_step))
    n_out = max(max(s) for s in supports) + 1
    rows = []
    for s in supports:
        g = _simplex_grid(len(s), steps)
        full = np.zeros((len(g), n_out))
        full[:, s] = g
        rows.append(full)
    total = math.prod(len(r) for r in rows)
    if total > max_points:
        raise InstanceTooLarge(f"grid has {total} kernels (limit {max_points})")

    def info_batch(fixed, last):
        # fixed: list of rows for inputs 0..n-2, last: (m, n_out) candidate rows
        out = sum(pi * r for pi, r in zip(p[:-1], fixed)) + p[-1] * last
        with np.errstate(divide="ignore", invalid="ignore"):
            h_out = -np.nansum(np.where(out > 0, out * np.log2(out), 0.0), axis=1)
            h_last = -np.nansum(np.where(last > 0, last * np.log2(last), 0.0), axis=1)
        h_fixed = sum(pi * entropy(r) for pi, r in zip(p[:-1], fixed))
        return h_out - h_fixed - p[-1] * h_last

    best = math.inf
    for fixed in itertools.product(*rows[:-1]):
        best = min(best, float(info_batch(list(fixed), rows[-1]).min()))
    return max(best, 0.0)


# ---------------------------------------------------------------------------
# rate-distortion


@dataclass(frozen=True)
class RDPoint:
    D: float
    R: float
    slope: float
    iterations: int
    residual: float
    kernel: np.ndarray = field(repr=False, compare=False, default=None)


@dataclass(frozen=True)
class RDCurve:
    points: tuple[RDPoint, ...]
    row_labels: tuple = ()
    col_labels: tuple = ()

    @property
    def D(self) -> np.ndarray:
        return np.array([pt.D for pt in self.points])

    @property
    def R(self) -> np.ndarray:
        return np.array([pt.R for pt in self.points])

    def scaled(self, mass: float) -> "RDCurve":
        """Curve of the full source from a core sub-source curve (``D -> mass*D``)."""
        pts = tuple(
            RDPoint(mass * pt.D, mass * pt.R, pt.slope, pt.iterations, mass * pt.residual, pt.kernel)
            for pt in self.points
        )
        return RDCurve(pts, self.row_labels, self.col_labels)

    def to_csv(self) -> str:
        lines = ["D,R,slope,iterations"]
        for pt in self.points:
            lines.append(f"{pt.D:.12g},{pt.R:.12g},{pt.slope:.12g},{pt.iterations}")
        return "\n".join(lines) + "\n"


def distortion_range(p, d) -> tuple[float, float]:
    """``(d_min, d_max)``: best per-row average and best constant-output average."""
    p = _as_dist(p)
    d = np.asarray(d, dtype=float)
    return float(p @ d.min(axis=1)), float((p @ d).min())


class RateDistortionSolver:
    """``R(D)`` of a finite source under a distortion matrix, by Lagrangian duality.

    For each slope ``s`` the alternating engine computes
    ``L(s) = min I + s E[d]``; then ``R(D) = max_s L(s) - s D``.  Maximizing the
    concave dual in ``s`` hits ``D`` exactly even on linear pieces of ``R``.
    The endpoint ``D = d_min`` is solved with support constraints (the
    minimum-distortion cells of each row) instead of an infinite slope.
    """

    def __init__(self, p, d, tol: float = 1e-12, max_iter: int = 100_000, slope_max: float = 2.0**12):
        p = _as_dist(p)
        d = np.asarray(d, dtype=float)
        if d.ndim != 2 or d.shape[0] != p.shape[0]:
            raise ValueError("distortion matrix rows must match the source alphabet")
        if not np.all(np.isfinite(d.min(axis=1))):
            raise ValueError("every row needs a finite minimum")
        self.p_full = p
        self.d_full = d
        self.keep = p > 0
        self.p = p[self.keep]
        self.d = d[self.keep]
        self.tol = tol
        self.max_iter = max_iter
        self.slope_max = slope_max
        self.d_min, self.d_max = distortion_range(self.p, self.d)
        self._q = None
        self._cache: dict[float, tuple[float, float, _Solve]] = {}

    def lagrangian(self, s: float):
        """``(L(s), E[d] at the optimum, solve)``."""
        hit = self._cache.get(s)
        if hit is not None:
            return hit
        shift = self.d.min(axis=1)
        A = np.exp2(-s * (self.d - shift[:, None]))
        sol = _alternate(self.p, A, q0=self._q, tol=self.tol, max_iter=self.max_iter)
        sol.value += s * float(self.p @ shift)
        if sol.gap > 1e-7:
            raise ConvergenceError(f"BA at slope {s:.4g} stopped with gap {sol.gap:.3g}")
        # warm start keeps every output alive so later slopes can still move mass
        self._q = 0.5 * sol.q + 0.5 / len(sol.q)
        dist = float(self.p @ (sol.kernel * self.d).sum(axis=1))
        out = (sol.value, dist, sol)
        self._cache[s] = out
        return out

    def _full_kernel(self, kernel_nz, q):
        fill = q / q.sum()
        return _reinsert(kernel_nz, self.keep, len(self.p_full), fill)

    def _at_min(self) -> RDPoint:
        mins = self.d.min(axis=1, keepdims=True)
        mask = (self.d <= mins + 1e-15).astype(float)
        sol = _alternate(self.p, mask, tol=self.tol, max_iter=self.max_iter)
        if sol.gap > 1e-7:
            raise ConvergenceError(f"support-constrained solve stopped with gap {sol.gap:.3g}")
        return RDPoint(self.d_min, max(sol.value, 0.0), math.inf, sol.iterations, sol.gap,
                       self._full_kernel(sol.kernel, sol.q))

    def rate(self, D: float) -> RDPoint:
        if D < self.d_min - 1e-12:
            raise InfeasibleError(f"distortion {D} is below the minimum achievable {self.d_min}")
        if D <= self.d_min + 1e-12:
            return self._at_min()
        if D >= self.d_max:
            j = int(np.argmin(self.p @ self.d))
            kernel = np.zeros_like(self.d_full)
            kernel[:, j] = 1.0
            return RDPoint(D, 0.0, 0.0, 0, 0.0, kernel)
        hi = 1.0
        while self.lagrangian(hi)[1] > D and hi < self.slope_max:
            hi *= 2.0
        hi = min(hi, self.slope_max)
        res = minimize_scalar(
            lambda s: -(self.lagrangian(s)[0] - s * D),
            bounds=(0.0, hi),
            method="bounded",
            options={"xatol": 1e-10 * max(1.0, hi)},
        )
        s = float(res.x)
        value, dist, sol = self.lagrangian(s)
        R = max(value - s * D, 0.0)
        return RDPoint(D, R, s, sol.iterations, abs(dist - D), self._full_kernel(sol.kernel, sol.q))

    def curve(self, targets: Sequence[float]) -> RDCurve:
        return RDCurve(tuple(self.rate(float(D)) for D in targets))


def ba_rate_distortion(p, d, targets: Sequence[float], tol: float = 1e-12, max_iter: int = 100_000) -> RDCurve:
    """Rate-distortion function of ``(p, d)`` at each target distortion."""
    return RateDistortionSolver(p, d, tol=tol, max_iter=max_iter).curve(targets)


def default_grid(p, d, n: int = 33) -> np.ndarray:
    lo, hi = distortion_range(p, d)
    return np.linspace(lo, hi, n)


def ba_capacity(w, tol: float = 1e-12, max_iter: int = 100_000, return_input: bool = False):
    """Capacity of a discrete memoryless channel (rows are input letters)."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or np.any(w < 0) or not np.allclose(w.sum(axis=1), 1.0, atol=1e-9):
        raise ValueError("channel rows must be probability vectors")
    m = w.shape[0]
    r = np.full(m, 1.0 / m)
    logw = np.where(w > 0, np.log2(np.where(w > 0, w, 1.0)), 0.0)
    for _ in range(max_iter):
        out = r @ w
        with np.errstate(divide="ignore"):
            logout = np.where(out > 0, np.log2(np.where(out > 0, out, 1.0)), 0.0)
        div = (w * (logw - logout)).sum(axis=1)  # D(W_x || out) in bits
        lower = float(r @ div)
        upper = float(div.max())
        if upper - lower <= tol:
            break
        r = r * np.exp2(div)
        r /= r.sum()
    else:
        if upper - lower > 1e-7:
            raise ConvergenceError(f"capacity iteration stopped with gap {upper - lower:.3g}")
    cap = max(lower, 0.0)
    return (cap, r) if return_input else cap
