"""Brownian paths in the sup-norm unit ball and exact fiber radii in the G-norm.

The error norm is ``||g|| = sup_t |g(t)| + |g(1/2)|`` and the information is
``N f = f(1/2)``. Paths live on the uniform grid ``t_k = k / T`` (``T`` a power
of two, so 1/2 is a node) and are read as piecewise-linear functions.

Fiber suprema are evaluated in closed form. Over the continuum fiber
``{f in F_0 : f(1/2) = y}`` (optionally restricted to ``F(m)``) the value
``f(t)`` at any ``t`` other than 0 and 1/2 can be pushed to either end of an
interval ``[lo(t), hi(t)]`` -- ``[-1, 1]`` in general, ``[max(-1, y-1),
min(1, y+1)]`` inside the window ``|t - 1/2| <= 1/m``. For a piecewise-linear
center the map ``t -> max(|lo - c(t)|, |hi - c(t)|)`` is convex on every grid
segment, so its supremum sits at segment endpoints. Sampling adversaries on
the grid would miss exactly the steep excursions next to ``t = 1/2`` that
make the worst case twice the probabilistic one.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .chebyshev import RadiusCertificate
from .information import ProbRadiusEstimate
from .mc import proportion
from .rng import generator
from .spaces import GridPath


class RejectionBudgetExceeded(RuntimeError):
    pass


class MeasureTargetNotReached(RuntimeError):
    pass


@dataclass(frozen=True)
class WienerConfig:
    T: int = 1024
    n_samples: int = 100_000
    seed: int = 0
    block: int = 2048
    max_proposals: int = 1_000_000

    def __post_init__(self):
        if self.T < 8 or self.T & (self.T - 1):
            raise ValueError("T must be a power of two >= 8")
        if self.n_samples < 0:
            raise ValueError("n_samples must be >= 0")

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.T + 1) / self.T

    @property
    def half(self) -> int:
        return self.T // 2


@dataclass(frozen=True)
class FiberSpec:
    """``m=None`` is the full fiber, otherwise the fiber restricted to F(m)."""

    y: float
    m: int | None = None

    def __post_init__(self):
        if not -1 <= self.y <= 1:
            raise ValueError("y must lie in [-1, 1]")
        if self.m is not None and self.m < 2:
            raise ValueError("m must be >= 2")


@dataclass
class PiecewiseLinearCenter:
    grid: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        return np.interp(t, self.grid, self.values)


def _check_window(T: int, m: int):
    if m < 2 or T % m:
        raise ValueError(f"window 1/{m} is not aligned with the grid T={T}")


# ------------------------------------------------------------------ sampling


def sample_ball_path(cfg: WienerConfig, rng: np.random.Generator) -> GridPath:
    """One path of Wiener measure conditioned to ``sup |f| <= 1`` (rejection)."""
    scale = math.sqrt(1.0 / cfg.T)
    for _ in range(cfg.max_proposals):
        w = np.concatenate([[0.0], np.cumsum(rng.standard_normal(cfg.T) * scale)])
        if np.max(np.abs(w)) <= 1.0:
            return GridPath(cfg.grid, w)
    raise RejectionBudgetExceeded(f"no path accepted in {cfg.max_proposals} proposals")


def _bridge_block(cfg, y, rng, n):
    h = cfg.half
    scale = math.sqrt(1.0 / cfg.T)
    z = rng.standard_normal((n, cfg.T)) * scale
    w = np.cumsum(z[:, :h], axis=1)
    frac = np.arange(1, h + 1) / h
    left = w - frac[None, :] * (w[:, -1:] - y)
    left[:, -1] = y
    right = y + np.cumsum(z[:, h:], axis=1)
    return np.concatenate([np.zeros((n, 1)), left, right], axis=1)


def sample_conditioned_path(y: float, cfg: WienerConfig, rng: np.random.Generator,
                            reject: bool = True) -> GridPath:
    """Path with ``f(1/2) = y`` exactly: Brownian bridge 0 -> y on [0, 1/2], free after.

    With ``reject`` the path is also conditioned to the unit ball.
    """
    if abs(y) > 1:
        raise ValueError("|y| must be <= 1")
    tried = 0
    while tried < cfg.max_proposals:
        k = min(256, cfg.max_proposals - tried)
        paths = _bridge_block(cfg, y, rng, k)
        tried += k
        ok = np.flatnonzero(np.max(np.abs(paths), axis=1) <= 1.0) if reject else np.arange(k)
        if ok.size:
            return GridPath(cfg.grid, paths[ok[0]])
    raise RejectionBudgetExceeded(f"no conditioned path accepted in {cfg.max_proposals} proposals")


def conditioned_paths(y: float, cfg: WienerConfig, n: int, reject: bool = True) -> tuple[np.ndarray, dict]:
    """``n`` conditioned paths (rows) drawn block-wise from counter-based streams."""
    out, have, proposed, b = [], 0, 0, 0
    while have < n:
        rng = generator(cfg.seed, "bridge", b)
        paths = _bridge_block(cfg, y, rng, cfg.block)
        proposed += cfg.block
        if reject:
            paths = paths[np.max(np.abs(paths), axis=1) <= 1.0]
        out.append(paths)
        have += len(paths)
        b += 1
        if proposed > max(cfg.max_proposals, 50 * n):
            raise RejectionBudgetExceeded(f"only {have} of {n} conditioned paths accepted")
    return np.concatenate(out)[:n], {"proposed": proposed, "acceptance": have / proposed}


def _ball_block(cfg: WienerConfig, b: int) -> tuple[np.ndarray, int]:
    rng = generator(cfg.seed, "ball-path", b)
    z = rng.standard_normal((cfg.block, cfg.T))
    z *= math.sqrt(1.0 / cfg.T)
    w = np.cumsum(z, axis=1)
    ok = np.max(np.abs(w), axis=1) <= 1.0
    return np.concatenate([np.zeros((int(ok.sum()), 1)), w[ok]], axis=1), cfg.block


def ball_path_blocks(cfg: WienerConfig, n: int, workers: int = 1):
    """Yield accepted ball paths block by block, in block order.

    Block ``b`` draws from the stream ``(seed, "ball-path", b)``, so the
    accepted sequence is the same for every worker count.
    """
    have, proposed, b = 0, 0, 0
    budget = max(cfg.max_proposals, 50 * n)
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while have < n:
            ids = range(b, b + max(workers, 1))
            results = pool.map(lambda i: _ball_block(cfg, i), ids) if pool else map(lambda i: _ball_block(cfg, i), ids)
            for paths, prop in results:
                b += 1
                if have >= n:
                    continue
                proposed += prop
                take = paths[: n - have]
                have += len(take)
                yield take, proposed
            if proposed > budget and have < n:
                raise RejectionBudgetExceeded(f"only {have} of {n} ball paths in {proposed} proposals")
    finally:
        if pool:
            pool.shutdown()


def window_deviations(cfg: WienerConfig, ms, n: int | None = None, workers: int = 1) -> tuple[np.ndarray, dict]:
    """Per-path ``max_{|t-1/2| <= 1/m} |f(t) - f(1/2)|`` for each m (columns)."""
    n = cfg.n_samples if n is None else n
    if n <= 0:
        raise ValueError("n_samples must be positive")
    for m in ms:
        _check_window(cfg.T, m)
    h = cfg.half
    cols, proposed = [], 0
    for paths, proposed in ball_path_blocks(cfg, n, workers):
        d = np.abs(paths - paths[:, h:h + 1])
        cols.append(np.column_stack([d[:, h - cfg.T // m: h + cfg.T // m + 1].max(axis=1) for m in ms]))
    dev = np.concatenate(cols)
    return dev, {"accepted": len(dev), "proposed": proposed, "acceptance": len(dev) / proposed}


def fm_membership(path: GridPath, m: int) -> bool:
    """``|f(t) - f(1/2)| < 1`` at every node with ``|t - 1/2| <= 1/m``."""
    if m < 2:
        raise ValueError("m must be >= 2")
    h = path.node(0.5)
    for edge in (0.5 - 1.0 / m, 0.5 + 1.0 / m):
        if not np.any(path.grid == edge):
            raise ValueError(f"window edge {edge} is not a grid node")
    win = np.abs(path.grid - 0.5) <= 1.0 / m
    return bool(np.all(np.abs(path.values[win] - path.values[h]) < 1.0))


@dataclass
class DeltaTable:
    ms: list
    rows: list  # dicts: m, delta_hat, ci_lo, ci_hi, halfwidth, n
    sampling: dict = field(default_factory=dict)

    def row(self, m):
        return next(r for r in self.rows if r["m"] == m)


def delta_table(cfg: WienerConfig, ms, workers: int = 1) -> DeltaTable:
    """``delta_m = 1 - mu(F(m))`` estimates with Wilson 95% intervals."""
    ms = sorted(int(m) for m in ms)
    dev, info = window_deviations(cfg, ms, workers=workers)
    rows = []
    for j, m in enumerate(ms):
        fails = int(np.sum(dev[:, j] >= 1.0))
        p = proportion(fails, len(dev))
        rows.append({"m": m, "delta_hat": p["estimate"], "ci_lo": p["ci_lo"], "ci_hi": p["ci_hi"],
                     "halfwidth": p["halfwidth"], "n": p["n"]})
    return DeltaTable(ms, rows, info)


def estimate_delta_m(m: int, cfg: WienerConfig, workers: int = 1) -> tuple[float, tuple[float, float]]:
    r = delta_table(cfg, [m], workers).rows[0]
    return r["delta_hat"], (r["ci_lo"], r["ci_hi"])


# ------------------------------------------------------------ fiber radii


def _segment_ranges(grid: np.ndarray, fiber: FiberSpec):
    """Adversary value range on the open interior of every grid segment."""
    nseg = len(grid) - 1
    lo = np.full(nseg, -1.0)
    hi = np.full(nseg, 1.0)
    if fiber.m is not None:
        for edge in (0.5 - 1.0 / fiber.m, 0.5 + 1.0 / fiber.m):
            if not np.any(grid == edge):
                raise ValueError(f"window edge {edge} is not a center grid node")
        dist = np.abs(grid - 0.5)
        inside = (dist[:-1] <= 1.0 / fiber.m) & (dist[1:] <= 1.0 / fiber.m)
        lo[inside] = max(-1.0, fiber.y - 1.0)
        hi[inside] = min(1.0, fiber.y + 1.0)
    return lo, hi


def _node_ranges(grid, fiber):
    """Per node: widest adversary range over its adjacent segments."""
    lo, hi = _segment_ranges(grid, fiber)
    L = np.minimum(np.concatenate([[np.inf], lo]), np.concatenate([lo, [np.inf]]))
    H = np.maximum(np.concatenate([[-np.inf], hi]), np.concatenate([hi, [-np.inf]]))
    return L, H


def _half_index(grid):
    idx = np.flatnonzero(grid == 0.5)
    if idx.size == 0:
        raise ValueError("center grid must contain 1/2")
    return int(idx[0])


def fiber_sup_error(center: PiecewiseLinearCenter, fiber: FiberSpec) -> float:
    """Exact ``sup_f ||f - c||_inf + |f(1/2) - c(1/2)|`` over the continuum fiber."""
    grid = np.asarray(center.grid, dtype=float)
    c = np.asarray(center.values, dtype=float)
    L, H = _node_ranges(grid, fiber)
    env = np.maximum(c - L, H - c)
    return float(env.max() + abs(fiber.y - c[_half_index(grid)]))


def brute_adversary_error(center: PiecewiseLinearCenter, fiber: FiberSpec, refine: int = 64) -> float:
    """Lower bound on the fiber sup error from explicit single-spike paths.

    On a grid refined ``refine`` times, each candidate path follows the
    baseline through (0, 0), (1/2, y), (1, y) and spikes at one fine node to
    an end of the admissible range there. Each candidate is a genuine fiber
    member, so the result never exceeds the true supremum.
    """
    grid = np.asarray(center.grid, dtype=float)
    fine = np.unique(np.concatenate([np.linspace(g0, g1, refine + 1)
                                     for g0, g1 in zip(grid[:-1], grid[1:])]))
    y = fiber.y
    base = np.where(fine <= 0.5, 2 * y * fine, y)
    c = center(fine)
    h = int(np.flatnonzero(fine == 0.5)[0])
    lo = np.full(fine.shape, -1.0)
    hi = np.full(fine.shape, 1.0)
    if fiber.m is not None:
        win = np.abs(fine - 0.5) <= 1.0 / fiber.m
        lo[win] = max(-1.0, y - 1.0)
        hi[win] = min(1.0, y + 1.0)
    resid = np.abs(base - c)
    best = float(resid.max())
    # a one-node spike changes the PL path only on its two neighbouring fine
    # segments, where |f - c| is maximal at the fine nodes themselves
    for j in range(1, len(fine)):
        if j == h:
            continue
        for v in (lo[j], hi[j]):
            best = max(best, abs(v - c[j]))
    return best + abs(y - c[h])


def _lower_certificate(grid, fiber):
    """``min_a g_half(a) + |y - a|``: a lower bound valid for every center."""
    L, H = _node_ranges(grid, fiber)
    h = _half_index(grid)
    Lh, Hh, y = L[h], H[h], fiber.y
    cand = np.array([Lh, Hh, 0.5 * (Lh + Hh), y])
    return float(np.min(np.maximum(cand - Lh, Hh - cand) + np.abs(y - cand)))


def tent_center(y: float, m: int, cfg: WienerConfig) -> PiecewiseLinearCenter:
    """Peak ``y`` at 1/2, zero for ``|t - 1/2| >= 1/m``, linear in between."""
    _check_window(cfg.T, m)
    grid = cfg.grid
    return PiecewiseLinearCenter(grid, y * np.clip(1.0 - m * np.abs(grid - 0.5), 0.0, None))


def optimize_center(fiber: FiberSpec, cfg: WienerConfig, tol: float = 1e-9,
                    max_iters: int = 100_000, init=None) -> RadiusCertificate:
    """Minimise ``fiber_sup_error`` over node values by Polyak subgradient steps.

    The objective is ``max_k g_k(c_k) + |y - c_half|`` with each ``g_k`` a
    1-d convex envelope, so it is convex and piecewise affine in the node
    values. The Polyak target is the analytic lower bound, which equals the
    optimum here; iteration stops once the certified gap is within ``tol``.
    """
    if fiber.m is not None:
        _check_window(cfg.T, fiber.m)
    grid = cfg.grid
    L, H = _node_ranges(grid, fiber)
    h = cfg.half
    y = fiber.y
    lower = _lower_certificate(grid, fiber)
    c = np.zeros(cfg.T + 1) if init is None else np.array(init, dtype=float)
    best_c, best_f = c.copy(), math.inf
    it = 0
    for it in range(max_iters):
        env = np.maximum(c - L, H - c)
        j = int(np.argmax(env))
        f = float(env[j] + abs(y - c[h]))
        if f < best_f:
            best_f, best_c = f, c.copy()
        if best_f - lower <= tol:
            break
        g = np.zeros_like(c)
        a, b = c[j] - L[j], H[j] - c[j]
        g[j] = 1.0 if a > b else (-1.0 if b > a else 0.0)
        if c[h] != y:
            g[h] += math.copysign(1.0, c[h] - y)
        gg = float(g @ g)
        if gg == 0.0:
            break
        c = c - (f - lower) / gg * g
    return RadiusCertificate(radius=best_f, center=best_c, upper=best_f, lower=lower, tol=tol,
                             iterations=it + 1, method="polyak-subgradient",
                             extra={"fiber": {"y": y, "m": fiber.m}})


def radius_profile_wiener(cfg: WienerConfig, y_grid, m: int | None = None, tol: float = 1e-9):
    return [(float(y), optimize_center(FiberSpec(float(y), m), cfg, tol)) for y in y_grid]


def worst_case_radius_wiener(cfg: WienerConfig, y_grid, tol: float = 1e-9) -> float:
    """Max over the y-grid of the optimal full-fiber radius (2 when ±1 is on the grid)."""
    return max(cert.radius for _, cert in radius_profile_wiener(cfg, y_grid, None, tol))


def prob_radius_upper_wiener(delta: float, cfg: WienerConfig, m_candidates, y_grid,
                             table: DeltaTable | None = None, tol: float = 1e-9,
                             workers: int = 1) -> ProbRadiusEstimate:
    """Bound via the smallest m with ``delta_hat_m + 2 * halfwidth <= delta``.

    ``halfwidth`` is half the Wilson 95% interval, so the certificate asks for
    the point estimate to clear delta by two half-widths.
    """
    ms = sorted(int(m) for m in m_candidates)
    if table is None:
        table = delta_table(cfg, ms, workers)
    chosen = None
    for m in ms:
        r = table.row(m)
        if r["delta_hat"] + 2 * r["halfwidth"] <= delta:
            chosen = r
            break
    if chosen is None:
        raise MeasureTargetNotReached(
            f"no m in {ms} certifies delta={delta}; increase m or n_samples")
    prof = radius_profile_wiener(cfg, y_grid, chosen["m"], tol)
    bound = max(cert.radius for _, cert in prof)
    return ProbRadiusEstimate(
        delta=delta, bound=bound, theta=chosen["m"],
        measure={"estimate": 1 - chosen["delta_hat"], "ci_lo": 1 - chosen["ci_hi"],
                 "ci_hi": 1 - chosen["ci_lo"], "n": chosen["n"]},
        extra={"m": chosen["m"], "delta_hat": chosen["delta_hat"],
               "ci": [chosen["ci_lo"], chosen["ci_hi"]], "halfwidth": chosen["halfwidth"],
               "per_y": [(y, c.radius, c.lower) for y, c in prof]})


# ----------------------------------------------------- general functionals


@dataclass
class PathFunctional:
    """``L f = sum_j w_j f(t_j) + ∫ rho(t) f(t) dt`` (trapezoid on the path grid)."""

    atoms: list = field(default_factory=list)
    density: object = None  # callable rho(t) or None
    label: str = ""

    def representer(self, grid: np.ndarray) -> np.ndarray:
        """Weights r with ``L f = r @ f.values`` for every PL path on ``grid``."""
        r = np.zeros(len(grid))
        for t, w in self.atoms:
            k = int(np.searchsorted(grid, t, side="right")) - 1
            k = min(max(k, 0), len(grid) - 2)
            lam = (t - grid[k]) / (grid[k + 1] - grid[k])
            r[k] += w * (1 - lam)
            r[k + 1] += w * lam
        if self.density is not None:
            rho = np.asarray(self.density(grid), dtype=float)
            dt = np.diff(grid)
            tw = np.zeros(len(grid))
            tw[:-1] += dt / 2
            tw[1:] += dt / 2
            r += rho * tw
        return r

    def total_mass(self, grid) -> float:
        mass = sum(abs(w) for _, w in self.atoms)
        if self.density is not None:
            mass += float(np.trapezoid(np.abs(self.density(grid)), grid))
        return mass

    def __call__(self, path: GridPath) -> float:
        return float(self.representer(path.grid) @ path.values)


def adversary_f_eta(func: PathFunctional, eta: float, cfg: WienerConfig,
                    zone: float = 1 / 16, target: float | None = None) -> GridPath:
    """A ball path with ``f(1/2) = 1``, ``f(1/2 + eta) = -1`` and an eta-free functional value.

    The spike lives in ``[1/2 - eta, 1/2 + 2 eta]``; a fixed compensation bump
    ``b = sign(r)`` on the nodes outside ``|t - 1/2| < zone`` absorbs the
    spike's contribution, so ``L f = target`` for every eta. The default
    target is the weight the functional puts on the node 1/2.
    """
    grid = cfg.grid
    h = cfg.half
    e = eta * cfg.T
    if abs(e - round(e)) > 1e-9 or round(e) < 2:
        raise ValueError("eta must be a whole number (>= 2) of grid steps")
    e = int(round(e))
    if 2 * e / cfg.T >= zone:
        raise ValueError("spike must fit inside the protected zone")
    if func.total_mass(grid) > 1 + 1e-12:
        raise ValueError("functional total mass must be <= 1")
    r = func.representer(grid)
    outside_half = np.abs(r).sum() - abs(r[h])
    if outside_half <= 1e-15 and abs(abs(r[h]) - 1) <= 1e-12:
        raise ValueError("unit point mass at 1/2: compensation is neither possible nor needed")
    s = np.zeros(cfg.T + 1)
    s[h - e: h + 1] = np.linspace(0.0, 1.0, e + 1)
    s[h: h + e + 1] = np.linspace(1.0, -1.0, e + 1)
    s[h + e: h + 2 * e + 1] = np.linspace(-1.0, 0.0, e + 1)
    bump = np.where(np.abs(grid - 0.5) >= zone, np.sign(r), 0.0)
    bump[0] = 0.0
    lb = float(r @ bump)
    if target is None:
        target = float(r[h])
    need = target - float(r @ s)
    if lb <= 0:
        if abs(need) > 1e-12:
            raise ValueError("functional has no mass outside the zone; compensation infeasible")
        kappa = 0.0
    else:
        kappa = need / lb
    if abs(kappa) > 1:
        raise ValueError(f"compensation needs |kappa|={abs(kappa):.3g} > 1; infeasible")
    return GridPath(grid, s + kappa * bump)


def adversary_lower_bound(paths, etas, center_T: int) -> dict:
    """Min over PL centers on the ``center_T`` grid of the max G-norm error over ``paths``.

    Each path ``f_eta`` has ``f(1/2) = 1`` and ``f(1/2 + eta) = -1``. Only the
    two center nodes ``c(1/2) = a`` and ``c(1/2 + 1/center_T) = b`` enter:

        err >= |-1 - c(1/2 + eta)| + |1 - a|,   err >= |f(1/2 + 1/center_T) - b| + |1 - a|

    with ``c(1/2 + eta) = a + (b - a) eta center_T``; the LP minimum of the
    max of these bounds holds for every center, the best one included.
    """
    k = len(paths)
    # vars: a, b, E, u, p_1..p_k, q_1..q_k
    nv = 4 + 2 * k
    A, rhs = [], []

    def row(**coef):
        r = np.zeros(nv)
        for key, v in coef.items():
            r[key_index[key]] += v
        return r

    key_index = {"a": 0, "b": 1, "E": 2, "u": 3}
    for i in range(k):
        key_index[f"p{i}"] = 4 + i
        key_index[f"q{i}"] = 4 + k + i
    # u >= |1 - a|
    A += [row(a=-1, u=-1), row(a=1, u=-1)]
    rhs += [-1.0, 1.0]
    for i, (path, eta) in enumerate(zip(paths, etas)):
        lam = eta * center_T
        if not 0 < lam < 1:
            raise ValueError("eta must be below one center grid step")
        # p_i >= |1 + (1 - lam) a + lam b|
        A += [row(a=-(1 - lam), b=-lam, **{f"p{i}": -1}), row(a=(1 - lam), b=lam, **{f"p{i}": -1})]
        rhs += [1.0, -1.0]
        fv = float(path(0.5 + 1.0 / center_T))
        A += [row(b=-1, **{f"q{i}": -1}), row(b=1, **{f"q{i}": -1})]
        rhs += [-fv, fv]
        A += [row(E=-1, u=1, **{f"p{i}": 1}), row(E=-1, u=1, **{f"q{i}": 1})]
        rhs += [0.0, 0.0]
    cost = np.zeros(nv)
    cost[2] = 1.0
    bounds = [(None, None)] * 3 + [(0, None)] * (nv - 3)
    res = linprog(cost, A_ub=np.array(A), b_ub=np.array(rhs), bounds=bounds, method="highs")
    a, b = float(res.x[0]), float(res.x[1])
    return {"lower_bound": float(res.fun), "a": a, "b": b}


def center_error_on_paths(center: PiecewiseLinearCenter, paths) -> float:
    """Max over paths of the exact G-norm error of a PL center (both sides PL)."""
    worst = 0.0
    for p in paths:
        grid = np.union1d(p.grid, center.grid)
        diff = p(grid) - center(grid)
        worst = max(worst, float(np.max(np.abs(diff)) + abs(p(0.5) - center(0.5))))
    return worst
