"""Chebyshev radii and centers of finite point sets in l_p norms.

The solver minimises ``c -> max_i ||x_i - c||`` with a Polyak-step
subgradient method, then polishes the best iterate (SLSQP on the epigraph
form for smooth norms, an exact LP for l_1 / l_inf). Every answer carries
an upper bound (the achieved objective) and a lower bound that holds for
*all* centers:

* half the largest pairwise distance, and
* a dual certificate ``sum_i lam_i <u_i, x_i - c*> - ||sum_i lam_i u_i||_* * D``
  built from norm subgradients ``u_i`` at the active points, valid for every
  center within ``D = 2 * upper`` of ``c*`` (farther centers are worse anyway).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize, nnls

from .rng import generator
from .spaces import NormedSpaceSpec, dual_norm, eval_norm, norm_gradient, norm_subgradients


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            raise ValueError("point set must be nonempty")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    @classmethod
    def from_csv(cls, path) -> "PointSet":
        return cls(np.loadtxt(path, delimiter=",", ndmin=2))


@dataclass
class RadiusCertificate:
    radius: float
    center: np.ndarray
    upper: float
    lower: float
    tol: float = 1e-9
    iterations: int = 0
    method: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    @property
    def converged(self) -> bool:
        return self.gap <= self.tol


@dataclass
class CenterSetProbe:
    r: float
    epsilon: float
    sampled_diameter: float
    bound_trend: list
    accepted: list = field(default_factory=list)
    starved: list = field(default_factory=list)


def _as_points(points) -> np.ndarray:
    return points.points if isinstance(points, PointSet) else PointSet(points).points


def max_distance(points, center, space: NormedSpaceSpec) -> float:
    return float(np.max(eval_norm(space, _as_points(points) - np.asarray(center, dtype=float))))


def pairwise_half_diameter(x: np.ndarray, space: NormedSpaceSpec) -> float:
    if len(x) < 2:
        return 0.0
    d = eval_norm(space, x[:, None, :] - x[None, :, :])
    return 0.5 * float(d.max())


def _dual_lower_bound(x, c, upper, space, slack):
    """Lower bound on the Chebyshev radius from subgradients at ``c``."""
    diffs = x - c
    dist = eval_norm(space, diffs)
    active = np.flatnonzero(dist >= upper - slack)
    rows, vals = [], []
    for i in active:
        if dist[i] == 0:
            continue
        for u in norm_subgradients(space, diffs[i]):
            rows.append(u)
            vals.append(float(u @ diffs[i]))
    if not rows:
        return 0.0
    U = np.array(rows).T  # dim x k
    vals = np.array(vals)
    # min ||U lam||^2 subject to lam >= 0, sum lam = 1 (weighted equality row)
    w = 1e3 * max(1.0, float(np.abs(U).max()))
    A = np.vstack([U, w * np.ones((1, U.shape[1]))])
    b = np.concatenate([np.zeros(U.shape[0]), [w]])
    lam, _ = nnls(A, b)
    if lam.sum() <= 0:
        return 0.0
    lam = lam / lam.sum()
    resid = U @ lam
    return float(lam @ vals - dual_norm(space, resid) * 2.0 * upper)


def certify(points, center, space: NormedSpaceSpec) -> tuple[float, float]:
    """(upper, lower) bounds on the Chebyshev radius given a candidate center."""
    x = _as_points(points)
    c = np.asarray(center, dtype=float)
    upper = max_distance(x, c, space)
    lower = pairwise_half_diameter(x, space)
    if upper > 0:
        for slack in (1e-12, 1e-9, 1e-6, 1e-4):
            lower = max(lower, _dual_lower_bound(x, c, upper, space, slack * max(upper, 1.0)))
    return upper, min(lower, upper)


def _subgradient(x, space, c0, iters, lower):
    """Polyak steps towards a decreasing target below the best value."""
    c = c0.copy()
    best_c, best_f = c.copy(), max_distance(x, c, space)
    gamma = max(best_f - lower, 1e-12)
    stall = 0
    for k in range(iters):
        diffs = x - c
        dist = eval_norm(space, diffs)
        j = int(np.argmax(dist))
        f = float(dist[j])
        if f < best_f - 1e-15:
            best_f, best_c, stall = f, c.copy(), 0
        else:
            stall += 1
            if stall > 20:
                gamma *= 0.5
                stall = 0
        if f == 0.0 or best_f - lower <= 1e-13 * max(1.0, best_f):
            break
        g = -norm_subgradients(space, diffs[j])[0]
        gg = float(g @ g)
        target = max(best_f - gamma, lower)
        step = (f - target) / gg if f > target else gamma / gg
        c = c - step * g
        if gamma < 1e-15:
            break
    return best_c, best_f, k + 1


def _polish_lp(x, space):
    n, d = x.shape
    if math.isinf(space.p):
        # vars: c (d), t
        cost = np.zeros(d + 1)
        cost[-1] = 1.0
        A, b = [], []
        for i in range(n):
            for k in range(d):
                row = np.zeros(d + 1)
                row[k], row[-1] = -1.0, -1.0
                A.append(row)
                b.append(-x[i, k])
                row = np.zeros(d + 1)
                row[k], row[-1] = 1.0, -1.0
                A.append(row)
                b.append(x[i, k])
        res = linprog(cost, A_ub=np.array(A), b_ub=np.array(b),
                      bounds=[(None, None)] * (d + 1), method="highs")
        return res.x[:d]
    # l_1: vars c (d), t, s (n*d) with s_ik >= |x_ik - c_k|, sum_k s_ik <= t
    nv = d + 1 + n * d
    cost = np.zeros(nv)
    cost[d] = 1.0
    A, b = [], []
    for i in range(n):
        row = np.zeros(nv)
        row[d] = -1.0
        row[d + 1 + i * d: d + 1 + (i + 1) * d] = 1.0
        A.append(row)
        b.append(0.0)
        for k in range(d):
            s = d + 1 + i * d + k
            row = np.zeros(nv)
            row[k], row[s] = -1.0, -1.0
            A.append(row)
            b.append(-x[i, k])
            row = np.zeros(nv)
            row[k], row[s] = 1.0, -1.0
            A.append(row)
            b.append(x[i, k])
    res = linprog(cost, A_ub=np.array(A), b_ub=np.array(b),
                  bounds=[(None, None)] * (d + 1) + [(0, None)] * (n * d), method="highs")
    return res.x[:d]


def _polish_smooth(x, space, c0):
    t0 = max_distance(x, c0, space)
    scale = max(t0, 1e-300)
    d = x.shape[1]

    def cons(z):
        return z[-1] - eval_norm(space, x - z[:d]) / scale

    def cons_jac(z):
        diffs = x - z[:d]
        dist = eval_norm(space, diffs)
        J = np.zeros((len(x), d + 1))
        ok = dist > 0
        J[ok, :d] = norm_gradient(space, diffs[ok]) / scale
        J[:, -1] = 1.0
        return J

    z0 = np.concatenate([c0, [1.0]])
    res = minimize(lambda z: z[-1], z0, jac=lambda z: np.eye(d + 1)[-1], method="SLSQP",
                   constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
                   options={"ftol": 1e-15, "maxiter": 500})
    return res.x[:d]


def radius_center(points, space: NormedSpaceSpec, tol: float = 1e-9,
                  max_iters: int = 2000) -> RadiusCertificate:
    """Chebyshev center and radius of a finite point set with certificate."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = _as_points(points)
    if x.shape[1] != space.dim:
        raise ValueError("point dimension does not match the space")
    lower0 = pairwise_half_diameter(x, space)
    c0 = 0.5 * (x.min(axis=0) + x.max(axis=0))
    c, f, iters = _subgradient(x, space, c0, max_iters, lower0)
    upper, lower = certify(x, c, space)
    method = "subgradient"
    if upper - lower > tol:
        if space.p == 1 or math.isinf(space.p):
            cand = _polish_lp(x, space)
            method = "subgradient+lp"
        else:
            cand = _polish_smooth(x, space, c)
            method = "subgradient+slsqp"
        cu, cl = certify(x, cand, space)
        if cu <= upper:
            c = cand
        upper = min(upper, cu)
        lower = min(max(lower, cl), upper)
    return RadiusCertificate(radius=upper, center=np.asarray(c), upper=upper, lower=lower,
                             tol=tol, iterations=iters, method=method)


def brute_radius_oracle(points, space: NormedSpaceSpec, box=None, step: float = 1e-3,
                        chunk: int = 1 << 18) -> float:
    """Exhaustive grid search over candidate centers (dim <= 3)."""
    x = _as_points(points)
    d = x.shape[1]
    if d > 3:
        raise ValueError("brute oracle supports dim <= 3")
    if box is None:
        box = (x.min(axis=0), x.max(axis=0))
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
        raise ValueError("box must contain the point set")
    axes = [np.arange(lo[k], hi[k] + step * 0.5, step) for k in range(d)]
    axes = [a if a.size else np.array([lo[k]]) for k, a in enumerate(axes)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    best = math.inf
    for start in range(0, len(mesh), chunk):
        g = mesh[start:start + chunk]
        worst = np.zeros(len(g))
        for p in x:
            np.maximum(worst, eval_norm(space, g - p), out=worst)
        best = min(best, float(worst.min()))
    return best


def epsilon_center_diameter(points, space: NormedSpaceSpec, eps_list, samples: int = 200_000,
                            seed: int = 0, max_keep: int = 3000, tol: float = 1e-10) -> CenterSetProbe:
    """Sampled diameter of the epsilon-center sets ``{c : max_i ||x_i - c|| <= r + eps}``."""
    x = _as_points(points)
    cert = radius_center(x, space, tol=tol)
    if cert.gap > min(eps_list) * 1e-2:
        raise ValueError("radius not certified tightly enough for the requested epsilons")
    r = cert.upper
    trend, accepted, starved = [], [], []
    for k, eps in enumerate(eps_list):
        rho = r + eps
        # every l_p ball of radius rho sits inside the l_inf box of the same radius
        lo = x.max(axis=0) - rho
        hi = x.min(axis=0) + rho
        rng = generator(seed, "eps-center", k)
        cand = lo + (hi - lo) * rng.random((samples, x.shape[1]))
        worst = np.zeros(samples)
        for p in x:
            np.maximum(worst, eval_norm(space, cand - p), out=worst)
        keep = cand[worst <= rho]
        rate = len(keep) / samples
        accepted.append(rate)
        starved.append(rate < 1e-4)
        if len(keep) == 0:
            trend.append((float(eps), 0.0))
            continue
        if len(keep) > max_keep:
            keep = keep[:max_keep]
        diam = float(eval_norm(space, keep[:, None, :] - keep[None, :, :]).max())
        trend.append((float(eps), diam))
    eps0, d0 = trend[-1]
    return CenterSetProbe(r=r, epsilon=eps0, sampled_diameter=d0, bound_trend=trend,
                          accepted=accepted, starved=starved)


def nested_radius_sequence(sets, space: NormedSpaceSpec, tol: float = 1e-9) -> list[float]:
    """Radii of a nested sequence ``A_1 ⊆ A_2 ⊆ ...``; nesting is checked."""
    arrays = [_as_points(s) for s in sets]
    for a, b in zip(arrays, arrays[1:]):
        inside = (np.abs(a[:, None, :] - b[None, :, :]).max(axis=2) == 0).any(axis=1)
        if not inside.all():
            raise ValueError("sets are not nested")
    return [radius_center(a, space, tol=tol).radius for a in arrays]
