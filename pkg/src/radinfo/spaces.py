"""Norm evaluators and moduli of convexity.

Four kinds of space are supported:

* ``lp``            -- finite-dimensional l_p, ``1 <= p <= inf``
* ``euclidean``     -- l_2 with its own label
* ``sup``           -- sup norm of a piecewise-linear path (max over nodes)
* ``sup_plus_point``-- sup norm plus ``|f(t*)|``

Labels follow the config syntax ``"lp:p=4,dim=2"``, ``"euclidean:dim=3"``,
``"sup"``, ``"sup_plus_point:t=0.5"``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import generator

KINDS = ("lp", "euclidean", "sup", "sup_plus_point")
PATH_KINDS = ("sup", "sup_plus_point")


@dataclass(frozen=True)
class GridPath:
    """Node values of a piecewise-linear path on ``[0, 1]``."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if grid[0] != 0.0 or grid[-1] != 1.0 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must increase strictly from 0 to 1")
        if not np.any(grid == 0.5):
            raise ValueError("grid must contain the node 1/2")
        if values[0] != 0.0:
            raise ValueError("paths start at 0")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def node(self, t: float) -> int:
        idx = np.flatnonzero(self.grid == t)
        if idx.size == 0:
            raise ValueError(f"t={t} is not a grid node")
        return int(idx[0])

    def __call__(self, t):
        return np.interp(t, self.grid, self.values)


@dataclass(frozen=True)
class NormedSpaceSpec:
    kind: str
    p: float = 2.0
    dim: int | None = None
    t_star: float = 0.5
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.kind == "euclidean":
            object.__setattr__(self, "p", 2.0)
        if self.kind in ("lp", "euclidean"):
            if not self.p >= 1:
                raise ValueError("l_p needs p >= 1")
            if self.dim is None or self.dim < 1:
                raise ValueError("l_p needs dim >= 1")
        if not 0.0 <= self.t_star <= 1.0:
            raise ValueError("t* must lie in [0, 1]")
        if not self.label:
            object.__setattr__(self, "label", _format_label(self))

    @property
    def is_path(self) -> bool:
        return self.kind in PATH_KINDS

    @property
    def dual_p(self) -> float:
        if self.p == 1:
            return math.inf
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)


def lp(p: float, dim: int) -> NormedSpaceSpec:
    return NormedSpaceSpec("lp", p=float(p), dim=int(dim))


def euclidean(dim: int) -> NormedSpaceSpec:
    return NormedSpaceSpec("euclidean", dim=int(dim))


def _format_label(space: NormedSpaceSpec) -> str:
    if space.kind == "lp":
        p = "inf" if math.isinf(space.p) else f"{space.p:g}"
        return f"lp:p={p},dim={space.dim}"
    if space.kind == "euclidean":
        return f"euclidean:dim={space.dim}"
    if space.kind == "sup":
        return "sup"
    return f"sup_plus_point:t={space.t_star:g}"


def parse_space(label: str) -> NormedSpaceSpec:
    """Parse a config label such as ``"lp:p=2,dim=2"``."""
    kind, _, rest = label.strip().partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"bad space parameter {item!r} in {label!r}")
        params[key.strip()] = value.strip()
    allowed = {"lp": {"p", "dim"}, "euclidean": {"dim"}, "sup": set(), "sup_plus_point": {"t"}}
    if kind not in allowed:
        raise ValueError(f"unknown space kind {kind!r}")
    unknown = set(params) - allowed[kind]
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)} for {kind}")
    if kind == "lp":
        return lp(float(params.get("p", 2)), int(params.get("dim", 2)))
    if kind == "euclidean":
        return euclidean(int(params.get("dim", 2)))
    if kind == "sup":
        return NormedSpaceSpec("sup")
    return NormedSpaceSpec("sup_plus_point", t_star=float(params.get("t", 0.5)))


def _lp_norm(v: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(v)
    if math.isinf(p):
        return a.max(axis=-1)
    if p == 1:
        return a.sum(axis=-1)
    fast = None
    with np.errstate(over="ignore", under="ignore"):
        if p == 2:
            fast = np.sqrt(np.einsum("...i,...i->...", v, v))
        elif p <= 8 and float(p).is_integer():
            ap = a * a
            for _ in range(int(p) - 2):
                ap *= a
            fast = ap.sum(axis=-1) ** (1.0 / p)
    m = a.max(axis=-1)
    if fast is not None:
        # accept unless the powers overflowed or underflowed
        if np.all(np.isfinite(fast)) and np.all((fast > 0) | (m == 0)):
            return fast
    # scale by the max entry to avoid overflow for large p
    safe = np.where(m > 0, m, 1.0)
    return m * np.sum((a / safe[..., None]) ** p, axis=-1) ** (1.0 / p)


def eval_norm(space: NormedSpaceSpec, x) -> float | np.ndarray:
    """Norm of a vector (or a stack of vectors along the last axis) or a GridPath."""
    if isinstance(x, GridPath):
        if not space.is_path:
            raise ValueError(f"{space.label} cannot evaluate a GridPath")
        sup = float(np.max(np.abs(x.values)))
        if space.kind == "sup":
            return sup
        return sup + abs(float(x.values[x.node(space.t_star)]))
    v = np.asarray(x, dtype=float)
    if space.is_path:
        raise ValueError(f"{space.label} evaluates GridPath objects only")
    if v.shape[-1] != space.dim:
        raise ValueError(f"dimension mismatch: got {v.shape[-1]}, space has dim {space.dim}")
    out = _lp_norm(v, space.p)
    return float(out) if np.ndim(out) == 0 else out


def dual_norm(space: NormedSpaceSpec, v) -> float | np.ndarray:
    """Dual norm on the same coordinates (l_q with 1/p + 1/q = 1)."""
    v = np.asarray(v, dtype=float)
    if space.is_path:
        raise ValueError("dual norms are only available for l_p spaces")
    out = _lp_norm(v, space.dual_p)
    return float(out) if np.ndim(out) == 0 else out


def norm_subgradients(space: NormedSpaceSpec, v: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    """Extreme points of the subdifferential of the norm at ``v`` (rows).

    Every row ``u`` has dual norm at most 1. For smooth norms the single
    gradient is returned; for l_1 and l_inf the vertices of the face that is
    active within ``rtol``.
    """
    v = np.asarray(v, dtype=float)
    n = _lp_norm(v, space.p)
    d = v.shape[-1]
    if n == 0:
        raise ValueError("subdifferential at 0 is the whole dual ball")
    p = space.p
    if math.isinf(p):
        a = np.abs(v)
        active = np.flatnonzero(a >= n * (1 - rtol))
        rows = np.zeros((active.size, d))
        rows[np.arange(active.size), active] = np.sign(v[active])
        return rows
    if p == 1:
        zero = np.flatnonzero(np.abs(v) <= n * rtol)
        base = np.sign(v)
        if zero.size > 10:
            zero = zero[:10]
        rows = []
        for mask in range(2 ** zero.size):
            u = base.copy()
            for j, k in enumerate(zero):
                u[k] = 1.0 if (mask >> j) & 1 else -1.0
            rows.append(u)
        return np.array(rows)
    a = np.abs(v) / n
    return (np.sign(v) * a ** (p - 1))[None, :]


def norm_gradient(space: NormedSpaceSpec, v: np.ndarray) -> np.ndarray:
    """Gradient of the norm for a stack of nonzero vectors (smooth l_p only)."""
    v = np.asarray(v, dtype=float)
    n = _lp_norm(v, space.p)
    if space.p == 2:
        return v / n[..., None]
    if space.p == 1 or math.isinf(space.p):
        raise ValueError("norm is not differentiable")
    return np.sign(v) * (np.abs(v) / n[..., None]) ** (space.p - 1)


# ---------------------------------------------------------------- modulus


@dataclass(frozen=True)
class ModulusEstimate:
    epsilon: float
    value: float
    tolerance: float
    method: str

    @property
    def uniformly_convex(self) -> bool:
        return self.value > self.tolerance


def _unit(space, directions):
    return directions / eval_norm(space, directions)[..., None]


def _section_modulus(space, basis, epsilon, tol, n_angles=720):
    """Modulus restricted to the plane spanned by the two rows of ``basis``.

    For each unit vector x(a) the partner y is found on the unit circle at the
    angular offset where ``||x - y|| = epsilon`` (the distance from x grows
    monotonically along the unit circle up to the antipode), for both
    orientations. The coarse angle minimum is then refined by golden-section.
    """

    def point(a):
        dirs = np.cos(a)[..., None] * basis[0] + np.sin(a)[..., None] * basis[1]
        return _unit(space, dirs)

    def gap(a):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        x = point(a)
        best = np.full(a.shape, np.inf)
        for sign in (1.0, -1.0):
            lo = np.zeros_like(a)
            hi = np.full_like(a, math.pi)
            far = eval_norm(space, x - point(a + sign * hi))
            # target unreachable within this section (epsilon above the diameter)
            reach = far >= epsilon
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                d = eval_norm(space, x - point(a + sign * mid))
                above = d >= epsilon
                hi = np.where(above, mid, hi)
                lo = np.where(above, lo, mid)
            y = point(a + sign * hi)
            val = 1.0 - eval_norm(space, 0.5 * (x + y))
            best = np.minimum(best, np.where(reach, val, np.inf))
        return best

    angles = np.linspace(0.0, math.pi, n_angles, endpoint=False)
    vals = gap(angles)
    k = int(np.argmin(vals))
    if not np.isfinite(vals[k]):
        return math.inf
    step = angles[1] - angles[0]
    lo, hi = angles[k] - step, angles[k] + step
    invphi = (math.sqrt(5) - 1) / 2
    c, d = hi - invphi * (hi - lo), lo + invphi * (hi - lo)
    fc, fd = gap(c)[0], gap(d)[0]
    while hi - lo > 1e-7:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = gap(c)[0]
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = gap(d)[0]
    return float(min(vals[k], fc, fd))


def modulus_of_convexity(space: NormedSpaceSpec, epsilon: float, tol: float = 1e-6,
                         n_sections: int = 6, seed: int = 0) -> ModulusEstimate:
    """Estimate ``inf{1 - ||(x+y)/2|| : ||x|| = ||y|| = 1, ||x - y|| >= epsilon}``.

    Searches 2-d sections: for dim 2 the whole plane, for dim 3 the coordinate
    planes plus ``n_sections`` seeded random planes.
    """
    if space.is_path:
        raise ValueError("modulus estimation is limited to finite-dimensional l_p spaces")
    if not 0 < epsilon <= 2:
        raise ValueError("epsilon must lie in (0, 2]")
    if space.dim > 3:
        raise ValueError("modulus estimation supports dim <= 3")
    if space.dim == 1:
        # the unit sphere is {-1, 1}; only epsilon = 2 is admissible
        value = 1.0 if epsilon <= 2 else math.inf
        return ModulusEstimate(epsilon, value, tol, "dim-1 closed form")
    d = space.dim
    eye = np.eye(d)
    sections = [eye[[i, j]] for i in range(d) for j in range(i + 1, d)]
    if d == 3:
        rng = generator(seed, "modulus-sections")
        for _ in range(n_sections):
            q, _ = np.linalg.qr(rng.standard_normal((3, 2)))
            sections.append(q.T)
    value = min(_section_modulus(space, b, epsilon, tol) for b in sections)
    return ModulusEstimate(epsilon, max(value, 0.0), tol, f"2-d sections ({len(sections)}), golden-section")
