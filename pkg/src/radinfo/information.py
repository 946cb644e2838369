"""Information operators and local / worst-case / probabilistic radii.

Problem sets ``A`` are regions of R^d exposing membership tests. Fibers
``{x in A : N x = y}`` are sampled directly in the affine solution space of
``N x = y``: for one-dimensional fibers the chord endpoints are located
exactly (closed form for Euclidean balls, bisection otherwise) and included
in the sample, so the radius of a segment fiber is not underestimated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .chebyshev import RadiusCertificate, radius_center
from .mc import proportion
from .rng import float_key, generator
from .spaces import NormedSpaceSpec, euclidean, eval_norm


class EmptyFiber(ValueError):
    pass


# ----------------------------------------------------------------- regions


class Region:
    """A bounded subset of R^d contained in the Euclidean ball of radius ``bound``."""

    dim: int
    bound: float

    def contains(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Uniform (Lebesgue) sample by rejection from the bounding box."""
        out, have = [], 0
        while have < n:
            k = max(2 * (n - have), 1024)
            cand = rng.uniform(-self.bound, self.bound, size=(k, self.dim))
            cand = cand[self.contains(cand)]
            out.append(cand)
            have += len(cand)
            if k > 1 << 26:
                raise RuntimeError("region too thin to sample by rejection")
        return np.concatenate(out)[:n]

    def chord(self, x0: np.ndarray, v: np.ndarray, scan: int = 257):
        """Parameter range ``(s_lo, s_hi)`` of the hull of ``{s : x0 + s v in A}``."""
        half = self.bound + float(np.linalg.norm(x0))
        return _scan_chord(self, x0, v, -half, half, scan)


def _bisect(region, x0, v, inside, outside, iters=80):
    for _ in range(iters):
        mid = 0.5 * (inside + outside)
        if mid == inside or mid == outside:
            break
        if region.contains((x0 + mid * v)[None, :])[0]:
            inside = mid
        else:
            outside = mid
    return inside


def _scan_chord(region, x0, v, lo, hi, scan):
    s = np.linspace(lo, hi, scan)
    member = region.contains(x0[None, :] + s[:, None] * v[None, :])
    idx = np.flatnonzero(member)
    if idx.size == 0:
        return None
    i, j = idx[0], idx[-1]
    s_lo = s[i] if i == 0 else _bisect(region, x0, v, s[i], s[i - 1])
    s_hi = s[j] if j == scan - 1 else _bisect(region, x0, v, s[j], s[j + 1])
    return float(s_lo), float(s_hi)


@dataclass
class NormBall(Region):
    space: NormedSpaceSpec
    radius: float = 1.0

    def __post_init__(self):
        self.dim = self.space.dim
        # every l_p unit vector has Euclidean norm <= sqrt(dim)
        self.bound = self.radius * (math.sqrt(self.dim) if self.space.p > 2 else 1.0)

    def contains(self, x):
        return eval_norm(self.space, np.atleast_2d(x)) <= self.radius

    def chord(self, x0, v, scan=257):
        if self.space.p == 2:
            v_unit = float(np.linalg.norm(v))
            b = float(x0 @ v) / v_unit ** 2
            c = (float(x0 @ x0) - self.radius ** 2) / v_unit ** 2
            disc = b * b - c
            if disc < 0:
                return None
            r = math.sqrt(disc)
            return -b - r, -b + r
        return super().chord(x0, v, scan)


def unit_disk() -> NormBall:
    return NormBall(euclidean(2))


@dataclass
class SlabRemoved(Region):
    """``base`` minus the open slab ``|<normal, x>| < tau``."""

    base: Region
    normal: np.ndarray
    tau: float

    def __post_init__(self):
        self.normal = np.asarray(self.normal, dtype=float)
        self.dim, self.bound = self.base.dim, self.base.bound

    def contains(self, x):
        x = np.atleast_2d(x)
        return self.base.contains(x) & (np.abs(x @ self.normal) >= self.tau)

    def chord(self, x0, v, scan=257):
        return _derived_chord(self, x0, v, scan)


@dataclass
class Band(Region):
    """``base`` intersected with the closed band ``|<direction, x>| <= r``."""

    base: Region
    direction: np.ndarray
    r: float

    def __post_init__(self):
        self.direction = np.asarray(self.direction, dtype=float)
        self.dim, self.bound = self.base.dim, self.base.bound

    def contains(self, x):
        x = np.atleast_2d(x)
        return self.base.contains(x) & (np.abs(x @ self.direction) <= self.r)

    def chord(self, x0, v, scan=257):
        base = self.base.chord(x0, v, scan)
        if base is None:
            return None
        a, b = float(x0 @ self.direction), float(v @ self.direction)
        lo, hi = base
        if b == 0:
            return base if abs(a) <= self.r else None
        s1, s2 = sorted(((-self.r - a) / b, (self.r - a) / b))
        lo, hi = max(lo, s1), min(hi, s2)
        return (lo, hi) if lo <= hi else None


@dataclass
class Removed(Region):
    """``base`` with the points flagged by ``excluded`` deleted."""

    base: Region
    excluded: Callable[[np.ndarray], np.ndarray]
    label: str = ""

    def __post_init__(self):
        self.dim, self.bound = self.base.dim, self.base.bound

    def contains(self, x):
        x = np.atleast_2d(x)
        return self.base.contains(x) & ~self.excluded(x)

    def chord(self, x0, v, scan=257):
        return _derived_chord(self, x0, v, scan)


def _derived_chord(region, x0, v, scan):
    base = region.base.chord(x0, v, scan)
    if base is None:
        return None
    lo, hi = base
    ends = region.contains(np.stack([x0 + lo * v, x0 + hi * v]))
    if ends.all():
        return base
    return _scan_chord(region, x0, v, lo, hi, scan)


# ---------------------------------------------------------------- operators


@dataclass
class Continuation:
    """Piecewise-constant rule choosing functional i from the observed y_{i-1}."""

    breaks: Sequence[float]
    functionals: Sequence[Sequence[float]]

    def __post_init__(self):
        if len(self.functionals) != len(self.breaks) + 1:
            raise ValueError("need one more functional than breakpoints")


@dataclass
class InformationOperatorSpec:
    functionals: np.ndarray
    adaptive: list = field(default_factory=list)

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.functionals, dtype=float))
        if f.shape[0] < 1:
            raise ValueError("cardinality must be at least 1")
        norms = np.linalg.norm(f, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero functional")
        self.functionals = f / norms[:, None]
        normed = []
        for stage in self.adaptive:
            fs = np.asarray(stage.functionals, dtype=float)
            normed.append(Continuation(list(stage.breaks), fs / np.linalg.norm(fs, axis=1)[:, None]))
        self.adaptive = normed

    @property
    def cardinality(self) -> int:
        return self.functionals.shape[0] + len(self.adaptive)

    @property
    def dim(self) -> int:
        return self.functionals.shape[1]

    def functionals_for(self, y) -> np.ndarray:
        """The functionals actually applied when the observation is ``y``."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        rows = list(self.functionals)
        for i, stage in enumerate(self.adaptive):
            prev = y[self.functionals.shape[0] + i - 1]
            rows.append(stage.functionals[int(np.searchsorted(stage.breaks, prev, side="right"))])
        return np.array(rows)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        out = x @ self.functionals.T
        for stage in self.adaptive:
            idx = np.searchsorted(stage.breaks, out[:, -1], side="right")
            nxt = np.einsum("ij,ij->i", x, np.asarray(stage.functionals)[idx])
            out = np.column_stack([out, nxt])
        return out


def functional(*coeffs) -> InformationOperatorSpec:
    return InformationOperatorSpec(np.array([coeffs], dtype=float))


@dataclass
class FiberSample:
    y: np.ndarray
    points: np.ndarray


def sample_fiber(N: InformationOperatorSpec, y, region: Region, n_points: int,
                 rng: np.random.Generator, max_proposals: int = 1 << 22) -> FiberSample:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    L = N.functionals_for(y)
    k, d = L.shape
    if y.shape != (k,):
        raise ValueError(f"expected {k} observed values")
    x0 = np.linalg.lstsq(L, y, rcond=None)[0]
    _, sv, vt = np.linalg.svd(L)
    rank = int(np.sum(sv > 1e-12 * sv[0]))
    if not np.allclose(L @ x0, y, atol=1e-12):
        raise EmptyFiber("inconsistent observation")
    basis = vt[rank:]
    if basis.shape[0] == 0:
        if region.contains(x0[None, :])[0]:
            return FiberSample(y, x0[None, :])
        raise EmptyFiber(f"fiber at y={y.tolist()} is empty")
    if basis.shape[0] == 1:
        v = basis[0]
        ch = region.chord(x0, v)
        if ch is None:
            raise EmptyFiber(f"fiber at y={y.tolist()} is empty")
        lo, hi = ch
        s = np.concatenate([[lo, hi], lo + (hi - lo) * rng.random(max(n_points - 2, 0))])
        pts = x0[None, :] + s[:, None] * v[None, :]
        pts = pts[region.contains(pts)]
        if len(pts) == 0:
            raise EmptyFiber(f"fiber at y={y.tolist()} is empty")
        return FiberSample(y, pts)
    half = math.sqrt(max(region.bound ** 2 - float(x0 @ x0), 0.0))
    got, tried = [], 0
    while sum(len(g) for g in got) < n_points:
        s = rng.uniform(-half, half, size=(4096, basis.shape[0]))
        pts = x0[None, :] + s @ basis
        got.append(pts[region.contains(pts)])
        tried += 4096
        if tried > max_proposals:
            break
    pts = np.concatenate(got)[:n_points]
    if len(pts) == 0:
        raise EmptyFiber(f"no fiber points found at y={y.tolist()} within budget")
    return FiberSample(y, pts)


def local_radius(N: InformationOperatorSpec, y, region: Region, space: NormedSpaceSpec,
                 n_points: int = 256, seed: int = 0, tol: float = 1e-9) -> RadiusCertificate:
    """Chebyshev radius of a sample of the fiber ``N^{-1}(y) ∩ A``."""
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    rng = generator(seed, "fiber", *float_key(y_arr))
    fib = sample_fiber(N, y_arr, region, n_points, rng)
    return radius_center(fib.points, space, tol=tol)


def radius_profile(N, region, space, y_grid, n_points=256, seed=0):
    """``[(y, radius or None)]`` in y-grid order; empty fibers give None."""
    out = []
    for y in y_grid:
        try:
            out.append((y, local_radius(N, y, region, space, n_points, seed).radius))
        except EmptyFiber:
            out.append((y, None))
    return out


def worst_radius(N, region, space, y_grid, n_points=256, seed=0) -> float:
    vals = [r for _, r in radius_profile(N, region, space, y_grid, n_points, seed) if r is not None]
    return max(vals) if vals else 0.0


# ----------------------------------------------------- probabilistic radius


class ExclusionFamily:
    """Nested sets ``A(theta)`` shrinking as the exclusion parameter grows.

    ``A(0)`` is the whole base set; measure and sup-radius are nonincreasing
    in ``theta``.
    """

    base: Region
    theta_max: float

    def region(self, theta: float) -> Region:
        raise NotImplementedError

    def member(self, theta: float, x: np.ndarray) -> np.ndarray:
        return self.region(theta).contains(x)

    def breakpoints(self, theta: float) -> list:
        """Observed values where the sup over fibers may sit (added to the y-grid)."""
        return []

    def exact_measure(self, theta: float) -> float | None:
        return None


def disk_slab_fraction(tau: float) -> float:
    """Normalized area of ``{|x_1| < tau}`` inside the unit disk."""
    tau = min(max(tau, 0.0), 1.0)
    return (2.0 / math.pi) * (tau * math.sqrt(1.0 - tau * tau) + math.asin(tau))


@dataclass
class SlabFamily(ExclusionFamily):
    """Remove the slab ``|<normal, x>| < theta``."""

    base: Region
    normal: np.ndarray
    theta_max: float = 1.0

    def __post_init__(self):
        self.normal = np.asarray(self.normal, dtype=float)

    def region(self, theta):
        return SlabRemoved(self.base, self.normal, theta)

    def member(self, theta, x):
        return np.abs(x @ self.normal) >= theta

    def breakpoints(self, theta):
        return [-theta, theta]

    def exact_measure(self, theta):
        if isinstance(self.base, NormBall) and self.base.space.p == 2 and self.base.dim == 2:
            return 1.0 - disk_slab_fraction(theta)
        return None


@dataclass
class BandFamily(ExclusionFamily):
    """Keep the band ``|<direction, x>| <= 1 - theta``."""

    base: Region
    direction: np.ndarray
    theta_max: float = 1.0

    def __post_init__(self):
        self.direction = np.asarray(self.direction, dtype=float)

    def region(self, theta):
        return Band(self.base, self.direction, 1.0 - theta)

    def member(self, theta, x):
        return np.abs(x @ self.direction) <= 1.0 - theta

    def exact_measure(self, theta):
        if isinstance(self.base, NormBall) and self.base.space.p == 2 and self.base.dim == 2:
            return disk_slab_fraction(1.0 - theta)
        return None


@dataclass
class ProbRadiusEstimate:
    delta: float
    bound: float
    theta: float
    measure: dict
    certified: bool = True
    extra: dict = field(default_factory=dict)


def prob_radius_upper(N, family: ExclusionFamily, delta: float, space: NormedSpaceSpec,
                      y_grid, n_measure: int = 200_000, n_points: int = 256, seed: int = 0,
                      bisection_steps: int = 60) -> ProbRadiusEstimate:
    """Upper bound on the delta-probabilistic radius via an exclusion family.

    The largest exclusion ``theta`` whose Wilson lower confidence bound on
    ``mu(A(theta))`` stays >= 1 - delta is found by bisection on one fixed
    Monte Carlo sample (the estimate is then exactly monotone in theta); the
    bound is the sup over the y-grid of the local radius on ``A(theta)``.
    """
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0, 1]")
    if delta == 0:
        theta = 0.0
        measure = {"estimate": 1.0, "ci_lo": 1.0, "ci_hi": 1.0, "halfwidth": 0.0, "n": 0}
    else:
        pts = family.base.sample(generator(seed, "measure"), n_measure)

        def lcb(theta):
            if theta == 0:
                return 1.0
            return proportion(int(family.member(theta, pts).sum()), n_measure)["ci_lo"]

        if lcb(family.theta_max) >= 1 - delta:
            theta = family.theta_max
        else:
            lo, hi = 0.0, family.theta_max
            for _ in range(bisection_steps):
                mid = 0.5 * (lo + hi)
                if lcb(mid) >= 1 - delta:
                    lo = mid
                else:
                    hi = mid
            theta = lo
        k = int(family.member(theta, pts).sum()) if theta > 0 else n_measure
        measure = proportion(k, n_measure)
    exact = family.exact_measure(theta)
    if exact is not None:
        measure["exact"] = exact
    region = family.region(theta)
    ys = sorted(set([float(y) for y in y_grid] + [float(b) for b in family.breakpoints(theta)]))
    prof = radius_profile(N, region, space, ys, n_points, seed)
    vals = [r for _, r in prof if r is not None]
    return ProbRadiusEstimate(delta=delta, bound=max(vals) if vals else 0.0, theta=theta,
                              measure=measure, extra={"profile": prof})


# -------------------------------------------------------------- continuity


def perturbation_probe(N: InformationOperatorSpec, y, scales, region: Region,
                       space: NormedSpaceSpec, seed: int = 0, n_points: int = 256,
                       trials: int = 8) -> dict:
    """Local-radius changes under random perturbations of N and y at each scale.

    ``interior`` is False when a fiber at distance ``10 * max(scales)`` from y
    is empty, i.e. y sits near the edge of the image ``N(A)``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    base = local_radius(N, y, region, space, n_points, seed).radius
    reach = 10 * max(scales) if len(scales) else 0.0
    interior = base > 0
    for i in range(len(y)):
        for sgn in (-1, 1):
            probe = y.copy()
            probe[i] += sgn * reach
            try:
                local_radius(N, probe, region, space, 16, seed)
            except EmptyFiber:
                interior = False
    rows = []
    for k, s in enumerate(scales):
        rng = generator(seed, "perturb", k)
        worst = 0.0
        for _ in range(trials):
            F = N.functionals + s * rng.standard_normal(N.functionals.shape)
            y2 = y + s * rng.standard_normal(y.shape)
            try:
                r = local_radius(InformationOperatorSpec(F), y2, region, space, n_points, seed).radius
            except EmptyFiber:
                r = 0.0
            worst = max(worst, abs(r - base))
        rows.append({"scale": float(s), "abs_change": worst})
    return {"base_radius": base, "interior": interior, "rows": rows}
