"""Small self-contained counterexamples and convergence checks.

* an atomic-marginal measure on the disk where a single tilted functional
  separates all heavy chords (probabilistic radius 0, worst radius 1);
* a thin slab in a Hilbert ball that lowers the worst error from 2 to about
  sqrt(2);
* a toy cost model where the probabilistic complexity is strictly smaller;
* convergence of the probabilistic bound on the disk as delta -> 0, and
  invariance of the radius under removal of a null set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize

from .chebyshev import RadiusCertificate
from .information import (BandFamily, Removed, SlabFamily, SlabRemoved, functional,
                          local_radius, prob_radius_upper, radius_profile, unit_disk,
                          worst_radius)
from .mc import proportion
from .rng import generator
from .spaces import euclidean

# ------------------------------------------------------------ atomic measure


@dataclass
class AtomMeasureSpec:
    """Marginal atoms ``q_i`` (rational, in [-1, 1]) with weights ``c_i``.

    The measure puts mass ``c_i`` uniformly on the vertical chord of the unit
    disk at ``x_1 = q_i``. ``k_used`` and ``M`` are filled in by the
    construction when left as None.
    """

    atoms: list
    k_used: int | None = None
    M: float | None = None

    def __post_init__(self):
        self.atoms = [(Fraction(q), float(c)) for q, c in self.atoms]
        qs = [q for q, _ in self.atoms]
        if len(set(qs)) != len(qs):
            raise ValueError("atoms must be distinct")
        if any(abs(q) > 1 for q in qs):
            raise ValueError("atoms must lie in [-1, 1]")
        if any(c < 0 for _, c in self.atoms) or abs(sum(c for _, c in self.atoms) - 1) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")


def min_gap(qs) -> Fraction | None:
    s = sorted(qs)
    return min((b - a for a, b in zip(s, s[1:])), default=None)


def _intervals_disjoint(iv) -> bool:
    s = sorted(iv)
    return all(a[1] < b[0] for a, b in zip(s, s[1:]))


def atoms_construct(spec: AtomMeasureSpec, delta: float, scan: int = 200_001):
    """Excluded set A, separating functional L and a zero-radius certificate.

    Keeps the shortest prefix of atoms with mass >= 1 - delta/2. Along
    ``L = M x_1 + x_2`` chord ``i`` maps onto ``M q_i + E_i``; when these
    images are pairwise disjoint each fiber of L meets A in at most one point.
    With ``M > 2 / gap`` this holds without trimming since chords have
    length <= 2. A user-supplied smaller M triggers trimming of the overlap
    zones from the cheaper chord, and fails if the trimmed mass exceeds
    delta/2.
    """
    if not delta > 0:
        raise ValueError("delta must be positive: the construction needs mass to trim")
    if spec.k_used is None:
        acc, k = 0.0, 0
        for _, c in spec.atoms:
            acc += c
            k += 1
            if acc >= 1 - delta / 2 - 1e-15:
                break
    else:
        k = spec.k_used
    used = spec.atoms[:k]
    kept_mass = sum(c for _, c in used)
    if kept_mass < 1 - delta / 2 - 1e-15:
        raise ValueError(f"top-{k} atom mass {kept_mass} < 1 - delta/2")
    qs = [q for q, _ in used]
    gap = min_gap(qs)
    if spec.M is not None:
        M = Fraction(spec.M)
    elif gap is None:
        M = Fraction(0)  # one chord: L = x_2 already separates points
    else:
        M = Fraction(math.floor(2 / gap) + 1)
        if float(M) > 1e15:
            raise ValueError("atoms too clustered for a representable slope")

    chords = []
    for q, c in used:
        s = math.sqrt(1.0 - float(q) ** 2)
        chords.append({"q": q, "weight": c, "lo": -s, "hi": s, "half": s})
    trimmed = _trim(chords, M) if not (gap is None or M * gap > 2) else 0.0
    if trimmed > delta / 2 + 1e-15:
        raise ValueError(f"trimming removes mass {trimmed} > delta/2; increase M")

    images = [(float(M * ch["q"]) + ch["lo"], float(M * ch["q"]) + ch["hi"]) for ch in chords
              if ch["hi"] >= ch["lo"]]
    exact_ok = gap is None or M * gap > 2 or _intervals_disjoint(images)
    # brute scan of L-values: count chords hit by each fiber
    lo = min(a for a, _ in images)
    hi = max(b for _, b in images)
    v = np.linspace(lo, hi, scan)
    hits = np.zeros(scan, dtype=np.int64)
    for a, b in images:
        hits += (v >= a) & (v <= b)
    max_hits = int(hits.max())
    ok = bool(exact_ok and max_hits <= 1)

    norm = math.hypot(float(M), 1.0)
    L = np.array([float(M), 1.0]) / norm
    A = {
        "chords": [{"q": str(ch["q"]), "weight": ch["weight"], "E": [ch["lo"], ch["hi"]]}
                   for ch in chords],
        "excluded_mass": 1.0 - kept_mass + trimmed,
        "trimmed_mass": trimmed,
    }
    radius = 0.0 if ok else math.nan
    cert = RadiusCertificate(radius=radius, center=np.zeros(2), upper=radius, lower=0.0,
                             tol=0.0, method="fiber-separation",
                             extra={"k_used": k, "M": float(M), "min_gap": None if gap is None else str(gap),
                                    "pairwise_disjoint": bool(exact_ok), "max_fiber_hits": max_hits,
                                    "verified": ok})
    return A, L, cert


def _trim(chords, M) -> float:
    """Shrink chord intervals until their L-images are disjoint; returns mass removed."""
    removed = 0.0
    changed = True
    while changed:
        changed = False
        live = [ch for ch in chords if ch["hi"] >= ch["lo"]]
        live.sort(key=lambda ch: float(M * ch["q"]) + ch["lo"])
        for a, b in zip(live, live[1:]):
            a_hi = float(M * a["q"]) + a["hi"]
            b_lo = float(M * b["q"]) + b["lo"]
            over = a_hi - b_lo
            if over < 0:
                continue
            cost_a = a["weight"] * over / (2 * a["half"])
            cost_b = b["weight"] * over / (2 * b["half"])
            eps = 1e-12
            if cost_a <= cost_b:
                new = a["hi"] - over - eps
                removed += a["weight"] * (a["hi"] - max(new, a["lo"])) / (2 * a["half"])
                a["hi"] = new
            else:
                new = b["lo"] + over + eps
                removed += b["weight"] * (min(new, b["hi"]) - b["lo"]) / (2 * b["half"])
                b["lo"] = new
            changed = True
            break
    return removed


def atoms_worst_radius(n_directions: int, y_grid, n_points: int = 2) -> float:
    """min over angles theta of sup_y chord radius of ``L_theta^-1(y)`` in the disk."""
    disk, E = unit_disk(), euclidean(2)
    best = math.inf
    for k in range(n_directions):
        th = math.pi * k / n_directions
        N = functional(math.cos(th), math.sin(th))
        best = min(best, worst_radius(N, disk, E, y_grid, n_points=n_points))
    return best


# --------------------------------------------------------------- thin slab


@dataclass
class SlabSpec:
    """Ball of a d-dimensional Hilbert space with a Gaussian that is tiny along ``z = e_d``."""

    dim: int = 6
    gamma: float = 0.01
    sigmas: list | None = None
    bulk_sigma: float = 0.3

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.sigmas is None:
            self.sigmas = [self.bulk_sigma] * (self.dim - 1) + [self.gamma / 3]
        if len(self.sigmas) != self.dim:
            raise ValueError("need one sigma per coordinate")
        if self.sigmas[-1] > self.gamma / 3 + 1e-15:
            raise ValueError("sigma_d must be <= gamma/3")

    @property
    def z(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[-1] = 1.0
        return e


def _max_slab_distance(spec: SlabSpec) -> float:
    """Numerical sup of ||a - z|| over the ball slice ``|<a, z>| <= gamma``."""
    z, g, d = spec.z, spec.gamma, spec.dim
    best = 0.0
    for k in range(4):
        a0 = np.full(d, 0.3 * (-1) ** k)
        res = minimize(lambda a: -np.sum((a - z) ** 2), a0, jac=lambda a: -2 * (a - z),
                       method="SLSQP",
                       constraints=[{"type": "ineq", "fun": lambda a: 1 - a @ a, "jac": lambda a: -2 * a},
                                    {"type": "ineq", "fun": lambda a: g - a @ z, "jac": lambda a: -z},
                                    {"type": "ineq", "fun": lambda a: g + a @ z, "jac": lambda a: z}],
                       options={"ftol": 1e-14, "maxiter": 500})
        best = max(best, math.sqrt(-res.fun))
    return best


def hilbert_slab_demo(spec: SlabSpec, n: int = 200_000, seed: int = 0, delta: float = 0.01) -> dict:
    """Worst error of the center z over the full ball versus over the slab.

    ``||a - z||^2 = ||a||^2 + 1 - 2<a, z>`` is maximised on the sphere at
    ``<a, z> = -1`` (ball) or ``-gamma`` (slab).
    """
    g = spec.gamma
    e_wor = 2.0
    e_delta = math.sqrt(2.0 + 2.0 * g)
    numeric = _max_slab_distance(spec)
    rng = generator(seed, "hilbert-slab")
    sig = np.asarray(spec.sigmas, dtype=float)
    kept, hit = 0, 0
    while kept < n:
        x = rng.standard_normal((n, spec.dim)) * sig
        x = x[np.einsum("ij,ij->i", x, x) <= 1.0][: n - kept]
        kept += len(x)
        hit += int(np.sum(np.abs(x @ spec.z) <= g))
    meas = proportion(hit, kept)
    return {
        "gamma": g,
        "e_wor": e_wor,
        "e_delta": e_delta,
        "e_delta_numeric": numeric,
        "ratio": e_wor / e_delta,
        "slab_measure": meas["estimate"],
        "slab_measure_ci": [meas["ci_lo"], meas["ci_hi"]],
        "certified": bool(meas["ci_lo"] >= 1 - delta),
    }


# -------------------------------------------------------------- cost model


@dataclass
class CostModel:
    """Cost ``c`` per information evaluation, ``m`` / ``M`` for cheap / expensive combinations."""

    c: float
    m: float
    M: float

    def __post_init__(self):
        if min(self.c, self.m, self.M) < 0:
            raise ValueError("costs must be nonnegative")

    @property
    def standard_regime(self) -> bool:
        return self.m < self.c < self.M


def cost_model_eval(model: CostModel, epsilon: float | None = None) -> dict:
    """Complexities of the two settings; constant in epsilon in this toy model."""
    comp_delta = min(model.c + model.m, 2 * model.c)
    comp_wor = min(model.c + model.M, 2 * model.c)
    return {"comp_delta": comp_delta, "comp_wor": comp_wor, "gap": comp_delta < comp_wor,
            "standard_regime": model.standard_regime, "epsilon": epsilon}


# -------------------------------------------------------------- convergence


@dataclass
class UCConfig:
    n_measure: int = 200_000
    n_points: int = 64
    n_y: int = 41
    seed: int = 0


def uc_delta_convergence(deltas, cfg: UCConfig = UCConfig()) -> list[dict]:
    """Slab-exclusion bound on the disk with ``N x = x_1`` for decreasing deltas."""
    deltas = [float(d) for d in deltas]
    if any(b > a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be decreasing")
    disk, E, N = unit_disk(), euclidean(2), functional(1.0, 0.0)
    ys = np.linspace(-1, 1, cfg.n_y)
    worst = worst_radius(N, disk, E, ys, cfg.n_points, cfg.seed)
    fam = SlabFamily(disk, np.array([1.0, 0.0]))
    rows = []
    for d in deltas:
        est = prob_radius_upper(N, fam, d, E, ys, cfg.n_measure, cfg.n_points, cfg.seed)
        rows.append({"delta": d, "prob_bound": est.bound, "theta": est.theta,
                     "closed_form": math.sqrt(1 - est.theta ** 2),
                     "measure": est.measure["estimate"], "measure_ci_lo": est.measure["ci_lo"],
                     "worst": worst})
    return rows


def disk_prob_bounds(deltas, space=None, n_measure: int = 200_000, n_points: int = 64,
                     n_y: int = 41, seed: int = 0) -> dict:
    """Best of the slab and band exclusion bounds for ``N x = x_1`` on the disk."""
    disk, E, N = unit_disk(), space or euclidean(2), functional(1.0, 0.0)
    ys = np.linspace(-1, 1, n_y)
    fams = {"slab": SlabFamily(disk, np.array([1.0, 0.0])),
            "band": BandFamily(disk, np.array([0.0, 1.0]))}
    out = {}
    for d in deltas:
        per = {k: prob_radius_upper(N, f, d, E, ys, n_measure, n_points, seed).bound
               for k, f in fams.items()}
        out[d] = {"bound": min(per.values()), "family": min(per, key=per.get), **per}
    return out


# ------------------------------------------------------------ null removal


@dataclass
class RemovalConfig:
    n_points: int = 64
    n_y: int = 41
    seed: int = 0
    slab_tau: float = 0.5


def measure_zero_removal_probe(cfg: RemovalConfig = RemovalConfig()) -> dict:
    """Worst radius of the disk before and after removing E.

    The observation is chosen so every fiber crosses E: horizontal chords
    (``N x = x_2``) for the vertical chord and the origin, vertical chords for
    the slab control, which empties the fibers near the center.
    """
    disk, E = unit_disk(), euclidean(2)
    ys = np.linspace(-1, 1, cfg.n_y)
    cases = {
        "chord": (functional(0.0, 1.0), Removed(disk, lambda x: x[:, 0] == 0.0, "x1 = 0")),
        "point": (functional(0.0, 1.0), Removed(disk, lambda x: np.all(x == 0.0, axis=1), "origin")),
        "slab": (functional(1.0, 0.0), SlabRemoved(disk, np.array([1.0, 0.0]), cfg.slab_tau)),
    }
    report = {}
    for name, (N, region) in cases.items():
        full = radius_profile(N, disk, E, ys, cfg.n_points, cfg.seed)
        cut = radius_profile(N, region, E, ys, cfg.n_points, cfg.seed)
        w_full = max(r for _, r in full if r is not None)
        vals = [r for _, r in cut if r is not None]
        w_cut = max(vals) if vals else 0.0
        diffs = [abs(a - b) for (_, a), (_, b) in zip(full, cut) if a is not None and b is not None]
        report[name] = {"null_set": name != "slab", "worst_full": w_full, "worst_removed": w_cut,
                        "max_local_change": max(diffs) if diffs else None,
                        "empty_fibers": sum(r is None for _, r in cut)}
    return report
