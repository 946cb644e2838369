"""Acceptance criteria at full scale, one PASS/FAIL line each.

Tolerances are pinned here and are not tuned to the observed values. The
F(m) trend (criterion 3) is expected to fail at 10^5 samples: the two
largest windows both give zero failures and their intervals overlap.
"""
import json
import math
import time

import pytest

from radinfo import wiener as W
from radinfo.cli import main
from radinfo.experiments import (AtomsConfig, ChebyshevConfig, CostConfig, HilbertConfig,
                                 PAverageConfig, UCConvergenceConfig, WienerGapConfig,
                                 run_atoms_demo, run_chebyshev, run_cost_model, run_hilbert_demo,
                                 run_p_average, run_uc_convergence, run_wiener_gap)

DELTAS = [0.5, 0.2, 0.1]
MS = [2, 4, 8, 16, 32, 64]


@pytest.fixture(scope="module")
def wiener_gap():
    cfg = WienerGapConfig(T=1024, samples=100_000, deltas=DELTAS, ms=MS, seed=7)
    t0 = time.perf_counter()
    results, flags, _ = run_wiener_gap(cfg)
    return results, flags, time.perf_counter() - t0


def test_criterion_1_wiener_gap(wiener_gap, criterion):
    results, _, elapsed = wiener_gap
    worst = results["worst_case_radius"]
    probs = results["prob_bounds"]
    ok = (abs(worst - 2) <= 1e-6
          and [r["delta"] for r in probs] == DELTAS
          and all(abs(r["bound"] - 1) <= 1e-6 for r in probs)
          and all(r["delta_hat"] + 2 * r["halfwidth"] <= r["delta"] for r in probs)
          and elapsed <= 300)
    detail = (f"worst={worst:.9f} prob=" + ",".join(f"{r['delta']}:{r['bound']:.9f}(m={r['m']})" for r in probs)
              + f" time={elapsed:.0f}s")
    criterion(1, ok, detail)


def test_criterion_2_fiber_radius_law(criterion):
    cfg = W.WienerConfig(T=1024)
    full = {y: W.optimize_center(W.FiberSpec(y), cfg).radius for y in (0.0, 0.5, -0.5, 1.0, -1.0)}
    tent = W.fiber_sup_error(W.tent_center(1.0, 8, cfg), W.FiberSpec(1.0, 8))
    ok = all(abs(r - (1 + abs(y))) <= 1e-6 for y, r in full.items()) and abs(tent - 1) <= 1e-9
    err = max(abs(r - (1 + abs(y))) for y, r in full.items())
    criterion(2, ok, f"max|R(y)-(1+|y|)|={err:.2e} tent_error={tent:.12f}")


def test_criterion_3_fm_measure_trend(wiener_gap, criterion):
    rows = wiener_gap[0]["delta_table"]
    assert [r["m"] for r in rows] == MS
    separated = [b["ci_hi"] < a["ci_lo"] for a, b in zip(rows, rows[1:])]
    detail = " ".join(f"m={r['m']}:{r['delta_hat']:.2e}[{r['ci_lo']:.1e},{r['ci_hi']:.1e}]" for r in rows)
    criterion(3, all(separated), detail)


def test_criterion_4_general_functionals(wiener_gap, criterion):
    adv = wiener_gap[0]["adversary"]
    ok = (len(adv) >= 3
          and all(r["value_spread"] <= 1e-9 for r in adv)
          and all(r["lower_bound"] >= 2 - 1e-3 for r in adv))
    detail = f"{len(adv)} functionals, max spread={max(r['value_spread'] for r in adv):.1e}, " \
             f"min forced error={min(r['lower_bound'] for r in adv):.6f}"
    criterion(4, ok, detail)


def test_criterion_5_chebyshev(criterion):
    results, flags, tables = run_chebyshev(ChebyshevConfig(instances=100, max_points=8))
    oracle = tables["oracle"]
    n_per_space = {s: sum(r["space"] == s for r in oracle) for s in ("euclidean", "l4")}
    ok = (n_per_space == {"euclidean": 100, "l4": 100}
          and results["max_oracle_diff"] <= 1e-3
          and all(abs(g["computed"] - g["expected"]) <= 1e-6 for g in results["golden"])
          and flags["euclidean_diameter_decreasing"] and flags["max_norm_diameter_nonvanishing_ge_0.9"])
    trend = results["epsilon_center"]
    detail = (f"max oracle diff={results['max_oracle_diff']:.2e} golden ok="
              f"{all(abs(g['computed'] - g['expected']) <= 1e-6 for g in results['golden'])} "
              + " ".join(f"{r['space']}@{r['epsilon']}:{r['diameter']:.3f}" for r in trend))
    criterion(5, ok, detail)


def test_criterion_6_uc_convergence(criterion):
    results, flags, _ = run_uc_convergence(UCConvergenceConfig(deltas=[0.1, 0.01, 0.0]))
    b = {r["delta"]: r["prob_bound"] for r in results["rows"]}
    worst = results["rows"][0]["worst"]
    removal = results["removal"]
    ok = (abs(b[0.1] - 0.99691) <= 2e-3 and b[0.01] >= 0.9999 and b[0.0] == 1.0
          and b[0.1] <= b[0.01] <= b[0.0] <= worst and abs(worst - 1) <= 1e-9
          and all(abs(v["worst_removed"] - v["worst_full"]) <= 1e-6 for v in removal.values() if v["null_set"]))
    detail = f"bounds 0.1:{b[0.1]:.5f} 0.01:{b[0.01]:.6f} 0:{b[0.0]} worst={worst:.9f} " \
             f"null removal: " + ",".join(f"{k}:{v['worst_removed']:.6f}" for k, v in removal.items())
    criterion(6, ok, detail)


def test_criterion_7_p_average(criterion):
    results, flags, _ = run_p_average(PAverageConfig(ps=[1, 2, 4, 8, 16, 32, 64], deltas=[0.2, 0.1, 0.05]))
    rows = results["rows"]
    est = {r["p"]: r["estimate"] for r in rows}
    mono = all(b["estimate"] >= a["estimate"] for a, b in zip(rows, rows[1:]))
    chain = all(c["pass"] for r in rows for c in r["lower_checks"].values())
    ok = abs(est[2.0] - 0.5) <= 0.02 and mono and est[64.0] >= 0.9 and chain
    bounds = ",".join(f"{d}:{v['bound']:.4f}" for d, v in results["prob_bounds"].items())
    criterion(7, ok, f"R2={est[2.0]:.4f} R64={est[64.0]:.4f} monotone={mono} chain={chain} prob bounds {bounds}")


def test_criterion_8_gallery(criterion):
    atoms, aflags, _ = run_atoms_demo(AtomsConfig(deltas=[0.05, 0.01], directions=360))
    hil, hflags, _ = run_hilbert_demo(HilbertConfig(gammas=[0.1, 0.01, 0.001]))
    cost, cflags, _ = run_cost_model(CostConfig(c=1, m=0.1, M=10))
    rows = hil["rows"]
    exact_delta = all(r["e_delta"] == math.sqrt(2 + 2 * r["gamma"]) for r in rows)
    last = rows[-1]
    ok = (all(c["verified"] and c["radius"] == 0.0 for c in atoms["constructions"])
          and abs(atoms["worst_radius"] - 1) <= 1e-9
          and all(r["e_wor"] == 2.0 for r in rows) and exact_delta
          and all(r["slab_measure"] >= 0.99 for r in rows)
          and last["gamma"] == 0.001 and abs(last["ratio"] / math.sqrt(2) - 1) <= 0.01
          and cost["comp_delta"] == min(1 + 0.1, 2) and cost["comp_wor"] == min(1 + 10, 2))
    detail = (f"atoms M={atoms['constructions'][0]['M']:.0f} radius 0 certified; worst={atoms['worst_radius']:.12f}; "
              f"ratio@1e-3={last['ratio']:.5f} slab measure min={min(r['slab_measure'] for r in rows):.4f}; "
              f"comp=({cost['comp_delta']},{cost['comp_wor']})")
    criterion(8, ok, detail)


def _strip(path):
    doc = json.loads((path / "result.json").read_text())
    doc.pop("wall_time")
    return json.dumps(doc, sort_keys=True)


def test_criterion_9_determinism(tmp_path, criterion):
    runs = {
        "wiener-gap": ["--T", "256", "--samples", "20000", "--deltas", "0.5,0.2", "--ms", "2,4,8",
                       "--adversary_T", "65536", "--adversary_etas", "2,4", "--seed", "7"],
        "p-average": ["--samples", "20000", "--n_measure", "20000", "--resamples", "50", "--seed", "3"],
        "chebyshev": ["--instances", "3", "--oracle_step", "0.01", "--eps_samples", "20000"],
    }
    same = {}
    for name, args in runs.items():
        outs = []
        for workers in (1, 4):
            out = tmp_path / f"{name}-{workers}"
            main(["run", name, *args, "--workers", str(workers), "--out", str(out)])
            outs.append(out)
        csv_same = all(f.read_bytes() == (outs[1] / f.name).read_bytes() for f in outs[0].glob("*.csv"))
        same[name] = _strip(outs[0]) == _strip(outs[1]) and csv_same
    criterion(9, all(same.values()), " ".join(f"{k}:{'identical' if v else 'DIFFERS'}" for k, v in same.items()))
