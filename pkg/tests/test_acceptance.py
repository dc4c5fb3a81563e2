"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (the lines are printed in the
terminal summary) or ``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from robocrane.admittance import AdmittanceParams
from robocrane.config import load_preset
from robocrane.lti import Polynomial, poly_roots
from robocrane.netloop import ControlDatagram, Kind, decode, encode, loopback
from robocrane.plant import PendulumEnv, estimate_ke
from robocrane.sim import compare, simulate, two_mass_grows
from robocrane.stability import (
    CoupledCoeffs,
    Verdict,
    coupled_coeffs,
    root_locus_robot,
    root_verdict,
    routh_hurwitz_quartic,
)

RESULTS: list[str] = []


def record(label: str, ok: bool, detail: str) -> bool:
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
    return ok


def rel_err(x: float, ref: float) -> float:
    return abs(x - ref) / abs(ref)


def cruise_mean(tr, profile, signal):
    # second half of the cruise window, after the start-up transient
    a, b = profile.cruise_window()
    return float(getattr(tr, signal)[tr.window(0.5 * (a + b), b)].mean())


def test_criterion_1_coupled_coefficients():
    c = coupled_coeffs(AdmittanceParams(10, 283, 2000), AdmittanceParams(1, 64, 1000), 500)
    worst = max(rel_err(x, r) for x, r in zip(c.as_tuple(), (92.3, 3461.2, 52050, 250000)))
    rep = routh_hurwitz_quartic(c)
    prod = rep.conditions[-1]
    ok = (
        worst <= 1e-3
        and rel_err(prod.lhs, 1.66e10) <= 0.01
        and rel_err(prod.rhs, 4.84e9) <= 0.01
        and rep.verdict is Verdict.STABLE
    )
    assert record(
        "1 coupled coefficients",
        ok,
        f"a={tuple(round(x, 4) for x in c.as_tuple())} worst rel err {worst:.1e}; "
        f"{prod.lhs:.4g} > {prod.rhs:.4g}; {rep.verdict}",
    )


def test_criterion_2_root_locus_criticals():
    t0 = time.perf_counter()
    res = root_locus_robot(10, 0.02, 500, np.arange(1, 100001, dtype=float))
    elapsed = time.perf_counter() - t0
    ks, ko = res.critical_stability_gain, res.critical_oscillation_gain
    ok = (
        ks is not None
        and ko is not None
        and rel_err(ks, 85.49) <= 0.01
        and rel_err(ko, 487.178) <= 0.01
        and elapsed < 10
    )
    assert record(
        "2 root-locus criticals",
        ok,
        f"stability {ks:.6g} ({100 * (ks / 85.49 - 1):+.3f}%), oscillation {ko:.6g} "
        f"({100 * (ko / 487.178 - 1):+.3f}%), 1e5 points in {elapsed:.2f} s",
    )


def test_criterion_3_environment_stiffness():
    details, ok = [], True
    for m, R, published in ((100, 2, 500), (10, 0.5, 200)):
        env = PendulumEnv(m, R, 9.81)
        ke = estimate_ke(env, (0.0, R / 2), tension_model="small-angle").K_e
        exact = m * 9.81 / R
        ok &= abs(ke - exact) <= 1e-9 and rel_err(ke, published) <= 0.02
        details.append(f"{ke:.6g} N/m (m g/R {exact:.6g}, vs {published}: {100 * rel_err(ke, published):.2f}%)")
    assert record("3 environment stiffness", ok, "; ".join(details))


def test_criterion_4_fig7_properties():
    cfg = load_preset("fig7")
    t0 = time.perf_counter()
    tr = simulate(cfg)
    elapsed = time.perf_counter() - t0
    v = cfg.profile.v_max
    robot = cruise_mean(tr, cfg.profile, "v_xr")
    crane = cruise_mean(tr, cfg.profile, "v_c")
    peak = float(np.abs(tr.F).max())
    end = cfg.profile.end_time
    tail = float(np.abs(tr.F[tr.t >= end + 5.0]).max())
    checks = {
        "a": rel_err(robot, v) <= 0.02,
        "b": 95 <= peak <= 105,
        "c": rel_err(crane, v) <= 0.05,
        "d": tail < 1.0,
        "runtime": elapsed < 1.0,
    }
    assert record(
        "4 fig7 reproduction",
        all(checks.values()),
        f"(a) robot cruise {robot:.5f} m/s [{100 * rel_err(robot, v):.2f}%] (b) peak F {peak:.2f} N "
        f"(c) crane cruise {crane:.5f} m/s [{100 * rel_err(crane, v):.2f}%] (d) max |F| after {end + 5:g} s {tail:.3f} N; "
        f"{cfg.n_steps} steps in {elapsed:.3f} s; failed: {[k for k, ok in checks.items() if not ok] or 'none'}",
    )


def test_criterion_5_comparison():
    collab, vel = compare(load_preset("fig8-compare"))
    f_c, f_v = float(np.abs(collab.F).max()), float(np.abs(vel.F).max())
    vc_c, vc_v = float(collab.v_c.max()), float(vel.v_c.max())
    force_ok = f_v > f_c and f_v >= 1.5 * f_c
    speed_ok = vc_c > vc_v
    assert record(
        "5 fig8 comparison",
        force_ok and speed_ok,
        f"peak |F| velocity-only {f_v:.2f} N vs collaborative {f_c:.2f} N (ratio {f_v / f_c:.3f}, need >= 1.5); "
        f"peak v_c collaborative {vc_c:.4f} vs velocity-only {vc_v:.4f} m/s",
    )


def _random_sets(rng, n_each: int):
    """Random admittance pairs split into clear passes and clear violations."""
    passing, violating = [], []
    while len(passing) < n_each or len(violating) < n_each:
        Mr, Mc = rng.uniform(0.5, 20, 2)
        Kr, Kc, Ke = 10 ** rng.uniform(1, 4, 3)
        Br = rng.uniform(0, 2) * 2 * math.sqrt(Mr * Kr)
        Bc = rng.uniform(0, 2) * 2 * math.sqrt(Mc * Kc)
        robot, crane = AdmittanceParams(Mr, Br, Kr), AdmittanceParams(Mc, Bc, Kc)
        c = coupled_coeffs(robot, crane, Ke)
        lhs, rhs = c.a1 * c.a2 * c.a3, c.a3**2 + c.a1**2 * c.a4
        a4_pos, a4_neg = Kr * Kc + Kr * Ke, Ke * Kc
        if c.a1 > 0 and c.a3 > 0 and a4_pos >= 1.1 * a4_neg and lhs >= 1.1 * rhs:
            if len(passing) < n_each:
                passing.append((robot, crane, Ke))
        elif a4_neg >= 1.1 * a4_pos or lhs <= rhs / 1.1:
            if len(violating) < n_each:
                violating.append((robot, crane, Ke))
    return passing, violating


@pytest.mark.slow
def test_criterion_6_stability_consistency():
    rng = np.random.default_rng(2024)
    passing, violating = _random_sets(rng, 200)
    grew = sum(two_mass_grows(*s) for s in passing)
    flat = sum(not two_mass_grows(*s) for s in violating)

    mismatches = 0
    for _ in range(1000):
        mags = 10 ** rng.uniform(-1, 2, 4)
        signs = np.where(rng.random(4) < 0.15, -1.0, 1.0)
        a = tuple(mags * signs)
        q = routh_hurwitz_quartic(CoupledCoeffs(*a)).verdict
        r = root_verdict(poly_roots(Polynomial([1.0, *a])))
        mismatches += q is not r
    assert record(
        "6 stability/simulation consistency",
        grew == 0 and flat == 0 and mismatches == 0,
        f"{len(passing)} passing sets, {grew} grew; {len(violating)} violating sets, {flat} did not grow; "
        f"Routh vs roots on 1000 quartics: {mismatches} mismatches",
    )


def test_criterion_7_euler_convergence():
    cfg = load_preset("fig7")
    coarse, fine = simulate(cfg), simulate(cfg.with_(dt=0.002))
    dF = rel_err(float(np.abs(fine.F).max()), float(np.abs(coarse.F).max()))
    dx = rel_err(float(fine.x_c[-1]), float(coarse.x_c[-1]))
    assert record(
        "7 Euler convergence",
        dF < 0.01 and dx < 0.01,
        f"peak F changes {100 * dF:.3f}%, final x_c changes {100 * dx:.3f}% (4 ms -> 2 ms)",
    )


@pytest.mark.slow
def test_criterion_8_netloop_fidelity():
    cfg = load_preset("fig7")
    plant_tr, _ = loopback(cfg, lockstep=True)
    dev = plant_tr.max_abs_deviation(simulate(cfg))
    worst = max(dev.values())

    rng = np.random.default_rng(8)
    n = 1_000_000
    seqs = rng.integers(0, 2**32, n, dtype=np.uint64)
    kinds = rng.integers(1, 4, n)
    # random bit patterns cover subnormals and huge exponents; drop non-finite ones
    bits = np.frombuffer(rng.bytes(16 * n), dtype=np.float64).reshape(n, 2)
    bits = np.where(np.isfinite(bits), bits, 0.0)
    bad = 0
    for s, k, (t, v) in zip(seqs.tolist(), kinds.tolist(), bits.tolist()):
        d = ControlDatagram(s, t, Kind(k), v)
        raw = encode(d)
        back = decode(raw)
        if back != d or encode(back) != raw:
            bad += 1
    assert record(
        "8 netloop fidelity",
        worst < 1e-9 and bad == 0,
        f"lock-step max deviation {worst:.2e} over {len(plant_tr)} ticks; {n} random datagrams, {bad} round-trip failures",
    )


@pytest.mark.parametrize("name", ["exp-0.15", "exp-0.09", "exp-0.045"])
def test_experiment_presets_cruise_and_force(name):
    cfg = load_preset(name)
    tr = simulate(cfg)
    v = cfg.profile.v_max
    robot = cruise_mean(tr, cfg.profile, "v_xr")
    force = cruise_mean(tr, cfg.profile, "F")
    target = cfg.crane_adm.K * v
    ok = rel_err(robot, v) <= 0.02 and rel_err(force, target) <= 0.05
    assert record(
        f"experiment preset {name}",
        ok,
        f"robot cruise {robot:.4f} vs {v} m/s [{100 * rel_err(robot, v):.1f}%], "
        f"steady F {force:.2f} vs K_c v_max {target:.1f} N [{100 * rel_err(force, target):.1f}%]",
    )


@pytest.mark.parametrize("name", ["exp-0.15", "exp-0.09", "exp-0.045"])
def test_experiment_presets_series_prediction(name):
    # robot and crane admittances in series: v = v_xd - F/K_r = F/K_c in steady cruise
    cfg = load_preset(name)
    tr = simulate(cfg)
    v = cfg.profile.v_max
    Kr, Kc = cfg.robot_adm.K, cfg.crane_adm.K
    F_pred = v * Kr * Kc / (Kr + Kc)
    force = cruise_mean(tr, cfg.profile, "F")
    robot = cruise_mean(tr, cfg.profile, "v_xr")
    crane = cruise_mean(tr, cfg.profile, "v_c")
    ok = rel_err(force, F_pred) <= 0.01 and rel_err(robot, F_pred / Kc) <= 0.01 and rel_err(crane, F_pred / Kc) <= 0.01
    assert record(
        f"experiment preset {name} series model",
        ok,
        f"steady F {force:.2f} vs {F_pred:.2f} N; robot {robot:.4f}, crane {crane:.4f} vs {F_pred / Kc:.4f} m/s",
    )


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
