"""Acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL criterion N: ...`` line and then
asserts, so ``pytest -v`` shows the measured values next to the verdict.  Run
this file directly for the same output without the rest of the suite.
"""
import math
import time
import warnings

import numpy as np
import pytest

from smartqubit.gates import REFERENCE_COEFFICIENTS, axis_maps, build_gate, grape_optimize
from smartqubit.geometry import (
    bessel_j0_zero,
    magnus_first_order,
    optimal_mod_frequency,
    peak_rotation_angle,
    projected_areas,
    space_curve,
)
from smartqubit.model import NoiseOffset, constant_envelope, smart_envelope
from smartqubit.noisemaps import (
    detuning_half_width,
    gaussian_average,
    monte_carlo_average,
    noise_level_map,
    offset_fidelity_map,
    offset_fidelity_tensor,
    two_qubit_noise_average,
)
from smartqubit.numerics import PropagationConfig, fidelity, propagate, unitarity_error
from smartqubit.twoqubit import (
    ExchangeSpec,
    RampSpec,
    Segment,
    STSystem,
    TwoQubitProgram,
    compose_cnot,
    compose_cnot_x,
    ramp_initialisation,
    sqrt_swap_program,
)

F_OPT = optimal_mod_frequency(1.0, 1)
T_MOD = 1.0 / F_OPT


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, elapsed, limit):
        ok = ok and elapsed < limit
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail} [{elapsed:.1f} s, limit {limit} s]")
        return ok

    return emit


def test_criterion_1_bessel_optimum(report):
    t0 = time.perf_counter()
    f = optimal_mod_frequency(1.0, 1)
    a1 = np.linalg.norm(magnus_first_order(smart_envelope(1.0, f), "x", 1 / f))
    elapsed = time.perf_counter() - t0
    ok = abs(f - 0.588074) < 1e-5 and a1 < 1e-6
    assert report(1, ok, f"f_opt = {f:.7f} MHz (0.588074 +- 1e-5), |a1| = {a1:.1e} (< 1e-6)", elapsed, 1)


def test_criterion_2_table_reproduction(report):
    t0 = time.perf_counter()
    fitted = {key: grape_optimize(*key) for key in REFERENCE_COEFFICIENTS}
    elapsed = time.perf_counter() - t0
    misses = []
    worst, within = 0.0, 0
    for key, ref in REFERENCE_COEFFICIENTS.items():
        devs = [abs(a - b) for a, b in zip(fitted[key], ref)]
        within += sum(d < 1e-3 for d in devs)
        dev = max(devs)
        worst = max(worst, dev)
        if dev >= 1e-3:
            misses.append(f"{key[0]} n={key[1]} got ({fitted[key][0]:.4f}, {fitted[key][1]:.4f}) vs {ref}")
    # nu * t must change less between n = 7 and 10 than between n = 1 and 2
    converging = []
    for gate in ("sqrt_x", "sqrt_y"):
        for col in (0, 1):
            late = abs(fitted[(gate, 10)][col] * 10 * T_MOD - fitted[(gate, 7)][col] * 7 * T_MOD)
            early = abs(fitted[(gate, 2)][col] * 2 * T_MOD - fitted[(gate, 1)][col] * T_MOD)
            converging.append(late < early)
    ok = within == 2 * len(REFERENCE_COEFFICIENTS) and all(converging)
    detail = f"{within}/{2 * len(REFERENCE_COEFFICIENTS)} coefficients within 1e-3 MHz (worst {worst:.4f})"
    detail += f"; convergence holds in {sum(converging)}/4 columns"
    if misses:
        detail += "; misses: " + "; ".join(misses)
    assert report(2, ok, detail, elapsed, 300)


def test_criterion_3_axis_map_extrema(report):
    t0 = time.perf_counter()
    nu = np.linspace(0.0125, 1.0, 81)
    phi = np.linspace(0.0, math.pi, 81)
    v = axis_maps(nu, phi, 1, workers=4)
    w = axis_maps(nu, phi, 2, workers=4)
    small_nu, half_pi = np.array([0.0125]), np.array([math.pi / 2])
    phi_v = axis_maps(small_nu, half_pi, 1).phi_r[0, 0]
    phi_w = axis_maps(small_nu, half_pi, 2).phi_r[0, 0]
    elapsed = time.perf_counter() - t0
    eta_v, eta_w = np.nanmax(v.eta), np.nanmax(w.eta)
    sep = abs(phi_w - phi_v)
    ok = abs(eta_v - 53.9) < 0.5 and abs(eta_w - 37.3) < 0.5 and abs(phi_v + 0.834) < 0.01
    ok = ok and abs(sep - math.pi / 2) < 0.02
    detail = (
        f"eta_max v = {eta_v:.2f} % (53.9 +- 0.5), w = {eta_w:.2f} % (37.3 +- 0.5); "
        f"phi_v = {phi_v:.4f} rad (-0.834 +- 0.01); |phi_w - phi_v| = {sep:.4f} (pi/2 +- 0.02)"
    )
    assert report(3, ok, detail, elapsed, 120)


def test_criterion_4_geometric_cancellation(report):
    t0 = time.perf_counter()
    smart = smart_envelope(1.0, F_OPT)
    curve = space_curve(smart, T_MOD)
    areas = projected_areas(curve)
    dressed = space_curve(constant_envelope(1.0), 1.0)
    d_areas = projected_areas(dressed)
    off = space_curve(smart.scaled(1.1), T_MOD)
    elapsed = time.perf_counter() - t0
    ok = curve.closure_defect < 1e-4 and max(map(abs, areas)) < 1e-4
    ok = ok and dressed.closure_defect < 1e-4 and max(map(abs, d_areas)) > 0.01
    ok = ok and off.closure_defect > 1e-3
    detail = (
        f"SMART defect {curve.closure_defect:.1e}, max area {max(map(abs, areas)):.1e} (< 1e-4); "
        f"dressed defect {dressed.closure_defect:.1e}, max area {max(map(abs, d_areas)):.4f} (> 0.01); "
        f"+10 % amplitude defect {off.closure_defect:.4f} (> 1e-3)"
    )
    assert report(4, ok, detail, elapsed, 10)


def test_criterion_5_peak_rotation_angle(report):
    t0 = time.perf_counter()
    angle = peak_rotation_angle(smart_envelope(1.0, F_OPT), T_MOD)
    elapsed = time.perf_counter() - t0
    target = 2 * bessel_j0_zero(1)
    ok = abs(angle - target) < 1e-3 and abs(angle - 1.531 * math.pi) < 1e-3
    detail = f"peak angle {angle:.6f} rad = {angle / math.pi:.4f} pi (2 j1 = {target:.6f} +- 1e-3)"
    assert report(5, ok, detail, elapsed, 1)


def test_criterion_6_robustness_ordering(report):
    t0 = time.perf_counter()
    grids = {}
    for variant in ("bare", "dressed", "sine"):
        prog = build_gate("identity", 7 if variant == "sine" else 10, variant)
        grids[variant] = offset_fidelity_map(prog, workers=4)
    widths = {v: detuning_half_width(g) for v, g in grids.items()}
    infid = {v: 1 - gaussian_average(g, 0.1, 0.05) for v, g in grids.items()}
    elapsed = time.perf_counter() - t0
    ok = widths["sine"] > widths["dressed"] and infid["bare"] > infid["dressed"] > infid["sine"]
    detail = (
        f"99 % half-width SMART {widths['sine']:.4f} MHz vs dressed {widths['dressed']:.4f} MHz; "
        f"averaged infidelity bare {infid['bare']:.2e} > dressed {infid['dressed']:.2e} > SMART {infid['sine']:.2e}"
    )
    assert report(6, ok, detail, elapsed, 300)


def test_criterion_7_zero_noise_calibration(report):
    t0 = time.perf_counter()
    cfg = PropagationConfig(1024)
    gates = {n: build_gate(n, 7) for n in ("sqrt_x", "sqrt_y", "sqrt_v", "sqrt_w", "sqrt_x_dag", "sqrt_y_dag")}
    single = {n: g.fidelity(cfg=cfg) for n, g in gates.items()}
    swap_prog = sqrt_swap_program()
    f_swap = swap_prog.fidelity(cfg=cfg)
    u = {n: g.propagator(cfg=cfg) for n, g in gates.items()}
    idle = build_gate("identity", 7).propagator(cfg=cfg)
    s = swap_prog.propagator(cfg=cfg)
    oracles = {
        "cnot": np.kron(u["sqrt_y_dag"], idle) @ s @ np.kron(u["sqrt_x_dag"], u["sqrt_x"]) @ s @ np.kron(u["sqrt_y"], idle),
        "cnot_x": s @ np.kron(u["sqrt_x_dag"], u["sqrt_x"]) @ s,
    }
    composite = {}
    for name, prog in (("cnot", compose_cnot(gates=gates)), ("cnot_x", compose_cnot_x(gates=gates))):
        composite[name] = (prog.fidelity(cfg=cfg), fidelity(oracles[name], prog.target))
    elapsed = time.perf_counter() - t0
    ok = min(single.values()) >= 1 - 1e-6 and f_swap >= 0.999
    ok = ok and all(abs(a - b) < 1e-3 for a, b in composite.values())
    detail = (
        f"worst single-qubit infidelity {1 - min(single.values()):.1e} (<= 1e-6); sqrt_swap F = {f_swap:.6f} (>= 0.999); "
        + "; ".join(f"{k} F = {a:.6f} vs product oracle {b:.6f}" for k, (a, b) in composite.items())
    )
    assert report(7, ok, detail, elapsed, 120)


def test_criterion_8_v_w_equivalence(report):
    t0 = time.perf_counter()
    maps = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in ("sqrt_x", "sqrt_y", "sqrt_v", "sqrt_w"):
            maps[name] = noise_level_map(offset_fidelity_map(build_gate(name, 7), workers=4)).values
    elapsed = time.perf_counter() - t0
    dev_vx = float(np.max(np.abs(maps["sqrt_v"] - maps["sqrt_x"])))
    dev_wy = float(np.max(np.abs(maps["sqrt_w"] - maps["sqrt_y"])))
    ok = dev_vx < 0.02 and dev_wy < 0.02
    detail = f"max |F_v - F_x| = {dev_vx:.4f}, max |F_w - F_y| = {dev_wy:.4f} over the default sigma grid (< 0.02)"
    assert report(8, ok, detail, elapsed, 300)


def _threshold(ramp_times, worst, level=0.99):
    """First ramp time from which the worst-case population stays above ``level``."""
    above = worst > level
    for k in range(ramp_times.size):
        if above[k:].all():
            return float(ramp_times[k])
    return math.inf


def test_criterion_9_initialisation_thresholds(report):
    t0 = time.perf_counter()
    ramp_times = np.array([0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0])
    worst = {}
    for label, sys, centering in (
        ("A", STSystem.smart(), "A"),
        ("B", STSystem.smart(), "B"),
        ("dressed", STSystem.dressed(), "center"),
    ):
        res = ramp_initialisation(sys, RampSpec(centering=centering), ramp_times)
        worst[label] = res.p_s11.min(axis=0)
    elapsed = time.perf_counter() - t0
    t_a, t_b = _threshold(ramp_times, worst["A"]), _threshold(ramp_times, worst["B"])
    dominant = bool(np.all(worst["A"] >= worst["dressed"]))
    ok = 0.05 <= t_a <= 0.3 and 0.5 <= t_b <= 2.0 and dominant
    lost = [f"{t:g}" for t, a, d in zip(ramp_times, worst["A"], worst["dressed"]) if a < d]
    detail = (
        f"99 % threshold case A {t_a:g} us (0.05-0.3), case B {t_b:g} us (0.5-2); "
        f"case A >= dressed at every ramp time: {dominant}"
        + (f" (dressed higher at {', '.join(lost)} us)" if lost else "")
    )
    assert report(9, ok, detail, elapsed, 180)


def test_criterion_10_property_suites(report):
    t0 = time.perf_counter()
    checks = {}
    rng = np.random.default_rng(0)
    cfg = PropagationConfig(256)

    prog = build_gate("sqrt_x", 3)
    offsets = NoiseOffset(rng.normal(0, 0.3, 50), rng.normal(0, 0.1, 50))
    checks["unitarity"] = float(np.max(unitarity_error(prog.propagator(offsets, cfg)))) < 1e-10

    h = prog.hamiltonian()
    whole = propagate(h, 0.0, prog.duration, cfg)
    split = propagate(h, 1.3, prog.duration, cfg) @ propagate(h, 0.0, 1.3, cfg)
    checks["composition"] = float(np.max(np.abs(whole - split))) < 1e-8

    ref = propagate(h, 0.0, prog.duration, PropagationConfig(4096))
    errs = [np.max(np.abs(propagate(h, 0.0, prog.duration, PropagationConfig(n)) - ref)) for n in (64, 128)]
    checks["quadrature convergence"] = math.log2(errs[0] / errs[1]) > 3.5

    ramp = ramp_initialisation(STSystem.smart(), RampSpec(), [0.05, 0.5])
    checks["norm conservation"] = ramp.norm_error < 1e-9

    idle = build_gate("identity", 1)
    weak = sqrt_swap_program(j0=20.0)
    ex = weak.segments[0].exchange
    pair = TwoQubitProgram(
        "weak", (Segment(1, exchange=ExchangeSpec.square(1e-7, ex.pulse_center, ex.pulse_duration)),),
        np.eye(4), weak.global_, weak.period, "sine",
    )
    n1, n2 = NoiseOffset(0.2, 0.05), NoiseOffset(-0.1, -0.03)
    product = np.kron(idle.propagator(n1, cfg), idle.propagator(n2, cfg))
    checks["J -> 0 factorisation"] = fidelity(pair.propagator(n1, cfg, noise2=n2), product) >= 1 - 1e-6

    mc_cfg = PropagationConfig(64)
    ident = build_gate("identity", 7)
    quad = gaussian_average(offset_fidelity_map(ident, cfg=mc_cfg, workers=4), 0.1, 0.05)
    mean, se = monte_carlo_average(ident, 0.1, 0.05, n_draws=100_000, seed=1, cfg=mc_cfg)
    mc1 = abs(mean - quad) / se
    checks["Monte Carlo vs quadrature (1 qubit)"] = mc1 < 3

    swap = sqrt_swap_program()
    tensor = offset_fidelity_tensor(swap, np.linspace(-0.4, 0.4, 17), np.linspace(-0.2, 0.2, 17), mc_cfg)
    quad2 = two_qubit_noise_average(tensor, 0.1, 0.05)
    mean2, se2 = monte_carlo_average(swap, 0.1, 0.05, n_draws=100_000, seed=2, cfg=mc_cfg)
    mc2 = abs(mean2 - quad2) / se2
    checks["Monte Carlo vs quadrature (2 qubits)"] = mc2 < 3
    elapsed = time.perf_counter() - t0

    failed = [k for k, v in checks.items() if not v]
    detail = f"{len(checks) - len(failed)}/{len(checks)} properties hold; MC offsets {mc1:.2f} and {mc2:.2f} standard errors"
    if failed:
        detail += "; failed: " + ", ".join(failed)
    assert report(10, not failed, detail, elapsed, 300)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
