import math

import numpy as np
import pytest

from smartqubit.errors import ConfigurationError, DomainError
from smartqubit.gates import build_gate
from smartqubit.model import ZERO, NoiseOffset
from smartqubit.numerics import IDENTITY, PAULI_X, PropagationConfig, fidelity, unitarity_error
from smartqubit.twoqubit import (
    SQRT_SWAP,
    SWAP,
    ExchangeSpec,
    RampSpec,
    Segment,
    STSystem,
    TwoQubitProgram,
    compose_cnot,
    compose_cnot_x,
    ramp_initialisation,
    ramp_profile,
    ramp_readout,
    sqrt_swap_program,
    st_energy_diagram,
    st_min_gap,
)

CFG = PropagationConfig(256)
P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])
HADAMARD = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def test_sqrt_swap_squares_to_swap():
    np.testing.assert_allclose(SQRT_SWAP @ SQRT_SWAP, SWAP, atol=1e-15)


def test_sqrt_swap_program_fidelity():
    prog = sqrt_swap_program()
    assert prog.fidelity(cfg=CFG) >= 0.999
    assert prog.n_periods == 1 and not prog.meta["slow_pulse"]


def test_cosine_drive_sqrt_swap():
    assert sqrt_swap_program(variant="cosine").fidelity(cfg=CFG) >= 0.999


def test_slow_pulse_warns():
    with pytest.warns(RuntimeWarning, match="not fast"):
        prog = sqrt_swap_program(j0=3.0)
    assert prog.meta["slow_pulse"]
    with pytest.raises(DomainError):
        sqrt_swap_program(j0=0.0)
    with pytest.raises(DomainError):
        sqrt_swap_program(variant="bare")


def test_cnot_target_is_controlled_not():
    expected = np.kron(P0, PAULI_X) + np.kron(P1, IDENTITY)
    assert fidelity(compose_cnot().target, expected) == pytest.approx(1.0, abs=1e-14)


def test_cnot_x_target_is_controlled_phase_in_x_basis():
    hh = np.kron(HADAMARD, HADAMARD)
    z_basis = hh @ compose_cnot_x().target @ hh
    # sign flip on a single x-basis product state, i.e. a controlled phase up to local Z
    assert fidelity(z_basis, np.diag([1.0, -1.0, 1.0, 1.0])) == pytest.approx(1.0, abs=1e-12)


def test_cnot_matches_product_of_parts():
    gates = {n: build_gate(n, 7) for n in ("sqrt_y", "sqrt_y_dag", "sqrt_x", "sqrt_x_dag")}
    u = {n: g.propagator(cfg=CFG) for n, g in gates.items()}
    idle = build_gate("identity", 7).propagator(cfg=CFG)
    swap = sqrt_swap_program().propagator(cfg=CFG)
    product = np.kron(u["sqrt_y_dag"], idle) @ swap @ np.kron(u["sqrt_x_dag"], u["sqrt_x"]) @ swap @ np.kron(u["sqrt_y"], idle)
    prog = compose_cnot(gates=gates)
    np.testing.assert_allclose(prog.propagator(cfg=CFG), product, atol=1e-10)
    assert abs(prog.fidelity(cfg=CFG) - fidelity(product, prog.target)) < 1e-3
    assert prog.fidelity(cfg=CFG) >= 0.999


def test_cnot_x_is_an_involution():
    u = compose_cnot_x().propagator(cfg=CFG)
    assert fidelity(u @ u, np.eye(4)) >= 0.998
    assert unitarity_error(u) < 1e-12


def test_dense_and_factorised_paths_agree():
    prog = compose_cnot_x(n_periods=2)
    noise = NoiseOffset(0.07, -0.03)
    a = prog.propagator(noise, CFG)
    b = prog.propagator(noise, CFG, dense=True)
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_uncoupled_pair_factorises():
    single = build_gate("identity", 3)
    prog = TwoQubitProgram("idle", (Segment(3),), np.eye(4, dtype=complex), single.global_, single.period, "sine")
    n1, n2 = NoiseOffset(0.1, 0.02), NoiseOffset(-0.2, 0.05)
    u = prog.propagator(n1, CFG, noise2=n2, dense=True)
    expected = np.kron(single.propagator(n1, CFG), single.propagator(n2, CFG))
    np.testing.assert_allclose(u, expected, atol=1e-6)


def test_weak_exchange_approaches_product():
    # a sqrt(SWAP) pulse scaled down to a tiny area leaves the two qubits uncoupled
    prog = sqrt_swap_program()
    seg = prog.segments[0]
    weak = Segment(1, ZERO, ZERO, ExchangeSpec.square(1e-7, seg.exchange.pulse_center, seg.exchange.pulse_duration))
    u = TwoQubitProgram("weak", (weak,), np.eye(4), prog.global_, prog.period, "sine").propagator(cfg=CFG)
    single = build_gate("identity", 1).propagator(cfg=CFG)
    assert fidelity(u, np.kron(single, single)) >= 1 - 1e-6


def test_precalibrated_gates_must_match_variant():
    with pytest.raises(ConfigurationError):
        compose_cnot(gates={"sqrt_x": build_gate("sqrt_x", 7, "cosine")})


def test_min_gap_location():
    gap, eps = st_min_gap(STSystem.smart(delta_nu=(0.2, -0.2)))
    assert gap == pytest.approx(0.2825, abs=5e-4)
    assert eps == pytest.approx(-177.7, abs=0.5)


def test_no_anticrossing_without_detuning_difference():
    gap, _ = st_min_gap(STSystem.smart())
    # 1e-9 GHz expressed in MHz
    assert gap < 1e-6


def test_energy_diagram_shape_and_order():
    d = st_energy_diagram(STSystem.smart(), np.linspace(-100, 100, 11))
    assert d.energies.shape == (11, 5)
    assert np.all(np.diff(d.energies, axis=1) >= 0)


def test_ramp_profile_knots():
    ramp = RampSpec(0.2, 50.0, -50.0, "center", 0.4, 0.4)
    wf = ramp_profile(ramp, 2.0)
    np.testing.assert_allclose(wf(np.array([0.5, 0.899, 1.0, 1.101, 1.9])), [50, 50, 0, -50, -50], atol=1e-9)
    assert ramp.reversed().eps_start == -50.0
    with pytest.raises(DomainError):
        ramp_profile(RampSpec(5.0, centering="center"), 2.0)


@pytest.mark.parametrize(
    "kw", [dict(centering="C"), dict(ramp_time=-1.0), dict(pre_fraction=0.7, post_fraction=0.4), dict(pre_fraction=-0.1)]
)
def test_ramp_spec_validation(kw):
    with pytest.raises(DomainError):
        RampSpec(**kw)


def test_ramp_conserves_norm_and_adiabatic_limit():
    sys = STSystem.smart()
    res = ramp_initialisation(sys, RampSpec(), [0.005, 0.5], offsets=[(0.0, 0.0), (0.1, -0.05)])
    assert res.norm_error < 1e-9
    assert res.p_s02.shape == (2, 2)
    # a slow sweep leaves the charge state
    assert np.all(res.p_s02[:, 1] < 0.01)
    assert np.all(res.p_s11[:, 1] > 0.9)


def test_readout_returns_singlet():
    sys = STSystem.smart()
    res = ramp_readout(sys, RampSpec(), [0.5], offsets=[(0.0, 0.0)])
    assert res.p_s02[0, 0] > 0.9
    trip = ramp_readout(sys, RampSpec(), [0.5], offsets=[(0.0, 0.0)], initial="T+")
    assert trip.p_s02[0, 0] < 0.01
    with pytest.raises(DomainError):
        ramp_readout(sys, RampSpec(), [0.5], initial="S20")
