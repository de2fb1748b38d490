import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smartqubit.errors import ConfigurationError, DomainError
from smartqubit.model import (
    HADAMARD,
    NoiseOffset,
    QubitFrameSpec,
    Waveform,
    build_hamiltonian,
    constant_envelope,
    local_control_term,
    smart_envelope,
    xy_control,
)
from smartqubit.numerics import PAULI_Z, PropagationConfig, fidelity, pauli_components, propagate

F = 0.5880732420891891


def test_smart_envelope_values():
    env = smart_envelope(1.0, F)
    assert env(np.array([0.0]))[0] == 0.0
    assert env(np.array([0.25 / F]))[0] == pytest.approx(math.sqrt(2), abs=1e-12)
    cos_env = smart_envelope(1.0, F, "cosine")
    assert cos_env(np.array([0.0]))[0] == pytest.approx(math.sqrt(2))


@pytest.mark.parametrize("variant", ["sine", "cosine"])
def test_rms_matches_constant_drive(variant):
    env = smart_envelope(1.3, F, variant)
    t = np.linspace(0, 3 / F, 30001)
    rms = math.sqrt(np.trapezoid(env(t) ** 2, t) / t[-1])
    assert rms == pytest.approx(1.3, rel=1e-6)


def test_envelope_domain_errors():
    with pytest.raises(DomainError):
        smart_envelope(0.0, F)
    with pytest.raises(DomainError):
        smart_envelope(1.0, -1.0)
    with pytest.raises(DomainError):
        smart_envelope(1.0, F, "square")
    with pytest.raises(DomainError):
        local_control_term(3, 0.1, 0.0, F)


def test_local_control_terms():
    t = np.linspace(0, 2 / F, 101)
    v = local_control_term(1, 0.2, math.pi / 2, F)
    np.testing.assert_allclose(v(t), 0.2 * np.cos(2 * np.pi * F * t), atol=1e-15)
    w = local_control_term(2, 0.2, 0.0, F)
    np.testing.assert_allclose(w(t), 0.2 * np.sin(4 * np.pi * F * t), atol=1e-15)
    np.testing.assert_array_equal(local_control_term(1, 0.0, 0.3, F)(t), 0.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.integers(0, 12))
def test_harmonic_sum_starts_and_ends_at_zero(nu_v, nu_w, n):
    wf = xy_control(nu_v, nu_w, F)
    t = np.array([0.0, n / F])
    np.testing.assert_allclose(wf(t), 0.0, atol=1e-12)
    s = np.array([0.3])
    expected = nu_v * (math.cos(2 * math.pi * F * 0.3) - 1) + nu_w * (math.cos(4 * math.pi * F * 0.3) - 1)
    assert wf(s)[0] == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize(
    "wf",
    [
        Waveform("constant", (0.7,)),
        Waveform("sine", (1.2,), 0.8, 0.3),
        Waveform("cosine", (0.5,), 1.7, -0.4),
        Waveform("harmonic_sum", (0.2, -0.4), 0.6, 0.0, (0.2, -0.4)),
    ],
)
def test_integral_matches_quadrature(wf):
    t = np.linspace(0, 1.9, 190001)
    numeric = np.concatenate([[0.0], np.cumsum(0.5 * (wf(t)[1:] + wf(t)[:-1]) * np.diff(t))])
    idx = [37000, 120001, 190000]
    np.testing.assert_allclose(wf.integral(t[idx]), numeric[idx], atol=1e-8)


def test_piecewise_linear_integral_by_hand():
    wf = Waveform("piecewise_linear", knots=((0.0, 1.0), (0.4, 1.0), (0.4, 0.2), (1.0, -0.5), (2.0, -0.5)))
    # 0.4 from the plateau, 0.6 * (0.2 - 0.5) / 2 from the ramp, then -0.5 per us
    np.testing.assert_allclose(wf.integral(np.array([0.37, 1.0, 1.2, 3.0])), [0.37, 0.31, 0.21, -0.69], atol=1e-14)
    np.testing.assert_allclose(wf(np.array([0.2, 0.7, 5.0])), [1.0, -0.15, -0.5], atol=1e-14)
    assert wf.breakpoints == (0.0, 0.4, 1.0, 2.0)


def test_scaled_multiplies_values():
    wf = Waveform("harmonic_sum", (0.2, 0.1), 0.5, 0.0, (0.2, 0.1))
    t = np.linspace(0, 3, 11)
    np.testing.assert_allclose(wf.scaled(1.1)(t), 1.1 * wf(t), atol=1e-15)


def test_dressed_hamiltonian_coefficients():
    env = smart_envelope(1.0, F)
    local = Waveform("constant", (0.3,))
    t = np.array([0.4])
    h = build_hamiltonian(QubitFrameSpec("dressed"), env, local, NoiseOffset(0.05, 0.1))
    _, hx, _, hz = pauli_components(h(t)[0])
    assert hz.real == pytest.approx(0.5 * 1.1 * env(t)[0])
    assert hx.real == pytest.approx(0.5 * 0.35)
    clean = build_hamiltonian(QubitFrameSpec("dressed"), env, local, NoiseOffset(0.05, 0.0))
    assert pauli_components(h(t)[0])[3] / pauli_components(clean(t)[0])[3] == pytest.approx(1.1)
    assert pauli_components(h(t)[0])[1] == pytest.approx(pauli_components(clean(t)[0])[1])


def test_dressed_frame_is_hadamard_conjugate_of_rotating_frame():
    env = smart_envelope(1.0, F)
    local = xy_control(0.1, -0.2, F)
    noise = NoiseOffset(0.07, -0.04)
    cfg = PropagationConfig(512)
    ud = propagate(build_hamiltonian(QubitFrameSpec("dressed"), env, local, noise), 0, 2 / F, cfg)
    ur = propagate(build_hamiltonian(QubitFrameSpec("rotating"), env, local, noise), 0, 2 / F, cfg)
    np.testing.assert_allclose(ud, HADAMARD @ ur @ HADAMARD, atol=1e-12)


def test_lab_frame_agrees_with_rotating_frame_in_rwa_regime():
    f_mw = 100.0
    env = constant_envelope(1.0)
    frame = QubitFrameSpec("lab", f_mw=f_mw)
    h_lab = build_hamiltonian(frame, env, period=1 / f_mw)
    h_rot = build_hamiltonian(QubitFrameSpec("rotating"), env)
    t = 10 / f_mw
    u_lab = propagate(h_lab, 0, t, PropagationConfig(256))
    u_rot = propagate(h_rot, 0, t, PropagationConfig(256))
    # after an integer number of carrier periods the frames coincide
    assert fidelity(u_lab, u_rot) > 0.999


def test_lab_frame_requires_carrier():
    with pytest.raises(ConfigurationError):
        build_hamiltonian(QubitFrameSpec("lab"), constant_envelope(1.0))


def test_unknown_frame_rejected():
    with pytest.raises(DomainError):
        QubitFrameSpec("toggling")


def test_batched_noise_shape():
    h = build_hamiltonian(
        QubitFrameSpec(), smart_envelope(1.0, F), None, NoiseOffset(np.zeros((3, 1)), np.zeros((1, 4)))
    )
    assert h.batch_shape == (3, 4)
    assert np.allclose(h(np.array([0.1]))[0, 0, 0], 0.5 * math.sqrt(2) * math.sin(2 * math.pi * F * 0.1) * PAULI_Z)
    assert not np.any(h(np.array([0.1]))[..., 0, 1])
