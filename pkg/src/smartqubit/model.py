"""Control envelopes and single-qubit Hamiltonians in the lab, rotating and
dressed frames.

In the dressed frame the global drive acts on ``sigma_z`` and the local
detuning on ``sigma_x``; the rotating frame swaps the two roles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .numerics import PAULI_X, PAULI_Z, HamiltonianSpec, Term

__all__ = [
    "Waveform",
    "QubitFrameSpec",
    "NoiseOffset",
    "smart_envelope",
    "constant_envelope",
    "local_control_term",
    "xy_control",
    "build_hamiltonian",
    "HADAMARD",
]

KINDS = ("constant", "sine", "cosine", "harmonic_sum", "piecewise_linear")

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class Waveform:
    """Real control envelope with closed-form value and antiderivative.

    ==================  =====================================================
    kind                value at ``t``
    ==================  =====================================================
    constant            ``a0``
    sine                ``a0 * sin(2 pi f t + phase)``
    cosine              ``a0 * cos(2 pi f t + phase)``
    harmonic_sum        ``sum_k a_k cos(2 pi k f t + phase) - sum(dc_offsets)``
    piecewise_linear    linear interpolation through ``knots``
    ==================  =====================================================

    Amplitudes and ``dc_offsets`` are in MHz, ``frequency`` in MHz and
    ``phase`` in radians.  ``knots`` is a tuple of ``(t, value)`` pairs with
    non-decreasing times; a repeated time encodes a jump.
    """

    kind: str
    amplitudes: tuple = (0.0,)
    frequency: float = 0.0
    phase: float = 0.0
    dc_offsets: tuple = ()
    knots: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown waveform kind {self.kind!r}")
        object.__setattr__(self, "amplitudes", tuple(float(a) for a in np.atleast_1d(self.amplitudes)))
        object.__setattr__(self, "dc_offsets", tuple(float(d) for d in self.dc_offsets))
        if self.kind == "piecewise_linear":
            knots = tuple((float(t), float(v)) for t, v in self.knots)
            if len(knots) < 2 or any(b[0] < a[0] for a, b in zip(knots, knots[1:])):
                raise DomainError("piecewise_linear needs >= 2 knots with non-decreasing times")
            object.__setattr__(self, "knots", knots)

    @property
    def amplitude(self):
        return self.amplitudes[0]

    @property
    def breakpoints(self):
        return tuple(sorted({t for t, _ in self.knots}))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        w = 2 * np.pi * self.frequency
        if self.kind == "constant":
            return np.full_like(t, self.amplitude)
        if self.kind == "sine":
            return self.amplitude * np.sin(w * t + self.phase)
        if self.kind == "cosine":
            return self.amplitude * np.cos(w * t + self.phase)
        if self.kind == "harmonic_sum":
            out = np.full_like(t, -sum(self.dc_offsets))
            for k, a in enumerate(self.amplitudes, start=1):
                out = out + a * np.cos(k * w * t + self.phase)
            return out
        return self._interp(t)

    def _interp(self, t):
        times = np.array([k[0] for k in self.knots])
        values = np.array([k[1] for k in self.knots])
        # right-continuous at jumps
        idx = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2)
        t0, t1 = times[idx], times[idx + 1]
        v0, v1 = values[idx], values[idx + 1]
        span = np.where(t1 > t0, t1 - t0, 1.0)
        frac = np.clip((t - t0) / span, 0.0, 1.0)
        out = v0 + frac * (v1 - v0)
        out = np.where(t <= times[0], values[0], out)
        return np.where(t >= times[-1], values[-1], out)

    def integral(self, t):
        """Antiderivative ``int_0^t value(s) ds``."""
        t = np.asarray(t, dtype=float)
        w = 2 * np.pi * self.frequency
        if self.kind == "constant":
            return self.amplitude * t
        if self.kind in ("sine", "cosine", "harmonic_sum") and w == 0:
            return self(np.zeros(1))[0] * t
        if self.kind == "sine":
            return self.amplitude / w * (np.cos(self.phase) - np.cos(w * t + self.phase))
        if self.kind == "cosine":
            return self.amplitude / w * (np.sin(w * t + self.phase) - np.sin(self.phase))
        if self.kind == "harmonic_sum":
            out = -sum(self.dc_offsets) * t
            for k, a in enumerate(self.amplitudes, start=1):
                out = out + a / (k * w) * (np.sin(k * w * t + self.phase) - np.sin(self.phase))
            return out
        return self._pwl_primitive(t) - self._pwl_primitive(np.zeros(1))[0]

    def _pwl_primitive(self, t):
        # integral from the first knot, with constant extrapolation outside
        times = np.array([k[0] for k in self.knots])
        values = np.array([k[1] for k in self.knots])
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (values[:-1] + values[1:]) * np.diff(times))])
        idx = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 1)
        start, v0 = times[idx], values[idx]
        inside = idx < len(times) - 1
        nxt = np.minimum(idx + 1, len(times) - 1)
        span = np.where(inside & (times[nxt] > start), times[nxt] - start, 1.0)
        slope = np.where(inside, (values[nxt] - v0) / span, 0.0)
        dt = t - start
        out = cum[idx] + dt * (v0 + 0.5 * slope * dt)
        return np.where(t < times[0], (t - times[0]) * values[0], out)

    def scaled(self, factor):
        """Copy with every amplitude, offset and knot value multiplied by ``factor``."""
        return Waveform(
            self.kind,
            tuple(a * factor for a in self.amplitudes),
            self.frequency,
            self.phase,
            tuple(d * factor for d in self.dc_offsets),
            tuple((t, v * factor) for t, v in self.knots),
        )

    @property
    def natural_period(self):
        if self.frequency > 0 and self.kind in ("sine", "cosine", "harmonic_sum"):
            return 1.0 / self.frequency
        if self.kind == "constant" and self.amplitude:
            return 1.0 / abs(self.amplitude)
        return 1.0


ZERO = Waveform("constant", (0.0,))


@dataclass(frozen=True)
class QubitFrameSpec:
    """Frame selection plus the lab-frame carrier and Larmor profile."""

    frame: str = "dressed"
    f_mw: float | None = None
    larmor: Waveform | None = None
    detuning: Waveform = ZERO

    def __post_init__(self):
        if self.frame not in ("lab", "rotating", "dressed"):
            raise DomainError(f"unknown frame {self.frame!r}")


@dataclass(frozen=True)
class NoiseOffset:
    """Quasi-static detuning (MHz) and fractional drive-amplitude offsets.

    Either field may be an array; the Hamiltonian then carries that batch
    shape and propagates every offset at once.
    """

    delta_nu: float | np.ndarray = 0.0
    delta_omega: float | np.ndarray = 0.0


def smart_envelope(omega_r: float, f_mod: float, variant: str = "sine") -> Waveform:
    """Sinusoidally modulated global drive with the RMS of a constant ``omega_r``."""
    if not omega_r > 0 or not f_mod > 0:
        raise DomainError("omega_r and f_mod must be positive")
    if variant not in ("sine", "cosine"):
        raise DomainError(f"unknown SMART variant {variant!r}")
    return Waveform(variant, (omega_r * math.sqrt(2),), f_mod)


def constant_envelope(omega_r: float) -> Waveform:
    """Unmodulated (dressed-qubit) global drive."""
    if not omega_r >= 0:
        raise DomainError("omega_r must be non-negative")
    return Waveform("constant", (omega_r,))


def local_control_term(harmonic: int, amplitude: float, phase: float, f_mod: float) -> Waveform:
    """``amplitude * sin(2 pi harmonic f_mod t + phase)`` on the detuning axis."""
    if harmonic not in (1, 2):
        raise DomainError(f"harmonic must be 1 or 2, got {harmonic!r}")
    return Waveform("sine", (amplitude,), harmonic * f_mod, phase)


def xy_control(nu_v: float, nu_w: float, f_mod: float) -> Waveform:
    """Two-harmonic detuning that starts and ends every period at zero."""
    return Waveform("harmonic_sum", (nu_v, nu_w), f_mod, 0.0, (nu_v, nu_w))


def build_hamiltonian(
    frame: QubitFrameSpec,
    global_: Waveform,
    local: Waveform | None = None,
    noise: NoiseOffset | None = None,
    period: float | None = None,
) -> HamiltonianSpec:
    """Assemble ``H/h`` for one qubit.

    ``local`` overrides ``frame.detuning`` when given.  The amplitude offset
    multiplies the drive as ``1 + delta_omega``; the detuning offset adds to
    the detuning term.
    """
    local = frame.detuning if local is None else local
    noise = noise or NoiseOffset()
    drive_scale = 1.0 + np.asarray(noise.delta_omega, dtype=float)
    dnu = np.asarray(noise.delta_nu, dtype=float)
    breaks = tuple(sorted(set(global_.breakpoints) | set(local.breakpoints)))
    if period is None:
        period = global_.natural_period
    if frame.frame == "dressed":
        terms = (
            Term(global_, PAULI_Z / 2, scale=drive_scale),
            Term(local, PAULI_X / 2, offset=dnu),
        )
    elif frame.frame == "rotating":
        terms = (
            Term(local, PAULI_Z / 2, offset=dnu),
            Term(global_, PAULI_X / 2, scale=drive_scale),
        )
    else:
        if frame.f_mw is None:
            raise ConfigurationError("lab frame requires f_mw")
        f_mw = float(frame.f_mw)
        if frame.larmor is not None:
            larmor, larmor_offset = frame.larmor, dnu
        else:
            larmor, larmor_offset = local, dnu + f_mw

        def carrier(t, g=global_, f=f_mw):
            return g(t) * 2 * np.cos(2 * np.pi * f * t)

        terms = (
            Term(larmor, PAULI_Z / 2, offset=larmor_offset),
            Term(carrier, PAULI_X / 2, scale=drive_scale),
        )
        period = 1.0 / f_mw
    return HamiltonianSpec(2, terms, period=period, breakpoints=breaks)
