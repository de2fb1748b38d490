"""Magnus-expansion diagnostics for a drive on ``sigma_z``.

With the global drive on ``sigma_z`` the zero-noise evolution is
``U(t) = exp(-i pi Phi(t) sigma_z)`` with ``Phi = int Omega dt``.  A
quasi-static error ``delta_beta * sigma_i / 2`` then enters the first Magnus
term through ``U^dag sigma_i U``, and the running integral of that Pauli
vector is the space curve whose closure and enclosed areas describe first-
and second-order noise cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import DomainError
from .model import Waveform

__all__ = [
    "bessel_j0",
    "bessel_j0_zero",
    "optimal_mod_frequency",
    "toggling_frame_vector",
    "magnus_first_order",
    "magnus_second_order",
    "SpaceCurve",
    "MagnusReport",
    "space_curve",
    "projected_areas",
    "magnus_report",
    "peak_rotation_angle",
    "filter_function",
]

_AXES = {"x": 0, "y": 1, "z": 2}

# 8-point Gauss-Legendre rule on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def bessel_j0(x):
    """Bessel function of the first kind, order zero (``scipy.special.j0``)."""
    out = special.j0(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


@lru_cache(maxsize=None)
def bessel_j0_zero(i: int) -> float:
    """``i``-th positive zero of ``J0``."""
    if int(i) != i or i < 1:
        raise DomainError(f"root index must be an integer >= 1, got {i!r}")
    return float(special.jn_zeros(0, int(i))[-1])


def optimal_mod_frequency(omega_r: float, root_index: int = 1) -> float:
    """Modulation frequency ``omega_r * sqrt(2) / j_i`` that closes the space curve."""
    if not omega_r > 0:
        raise DomainError("omega_r must be positive")
    return omega_r * math.sqrt(2.0) / bessel_j0_zero(root_index)


def toggling_frame_vector(envelope: Waveform, noise_axis: str, t):
    """Pauli coefficients of ``U^dag sigma_axis U`` at times ``t``.

    Returns an array of shape ``t.shape + (3,)``.
    """
    if noise_axis not in _AXES:
        raise DomainError(f"noise_axis must be one of x, y, z, got {noise_axis!r}")
    t = np.asarray(t, dtype=float)
    angle = 2 * np.pi * envelope.integral(t)
    c, s = np.cos(angle), np.sin(angle)
    zero, one = np.zeros_like(t), np.ones_like(t)
    if noise_axis == "x":
        vec = (c, -s, zero)
    elif noise_axis == "y":
        vec = (s, c, zero)
    else:
        vec = (zero, zero, one)
    return np.stack(vec, axis=-1)


def _panel_nodes(edges):
    edges = np.asarray(edges, dtype=float)
    width = np.diff(edges)
    nodes = edges[:-1, None] + width[:, None] * _GL_X[None, :]
    weights = width[:, None] * _GL_W[None, :]
    return nodes, weights


def _n_panels(envelope, T, per_period=64):
    phase_span = np.abs(2 * np.pi * envelope.integral(np.linspace(0.0, T, 257)))
    turns = float(np.max(np.abs(np.diff(phase_span)))) * 256 / (2 * np.pi) + T / envelope.natural_period
    return int(max(32, math.ceil(per_period * max(turns, 1.0))))


def magnus_first_order(envelope: Waveform, noise_axis: str = "x", T: float = 1.0, n_panels: int | None = None):
    """First Magnus term ``int_0^T U^dag sigma U dt`` as a Pauli 3-vector.

    The overall factor ``-i pi delta_beta`` is left out, so a zero envelope
    returns ``(T, 0, 0)`` for ``noise_axis='x'``.
    """
    if not T > 0:
        raise DomainError("T must be positive")
    n = n_panels or _n_panels(envelope, T)
    nodes, weights = _panel_nodes(np.linspace(0.0, T, n + 1))
    vec = toggling_frame_vector(envelope, noise_axis, nodes)
    return np.einsum("pk,pki->i", weights, vec)


def magnus_second_order(envelope: Waveform, noise_axis: str = "x", T: float = 1.0, n_samples: int = 2000):
    """Second-order term by direct double quadrature.

    Returns the Pauli 3-vector ``a`` of
    ``int_0^T dt1 int_0^t1 dt2 (c(t1) x c(t2))`` with ``c`` the toggling-frame
    vector; the commutator ``[A(t1), A(t2)]`` is ``2i (c1 x c2) . sigma``.
    This is O(n^2) and meant as a cross-check of the projected areas.
    """
    t = np.linspace(0.0, T, n_samples)
    c = toggling_frame_vector(envelope, noise_axis, t)
    dt = t[1] - t[0]
    w = np.full(n_samples, dt)
    w[[0, -1]] = dt / 2
    # inner integral with trapezoid weights up to each t1
    inner = np.concatenate([np.zeros((1, 3)), np.cumsum(0.5 * (c[1:] + c[:-1]) * dt, axis=0)])
    return np.einsum("k,ki->i", w, np.cross(c, inner))


@dataclass(frozen=True)
class SpaceCurve:
    """Sampled space curve ``s(t)`` starting at the origin."""

    t: np.ndarray
    points: np.ndarray
    total_time: float
    omega: np.ndarray | None = None

    @property
    def closure_defect(self) -> float:
        return float(np.linalg.norm(self.points[-1] - self.points[0]))

    def speed(self):
        """``|ds/dt|`` by central differences."""
        return np.linalg.norm(np.gradient(self.points, self.t, axis=0), axis=1)

    def curvature(self):
        """Curvature in MHz (angular curvature divided by ``2 pi``).

        For noise along ``sigma_x`` this equals ``|Omega(t)|``.
        """
        d1 = np.gradient(self.points, self.t, axis=0)
        d2 = np.gradient(d1, self.t, axis=0)
        num = np.linalg.norm(np.cross(d1, d2), axis=1)
        den = np.linalg.norm(d1, axis=1) ** 3
        return num / np.where(den > 0, den, np.inf) / (2 * np.pi)


@dataclass(frozen=True)
class MagnusReport:
    """First- and second-order Magnus summary over one gate window."""

    a1: np.ndarray
    a2_norm: float
    closure_defect: float
    projected_areas: tuple


def space_curve(envelope: Waveform, T: float, n_samples: int = 2001, noise_axis: str = "x") -> SpaceCurve:
    """Cumulative first Magnus term sampled on ``n_samples`` equally spaced times."""
    if n_samples < 100:
        raise DomainError("space_curve needs at least 100 samples")
    if not T > 0:
        raise DomainError("T must be positive")
    t = np.linspace(0.0, T, n_samples)
    sub = max(1, math.ceil(_n_panels(envelope, T) / (n_samples - 1)))
    edges = np.linspace(0.0, T, (n_samples - 1) * sub + 1)
    nodes, weights = _panel_nodes(edges)
    vec = toggling_frame_vector(envelope, noise_axis, nodes)
    pieces = np.einsum("pk,pki->pi", weights, vec).reshape(n_samples - 1, sub, 3).sum(axis=1)
    points = np.concatenate([np.zeros((1, 3)), np.cumsum(pieces, axis=0)])
    return SpaceCurve(t, points, float(T), envelope(t))


def projected_areas(curve: SpaceCurve):
    """Signed shoelace areas ``(A_xy, A_xz, A_yz)`` of the curve closed by a chord."""
    p = np.asarray(curve.points, dtype=float)
    if len(p) < 3:
        return (0.0, 0.0, 0.0)
    q = np.roll(p, -1, axis=0)

    def shoelace(i, j):
        return 0.5 * float(np.sum(p[:, i] * q[:, j] - q[:, i] * p[:, j]))

    return (shoelace(0, 1), shoelace(0, 2), shoelace(1, 2))


def magnus_report(envelope: Waveform, T: float, noise_axis: str = "x", n_samples: int = 4001) -> MagnusReport:
    curve = space_curve(envelope, T, n_samples, noise_axis)
    areas = projected_areas(curve)
    return MagnusReport(
        a1=magnus_first_order(envelope, noise_axis, T),
        a2_norm=float(np.linalg.norm(areas)),
        closure_defect=curve.closure_defect,
        projected_areas=areas,
    )


def peak_rotation_angle(envelope: Waveform, T: float, n_samples: int = 200001) -> float:
    """Largest ``|2 pi int_0^t Omega|`` reached for ``t`` in ``[0, T]``."""
    t = np.linspace(0.0, T, n_samples)
    angle = np.abs(2 * np.pi * envelope.integral(t))
    k = int(np.argmax(angle))
    if 0 < k < n_samples - 1:
        # parabolic refinement around the sampled maximum
        y0, y1, y2 = angle[k - 1 : k + 2]
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            return float(y1 - 0.125 * (y2 - y0) ** 2 / denom)
    return float(angle[k])


def filter_function(envelope: Waveform, freq_grid, T: float, noise_axis: str = "x", n_panels: int | None = None):
    """First-order susceptibility to a single-tone error at each frequency.

    The quasi-static error is replaced by ``delta_beta * exp(-2 pi i f t)``;
    the result is the Frobenius norm of the resulting first Magnus term
    divided by ``T``.  Frequencies are in MHz.
    """
    freqs = np.atleast_1d(np.asarray(freq_grid, dtype=float))
    if np.any(freqs < 0):
        raise DomainError("filter_function frequencies must be non-negative")
    fmax = float(freqs.max(initial=0.0))
    n = n_panels or max(_n_panels(envelope, T), int(math.ceil(16 * fmax * T)))
    nodes, weights = _panel_nodes(np.linspace(0.0, T, n + 1))
    vec = toggling_frame_vector(envelope, noise_axis, nodes).reshape(-1, 3)
    tw = weights.reshape(-1)
    phase = np.exp(-2j * np.pi * freqs[:, None] * nodes.reshape(1, -1))
    a = (phase * tw[None, :]) @ vec
    # ||a . sigma||_F = sqrt(2) |a| for complex coefficient vectors
    return math.sqrt(2.0) * np.linalg.norm(a, axis=1) / T
