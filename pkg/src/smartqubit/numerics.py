"""Dense propagation of time-dependent Hermitian generators.

Hamiltonians are stored as ``H/h`` in MHz and times in microseconds, so a
step propagator is ``exp(-2j*pi*H*dt)``.  All functions broadcast over a
leading batch shape, which is how noise grids are evaluated in one pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, EvaluationError

__all__ = [
    "IDENTITY",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "PAULIS",
    "Term",
    "HamiltonianSpec",
    "PropagationConfig",
    "propagate",
    "step_propagators",
    "ordered_product",
    "fidelity",
    "unitarity_error",
    "rotation",
    "pauli_components",
]

IDENTITY = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)

FRAMES = ("lab", "rotating", "dressed")

# elements (batch * time) materialized per chunk
_CHUNK_ELEMENTS = 1 << 18


@dataclass(frozen=True)
class PropagationConfig:
    """Step density and frame tag for :func:`propagate`.

    ``steps_per_period`` counts steps per ``HamiltonianSpec.period``.
    ``method`` selects the step rule: ``"magnus4"`` (default) exponentiates
    two Gauss-node combinations of the Hamiltonian per step and is fourth
    order; ``"midpoint"`` exponentiates the midpoint Hamiltonian and is
    second order.  Both are exactly unitary.
    """

    steps_per_period: int = 4096
    frame: str = "dressed"
    method: str = "magnus4"

    def __post_init__(self):
        if int(self.steps_per_period) != self.steps_per_period or self.steps_per_period < 64:
            raise DomainError(f"steps_per_period must be an integer >= 64, got {self.steps_per_period}")
        if self.frame not in FRAMES:
            raise DomainError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        if self.method not in ("magnus4", "midpoint"):
            raise DomainError(f"unknown step method {self.method!r}")


@dataclass(frozen=True)
class Term:
    """One ``(scale*func(t) + offset) * op`` contribution to a Hamiltonian.

    ``scale`` and ``offset`` may be arrays; their broadcast shape becomes the
    batch shape of the Hamiltonian.
    """

    func: Callable[[np.ndarray], np.ndarray]
    op: np.ndarray
    scale: float | np.ndarray = 1.0
    offset: float | np.ndarray = 0.0

    def coefficient(self, t):
        scale = np.asarray(self.scale, dtype=float)[..., None]
        offset = np.asarray(self.offset, dtype=float)[..., None]
        return scale * np.asarray(self.func(t), dtype=float) + offset


@dataclass(frozen=True)
class HamiltonianSpec:
    """A time-dependent Hermitian operator built from weighted terms.

    Parameters
    ----------
    dim : int
        Hilbert-space dimension (2, 4 or 5).
    terms : tuple of Term
        Time-dependent contributions.
    static : ndarray, optional
        Time-independent part, shape ``batch + (dim, dim)`` or ``(dim, dim)``.
    period : float
        Natural time scale in microseconds; sets the step size together with
        ``PropagationConfig.steps_per_period``.
    breakpoints : tuple of float
        Times where a coefficient has a kink or jump.  Propagation never
        straddles a breakpoint with a single step.
    """

    dim: int
    terms: tuple = ()
    static: np.ndarray | None = None
    period: float = 1.0
    breakpoints: tuple = ()
    batch_shape: tuple = field(init=False)

    def __post_init__(self):
        if self.dim not in (2, 4, 5):
            raise DomainError(f"unsupported Hamiltonian dimension {self.dim}")
        shapes = []
        for term in self.terms:
            if np.shape(term.op) != (self.dim, self.dim):
                raise DomainError("term operator does not match dim")
            shapes += [np.shape(term.scale), np.shape(term.offset)]
        if self.static is not None:
            shapes.append(np.shape(self.static)[:-2])
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "batch_shape", np.broadcast_shapes(*shapes) if shapes else ())

    def __call__(self, t):
        """Evaluate the matrix at time(s) ``t``; shape ``batch + t.shape + (d, d)``."""
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        out = np.zeros(self.batch_shape + (flat.size, self.dim, self.dim), dtype=complex)
        for term in self.terms:
            out += term.coefficient(flat)[..., None, None] * term.op
        if self.static is not None:
            out += np.asarray(self.static)[..., None, :, :]
        return out.reshape(self.batch_shape + t.shape + (self.dim, self.dim))

    def with_terms(self, *extra, static=None):
        """Return a copy with additional terms (and optionally a static part)."""
        new_static = self.static
        if static is not None:
            new_static = static if new_static is None else new_static + static
        return HamiltonianSpec(self.dim, self.terms + tuple(extra), new_static, self.period, self.breakpoints)


def pauli_components(op):
    """Return ``(c0, cx, cy, cz)`` with ``op = c0*I + cx*X + cy*Y + cz*Z``."""
    op = np.asarray(op)
    return np.array([np.trace(op) / 2] + [np.trace(op @ p) / 2 for p in PAULIS])


def _exp_pauli(c0, hvec, dt):
    # exp(-2j*pi*dt*(c0*I + hvec.sigma)), hvec real with last axis 3
    norm = np.sqrt(np.sum(hvec * hvec, axis=-1))
    theta = 2 * np.pi * norm * dt
    cos = np.cos(theta)
    sinc = np.where(norm > 0, np.sin(theta) / np.where(norm > 0, norm, 1.0), 0.0)
    hx, hy, hz = hvec[..., 0], hvec[..., 1], hvec[..., 2]
    u = np.empty(hvec.shape[:-1] + (2, 2), dtype=complex)
    u[..., 0, 0] = cos - 1j * sinc * hz
    u[..., 1, 1] = cos + 1j * sinc * hz
    u[..., 0, 1] = -1j * sinc * (hx - 1j * hy)
    u[..., 1, 0] = -1j * sinc * (hx + 1j * hy)
    return u * np.exp(-2j * np.pi * c0 * dt)[..., None, None]


def _exp_hermitian(hmat, dt):
    w, v = np.linalg.eigh(hmat)
    phase = np.exp(-2j * np.pi * w * dt)
    return (v * phase[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def _check_finite(values, times, trailing=0):
    # `trailing` counts the operator axes that follow the time axis
    if not np.all(np.isfinite(values)):
        bad = ~np.isfinite(values)
        if trailing:
            bad = bad.any(axis=tuple(range(-trailing, 0)))
        bad = bad.reshape(-1, bad.shape[-1])
        idx = int(np.argmax(bad.any(axis=0)))
        raise EvaluationError(f"non-finite Hamiltonian sample at t = {times[idx]!r} us", time=float(times[idx]))


def _sample(h: HamiltonianSpec, times):
    # linear representation of H at `times`: Pauli coefficients for d=2, matrices otherwise
    if h.dim == 2:
        c0 = 0.0
        hvec = 0.0
        for term in h.terms:
            comp = pauli_components(term.op)
            coeff = term.coefficient(times)
            c0 = c0 + coeff * comp[0].real
            hvec = hvec + coeff[..., None] * comp[1:].real
        if h.static is not None:
            static = np.asarray(h.static)
            comps = np.stack([np.real(np.trace(static @ p, axis1=-2, axis2=-1)) / 2 for p in PAULIS], -1)
            c0 = c0 + np.real(np.trace(static, axis1=-2, axis2=-1))[..., None] / 2
            hvec = hvec + comps[..., None, :]
        shape = h.batch_shape + times.shape
        c0 = np.broadcast_to(c0, shape)
        hvec = np.broadcast_to(hvec, shape + (3,))
        _check_finite(hvec, times, trailing=1)
        _check_finite(c0, times)
        return c0, hvec
    hmat = h(times)
    _check_finite(hmat, times, trailing=2)
    return (hmat,)


def _exp_sample(sample, dt):
    if len(sample) == 2:
        return _exp_pauli(sample[0], sample[1], dt)
    return _exp_hermitian(sample[0], dt)


def step_propagators(h: HamiltonianSpec, times, dt):
    """Exact exponentials of ``h`` sampled at ``times`` for a step ``dt``.

    Returns shape ``batch + (len(times), d, d)``.
    """
    return _exp_sample(_sample(h, np.asarray(times, dtype=float)), dt)


# two-exponential commutator-free Magnus step at the Gauss-Legendre nodes
_GAUSS = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)
_CF_EARLY = 0.25 + math.sqrt(3) / 6
_CF_LATE = 0.25 - math.sqrt(3) / 6


def _magnus4_steps(h, starts, dt):
    s1 = _sample(h, starts + _GAUSS[0] * dt)
    s2 = _sample(h, starts + _GAUSS[1] * dt)
    first = _exp_sample(tuple(_CF_EARLY * a + _CF_LATE * b for a, b in zip(s1, s2)), dt)
    second = _exp_sample(tuple(_CF_LATE * a + _CF_EARLY * b for a, b in zip(s1, s2)), dt)
    return second @ first


def ordered_product(mats):
    """Time-ordered product along axis -3: ``mats[..., n-1] @ ... @ mats[..., 0]``."""
    mats = np.asarray(mats)
    while mats.shape[-3] > 1:
        n = mats.shape[-3]
        paired = mats[..., 1 : n - n % 2 : 2, :, :] @ mats[..., 0 : n - n % 2 : 2, :, :]
        if n % 2:
            paired = np.concatenate([paired, mats[..., n - 1 :, :, :]], axis=-3)
        mats = paired
    return mats[..., 0, :, :]


def _propagate_uniform(h, t0, t1, n_steps, unitary, method):
    dt = (t1 - t0) / n_steps
    batch = max(1, int(np.prod(h.batch_shape)))
    chunk = max(1, _CHUNK_ELEMENTS // batch)
    for start in range(0, n_steps, chunk):
        k = np.arange(start, min(start + chunk, n_steps))
        if method == "midpoint":
            steps = step_propagators(h, t0 + (k + 0.5) * dt, dt)
        else:
            steps = _magnus4_steps(h, t0 + k * dt, dt)
        unitary = ordered_product(steps) @ unitary
    return unitary


def propagate(h: HamiltonianSpec, t0: float, t1: float, cfg: PropagationConfig | None = None):
    """Time-ordered propagator of ``h`` from ``t0`` to ``t1``.

    Every step is a product of exact exponentials, so the result is unitary
    to rounding.  Steps never cross a breakpoint of ``h``.

    Returns
    -------
    ndarray
        Shape ``h.batch_shape + (dim, dim)``.
    """
    cfg = cfg or PropagationConfig()
    if not (math.isfinite(t0) and math.isfinite(t1)):
        raise DomainError("propagation interval must be finite")
    if t1 < t0:
        raise DomainError(f"t1 ({t1}) precedes t0 ({t0})")
    unitary = np.broadcast_to(np.eye(h.dim, dtype=complex), h.batch_shape + (h.dim, h.dim)).copy()
    if t1 == t0:
        return unitary
    cuts = [t0] + sorted(b for b in set(h.breakpoints) if t0 < b < t1) + [t1]
    for a, b in zip(cuts[:-1], cuts[1:]):
        n_steps = max(1, math.ceil(cfg.steps_per_period * (b - a) / h.period - 1e-9))
        unitary = _propagate_uniform(h, a, b, n_steps, unitary, cfg.method)
    return unitary


def fidelity(u, target, metric: str = "overlap"):
    """Phase-insensitive overlap between ``u`` and ``target``.

    ``metric="overlap"`` gives ``|Tr(target^dag u)|^2 / d^2``;
    ``metric="average"`` gives the average gate fidelity
    ``(|Tr|^2 + d) / (d (d + 1))``.  Broadcasts over leading axes.
    """
    u = np.asarray(u)
    target = np.asarray(target)
    if u.shape[-2:] != target.shape[-2:] or u.shape[-1] != u.shape[-2]:
        raise DomainError(f"dimension mismatch: {u.shape[-2:]} vs {target.shape[-2:]}")
    d = u.shape[-1]
    overlap = np.abs(np.einsum("...ji,...ji->...", np.conj(target), u)) ** 2
    if metric == "overlap":
        value = overlap / d**2
    elif metric == "average":
        value = (overlap + d) / (d * (d + 1))
    else:
        raise DomainError(f"unknown fidelity metric {metric!r}")
    return np.clip(value, 0.0, 1.0)


def unitarity_error(u):
    """Max-entry norm of ``U^dag U - I``."""
    u = np.asarray(u)
    eye = np.eye(u.shape[-1])
    return float(np.max(np.abs(np.conj(np.swapaxes(u, -1, -2)) @ u - eye)))


def rotation(axis: Sequence[float], angle: float):
    """``exp(-i angle/2 n.sigma)`` for a (normalized) axis ``n``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    gen = sum(a * p for a, p in zip(axis, PAULIS))
    return np.cos(angle / 2) * IDENTITY - 1j * np.sin(angle / 2) * gen
