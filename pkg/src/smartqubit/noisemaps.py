"""Fixed-offset fidelity grids and Gaussian-averaged noise maps.

A gate is first scored on a grid of quasi-static offsets ``(delta_nu,
delta_omega)``; Gaussian noise levels are then applied by weighting that grid
with a normalised 2D Gaussian.  Two-qubit gates use a 4D grid with
independent offsets per qubit and a shared noise level.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EvaluationError, TruncationWarning
from .model import NoiseOffset
from .numerics import PropagationConfig, fidelity

__all__ = [
    "DEFAULT_NU_AXIS",
    "DEFAULT_OMEGA_AXIS",
    "DEFAULT_SIGMA_NU",
    "DEFAULT_SIGMA_OMEGA",
    "MAP_CONFIG",
    "FidelityGrid",
    "FidelityTensor",
    "NoiseLevelMap",
    "offset_fidelity_map",
    "offset_fidelity_tensor",
    "gaussian_average",
    "noise_level_map",
    "two_qubit_noise_average",
    "detuning_half_width",
    "monte_carlo_average",
]

DEFAULT_NU_AXIS = np.linspace(-1.0, 1.0, 81)
DEFAULT_OMEGA_AXIS = np.linspace(-0.5, 0.5, 81)
DEFAULT_SIGMA_NU = np.linspace(0.0, 0.5, 21)
DEFAULT_SIGMA_OMEGA = np.linspace(0.0, 0.25, 21)

# 128 steps per period keeps map fidelities within ~1e-6 of the converged value
MAP_CONFIG = PropagationConfig(steps_per_period=128)

# rows per propagation batch; fixed so results do not depend on worker count
_ROW_BLOCK = 9


@dataclass(frozen=True)
class FidelityGrid:
    """Gate fidelity on a ``(delta_nu, delta_omega)`` offset grid.

    ``values[i, j]`` belongs to ``delta_nu_axis[i]`` (MHz) and
    ``delta_omega_axis[j]`` (fraction of the drive amplitude).
    """

    delta_nu_axis: np.ndarray
    delta_omega_axis: np.ndarray
    values: np.ndarray
    gate_name: str = ""
    qubit_count: int = 1

    def at_origin(self) -> float:
        i = int(np.argmin(np.abs(self.delta_nu_axis)))
        j = int(np.argmin(np.abs(self.delta_omega_axis)))
        return float(self.values[i, j])


@dataclass(frozen=True)
class FidelityTensor:
    """Two-qubit fidelity indexed ``[i_nu1, i_nu2, j_omega1, j_omega2]``."""

    delta_nu_axis: np.ndarray
    delta_omega_axis: np.ndarray
    values: np.ndarray
    gate_name: str = ""


@dataclass(frozen=True)
class NoiseLevelMap:
    """Gaussian-averaged fidelity on a ``(sigma_nu, sigma_omega)`` grid."""

    sigma_nu_axis: np.ndarray
    sigma_omega_axis: np.ndarray
    values: np.ndarray
    truncated: np.ndarray
    gate_name: str = ""

    @property
    def infidelity(self):
        return 1.0 - self.values


def _check_axis(axis, name, limit=None):
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size == 0:
        raise DomainError(f"{name} must be a non-empty 1D grid")
    if axis.size > 1 and np.any(np.diff(axis) <= 0):
        raise DomainError(f"{name} must be strictly increasing")
    if not np.allclose(axis, -axis[::-1], atol=1e-12):
        raise DomainError(f"{name} must be symmetric about zero")
    if limit is not None and np.any(np.abs(axis) >= limit):
        raise DomainError(f"{name} entries must satisfy |x| < {limit}")
    return axis


def offset_fidelity_map(
    program,
    delta_nu_axis=None,
    delta_omega_axis=None,
    cfg: PropagationConfig | None = None,
    workers: int = 1,
    metric: str = "overlap",
) -> FidelityGrid:
    """Score ``program`` against its target on a grid of fixed offsets.

    Works for single-qubit programs and for two-qubit programs, where both
    qubits receive the same offsets.  Blocks of rows are propagated as one
    batch; the block layout is fixed so any worker count gives bit-identical
    values.
    """
    nu = _check_axis(DEFAULT_NU_AXIS if delta_nu_axis is None else delta_nu_axis, "delta_nu_axis")
    om = _check_axis(DEFAULT_OMEGA_AXIS if delta_omega_axis is None else delta_omega_axis, "delta_omega_axis", 1.0)
    cfg = cfg or MAP_CONFIG
    blocks = [nu[k : k + _ROW_BLOCK] for k in range(0, nu.size, _ROW_BLOCK)]

    def run(block):
        noise = NoiseOffset(block[:, None], om[None, :])
        try:
            u = program.propagator(noise, cfg)
        except EvaluationError as exc:
            raise EvaluationError(
                f"{program.gate_name}: propagation failed for delta_nu in [{block[0]}, {block[-1]}]: {exc}", exc.time
            ) from exc
        return fidelity(u, program.target, metric)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(run, blocks))
    else:
        rows = [run(b) for b in blocks]
    return FidelityGrid(nu, om, np.concatenate(rows, axis=0), program.gate_name, getattr(program, "qubit_count", 1))


def offset_fidelity_tensor(
    program,
    delta_nu_axis=None,
    delta_omega_axis=None,
    cfg: PropagationConfig | None = None,
    metric: str = "overlap",
) -> FidelityTensor:
    """Independent per-qubit offsets for a two-qubit program.

    The program's propagator broadcasts the four offset axes, so product
    segments reuse single-qubit propagators computed on 2D grids.
    """
    nu = _check_axis(np.linspace(-1.0, 1.0, 11) if delta_nu_axis is None else delta_nu_axis, "delta_nu_axis")
    om = _check_axis(np.linspace(-0.5, 0.5, 11) if delta_omega_axis is None else delta_omega_axis, "delta_omega_axis", 1.0)
    n1 = NoiseOffset(nu[:, None, None, None], om[None, None, :, None])
    n2 = NoiseOffset(nu[None, :, None, None], om[None, None, None, :])
    u = program.propagator(n1, cfg or MAP_CONFIG, noise2=n2)
    return FidelityTensor(nu, om, fidelity(u, program.target, metric), program.gate_name)


def _axis_weights(axis, sigma, name):
    """Normalised trapezoid x Gaussian weights; a delta at zero for sigma = 0."""
    if sigma < 0 or not math.isfinite(sigma):
        raise DomainError(f"{name} must be finite and >= 0, got {sigma}")
    axis = np.asarray(axis, dtype=float)
    if sigma == 0 or axis.size == 1:
        w = np.zeros(axis.size)
        k = int(np.searchsorted(axis, 0.0))
        if k < axis.size and axis[k] == 0.0 or axis.size == 1:
            w[min(k, axis.size - 1)] = 1.0
        else:
            # zero lies between two nodes; interpolate linearly
            lo, hi = axis[k - 1], axis[k]
            w[k - 1], w[k] = hi / (hi - lo), -lo / (hi - lo)
        return w, False
    trap = np.empty(axis.size)
    trap[1:-1] = 0.5 * (axis[2:] - axis[:-2])
    trap[0] = 0.5 * (axis[1] - axis[0])
    trap[-1] = 0.5 * (axis[-1] - axis[-2])
    w = trap * np.exp(-0.5 * (axis / sigma) ** 2)
    half_width = min(-axis[0], axis[-1])
    return w / w.sum(), bool(sigma > half_width / 2)


def _warn_truncation(label):
    warnings.warn(
        f"{label}: noise level exceeds half the grid half-width; the average is dominated by grid truncation",
        TruncationWarning,
        stacklevel=3,
    )


def gaussian_average(grid: FidelityGrid, sigma_nu: float, sigma_omega: float) -> float:
    """Average the grid over independent zero-mean Gaussians in both offsets.

    The Gaussian is renormalised over the finite grid.  A
    :class:`TruncationWarning` is issued when either sigma exceeds half the
    grid half-width.
    """
    w_nu, t_nu = _axis_weights(grid.delta_nu_axis, float(sigma_nu), "sigma_nu")
    w_om, t_om = _axis_weights(grid.delta_omega_axis, float(sigma_omega), "sigma_omega")
    if t_nu or t_om:
        _warn_truncation(grid.gate_name or "gaussian_average")
    return float(w_nu @ grid.values @ w_om)


def noise_level_map(grid: FidelityGrid, sigma_nu_axis=None, sigma_omega_axis=None) -> NoiseLevelMap:
    """:func:`gaussian_average` swept over a grid of noise levels."""
    s_nu = np.asarray(DEFAULT_SIGMA_NU if sigma_nu_axis is None else sigma_nu_axis, dtype=float)
    s_om = np.asarray(DEFAULT_SIGMA_OMEGA if sigma_omega_axis is None else sigma_omega_axis, dtype=float)
    if s_nu.size == 0 or s_om.size == 0:
        raise DomainError("sigma grids must be non-empty")
    nu_w = [_axis_weights(grid.delta_nu_axis, s, "sigma_nu") for s in s_nu]
    om_w = [_axis_weights(grid.delta_omega_axis, s, "sigma_omega") for s in s_om]
    w_nu = np.array([w for w, _ in nu_w])
    w_om = np.array([w for w, _ in om_w])
    truncated = np.array([t for _, t in nu_w])[:, None] | np.array([t for _, t in om_w])[None, :]
    if truncated.any():
        _warn_truncation(grid.gate_name or "noise_level_map")
    values = w_nu @ grid.values @ w_om.T
    return NoiseLevelMap(s_nu, s_om, values, truncated, grid.gate_name)


def two_qubit_noise_average(tensor: FidelityTensor, sigma_nu: float, sigma_omega: float) -> float:
    """Separable 4D Gaussian average with the same noise level on both qubits."""
    w_nu, t_nu = _axis_weights(tensor.delta_nu_axis, float(sigma_nu), "sigma_nu")
    w_om, t_om = _axis_weights(tensor.delta_omega_axis, float(sigma_omega), "sigma_omega")
    if t_nu or t_om:
        _warn_truncation(tensor.gate_name or "two_qubit_noise_average")
    return float(np.einsum("i,j,k,l,ijkl->", w_nu, w_nu, w_om, w_om, tensor.values))


def detuning_half_width(grid: FidelityGrid, threshold: float = 0.99) -> float:
    """Half-width in ``delta_nu`` of the band with fidelity above ``threshold``.

    Evaluated on the ``delta_omega = 0`` column and measured outward from
    ``delta_nu = 0`` with linear interpolation at the crossing; the smaller of
    the two sides is returned.  Returns the grid half-width if the band is
    not left within the grid.
    """
    j = int(np.argmin(np.abs(grid.delta_omega_axis)))
    x = grid.delta_nu_axis
    f = grid.values[:, j]
    i0 = int(np.argmin(np.abs(x)))
    if f[i0] < threshold:
        return 0.0
    sides = []
    for step in (1, -1):
        i = i0
        while 0 <= i + step < x.size and f[i + step] >= threshold:
            i += step
        if not 0 <= i + step < x.size:
            sides.append(abs(x[i]))
            continue
        a, b = f[i], f[i + step]
        frac = (a - threshold) / (a - b)
        sides.append(abs(x[i] + frac * (x[i + step] - x[i])))
    return float(min(sides))


def monte_carlo_average(
    program,
    sigma_nu: float,
    sigma_omega: float,
    n_draws: int = 100_000,
    seed: int = 0,
    cfg: PropagationConfig | None = None,
    batch: int = 5000,
):
    """Sampled Gaussian average of the exact fidelity.

    Each draw propagates the program at one random offset (independent per
    qubit for two-qubit programs).  Returns ``(mean, standard_error)``.
    """
    rng = np.random.default_rng(seed)
    two = getattr(program, "qubit_count", 1) == 2
    cfg = cfg or MAP_CONFIG
    values = []
    for start in range(0, n_draws, batch):
        m = min(batch, n_draws - start)
        noise = NoiseOffset(rng.normal(0, sigma_nu, m), rng.normal(0, sigma_omega, m))
        if two:
            noise2 = NoiseOffset(rng.normal(0, sigma_nu, m), rng.normal(0, sigma_omega, m))
            u = program.propagator(noise, cfg, noise2=noise2)
        else:
            u = program.propagator(noise, cfg)
        values.append(fidelity(u, program.target))
    values = np.concatenate(values)
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))
