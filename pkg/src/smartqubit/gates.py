"""Single-qubit gate library for the SMART and dressed protocols.

Gates are built from a global drive on ``sigma_z`` and a local detuning on
``sigma_x`` (dressed frame).  The x/y gates are two-harmonic local controls
whose coefficients are found by a small gradient ascent; the v/w gates use a
single harmonic with its amplitude set by root finding on the rotation angle.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, DomainError, OptimizationError
from .geometry import _panel_nodes, optimal_mod_frequency, toggling_frame_vector
from .model import (
    ZERO,
    NoiseOffset,
    QubitFrameSpec,
    Waveform,
    build_hamiltonian,
    constant_envelope,
    smart_envelope,
    xy_control,
)
from .numerics import (
    IDENTITY,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    HamiltonianSpec,
    PropagationConfig,
    Term,
    fidelity,
    propagate,
    rotation,
)

__all__ = [
    "RotationDecomposition",
    "ControlProgram",
    "AxisMap",
    "GATE_NAMES",
    "VARIANTS",
    "REFERENCE_COEFFICIENTS",
    "extract_rotation",
    "rotation_efficiency",
    "axis_maps",
    "grape_optimize",
    "build_gate",
    "gate_target",
]

GATE_NAMES = (
    "identity",
    "sqrt_x",
    "sqrt_y",
    "sqrt_v",
    "sqrt_w",
    "sqrt_x_dag",
    "sqrt_y_dag",
    "sqrt_v_dag",
    "sqrt_w_dag",
)
VARIANTS = ("sine", "cosine", "dressed", "bare")

# (nu_v, nu_w) in MHz for sqrt_x and sqrt_y with the sine drive, omega_r = 1 MHz
REFERENCE_COEFFICIENTS = {
    ("sqrt_x", 1): (0.1515, 0.3336),
    ("sqrt_x", 2): (0.0893, 0.1579),
    ("sqrt_x", 3): (0.0620, 0.0921),
    ("sqrt_x", 7): (0.0271, 0.0366),
    ("sqrt_x", 10): (0.0190, 0.0254),
    ("sqrt_y", 1): (-0.2154, 0.2224),
    ("sqrt_y", 2): (-0.1056, 0.1136),
    ("sqrt_y", 3): (-0.0701, 0.0760),
    ("sqrt_y", 7): (-0.0300, 0.0327),
    ("sqrt_y", 10): (-0.0210, 0.0229),
}

_GRAPE_CFG = PropagationConfig(steps_per_period=1024)
_MAP_CFG = PropagationConfig(steps_per_period=512)
_AXIS_TOL = 1e-12


@dataclass(frozen=True)
class RotationDecomposition:
    """Rotation angle and axis of a single-qubit unitary.

    ``phi`` is the azimuth of the axis in the xy-plane and ``theta`` its polar
    angle from +z, so an axis on the equator has ``theta = pi/2``.  ``axis``
    is ``None`` when the operator is a global phase times the identity.
    """

    chi: float
    axis: np.ndarray | None
    theta: float
    phi: float

    @property
    def is_null(self) -> bool:
        return self.axis is None

    def unitary(self):
        if self.axis is None:
            return IDENTITY.copy()
        return rotation(self.axis, self.chi)


def extract_rotation(u) -> RotationDecomposition:
    """Decompose ``u`` as ``cos(chi/2) I - i sin(chi/2) r.sigma`` up to phase.

    The global phase is removed with ``sqrt(det u)`` and the sign is fixed so
    the identity component is non-negative, which puts ``chi`` in
    ``[0, pi]`` and keeps the axis continuous with the small-angle limit.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise DomainError(f"extract_rotation expects a 2x2 matrix, got {u.shape}")
    v = u / np.sqrt(np.linalg.det(u))
    a0 = 0.5 * np.trace(v).real
    vec = np.array([(0.5j * np.trace(v @ p)).real for p in (PAULI_X, PAULI_Y, PAULI_Z)])
    if a0 < 0:
        a0, vec = -a0, -vec
    norm = float(np.linalg.norm(vec))
    if norm < _AXIS_TOL:
        return RotationDecomposition(0.0, None, float("nan"), float("nan"))
    axis = vec / norm
    chi = 2.0 * math.atan2(norm, a0)
    theta = math.acos(max(-1.0, min(1.0, axis[2])))
    phi = math.atan2(axis[1], axis[0])
    return RotationDecomposition(chi, axis, theta, phi)


def rotation_efficiency(chi, nu, n_periods: int, f_mod: float):
    """Squared rotation rate per unit control RMS power, in percent."""
    nu = np.asarray(nu, dtype=float)
    if np.any(nu == 0):
        raise DomainError("rotation efficiency is undefined for nu = 0")
    duration = n_periods / f_mod
    return 100.0 * np.asarray(chi) ** 2 / ((2 * np.pi * duration) ** 2 * (nu / math.sqrt(2)) ** 2)


def gate_target(name: str, axis=None):
    """Ideal unitary for a named gate; v/w gates need their calibrated axis."""
    if name == "identity":
        return IDENTITY.copy()
    base, dag = _split_name(name)
    sign = -1.0 if dag else 1.0
    if base in ("sqrt_x", "sqrt_y"):
        axis = (1.0, 0.0, 0.0) if base == "sqrt_x" else (0.0, 1.0, 0.0)
    elif axis is None:
        raise ConfigurationError(f"{name} target needs its calibrated rotation axis")
    return rotation(axis, sign * math.pi / 2)


def _split_name(name):
    if name not in GATE_NAMES:
        raise DomainError(f"unknown gate {name!r}; expected one of {', '.join(GATE_NAMES)}")
    if name.endswith("_dag"):
        return name[:-4], True
    return name, False


def _global_for(variant, omega_r, f_mod):
    if variant in ("sine", "cosine"):
        return smart_envelope(omega_r, f_mod, variant)
    if variant == "dressed":
        return constant_envelope(omega_r)
    if variant == "bare":
        return ZERO
    raise DomainError(f"unknown variant {variant!r}; expected one of {', '.join(VARIANTS)}")


def _period_for(variant, omega_r, f_mod):
    return 1.0 / f_mod if variant in ("sine", "cosine") else 1.0 / omega_r


@dataclass(frozen=True)
class ControlProgram:
    """Executable single-qubit gate: global and local waveforms over ``n`` periods.

    ``period`` is ``T_mod`` for the SMART variants and ``1/omega_r`` for the
    dressed and bare references.  ``coefficients`` records the local-control
    amplitudes in MHz for reporting.
    """

    gate_name: str
    n_periods: int
    variant: str
    global_: Waveform
    local: Waveform
    target: np.ndarray
    omega_r: float
    f_mod: float
    period: float
    coefficients: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def duration(self) -> float:
        return self.n_periods * self.period

    @property
    def dim(self) -> int:
        return 2

    def hamiltonian(self, noise: NoiseOffset | None = None) -> HamiltonianSpec:
        return build_hamiltonian(QubitFrameSpec("dressed"), self.global_, self.local, noise, period=self.period)

    def propagator(self, noise: NoiseOffset | None = None, cfg: PropagationConfig | None = None):
        return propagate(self.hamiltonian(noise), 0.0, self.duration, cfg)

    def fidelity(self, noise: NoiseOffset | None = None, cfg: PropagationConfig | None = None, metric="overlap"):
        return fidelity(self.propagator(noise, cfg), self.target, metric)


# -- local-control bases ----------------------------------------------------

def _basis(variant, family, omega_r, f_mod):
    """Two local waveforms whose linear span parametrizes a gate family."""
    if variant == "sine" or (variant == "cosine" and family == "sqrt_x"):
        # cos(2 pi k f t) - 1 for k = 1, 2
        return (
            Waveform("harmonic_sum", (1.0,), f_mod, 0.0, (1.0,)),
            Waveform("harmonic_sum", (0.0, 1.0), f_mod, 0.0, (1.0,)),
        )
    if variant == "cosine":
        return (Waveform("sine", (1.0,), f_mod), Waveform("sine", (1.0,), 2 * f_mod))
    if variant == "dressed":
        # the second harmonic cancels the Bloch-Siegert tilt of the resonant term
        kind = "cosine" if family == "sqrt_x" else "sine"
        return (Waveform(kind, (1.0,), omega_r), Waveform(kind, (1.0,), 2 * omega_r))
    raise DomainError(f"variant {variant!r} has no x/y control basis")


def _local_waveform(variant, family, coeffs, omega_r, f_mod):
    a, b = (float(c) for c in coeffs)
    if variant == "sine" or (variant == "cosine" and family == "sqrt_x"):
        return xy_control(a, b, f_mod)
    if variant == "cosine":
        # a sin(wt) + b sin(2wt) written as cosines shifted by -pi/2
        return Waveform("harmonic_sum", (a, b), f_mod, -math.pi / 2)
    phase = 0.0 if family == "sqrt_x" else -math.pi / 2
    return Waveform("harmonic_sum", (a, b), omega_r, phase)


def _batched_fidelity(variant, family, target, n_periods, omega_r, f_mod, cfg):
    global_ = _global_for(variant, omega_r, f_mod)
    b1, b2 = _basis(variant, family, omega_r, f_mod)
    period = _period_for(variant, omega_r, f_mod)

    def evaluate(points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        h = HamiltonianSpec(
            2,
            (
                Term(global_, PAULI_Z / 2),
                Term(b1, PAULI_X / 2, scale=points[:, 0]),
                Term(b2, PAULI_X / 2, scale=points[:, 1]),
            ),
            period=period,
        )
        return fidelity(propagate(h, 0.0, n_periods * period, cfg), target)

    return evaluate


def _linear_response_start(variant, family, target_vec, n_periods, omega_r, f_mod):
    """Solve ``chi r = 2 pi int g(t) c(t) dt`` for the two basis amplitudes.

    ``c(t)`` is the toggling-frame image of ``sigma_x`` under the global drive
    alone, so this is the first Magnus term of the control itself.
    """
    global_ = _global_for(variant, omega_r, f_mod)
    period = _period_for(variant, omega_r, f_mod)
    duration = n_periods * period
    nodes, weights = _panel_nodes(np.linspace(0.0, duration, 256 * n_periods + 1))
    c = toggling_frame_vector(global_, "x", nodes)
    cols = [2 * np.pi * np.einsum("pk,pk,pki->i", weights, b(nodes), c) for b in _basis(variant, family, omega_r, f_mod)]
    m = np.stack(cols, axis=1)
    sol, *_ = np.linalg.lstsq(m, target_vec, rcond=None)
    return sol


def _ascend(evaluate, x0, h=1e-4, tol=1e-13, max_iter=80):
    """Newton-guided ascent with a 9-point central-difference stencil."""
    x = np.asarray(x0, dtype=float)
    offsets = np.array([[0, 0], [h, 0], [-h, 0], [0, h], [0, -h], [h, h], [h, -h], [-h, h], [-h, -h]])
    f = float(evaluate(x[None])[0])
    for it in range(max_iter):
        vals = evaluate(x[None] + offsets)
        f0 = vals[0]
        grad = np.array([vals[1] - vals[2], vals[3] - vals[4]]) / (2 * h)
        hxx = (vals[1] - 2 * f0 + vals[2]) / h**2
        hyy = (vals[3] - 2 * f0 + vals[4]) / h**2
        hxy = (vals[5] - vals[6] - vals[7] + vals[8]) / (4 * h * h)
        hess = np.array([[hxx, hxy], [hxy, hyy]])
        lam = np.linalg.eigvalsh(hess)
        # shift non-concave directions down so the Newton step stays an ascent step
        shift = 0.0 if lam.max() < 0 else lam.max() + 0.1 * np.abs(lam).max() + 1e-9
        step = -np.linalg.solve(hess - shift * np.eye(2), grad)
        for _ in range(40):
            trial = float(evaluate((x + step)[None])[0])
            if trial >= f:
                break
            step = step / 2
        else:
            break
        x, f = x + step, trial
        if 1.0 - f < tol or np.linalg.norm(step) < 1e-13:
            break
    return x, f, it + 1


def _family_and_vector(target_name):
    base, dag = _split_name(target_name)
    if base not in ("sqrt_x", "sqrt_y"):
        raise DomainError(f"grape_optimize supports sqrt_x, sqrt_y and inverses, got {target_name!r}")
    vec = np.array([1.0, 0.0, 0.0]) if base == "sqrt_x" else np.array([0.0, 1.0, 0.0])
    return base, (-1.0 if dag else 1.0) * math.pi / 2 * vec


def _grape(target_name, n_periods, variant, omega_r, f_mod, seed, max_restarts, cfg, start=None):
    family, rot_vec = _family_and_vector(target_name)
    if int(n_periods) != n_periods or n_periods < 1:
        raise DomainError("n_periods must be an integer >= 1")
    target = gate_target(target_name)
    evaluate = _batched_fidelity(variant, family, target, n_periods, omega_r, f_mod, cfg)
    lr = _linear_response_start(variant, family, rot_vec, n_periods, omega_r, f_mod)
    starts = [lr] if start is None else [np.asarray(start, dtype=float), lr]
    for sx in (1, -1):
        for sy in (1, -1):
            quad = np.array([sx * abs(lr[0]), sy * abs(lr[1])])
            if not any(np.allclose(quad, s) for s in starts):
                starts.append(quad)
    rng = np.random.default_rng(seed)
    scale = max(float(np.max(np.abs(lr))), 1e-3)
    results = []
    for k in range(max_restarts):
        x0 = starts[k] if k < len(starts) else rng.uniform(-2 * scale, 2 * scale, size=2)
        x, f, _ = _ascend(evaluate, x0)
        results.append((x, f))
        if f >= 1 - 1e-8:
            break
    best_f = max(r[1] for r in results)
    if best_f < 1 - 1e-6:
        best = max(results, key=lambda r: r[1])
        raise OptimizationError(
            f"{target_name} n={n_periods} {variant}: best fidelity {best_f:.10f} after {len(results)} starts",
            best=tuple(best[0]),
            fidelity=best_f,
        )
    x, f = max(results, key=lambda r: r[1])
    return (float(x[0]), float(x[1])), float(f)


def grape_optimize(
    target: str,
    n_periods: int,
    variant: str = "sine",
    omega_r: float = 1.0,
    f_mod: float | None = None,
    seed: int = 0,
    max_restarts: int = 8,
    cfg: PropagationConfig | None = None,
):
    """Two-coefficient local control that realises an x or y quarter turn.

    Parameters
    ----------
    target : str
        ``sqrt_x``, ``sqrt_y``, ``sqrt_x_dag`` or ``sqrt_y_dag``.
    n_periods : int
        Gate length in drive periods.
    variant : str
        ``sine`` or ``cosine`` for the SMART drive, ``dressed`` for a constant
        drive (coefficients then multiply ``cos`` or ``sin`` at ``omega_r``
        and ``2 omega_r``).

    Returns
    -------
    tuple of float
        ``(nu_v, nu_w)`` in MHz, the amplitudes of the first and second
        harmonic.

    Raises
    ------
    OptimizationError
        If no start reaches a fidelity of ``1 - 1e-6``.
    """
    if variant not in ("sine", "cosine", "dressed"):
        raise DomainError(f"grape_optimize does not support variant {variant!r}")
    f_mod = f_mod or optimal_mod_frequency(omega_r, 1)
    coeffs, _ = _grape(target, n_periods, variant, omega_r, f_mod, seed, max_restarts, cfg or _GRAPE_CFG)
    return coeffs


def _vw_local(base, nu, f_mod):
    k = 1 if base == "sqrt_v" else 2
    return Waveform("cosine", (nu,), k * f_mod)


def _calibrate_vw(base, n_periods, variant, omega_r, f_mod, cfg):
    global_ = _global_for(variant, omega_r, f_mod)
    period = 1.0 / f_mod
    frame = QubitFrameSpec("dressed")

    def chi(nu):
        h = build_hamiltonian(frame, global_, _vw_local(base, nu, f_mod), period=period)
        return extract_rotation(propagate(h, 0.0, n_periods * period, cfg)).chi

    # the v/w efficiencies sit near 40-55 %, so this guess is within a factor 2
    guess = (math.pi / 2) / (2 * np.pi * n_periods * period * math.sqrt(0.45 / 2))
    hi = guess
    while chi(hi) < math.pi / 2:
        hi *= 1.5
        if hi > 50 * guess:
            raise OptimizationError(f"could not bracket {base} amplitude", best=(hi,), fidelity=float("nan"))
    nu = brentq(lambda v: chi(v) - math.pi / 2, 0.0, hi, xtol=1e-14, rtol=1e-14)
    h = build_hamiltonian(frame, global_, _vw_local(base, nu, f_mod), period=period)
    return nu, extract_rotation(propagate(h, 0.0, n_periods * period, cfg))


def build_gate(
    name: str,
    n_periods: int = 1,
    variant: str = "sine",
    omega_r: float = 1.0,
    f_mod: float | None = None,
    coefficients=None,
    cfg: PropagationConfig | None = None,
    seed: int = 0,
) -> ControlProgram:
    """Construct a calibrated gate program.

    Coefficients come from ``coefficients`` if given, else from
    :data:`REFERENCE_COEFFICIENTS` (polished by the ascent) for the sine drive at 1 MHz,
    else from :func:`grape_optimize`.  The v/w gates are calibrated by root
    finding.  The ``bare`` variant only provides the identity.
    """
    base, dag = _split_name(name) if name != "identity" else ("identity", False)
    if int(n_periods) != n_periods or n_periods < 1:
        raise DomainError("n_periods must be an integer >= 1")
    n_periods = int(n_periods)
    f_mod = f_mod or optimal_mod_frequency(omega_r, 1)
    global_ = _global_for(variant, omega_r, f_mod)
    period = _period_for(variant, omega_r, f_mod)
    meta = {}

    def program(local, target, coeffs=()):
        return ControlProgram(name, n_periods, variant, global_, local, target, omega_r, f_mod, period, tuple(coeffs), meta)

    if base == "identity":
        return program(ZERO, IDENTITY.copy())
    if variant == "bare":
        raise DomainError("the bare variant only supports the identity gate")
    if base in ("sqrt_v", "sqrt_w"):
        if variant != "sine":
            # with a cosine or constant drive the first harmonic has no first-order effect
            raise DomainError(f"{name} is defined for the sine drive only")
        nu, rot = _calibrate_vw(base, n_periods, variant, omega_r, f_mod, cfg or _GRAPE_CFG)
        meta.update(chi=rot.chi, phi=rot.phi, theta=rot.theta)
        sign = -1.0 if dag else 1.0
        # negating the detuning conjugates by sigma_z, which flips an equatorial axis
        local = _vw_local(base, sign * nu, f_mod)
        axis = np.array([sign * rot.axis[0], sign * rot.axis[1], rot.axis[2]])
        return program(local, rotation(axis, math.pi / 2), (sign * nu,))

    if coefficients is None:
        start = REFERENCE_COEFFICIENTS.get((base, n_periods)) if (variant == "sine" and omega_r == 1.0) else None
        if start is not None:
            start = tuple(-c for c in start) if dag else start
        coefficients, fid = _grape(name, n_periods, variant, omega_r, f_mod, seed, 8, cfg or _GRAPE_CFG, start=start)
        meta["optimized_fidelity"] = fid
    local = _local_waveform(variant, base, coefficients, omega_r, f_mod)
    return program(local, gate_target(name), coefficients)


@dataclass(frozen=True)
class AxisMap:
    """Rotation parameters on a ``(nu, phi_mod)`` grid, indexed ``[i_nu, i_phi]``."""

    nu_axis: np.ndarray
    phi_mod_axis: np.ndarray
    harmonic: int
    chi: np.ndarray
    phi_r: np.ndarray
    theta_r: np.ndarray
    eta: np.ndarray


def axis_maps(
    nu_grid,
    phi_grid,
    harmonic: int,
    omega_r: float = 1.0,
    f_mod: float | None = None,
    n_periods: int = 1,
    variant: str = "sine",
    cfg: PropagationConfig | None = None,
    workers: int = 1,
) -> AxisMap:
    """Rotation angle, axis and efficiency of ``nu sin(2 pi k f t + phi_mod)``.

    Rows (one per ``nu``) are propagated as a batch over ``phi_mod`` and may be
    spread over threads; results are assembled in row order.
    """
    nu_grid = np.asarray(nu_grid, dtype=float)
    phi_grid = np.asarray(phi_grid, dtype=float)
    if nu_grid.size == 0 or phi_grid.size == 0:
        raise DomainError("axis_maps grids must be non-empty")
    if harmonic not in (1, 2):
        raise DomainError(f"harmonic must be 1 or 2, got {harmonic!r}")
    f_mod = f_mod or optimal_mod_frequency(omega_r, 1)
    cfg = cfg or _MAP_CFG
    global_ = _global_for(variant, omega_r, f_mod)
    s = Waveform("sine", (1.0,), harmonic * f_mod)
    c = Waveform("cosine", (1.0,), harmonic * f_mod)
    period = 1.0 / f_mod

    def row(nu):
        # nu sin(x + phi) = nu cos(phi) sin(x) + nu sin(phi) cos(x)
        h = HamiltonianSpec(
            2,
            (
                Term(global_, PAULI_Z / 2),
                Term(s, PAULI_X / 2, scale=nu * np.cos(phi_grid)),
                Term(c, PAULI_X / 2, scale=nu * np.sin(phi_grid)),
            ),
            period=period,
        )
        us = propagate(h, 0.0, n_periods * period, cfg)
        return [extract_rotation(u) for u in us]

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(row, nu_grid))
    else:
        rows = [row(nu) for nu in nu_grid]
    chi = np.array([[r.chi for r in rs] for rs in rows])
    phi_r = np.array([[r.phi for r in rs] for rs in rows])
    theta_r = np.array([[r.theta for r in rs] for rs in rows])
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = 100.0 * chi**2 / ((2 * np.pi * n_periods * period) ** 2 * (nu_grid[:, None] / math.sqrt(2)) ** 2)
    eta = np.where(nu_grid[:, None] == 0, np.nan, eta)
    return AxisMap(nu_grid, phi_grid, harmonic, chi, phi_r, theta_r, eta)
