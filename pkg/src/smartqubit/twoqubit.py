"""Exchange-coupled qubit pairs under a shared global drive.

Two parts live here:

* gate programs (square exchange pulses for sqrt(SWAP), and the CNOT and
  CNOT_X sequences built from them and single-qubit gates), propagated in
  the dressed frame;
* a five-level singlet-triplet model for initialisation and readout by
  ramping the charge detuning through the (1,1)-(0,2) anticrossing.

Exchange gate programs propagate product segments as Kronecker products of
single-qubit propagators.  Offset arrays broadcast through that product, so a
4D grid over per-qubit offsets only needs 2D single-qubit grids.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .gates import ControlProgram, build_gate
from .geometry import optimal_mod_frequency
from .model import ZERO, NoiseOffset, QubitFrameSpec, Waveform, build_hamiltonian, constant_envelope, smart_envelope
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
)

__all__ = [
    "SQRT_SWAP",
    "SWAP",
    "ST_BASIS",
    "ExchangeSpec",
    "QubitDrive",
    "Segment",
    "TwoQubitProgram",
    "two_qubit_hamiltonian",
    "sqrt_swap_program",
    "compose_cnot",
    "compose_cnot_x",
    "STSystem",
    "RampSpec",
    "RampResult",
    "EnergyDiagram",
    "st_hamiltonian",
    "st_energy_diagram",
    "st_min_gap",
    "ramp_profile",
    "ramp_initialisation",
    "ramp_readout",
]

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
SQRT_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0.5 + 0.5j, 0.5 - 0.5j, 0], [0, 0.5 - 0.5j, 0.5 + 0.5j, 0], [0, 0, 0, 1]], dtype=complex
)


def _kron(a, b):
    """Kronecker product broadcasting over leading batch axes."""
    out = np.einsum("...ab,...cd->...acbd", a, b)
    return out.reshape(out.shape[:-4] + (a.shape[-2] * b.shape[-2], a.shape[-1] * b.shape[-1]))


Z1, Z2 = np.kron(PAULI_Z, IDENTITY), np.kron(IDENTITY, PAULI_Z)
X1, X2 = np.kron(PAULI_X, IDENTITY), np.kron(IDENTITY, PAULI_X)
HEISENBERG = (np.kron(PAULI_X, PAULI_X) + np.kron(PAULI_Y, PAULI_Y) + np.kron(PAULI_Z, PAULI_Z)) / 4


@dataclass(frozen=True)
class ExchangeSpec:
    """Exchange profile ``J(t)`` (MHz) with its pulse window.

    ``pulse_center`` is measured from the start of the segment that holds the
    pulse.
    """

    j: Waveform
    pulse_center: float
    pulse_duration: float
    j0: float

    def __post_init__(self):
        if self.j0 < 0 or self.pulse_duration < 0:
            raise DomainError("exchange amplitude and pulse duration must be non-negative")

    @classmethod
    def square(cls, j0: float, center: float, duration: float) -> "ExchangeSpec":
        a, b = center - duration / 2, center + duration / 2
        if a < 0:
            raise DomainError("exchange pulse starts before the segment")
        knots = ((a, 0.0), (a, j0), (b, j0), (b, 0.0)) if duration > 0 else ((a, 0.0), (a + 1e-12, 0.0))
        return cls(Waveform("piecewise_linear", knots=knots), center, duration, j0)

    @property
    def window(self):
        return (self.pulse_center - self.pulse_duration / 2, self.pulse_center + self.pulse_duration / 2)


@dataclass(frozen=True)
class QubitDrive:
    """Global envelope and local detuning seen by one qubit."""

    global_: Waveform
    local: Waveform = ZERO


def two_qubit_hamiltonian(
    q1: QubitDrive,
    q2: QubitDrive,
    exchange: ExchangeSpec | None = None,
    noise=(None, None),
    period: float | None = None,
) -> HamiltonianSpec:
    """Dressed-frame pair Hamiltonian with isotropic exchange.

    ``H = sum_q 1/2 [(1+dO_q) g(t) Z_q + (l_q(t) + dnu_q) X_q] + J(t)/4 s.s``.
    Offsets may be arrays; their broadcast shape becomes the batch shape.
    """
    if q1.global_ != q2.global_:
        raise ConfigurationError("both qubits must see the same global drive (amplitude and f_mod)")
    n1 = noise[0] or NoiseOffset()
    n2 = noise[1] or NoiseOffset()
    g = q1.global_
    terms = [
        Term(g, Z1 / 2, scale=1.0 + np.asarray(n1.delta_omega, dtype=float)),
        Term(g, Z2 / 2, scale=1.0 + np.asarray(n2.delta_omega, dtype=float)),
        Term(q1.local, X1 / 2, offset=np.asarray(n1.delta_nu, dtype=float)),
        Term(q2.local, X2 / 2, offset=np.asarray(n2.delta_nu, dtype=float)),
    ]
    breaks = set(q1.local.breakpoints) | set(q2.local.breakpoints)
    if exchange is not None:
        terms.append(Term(exchange.j, HEISENBERG))
        breaks |= set(exchange.j.breakpoints)
    return HamiltonianSpec(4, tuple(terms), period=period or g.natural_period, breakpoints=tuple(sorted(breaks)))


@dataclass(frozen=True)
class Segment:
    """``n_periods`` of simultaneous local control, optionally with an exchange pulse."""

    n_periods: int
    local1: Waveform = ZERO
    local2: Waveform = ZERO
    exchange: ExchangeSpec | None = None
    label: str = ""


@dataclass(frozen=True)
class TwoQubitProgram:
    """Sequence of segments under a continuous global drive."""

    gate_name: str
    segments: tuple
    target: np.ndarray
    global_: Waveform
    period: float
    variant: str
    meta: dict = field(default_factory=dict, compare=False)

    qubit_count = 2
    dim = 4

    @property
    def n_periods(self) -> int:
        return sum(s.n_periods for s in self.segments)

    @property
    def duration(self) -> float:
        return self.n_periods * self.period

    def _single(self, local, noise, t0, t1, cfg):
        h = build_hamiltonian(QubitFrameSpec("dressed"), self.global_, local, noise, period=self.period)
        return propagate(h, t0, t1, cfg)

    def _dense(self, seg, noise1, noise2, t0, t1, cfg, with_exchange):
        ex = seg.exchange if with_exchange else None
        period = self.period
        if ex is not None and ex.j0 > 0:
            period = min(period, 1.0 / ex.j0)
        h = two_qubit_hamiltonian(
            QubitDrive(self.global_, seg.local1), QubitDrive(self.global_, seg.local2), ex, (noise1, noise2), period
        )
        return propagate(h, t0, t1, cfg)

    def segment_propagator(self, seg: Segment, noise1, noise2, cfg, dense=False):
        """Propagator of one segment.

        The segment is split at the exchange pulse edges.  Outside the pulse
        the qubits are uncoupled and, unless ``dense`` is set, each side is
        propagated as a single qubit and combined with a Kronecker product.
        """
        duration = seg.n_periods * self.period
        if seg.exchange is not None and seg.exchange.pulse_duration > 0:
            a, b = seg.exchange.window
            pieces = [(0.0, a, False), (a, b, True), (b, duration, False)]
        else:
            pieces = [(0.0, duration, False)]
        u = None
        for t0, t1, coupled in pieces:
            if t1 <= t0:
                continue
            if coupled or dense:
                step = self._dense(seg, noise1, noise2, t0, t1, cfg, coupled)
            else:
                step = _kron(self._single(seg.local1, noise1, t0, t1, cfg), self._single(seg.local2, noise2, t0, t1, cfg))
            u = step if u is None else step @ u
        return u

    def propagator(self, noise=None, cfg: PropagationConfig | None = None, noise2=None, dense=False):
        """Full propagator; ``noise2`` defaults to ``noise`` (correlated offsets)."""
        n1 = noise or NoiseOffset()
        n2 = n1 if noise2 is None else noise2
        u = None
        for seg in self.segments:
            step = self.segment_propagator(seg, n1, n2, cfg, dense)
            u = step if u is None else step @ u
        return u

    def fidelity(self, noise=None, cfg=None, noise2=None, dense=False, metric="overlap"):
        return fidelity(self.propagator(noise, cfg, noise2, dense), self.target, metric)


def _drive_for(variant, omega_r, f_mod):
    if variant in ("sine", "cosine"):
        f_mod = f_mod or optimal_mod_frequency(omega_r, 1)
        return smart_envelope(omega_r, f_mod, variant), 1.0 / f_mod, f_mod
    if variant == "dressed":
        return constant_envelope(omega_r), 1.0 / omega_r, f_mod
    raise DomainError(f"two-qubit gates support sine, cosine and dressed drives, got {variant!r}")


def _swap_segment(j0, omega_r, variant, period):
    if j0 <= 4 * omega_r:
        warnings.warn(
            f"exchange j0={j0} MHz is not fast compared with the drive (omega_r={omega_r} MHz)",
            RuntimeWarning,
            stacklevel=3,
        )
    # centre on a zero of the envelope: T/2 for sine, T/4 for cosine
    center = period / 4 if variant == "cosine" else period / 2
    return Segment(1, exchange=ExchangeSpec.square(j0, center, 1.0 / (4.0 * j0)), label="sqrt_swap")


def sqrt_swap_program(j0: float = 20.0, omega_r: float = 1.0, f_mod: float | None = None, variant: str = "sine"):
    """Square exchange pulse with ``int J dt = 1/4`` inside one drive period.

    Raises a ``RuntimeWarning`` (and sets ``meta['slow_pulse']``) when
    ``j0 <= 4 omega_r``.
    """
    if not j0 > 0:
        raise DomainError("j0 must be positive")
    global_, period, _ = _drive_for(variant, omega_r, f_mod)
    seg = _swap_segment(j0, omega_r, variant, period)
    return TwoQubitProgram(
        "sqrt_swap", (seg,), SQRT_SWAP.copy(), global_, period, variant, {"j0": j0, "slow_pulse": j0 <= 4 * omega_r}
    )


def _single_qubit_gates(names, n_periods, variant, omega_r, f_mod, gates):
    gates = dict(gates or {})
    out = {}
    for name in names:
        prog = gates.get(name)
        if prog is None:
            prog = build_gate(name, n_periods, variant, omega_r, f_mod)
        if not isinstance(prog, ControlProgram) or prog.variant != variant:
            raise ConfigurationError(f"{name} must be a calibrated {variant} single-qubit program")
        if prog.meta.get("optimized_fidelity", 1.0) < 1 - 1e-6:
            raise ConfigurationError(f"{name} is not calibrated")
        out[name] = prog
    return out


def _compose(name, layers, j0, n_periods, variant, omega_r, f_mod, gates):
    """Build a program from layers listed in time order.

    Each layer is ``'swap'`` or a pair of single-qubit gate names (``None``
    for an idle).  The target is the product of the ideal layer operators.
    """
    global_, period, f_mod = _drive_for(variant, omega_r, f_mod)
    if variant == "dressed":
        f_mod = f_mod or optimal_mod_frequency(omega_r, 1)
    names = sorted({g for layer in layers if layer != "swap" for g in layer if g})
    progs = _single_qubit_gates(names, n_periods, variant, omega_r, f_mod, gates)
    segments, target = [], np.eye(4, dtype=complex)
    swap_seg = _swap_segment(j0, omega_r, variant, period)
    for layer in layers:
        if layer == "swap":
            segments.append(swap_seg)
            ideal = SQRT_SWAP
        else:
            p1, p2 = (progs[g] if g else None for g in layer)
            for p in (p1, p2):
                if p is not None and p.global_ != global_:
                    raise ConfigurationError(f"{p.gate_name} was calibrated for a different global drive")
            segments.append(
                Segment(
                    n_periods,
                    p1.local if p1 else ZERO,
                    p2.local if p2 else ZERO,
                    label=f"{layer[0] or 'idle'}*{layer[1] or 'idle'}",
                )
            )
            ideal = np.kron(p1.target if p1 else IDENTITY, p2.target if p2 else IDENTITY)
        target = ideal @ target
    return TwoQubitProgram(name, tuple(segments), target, global_, period, variant, {"j0": j0, "gates": names})


def compose_cnot(
    n_periods: int = 7,
    variant: str = "sine",
    j0: float = 20.0,
    omega_r: float = 1.0,
    f_mod: float | None = None,
    gates: dict | None = None,
) -> TwoQubitProgram:
    """``(sqrt_y_dag x I) sqrtSWAP (sqrt_x_dag x sqrt_x) sqrtSWAP (sqrt_y x I)``.

    The target is the product of the five ideal factors, which is a CNOT in
    the dressed basis (NOT on qubit 2 conditioned on qubit 1 in ``|0>``).
    ``gates`` may supply pre-calibrated single-qubit programs by name.
    """
    layers = [("sqrt_y", None), "swap", ("sqrt_x_dag", "sqrt_x"), "swap", ("sqrt_y_dag", None)]
    return _compose("cnot", layers, j0, n_periods, variant, omega_r, f_mod, gates)


def compose_cnot_x(
    n_periods: int = 7,
    variant: str = "sine",
    j0: float = 20.0,
    omega_r: float = 1.0,
    f_mod: float | None = None,
    gates: dict | None = None,
) -> TwoQubitProgram:
    """``sqrtSWAP (sqrt_x_dag x sqrt_x) sqrtSWAP``: NOT conditioned on the x basis."""
    layers = ["swap", ("sqrt_x_dag", "sqrt_x"), "swap"]
    return _compose("cnot_x", layers, j0, n_periods, variant, omega_r, f_mod, gates)


# -- singlet-triplet initialisation ------------------------------------------

ST_BASIS = ("T+", "T0", "T-", "S11", "S02")
_GHZ = 1000.0


@dataclass(frozen=True)
class STSystem:
    """Two spins in a double dot near the (1,1)-(0,2) transition.

    ``t_c`` is the tunnel coupling in GHz, ``delta_nu`` the per-qubit
    detunings in MHz and ``global_`` the collective drive envelope (MHz).
    ``window`` is the simulated time span in microseconds.
    """

    global_: Waveform
    t_c: float = 0.5
    delta_nu: tuple = (0.0, 0.0)
    window: float | None = None

    @classmethod
    def smart(cls, omega_r=1.0, f_mod=None, **kw):
        f_mod = f_mod or optimal_mod_frequency(omega_r, 1)
        return cls(smart_envelope(omega_r, f_mod, "sine"), window=2.0 / f_mod, **kw)

    @classmethod
    def dressed(cls, omega_r=1.0, **kw):
        return cls(constant_envelope(omega_r), window=2.0 / omega_r, **kw)

    @property
    def period(self):
        return self.window / 2 if self.window else self.global_.natural_period


def st_hamiltonian(sys: STSystem, epsilon: Waveform, delta_nu=None) -> HamiltonianSpec:
    """Five-level Hamiltonian in MHz; ``epsilon`` is in GHz.

    ``delta_nu`` overrides ``sys.delta_nu`` and may hold arrays for batching.
    """
    d1, d2 = (np.asarray(d, dtype=float) for d in (sys.delta_nu if delta_nu is None else delta_nu))
    drive = np.zeros((5, 5), dtype=complex)
    drive[0, 1] = drive[1, 0] = drive[1, 2] = drive[2, 1] = 1 / math.sqrt(2)
    tplus, tminus = np.zeros((5, 5), complex), np.zeros((5, 5), complex)
    tplus[0, 0], tminus[2, 2] = 0.5, -0.5
    mix = np.zeros((5, 5), complex)
    mix[1, 3] = mix[3, 1] = 0.5
    tunnel = np.zeros((5, 5), complex)
    tunnel[3, 4] = tunnel[4, 3] = sys.t_c * _GHZ
    charge = np.zeros((5, 5), complex)
    charge[4, 4] = -_GHZ
    # (d1 + d2) enters through T+ and T-, (d1 - d2) through the S11-T0 element
    dsum, ddiff = d1 + d2, d1 - d2
    static = dsum[..., None, None] * (tplus + tminus) + ddiff[..., None, None] * mix + tunnel
    return HamiltonianSpec(
        5,
        (Term(sys.global_, drive), Term(epsilon, charge)),
        static=static,
        period=sys.period,
        breakpoints=epsilon.breakpoints,
    )


@dataclass(frozen=True)
class EnergyDiagram:
    """Instantaneous eigenvalues (MHz) against charge detuning (GHz)."""

    epsilon: np.ndarray
    energies: np.ndarray
    time: float


def _energies(sys, eps, t):
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    h = st_hamiltonian(sys, Waveform("constant", (0.0,)))
    base = h(np.array([t]))[..., 0, :, :]
    shift = np.zeros((5, 5))
    shift[4, 4] = -_GHZ
    return np.linalg.eigvalsh(base + eps[:, None, None] * shift)


def st_energy_diagram(sys: STSystem, eps_grid=None, t: float | None = None) -> EnergyDiagram:
    """Eigenvalues of the five-level Hamiltonian with the drive frozen at ``t``.

    ``t`` defaults to a quarter period, where the sine drive peaks.  The
    default detuning grid spans -250..250 GHz, wide enough to include the
    singlet crossing with the lower dressed triplet near ``-t_c^2/Omega``.
    """
    eps = np.linspace(-250.0, 250.0, 1001) if eps_grid is None else np.asarray(eps_grid, dtype=float)
    t = sys.period / 4 if t is None else t
    return EnergyDiagram(eps, _energies(sys, eps, t), t)


def st_min_gap(sys: STSystem, eps_grid=None, t: float | None = None) -> tuple:
    """Smallest splitting between adjacent levels and where it occurs.

    The coarse minimum on ``eps_grid`` is refined with a bounded scalar
    search.  Returns ``(gap_mhz, epsilon_ghz)``.
    """
    from scipy.optimize import minimize_scalar

    diagram = st_energy_diagram(sys, eps_grid, t)
    gaps = np.diff(diagram.energies, axis=1)
    k = int(np.argmin(gaps.min(axis=1)))
    pair = int(np.argmin(gaps[k]))
    eps = diagram.epsilon
    lo, hi = eps[max(k - 1, 0)], eps[min(k + 1, eps.size - 1)]

    def gap(e):
        return float(np.diff(_energies(sys, e, diagram.time)[0])[pair])

    res = minimize_scalar(gap, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    best = min((res.fun, res.x), (gaps[k, pair], eps[k]))
    return float(best[0]), float(best[1])


@dataclass(frozen=True)
class RampSpec:
    """Charge-detuning ramp inside the simulation window.

    ``centering`` is ``'A'`` (centre at one period, where the sine drive
    crosses zero), ``'B'`` (centre at 1.25 periods, drive at its peak) or
    ``'center'`` (middle of the window).  The first ``pre_fraction`` and last
    ``post_fraction`` of the detuning range are applied as instantaneous
    steps; the rest is traversed linearly in ``ramp_time``.
    """

    ramp_time: float = 0.1
    eps_start: float = 50.0
    eps_end: float = -50.0
    centering: str = "A"
    pre_fraction: float = 0.4
    post_fraction: float = 0.4

    def __post_init__(self):
        if self.centering not in ("A", "B", "center"):
            raise DomainError(f"centering must be 'A', 'B' or 'center', got {self.centering!r}")
        if self.ramp_time < 0:
            raise DomainError("ramp_time must be non-negative")
        if min(self.pre_fraction, self.post_fraction) < 0 or self.pre_fraction + self.post_fraction > 1:
            raise DomainError("step fractions must be non-negative and sum to at most 1")

    def center_time(self, window: float) -> float:
        period = window / 2
        return {"A": period, "B": 1.25 * period, "center": window / 2}[self.centering]

    def reversed(self) -> "RampSpec":
        return RampSpec(
            self.ramp_time, self.eps_end, self.eps_start, self.centering, self.post_fraction, self.pre_fraction
        )


def ramp_profile(ramp: RampSpec, window: float) -> Waveform:
    """Step, linear ramp, step as a piecewise-linear detuning (GHz)."""
    tc = ramp.center_time(window)
    ta, tb = tc - ramp.ramp_time / 2, tc + ramp.ramp_time / 2
    if ta < -1e-12 or tb > window + 1e-12:
        raise DomainError(f"ramp of {ramp.ramp_time} us centred at {tc:.4f} us does not fit the {window:.4f} us window")
    span = ramp.eps_end - ramp.eps_start
    e1 = ramp.eps_start + ramp.pre_fraction * span
    e2 = ramp.eps_end - ramp.post_fraction * span
    knots = ((0.0, ramp.eps_start), (ta, ramp.eps_start), (ta, e1), (tb, e2), (tb, ramp.eps_end), (window, ramp.eps_end))
    return Waveform("piecewise_linear", knots=knots)


@dataclass(frozen=True)
class RampResult:
    """Final populations indexed ``[i_offset, i_ramp_time]``."""

    ramp_times: np.ndarray
    offsets: np.ndarray
    p_s02: np.ndarray
    p_s11: np.ndarray
    populations: np.ndarray
    ramp: RampSpec
    norm_error: float


def _default_offsets():
    vals = (0.0, 0.05, -0.05, 0.1, -0.1)
    return np.array([(a, b) for a in vals for b in vals])


def _ramp_steps(ramp: RampSpec, t_c: float) -> int:
    # per step the detuning moves by at most 5 % of t_c and the tunnel
    # coupling turns the state by at most 0.5 rad
    span = abs(ramp.eps_end - ramp.eps_start) * (1 - ramp.pre_fraction - ramp.post_fraction)
    by_sweep = span / (0.05 * t_c)
    by_phase = 2 * math.pi * t_c * _GHZ * ramp.ramp_time / 0.5
    return max(64, int(math.ceil(max(by_sweep, by_phase))))


def _propagate_ramp(sys, ramp, offsets, cfg):
    window = sys.window or 2 * sys.global_.natural_period
    eps = ramp_profile(ramp, window)
    h = st_hamiltonian(sys, eps, (offsets[:, 0], offsets[:, 1]))
    tc = ramp.center_time(window)
    ta, tb = tc - ramp.ramp_time / 2, tc + ramp.ramp_time / 2
    u = None
    for t0, t1 in ((0.0, ta), (ta, tb), (tb, window)):
        if t1 <= t0:
            continue
        if (t0, t1) == (ta, tb):
            n = _ramp_steps(ramp, sys.t_c)
            piece = HamiltonianSpec(5, h.terms, h.static, period=(t1 - t0), breakpoints=())
            step = propagate(piece, t0, t1, PropagationConfig(steps_per_period=n))
        else:
            step = propagate(h, t0, t1, cfg)
        u = step if u is None else step @ u
    return u


def _run_ramp(sys, ramp, ramp_times, offsets, initial, cfg):
    offsets = _default_offsets() if offsets is None else np.atleast_2d(np.asarray(offsets, dtype=float))
    ramp_times = np.atleast_1d(np.asarray(ramp_times, dtype=float))
    psi0 = np.zeros(5, dtype=complex)
    psi0[ST_BASIS.index(initial)] = 1.0
    cfg = cfg or PropagationConfig(steps_per_period=512)
    pops = np.empty((offsets.shape[0], ramp_times.size, 5))
    for k, tau in enumerate(ramp_times):
        spec = RampSpec(tau, ramp.eps_start, ramp.eps_end, ramp.centering, ramp.pre_fraction, ramp.post_fraction)
        u = _propagate_ramp(sys, spec, offsets, cfg)
        pops[:, k, :] = np.abs(u @ psi0) ** 2
    norm_error = float(np.max(np.abs(pops.sum(axis=-1) - 1.0)))
    return RampResult(ramp_times, offsets, pops[..., 4], pops[..., 3], pops, ramp, norm_error)


def ramp_initialisation(
    sys: STSystem,
    ramp: RampSpec,
    ramp_times,
    offsets=None,
    cfg: PropagationConfig | None = None,
) -> RampResult:
    """Start in S(0,2), sweep the detuning and report final populations.

    ``offsets`` is a list of ``(delta_nu_1, delta_nu_2)`` pairs in MHz; the
    default is every combination of ``{0, +-0.05, +-0.1}``.
    """
    return _run_ramp(sys, ramp, ramp_times, offsets, "S02", cfg)


def ramp_readout(
    sys: STSystem,
    ramp: RampSpec,
    ramp_times,
    offsets=None,
    initial: str = "S11",
    cfg: PropagationConfig | None = None,
) -> RampResult:
    """Reverse sweep from a (1,1) state; ``p_s02`` is the return probability.

    ``ramp`` describes the initialisation sweep; its reverse is applied here.
    """
    if initial not in ST_BASIS:
        raise DomainError(f"initial state must be one of {ST_BASIS}")
    return _run_ramp(sys, ramp.reversed(), ramp_times, offsets, initial, cfg)
