"""Command-line front end: ``smartqubit run | validate | list``.

A scenario is a TOML file naming one experiment plus its parameters::

    experiment = "gate_map"
    output = "runs/sqrt_x"
    seed = 0

    [parameters]
    gate = "sqrt_x"
    variant = "sine"
    delta_nu = { start = -1.0, stop = 1.0, points = 41 }

Every run writes CSV files with a header row, one PNG per figure and a
``manifest.json`` holding the fully resolved configuration.  Passing the
manifest back to ``run`` reproduces the CSV output byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .errors import ConfigurationError, DomainError, SmartQubitError
from .numerics import PropagationConfig

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("smartqubit")

WORKERS_ENV = "SMARTQUBIT_WORKERS"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_TOP_LEVEL = ("experiment", "output", "seed", "workers", "plots", "parameters")


# -- parameter kinds ----------------------------------------------------------

def _grid(start, stop, points):
    return {"start": float(start), "stop": float(stop), "points": int(points)}


def _parse_grid(name, value):
    """A grid is a list of numbers or a ``{start, stop, points}`` table."""
    if isinstance(value, dict):
        unknown = set(value) - {"start", "stop", "points"}
        if unknown or not {"start", "stop", "points"} <= set(value):
            raise ConfigurationError(f"parameter '{name}': a grid table needs exactly start, stop and points")
        try:
            points = int(value["points"])
            start, stop = float(value["start"]), float(value["stop"])
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"parameter '{name}': {exc}") from None
        if points < 1:
            raise ConfigurationError(f"parameter '{name}': grid must have at least one point")
        if not (math.isfinite(start) and math.isfinite(stop)):
            raise ConfigurationError(f"parameter '{name}': grid bounds must be finite")
        return _grid(start, stop, points)
    if isinstance(value, list):
        if not value:
            raise ConfigurationError(f"parameter '{name}': grid must have at least one point")
        return [_parse_float(name, v) for v in value]
    raise ConfigurationError(f"parameter '{name}': expected a list or a {{start, stop, points}} table")


def grid_values(spec):
    if isinstance(spec, dict):
        return np.linspace(spec["start"], spec["stop"], spec["points"])
    return np.asarray(spec, dtype=float)


def _parse_float(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"parameter '{name}': expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigurationError(f"parameter '{name}': must be finite")
    return value


def _parse_positive(name, value):
    value = _parse_float(name, value)
    if value <= 0:
        raise ConfigurationError(f"parameter '{name}': must be positive")
    return value


def _parse_int(name, value, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"parameter '{name}': expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigurationError(f"parameter '{name}': must be at least {minimum}")
    return value


def _choice(*options):
    def parse(name, value):
        if value not in options:
            raise ConfigurationError(f"parameter '{name}': expected one of {', '.join(map(str, options))}, got {value!r}")
        return value

    return parse


def _optional(parse):
    def wrapped(name, value):
        return None if value is None else parse(name, value)

    return wrapped


def _int_list(name, value):
    if not isinstance(value, list) or not value:
        raise ConfigurationError(f"parameter '{name}': expected a non-empty list of integers")
    return [_parse_int(name, v) for v in value]


def _choice_list(*options):
    one = _choice(*options)

    def parse(name, value):
        if not isinstance(value, list) or not value:
            raise ConfigurationError(f"parameter '{name}': expected a non-empty list")
        return [one(name, v) for v in value]

    return parse


def _positive_list(name, value):
    if not isinstance(value, list) or not value:
        raise ConfigurationError(f"parameter '{name}': expected a non-empty list of numbers")
    return [_parse_positive(name, v) for v in value]


def _offset_pairs(name, value):
    if not isinstance(value, list) or not value:
        raise ConfigurationError(f"parameter '{name}': expected a non-empty list of [dnu1, dnu2] pairs")
    out = []
    for pair in value:
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigurationError(f"parameter '{name}': each entry must be a [dnu1, dnu2] pair")
        out.append([_parse_float(name, pair[0]), _parse_float(name, pair[1])])
    return out


@dataclass(frozen=True)
class Param:
    default: object
    parse: Callable
    doc: str


# -- experiment registry --------------------------------------------------------

@dataclass(frozen=True)
class Experiment:
    name: str
    summary: str
    params: dict
    runner: Callable
    columns: tuple
    notes: str = ""


_REGISTRY: dict = {}

_SINGLE_VARIANTS = ("sine", "cosine", "dressed", "bare")
_SINGLE_GATES = (
    "identity", "sqrt_x", "sqrt_y", "sqrt_v", "sqrt_w",
    "sqrt_x_dag", "sqrt_y_dag", "sqrt_v_dag", "sqrt_w_dag",
)
_OFFSETS = [[a, b] for a in (0.0, 0.05, -0.05, 0.1, -0.1) for b in (0.0, 0.05, -0.05, 0.1, -0.1)]


def _physics():
    return {
        "omega_r": Param(1.0, _parse_positive, "Rabi frequency Omega_R (MHz)"),
        "f_mod": Param(None, _optional(_parse_positive), "modulation frequency (MHz); default is the first Bessel optimum"),
    }


def _map_params(variant="sine"):
    p = _physics()
    p.update(
        variant=Param(variant, _choice(*_SINGLE_VARIANTS), "drive: sine, cosine, dressed or bare"),
        n_periods=Param(None, _optional(_parse_int), "gate length in periods; default 7 (SMART) or 10 (dressed, bare)"),
        delta_nu=Param(_grid(-1.0, 1.0, 81), _parse_grid, "detuning offsets (MHz), symmetric about 0"),
        delta_omega=Param(_grid(-0.5, 0.5, 81), _parse_grid, "relative amplitude offsets, symmetric about 0"),
        sigma_nu=Param(_grid(0.0, 0.5, 21), _parse_grid, "Gaussian widths for detuning noise (MHz)"),
        sigma_omega=Param(_grid(0.0, 0.25, 21), _parse_grid, "Gaussian widths for relative amplitude noise"),
        steps_per_period=Param(128, _parse_int, "propagation steps per drive period"),
    )
    return p


def _register(name, summary, params, columns, notes=""):
    def wrap(fn):
        _REGISTRY[name] = Experiment(name, summary, params, fn, columns, notes)
        return fn

    return wrap


def experiments():
    return dict(_REGISTRY)


# -- output helpers -------------------------------------------------------------

def _fmt(value):
    if isinstance(value, (str, np.str_)):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


class _Writer:
    """Collects output files for the manifest."""

    def __init__(self, out_dir: Path, plots: bool):
        self.out_dir = out_dir
        self.plots = plots
        self.files = []
        self.diagnostics = {}

    def csv(self, name, columns, rows):
        path = self.out_dir / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self.files.append(name)
        return path

    def figure(self, name, render, *args, **kw):
        if not self.plots:
            return None
        path = render(self.out_dir / name, *args, **kw)
        self.files.append(name)
        return path


def _log10_infidelity(f):
    return math.log10(max(1.0 - float(f), 1e-16))


def _resolve_f_mod(p):
    from .geometry import optimal_mod_frequency

    if p.get("f_mod") is None:
        p["f_mod"] = optimal_mod_frequency(p["omega_r"], 1)


def _resolve_n_periods(p):
    if p.get("n_periods") is None:
        p["n_periods"] = 7 if p["variant"] in ("sine", "cosine") else 10


def _noise_rows(grid, p):
    from .noisemaps import noise_level_map

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        nlm = noise_level_map(grid, grid_values(p["sigma_nu"]), grid_values(p["sigma_omega"]))
    rows = []
    for i, sn in enumerate(nlm.sigma_nu_axis):
        for j, so in enumerate(nlm.sigma_omega_axis):
            f = nlm.values[i, j]
            rows.append((sn, so, f, 1.0 - f, _log10_infidelity(f), bool(nlm.truncated[i, j])))
    return nlm, rows


_NOISE_COLUMNS = ("sigma_nu_mhz", "sigma_omega_frac", "fidelity", "infidelity", "log10_infidelity", "truncated")
_MAP_COLUMNS = ("delta_nu_mhz", "delta_omega_frac", "fidelity")


def _write_map(out, name, grid, p, title):
    from . import plotting
    from .noisemaps import detuning_half_width

    rows = [
        (nu, om, grid.values[i, j])
        for i, nu in enumerate(grid.delta_nu_axis)
        for j, om in enumerate(grid.delta_omega_axis)
    ]
    out.csv(f"{name}.csv", _MAP_COLUMNS, rows)
    nlm, noise_rows = _noise_rows(grid, p)
    out.csv(f"{name}_noise.csv", _NOISE_COLUMNS, noise_rows)
    out.figure(
        f"{name}.png", plotting.fidelity_map, grid.delta_nu_axis, grid.delta_omega_axis, grid.values,
        nlm.sigma_nu_axis, nlm.sigma_omega_axis, nlm.values, title=title,
    )
    out.diagnostics["fidelity_at_origin"] = grid.at_origin()
    try:
        out.diagnostics["half_width_99_mhz"] = detuning_half_width(grid, 0.99)
    except SmartQubitError as exc:
        out.diagnostics["half_width_99_mhz"] = f"unavailable: {exc}"


# -- experiments ----------------------------------------------------------------

@_register(
    "identity_map",
    "Identity-gate fidelity over detuning and amplitude offsets, plus Gaussian noise averages.",
    _map_params(),
    _MAP_COLUMNS,
    notes="Also writes identity_map_noise.csv with columns " + ", ".join(_NOISE_COLUMNS) + ".",
)
def _identity_map(p, out, workers, seed):
    p["gate"] = "identity"
    return _gate_map(p, out, workers, seed, name="identity_map")


_gate_params = _map_params()
_gate_params["gate"] = Param("sqrt_x", _choice(*_SINGLE_GATES), "single-qubit gate name")


@_register(
    "gate_map",
    "Single-qubit gate fidelity over detuning and amplitude offsets, plus Gaussian noise averages.",
    _gate_params,
    _MAP_COLUMNS,
    notes="Also writes gate_map_noise.csv with columns " + ", ".join(_NOISE_COLUMNS) + ".",
)
def _gate_map(p, out, workers, seed, name="gate_map"):
    from .gates import build_gate
    from .noisemaps import offset_fidelity_map

    _resolve_f_mod(p)
    _resolve_n_periods(p)
    program = build_gate(p["gate"], p["n_periods"], p["variant"], p["omega_r"], p["f_mod"], seed=seed)
    cfg = PropagationConfig(steps_per_period=p["steps_per_period"])
    grid = offset_fidelity_map(program, grid_values(p["delta_nu"]), grid_values(p["delta_omega"]), cfg, workers)
    out.diagnostics["coefficients_mhz"] = [float(c) for c in program.coefficients]
    _write_map(out, name, grid, p, f"{p['gate']} ({p['variant']}, {p['n_periods']} periods)")


_axis_params = _physics()
_axis_params.update(
    harmonic=Param(1, _choice(1, 2), "local-control harmonic k (1 gives the v axis, 2 the w axis)"),
    nu=Param(_grid(0.0125, 1.0, 81), _parse_grid, "local-control amplitudes (MHz), non-zero"),
    phi_mod=Param(_grid(0.0, math.pi, 81), _parse_grid, "local-control phases (rad)"),
    n_periods=Param(1, _parse_int, "number of drive periods"),
    steps_per_period=Param(512, _parse_int, "propagation steps per drive period"),
)
_AXIS_COLUMNS = ("nu_mhz", "phi_mod_rad", "chi_rad", "phi_r_rad", "theta_r_rad", "eta_percent")


@_register(
    "axis_map",
    "Rotation angle, axis and efficiency of a sinusoidal local control under the SMART drive.",
    _axis_params,
    _AXIS_COLUMNS,
    notes="phi_r is the azimuth of the rotation axis and theta_r its polar angle.",
)
def _axis_map(p, out, workers, seed):
    from . import plotting
    from .gates import axis_maps

    _resolve_f_mod(p)
    cfg = PropagationConfig(steps_per_period=p["steps_per_period"])
    nu, phi = grid_values(p["nu"]), grid_values(p["phi_mod"])
    m = axis_maps(nu, phi, p["harmonic"], p["omega_r"], p["f_mod"], p["n_periods"], "sine", cfg, workers)
    rows = [
        (nu[i], phi[j], m.chi[i, j], m.phi_r[i, j], m.theta_r[i, j], m.eta[i, j])
        for i in range(nu.size)
        for j in range(phi.size)
    ]
    out.csv("axis_map.csv", _AXIS_COLUMNS, rows)
    out.figure("axis_map.png", plotting.axis_map, nu, phi, m.chi, m.phi_r, m.theta_r, m.eta, title=f"k = {p['harmonic']}")
    out.diagnostics["max_eta_percent"] = float(np.nanmax(m.eta))


def _envelope_for(p):
    from .model import constant_envelope, smart_envelope

    scale = p["amplitude_scale"]
    if p["variant"] == "dressed":
        return constant_envelope(p["omega_r"] * scale), 1.0 / p["omega_r"]
    return smart_envelope(p["omega_r"], p["f_mod"], p["variant"]).scaled(scale), 1.0 / p["f_mod"]


_curve_params = _physics()
_curve_params.update(
    variant=Param("sine", _choice("sine", "cosine", "dressed"), "drive: sine, cosine or dressed"),
    amplitude_scale=Param(1.0, _parse_positive, "multiplies the drive amplitude (1 + delta_Omega)"),
    n_periods=Param(1, _parse_int, "number of drive periods"),
    n_samples=Param(2001, lambda n, v: _parse_int(n, v, 100), "samples along the curve"),
    noise_axis=Param("x", _choice("x", "y", "z"), "lab-frame axis of the noise term"),
)
_CURVE_COLUMNS = ("t_us", "x", "y", "z", "distance_from_start")


@_register(
    "space_curve",
    "Geometric space curve of the drive; the last row's distance_from_start is the closure defect.",
    _curve_params,
    _CURVE_COLUMNS,
    notes="Coordinates are in microseconds (the integral of the toggling-frame noise vector).",
)
def _space_curve(p, out, workers, seed):
    from . import plotting
    from .geometry import projected_areas, space_curve

    _resolve_f_mod(p)
    env, period = _envelope_for(p)
    curve = space_curve(env, p["n_periods"] * period, p["n_samples"], p["noise_axis"])
    dist = np.linalg.norm(curve.points - curve.points[0], axis=1)
    rows = [(t, *pt, d) for t, pt, d in zip(curve.t, curve.points, dist)]
    out.csv("space_curve.csv", _CURVE_COLUMNS, rows)
    out.figure("space_curve.png", plotting.space_curve, curve.points, title=f"{p['variant']} drive")
    out.diagnostics["closure_defect"] = float(curve.closure_defect)
    out.diagnostics["projected_areas"] = [float(a) for a in projected_areas(curve)]


_filter_params = _physics()
_filter_params.update(
    variant=Param("sine", _choice("sine", "cosine", "dressed"), "drive: sine, cosine or dressed"),
    amplitude_scale=Param(1.0, _parse_positive, "multiplies the drive amplitude"),
    n_periods=Param(1, _parse_int, "number of drive periods"),
    frequency=Param(_grid(0.0, 3.0, 601), _parse_grid, "noise frequencies (MHz), non-negative"),
    noise_axis=Param("x", _choice("x", "y", "z"), "lab-frame axis of the noise term"),
)
_FILTER_COLUMNS = ("frequency_mhz", "susceptibility")


@_register(
    "filter_function",
    "First-order susceptibility of the drive to harmonic noise at each frequency.",
    _filter_params,
    _FILTER_COLUMNS,
)
def _filter_function(p, out, workers, seed):
    from . import plotting
    from .geometry import filter_function

    _resolve_f_mod(p)
    env, period = _envelope_for(p)
    freqs = grid_values(p["frequency"])
    resp = filter_function(env, freqs, p["n_periods"] * period, p["noise_axis"])
    out.csv("filter_function.csv", _FILTER_COLUMNS, zip(freqs, resp))
    out.figure("filter_function.png", plotting.filter_function, freqs, resp, title=f"{p['variant']} drive")


_grape_params = _physics()
_grape_params.update(
    gates=Param(["sqrt_x", "sqrt_y"], _choice_list("sqrt_x", "sqrt_y", "sqrt_x_dag", "sqrt_y_dag"), "target gates"),
    n_periods=Param([1, 2, 3, 7, 10], _int_list, "gate lengths in periods"),
    variant=Param("sine", _choice("sine", "cosine", "dressed"), "drive: sine, cosine or dressed"),
    max_restarts=Param(8, lambda n, v: _parse_int(n, v, 0), "extra starts tried when the first one fails"),
    steps_per_period=Param(1024, _parse_int, "propagation steps per drive period"),
)
_GRAPE_COLUMNS = ("gate", "n", "nu_v_mhz", "nu_w_mhz")


@_register(
    "grape_table",
    "Optimised two-harmonic local-control coefficients for x and y quarter turns.",
    _grape_params,
    _GRAPE_COLUMNS,
    notes="Also writes grape_fidelity.csv with the fidelity reached for each row.",
)
def _grape_table(p, out, workers, seed):
    from . import plotting
    from .gates import build_gate

    _resolve_f_mod(p)
    cfg = PropagationConfig(steps_per_period=p["steps_per_period"])
    rows, fid_rows = [], []
    for gate in p["gates"]:
        for n in p["n_periods"]:
            prog = build_gate(gate, n, p["variant"], p["omega_r"], p["f_mod"], cfg=cfg, seed=seed)
            nu_v, nu_w = prog.coefficients
            rows.append((gate, n, nu_v, nu_w))
            f = prog.fidelity(cfg=cfg)
            fid_rows.append((gate, n, f, 1.0 - f))
    out.csv("grape_table.csv", _GRAPE_COLUMNS, rows)
    out.csv("grape_fidelity.csv", ("gate", "n", "fidelity", "infidelity"), fid_rows)
    out.figure("grape_table.png", plotting.grape_table, rows, title=f"{p['variant']} drive")


_tq_params = _physics()
_tq_params.update(
    gate=Param("sqrt_swap", _choice("sqrt_swap", "cnot", "cnot_x"), "two-qubit operation"),
    variant=Param("sine", _choice("sine", "cosine", "dressed"), "drive: sine, cosine or dressed"),
    j0=Param(20.0, _parse_positive, "exchange amplitude during the pulse (MHz)"),
    n_periods=Param(None, _optional(_parse_int), "single-qubit gate length; default 7 (SMART) or 10 (dressed)"),
    delta_nu=Param(_grid(-1.0, 1.0, 41), _parse_grid, "detuning offsets (MHz), applied to both qubits"),
    delta_omega=Param(_grid(-0.5, 0.5, 41), _parse_grid, "relative amplitude offsets, applied to both qubits"),
    tensor_points=Param(11, _parse_int, "points per axis of the independent-offset grid used for noise averages"),
    sigma_nu=Param(_grid(0.0, 0.5, 11), _parse_grid, "Gaussian widths for detuning noise (MHz)"),
    sigma_omega=Param(_grid(0.0, 0.25, 11), _parse_grid, "Gaussian widths for relative amplitude noise"),
    steps_per_period=Param(128, _parse_int, "propagation steps per drive period"),
)


@_register(
    "two_qubit_map",
    "Two-qubit gate fidelity with identical offsets on both qubits, plus averages over independent noise.",
    _tq_params,
    _MAP_COLUMNS,
    notes="Also writes two_qubit_map_noise.csv (" + ", ".join(_NOISE_COLUMNS[:-1]) + ").",
)
def _two_qubit_map(p, out, workers, seed):
    from . import plotting
    from .noisemaps import offset_fidelity_map, offset_fidelity_tensor, two_qubit_noise_average
    from .twoqubit import compose_cnot, compose_cnot_x, sqrt_swap_program

    _resolve_f_mod(p)
    _resolve_n_periods(p)
    if p["gate"] == "sqrt_swap":
        program = sqrt_swap_program(p["j0"], p["omega_r"], p["f_mod"], p["variant"])
    else:
        build = compose_cnot if p["gate"] == "cnot" else compose_cnot_x
        program = build(p["n_periods"], p["variant"], p["j0"], p["omega_r"], p["f_mod"])
    cfg = PropagationConfig(steps_per_period=p["steps_per_period"])
    grid = offset_fidelity_map(program, grid_values(p["delta_nu"]), grid_values(p["delta_omega"]), cfg, workers)
    rows = [
        (nu, om, grid.values[i, j])
        for i, nu in enumerate(grid.delta_nu_axis)
        for j, om in enumerate(grid.delta_omega_axis)
    ]
    out.csv("two_qubit_map.csv", _MAP_COLUMNS, rows)

    nu, om = grid_values(p["delta_nu"]), grid_values(p["delta_omega"])
    k = p["tensor_points"]
    # a single-point axis (e.g. delta_omega = [0]) stays a single point
    tensor = offset_fidelity_tensor(
        program,
        np.linspace(nu[0], nu[-1], k if nu.size > 1 else 1),
        np.linspace(om[0], om[-1], k if om.size > 1 else 1),
        cfg,
    )
    sig_nu, sig_om = grid_values(p["sigma_nu"]), grid_values(p["sigma_omega"])
    averaged = np.empty((sig_nu.size, sig_om.size))
    noise_rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i, sn in enumerate(sig_nu):
            for j, so in enumerate(sig_om):
                f = two_qubit_noise_average(tensor, sn, so)
                averaged[i, j] = f
                noise_rows.append((sn, so, f, 1.0 - f, _log10_infidelity(f)))
    out.csv("two_qubit_map_noise.csv", _NOISE_COLUMNS[:-1], noise_rows)
    out.figure(
        "two_qubit_map.png", plotting.fidelity_map, grid.delta_nu_axis, grid.delta_omega_axis, grid.values,
        sig_nu, sig_om, averaged, title=f"{p['gate']} ({p['variant']})",
    )
    out.diagnostics["fidelity_at_origin"] = grid.at_origin()


_RAMP_DOC = (
    "Case A centres the ramp at one modulation period, where the SMART drive "
    "amplitude passes through zero (minimum microwave amplitude).  Case B "
    "centres it a quarter period later, at the drive maximum.  The dressed "
    "drive is constant, so its ramp is centred in the window."
)


def _st_params(readout=False):
    p = _physics()
    p.update(
        drive=Param("smart", _choice("smart", "dressed"), "global drive: smart (sine) or dressed (constant)"),
        case=Param("A", _choice("A", "B"), "ramp centring for the smart drive: A (drive minimum) or B (drive maximum)"),
        t_c=Param(0.5, _parse_positive, "tunnel coupling (GHz)"),
        eps_start=Param(50.0, _parse_float, "initial charge detuning (GHz)"),
        eps_end=Param(-50.0, _parse_float, "final charge detuning (GHz)"),
        pre_fraction=Param(0.4, _parse_float, "fraction of the sweep taken as an abrupt step before the ramp"),
        post_fraction=Param(0.4, _parse_float, "fraction of the sweep taken as an abrupt step after the ramp"),
        ramp_times=Param(
            [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0], _positive_list, "ramp durations (us)"
        ),
        offsets=Param(_OFFSETS, _offset_pairs, "(dnu1, dnu2) detuning pairs in MHz"),
        steps_per_period=Param(512, _parse_int, "propagation steps per drive period outside the ramp"),
    )
    if readout:
        p["initial"] = Param("S11", _choice("T+", "T0", "T-", "S11", "S02"), "initial state of the reverse sweep")
    return p


_ST_COLUMNS = ("ramp_time_us", "dnu1_mhz", "dnu2_mhz", "p_s02", "p_s11")


def _st_run(p, out, name, readout):
    from . import plotting
    from .twoqubit import RampSpec, STSystem, ramp_initialisation, ramp_readout

    _resolve_f_mod(p)
    if p["drive"] == "smart":
        system = STSystem.smart(p["omega_r"], p["f_mod"], t_c=p["t_c"])
        centering = p["case"]
    else:
        system = STSystem.dressed(p["omega_r"], t_c=p["t_c"])
        centering = "center"
    ramp = RampSpec(
        p["ramp_times"][0], p["eps_start"], p["eps_end"], centering, p["pre_fraction"], p["post_fraction"]
    )
    cfg = PropagationConfig(steps_per_period=p["steps_per_period"])
    offsets = np.asarray(p["offsets"], dtype=float)
    if readout:
        res = ramp_readout(system, ramp, p["ramp_times"], offsets, p["initial"], cfg)
    else:
        res = ramp_initialisation(system, ramp, p["ramp_times"], offsets, cfg)
    rows = [
        (tau, d1, d2, res.p_s02[i, k], res.p_s11[i, k])
        for k, tau in enumerate(res.ramp_times)
        for i, (d1, d2) in enumerate(res.offsets)
    ]
    out.csv(f"{name}.csv", _ST_COLUMNS, rows)
    out.figure(f"{name}.png", plotting.ramp_populations, res.ramp_times, res.p_s11, res.p_s02, title=name)
    out.diagnostics["norm_error"] = res.norm_error
    out.diagnostics["worst_p_s11"] = [float(v) for v in res.p_s11.min(axis=0)]


@_register(
    "st_init",
    "Singlet initialisation by a charge-detuning sweep from (0,2) into (1,1).",
    _st_params(),
    _ST_COLUMNS,
    notes=_RAMP_DOC,
)
def _st_init(p, out, workers, seed):
    _st_run(p, out, "st_init", readout=False)


@_register(
    "st_readout",
    "Reverse sweep from (1,1) back towards (0,2); p_s02 is the return probability.",
    _st_params(readout=True),
    _ST_COLUMNS,
    notes=_RAMP_DOC,
)
def _st_readout(p, out, workers, seed):
    _st_run(p, out, "st_readout", readout=True)


_energy_params = _physics()
_energy_params.update(
    drive=Param("smart", _choice("smart", "dressed"), "global drive: smart (sine) or dressed (constant)"),
    t_c=Param(0.5, _parse_positive, "tunnel coupling (GHz)"),
    dnu1=Param(0.0, _parse_float, "detuning of qubit 1 (MHz)"),
    dnu2=Param(0.0, _parse_float, "detuning of qubit 2 (MHz)"),
    epsilon=Param(_grid(-250.0, 250.0, 1001), _parse_grid, "charge detuning grid (GHz)"),
    time=Param(None, _optional(_parse_float), "drive phase time (us); default a quarter period (drive maximum)"),
)
_ENERGY_COLUMNS = ("epsilon_ghz", "e0_mhz", "e1_mhz", "e2_mhz", "e3_mhz", "e4_mhz")


@_register(
    "energy_diagram",
    "Eigenvalues of the five-level singlet-triplet Hamiltonian against charge detuning.",
    _energy_params,
    _ENERGY_COLUMNS,
)
def _energy_diagram(p, out, workers, seed):
    from . import plotting
    from .twoqubit import STSystem, st_energy_diagram, st_min_gap

    _resolve_f_mod(p)
    kw = {"t_c": p["t_c"], "delta_nu": (p["dnu1"], p["dnu2"])}
    if p["drive"] == "smart":
        system = STSystem.smart(p["omega_r"], p["f_mod"], **kw)
    else:
        system = STSystem.dressed(p["omega_r"], **kw)
    if p["time"] is None:
        p["time"] = system.period / 4
    eps = grid_values(p["epsilon"])
    diagram = st_energy_diagram(system, eps, p["time"])
    out.csv("energy_diagram.csv", _ENERGY_COLUMNS, [(e, *row) for e, row in zip(diagram.epsilon, diagram.energies)])
    out.figure("energy_diagram.png", plotting.energy_diagram, diagram.epsilon, diagram.energies, title=f"{p['drive']} drive")
    gap, where = st_min_gap(system, eps, p["time"])
    out.diagnostics["min_gap_mhz"] = gap
    out.diagnostics["min_gap_epsilon_ghz"] = where


# -- configuration ----------------------------------------------------------------

@dataclass
class RunConfig:
    experiment: str
    output: str
    seed: int
    workers: int
    plots: bool
    parameters: dict

    def manifest_config(self):
        return {
            "experiment": self.experiment,
            "output": self.output,
            "seed": self.seed,
            "plots": self.plots,
            "parameters": self.parameters,
        }


def load_config(path) -> dict:
    """Read a TOML scenario or the ``config`` block of a run manifest."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config '{path}': {exc.strerror}") from None
    if path.suffix == ".json":
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config '{path}': {exc}") from None
        return data.get("config", data)
    try:
        return tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"config '{path}': {exc}") from None


def _default_workers():
    value = os.environ.get(WORKERS_ENV)
    if value is None:
        return 1
    try:
        n = int(value)
    except ValueError:
        raise ConfigurationError(f"environment variable {WORKERS_ENV} must be an integer, got {value!r}") from None
    if n < 1:
        raise ConfigurationError(f"environment variable {WORKERS_ENV} must be at least 1")
    return n


def resolve_config(data: dict, workers=None, seed=None, out=None) -> RunConfig:
    """Validate a parsed scenario and fill in every default.

    Command-line overrides (``workers``, ``seed``, ``out``) win over the file.
    Raises :class:`ConfigurationError` naming the offending field.
    """
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a table")
    unknown = sorted(set(data) - set(_TOP_LEVEL))
    if unknown:
        raise ConfigurationError(f"unknown top-level field '{unknown[0]}'")
    name = data.get("experiment")
    if name is None:
        raise ConfigurationError("field 'experiment' is required")
    if name not in _REGISTRY:
        raise ConfigurationError(f"field 'experiment': unknown experiment {name!r}; choose from {', '.join(_REGISTRY)}")
    exp = _REGISTRY[name]

    output = out if out is not None else data.get("output", f"{name}_output")
    if not isinstance(output, str) or not output:
        raise ConfigurationError("field 'output' must be a non-empty path")
    seed = seed if seed is not None else data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigurationError("field 'seed' must be a non-negative integer")
    if workers is None:
        workers = data.get("workers", _default_workers())
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise ConfigurationError("field 'workers' must be a positive integer")
    plots = data.get("plots", True)
    if not isinstance(plots, bool):
        raise ConfigurationError("field 'plots' must be true or false")

    given = data.get("parameters", {})
    if not isinstance(given, dict):
        raise ConfigurationError("field 'parameters' must be a table")
    unknown = sorted(set(given) - set(exp.params))
    if unknown:
        raise ConfigurationError(f"parameter '{unknown[0]}' is not used by experiment {name!r}")
    params = {}
    for key, spec in exp.params.items():
        if key in given:
            params[key] = spec.parse(key, given[key])
        else:
            params[key] = spec.parse(key, spec.default) if spec.default is not None else None
    _cross_check(name, params)
    return RunConfig(name, output, seed, workers, plots, params)


def _cross_check(name, p):
    if name == "gate_map" and p["variant"] == "bare" and p["gate"] != "identity":
        raise ConfigurationError("parameter 'gate': the bare variant only provides the identity")
    if name == "gate_map" and p["gate"].startswith(("sqrt_v", "sqrt_w")) and p["variant"] != "sine":
        raise ConfigurationError("parameter 'variant': v and w gates need the sine drive")
    if name in ("st_init", "st_readout"):
        if p["pre_fraction"] < 0 or p["post_fraction"] < 0 or p["pre_fraction"] + p["post_fraction"] >= 1:
            raise ConfigurationError("parameters 'pre_fraction' and 'post_fraction' must be non-negative with sum below 1")
    if name == "two_qubit_map" and p["tensor_points"] < 2:
        raise ConfigurationError("parameter 'tensor_points' must be at least 2")


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def execute(cfg: RunConfig) -> dict:
    """Run a resolved scenario and return its manifest."""
    out_dir = Path(cfg.output)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_test"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"field 'output': cannot write to '{out_dir}': {exc.strerror}") from None
    exp = _REGISTRY[cfg.experiment]
    writer = _Writer(out_dir, cfg.plots)
    params = dict(cfg.parameters)
    log.info("running %s into %s with %d worker(s)", cfg.experiment, out_dir, cfg.workers)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        exp.runner(params, writer, cfg.workers, cfg.seed)
    cfg.parameters = params
    manifest = {
        "smartqubit_version": __version__,
        "config": _jsonable(cfg.manifest_config()),
        "runtime": {"workers": cfg.workers},
        "columns": list(exp.columns),
        "outputs": writer.files,
        "diagnostics": _jsonable(writer.diagnostics),
        "warnings": sorted({str(w.message) for w in caught}),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# -- entry point -----------------------------------------------------------------

def _describe(exp: Experiment, verbose: bool) -> str:
    lines = [f"{exp.name}: {exp.summary}"]
    if verbose:
        lines.append(f"  columns: {', '.join(exp.columns)}")
        if exp.notes:
            lines.append(f"  {exp.notes}")
        lines.append("  parameters (all optional):")
        for key, spec in exp.params.items():
            if spec.default is None:
                default = "(derived)"
            elif isinstance(spec.default, list) and len(spec.default) > 6:
                default = f"({len(spec.default)} entries)"
            else:
                default = json.dumps(spec.default)
            lines.append(f"    {key} = {default}  # {spec.doc}")
    return "\n".join(lines)


def list_experiments(names=None, verbose=False) -> str:
    chosen = names or list(_REGISTRY)
    missing = [n for n in chosen if n not in _REGISTRY]
    if missing:
        raise ConfigurationError(f"unknown experiment {missing[0]!r}")
    return "\n".join(_describe(_REGISTRY[n], verbose or bool(names)) for n in chosen)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="smartqubit",
        description="Simulate SMART-qubit control experiments and export CSV data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario")
    run.add_argument("config", help="TOML scenario or manifest.json from an earlier run")
    run.add_argument("--workers", type=int, help=f"worker threads (default: ${WORKERS_ENV} or 1)")
    run.add_argument("--seed", type=int, help="random seed for optimiser restarts")
    run.add_argument("--out", help="output directory")
    run.add_argument("--no-plots", action="store_true", help="skip PNG rendering")

    val = sub.add_parser("validate", help="check a scenario and print the resolved configuration")
    val.add_argument("config")

    lst = sub.add_parser(
        "list",
        help="list experiments",
        description="List experiments.  Name one or more to see their parameters and CSV columns. " + _RAMP_DOC,
    )
    lst.add_argument("names", nargs="*", help="experiments to describe in detail")
    lst.add_argument("--long", action="store_true", help="describe every experiment")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        if args.command == "list":
            print(list_experiments(args.names, args.long))
            return EXIT_OK
        data = load_config(args.config)
        if args.command == "validate":
            cfg = resolve_config(data)
            print(json.dumps(_jsonable(cfg.manifest_config()), indent=2, sort_keys=True))
            return EXIT_OK
        cfg = resolve_config(data, args.workers, args.seed, args.out)
        if args.no_plots:
            cfg.plots = False
        manifest = execute(cfg)
    except (ConfigurationError, DomainError) as exc:
        print(f"smartqubit: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"smartqubit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SmartQubitError as exc:
        print(f"smartqubit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {', '.join(manifest['outputs'])} and manifest.json to {cfg.output}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
