"""Figure rendering for CLI experiment outputs.

Every function takes the arrays an experiment produced and writes one PNG.
The Agg backend is selected on import so rendering never needs a display.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}

_FLOOR = 1e-16


def _log_infidelity(fidelity):
    return np.log10(np.clip(1.0 - np.asarray(fidelity, dtype=float), _FLOOR, None))


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def _edges(axis):
    axis = np.asarray(axis, dtype=float)
    if axis.size == 1:
        return np.array([axis[0] - 0.5, axis[0] + 0.5])
    mid = 0.5 * (axis[1:] + axis[:-1])
    return np.concatenate(([2 * axis[0] - mid[0]], mid, [2 * axis[-1] - mid[-1]]))


def _heatmap(ax, x, y, values, label, cmap="viridis", **kw):
    mesh = ax.pcolormesh(_edges(x), _edges(y), np.asarray(values).T, cmap=cmap, shading="flat", **kw)
    ax.figure.colorbar(mesh, ax=ax, label=label)
    return mesh


def fidelity_map(path, nu_axis, omega_axis, fidelity, sigma_nu=None, sigma_omega=None, averaged=None, title=""):
    """Offset fidelity (linear and log infidelity) plus the noise-averaged map."""
    with plt.rc_context(_STYLE):
        n = 3 if averaged is not None else 2
        fig, axes = plt.subplots(1, n, figsize=(4.4 * n, 3.6), layout="constrained")
        _heatmap(axes[0], nu_axis, omega_axis, fidelity, "fidelity", vmin=0.0, vmax=1.0)
        axes[0].set_title("fidelity")
        _heatmap(axes[1], nu_axis, omega_axis, _log_infidelity(fidelity), "log10(1 - F)", cmap="magma")
        axes[1].set_title("infidelity")
        for ax in axes[:2]:
            ax.set_xlabel("delta nu (MHz)")
            ax.set_ylabel("delta Omega / Omega_R")
        if averaged is not None:
            _heatmap(axes[2], sigma_nu, sigma_omega, _log_infidelity(averaged), "log10(1 - F avg)", cmap="magma")
            axes[2].set_xlabel("sigma nu (MHz)")
            axes[2].set_ylabel("sigma Omega / Omega_R")
            axes[2].set_title("Gaussian average")
        if title:
            fig.suptitle(title)
        return _save(fig, path)


def axis_map(path, nu_axis, phi_axis, chi, phi_r, theta_r, eta, title=""):
    """Rotation angle, axis angles and efficiency over amplitude and phase."""
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(2, 2, figsize=(8.8, 7.0), layout="constrained")
        panels = ((chi, "chi (rad)"), (phi_r, "phi_r (rad)"), (theta_r, "theta_r (rad)"), (eta, "eta (%)"))
        for ax, (values, label) in zip(axes.flat, panels):
            _heatmap(ax, nu_axis, phi_axis, values, label, cmap="twilight" if "phi" in label else "viridis")
            ax.set_xlabel("nu (MHz)")
            ax.set_ylabel("phi_mod (rad)")
        if title:
            fig.suptitle(title)
        return _save(fig, path)


def space_curve(path, points, title=""):
    """Three-dimensional noise space curve with its start marked."""
    points = np.asarray(points)
    with plt.rc_context(_STYLE):
        fig = plt.figure(figsize=(4.4, 4.0))
        ax = fig.add_subplot(projection="3d")
        ax.plot(points[:, 0], points[:, 1], points[:, 2], lw=1.2)
        ax.scatter(*points[0], color="k", s=12)
        ax.set_xlabel("x (us)")
        ax.set_ylabel("y (us)")
        ax.set_zlabel("z (us)")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def filter_function(path, freqs, response, title=""):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.8, 3.2))
        ax.plot(freqs, response, lw=1.2)
        ax.set_xlabel("noise frequency (MHz)")
        ax.set_ylabel("first-order susceptibility")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def grape_table(path, rows, title=""):
    """Coefficient pairs against the number of periods, one line per gate."""
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(8.4, 3.2), sharex=True, layout="constrained")
        for gate in dict.fromkeys(r[0] for r in rows):
            sel = [r for r in rows if r[0] == gate]
            n = [r[1] for r in sel]
            axes[0].plot(n, [r[2] for r in sel], "o-", label=gate)
            axes[1].plot(n, [r[3] for r in sel], "o-", label=gate)
        axes[0].set_ylabel("nu_v (MHz)")
        axes[1].set_ylabel("nu_w (MHz)")
        for ax in axes:
            ax.set_xlabel("periods")
        axes[0].legend()
        if title:
            fig.suptitle(title)
        return _save(fig, path)


def ramp_populations(path, ramp_times, p_s11, p_s02, title=""):
    """Worst and mean populations over offsets against ramp time."""
    p_s11 = np.asarray(p_s11)
    p_s02 = np.asarray(p_s02)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.8, 3.2))
        ax.semilogx(ramp_times, p_s11.min(axis=0), "o-", label="P(S11) worst")
        ax.semilogx(ramp_times, p_s11.mean(axis=0), "--", label="P(S11) mean")
        ax.semilogx(ramp_times, p_s02.max(axis=0), "s-", label="P(S02) worst")
        ax.axhline(0.99, color="0.5", lw=0.8)
        ax.set_xlabel("ramp time (us)")
        ax.set_ylabel("population")
        ax.legend()
        if title:
            ax.set_title(title)
        return _save(fig, path)


def energy_diagram(path, eps, energies, zoom=5.0, title=""):
    """Full spectrum and a close-up of the spin levels within ``+-zoom`` MHz."""
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(8.4, 3.4), layout="constrained")
        for ax in axes:
            ax.plot(eps, energies, lw=1.0)
            ax.set_xlabel("epsilon (GHz)")
            ax.set_ylabel("energy (MHz)")
        axes[1].set_ylim(-zoom, zoom)
        axes[0].set_title("charge states")
        axes[1].set_title("spin states")
        if title:
            fig.suptitle(title)
        return _save(fig, path)
