import warnings

import numpy as np
import pytest

from smartqubit.errors import DomainError, TruncationWarning
from smartqubit.gates import build_gate
from smartqubit.model import NoiseOffset
from smartqubit.noisemaps import (
    FidelityGrid,
    detuning_half_width,
    gaussian_average,
    monte_carlo_average,
    noise_level_map,
    offset_fidelity_map,
    offset_fidelity_tensor,
    two_qubit_noise_average,
)
from smartqubit.numerics import PropagationConfig
from smartqubit.twoqubit import sqrt_swap_program

NU = np.linspace(-1.0, 1.0, 41)
OM = np.linspace(-0.5, 0.5, 21)
CFG = PropagationConfig(64)


@pytest.fixture(scope="module")
def smart_identity():
    return offset_fidelity_map(build_gate("identity", 2), NU, OM, CFG)


def _quadratic_grid(a=0.3, b=0.8):
    nu = np.linspace(-2.0, 2.0, 201)
    om = np.linspace(-1.0, 1.0, 101)
    values = 1 - a * nu[:, None] ** 2 - b * om[None, :] ** 2
    return FidelityGrid(nu, om, values, "quadratic")


def test_zero_noise_returns_origin_value(smart_identity):
    assert gaussian_average(smart_identity, 0.0, 0.0) == smart_identity.at_origin()
    assert smart_identity.at_origin() == pytest.approx(1.0, abs=1e-12)


def test_average_of_constant_is_constant():
    grid = FidelityGrid(NU, OM, np.full((NU.size, OM.size), 0.83))
    assert gaussian_average(grid, 0.2, 0.1) == pytest.approx(0.83, abs=1e-14)


def test_quadratic_average_matches_variance():
    # E[1 - a x^2 - b y^2] = 1 - a sx^2 - b sy^2
    grid = _quadratic_grid()
    assert gaussian_average(grid, 0.3, 0.1) == pytest.approx(1 - 0.3 * 0.09 - 0.8 * 0.01, abs=1e-6)
    m = noise_level_map(grid, [0.0, 0.3], [0.0, 0.1])
    np.testing.assert_allclose(m.values, [[1.0, 0.992], [1 - 0.027, 1 - 0.035]], atol=1e-6)
    np.testing.assert_allclose(m.infidelity, 1 - m.values)


def test_off_node_zero_interpolates():
    grid = FidelityGrid(np.array([-0.5, 0.5]), np.array([0.0]), np.array([[0.2], [0.6]]))
    assert gaussian_average(grid, 0.0, 0.0) == pytest.approx(0.4)


def test_truncation_warning():
    grid = _quadratic_grid()
    with pytest.warns(TruncationWarning):
        gaussian_average(grid, 1.5, 0.0)
    with pytest.warns(TruncationWarning):
        m = noise_level_map(grid, [0.1, 1.5], [0.0])
    assert m.truncated.tolist() == [[False], [True]]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gaussian_average(grid, 0.5, 0.25)


def test_smart_identity_degrades_with_detuning_noise(smart_identity):
    m = noise_level_map(smart_identity, np.linspace(0, 0.25, 6), [0.0])
    assert np.all(np.diff(m.values[:, 0]) < 0)


def test_half_width_ordering():
    grids = {v: offset_fidelity_map(build_gate("identity", 7, v), NU, [0.0], CFG) for v in ("bare", "dressed", "sine")}
    widths = {v: detuning_half_width(g) for v, g in grids.items()}
    assert widths["sine"] > widths["dressed"] > widths["bare"] > 0


def test_half_width_interpolates_crossing():
    x = np.linspace(-1, 1, 5)
    grid = FidelityGrid(x, np.array([0.0]), (1 - x**2)[:, None])
    # nodes 0 and 0.5 hold 1 and 0.75; the chord crosses 0.9 at 0.4 of the way
    assert detuning_half_width(grid, 0.9) == pytest.approx(0.2)
    assert detuning_half_width(grid, 0.0) == pytest.approx(1.0)
    assert detuning_half_width(grid, 1.5) == 0.0


def test_worker_count_does_not_change_values():
    prog = build_gate("sqrt_x", 1)
    a = offset_fidelity_map(prog, NU, OM, CFG, workers=1)
    b = offset_fidelity_map(prog, NU, OM, CFG, workers=4)
    np.testing.assert_array_equal(a.values, b.values)


def test_grid_matches_single_offset_runs():
    prog = build_gate("sqrt_y", 1)
    grid = offset_fidelity_map(prog, NU, OM, CFG)
    for i, j in ((3, 4), (20, 10), (37, 19)):
        f = prog.fidelity(NoiseOffset(NU[i], OM[j]), CFG)
        assert grid.values[i, j] == pytest.approx(f, abs=1e-12)


@pytest.mark.parametrize(
    "nu, om",
    [
        ([], [0.0]),
        ([-1.0, 0.5], [0.0]),
        ([0.5, -0.5], [0.0]),
        ([0.0], [-1.0, 0.0, 1.0]),
    ],
)
def test_axis_validation(nu, om):
    with pytest.raises(DomainError):
        offset_fidelity_map(build_gate("identity", 1), nu, om)


def test_negative_sigma_rejected(smart_identity):
    with pytest.raises(DomainError):
        gaussian_average(smart_identity, -0.1, 0.0)
    with pytest.raises(DomainError):
        noise_level_map(smart_identity, [], [0.0])


def test_monte_carlo_agrees_with_grid_average():
    prog = build_gate("identity", 2)
    nu = np.linspace(-0.6, 0.6, 61)
    om = np.linspace(-0.3, 0.3, 31)
    grid = offset_fidelity_map(prog, nu, om, CFG)
    ref = gaussian_average(grid, 0.1, 0.05)
    mean, se = monte_carlo_average(prog, 0.1, 0.05, n_draws=4000, seed=3, cfg=CFG)
    assert abs(mean - ref) < 4 * se


def test_monte_carlo_is_seeded():
    prog = build_gate("identity", 1)
    a = monte_carlo_average(prog, 0.1, 0.05, n_draws=300, seed=9, cfg=CFG)
    assert a == monte_carlo_average(prog, 0.1, 0.05, n_draws=300, seed=9, cfg=CFG)


def test_two_qubit_tensor_average():
    prog = sqrt_swap_program()
    axis_nu, axis_om = np.linspace(-0.2, 0.2, 5), np.linspace(-0.1, 0.1, 3)
    tensor = offset_fidelity_tensor(prog, axis_nu, axis_om, CFG)
    assert tensor.values.shape == (5, 5, 3, 3)
    assert two_qubit_noise_average(tensor, 0.0, 0.0) == pytest.approx(tensor.values[2, 2, 1, 1])
    # the diagonal of the tensor is the correlated grid
    grid = offset_fidelity_map(prog, axis_nu, axis_om, CFG)
    diag = tensor.values[np.arange(5), np.arange(5)][:, np.arange(3), np.arange(3)]
    np.testing.assert_allclose(diag, grid.values, atol=1e-12)
    avg = two_qubit_noise_average(tensor, 0.05, 0.02)
    assert tensor.values.min() <= avg <= tensor.values[2, 2, 1, 1]
