"""Simulation of SMART qubits: globally driven spins with local Stark-shift control.

Units throughout: frequencies and Hamiltonian coefficients in MHz, times in
microseconds.  Charge detuning and tunnel coupling of the singlet-triplet
model are in GHz.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DomainError,
    EvaluationError,
    OptimizationError,
    SmartQubitError,
    TruncationWarning,
)
from .numerics import (
    HamiltonianSpec,
    PropagationConfig,
    Term,
    fidelity,
    propagate,
    rotation,
    unitarity_error,
)
from .model import (
    NoiseOffset,
    QubitFrameSpec,
    Waveform,
    build_hamiltonian,
    constant_envelope,
    local_control_term,
    smart_envelope,
    xy_control,
)
from .geometry import (
    bessel_j0_zero,
    filter_function,
    magnus_first_order,
    magnus_report,
    optimal_mod_frequency,
    projected_areas,
    space_curve,
)
from .gates import (
    ControlProgram,
    RotationDecomposition,
    axis_maps,
    build_gate,
    extract_rotation,
    gate_target,
    grape_optimize,
    rotation_efficiency,
)
from .noisemaps import (
    FidelityGrid,
    NoiseLevelMap,
    detuning_half_width,
    gaussian_average,
    monte_carlo_average,
    noise_level_map,
    offset_fidelity_map,
    offset_fidelity_tensor,
    two_qubit_noise_average,
)
from .twoqubit import (
    RampSpec,
    STSystem,
    TwoQubitProgram,
    compose_cnot,
    compose_cnot_x,
    ramp_initialisation,
    ramp_readout,
    sqrt_swap_program,
    st_energy_diagram,
    st_min_gap,
)
