"""Single-photon input-output processes on low-Q atom-cavity nodes."""

from .cavity_io import (
    CavityParams,
    ReflectionResult,
    SweepTable,
    faraday_rotation,
    reflection_empty,
    reflection_with_atom,
    sweep_reflection,
)
from .efficiency import LossBudget, SuccessStats, expected_time, monte_carlo_time, success_probability
from .polarization import PolarizationState, StokesVector, TwoPhotonState, hwp_circ, hwp_diag, qwp, stokes
from .protocol import (
    CorrectionTable,
    MeasurementRecord,
    PhaseModel,
    SystemState,
    convert_to_photons,
    detect_photon,
    entangle_pair,
    entangle_three,
    fidelity,
    hadamard_atom,
    measure_atom_z,
    scatter,
    transfer_atom_to_atom,
    transfer_photon_to_atom,
)

__version__ = "0.1.0"
