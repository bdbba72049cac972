"""Multi-tone global drives for fast multi-qubit entangling gates in trapped-ion chains."""

__version__ = "0.1.0"

from .constraints import build_constraints
from .drive import AmplitudeVector, ToneBasis, explicit_basis, harmonic_basis
from .fidelity import evaluate, unitary_fidelity_exact
from .phase_forms import phase_forms, reduced_forms, trajectories
from .pipeline import design_gate, ms_baseline
from .solver import SolverOptions, optimize
from .targets import builtin_target, ideal_phases
from .trap_modes import IonChainModes, TrapModel, normal_modes

__all__ = [
    "AmplitudeVector",
    "IonChainModes",
    "SolverOptions",
    "ToneBasis",
    "TrapModel",
    "build_constraints",
    "builtin_target",
    "design_gate",
    "evaluate",
    "explicit_basis",
    "harmonic_basis",
    "ideal_phases",
    "ms_baseline",
    "normal_modes",
    "optimize",
    "phase_forms",
    "reduced_forms",
    "trajectories",
    "unitary_fidelity_exact",
]
