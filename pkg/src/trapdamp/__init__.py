"""Switchable axial damping circuit and QND cyclotron lineshapes for a trapped electron.

Modules:

* :mod:`trapdamp.circuit` -- tank impedance, resonance characterization, switch suppression
* :mod:`trapdamp.particle` -- axial coupling, damping and time-domain dynamics
* :mod:`trapdamp.spectra` -- Johnson-noise dips and shunt-through transmission
* :mod:`trapdamp.quantum` -- level arithmetic and lineshape models
* :mod:`trapdamp.inference` -- Lorentzian and switch-model fits, c_tuning design scan
* :mod:`trapdamp.cli` -- command-line front end
"""
from ._kernels import BACKEND
from .circuit import CircuitParams, HemtModel, ImpedanceTrace, ResonanceSummary, SwitchState
from .errors import (
    AnalysisError,
    ConfigError,
    CoverageError,
    DomainError,
    FitError,
    InvalidParameterError,
    SingularityError,
    TrapdampError,
)
from .inference import DesignConstraints, FitResult, SwitchMeasurement
from .particle import AxialMode, DriveForce, ParticleEnsemble, TrapGeometry
from .quantum import BottleParams, Lineshape, ModeFrequencies, QuantumState
from .spectra import SourceImpedance, Spectrum, TransmissionTrace

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AnalysisError",
    "AxialMode",
    "BottleParams",
    "CircuitParams",
    "ConfigError",
    "CoverageError",
    "DesignConstraints",
    "DomainError",
    "DriveForce",
    "FitError",
    "FitResult",
    "HemtModel",
    "ImpedanceTrace",
    "InvalidParameterError",
    "Lineshape",
    "ModeFrequencies",
    "ParticleEnsemble",
    "QuantumState",
    "ResonanceSummary",
    "SingularityError",
    "SourceImpedance",
    "Spectrum",
    "SwitchMeasurement",
    "SwitchState",
    "TransmissionTrace",
    "TrapGeometry",
    "TrapdampError",
    "__version__",
]
