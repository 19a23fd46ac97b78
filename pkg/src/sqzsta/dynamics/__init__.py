"""Forward simulators used to verify designed protocols."""
from .gaussian import MomentRun, evolve_covariance
from .ion import IonModelSpec, IonRun, detuning_sweep, effective_model, full_ion_model
from .master import (
    TRAJECTORY_COLUMNS,
    GaussianAnchor,
    LinearForm,
    MasterEquationSpec,
    MasterRun,
    NormalizedSandwich,
    PositionDephasing,
    QuadForm,
    QuadraticHamiltonian,
    RamanPair,
    ThermalModeForm,
    integrate_master,
    trajectory_table,
)
from .stochastic import EnsembleRun, StochasticRunSpec, ensemble_average, stochastic_trajectory
