"""Squeezed thermal states of a trapped particle: parametrization, control design and verification."""
from . import dynamics, fock, io, protocols, raman, trap
from .errors import *  # noqa: F401,F403
from .fock import DensityMatrix, UnitSystem, fidelity, squeezed_thermal_state, thermal_state
from .protocols import ProtocolSpec, design, verify
from .raman import RamanLaserConfig, invert_controls, jc_invert_controls, quintic_flow
from .squeezed import (
    FactorizedForm,
    GaussianMoments,
    SqueezeParams,
    factorize,
    gaussian_fidelity,
    unfactorize,
    variance_map,
    wigner,
)
from .trap import control_frequency_closed, control_open, ermakov_residual, make_quintic

__version__ = io.VERSION
