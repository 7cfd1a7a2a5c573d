"""Simulation and analysis of type-0 photon-pair generation in periodically poled MgO:LiNbO3."""

__version__ = "0.1.0"

from .config import RunConfig, default_config, load_config
from .crystal import CrystalConfig, SellmeierSet, grating_wavevector, refractive_index, wavenumber
from .errors import (
    AnalysisError,
    ConfigError,
    DomainError,
    EvanescentError,
    ResolutionError,
    SolverError,
    SPDCError,
)
from .field import PumpBeam, TransverseGrid, biphoton_matrix, farfield_radial_profile, nearfield_matrix
from .phasematch import (
    PumpSpec,
    collinear_mismatch,
    degeneracy_temperature,
    emission_angle,
    idler_wavelength,
    ring_wavevector,
    spectral_density,
    tuning_curve,
)
from .schmidt import schmidt_from_intensities, schmidt_svd, schmidt_sweep
