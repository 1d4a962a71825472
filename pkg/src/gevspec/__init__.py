"""Numerical toolkit for spectra and pseudospectra of quantized 1-D symbols.

Modules: symbols (model catalog), quantize (matrix assembly and inversion),
spectral (eigenvalues and sigma_min sweeps), geometry (flows, escape
functions, deformations), fbi (Gaussian-phase transform and weighted
estimates), experiments (h-sweeps, fits, CLI).
"""

from .symbols import (ANALYTIC, GevreySymbol, ModelInstance, gevrey_flat,
                      make_analytic_transport, make_davies,
                      make_gevrey_transport, make_trapped_toy, model_from_tag,
                      taylor_extension)
from .quantize import (RealGrid, WeylMatrix, assemble_weyl, compose_and_extract,
                       inverse_weyl, load_weyl, required_n_points, save_weyl)
from .spectral import (PseudospectrumField, SpectrumResult, ZGrid, eigenvalues,
                       pseudospectrum, resolvent_norm, sigma_min,
                       spectrum_free_radius)
from .geometry import (DeformationCheck, EscapeField, Trajectory, build_escape,
                       check_deformed_ellipticity, flow, nontrapping_check)
from .fbi import (BargmannWeight, ComplexGrid, FBIOperator, egorov_conjugate,
                  elliptic_residual, gaussian_state, make_fbi,
                  toeplitz_residual, weight_phi_t)
from .experiments import (FitResult, SweepConfig, SweepRecord, fit_power_law,
                          parse_config, resolvent_growth_check, run_sweep)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
