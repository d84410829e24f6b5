"""Option pricing when the no-arbitrage assumption is replaced by an
endogenous stochastic arbitrage bubble riding the same Brownian motion as
the underlying asset.

The package provides closed-form asymptotic call prices, a propagator
quadrature for generic payoffs, finite-difference solvers for the full
two-factor equation and its reductions, and a Monte Carlo engine with a
Feynman-Kac pricing oracle.  Hot kernels run from a compiled extension when
available, with a bit-identical pure-python fallback.
"""
from ._kernels import DEFAULT_BACKEND, available_backends, get_backend
from .closedform import (AlphaPair, alphas_for, bs_reference, discount_factor,
                         norm_cdf, price_bond, price_call, psi_call)
from .errors import (ArbubbleError, DomainError, InstabilityDetected,
                     NonIntegrablePayoff, SingularBand, TooFewPaths,
                     Unsupported)
from .model import (Contract, DeterministicBubble, GaussianBubble,
                    GenericBubble, LognormalBubble, MarketParams, Regime,
                    RegimeThresholds, bubble_coefficients, call_contract,
                    classify_regime, default_eps_sing, effective_f_drift,
                    potential_v)
from .montecarlo import (PathBundle, ResidualStats, RngSpec,
                         feynman_kac_price, replication_residual, simulate)
from .pde import (ChartSurface, Grid1D, Grid2D, GridChart, PriceSurface,
                  Surface1D, read_surface_csv, reduction_check_gamma0,
                  solve_asymptotic, solve_deterministic, solve_full)
from .quadrature import QuadratureSpec, price_generic, propagator
from .transforms import (GaussCoords, LognCoords, f0_gaussian, f0_lognormal,
                         f_of_gauss_coords, f_of_logn_coords, gauss_forward,
                         gauss_inverse, logn_forward, logn_inverse)

__version__ = "0.1.0"

__all__ = [
    "AlphaPair", "ArbubbleError", "ChartSurface", "Contract",
    "DEFAULT_BACKEND", "DeterministicBubble", "DomainError", "GaussCoords",
    "GaussianBubble", "GenericBubble", "Grid1D", "Grid2D", "GridChart",
    "InstabilityDetected", "LognCoords", "LognormalBubble", "MarketParams",
    "NonIntegrablePayoff", "PathBundle", "PriceSurface", "QuadratureSpec",
    "Regime", "RegimeThresholds", "ResidualStats", "RngSpec", "SingularBand",
    "Surface1D", "TooFewPaths", "Unsupported", "alphas_for",
    "available_backends", "bs_reference", "bubble_coefficients",
    "call_contract", "classify_regime", "default_eps_sing", "discount_factor",
    "effective_f_drift", "f0_gaussian", "f0_lognormal", "f_of_gauss_coords",
    "f_of_logn_coords", "feynman_kac_price", "gauss_forward", "gauss_inverse",
    "get_backend", "logn_forward", "logn_inverse", "norm_cdf", "potential_v",
    "price_bond", "price_call", "price_generic", "propagator", "psi_call",
    "read_surface_csv", "reduction_check_gamma0", "replication_residual",
    "simulate", "solve_asymptotic", "solve_deterministic", "solve_full",
]
