"""Worst-case spectral and coherent risk under mean/standard-deviation ambiguity."""

from .errors import (
    CertificateError,
    InfeasibleError,
    InputError,
    InvalidSpectrumError,
    NonAttainmentError,
    UnboundedError,
    WCRiskError,
)
from .measures import EmpiricalDistribution, acerbi_minimize, cvar, spectral_risk
from .moments import MomentMatrixPair, MomentPair
from .portfolio import Polytope, RobustSolution, frontier, robust_objective, schur_certificate, solve, solve_polytopic
from .spectra import CVaR, Exponential, PiecewiseConstant, Power, SpectrumSet, l2_norm_sq, uniform
from .worstcase import dual_certificate, extremal_distribution, wc_var_cvar, wclicrm, wcsrm

__version__ = "0.1.0"
