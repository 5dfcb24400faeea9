"""Numerical scattering amplitudes for charged infraparticles in the 2d
massless scalar free field.

Modules
-------
testfn       test functions, time-smearing kernel, correlations
quadrature   adaptive Gauss-Legendre rules with singular-line grading
kernel       regularized two-point function and its momentum-space oracles
weyl         vacuum expectation values of Wick-ordered exponentials
asymptotics  logarithm limit and large-translation checks
scattering   finite-T amplitude, extrapolation, neutrality decay
cli          command-line front end
"""

__version__ = "0.1.0"

from .testfn import (TestFunction, Vector2, SmearingKernel, GridSpec, radial_bump, product_bump,
                     mirrored_difference, charge, normalize_to_charge, translate, boost, correlate)
from .quadrature import QuadSpec, QuadratureWarning
from .kernel import (KernelParams, Regulator, w_reg_point, w_chiral_point, commutator_point,
                     smeared_kernel, spectral_I, fit_mu, spectral_smeared_oracle)
from .weyl import WeylFactor, WeylWord, log_pair_vev, vev
from .scattering import (CollisionConfig, AmplitudeSeries, build_factors, s_T, extrapolate,
                         amplitude_series, neutrality_decay)
