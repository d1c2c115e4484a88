"""Branching random walk on Z in a random killing environment with one source.

Modules: ``env`` (environments and potential), ``spectral`` (truncated
operator, top eigenvalue), ``paths`` (path expansion, path counts),
``criteria`` (closed-form criteria), ``probability`` (Monte Carlo estimate
and bounds), ``evolver`` (first-moment equation), ``brw_sim`` (particle
simulation) and ``cli``.
"""

from .env import (EnvironmentSpec, EnvironmentWindow, MuDistribution, constant_environment,
                  island_environment, potential, sample_environment, two_point_environment)
from .errors import (ConfigurationError, ConsistencyError, ConvergenceError, DomainError,
                     NumericError, StabilityError, TruncationError, UndefinedRateError)
from .spectral import (EigenReport, TridiagonalOperator, build_hamiltonian, eigen_report,
                       eigenfunction, has_positive_eigenvalue, spectrum_envelope_check,
                       top_eigenvalue)

__version__ = "0.1.0"
