"""Time-dependent acoustic scattering by many small sound-soft obstacles.

Three asymptotic models (Galerkin Foldy-Lax, simplified capacitance-sphere
model, Born) and a reference Galerkin boundary element solver, all
discretized in time by convolution quadrature.
"""

from .cq import CQGrid, TimeSeries, cq_convolve_solve
from .errors import (AssemblyError, ConfigError, DomainError, MeshError, NumericHealthError, SmallscatError,
                     SolverError)
from .geometry import Obstacle, Scene, TriangleMesh, ellipsoid, icosphere, load_mesh, save_mesh
from .incident import IncidentField, modulated_gaussian, sigmoid_sine
from .laplace_bem import EquilibriumData, scale_equilibrium, solve_equilibrium
from .models import CapacitanceSummary, make_transfer

__version__ = "0.1.0"
