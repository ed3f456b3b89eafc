"""Candidate minimal spectral k-partitions of planar domains.

Three construction routes: relaxed-density gradient descent on a p-norm of
the cells' first Dirichlet eigenvalues, the same descent with an
eigenvalue-equalizing penalty, and nodal partitions of mixed
Dirichlet-Neumann problems on symmetry-reduced subdomains.  Closed-form
spectra of the square, disk and equilateral triangle serve as references.
"""

__version__ = "0.1.0"

from .grids import DomainSpec, GridMask, ScalarField, SubGridWindow, build_mask
from .eigensolve import EigenPair, SparseOperator, smallest_eigenpairs
from .optimizer import DensitySet, OptimizeConfig, OptimizeResult, optimize
from .extract import EnergyReport, PartitionGeometry, energy_report
from .mixed import MixedProblemSpec, solve_touch, symmetrize
from .mixed_catalog import builtin_specs, get_spec

__all__ = [
    "DomainSpec", "GridMask", "ScalarField", "SubGridWindow", "build_mask",
    "EigenPair", "SparseOperator", "smallest_eigenpairs",
    "DensitySet", "OptimizeConfig", "OptimizeResult", "optimize",
    "EnergyReport", "PartitionGeometry", "energy_report",
    "MixedProblemSpec", "solve_touch", "symmetrize",
    "builtin_specs", "get_spec", "__version__",
]
