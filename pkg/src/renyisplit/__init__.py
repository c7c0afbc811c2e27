"""Renyi-entropy splitting in perturbed toric codes and Ising chains.

Exact diagonalization of small tori, closed-form loop-gas entropies,
free-fermion chains and the finite-difference splitting analysis.
"""

from .ed import (
    CapExceeded,
    ConvergenceFailure,
    GroundSpace,
    SectorAmbiguous,
    expectation,
    ground_space,
    ground_space_dense,
    select_sector,
)
from .entanglement import EntanglementSpectrum, renyi, renyi_value, schmidt_rank, schmidt_spectrum
from .lattice import (
    LatticeGeometry,
    Region,
    build_cylinder,
    build_torus,
    horizontal_loops,
    region_half,
    region_star,
    region_star_plaquette,
    wilson_loops,
)
from .loopgas import CCModel, cc_state_vector, enumerate_group, exact_spectrum, renyi_exact
from .pauli import OperatorSum, PauliString, PerturbationSpec, build_model, toric_code
from .sweep import (
    DEFAULT_ALPHAS,
    ParameterPath,
    SolverConfig,
    SweepGrid,
    SweepResult,
    derivatives,
    detect_splitting,
    run_sweep,
)

__version__ = "0.1.0"
