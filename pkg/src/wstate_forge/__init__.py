"""wstate_forge: design and verification of single-step W-state Hamiltonians."""

__version__ = "0.1.0"

from .spectral import (
    ReconstructionError,
    TridiagonalHamiltonian,
    antisymmetric_spectral_data,
    krawtchouk_hamiltonian,
    mirror_symmetric_weights,
    reconstruct_tridiagonal,
    resonant_spectrum,
    spectral_data,
    symmetric_spectrum,
)
from .dynamics import (
    NoiseModel,
    PopulationTrace,
    evolve_lindblad,
    evolve_unitary,
    phase_align,
    propagator,
    resonant_w3_time,
    state_to_density,
    three_qubit_half_period_detunings,
    three_qubit_hamiltonian,
    three_qubit_period,
)
from .lattice import (
    DetuningError,
    FluxError,
    LatticeGraph,
    LayerError,
    LayerPartition,
    chain_graph,
    cycle_phase_sums,
    gauge_fix,
    graph_hamiltonian,
    grid_graph,
    heavy_hex_graph,
    kron_sum,
    layer_reduce,
    lift_layer_state,
    onsite_from_detunings,
)
from .designer import (
    DesignProblem,
    GridSolution,
    SolutionRecord,
    design_chain,
    design_grid,
    design_heavy_hex,
    enumerate_solutions,
    infidelity_objective,
    krawtchouk_scan,
    objective_gradient,
    refine_exact,
    symmetry_expand,
    symmetry_reduce,
)
from .metrics import (
    BoundResult,
    RobustnessReport,
    ScalingModel,
    WitnessResult,
    biseparable_bound,
    circuit_lower_bound,
    delocalization,
    robustness_mc,
    w_fidelity,
    w_state,
    witness_fidelity,
    witness_tailored,
)

__all__ = [
    "ReconstructionError",
    "TridiagonalHamiltonian",
    "antisymmetric_spectral_data",
    "krawtchouk_hamiltonian",
    "mirror_symmetric_weights",
    "reconstruct_tridiagonal",
    "resonant_spectrum",
    "spectral_data",
    "symmetric_spectrum",
    "NoiseModel",
    "PopulationTrace",
    "evolve_lindblad",
    "evolve_unitary",
    "phase_align",
    "propagator",
    "resonant_w3_time",
    "state_to_density",
    "three_qubit_half_period_detunings",
    "three_qubit_hamiltonian",
    "three_qubit_period",
    "DetuningError",
    "FluxError",
    "LatticeGraph",
    "LayerError",
    "LayerPartition",
    "chain_graph",
    "cycle_phase_sums",
    "gauge_fix",
    "graph_hamiltonian",
    "grid_graph",
    "heavy_hex_graph",
    "kron_sum",
    "layer_reduce",
    "lift_layer_state",
    "onsite_from_detunings",
    "DesignProblem",
    "GridSolution",
    "SolutionRecord",
    "design_chain",
    "design_grid",
    "design_heavy_hex",
    "enumerate_solutions",
    "infidelity_objective",
    "krawtchouk_scan",
    "objective_gradient",
    "refine_exact",
    "symmetry_expand",
    "symmetry_reduce",
    "BoundResult",
    "RobustnessReport",
    "ScalingModel",
    "WitnessResult",
    "biseparable_bound",
    "circuit_lower_bound",
    "delocalization",
    "robustness_mc",
    "w_fidelity",
    "w_state",
    "witness_fidelity",
    "witness_tailored",
]
