"""Exact-diagonalization toolkit for quantum Pontus-Mpemba protocols on
disordered spin chains: operator construction, tilted-state preparation,
real/imaginary-time evolution, the observable suite, spectral diagnostics,
and seeded disorder-ensemble sweeps."""

from .diagnostics import (
    LevelStatistics,
    ground_state_census,
    half_filling_r,
    level_spacing_ratios,
    spectrum_statistics,
)
from .ensemble import (
    EnsembleSeries,
    EnsembleSpec,
    ProtocolSpec,
    StageSpec,
    find_series,
    run_ensemble,
    run_ensemble_batch,
    sample_fields,
    series_difference,
)
from .evolution import (
    ProtocolStage,
    SpectralDecomposition,
    propagate_imag,
    propagate_real,
    run_protocol,
    spectral_decompose,
)
from .hilbert import (
    ChargeSector,
    ModelParams,
    build_charge_operator,
    build_hamiltonian,
    build_rotation,
    build_transformed_hamiltonian,
    charge_diagonal,
    charge_sectors,
    parity_sectors,
)
from .observables import (
    OverlapHistogram,
    charge_sector_probs,
    charge_variance,
    eigenstate_overlap_hist,
    energy_expectation,
    entanglement_asymmetry,
    partial_trace,
    symmetry_resolved_rdm,
    von_neumann_entropy,
)
from .states import tilted_ferromagnet, tilted_neel

__version__ = "0.1.0"
