"""Stability of quantum statistical ensembles under local projective measurements.

Exact-diagonalization toolkit for a periodic spin-1/2 XYZ chain: ensemble
construction in the energy eigenbasis, projective single-spin measurements
with free evolution in between, and distribution-distance stability measures.
"""

from .chain import (
    DEFAULT_COUPLINGS,
    ChainSpec,
    LocalSpinOperator,
    axis_vector,
    build_hamiltonian,
    local_spin_operator,
)
from .ensemble import (
    BinnedDistribution,
    DistributionMoments,
    EnergyDistribution,
    EnsembleSpec,
    bin_distribution,
    canonical_weights,
    ensemble_weights,
    mixture_weights,
    moments,
    nn_zz_correlation,
)
from .measurement import (
    MeasurementEvent,
    Projector,
    ProjectorSpec,
    ProtocolSpec,
    QuantumState,
    collapse,
    draw_protocol,
    energy_distribution,
    free_evolve,
    initialize_state,
    make_projector,
    outcome_probability,
    split,
)
from .metrics import (
    StabilityTrace,
    delta_g,
    eav_shift,
    heating_broadening,
    kurt_shift,
    width_shift,
)
from .spectral import (
    BinnedDensity,
    EigenDecomposition,
    SpectrumSummary,
    density_of_states,
    diagonalize,
    spectrum_summary,
    to_energy_basis,
    to_site_basis,
)

__version__ = "0.1.0"
