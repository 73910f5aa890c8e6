"""Exact diagonalization and quench dynamics of the anharmonic Lipkin-Meshkov-Glick model."""

from almg.errors import InvalidInput, NumericError, UnreachableQuench
from almg.model import (
    ModelParams,
    ParityBlock,
    SpinOperator,
    build_block_hamiltonian,
    build_full_operator,
    dense_hamiltonian,
    parity_of_state,
)
from almg.spectra import (
    SpectralData,
    StateSelector,
    diagonalize,
    hf_slope,
    participation_ratio,
    select_state,
)
from almg.quench import (
    Ldos,
    QuenchSpec,
    TimeSeries,
    critical_xi_from_ground,
    critical_xi_from_highest,
    quench_coefficients,
    survival_probability,
)
from almg.echo import EchoSpec, echo_averages, loschmidt_echo, time_averaged_echo
from almg.otoc import (
    OtocRequest,
    OtocSeries,
    microcanonical_otoc,
    squared_commutator,
    steady_state_otoc,
    steady_state_profile,
)

__version__ = "0.1.0"
