"""Dense density-matrix simulation of read-only access to a quantum memory
through a fixed XOR read interface."""

from .discrimination import (
    BinaryHypothesis,
    DiscriminationResult,
    TvDecomposition,
    achieved_success,
    dimension_bound,
    helstrom,
    pgm,
    povm_success,
    trace_distance,
    tv_decomposition,
    tv_distance,
)
from .errors import (
    ArgumentError,
    CapacityError,
    DegenerateInputError,
    ParseError,
    SchemaError,
    StateError,
    UqramError,
    UsageError,
    ValidationError,
)
from .interface import (
    build_phase_oracle,
    build_read_unitary,
    build_table_unitary,
    controlled_assembly,
    dephase_subsystem,
    diagonal_distribution,
    lifted_read_unitary,
    pinch,
    pinch_with_reference,
)
from .protocol import (
    QUERY,
    KrausChannel,
    Povm,
    Protocol,
    Query,
    basis_outputs,
    controlled_output,
    measure,
    measure_and_prepare_joint,
    mixture_reconstruct,
    run_protocol,
    run_protocol_with_reference,
    validate_channel,
    validate_povm,
)
from .registers import RegisterLayout, TruthTable, all_tables, basis_index, make_layout, memory_bit
from .tensor import (
    DenseOperator,
    EigenDecomposition,
    hermitian_eig,
    kron,
    partial_trace,
    positive_part_projector,
    trace_norm,
    validate_state,
)

__version__ = "0.1.0"
