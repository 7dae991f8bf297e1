"""The read interface: read unitary, its controlled decomposition, phase
oracles, and dephasing in the truth-table basis."""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError, StateError
from .registers import DEFAULT_MAX_DIM, TruthTable, all_tables, as_table, make_layout
from .tensor import DenseOperator, as_operator, kron, validate_state


def read_permutation(n: int, max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
    """Index map of the read unitary on A, D, M: ``perm[col] = row``."""
    layout = make_layout(n, max_dim=max_dim)
    big_n, m_dim = layout.num_addresses, layout.m_dim
    a, y, m = np.meshgrid(np.arange(layout.a_dim), np.arange(2), np.arange(m_dim), indexing="ij")
    bit = (m >> (big_n - 1 - a)) & 1
    cols = (a * 2 + y) * m_dim + m
    rows = (a * 2 + (y ^ bit)) * m_dim + m
    perm = np.empty(cols.size, dtype=np.intp)
    perm[cols.ravel()] = rows.ravel()
    return perm


def build_read_unitary(n: int, max_dim: int = DEFAULT_MAX_DIM) -> DenseOperator:
    """Permutation matrix sending ``|a, y, m>`` to ``|a, y XOR m_a, m>`` on A, D, M."""
    layout = make_layout(n, max_dim=max_dim)
    perm = read_permutation(n, max_dim)
    mat = np.zeros((perm.size, perm.size))
    mat[perm, np.arange(perm.size)] = 1.0
    return DenseOperator(mat, (layout.a_dim, 2, layout.m_dim))


def build_table_unitary(n: int, m) -> DenseOperator:
    """The read restricted to a fixed table: ``|a, y> -> |a, y XOR m_a>`` on A, D."""
    big_n = 2**n
    table = as_table(m, big_n)
    mat = np.zeros((2 * big_n, 2 * big_n))
    for a in range(big_n):
        for y in range(2):
            mat[2 * a + (y ^ table.bits[a]), 2 * a + y] = 1.0
    return DenseOperator(mat, (big_n, 2))


def build_phase_oracle(n: int, m) -> DenseOperator:
    """Diagonal oracle ``|a> -> (-1)**m_a |a>`` on A."""
    table = as_table(m, 2**n)
    return DenseOperator(np.diag([(-1.0) ** b for b in table.bits]), (2**n,))


def controlled_assembly(n: int, max_dim: int = DEFAULT_MAX_DIM) -> DenseOperator:
    """The read unitary rebuilt as ``sum_m V_m (x) |m><m|`` in A, D, M order."""
    layout = make_layout(n, max_dim=max_dim)
    total = np.zeros((layout.a_dim * 2 * layout.m_dim,) * 2)
    for table in all_tables(layout.num_addresses):
        proj = np.zeros((layout.m_dim, layout.m_dim))
        proj[table.label, table.label] = 1.0
        total += kron([build_table_unitary(n, table), proj]).matrix.real
    return DenseOperator(total, (layout.a_dim, 2, layout.m_dim))


def lifted_read_unitary(layout) -> DenseOperator:
    """The read unitary tensored with identity on R and Q, in layout order."""
    factors = [build_read_unitary(layout.n)]
    factors += [np.eye(d) for d in (layout.r_dim, layout.q_dim) if d > 1]
    return kron(factors)


def memory_size(m_dim: int) -> int:
    """Number of address qubits ``n`` such that ``m_dim == 2**(2**n)``."""
    for n in range(1, 6):
        if 2 ** (2**n) == m_dim:
            return n
    raise ArgumentError(f"dimension {m_dim} is not a memory dimension 2**(2**n)")


def dephase_subsystem(op, subsystem: int) -> DenseOperator:
    """Zero every entry whose row and column differ in the label of ``subsystem``.

    Equivalent to ``sum_k (I (x) |k><k| (x) I) X (I (x) |k><k| (x) I)`` with
    the projectors on the chosen tensor factor.
    """
    op = as_operator(op)
    dims = op.dims
    if not 0 <= subsystem < len(dims):
        raise ArgumentError(f"invalid subsystem index {subsystem} for dims {dims}")
    inner = int(np.prod(dims[subsystem + 1 :]))
    labels = (np.arange(op.dim) // inner) % dims[subsystem]
    mask = labels[:, None] == labels[None, :]
    return DenseOperator(np.where(mask, op.matrix, 0.0), dims)


def _memory_operator(rho_M) -> DenseOperator:
    rho_M = as_operator(rho_M)
    memory_size(rho_M.dim)
    return DenseOperator(rho_M.matrix, (rho_M.dim,))


def pinch(rho_M) -> DenseOperator:
    """Dephase a memory operator in the truth-table basis (keep the diagonal)."""
    rho_M = _memory_operator(rho_M)
    return DenseOperator(np.diag(np.diag(rho_M.matrix)), rho_M.dims)


def _split_mq(rho_MQ, q_dim: int | None) -> DenseOperator:
    rho_MQ = as_operator(rho_MQ)
    if q_dim is None:
        if len(rho_MQ.dims) == 2:
            q_dim = rho_MQ.dims[1]
        elif len(rho_MQ.dims) == 1:
            q_dim = 1
        else:
            raise ArgumentError(f"cannot split dims {rho_MQ.dims} into memory and reference")
    if q_dim < 1 or rho_MQ.dim % q_dim:
        raise ArgumentError(f"dimension {rho_MQ.dim} is not divisible by q_dim={q_dim}")
    m_dim = rho_MQ.dim // q_dim
    memory_size(m_dim)
    dims = (m_dim, q_dim) if q_dim > 1 else (m_dim,)
    return DenseOperator(rho_MQ.matrix, dims)


def pinch_with_reference(rho_MQ, q_dim: int | None = None) -> DenseOperator:
    """Keep only the blocks ``(P_m (x) I_Q) rho (P_m (x) I_Q)``.

    ``q_dim`` is taken from ``rho_MQ.dims`` when omitted.
    """
    return dephase_subsystem(_split_mq(rho_MQ, q_dim), 0)


def diagonal_distribution(rho_M, tol: float = 1e-9) -> np.ndarray:
    """Truth-table distribution ``p(m) = <m|rho_M|m>``, indexed by table label."""
    rho_M = _memory_operator(rho_M)
    report = validate_state(rho_M, tol)
    if not report.passed:
        raise StateError(f"memory state is invalid: {report.describe()}")
    return np.maximum(np.diag(rho_M.matrix).real, 0.0)


def distribution_by_table(p) -> dict[TruthTable, float]:
    """Label-indexed distribution as a ``{TruthTable: probability}`` dict (nonzero entries)."""
    p = np.asarray(p, dtype=float)
    big_n = 2 ** memory_size(p.size)
    return {TruthTable.from_label(k, big_n): float(v) for k, v in enumerate(p) if v != 0}
