"""Read-only protocols and the accessible states they induce.

A protocol prepares a state on the accessible system S = A (x) D (x) R,
then runs an ordered list of steps. Each step is either a read query
(the read unitary on A, D, M, identity elsewhere) or a Kraus channel on
S. Memory M and reference Q are never touched except by queries.

Internally the simulation orders tensor factors as S, M, Q so that
channels on S are a left factor; outputs are returned on S (or S (x) Q)
with S in A, D, R order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import ArgumentError, CapacityError, StateError, ValidationError
from .interface import _split_mq, build_table_unitary
from .registers import RegisterLayout, TruthTable, all_tables, as_table, make_layout
from .tensor import DenseOperator, as_operator, max_abs, partial_trace, validate_state

COMPLETENESS_TOL = 1e-9
POVM_TOL = 1e-9
STATE_TOL = 1e-9
MAX_TABLES = 256


@dataclass(frozen=True)
class Query:
    """One invocation of the read unitary."""


QUERY = Query()


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A channel ``X -> sum_k K_k X K_k^dagger`` on the accessible system.

    Completeness is not enforced here so that invalid channels can be
    reported on; :class:`Protocol` rejects them.
    """

    operators: tuple[np.ndarray, ...]
    label: str = ""

    def __post_init__(self):
        ops = []
        for k in self.operators:
            mat = np.array(as_operator(k).matrix)
            mat.setflags(write=False)
            ops.append(mat)
        if not ops:
            raise ArgumentError("a Kraus channel needs at least one operator")
        if len({op.shape for op in ops}) != 1:
            raise ArgumentError(f"Kraus operators have mismatched shapes {[op.shape for op in ops]}")
        object.__setattr__(self, "operators", tuple(ops))

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def apply(self, rho) -> DenseOperator:
        rho = as_operator(rho)
        out = sum(k @ rho.matrix @ k.conj().T for k in self.operators)
        return DenseOperator(out, rho.dims)


@dataclass(frozen=True)
class ChannelReport:
    completeness_deviation: float
    tol: float = COMPLETENESS_TOL

    @property
    def passed(self) -> bool:
        return self.completeness_deviation < self.tol


def validate_channel(ch: KrausChannel) -> ChannelReport:
    """Max-abs deviation of ``sum K^dagger K`` from the identity."""
    total = sum(k.conj().T @ k for k in ch.operators)
    return ChannelReport(max_abs(total - np.eye(ch.dim)))


@dataclass(frozen=True, eq=False)
class Povm:
    effects: tuple[np.ndarray, ...]

    def __post_init__(self):
        effects = []
        for e in self.effects:
            mat = np.array(as_operator(e).matrix)
            mat.setflags(write=False)
            effects.append(mat)
        if not effects:
            raise ArgumentError("a POVM needs at least one effect")
        if len({e.shape for e in effects}) != 1:
            raise ArgumentError("POVM effects have mismatched shapes")
        object.__setattr__(self, "effects", tuple(effects))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def __len__(self):
        return len(self.effects)


@dataclass(frozen=True)
class PovmReport:
    closure_deviation: float
    min_eigenvalue: float
    hermiticity_deviation: float
    tol: float = POVM_TOL

    @property
    def passed(self) -> bool:
        return (
            self.closure_deviation < self.tol
            and self.min_eigenvalue >= -self.tol
            and self.hermiticity_deviation < self.tol
        )

    def describe(self) -> str:
        if self.closure_deviation >= self.tol:
            return f"POVM closure violated: effects sum to identity only within {self.closure_deviation:.3e}"
        if self.hermiticity_deviation >= self.tol:
            return f"POVM effect not Hermitian (deviation {self.hermiticity_deviation:.3e})"
        if self.min_eigenvalue < -self.tol:
            return f"POVM effect not positive (eigenvalue {self.min_eigenvalue:.3e})"
        return "valid POVM"


def validate_povm(povm: Povm) -> PovmReport:
    total = sum(povm.effects)
    herm = max(max_abs(e - e.conj().T) for e in povm.effects)
    min_eig = min(float(np.linalg.eigvalsh((e + e.conj().T) / 2)[0]) for e in povm.effects)
    return PovmReport(max_abs(total - np.eye(povm.dim)), min_eig, herm)


def measure(state, povm: Povm) -> np.ndarray:
    """Outcome probabilities ``Tr(E_x rho)``."""
    state = as_operator(state)
    if state.dim != povm.dim:
        raise ArgumentError(f"POVM acts on dimension {povm.dim}, state has {state.dim}")
    report = validate_povm(povm)
    if not report.passed:
        raise ValidationError(report.describe())
    return np.array([np.real(np.trace(e @ state.matrix)) for e in povm.effects])


Step = Union[Query, KrausChannel]


@dataclass(frozen=True, eq=False)
class Protocol:
    layout: RegisterLayout
    initial_state: DenseOperator
    steps: tuple[Step, ...] = ()
    final_povm: Povm | None = None
    _perm_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        layout = self.layout
        init = as_operator(self.initial_state)
        if init.dim != layout.s_dim:
            raise ArgumentError(f"initial state has dimension {init.dim}, S has {layout.s_dim}")
        object.__setattr__(self, "initial_state", DenseOperator(init.matrix, layout.s_dims))
        report = validate_state(init, STATE_TOL)
        if not report.passed:
            raise StateError(f"initial state is invalid: {report.describe()}")
        steps = tuple(self.steps)
        for i, step in enumerate(steps):
            if isinstance(step, Query):
                continue
            if not isinstance(step, KrausChannel):
                raise ArgumentError(f"step {i} is neither a query nor a channel on S: {step!r}")
            if step.dim != layout.s_dim:
                raise ArgumentError(f"channel at step {i} acts on dimension {step.dim}, S has {layout.s_dim}")
            ch_report = validate_channel(step)
            if not ch_report.passed:
                raise ValidationError(
                    f"channel at step {i} violates Kraus completeness "
                    f"(deviation {ch_report.completeness_deviation:.3e})"
                )
        object.__setattr__(self, "steps", steps)
        if self.final_povm is not None:
            if self.final_povm.dim != layout.s_dim:
                raise ArgumentError(f"POVM acts on dimension {self.final_povm.dim}, S has {layout.s_dim}")
            povm_report = validate_povm(self.final_povm)
            if not povm_report.passed:
                raise ValidationError(povm_report.describe())

    @property
    def queries(self) -> int:
        return sum(isinstance(s, Query) for s in self.steps)

    def _query_permutation(self, q_dim: int) -> np.ndarray:
        """Inverse index map of the lifted read unitary in S, M, Q order."""
        if q_dim not in self._perm_cache:
            lay = self.layout
            big_n = lay.num_addresses
            a, y, r, m, q = np.meshgrid(
                np.arange(lay.a_dim), np.arange(2), np.arange(lay.r_dim),
                np.arange(lay.m_dim), np.arange(q_dim), indexing="ij",
            )
            bit = (m >> (big_n - 1 - a)) & 1

            def flat(yy):
                return (((a * 2 + yy) * lay.r_dim + r) * lay.m_dim + m) * q_dim + q

            perm = np.empty(a.size, dtype=np.intp)
            perm[flat(y).ravel()] = flat(y ^ bit).ravel()
            self._perm_cache[q_dim] = np.argsort(perm)
        return self._perm_cache[q_dim]


def _apply_channel_on_s(rho: np.ndarray, ch: KrausChannel, s_dim: int) -> np.ndarray:
    rest = rho.shape[0] // s_dim
    t = rho.reshape(s_dim, rest, s_dim, rest)
    out = np.zeros_like(t)
    for k in ch.operators:
        left = np.tensordot(k, t, axes=([1], [0]))
        out += np.tensordot(left, k.conj(), axes=([2], [1])).transpose(0, 1, 3, 2)
    return out.reshape(rho.shape)


def _evolve(p: Protocol, rho: np.ndarray, q_dim: int) -> np.ndarray:
    s_dim = p.layout.s_dim
    for step in p.steps:
        if isinstance(step, Query):
            inv = p._query_permutation(q_dim)
            rho = rho[np.ix_(inv, inv)]
        else:
            rho = _apply_channel_on_s(rho, step, s_dim)
    return rho


def _check_memory(rho, layout: RegisterLayout, q_dim: int) -> DenseOperator:
    rho = _split_mq(rho, q_dim)
    if rho.dims[0] != layout.m_dim:
        raise ArgumentError(f"memory dimension {rho.dims[0]} does not match layout ({layout.m_dim})")
    report = validate_state(rho, STATE_TOL)
    if not report.passed:
        raise StateError(f"memory state is invalid: {report.describe()}")
    return rho


def _run(p: Protocol, rho_MQ: DenseOperator, q_dim: int) -> DenseOperator:
    lay = p.layout
    joint = np.kron(p.initial_state.matrix, rho_MQ.matrix)
    joint = _evolve(p, joint, q_dim)
    dims = (lay.s_dim, lay.m_dim) + ((q_dim,) if q_dim > 1 else ())
    keep = [0, 2] if q_dim > 1 else [0]
    reduced = partial_trace(DenseOperator(joint, dims), keep)
    out_dims = lay.s_dims + ((q_dim,) if q_dim > 1 else ())
    return DenseOperator(reduced.matrix, out_dims)


def run_protocol(p: Protocol, rho_M) -> DenseOperator:
    """Accessible state ``Tr_M[W(rho_S (x) rho_M)]`` on S."""
    return _run(p, _check_memory(rho_M, p.layout, 1), 1)


def run_protocol_with_reference(p: Protocol, rho_MQ) -> DenseOperator:
    """Joint output on S (x) Q for a memory entangled with a spectator reference Q."""
    q_dim = p.layout.q_dim
    rho_MQ = as_operator(rho_MQ)
    if rho_MQ.dim != p.layout.m_dim * q_dim:
        raise ArgumentError(
            f"joint state has dimension {rho_MQ.dim}, expected M (x) Q = {p.layout.m_dim * q_dim}"
        )
    return _run(p, _check_memory(rho_MQ, p.layout, q_dim), q_dim)


def table_state(layout: RegisterLayout, m) -> DenseOperator:
    """``|m><m|`` on M."""
    table = as_table(m, layout.num_addresses)
    mat = np.zeros((layout.m_dim, layout.m_dim))
    mat[table.label, table.label] = 1.0
    return DenseOperator(mat, (layout.m_dim,))


def basis_outputs(p: Protocol, max_workers: int | None = None, max_tables: int = MAX_TABLES) -> dict[TruthTable, DenseOperator]:
    """Output ``sigma_m`` for every deterministic memory table, keyed in label order.

    Tables are independent runs; ``max_workers`` > 1 runs them on a thread pool.
    """
    lay = p.layout
    if lay.m_dim > max_tables:
        raise CapacityError(f"{lay.m_dim} truth tables exceed the enumeration limit {max_tables}")
    tables = all_tables(lay.num_addresses)

    def one(table):
        return run_protocol(p, table_state(lay, table))

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outputs = list(pool.map(one, tables))
    else:
        outputs = [one(t) for t in tables]
    return dict(zip(tables, outputs))


def controlled_output(p: Protocol, m) -> DenseOperator:
    """``sigma_m`` computed on S alone, replacing every query by the table unitary V_m.

    Valid because a deterministic memory is never disturbed by a read.
    """
    lay = p.layout
    v = build_table_unitary(lay.n, m).matrix
    if lay.r_dim > 1:
        v = np.kron(v, np.eye(lay.r_dim))
    rho = p.initial_state.matrix
    for step in p.steps:
        if isinstance(step, Query):
            rho = v @ rho @ v.conj().T
        else:
            rho = step.apply(rho).matrix
    return DenseOperator(rho, lay.s_dims)


def _distribution(p_dist, tables: Sequence[TruthTable]) -> np.ndarray:
    if isinstance(p_dist, Mapping):
        weights = np.zeros(len(tables))
        index = {t: i for i, t in enumerate(tables)}
        for key, w in p_dist.items():
            t = as_table(key)
            if t not in index:
                raise ArgumentError(f"table {t} has no output state")
            weights[index[t]] = w
        return weights
    weights = np.asarray(p_dist, dtype=float).reshape(-1)
    if weights.size != len(tables):
        raise ArgumentError(f"distribution has {weights.size} entries, expected {len(tables)}")
    return weights


def mixture_reconstruct(p_dist, sigma_map: Mapping[TruthTable, DenseOperator]) -> DenseOperator:
    """``sum_m p(m) sigma_m``.

    ``p_dist`` is either label-indexed (same length and order as
    ``sigma_map``) or a mapping from tables to weights.
    """
    sigma_map = {t: as_operator(s) for t, s in sigma_map.items()}
    tables = list(sigma_map)
    if not tables:
        raise ArgumentError("empty sigma map")
    weights = _distribution(p_dist, tables)
    if abs(weights.sum() - 1.0) > 1e-9 or np.any(weights < -1e-12):
        raise ValidationError(f"weights do not form a probability distribution (sum {weights.sum():.12g})")
    first = sigma_map[tables[0]]
    total = np.zeros(first.shape, dtype=np.complex128)
    for w, t in zip(weights, tables):
        if w != 0:
            total += w * sigma_map[t].matrix
    return DenseOperator(total, first.dims)


def measure_and_prepare_joint(sigma_map: Mapping[TruthTable, DenseOperator], rho_MQ, q_dim: int) -> DenseOperator:
    """``sum_m sigma_m (x) <m|rho_MQ|m>``: the explicitly separable form of the joint output."""
    rho = _split_mq(rho_MQ, q_dim)
    m_dim = rho.dims[0]
    blocks = rho.matrix.reshape(m_dim, q_dim, m_dim, q_dim)
    total = None
    for t, sigma in sigma_map.items():
        q_block = blocks[t.label, :, t.label, :]
        term = np.kron(sigma.matrix, q_block)
        total = term if total is None else total + term
    dims = next(iter(sigma_map.values())).dims + ((q_dim,) if q_dim > 1 else ())
    return DenseOperator(total, dims)


def plus_minus_state(layout: RegisterLayout) -> DenseOperator:
    """Uniform superposition on A, ``|->`` on D, ``|0>`` on R."""
    plus = np.full(layout.a_dim, 1 / np.sqrt(layout.a_dim))
    minus = np.array([1.0, -1.0]) / np.sqrt(2)
    psi = np.kron(plus, minus)
    rho = np.outer(psi, psi.conj())
    if layout.r_dim > 1:
        r0 = np.zeros((layout.r_dim, layout.r_dim))
        r0[0, 0] = 1.0
        rho = np.kron(rho, r0)
    return DenseOperator(rho, layout.s_dims)


def x_basis_povm(layout: RegisterLayout) -> Povm:
    """Measure A in the X basis (n = 1), identity on D and R."""
    if layout.n != 1:
        raise ArgumentError("the X-basis measurement on A is defined for n = 1")
    plus = np.array([[1, 1], [1, 1]]) / 2
    minus = np.array([[1, -1], [-1, 1]]) / 2
    rest = np.eye(2 * layout.r_dim)
    return Povm((np.kron(plus, rest), np.kron(minus, rest)))


def example_protocol(layout: RegisterLayout | None = None) -> Protocol:
    """Prepare ``|+>_A |->_D``, query once, measure A in the X basis."""
    layout = layout or make_layout(1)
    povm = x_basis_povm(layout) if layout.n == 1 else None
    return Protocol(layout, plus_minus_state(layout), (QUERY,), povm)


def bell_memory(sign: int = 1, n: int = 1) -> DenseOperator:
    """``(|0...0> + sign |1...1>)/sqrt 2`` on M; for n = 1 these are Phi+ and Phi-."""
    m_dim = 2 ** (2**n)
    rho = np.zeros((m_dim, m_dim))
    rho[0, 0] = rho[-1, -1] = 0.5
    rho[0, -1] = rho[-1, 0] = 0.5 * sign
    return DenseOperator(rho, (m_dim,))


def ensemble_memory(weights: Mapping, n: int = 1) -> DenseOperator:
    """Diagonal memory state ``sum_m w(m) |m><m|``."""
    big_n = 2**n
    m_dim = 2**big_n
    diag = np.zeros(m_dim)
    for key, w in weights.items():
        diag[as_table(key, big_n).label] += float(w)
    return DenseOperator(np.diag(diag), (m_dim,))


__all__ = [
    "QUERY", "Query", "KrausChannel", "ChannelReport", "Povm", "PovmReport", "Protocol",
    "validate_channel", "validate_povm", "measure", "run_protocol", "run_protocol_with_reference",
    "basis_outputs", "controlled_output", "mixture_reconstruct", "measure_and_prepare_joint",
    "table_state", "plus_minus_state", "x_basis_povm", "example_protocol", "bell_memory",
    "ensemble_memory",
]
