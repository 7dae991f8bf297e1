"""Register layout and truth-table indexing.

The registers are always ordered A (address), D (data), M (memory),
R (ancilla), Q (reference). A holds ``n`` address qubits as one
``2**n``-dimensional subsystem; M holds ``N = 2**n`` memory qubits as one
``2**N``-dimensional subsystem. R and Q may have dimension 1, meaning the
register is absent: it stays in the layout but contributes no tensor factor.

The label of a truth table ``m = (m_0, ..., m_{N-1})`` is the integer whose
binary expansion reads ``m_0 m_1 ... m_{N-1}``, with ``m_0`` most significant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import ArgumentError, CapacityError

DEFAULT_MAX_DIM = 4096
REGISTER_NAMES = ("A", "D", "M", "R", "Q")


@dataclass(frozen=True, order=True)
class TruthTable:
    """A complete assignment of one bit to every address."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits or any(b not in (0, 1) for b in bits):
            raise ArgumentError(f"truth table must be a non-empty bit sequence, got {self.bits!r}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_string(cls, s: str) -> "TruthTable":
        if not s or set(s) - {"0", "1"}:
            raise ArgumentError(f"truth table string must contain only 0/1, got {s!r}")
        return cls(tuple(int(c) for c in s))

    @classmethod
    def from_label(cls, label: int, size: int) -> "TruthTable":
        if not 0 <= label < 2**size:
            raise ArgumentError(f"label {label} out of range for {size} addresses")
        return cls(tuple((label >> (size - 1 - j)) & 1 for j in range(size)))

    @property
    def size(self) -> int:
        return len(self.bits)

    @property
    def label(self) -> int:
        out = 0
        for b in self.bits:
            out = (out << 1) | b
        return out

    def __len__(self):
        return len(self.bits)

    def __str__(self):
        return "".join(map(str, self.bits))


def as_table(m, size: int | None = None) -> TruthTable:
    """Accept a :class:`TruthTable`, a bit string like ``"01"`` or a bit sequence."""
    if isinstance(m, TruthTable):
        table = m
    elif isinstance(m, str):
        table = TruthTable.from_string(m)
    else:
        table = TruthTable(tuple(m))
    if size is not None and table.size != size:
        raise ArgumentError(f"truth table {table} has length {table.size}, expected {size}")
    return table


def all_tables(size: int) -> list[TruthTable]:
    """Every truth table on ``size`` addresses, in label order."""
    return [TruthTable.from_label(k, size) for k in range(2**size)]


def memory_bit(m, a: int) -> int:
    """The bit ``m_a`` stored at address ``a``."""
    table = as_table(m)
    if not isinstance(a, (int, np.integer)) or not 0 <= a < table.size:
        raise ArgumentError(f"address {a!r} out of range for {table.size} addresses")
    return table.bits[a]


@dataclass(frozen=True)
class RegisterLayout:
    n: int
    r_dim: int = 1
    q_dim: int = 1

    @property
    def num_addresses(self) -> int:
        return 2**self.n

    @property
    def a_dim(self) -> int:
        return 2**self.n

    @property
    def m_dim(self) -> int:
        return 2**self.num_addresses

    @property
    def subsystems(self) -> tuple[tuple[str, int], ...]:
        """All five registers with their dimensions, absent ones included."""
        return (("A", self.a_dim), ("D", 2), ("M", self.m_dim), ("R", self.r_dim), ("Q", self.q_dim))

    @property
    def present(self) -> tuple[tuple[str, int], ...]:
        """Registers that contribute a tensor factor."""
        return tuple((name, d) for name, d in self.subsystems if d > 1)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.present)

    @property
    def s_dims(self) -> tuple[int, ...]:
        """Tensor factors of the accessible system A, D, R."""
        return tuple(d for name, d in self.present if name in ("A", "D", "R"))

    @property
    def s_dim(self) -> int:
        return self.a_dim * 2 * self.r_dim

    @property
    def total_dim(self) -> int:
        return int(np.prod([d for _, d in self.subsystems]))

    def index_of(self, name: str) -> int:
        """Tensor-factor position of register ``name`` in :attr:`dims`."""
        for i, (reg, _) in enumerate(self.present):
            if reg == name:
                return i
        raise ArgumentError(f"register {name!r} is absent from this layout")


def make_layout(n: int, r_dim: int = 1, q_dim: int = 1, max_dim: int = DEFAULT_MAX_DIM) -> RegisterLayout:
    """Build a layout for ``n`` address qubits, checking the dimension budget."""
    for name, val, low in (("n", n, 1), ("r_dim", r_dim, 1), ("q_dim", q_dim, 1)):
        if not isinstance(val, (int, np.integer)) or val < low:
            raise ArgumentError(f"{name} must be an integer >= {low}, got {val!r}")
    # 2**(2**n) overflows quickly; bail out before building it
    if n > 5:
        raise CapacityError(f"n={n} exceeds the dimension budget {max_dim}")
    layout = RegisterLayout(int(n), int(r_dim), int(q_dim))
    if layout.total_dim > max_dim:
        raise CapacityError(
            f"total Hilbert dimension {layout.total_dim} for n={n}, r_dim={r_dim}, "
            f"q_dim={q_dim} exceeds the budget {max_dim}"
        )
    return layout


def basis_index(layout: RegisterLayout, labels: Mapping[str, object] | Sequence[object]) -> int:
    """Mixed-radix index of a product basis state, A most significant.

    ``labels`` is either a mapping from register name to label or a
    sequence with one label per register in A, D, M, R, Q order (trailing
    absent registers may be omitted). Missing entries for absent registers
    default to 0. The memory label may be an int, a bit string or a
    :class:`TruthTable`.
    """
    if isinstance(labels, Mapping):
        given = dict(labels)
        unknown = set(given) - set(REGISTER_NAMES)
        if unknown:
            raise ArgumentError(f"unknown register names {sorted(unknown)}")
    else:
        labels = list(labels)
        if len(labels) > len(REGISTER_NAMES):
            raise ArgumentError(f"too many labels: {labels}")
        given = dict(zip(REGISTER_NAMES, labels))
    index = 0
    for name, d in layout.subsystems:
        if name not in given:
            if d > 1:
                raise ArgumentError(f"missing label for register {name}")
            label = 0
        else:
            label = given[name]
        if name == "M" and not isinstance(label, (int, np.integer)):
            label = as_table(label, layout.num_addresses).label
        if not isinstance(label, (int, np.integer)) or not 0 <= label < d:
            raise ArgumentError(f"label {label!r} out of range for register {name} of dimension {d}")
        index = index * d + int(label)
    return index


def iter_labels(layout: RegisterLayout) -> Iterator[tuple[int, ...]]:
    """All label tuples (A, D, M, R, Q) in index order."""
    for idx in np.ndindex(*[d for _, d in layout.subsystems]):
        yield tuple(int(i) for i in idx)
