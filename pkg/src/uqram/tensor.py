"""Dense complex linear algebra on multipartite operators.

Everything here works on :class:`DenseOperator`, a square complex matrix
tagged with the dimensions of the subsystems it acts on. Basis ordering is
the usual lexicographic (big-endian) tensor ordering, first subsystem most
significant, i.e. the ordering produced by :func:`numpy.kron`.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ArgumentError, ValidationError

HERMITIAN_TOL = 1e-9
POSITIVE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Square complex matrix with subsystem-dimension metadata.

    The matrix is copied to ``complex128`` and made read-only on
    construction. ``dims`` defaults to a single subsystem spanning the
    whole space.
    """

    matrix: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ArgumentError(f"operator must be a square matrix, got shape {mat.shape}")
        side = mat.shape[0]
        dims = tuple(int(d) for d in self.dims) if len(self.dims) else (side,)
        if int(np.prod(dims)) != side:
            raise ArgumentError(f"dims {dims} do not multiply to side length {side}")
        if dims != (1,) and any(d < 2 for d in dims):
            raise ArgumentError(f"subsystem dimensions must be >= 2, got {dims}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def dag(self) -> "DenseOperator":
        return DenseOperator(self.matrix.conj().T, self.dims)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def _check_compatible(self, other: "DenseOperator"):
        if other.dims != self.dims:
            raise ArgumentError(f"dimension mismatch: {self.dims} vs {other.dims}")

    def __add__(self, other):
        other = as_operator(other, self.dims)
        self._check_compatible(other)
        return DenseOperator(self.matrix + other.matrix, self.dims)

    def __sub__(self, other):
        other = as_operator(other, self.dims)
        self._check_compatible(other)
        return DenseOperator(self.matrix - other.matrix, self.dims)

    def __neg__(self):
        return DenseOperator(-self.matrix, self.dims)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return DenseOperator(scalar * self.matrix, self.dims)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return DenseOperator(self.matrix / scalar, self.dims)

    def __matmul__(self, other):
        other = as_operator(other, self.dims)
        self._check_compatible(other)
        return DenseOperator(self.matrix @ other.matrix, self.dims)

    def __repr__(self):
        return f"DenseOperator(dims={self.dims})"


def as_operator(x, dims: Sequence[int] | None = None) -> DenseOperator:
    """Coerce ``x`` to a :class:`DenseOperator`, attaching ``dims`` if given."""
    if isinstance(x, DenseOperator):
        if dims is not None and tuple(dims) != x.dims:
            if int(np.prod(dims)) != x.dim:
                raise ArgumentError(f"dimension mismatch: {x.dims} vs {tuple(dims)}")
            return DenseOperator(x.matrix, tuple(dims))
        return x
    return DenseOperator(np.asarray(x), tuple(dims) if dims is not None else ())


def ket_to_operator(psi, dims: Sequence[int] | None = None) -> DenseOperator:
    """Return the projector ``|psi><psi|`` (no normalization is applied)."""
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    return DenseOperator(np.outer(psi, psi.conj()), tuple(dims) if dims is not None else ())


def identity(dims: Sequence[int] | int) -> DenseOperator:
    dims = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
    return DenseOperator(np.eye(int(np.prod(dims))), dims)


def max_abs(x) -> float:
    """Largest absolute entry, the distance used by all tolerance checks."""
    arr = np.asarray(x)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


def kron(factors: Iterable) -> DenseOperator:
    """Tensor product of ``factors`` in the order given.

    Scalar (dimension-1) factors contribute no subsystem.
    """
    ops = [as_operator(f) for f in factors]
    if not ops:
        raise ArgumentError("kron needs at least one factor")
    mat = ops[0].matrix
    for op in ops[1:]:
        mat = np.kron(mat, op.matrix)
    dims = tuple(d for op in ops for d in op.dims if d != 1)
    return DenseOperator(mat, dims or (1,))


def _check_subsystems(dims: Sequence[int], indices: Iterable[int]) -> list[int]:
    out = []
    for i in indices:
        if not isinstance(i, (int, np.integer)) or not 0 <= i < len(dims):
            raise ArgumentError(f"invalid subsystem index {i!r} for dims {tuple(dims)}")
        out.append(int(i))
    if len(set(out)) != len(out):
        raise ArgumentError(f"repeated subsystem index in {out}")
    return out


def partial_trace(op, keep: Iterable[int]) -> DenseOperator:
    """Trace out every subsystem not listed in ``keep``.

    Kept subsystems stay in their original order regardless of the order
    of ``keep``. Keeping nothing returns the full trace as a 1x1 operator.
    """
    op = as_operator(op)
    dims = op.dims
    keep = sorted(_check_subsystems(dims, keep))
    k = len(dims)
    letters = string.ascii_letters
    if 2 * k > len(letters):
        raise ArgumentError("too many subsystems")
    rows = list(letters[:k])
    cols = list(letters[k : 2 * k])
    for i in range(k):
        if i not in keep:
            cols[i] = rows[i]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    tensor = op.matrix.reshape(dims + dims)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, tensor)
    kept_dims = tuple(dims[i] for i in keep)
    side = int(np.prod(kept_dims)) if kept_dims else 1
    return DenseOperator(reduced.reshape(side, side), kept_dims or (1,))


def permute_subsystems(op, order: Sequence[int]) -> DenseOperator:
    """Reorder tensor factors so that new subsystem ``i`` is old ``order[i]``."""
    op = as_operator(op)
    dims = op.dims
    order = _check_subsystems(dims, order)
    if len(order) != len(dims):
        raise ArgumentError(f"order {order} is not a permutation of {len(dims)} subsystems")
    k = len(dims)
    tensor = op.matrix.reshape(dims + dims)
    tensor = tensor.transpose(order + [k + i for i in order])
    new_dims = tuple(dims[i] for i in order)
    return DenseOperator(tensor.reshape(op.dim, op.dim), new_dims)


def hermitian_part(op, tol: float = HERMITIAN_TOL) -> DenseOperator:
    """Return ``(X + X^dagger)/2``, rejecting inputs whose anti-Hermitian part exceeds ``tol``."""
    op = as_operator(op)
    skew = max_abs(op.matrix - op.matrix.conj().T) / 2
    if skew > tol:
        raise ValidationError(f"operator is not Hermitian (anti-Hermitian part {skew:.3e} > {tol:g})")
    return DenseOperator((op.matrix + op.matrix.conj().T) / 2, op.dims)


class EigenDecomposition(NamedTuple):
    """Spectral data of a Hermitian operator, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eig(op) -> EigenDecomposition:
    herm = hermitian_part(op)
    vals, vecs = np.linalg.eigh(herm.matrix)
    return EigenDecomposition(vals[::-1].copy(), vecs[:, ::-1].copy())


def trace_norm(op) -> float:
    """Trace norm of a Hermitian operator (sum of absolute eigenvalues)."""
    vals = np.linalg.eigvalsh(hermitian_part(op).matrix)
    return float(np.sum(np.abs(vals)))


def positive_part_projector(op, tol: float = POSITIVE_TOL) -> DenseOperator:
    """Projector onto the eigenspaces with eigenvalue strictly above ``tol``."""
    op = as_operator(op)
    vals, vecs = hermitian_eig(op)
    v = vecs[:, vals > tol]
    return DenseOperator(v @ v.conj().T, op.dims)


def spectral_function(op, fn, cutoff: float | None = None) -> DenseOperator:
    """Apply ``fn`` to the eigenvalues of a Hermitian operator.

    Eigenvalues at or below ``cutoff`` are mapped to zero instead.
    """
    op = as_operator(op)
    vals, vecs = hermitian_eig(op)
    out = np.zeros_like(vals)
    mask = vals > cutoff if cutoff is not None else np.ones_like(vals, dtype=bool)
    out[mask] = fn(vals[mask])
    return DenseOperator((vecs * out) @ vecs.conj().T, op.dims)


@dataclass(frozen=True)
class StateReport:
    hermiticity_deviation: float
    trace_deviation: float
    min_eigenvalue: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.hermiticity_deviation <= self.tol
            and self.trace_deviation <= self.tol
            and self.min_eigenvalue >= -self.tol
        )

    def describe(self) -> str:
        problems = []
        if self.hermiticity_deviation > self.tol:
            problems.append(f"Hermiticity deviation {self.hermiticity_deviation:.3e}")
        if self.trace_deviation > self.tol:
            problems.append(f"trace deviation {self.trace_deviation:.3e}")
        if self.min_eigenvalue < -self.tol:
            problems.append(f"negative eigenvalue {self.min_eigenvalue:.3e}")
        return "; ".join(problems) if problems else "valid density operator"


def validate_state(op, tol: float = HERMITIAN_TOL) -> StateReport:
    """Check Hermiticity, unit trace and positivity of ``op``. Never raises on bad states."""
    mat = as_operator(op).matrix
    herm_dev = max_abs(mat - mat.conj().T)
    vals = np.linalg.eigvalsh((mat + mat.conj().T) / 2)
    return StateReport(
        hermiticity_deviation=herm_dev,
        trace_deviation=abs(complex(np.trace(mat)) - 1.0),
        min_eigenvalue=float(vals[0]),
        tol=tol,
    )


def purity(op) -> float:
    mat = as_operator(op).matrix
    return float(np.real(np.trace(mat @ mat)))
