"""Minimum-error discrimination of induced accessible states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ArgumentError, DegenerateInputError, StateError, ValidationError
from .protocol import Povm, _distribution, validate_povm
from .registers import TruthTable
from .tensor import (
    POSITIVE_TOL,
    DenseOperator,
    as_operator,
    hermitian_eig,
    positive_part_projector,
    spectral_function,
    trace_norm,
    validate_state,
)

PRIOR_TOL = 1e-12
DIST_TOL = 1e-9
SATURATION_TOL = 1e-9
PGM_CUTOFF = 1e-10


def _check_state(rho, what: str) -> DenseOperator:
    rho = as_operator(rho)
    report = validate_state(rho)
    if not report.passed:
        raise StateError(f"{what} is not a valid state: {report.describe()}")
    return rho


@dataclass(frozen=True)
class BinaryHypothesis:
    sigma0: DenseOperator
    sigma1: DenseOperator
    pi0: float = 0.5
    pi1: float = 0.5

    def __post_init__(self):
        s0 = _check_state(self.sigma0, "sigma0")
        s1 = _check_state(self.sigma1, "sigma1")
        if s0.dim != s1.dim:
            raise ArgumentError(f"hypothesis states have different dimensions {s0.dim} and {s1.dim}")
        if min(self.pi0, self.pi1) < 0 or abs(self.pi0 + self.pi1 - 1) > PRIOR_TOL:
            raise ValidationError(f"priors ({self.pi0}, {self.pi1}) are not a distribution")
        object.__setattr__(self, "sigma0", s0)
        object.__setattr__(self, "sigma1", DenseOperator(s1.matrix, s0.dims))


@dataclass(frozen=True)
class DiscriminationResult:
    p_success: float
    delta: DenseOperator
    decide0_projector: DenseOperator
    trace_norm_delta: float
    delta_eigenvalues: np.ndarray


def helstrom(h: BinaryHypothesis) -> DiscriminationResult:
    """Optimal binary test: decide 0 on the positive part of ``pi0 s0 - pi1 s1``."""
    delta = h.pi0 * h.sigma0 - h.pi1 * h.sigma1
    eig = hermitian_eig(delta)
    norm = float(np.sum(np.abs(eig.eigenvalues)))
    return DiscriminationResult(
        p_success=0.5 * (1.0 + norm),
        delta=delta,
        decide0_projector=positive_part_projector(delta, POSITIVE_TOL),
        trace_norm_delta=norm,
        delta_eigenvalues=eig.eigenvalues,
    )


def achieved_success(h: BinaryHypothesis, decide0) -> float:
    """Success probability of the two-outcome test ``{P, I - P}``."""
    p = as_operator(decide0).matrix
    q = np.eye(p.shape[0]) - p
    return float(np.real(h.pi0 * np.trace(p @ h.sigma0.matrix) + h.pi1 * np.trace(q @ h.sigma1.matrix)))


def trace_distance(sigma0, sigma1) -> float:
    s0, s1 = as_operator(sigma0), as_operator(sigma1)
    if s0.dim != s1.dim:
        raise ArgumentError(f"dimension mismatch: {s0.dim} vs {s1.dim}")
    return 0.5 * trace_norm(s0.matrix - s1.matrix)


def _check_distribution(p, what: str) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if np.any(p < -DIST_TOL) or abs(p.sum() - 1) > DIST_TOL:
        raise ValidationError(f"{what} is not a probability distribution")
    return p


def tv_distance(p0, p1) -> float:
    """Half the l1 distance between two distributions over truth tables."""
    p0 = np.asarray(p0, dtype=float).reshape(-1)
    p1 = np.asarray(p1, dtype=float).reshape(-1)
    if p0.size != p1.size:
        raise ArgumentError(f"distributions have different lengths {p0.size} and {p1.size}")
    _check_distribution(p0, "p0")
    _check_distribution(p1, "p1")
    return 0.5 * float(np.sum(np.abs(p0 - p1)))


@dataclass(frozen=True)
class TvDecomposition:
    """``p0 - p1 = alpha (q_plus - q_minus)`` with disjointly supported ``q``'s,
    pushed through the table-to-output map as ``tau_plus`` and ``tau_minus``."""

    alpha: float
    q_plus: np.ndarray
    q_minus: np.ndarray
    tau_plus: DenseOperator
    tau_minus: DenseOperator
    tau_distance: float
    saturated: bool


def tv_decomposition(
    p0, p1, sigma_map: Mapping[TruthTable, DenseOperator], tol: float = 1e-12
) -> TvDecomposition:
    """Split the hypothesis difference into positive and negative table mixtures.

    ``p0`` and ``p1`` are label-indexed or ``{table: weight}`` mappings
    over the tables of ``sigma_map``. Raises :class:`DegenerateInputError`
    when the TV distance is at most ``tol``.
    """
    sigma_map = {t: as_operator(s) for t, s in sigma_map.items()}
    tables = list(sigma_map)
    p0 = _check_distribution(_distribution(p0, tables), "p0")
    p1 = _check_distribution(_distribution(p1, tables), "p1")
    delta = p0 - p1
    alpha = float(np.sum(delta[delta > 0]))
    if alpha <= tol:
        raise DegenerateInputError("TV distance is zero; the decomposition is undefined")
    q_plus = np.maximum(delta, 0.0) / alpha
    q_minus = np.maximum(-delta, 0.0) / alpha
    dims = sigma_map[tables[0]].dims

    def mix(q):
        total = np.zeros(sigma_map[tables[0]].shape, dtype=np.complex128)
        for w, t in zip(q, tables):
            if w > 0:
                total += w * sigma_map[t].matrix
        return DenseOperator(total, dims)

    tau_plus, tau_minus = mix(q_plus), mix(q_minus)
    dist = trace_distance(tau_plus, tau_minus)
    return TvDecomposition(alpha, q_plus, q_minus, tau_plus, tau_minus, dist, dist > 1 - SATURATION_TOL)


def _check_ensemble(states: Sequence, priors, povm: Povm | None = None):
    states = [_check_state(s, f"state {i}") for i, s in enumerate(states)]
    priors = _check_distribution(priors, "priors")
    if len(states) != priors.size:
        raise ArgumentError(f"{len(states)} states but {priors.size} priors")
    if len({s.dim for s in states}) != 1:
        raise ArgumentError("ensemble states have different dimensions")
    if povm is not None:
        if len(povm) != len(states):
            raise ArgumentError(f"{len(states)} states but {len(povm)} POVM effects")
        if povm.dim != states[0].dim:
            raise ArgumentError(f"POVM acts on dimension {povm.dim}, states have {states[0].dim}")
    return states, priors


def povm_success(states: Sequence, priors, povm: Povm) -> float:
    """``sum_i prior_i Tr(E_i sigma_i)``: guess ``i`` on outcome ``i``."""
    states, priors = _check_ensemble(states, priors, povm)
    report = validate_povm(povm)
    if not report.passed:
        raise ValidationError(report.describe())
    return float(sum(p * np.real(np.trace(e @ s.matrix)) for p, e, s in zip(priors, povm.effects, states)))


def dimension_bound(d: int, k: int) -> float:
    """Upper bound ``d/K`` on identifying one of ``K`` equiprobable states in dimension ``d``."""
    return d / k


def _sqrt_factor(a: np.ndarray) -> np.ndarray:
    """``B`` with ``B B^dagger = a`` for a positive semidefinite ``a``."""
    vals, vecs = np.linalg.eigh((a + a.conj().T) / 2)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def _gram(b: np.ndarray) -> np.ndarray:
    e = b @ b.conj().T
    return (e + e.conj().T) / 2


def pgm(states: Sequence, priors) -> Povm:
    """Pretty-good measurement for a weighted ensemble.

    Effects are ``avg^{-1/2} (p_i sigma_i) avg^{-1/2}`` with the inverse
    square root taken on the support of ``avg``; the projector onto the
    kernel is added to outcome 0.
    """
    states, priors = _check_ensemble(states, priors)
    avg = sum(p * s.matrix for p, s in zip(priors, states))
    vals = np.linalg.eigvalsh((avg + avg.conj().T) / 2)
    if vals[-1] <= PGM_CUTOFF:
        raise DegenerateInputError("average state is zero")
    inv_sqrt = spectral_function(avg, lambda x: x**-0.5, cutoff=PGM_CUTOFF).matrix
    # E_i = B_i B_i^dagger keeps every effect positive by construction
    factors = [inv_sqrt @ _sqrt_factor(p * s.matrix) for p, s in zip(priors, states)]
    # small eigenvalues of avg amplify rounding; renormalize on the support
    # (where the effects already sum to ~1) so the POVM closes to machine precision
    total = sum(b @ b.conj().T for b in factors)
    total = DenseOperator((total + total.conj().T) / 2, ())
    fix = spectral_function(total, lambda x: x**-0.5, cutoff=0.5).matrix
    support = spectral_function(total, np.ones_like, cutoff=0.5).matrix
    effects = [_gram(fix @ b) for b in factors]
    effects[0] = effects[0] + (np.eye(avg.shape[0]) - support)
    return Povm(tuple(effects))
