"""Seeded random states, channels, measurements and protocols.

All draws come from a :class:`numpy.random.Generator` (PCG64 via
``numpy.random.default_rng``). Complex Gaussian entries are drawn as
``normal(size) + 1j * normal(size)`` in that order, so a given seed and
sequence of calls reproduces the same objects on any platform running the
same numpy bit generator.
"""

from __future__ import annotations

import numpy as np

from .protocol import QUERY, KrausChannel, Povm, Protocol
from .registers import RegisterLayout
from .tensor import DenseOperator


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def random_pure_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    psi = ginibre(rng, dim, 1)[:, 0]
    return psi / np.linalg.norm(psi)


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None, dims=None) -> DenseOperator:
    """``G G^dagger / Tr`` for a ``dim x rank`` Ginibre matrix (full rank by default)."""
    g = ginibre(rng, dim, rank or dim)
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DenseOperator(rho / np.trace(rho).real, tuple(dims) if dims else ())


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-random unitary from the phase-corrected QR decomposition."""
    q, r = np.linalg.qr(ginibre(rng, dim, dim))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = ginibre(rng, dim, dim)
    return (g + g.conj().T) / 2


def random_kraus_channel(rng: np.random.Generator, dim: int, rank: int) -> KrausChannel:
    """Slice a random ``dim*rank x dim`` isometry into ``rank`` Kraus operators."""
    v, _ = np.linalg.qr(ginibre(rng, dim * rank, dim))
    ops = tuple(v[k * dim : (k + 1) * dim, :] for k in range(rank))
    return KrausChannel(ops, label=f"random rank-{rank}")


def random_povm(rng: np.random.Generator, dim: int, outcomes: int) -> Povm:
    """Normalize random positive operators ``G_i`` by ``(sum G)^{-1/2}`` on both sides."""
    gs = []
    for _ in range(outcomes):
        g = ginibre(rng, dim, dim)
        gs.append(g @ g.conj().T)
    vals, vecs = np.linalg.eigh(sum(gs))
    inv_sqrt = (vecs * vals**-0.5) @ vecs.conj().T
    effects = [inv_sqrt @ g @ inv_sqrt for g in gs]
    return Povm(tuple((e + e.conj().T) / 2 for e in effects))


def random_protocol(
    rng: np.random.Generator,
    layout: RegisterLayout,
    max_queries: int,
    max_rank: int = 2,
) -> Protocol:
    """Random initial state on S, then ``t`` rounds of (query, random channel).

    ``t`` is uniform on ``0..max_queries``; the initial state's rank is
    uniform on ``1..dim(S)``; each channel's Kraus rank is uniform on
    ``1..max_rank``.
    """
    t = int(rng.integers(0, max_queries + 1))
    s_dim = layout.s_dim
    init = random_density(rng, s_dim, int(rng.integers(1, s_dim + 1)), layout.s_dims)
    steps = []
    for _ in range(t):
        steps.append(QUERY)
        steps.append(random_kraus_channel(rng, s_dim, int(rng.integers(1, max_rank + 1))))
    return Protocol(layout, init, tuple(steps))


def random_diagonal_phases(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Diagonal unitary with uniform random phases; conjugation preserves the diagonal."""
    return np.diag(np.exp(2j * np.pi * rng.random(dim)))
