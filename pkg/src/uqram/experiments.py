"""Experiment pipelines behind the command line: discrimination of memory
hypotheses, opacity checks and randomized opacity campaigns."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .discrimination import BinaryHypothesis, helstrom, trace_distance, tv_decomposition, tv_distance
from .errors import UsageError
from .fileformat import ProtocolFile, format_matrix
from .interface import diagonal_distribution, pinch, pinch_with_reference
from .protocol import (
    Protocol,
    basis_outputs,
    bell_memory,
    measure,
    measure_and_prepare_joint,
    mixture_reconstruct,
    run_protocol,
    run_protocol_with_reference,
)
from .registers import DEFAULT_MAX_DIM, make_layout
from .sampling import random_density, random_diagonal_phases, random_protocol, random_pure_state
from .tensor import DenseOperator, hermitian_eig, max_abs, partial_trace, purity

MODES = ("discriminate", "opacity-check", "basis-outputs")
DEVIATION_TOL = 1e-8
TOLERANCES = {
    "state_validation": 1e-9,
    "kraus_completeness": 1e-9,
    "povm_closure": 1e-9,
    "positive_part": 1e-12,
    "saturation": 1e-9,
    "deviation": DEVIATION_TOL,
}


@dataclass
class ExperimentReport:
    mode: str
    seed: int | None = None
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))
    induced_states: list | None = None
    p_success: float | None = None
    trace_norm_delta: float | None = None
    trace_distance: float | None = None
    tv_distance: float | None = None
    alpha: float | None = None
    saturated: bool | None = None
    povm_probabilities: list | None = None
    tables: list | None = None
    deviations: dict | None = None
    trials: list | None = None
    passed: bool = True

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        """Flat rows: per-trial for campaigns, per-memory or per-table otherwise."""
        rows = self.trials or self.tables or [
            {k: v for k, v in self.to_dict().items() if not isinstance(v, (list, dict))}
        ]
        rows = [{k: v for k, v in r.items() if not isinstance(v, (list, dict))} for r in rows]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()


def _floats(xs) -> list[float]:
    return [float(x) for x in np.asarray(xs).real]


def state_summary(rho: DenseOperator, label: str) -> dict:
    return {
        "label": label,
        "eigenvalues": _floats(hermitian_eig(rho).eigenvalues),
        "purity": purity(rho),
        "trace": float(np.real(rho.trace())),
    }


def _run(p: Protocol, rho) -> DenseOperator:
    if p.layout.q_dim > 1:
        return run_protocol_with_reference(p, rho)
    return run_protocol(p, rho)


def _memory_marginal(rho: DenseOperator, q_dim: int) -> DenseOperator:
    return partial_trace(rho, [0]) if q_dim > 1 else rho


def discriminate(pf: ProtocolFile, seed: int | None = None) -> ExperimentReport:
    if pf.hypotheses is None:
        raise UsageError("discriminate mode needs a \"hypotheses\" pair in the protocol file")
    p = pf.protocol
    pi0, pi1 = pf.priors or (0.5, 0.5)
    sigma0, sigma1 = (_run(p, h) for h in pf.hypotheses)
    result = helstrom(BinaryHypothesis(sigma0, sigma1, pi0, pi1))
    report = ExperimentReport(
        mode="discriminate",
        seed=seed,
        induced_states=[state_summary(sigma0, "sigma0"), state_summary(sigma1, "sigma1")],
        p_success=result.p_success,
        trace_norm_delta=result.trace_norm_delta,
        trace_distance=trace_distance(sigma0, sigma1),
    )
    q_dim = pf.q_dim
    dists = [diagonal_distribution(_memory_marginal(h, q_dim)) for h in pf.hypotheses]
    report.tv_distance = tv_distance(*dists)
    if q_dim == 1 and report.tv_distance > 1e-12:
        decomposition = tv_decomposition(dists[0], dists[1], basis_outputs(p))
        report.alpha = decomposition.alpha
        report.saturated = decomposition.saturated
    if p.final_povm is not None and q_dim == 1:
        report.povm_probabilities = [_floats(measure(s, p.final_povm)) for s in (sigma0, sigma1)]
    return report


def _random_memories(rng: np.random.Generator, p: Protocol, count: int) -> list[DenseOperator]:
    lay = p.layout
    dim = lay.m_dim * lay.q_dim
    dims = (lay.m_dim, lay.q_dim) if lay.q_dim > 1 else (lay.m_dim,)
    out = []
    for k in range(count):
        if k % 2 == 0:
            psi = random_pure_state(rng, dim)
            out.append(DenseOperator(np.outer(psi, psi.conj()), dims))
        else:
            out.append(random_density(rng, dim, int(rng.integers(2, dim + 1)), dims))
    return out


def _identity_deviations(p: Protocol, rho: DenseOperator, sigma_map) -> dict:
    """Deviation of the opacity and mixture identities for one memory state."""
    q_dim = p.layout.q_dim
    out = _run(p, rho)
    if q_dim > 1:
        pinched = run_protocol_with_reference(p, pinch_with_reference(rho))
        mixture = measure_and_prepare_joint(sigma_map, rho, q_dim)
    else:
        pinched = run_protocol(p, pinch(rho))
        mixture = mixture_reconstruct(diagonal_distribution(rho), sigma_map)
    return {"opacity": max_abs(out.matrix - pinched.matrix), "mixture": max_abs(out.matrix - mixture.matrix)}


def opacity_check(pf: ProtocolFile, seed: int = 0, samples: int = 4) -> ExperimentReport:
    p = pf.protocol
    memories = list(pf.hypotheses or ())
    labels = [f"hypothesis{i}" for i in range(len(memories))]
    rng = np.random.default_rng(seed)
    randoms = _random_memories(rng, p, samples)
    memories += randoms
    labels += [f"random{i}" for i in range(len(randoms))]
    sigma_map = basis_outputs(p)
    rows = []
    for label, rho in zip(labels, memories):
        rows.append({"memory": label, **_identity_deviations(p, rho, sigma_map)})
    worst = {
        "opacity": max((r["opacity"] for r in rows), default=0.0),
        "mixture": max((r["mixture"] for r in rows), default=0.0),
    }
    return ExperimentReport(
        mode="opacity-check",
        seed=seed,
        deviations=worst,
        trials=rows or None,
        passed=all(v <= DEVIATION_TOL for v in worst.values()),
    )


def basis_output_report(pf: ProtocolFile, seed: int | None = None) -> ExperimentReport:
    tables = []
    for table, sigma in basis_outputs(pf.protocol).items():
        tables.append({
            "table": str(table),
            "purity": purity(sigma),
            "eigenvalues": _floats(hermitian_eig(sigma).eigenvalues),
            "matrix": format_matrix(sigma.matrix),
        })
    return ExperimentReport(mode="basis-outputs", seed=seed, tables=tables)


def run_experiment(pf: ProtocolFile, mode: str, seed: int = 0, samples: int = 4) -> ExperimentReport:
    if mode == "discriminate":
        return discriminate(pf, seed)
    if mode == "opacity-check":
        return opacity_check(pf, seed, samples)
    if mode == "basis-outputs":
        return basis_output_report(pf, seed)
    raise UsageError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")


MEMORY_KINDS = ("pure", "mixed", "entangled", "bell")


def _phase_family(rng: np.random.Generator, n: int) -> tuple[DenseOperator, DenseOperator]:
    """Two cat states ``(|0..0> + e^{i phi}|1..1>)/sqrt 2`` with independent random phases."""
    base = bell_memory(1, n).matrix
    out = []
    for _ in range(2):
        u = random_diagonal_phases(rng, base.shape[0])
        out.append(DenseOperator(u @ base @ u.conj().T, (base.shape[0],)))
    return out[0], out[1]


def fuzz_trial(n: int, trial: int, seed: int, max_queries: int, q_dim: int = 2, max_dim: int = DEFAULT_MAX_DIM) -> dict:
    """One randomized opacity check; reproducible from ``(seed, trial)`` alone.

    Draw order from ``default_rng([seed, trial])``: R dimension (1 or 2),
    the protocol (see :func:`random_protocol`), then the memory state.
    The memory kind cycles through pure, mixed, entangled-with-Q and cat
    states by trial number.
    """
    rng = np.random.default_rng([seed, trial])
    r_dim = int(rng.integers(1, 3))
    kind = MEMORY_KINDS[trial % len(MEMORY_KINDS)]
    use_q = q_dim if kind == "entangled" else 1
    layout = make_layout(n, r_dim, use_q, max_dim=max_dim)
    p = random_protocol(rng, layout, max_queries)
    sigma_map = basis_outputs(p)
    m_dim = layout.m_dim

    if kind == "entangled":
        psi = random_pure_state(rng, m_dim * use_q)
        rho = DenseOperator(np.outer(psi, psi.conj()), (m_dim, use_q) if use_q > 1 else (m_dim,))
        u = np.kron(random_diagonal_phases(rng, m_dim), np.eye(use_q))
    elif kind == "bell":
        rho, twin = _phase_family(rng, n)
        u = None
    else:
        if kind == "pure":
            psi = random_pure_state(rng, m_dim)
            rho = DenseOperator(np.outer(psi, psi.conj()), (m_dim,))
        else:
            rho = random_density(rng, m_dim, int(rng.integers(2, m_dim + 1)), (m_dim,))
        u = random_diagonal_phases(rng, m_dim)
    if u is not None:
        twin = DenseOperator(u @ rho.matrix @ u.conj().T, rho.dims)

    dev = _identity_deviations(p, rho, sigma_map)
    dev["phase"] = max_abs(_run(p, rho).matrix - _run(p, twin).matrix)
    return {
        "trial": trial,
        "kind": kind,
        "r_dim": r_dim,
        "q_dim": use_q,
        "queries": p.queries,
        **dev,
    }


def fuzz_opacity(
    n: int,
    trials: int,
    max_queries: int,
    seed: int,
    q_dim: int = 2,
    max_dim: int = DEFAULT_MAX_DIM,
) -> ExperimentReport:
    """Randomized campaign for the opacity, mixture and phase-blindness identities.

    ``passed`` is false when any deviation exceeds :data:`DEVIATION_TOL`.
    """
    if not isinstance(trials, int) or trials < 1:
        raise UsageError(f"trials must be >= 1, got {trials!r}")
    if max_queries < 0:
        raise UsageError(f"max_queries must be >= 0, got {max_queries}")
    if seed < 0:
        raise UsageError(f"seed must be >= 0, got {seed}")
    make_layout(n, 2, q_dim, max_dim=max_dim)
    rows = [fuzz_trial(n, t, seed, max_queries, q_dim, max_dim) for t in range(trials)]
    worst = {key: max(r[key] for r in rows) for key in ("opacity", "mixture", "phase")}
    return ExperimentReport(
        mode="fuzz",
        seed=seed,
        deviations=worst,
        trials=rows,
        passed=all(v <= DEVIATION_TOL for v in worst.values()),
    )
