import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uqram.discrimination import (
    BinaryHypothesis,
    achieved_success,
    dimension_bound,
    helstrom,
    pgm,
    povm_success,
    trace_distance,
    tv_decomposition,
    tv_distance,
)
from uqram.errors import ArgumentError, DegenerateInputError, StateError, ValidationError
from uqram.interface import diagonal_distribution
from uqram.protocol import Povm, basis_outputs, example_protocol, mixture_reconstruct, validate_povm
from uqram.registers import TruthTable, make_layout
from uqram.sampling import random_density, random_povm, random_protocol, random_pure_state
from uqram.tensor import partial_trace

PLUS = np.array([[1, 1], [1, 1]]) / 2
MINUS = np.array([[1, -1], [-1, 1]]) / 2
ZERO = np.diag([1.0, 0.0])
ONE = np.diag([0.0, 1.0])


def best_projective_qubit(s0, s1, pi0, pi1, steps=181):
    """Scan rank-1 projectors |n><n| over a Bloch-sphere grid, plus the trivial tests."""
    best = max(pi0, pi1)
    for theta in np.linspace(0, np.pi, steps):
        for phi in np.linspace(0, 2 * np.pi, 2 * steps):
            v = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
            p = np.outer(v, v.conj())
            val = pi0 * np.trace(p @ s0).real + pi1 * np.trace((np.eye(2) - p) @ s1).real
            best = max(best, val)
    return best


class TestHelstrom:
    def test_plus_versus_maximally_mixed(self):
        res = helstrom(BinaryHypothesis(PLUS, np.eye(2) / 2))
        assert res.p_success == pytest.approx(0.75, abs=1e-12)
        np.testing.assert_allclose(res.decide0_projector.matrix, PLUS, atol=1e-12)
        np.testing.assert_allclose(res.delta_eigenvalues, [0.25, -0.25], atol=1e-12)

    def test_identical_states(self, rng):
        rho = random_density(rng, 3)
        assert helstrom(BinaryHypothesis(rho, rho)).p_success == pytest.approx(0.5, abs=1e-12)

    def test_orthogonal_pure_states(self):
        assert helstrom(BinaryHypothesis(PLUS, MINUS)).p_success == pytest.approx(1, abs=1e-12)

    def test_matches_grid_search_oracle(self, rng):
        for _ in range(3):
            s0, s1 = random_density(rng, 2).matrix, random_density(rng, 2).matrix
            pi0 = float(rng.uniform(0.1, 0.9))
            res = helstrom(BinaryHypothesis(s0, s1, pi0, 1 - pi0))
            grid = best_projective_qubit(s0, s1, pi0, 1 - pi0)
            assert grid <= res.p_success + 1e-12
            assert res.p_success - grid < 1e-3

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 5), pi0=st.floats(0, 1))
    def test_projector_achieves_optimum(self, seed, dim, pi0):
        r = np.random.default_rng(seed)
        h = BinaryHypothesis(random_density(r, dim), random_density(r, dim, 1), pi0, 1 - pi0)
        res = helstrom(h)
        p = res.decide0_projector.matrix
        assert np.max(np.abs(p @ p - p)) < 1e-9
        assert achieved_success(h, p) == pytest.approx(res.p_success, abs=1e-9)
        assert res.p_success >= max(pi0, 1 - pi0) - 1e-12

    def test_invalid_hypotheses(self):
        with pytest.raises(ValidationError):
            BinaryHypothesis(PLUS, MINUS, 0.6, 0.6)
        with pytest.raises(StateError):
            BinaryHypothesis(np.diag([1.5, -0.5]), MINUS)
        with pytest.raises(ArgumentError):
            BinaryHypothesis(PLUS, np.eye(3) / 3)


class TestDistances:
    def test_trace_distance_examples(self, rng):
        rho = random_density(rng, 4)
        assert trace_distance(rho, rho) == pytest.approx(0, abs=1e-12)
        assert trace_distance(PLUS, np.eye(2) / 2) == pytest.approx(0.5)
        assert trace_distance(ZERO, ONE) == pytest.approx(1)
        with pytest.raises(ArgumentError):
            trace_distance(ZERO, np.eye(3) / 3)

    def test_tv_examples(self):
        assert tv_distance([0.5, 0.5], [0.5, 0.5]) == 0
        assert tv_distance([1, 0], [0, 1]) == 1
        assert tv_distance([0.5, 0, 0, 0.5], [0.5, 0.5, 0, 0]) == pytest.approx(0.5)
        with pytest.raises(ArgumentError):
            tv_distance([1, 0], [1, 0, 0])
        with pytest.raises(ValidationError):
            tv_distance([0.7, 0], [1, 0])


class TestTvDecomposition:
    def test_example_two_instance(self):
        sig = basis_outputs(example_protocol())
        dec = tv_decomposition({"00": 0.5, "11": 0.5}, {"00": 0.5, "01": 0.5}, sig)
        assert dec.alpha == pytest.approx(0.5)
        np.testing.assert_allclose(dec.q_plus, [0, 0, 0, 1])
        np.testing.assert_allclose(dec.q_minus, [0, 1, 0, 0])
        np.testing.assert_allclose(dec.tau_plus.matrix, np.kron(PLUS, MINUS), atol=1e-12)
        np.testing.assert_allclose(dec.tau_minus.matrix, np.kron(MINUS, MINUS), atol=1e-12)
        assert dec.saturated

    def test_point_masses_orthogonal(self):
        sig = {TruthTable.from_string("0"): ZERO, TruthTable.from_string("1"): ONE}
        dec = tv_decomposition([1, 0], [0, 1], sig)
        assert dec.alpha == 1 and dec.saturated

    def test_point_masses_equal_outputs(self):
        sig = {TruthTable.from_string("0"): PLUS, TruthTable.from_string("1"): PLUS}
        dec = tv_decomposition([1, 0], [0, 1], sig)
        assert dec.alpha == 1
        assert dec.tau_distance == pytest.approx(0, abs=1e-12)
        assert not dec.saturated

    def test_zero_tv_is_degenerate(self):
        with pytest.raises(DegenerateInputError):
            tv_decomposition([0.5, 0, 0, 0.5], [0.5, 0, 0, 0.5], basis_outputs(example_protocol()))

    def test_identity_and_bound_on_random_protocols(self, rng):
        for _ in range(20):
            p = random_protocol(rng, make_layout(1, int(rng.integers(1, 3))), 3)
            sig = basis_outputs(p)
            p0, p1 = rng.dirichlet(np.ones(4) * 0.5), rng.dirichlet(np.ones(4) * 0.5)
            s0, s1 = mixture_reconstruct(p0, sig), mixture_reconstruct(p1, sig)
            dec = tv_decomposition(p0, p1, sig)
            diff = s0.matrix - s1.matrix - dec.alpha * (dec.tau_plus.matrix - dec.tau_minus.matrix)
            assert np.max(np.abs(diff)) < 1e-10
            assert np.all((dec.q_plus == 0) | (dec.q_minus == 0))
            np.testing.assert_allclose(dec.alpha * (dec.q_plus - dec.q_minus), p0 - p1, atol=1e-12)
            assert trace_distance(s0, s1) <= tv_distance(p0, p1) + 1e-9
            assert trace_distance(s0, s1) == pytest.approx(dec.alpha * dec.tau_distance, abs=1e-10)

    def test_saturation_gives_helstrom_value(self):
        sig = basis_outputs(example_protocol())
        p0, p1 = [0.5, 0, 0, 0.5], [0.5, 0.5, 0, 0]
        dec = tv_decomposition(p0, p1, sig)
        s0, s1 = mixture_reconstruct(p0, sig), mixture_reconstruct(p1, sig)
        assert dec.saturated
        assert trace_distance(s0, s1) == pytest.approx(dec.alpha, abs=1e-8)
        assert helstrom(BinaryHypothesis(s0, s1)).p_success == pytest.approx(0.5 * (1 + dec.alpha), abs=1e-8)


class TestPovmSuccess:
    def test_orthogonal_pair(self):
        assert povm_success([ZERO, ONE], [0.5, 0.5], Povm((ZERO, ONE))) == pytest.approx(1)

    def test_four_tables_bounded_by_half(self, rng):
        sig = basis_outputs(example_protocol())
        states = [partial_trace(s, [0]) for s in sig.values()]
        x_basis = Povm((PLUS, MINUS, np.zeros((2, 2)), np.zeros((2, 2))))
        assert povm_success(states, np.full(4, 0.25), x_basis) == pytest.approx(0.5)
        for _ in range(50):
            assert povm_success(states, np.full(4, 0.25), random_povm(rng, 2, 4)) <= 0.5 + 1e-9

    def test_uniform_states(self, rng):
        for k in (2, 3, 5):
            povm = random_povm(rng, 3, k)
            value = povm_success([np.eye(3) / 3] * k, np.full(k, 1 / k), povm)
            assert value == pytest.approx(1 / k)

    def test_count_mismatch(self):
        with pytest.raises(ArgumentError):
            povm_success([ZERO, ONE], [0.5, 0.5], Povm((ZERO, ONE - 0.5 * ONE, 0.5 * ONE)))
        with pytest.raises(ArgumentError):
            povm_success([ZERO, ONE], [1.0], Povm((ZERO, ONE)))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 3), k=st.integers(2, 6))
    def test_dimension_bound(self, seed, dim, k):
        r = np.random.default_rng(seed)
        states = [random_density(r, dim, int(r.integers(1, dim + 1))) for _ in range(k)]
        priors = np.full(k, 1 / k)
        for povm in (random_povm(r, dim, k), pgm(states, priors)):
            assert povm_success(states, priors, povm) <= dimension_bound(dim, k) + 1e-9


class TestPgm:
    def test_orthogonal_states_give_projective_measurement(self):
        povm = pgm([ZERO, ONE], [0.5, 0.5])
        np.testing.assert_allclose(povm.effects[0], ZERO, atol=1e-12)
        np.testing.assert_allclose(povm.effects[1], ONE, atol=1e-12)

    def test_identical_states(self, rng):
        rho = random_density(rng, 3)
        povm = pgm([rho, rho, rho], [0.2, 0.3, 0.5])
        for e, p in zip(povm.effects, [0.2, 0.3, 0.5]):
            np.testing.assert_allclose(e, p * np.eye(3), atol=1e-10)

    def test_kernel_goes_to_outcome_zero(self):
        povm = pgm([ZERO, ZERO], [0.5, 0.5])
        np.testing.assert_allclose(povm.effects[0], np.diag([0.5, 1.0]), atol=1e-12)
        np.testing.assert_allclose(sum(povm.effects), np.eye(2), atol=1e-12)

    @pytest.mark.parametrize("trial", range(20))
    def test_random_ensemble_bounds(self, rng, trial):
        # with skewed priors the PGM can fall below max(prior); sum p_i^2 still holds
        k, d = 3, 2
        states = [random_density(rng, d, int(rng.integers(1, d + 1))) for _ in range(k)]
        priors = rng.dirichlet(np.full(k, 0.3))
        povm = pgm(states, priors)
        assert validate_povm(povm).closure_deviation < 1e-12
        value = povm_success(states, priors, povm)
        assert np.sum(priors**2) - 1e-12 <= value <= 1 + 1e-12
        uniform = np.full(k, 1 / k)
        value = povm_success(states, uniform, pgm(states, uniform))
        assert 1 / k - 1e-12 <= value <= dimension_bound(d, k) + 1e-9

    def test_can_fall_below_best_prior(self):
        # a strong prior on one state, two nearly parallel states: PGM hedges and loses
        a = np.array([1.0, 0.0])
        b = np.array([np.cos(0.3), np.sin(0.3)])
        states = [np.outer(a, a), np.outer(b, b)]
        priors = [0.95, 0.05]
        assert povm_success(states, priors, pgm(states, priors)) < 0.95

    def test_near_singular_average_still_closes(self):
        states = [np.diag([1.0, 0.0]), np.diag([1.0 - 1e-9, 1e-9])]
        povm = pgm(states, [1 - 1e-6, 1e-6])
        report = validate_povm(povm)
        assert report.passed and report.closure_deviation < 1e-12

    def test_pure_state_pair_known_value(self):
        # for two equiprobable pure states the PGM success is (1 + sqrt(1 - |<a|b>|^2)) / 2
        a = np.array([1, 0])
        b = np.array([np.cos(0.4), np.sin(0.4)])
        states = [np.outer(a, a), np.outer(b, b)]
        value = povm_success(states, [0.5, 0.5], pgm(states, [0.5, 0.5]))
        assert value == pytest.approx(0.5 * (1 + np.sqrt(1 - np.cos(0.4) ** 2)), abs=1e-12)
