import json

import numpy as np
import pytest

from uqram.errors import ArgumentError, CapacityError, ParseError, SchemaError, StateError, ValidationError
from uqram.fileformat import (
    PRESETS,
    ProtocolFile,
    format_matrix,
    load_preset,
    parse_matrix,
    parse_protocol_document,
    parse_protocol_file,
    preset_text,
    serialize_protocol_file,
)
from uqram.protocol import (
    QUERY,
    KrausChannel,
    Protocol,
    bell_memory,
    ensemble_memory,
    plus_minus_state,
    x_basis_povm,
)
from uqram.registers import make_layout
from uqram.sampling import random_density, random_povm, random_protocol

PLUS = np.array([[1, 1], [1, 1]]) / 2
MINUS = np.array([[1, -1], [-1, 1]]) / 2


def minimal(**overrides):
    doc = {"version": 1, "n": 1, "initial": "plus_minus", "steps": [{"type": "query"}]}
    doc.update(overrides)
    return doc


def matrix_literal(mat):
    return format_matrix(mat)


class TestMatrixLiterals:
    def test_round_trip(self, rng):
        mat = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        np.testing.assert_array_equal(parse_matrix(format_matrix(mat), "m"), mat)

    def test_non_square_rejected(self):
        with pytest.raises(SchemaError, match=r"m\[1\]"):
            parse_matrix([[[1, 0], [0, 0]], [[0, 0]]], "m")

    def test_bad_entry_names_position(self):
        with pytest.raises(SchemaError) as info:
            parse_matrix([[[1, 0], [0, 0]], [[0, 0], [1]]], "m")
        assert info.value.field == "m[1][1]"

    def test_non_numeric(self):
        with pytest.raises(SchemaError, match="number"):
            parse_matrix([[["a", 0]]], "m")

    def test_wrong_dimension(self):
        with pytest.raises(SchemaError, match="expected 4x4"):
            parse_matrix(format_matrix(np.eye(2)), "m", dim=4)


class TestShippedExamples:
    def test_example1_structure(self):
        pf = load_preset("example1")
        assert (pf.n, pf.r_dim, pf.q_dim) == (1, 1, 1)
        assert pf.protocol.queries == 1
        np.testing.assert_allclose(pf.protocol.initial_state.matrix, np.kron(PLUS, MINUS), atol=1e-15)
        np.testing.assert_allclose(pf.hypotheses[0].matrix, np.diag([1, 0, 0, 0]), atol=1e-15)
        np.testing.assert_allclose(pf.hypotheses[1].matrix, np.diag([0, 1, 0, 0]), atol=1e-15)
        assert pf.priors == (0.5, 0.5)

    def test_example1_povm_is_x_basis(self):
        pf = load_preset("example1")
        ref = x_basis_povm(pf.layout)
        for got, want in zip(pf.protocol.final_povm.effects, ref.effects):
            np.testing.assert_allclose(got, want, atol=1e-15)

    def test_example2_ensembles(self):
        pf = load_preset("example2")
        np.testing.assert_allclose(pf.hypotheses[0].matrix, ensemble_memory({"00": 0.5, "11": 0.5}, 1).matrix)
        np.testing.assert_allclose(pf.hypotheses[1].matrix, ensemble_memory({"00": 0.5, "01": 0.5}, 1).matrix)

    def test_example3_bell_pair(self):
        pf = load_preset("example3")
        np.testing.assert_allclose(pf.hypotheses[0].matrix, bell_memory(1, 1).matrix)
        np.testing.assert_allclose(pf.hypotheses[1].matrix, bell_memory(-1, 1).matrix)

    @pytest.mark.parametrize("name", PRESETS)
    def test_presets_parse(self, name):
        assert load_preset(name).protocol.queries == 1

    def test_unknown_preset(self):
        with pytest.raises(ArgumentError, match="unknown preset"):
            preset_text("example9")


class TestValidationErrors:
    def test_incomplete_kraus_names_completeness(self):
        half = matrix_literal(0.5 * np.eye(4))
        doc = minimal(steps=[{"type": "query"}, {"type": "channel", "kraus": [half]}])
        with pytest.raises(ValidationError, match="completeness") as info:
            parse_protocol_document(doc)
        assert "steps[1].kraus" in str(info.value)

    def test_povm_not_closing(self):
        doc = minimal(povm=[matrix_literal(0.5 * np.eye(4)), matrix_literal(0.4 * np.eye(4))])
        with pytest.raises(ValidationError, match="POVM closure"):
            parse_protocol_document(doc)

    def test_negative_povm_effect(self):
        e0 = np.diag([1.5, 1, 1, 1])
        e1 = np.diag([-0.5, 0, 0, 0])
        with pytest.raises(ValidationError, match="povm"):
            parse_protocol_document(minimal(povm=[matrix_literal(e0), matrix_literal(e1)]))

    def test_initial_state_must_be_density(self):
        with pytest.raises(StateError, match="initial"):
            parse_protocol_document(minimal(initial={"matrix": matrix_literal(2 * np.eye(4) / 4)}))

    def test_hypothesis_not_a_state(self):
        bad = {"matrix": matrix_literal(np.diag([1.0, 1.0, 0, 0]))}
        with pytest.raises(StateError, match=r"hypotheses\[1\]"):
            parse_protocol_document(minimal(hypotheses=["phi_plus", bad]))

    def test_ensemble_weights_must_sum_to_one(self):
        with pytest.raises(ValidationError, match="sum"):
            parse_protocol_document(minimal(hypotheses=[{"ensemble": {"00": 0.5}}, "phi_plus"]))

    def test_priors_must_be_distribution(self):
        with pytest.raises(ValidationError, match="priors"):
            parse_protocol_document(minimal(priors=[0.6, 0.6]))

    def test_capacity(self):
        with pytest.raises(CapacityError):
            parse_protocol_document(minimal(n=2), max_dim=64)


class TestSyntaxAndSchema:
    def test_syntax_error_reports_line(self):
        text = '{\n  "version": 1,\n  "n": 1\n  "initial": "plus_minus"\n}\n'
        with pytest.raises(ParseError) as info:
            parse_protocol_file(text)
        assert info.value.line == 4
        assert "line 4" in str(info.value)

    @pytest.mark.parametrize(
        "doc, field",
        [
            ({"n": 1, "initial": "plus_minus"}, "version"),
            (minimal(version=2), "version"),
            (minimal(n=0), "n"),
            (minimal(n="1"), "n"),
            (minimal(r_dim=1.5), "r_dim"),
            (minimal(initial="zero"), "initial"),
            (minimal(steps={"type": "query"}), "steps"),
            (minimal(steps=[{"type": "measure"}]), "steps[0].type"),
            (minimal(steps=[{"type": "query", "extra": 1}]), "steps[0]"),
            (minimal(steps=[{"type": "channel", "kraus": []}]), "steps[0].kraus"),
            (minimal(povm=[]), "povm"),
            (minimal(hypotheses=["phi_plus"]), "hypotheses"),
            (minimal(hypotheses=["phi_plus", "psi_plus"]), "hypotheses[1]"),
            (minimal(hypotheses=["phi_plus", {"ensemble": {"0": 1.0}}]), "hypotheses[1].ensemble"),
            (minimal(priors=[1.0]), "priors"),
            (minimal(colour="blue"), "<root>"),
        ],
    )
    def test_schema_error_names_field(self, doc, field):
        with pytest.raises(SchemaError) as info:
            parse_protocol_document(doc)
        assert info.value.field == field

    def test_memory_matrix_wrong_dimension(self):
        with pytest.raises(SchemaError, match="neither M nor"):
            parse_protocol_document(minimal(hypotheses=[{"matrix": matrix_literal(np.eye(2) / 2)}, "phi_plus"]))


class TestMemorySpecifications:
    def test_named_states_extended_on_reference(self):
        pf = parse_protocol_document(minimal(q_dim=2, hypotheses=["phi_plus", {"bell": "phi_minus"}]))
        q0 = np.diag([1.0, 0.0])
        np.testing.assert_allclose(pf.hypotheses[0].matrix, np.kron(bell_memory(1, 1).matrix, q0))
        np.testing.assert_allclose(pf.hypotheses[1].matrix, np.kron(bell_memory(-1, 1).matrix, q0))
        assert pf.hypotheses[0].dims == (4, 2)

    def test_joint_matrix_on_m_and_q(self, rng):
        joint = random_density(rng, 8).matrix
        pf = parse_protocol_document(minimal(q_dim=2, hypotheses=[{"matrix": matrix_literal(joint)}, "phi_plus"]))
        np.testing.assert_allclose(pf.hypotheses[0].matrix, joint, atol=1e-15)

    def test_ensemble_with_two_addresses(self):
        pf = parse_protocol_document(
            {
                "version": 1,
                "n": 2,
                "initial": {"matrix": matrix_literal(np.eye(8) / 8)},
                "hypotheses": [{"ensemble": {"0110": 1.0}}, {"ensemble": {"0000": 0.25, "1111": 0.75}}],
            }
        )
        assert pf.hypotheses[0].matrix[0b0110, 0b0110] == pytest.approx(1.0)
        assert pf.hypotheses[1].matrix[15, 15] == pytest.approx(0.75)


class TestRoundTrip:
    @pytest.mark.parametrize("name", PRESETS)
    def test_presets(self, name):
        pf = load_preset(name)
        again = parse_protocol_file(serialize_protocol_file(pf))
        self.assert_same(pf, again)

    @pytest.mark.parametrize("r_dim, q_dim", [(1, 1), (2, 1), (1, 2), (3, 2)])
    def test_random_protocols(self, rng, r_dim, q_dim):
        layout = make_layout(1, r_dim, q_dim)
        p = random_protocol(rng, layout, 3)
        p = Protocol(layout, p.initial_state, p.steps, random_povm(rng, layout.s_dim, 3))
        hyp = tuple(random_density(rng, layout.m_dim * q_dim, dims=(4, q_dim) if q_dim > 1 else (4,)) for _ in range(2))
        pf = ProtocolFile(1, p, hyp, (0.3, 0.7))
        again = parse_protocol_file(serialize_protocol_file(pf))
        self.assert_same(pf, again)
        assert again.priors == (0.3, 0.7)

    def test_serialized_text_is_json_with_row_lines(self):
        text = serialize_protocol_file(load_preset("example1"))
        doc = json.loads(text)
        assert doc["version"] == 1
        assert '[[0.5, 0.0], [0.0, 0.0], [0.5, 0.0], [0.0, 0.0]]' in text

    def test_query_and_channel_steps_survive(self):
        layout = make_layout(1)
        idle = KrausChannel((np.eye(4),), "identity")
        pf = ProtocolFile(1, Protocol(layout, plus_minus_state(layout), (QUERY, idle, QUERY)))
        again = parse_protocol_file(serialize_protocol_file(pf))
        assert again.protocol.queries == 2
        assert again.protocol.steps[1].label == "identity"

    @staticmethod
    def assert_same(a, b):
        assert (a.n, a.r_dim, a.q_dim) == (b.n, b.r_dim, b.q_dim)
        np.testing.assert_allclose(a.protocol.initial_state.matrix, b.protocol.initial_state.matrix, atol=1e-15, rtol=0)
        assert len(a.protocol.steps) == len(b.protocol.steps)
        for s, t in zip(a.protocol.steps, b.protocol.steps):
            assert type(s) is type(t)
            if isinstance(s, KrausChannel):
                for k, l in zip(s.operators, t.operators):
                    np.testing.assert_allclose(np.asarray(k), np.asarray(l), atol=1e-15, rtol=0)
        if a.protocol.final_povm is not None:
            for e, f in zip(a.protocol.final_povm.effects, b.protocol.final_povm.effects):
                np.testing.assert_allclose(np.asarray(e), np.asarray(f), atol=1e-15, rtol=0)
        if a.hypotheses is not None:
            for h, g in zip(a.hypotheses, b.hypotheses):
                np.testing.assert_allclose(h.matrix, g.matrix, atol=1e-15, rtol=0)
