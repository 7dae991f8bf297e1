"""Protocol description files.

A protocol file is a JSON document::

    {
      "version": 1,
      "n": 1, "r_dim": 1, "q_dim": 1,
      "initial": "plus_minus" | {"matrix": MATRIX},
      "steps": [{"type": "query"},
                {"type": "channel", "kraus": [MATRIX, ...], "label": "..."}],
      "povm": [MATRIX, ...],                      # optional, on S
      "hypotheses": [MEMORY, MEMORY],             # optional
      "priors": [0.5, 0.5]                        # optional
    }

``MATRIX`` is a row-major list of rows, each row a list of ``[re, im]``
pairs. ``MEMORY`` is one of ``"phi_plus"``, ``"phi_minus"``,
``{"bell": NAME}``, ``{"ensemble": {"01": 0.5, ...}}`` or
``{"matrix": MATRIX}``. Hypotheses describe the memory M; when
``q_dim > 1`` a matrix may instead cover M (x) Q, and every other form is
extended by ``|0><0|`` on Q.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ArgumentError, ParseError, SchemaError, StateError, ValidationError
from .protocol import (
    QUERY,
    KrausChannel,
    Povm,
    Protocol,
    Query,
    bell_memory,
    ensemble_memory,
    plus_minus_state,
    validate_channel,
    validate_povm,
)
from .registers import DEFAULT_MAX_DIM, RegisterLayout, make_layout
from .tensor import DenseOperator, validate_state

FORMAT_VERSION = 1
PRESETS = ("example1", "example2", "example3")
BELL_STATES = {"phi_plus": 1, "phi_minus": -1}
_TOP_KEYS = {"version", "n", "r_dim", "q_dim", "initial", "steps", "povm", "hypotheses", "priors"}


@dataclass(frozen=True, eq=False)
class ProtocolFile:
    version: int
    protocol: Protocol
    hypotheses: tuple[DenseOperator, DenseOperator] | None = None
    priors: tuple[float, float] | None = None

    @property
    def layout(self) -> RegisterLayout:
        return self.protocol.layout

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def r_dim(self) -> int:
        return self.layout.r_dim

    @property
    def q_dim(self) -> int:
        return self.layout.q_dim


def _require_int(value, field: str, low: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < low:
        raise SchemaError(field, f"expected an integer >= {low}, got {value!r}")
    return value


def _number(x, field: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(field, f"expected a number, got {x!r}")
    return float(x)


def parse_matrix(value, field: str, dim: int | None = None) -> np.ndarray:
    """Decode a row-major ``[[[re, im], ...], ...]`` literal."""
    if not isinstance(value, list) or not value:
        raise SchemaError(field, "expected a non-empty list of rows")
    side = len(value)
    out = np.zeros((side, side), dtype=np.complex128)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != side:
            raise SchemaError(f"{field}[{i}]", f"expected a row of {side} [re, im] pairs")
        for j, entry in enumerate(row):
            if not isinstance(entry, list) or len(entry) != 2:
                raise SchemaError(f"{field}[{i}][{j}]", f"expected [re, im], got {entry!r}")
            out[i, j] = complex(_number(entry[0], f"{field}[{i}][{j}]"), _number(entry[1], f"{field}[{i}][{j}]"))
    if dim is not None and side != dim:
        raise SchemaError(field, f"matrix is {side}x{side}, expected {dim}x{dim}")
    return out


def format_matrix(mat) -> list:
    mat = np.asarray(mat, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in mat]


def _parse_initial(value, layout: RegisterLayout) -> DenseOperator:
    if value == "plus_minus":
        return plus_minus_state(layout)
    if isinstance(value, dict) and set(value) == {"matrix"}:
        mat = parse_matrix(value["matrix"], "initial.matrix", layout.s_dim)
        report = validate_state(mat)
        if not report.passed:
            raise StateError(f"initial: {report.describe()}")
        return DenseOperator(mat, layout.s_dims)
    raise SchemaError("initial", f"expected \"plus_minus\" or {{\"matrix\": ...}}, got {value!r}")


def _parse_steps(value, layout: RegisterLayout) -> tuple:
    if not isinstance(value, list):
        raise SchemaError("steps", "expected a list")
    steps = []
    for i, step in enumerate(value):
        field = f"steps[{i}]"
        if not isinstance(step, dict) or "type" not in step:
            raise SchemaError(field, "expected an object with a \"type\"")
        if step["type"] == "query":
            if set(step) != {"type"}:
                raise SchemaError(field, f"unexpected keys {sorted(set(step) - {'type'})}")
            steps.append(QUERY)
        elif step["type"] == "channel":
            extra = set(step) - {"type", "kraus", "label"}
            if extra:
                raise SchemaError(field, f"unexpected keys {sorted(extra)}")
            kraus = step.get("kraus")
            if not isinstance(kraus, list) or not kraus:
                raise SchemaError(f"{field}.kraus", "expected a non-empty list of matrices")
            ops = tuple(parse_matrix(k, f"{field}.kraus[{j}]", layout.s_dim) for j, k in enumerate(kraus))
            label = step.get("label", "")
            if not isinstance(label, str):
                raise SchemaError(f"{field}.label", "expected a string")
            ch = KrausChannel(ops, label)
            report = validate_channel(ch)
            if not report.passed:
                raise ValidationError(
                    f"{field}.kraus: Kraus completeness violated, "
                    f"sum K^dagger K deviates from identity by {report.completeness_deviation:.3e}"
                )
            steps.append(ch)
        else:
            raise SchemaError(f"{field}.type", f"expected \"query\" or \"channel\", got {step['type']!r}")
    return tuple(steps)


def _parse_povm(value, layout: RegisterLayout) -> Povm:
    if not isinstance(value, list) or not value:
        raise SchemaError("povm", "expected a non-empty list of matrices")
    povm = Povm(tuple(parse_matrix(e, f"povm[{i}]", layout.s_dim) for i, e in enumerate(value)))
    report = validate_povm(povm)
    if not report.passed:
        raise ValidationError(f"povm: {report.describe()}")
    return povm


def _with_reference(rho: np.ndarray, q_dim: int) -> np.ndarray:
    if q_dim == 1:
        return rho
    q0 = np.zeros((q_dim, q_dim))
    q0[0, 0] = 1.0
    return np.kron(rho, q0)


def _parse_memory(value, layout: RegisterLayout, field: str) -> DenseOperator:
    q_dim = layout.q_dim
    dims = (layout.m_dim, q_dim) if q_dim > 1 else (layout.m_dim,)
    if isinstance(value, str) or (isinstance(value, dict) and set(value) == {"bell"}):
        name = value if isinstance(value, str) else value["bell"]
        if name not in BELL_STATES:
            raise SchemaError(field, f"unknown named memory state {name!r}; known: {sorted(BELL_STATES)}")
        rho = bell_memory(BELL_STATES[name], layout.n).matrix
        return DenseOperator(_with_reference(rho, q_dim), dims)
    if isinstance(value, dict) and set(value) == {"ensemble"}:
        weights = value["ensemble"]
        if not isinstance(weights, dict) or not weights:
            raise SchemaError(f"{field}.ensemble", "expected a non-empty {table: weight} object")
        for key, w in weights.items():
            if len(key) != layout.num_addresses or set(key) - {"0", "1"}:
                raise SchemaError(f"{field}.ensemble", f"bad truth table {key!r}")
            if _number(w, f"{field}.ensemble[{key}]") < 0:
                raise ValidationError(f"{field}.ensemble: negative weight for {key}")
        total = sum(weights.values())
        if abs(total - 1) > 1e-9:
            raise ValidationError(f"{field}.ensemble: weights sum to {total}, not 1")
        rho = ensemble_memory(weights, layout.n).matrix
        return DenseOperator(_with_reference(rho, q_dim), dims)
    if isinstance(value, dict) and set(value) == {"matrix"}:
        mat = parse_matrix(value["matrix"], f"{field}.matrix")
        if mat.shape[0] == layout.m_dim:
            mat = _with_reference(mat, q_dim)
        elif mat.shape[0] != layout.m_dim * q_dim:
            raise SchemaError(f"{field}.matrix", f"dimension {mat.shape[0]} matches neither M nor M (x) Q")
        report = validate_state(mat)
        if not report.passed:
            raise StateError(f"{field}: {report.describe()}")
        return DenseOperator(mat, dims)
    raise SchemaError(field, f"unrecognized memory specification {value!r}")


def parse_protocol_document(doc, max_dim: int = DEFAULT_MAX_DIM) -> ProtocolFile:
    """Validate an already-decoded document."""
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "expected an object")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise SchemaError("<root>", f"unknown keys {sorted(extra)}")
    if "version" not in doc:
        raise SchemaError("version", "missing (mandatory)")
    if doc["version"] != FORMAT_VERSION:
        raise SchemaError("version", f"unsupported version {doc['version']!r}, expected {FORMAT_VERSION}")
    if "n" not in doc:
        raise SchemaError("n", "missing")
    n = _require_int(doc["n"], "n", 1)
    r_dim = _require_int(doc.get("r_dim", 1), "r_dim", 1)
    q_dim = _require_int(doc.get("q_dim", 1), "q_dim", 1)
    layout = make_layout(n, r_dim, q_dim, max_dim=max_dim)
    if "initial" not in doc:
        raise SchemaError("initial", "missing")
    initial = _parse_initial(doc["initial"], layout)
    steps = _parse_steps(doc.get("steps", []), layout)
    povm = _parse_povm(doc["povm"], layout) if doc.get("povm") is not None else None
    protocol = Protocol(layout, initial, steps, povm)

    hypotheses = None
    if doc.get("hypotheses") is not None:
        hyp = doc["hypotheses"]
        if not isinstance(hyp, list) or len(hyp) != 2:
            raise SchemaError("hypotheses", "expected a pair of memory specifications")
        hypotheses = tuple(_parse_memory(h, layout, f"hypotheses[{i}]") for i, h in enumerate(hyp))
    priors = None
    if doc.get("priors") is not None:
        pr = doc["priors"]
        if not isinstance(pr, list) or len(pr) != 2:
            raise SchemaError("priors", "expected a pair of numbers")
        priors = (_number(pr[0], "priors[0]"), _number(pr[1], "priors[1]"))
        if min(priors) < 0 or abs(sum(priors) - 1) > 1e-12:
            raise ValidationError(f"priors: {priors} do not sum to 1")
    return ProtocolFile(FORMAT_VERSION, protocol, hypotheses, priors)


def parse_protocol_file(text: str, max_dim: int = DEFAULT_MAX_DIM) -> ProtocolFile:
    """Parse and fully validate a protocol document.

    Raises :class:`ParseError` (with line and column) on malformed JSON,
    :class:`SchemaError` naming the offending field, or
    :class:`ValidationError` naming the violated invariant.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return parse_protocol_document(doc, max_dim=max_dim)


def to_document(pf: ProtocolFile) -> dict:
    p = pf.protocol
    doc = {
        "version": pf.version,
        "n": pf.n,
        "r_dim": pf.r_dim,
        "q_dim": pf.q_dim,
        "initial": {"matrix": format_matrix(p.initial_state.matrix)},
        "steps": [
            {"type": "query"} if isinstance(s, Query)
            else {"type": "channel", "kraus": [format_matrix(k) for k in s.operators], "label": s.label}
            for s in p.steps
        ],
    }
    if p.final_povm is not None:
        doc["povm"] = [format_matrix(e) for e in p.final_povm.effects]
    if pf.hypotheses is not None:
        doc["hypotheses"] = [{"matrix": format_matrix(h.matrix)} for h in pf.hypotheses]
    if pf.priors is not None:
        doc["priors"] = list(pf.priors)
    return doc


def _is_flat(obj) -> bool:
    # a number, an [re, im] pair, or a matrix row of pairs
    if not isinstance(obj, list):
        return not isinstance(obj, dict)
    return all(isinstance(x, (int, float)) for x in obj) or all(
        isinstance(x, list) and all(isinstance(y, (int, float)) for y in x) for x in obj
    )


def dumps(obj, indent: int = 0) -> str:
    """JSON with one matrix row per line."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if _is_flat(obj):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = [f"{pad}{json.dumps(k)}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}" if items else "{}"
    items = [pad + dumps(v, indent + 1) for v in obj]
    return "[\n" + ",\n".join(items) + "\n" + end + "]" if items else "[]"


def serialize_protocol_file(pf: ProtocolFile) -> str:
    return dumps(to_document(pf)) + "\n"


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ArgumentError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return resources.files("uqram.presets").joinpath(f"{name}.json").read_text()


def load_preset(name: str) -> ProtocolFile:
    return parse_protocol_file(preset_text(name))
