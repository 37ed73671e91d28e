"""Channel files and deterministic JSON output.

A channel file looks like::

    {"format": "qmap-channel", "version": 1, "dim": 2,
     "repr": {"type": "kraus", "operators": [[[[1, 0], [0, 0]], ...]]}}

Matrix entries are real numbers or ``[re, im]`` pairs.
"""
from __future__ import annotations

import json
import math
from typing import Any, Tuple

import numpy as np

from . import builders
from .channel import Channel, channel_from_choi, channel_from_kraus, unitary_channel
from .tensor_ops import DimensionError

FORMAT = "qmap-channel"
VERSION = 1
REPR_TYPES = ("kraus", "superoperator", "choi", "unitary", "unistochastic", "pauli", "bloch",
              "choi_map", "dilation", "classical_stochastic", "named")


class ChannelFileError(ValueError):
    """Malformed channel file; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = "", line: int = None):
        where = path or "<root>"
        if line is not None:
            where = f"line {line}"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


# -- JSON output ---------------------------------------------------------------

def _float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return "%.17g" % (x + 0.0)


def to_jsonable(obj: Any) -> Any:
    """Convert numpy containers to plain lists; complex becomes ``[re, im]``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _dump(to_jsonable(obj), indent, 0) + "\n"


def _dump(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
        if all(isinstance(v, list) and all(not isinstance(u, (list, dict)) for u in v) for v in obj) \
                and sum(len(v) for v in obj) <= 8:
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _dump(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(k) + ": " + _dump(v, indent, level + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def encode_matrix(M) -> list:
    M = np.asarray(M)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M.astype(complex)]


def encode_real_matrix(M) -> list:
    return [[float(x) for x in row] for row in np.asarray(M, dtype=float)]


# -- parsing -------------------------------------------------------------------

def _number(x, path: str) -> complex:
    if isinstance(x, bool):
        raise ChannelFileError("expected a number", path)
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise ChannelFileError("expected a number or an [re, im] pair", path)


def decode_matrix(obj, path: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise ChannelFileError("expected a non-empty list of rows", path)
    rows = []
    for i, row in enumerate(obj):
        if not isinstance(row, list) or not row:
            raise ChannelFileError("expected a non-empty row", f"{path}[{i}]")
        rows.append([_number(x, f"{path}[{i}][{j}]") for j, x in enumerate(row)])
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ChannelFileError(f"row has {len(row)} entries, expected {width}", f"{path}[{i}]")
    return np.array(rows, dtype=complex)


def decode_vector(obj, path: str, length: int = None, real: bool = True) -> np.ndarray:
    if not isinstance(obj, list):
        raise ChannelFileError("expected a list", path)
    v = np.array([_number(x, f"{path}[{i}]") for i, x in enumerate(obj)], dtype=complex)
    if length is not None and v.size != length:
        raise ChannelFileError(f"expected {length} entries, got {v.size}", path)
    if real:
        if np.any(v.imag != 0):
            raise ChannelFileError("entries must be real", path)
        return v.real
    return v


def _real(obj, path: str) -> float:
    z = _number(obj, path)
    if z.imag != 0:
        raise ChannelFileError("expected a real number", path)
    return z.real


def _field(d: dict, key: str, path: str):
    if not isinstance(d, dict):
        raise ChannelFileError("expected an object", path)
    if key not in d:
        raise ChannelFileError(f"missing field {key!r}", path)
    return d[key]


def _square(M: np.ndarray, n: int, path: str, what: str):
    if M.shape != (n, n):
        raise DimensionError(f"{path}: {what} has shape {M.shape}, expected {(n, n)}")


def channel_from_repr(rep: dict, dim: int, path: str = "repr") -> Channel:
    """Build the channel described by a ``repr`` object of declared dimension ``dim``."""
    kind = _field(rep, "type", path)
    if kind not in REPR_TYPES:
        raise ChannelFileError(f"unknown repr type {kind!r}; expected one of {list(REPR_TYPES)}",
                               f"{path}.type")
    n = dim
    try:
        if kind == "kraus":
            ops_obj = _field(rep, "operators", path)
            if not isinstance(ops_obj, list) or not ops_obj:
                raise ChannelFileError("expected a non-empty list", f"{path}.operators")
            ops = []
            for i, A in enumerate(ops_obj):
                M = decode_matrix(A, f"{path}.operators[{i}]")
                _square(M, n, f"{path}.operators[{i}]", "Kraus operator")
                ops.append(M)
            return channel_from_kraus(ops)
        if kind in ("superoperator", "choi"):
            M = decode_matrix(_field(rep, "matrix", path), f"{path}.matrix")
            _square(M, n * n, f"{path}.matrix", kind)
            return Channel(M, provenance="superop") if kind == "superoperator" else channel_from_choi(M)
        if kind == "unitary":
            U = decode_matrix(_field(rep, "matrix", path), f"{path}.matrix")
            _square(U, n, f"{path}.matrix", "unitary")
            return unitary_channel(U)
        if kind == "unistochastic":
            U = decode_matrix(_field(rep, "unitary", path), f"{path}.unitary")
            K = int(_real(rep.get("K", 1), f"{path}.K"))
            if K < 1:
                raise ChannelFileError("K must be >= 1", f"{path}.K")
            _square(U, n ** (K + 1), f"{path}.unitary", "coupling unitary")
            return builders.k_unistochastic_channel(U, K)
        if kind == "pauli":
            w = decode_vector(_field(rep, "weights", path), f"{path}.weights", 4)
            _require_qubit(n, path)
            return builders.pauli_channel(w)
        if kind == "bloch":
            _require_qubit(n, path)
            eta = decode_vector(_field(rep, "eta", path), f"{path}.eta", 3)
            kappa = decode_vector(rep.get("kappa", [0, 0, 0]), f"{path}.kappa", 3)
            return builders.channel_from_bloch(builders.BlochAffine(eta=eta, kappa=kappa))
        if kind == "choi_map":
            if n != 3:
                raise DimensionError(f"{path}: Choi map acts on N=3, declared dim is {n}")
            a, b, c = (_real(_field(rep, k, path), f"{path}.{k}") for k in "abc")
            return builders.choi_map(a, b, c)
        if kind == "dilation":
            U = decode_matrix(_field(rep, "unitary", path), f"{path}.unitary")
            sigma = decode_matrix(_field(rep, "env_state", path), f"{path}.env_state")
            k = sigma.shape[0]
            _square(sigma, k, f"{path}.env_state", "environment state")
            _square(U, n * k, f"{path}.unitary", "coupling unitary")
            return builders.environmental_channel(builders.EnvironmentSpec(sigma, U))
        if kind == "classical_stochastic":
            T = decode_matrix(_field(rep, "matrix", path), f"{path}.matrix")
            if np.any(T.imag != 0):
                raise ChannelFileError("transition matrix must be real", f"{path}.matrix")
            _square(T, n, f"{path}.matrix", "transition matrix")
            return builders.stochastic_embedding(T.real)
        family = _field(rep, "family", path)
        params = rep.get("params", [])
        if not isinstance(params, list):
            raise ChannelFileError("expected a list", f"{path}.params")
        ch = build_family(family, [_real(p, f"{path}.params[{i}]") for i, p in enumerate(params)])
        if ch.dim != n:
            raise DimensionError(f"{path}: family {family!r} gives N={ch.dim}, declared dim is {n}")
        return ch
    except (ChannelFileError, DimensionError):
        raise
    except ValueError as exc:
        raise ChannelFileError(str(exc), path) from None


def _require_qubit(n: int, path: str):
    if n != 2:
        raise DimensionError(f"{path}: one-qubit representation requires dim 2, declared {n}")


def parse_channel_document(doc: Any) -> Channel:
    if not isinstance(doc, dict):
        raise ChannelFileError("top level must be an object")
    fmt = _field(doc, "format", "")
    if fmt != FORMAT:
        raise ChannelFileError(f"expected format {FORMAT!r}, got {fmt!r}", "format")
    version = _field(doc, "version", "")
    if version != VERSION:
        raise ChannelFileError(f"unsupported version {version!r}", "version")
    dim = _field(doc, "dim", "")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ChannelFileError("dim must be a positive integer", "dim")
    return channel_from_repr(_field(doc, "repr", ""), dim)


def loads_channel(text: str) -> Tuple[Channel, dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChannelFileError(exc.msg, line=exc.lineno) from None
    return parse_channel_document(doc), doc


def read_channel(path) -> Tuple[Channel, dict]:
    with open(path, encoding="utf-8") as fh:
        return loads_channel(fh.read())


def channel_document(rep: dict, dim: int, source: dict = None) -> dict:
    doc = {"format": FORMAT, "version": VERSION, "dim": int(dim), "repr": rep}
    if source:
        doc["source"] = source
    return doc


# -- families reachable by name ------------------------------------------------

def _int(x: float, name: str) -> int:
    if float(x) != int(x):
        raise ValueError(f"{name} must be an integer, got {x}")
    return int(x)


FAMILY_PARAMS = {
    "identity": ("N?",),
    "phase_flip": ("p",),
    "bit_flip": ("p",),
    "depolarizing": ("x",),
    "amplitude_damping": ("p",),
    "linear": ("q",),
    "planar": ("q", "r"),
    "coarse_graining": ("N?",),
    "transposition": ("N?",),
    "depolarizing_general": ("N?", "x?"),
    "pauli": ("w0", "w1", "w2", "w3"),
    "bloch": ("eta_x", "eta_y", "eta_z", "kappa_x?", "kappa_y?", "kappa_z?"),
    "choi_map": ("a", "b", "c"),
}


def build_family(family: str, params) -> Channel:
    """Build a parametric family from a flat list of real parameters."""
    if family not in FAMILY_PARAMS:
        raise ValueError(f"unknown family {family!r}; known: {sorted(FAMILY_PARAMS)}")
    spec = FAMILY_PARAMS[family]
    required = [s for s in spec if not s.endswith("?")]
    if not len(required) <= len(params) <= len(spec):
        raise ValueError(f"{family} takes parameters {' '.join(spec)}, got {len(params)}")
    p = list(params)
    if family == "pauli":
        return builders.pauli_channel(p)
    if family == "bloch":
        p += [0.0] * (6 - len(p))
        return builders.channel_from_bloch(builders.BlochAffine(eta=np.array(p[:3]),
                                                                kappa=np.array(p[3:])))
    if family == "choi_map":
        return builders.choi_map(*p)
    if family in ("identity", "coarse_graining", "transposition", "depolarizing_general"):
        if p:
            p[0] = _int(p[0], "N")
    return builders.named_channel(family, *p)
