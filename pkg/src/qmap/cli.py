"""Command-line front end: ``qmap analyze | build | sweep``."""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import builders
from .channel import Channel, NotCompletelyPositive, channel_from_kraus, kraus_rank, entropy
from .io import (
    FAMILY_PARAMS,
    ChannelFileError,
    build_family,
    channel_document,
    decode_matrix,
    decode_vector,
    dumps,
    encode_matrix,
    encode_real_matrix,
    read_channel,
)
from .positivity import ccp_value, choi_map_decomposable, choi_map_positive, cp_value, neg_rank
from .channel import is_hermiticity_preserving, is_trace_preserving, is_unital, psd_threshold
from .report import DEFAULT_RESTARTS, DEFAULT_TOL, analyze
from .tensor_ops import DimensionError

EXIT_OK, EXIT_PARSE, EXIT_DIM = 0, 2, 3
GRID_CAP = 10000
FILE_FAMILIES = ("rotation", "unistochastic", "orthostochastic", "classical_stochastic",
                 "dilation", "external_field")
SWEEP_TEMPLATES = dict(FAMILY_PARAMS, pauli_edge=("s",))


class UsageError(ValueError):
    pass


def _fail(msg: str, code: int) -> int:
    print(f"qmap: error: {msg}", file=sys.stderr)
    return code


def resolve_seed(explicit: Optional[int]) -> int:
    """``--seed`` wins, then ``QMAP_SEED``, then 0."""
    if explicit is not None:
        return explicit
    env = os.environ.get("QMAP_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"QMAP_SEED must be an integer, got {env!r}") from None


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- analyze ---------------------------------------------------------------------

def cmd_analyze(args) -> int:
    seed = resolve_seed(args.seed)
    raw = Path(args.file).read_bytes()
    ch, doc = read_channel(args.file)
    rep = analyze(ch, doc, raw=raw, source_name=Path(args.file).name, deep=args.deep,
                  tol=args.tol, seed=seed, restarts=args.restarts)
    _emit(dumps(rep), args.out)
    return EXIT_OK


# -- build -----------------------------------------------------------------------

def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ChannelFileError(f"{path}: {exc.msg}", line=exc.lineno) from None


def _matrix_payload(obj, key: str, path: str) -> np.ndarray:
    """Accept a bare matrix, ``{key: matrix}`` or a channel file with a matrix repr."""
    if isinstance(obj, dict):
        if key in obj:
            return decode_matrix(obj[key], key)
        rep = obj.get("repr", {})
        for k in (key, "matrix", "unitary"):
            if k in rep:
                return decode_matrix(rep[k], f"repr.{k}")
        raise ChannelFileError(f"no {key!r} matrix found", path)
    return decode_matrix(obj, "<root>")


def build_document(family: str, params: Sequence[float], from_unitary: Optional[str] = None,
                   from_file: Optional[str] = None, K: int = 1) -> Tuple[Channel, dict]:
    source = {"family": family, "params": [float(p) for p in params]}
    if family in ("rotation", "unistochastic", "orthostochastic"):
        path = from_unitary or from_file
        if not path:
            raise UsageError(f"{family} needs --from-unitary PATH")
        U = _matrix_payload(_load_json(path), "unitary", path)
        if family == "rotation":
            ch = builders.rotation(U)
            return ch, channel_document({"type": "unitary", "matrix": encode_matrix(U)}, ch.dim, source)
        if family == "orthostochastic":
            if np.any(U.imag != 0):
                raise ChannelFileError("orthostochastic coupling must be real", path)
            ch = builders.orthostochastic_channel(U.real)
            K = 1
        else:
            ch = builders.k_unistochastic_channel(U, K)
        rep = {"type": "unistochastic", "unitary": encode_matrix(U), "K": K}
        return ch, channel_document(rep, ch.dim, source)
    if family in ("classical_stochastic", "dilation", "external_field"):
        if not from_file:
            raise UsageError(f"{family} needs --from-file PATH")
        obj = _load_json(from_file)
        if family == "classical_stochastic":
            T = _matrix_payload(obj, "matrix", from_file)
            if np.any(T.imag != 0):
                raise ChannelFileError("transition matrix must be real", from_file)
            ch = builders.stochastic_embedding(T.real)
            rep = {"type": "classical_stochastic", "matrix": encode_real_matrix(T.real)}
            return ch, channel_document(rep, ch.dim, source)
        if not isinstance(obj, dict):
            raise ChannelFileError("expected an object", from_file)
        if family == "dilation":
            U = decode_matrix(obj.get("unitary"), "unitary")
            sigma = decode_matrix(obj.get("env_state"), "env_state")
            ch = builders.environmental_channel(builders.EnvironmentSpec(sigma, U))
            rep = {"type": "dilation", "unitary": encode_matrix(U), "env_state": encode_matrix(sigma)}
            return ch, channel_document(rep, ch.dim, source)
        ps = decode_vector(obj.get("weights"), "weights")
        Vs = [decode_matrix(V, f"unitaries[{i}]") for i, V in enumerate(obj.get("unitaries") or [])]
        ch = builders.random_external_field(ps, Vs)
        return ch, _kraus_document(ch, source)
    if family not in FAMILY_PARAMS:
        known = sorted(set(FAMILY_PARAMS) | set(FILE_FAMILIES))
        raise UsageError(f"unknown family {family!r}; known: {', '.join(known)}")
    ch = build_family(family, list(params))
    if family == "pauli":
        rep = {"type": "pauli", "weights": [float(p) for p in params]}
    elif family == "bloch":
        p = list(params) + [0.0] * (6 - len(params))
        rep = {"type": "bloch", "eta": [float(v) for v in p[:3]], "kappa": [float(v) for v in p[3:]]}
    elif family == "choi_map":
        rep = {"type": "choi_map", "a": float(params[0]), "b": float(params[1]), "c": float(params[2])}
    else:
        return ch, _kraus_document(ch, source)
    return ch, channel_document(rep, ch.dim, source)


def _kraus_document(ch: Channel, source: dict) -> dict:
    if ch.kraus is not None:
        rep = {"type": "kraus", "operators": [encode_matrix(A) for A in ch.kraus.operators]}
    else:
        rep = {"type": "superoperator", "matrix": encode_matrix(ch.superop)}
    return channel_document(rep, ch.dim, source)


def cmd_build(args) -> int:
    _, doc = build_document(args.family, args.params, args.from_unitary, args.from_file, args.K)
    _emit(dumps(doc), args.out)
    return EXIT_OK


# -- sweep -----------------------------------------------------------------------

def parse_grid(spec: str) -> List[Tuple[str, np.ndarray, bool]]:
    """``"a=1:3:5,b=0"`` -> ``[("a", linspace(1, 3, 5), True), ("b", [0.], False)]``."""
    axes = []
    seen = set()
    for part in filter(None, (p.strip() for p in spec.split(","))):
        if "=" not in part:
            raise UsageError(f"grid entry {part!r} is not name=value or name=start:stop:num")
        name, value = (s.strip() for s in part.split("=", 1))
        if name in seen:
            raise UsageError(f"grid parameter {name!r} given twice")
        seen.add(name)
        try:
            if ":" in value:
                start, stop, num = value.split(":")
                num = int(num)
                if num < 1:
                    raise ValueError
                axes.append((name, np.linspace(float(start), float(stop), num), True))
            else:
                axes.append((name, np.array([float(value)]), False))
        except ValueError:
            raise UsageError(f"cannot parse grid entry {part!r}") from None
    return axes


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v) + 0.0
    return "" if not math.isfinite(v) else "%.17g" % v


def _template_channel(template: str, values: dict) -> Channel:
    if template == "pauli_edge":
        s = values["s"]
        return build_family("pauli", [1 - s, 0.0, 0.0, s])
    names = [n.rstrip("?") for n in SWEEP_TEMPLATES[template]]
    params = []
    for name, spec in zip(names, SWEEP_TEMPLATES[template]):
        if name in values:
            params.append(values[name])
        elif spec.endswith("?"):
            break
    return build_family(template, params)


def sweep_rows(template: str, grid: str):
    if template not in SWEEP_TEMPLATES:
        raise UsageError(f"unknown sweep template {template!r}; known: {sorted(SWEEP_TEMPLATES)}")
    axes = parse_grid(grid)
    allowed = [n.rstrip("?") for n in SWEEP_TEMPLATES[template]]
    required = [n for n in SWEEP_TEMPLATES[template] if not n.endswith("?")]
    names = [a[0] for a in axes]
    for n in names:
        if n not in allowed:
            raise UsageError(f"template {template!r} has no parameter {n!r}; parameters: {allowed}")
    missing = [n for n in required if n not in names]
    if missing:
        raise UsageError(f"grid is missing parameters {missing}")
    free = [a for a in axes if a[2]]
    if not 1 <= len(free) <= 2:
        raise UsageError(f"sweep needs one or two ranged parameters, got {len(free)}")
    total = int(np.prod([a[1].size for a in axes]))
    if total > GRID_CAP:
        raise UsageError(f"grid has {total} points, cap is {GRID_CAP}")
    ordered = [n for n in allowed if n in names]
    lookup = {a[0]: a[1] for a in axes}
    extra = []
    if template == "choi_map":
        extra = ["choi_positive", "choi_decomposable"]
    elif template == "bloch":
        extra = ["fujiwara_algoet"]
    header = ordered + ["error", "hermiticity_preserving", "trace_preserving", "unital", "cp", "ccp",
                        "is_cp", "is_ccp", "neg_rank", "kraus_rank", "entropy"] + extra
    rows = []
    for combo in itertools.product(*(lookup[n] for n in ordered)):
        values = dict(zip(ordered, (float(v) for v in combo)))
        row = [values[n] for n in ordered]
        try:
            ch = _template_channel(template, values)
        except ValueError as exc:
            rows.append(row + [str(exc)] + [None] * (len(header) - len(row) - 1))
            continue
        hp = is_hermiticity_preserving(ch)
        cp = ccp = is_cp = is_ccp = nr = kr = S = None
        if hp:
            cp, ccp = cp_value(ch), ccp_value(ch)
            thr = psd_threshold(ch.choi)
            is_cp, is_ccp, nr = cp >= -thr, ccp >= -thr, neg_rank(ch)
            if is_cp:
                kr = kraus_rank(ch)
                try:
                    S = entropy(ch)
                except NotCompletelyPositive:
                    S = None
        row += ["", hp, is_trace_preserving(ch), is_unital(ch), cp, ccp, is_cp, is_ccp, nr, kr, S]
        if template == "choi_map":
            a, b, c = values["a"], values["b"], values["c"]
            row += [choi_map_positive(a, b, c), choi_map_decomposable(a, b, c)]
        elif template == "bloch":
            kap = [values.get(k, 0.0) for k in ("kappa_x", "kappa_y", "kappa_z")]
            row += [builders.fujiwara_algoet([values["eta_x"], values["eta_y"], values["eta_z"]])
                    if not any(kap) else None]
        rows.append(row)
    return header, rows


def cmd_sweep(args) -> int:
    header, rows = sweep_rows(args.template, args.grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    target = out / f"{args.template}.csv"
    with open(target, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    print(target)
    return EXIT_OK


# -- entry point -----------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    from . import __version__
    p = argparse.ArgumentParser(prog="qmap", description="Analyze and build quantum maps.")
    p.add_argument("--version", action="version", version=f"qmap {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the diagnostic battery on a channel file")
    a.add_argument("file")
    a.add_argument("--deep", action="store_true", help="also run the optimizer and line test")
    a.add_argument("--tol", type=float, default=DEFAULT_TOL)
    a.add_argument("--seed", type=int, default=None, help="default: $QMAP_SEED or 0")
    a.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    b = sub.add_parser("build", help="write a channel file for a named family")
    b.add_argument("family")
    b.add_argument("params", nargs="*", type=float)
    b.add_argument("--from-unitary", dest="from_unitary")
    b.add_argument("--from-file", dest="from_file")
    b.add_argument("--K", type=int, default=1, help="environment exponent for unistochastic maps")
    b.add_argument("--out")
    b.set_defaults(func=cmd_build)

    s = sub.add_parser("sweep", help="tabulate cp/ccp and friends over a parameter grid")
    s.add_argument("template")
    s.add_argument("--grid", required=True, help='e.g. "a=1:3:21,b=0,c=2"')
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except DimensionError as exc:
        return _fail(str(exc), EXIT_DIM)
    except (ChannelFileError, UsageError) as exc:
        return _fail(str(exc), EXIT_PARSE)
    except OSError as exc:
        return _fail(str(exc), EXIT_PARSE)
    except ValueError as exc:
        return _fail(str(exc), EXIT_PARSE)


if __name__ == "__main__":
    sys.exit(main())
