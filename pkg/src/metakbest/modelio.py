"""Versioned line-oriented text model files.

Layout::

    METAKBEST-MODEL <kind> <format version>
    <name> <type> <shape> <values...>
    ...
    END

``type`` is ``f`` (float, rendered ``{:.16e}``: 17 significant digits, so
values round-trip exactly), ``i`` (integer) or ``s`` (a single string token
without whitespace). ``shape`` is ``-`` for scalars or comma-separated
dimensions. Arrays are written in C order on one line. Entries keep their
insertion order, so identical models give identical bytes.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid, ModelMissing

MAGIC = "METAKBEST-MODEL"
FORMAT_VERSION = 1


def _fmt_float(v: float) -> str:
    v = float(v)
    if not math.isfinite(v):
        return repr(v)  # 'nan', 'inf', '-inf'
    return f"{v:.16e}"


def dumps(kind: str, fields: dict) -> str:
    lines = [f"{MAGIC} {kind} {FORMAT_VERSION}"]
    for name, value in fields.items():
        if any(ch.isspace() for ch in name) or not name:
            raise ValueError(f"bad field name {name!r}")
        if isinstance(value, str):
            if not value or any(ch.isspace() for ch in value):
                raise ValueError(f"string field {name!r} must be one non-empty token")
            lines.append(f"{name} s - {value}")
            continue
        arr = np.asarray(value)
        if arr.dtype.kind in "iub":
            typ, vals = "i", [str(int(v)) for v in arr.ravel()]
        elif arr.dtype.kind == "f":
            typ, vals = "f", [_fmt_float(v) for v in arr.ravel()]
        else:
            raise ValueError(f"unsupported dtype {arr.dtype} for {name!r}")
        shape = "-" if arr.ndim == 0 else ",".join(str(d) for d in arr.shape)
        lines.append(" ".join([name, typ, shape, *vals]))
    lines.append("END")
    return "\n".join(lines) + "\n"


def loads(text: str, kind: str | None = None) -> tuple[str, dict]:
    lines = text.splitlines()
    if not lines:
        raise ConfigInvalid("empty model file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != MAGIC:
        raise ConfigInvalid("not a model file (bad magic header)")
    if int(head[2]) != FORMAT_VERSION:
        raise ConfigInvalid(f"unsupported model format version {head[2]}")
    if kind is not None and head[1] != kind:
        raise ConfigInvalid(f"expected a {kind!r} model, found {head[1]!r}")
    fields: dict = {}
    ended = False
    for ln, line in enumerate(lines[1:], start=2):
        if line == "END":
            ended = True
            break
        parts = line.split()
        if len(parts) < 3:
            raise ConfigInvalid(f"line {ln}: malformed entry")
        name, typ, shape = parts[:3]
        vals = parts[3:]
        if typ == "s":
            if len(vals) != 1:
                raise ConfigInvalid(f"line {ln}: string field needs one token")
            fields[name] = vals[0]
            continue
        dims = () if shape == "-" else tuple(int(d) for d in shape.split(","))
        if len(vals) != int(np.prod(dims, dtype=np.int64)):
            raise ConfigInvalid(f"line {ln}: {name} has {len(vals)} values for shape {dims}")
        if typ == "f":
            arr = np.array([float(v) for v in vals], dtype=float).reshape(dims)
        elif typ == "i":
            arr = np.array([int(v) for v in vals], dtype=np.int64).reshape(dims)
        else:
            raise ConfigInvalid(f"line {ln}: unknown type {typ!r}")
        fields[name] = arr[()] if arr.ndim == 0 else arr
    if not ended:
        raise ConfigInvalid("model file is truncated (no END line)")
    return head[1], fields


def save(path, kind: str, fields: dict) -> None:
    Path(path).write_text(dumps(kind, fields), encoding="ascii")


def load(path, kind: str | None = None) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ModelMissing(f"model file not found: {path}")
    return loads(path.read_text(encoding="ascii"), kind)[1]
