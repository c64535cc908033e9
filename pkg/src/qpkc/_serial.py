"""JSON documents whose floats are written with 17 significant digits.

The stdlib encoder always uses ``repr`` for floats, so documents are emitted
by a small writer here and read back with :func:`json.loads`.
"""

from __future__ import annotations

import json
import math
from typing import Any, Mapping

import numpy as np

FORMAT_VERSION = 1


class FormatError(ValueError):
    """Malformed or incompatible document. ``position`` is a character offset."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        where = f" (at char {position})" if position is not None else ""
        super().__init__(message + where)


def _scalar(x: Any) -> str:
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError("non-finite float cannot be serialised")
        return format(x, ".17g")
    if isinstance(x, str):
        return json.dumps(x, ensure_ascii=False)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _inline(x: Any) -> str:
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_inline(v) for v in x) + "]"
    if isinstance(x, Mapping):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_inline(v)}" for k, v in x.items()) + "}"
    return _scalar(x)


def _block(x: Any, indent: int) -> str:
    pad = "  " * indent
    if isinstance(x, Mapping):
        if not x:
            return "{}"
        rows = [f'{pad}  {json.dumps(str(k))}: {_block(v, indent + 1)}' for k, v in x.items()]
        return "{\n" + ",\n".join(rows) + "\n" + pad + "}"
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], (list, tuple, Mapping)):
        rows = [f"{pad}  {_inline(v)}" for v in x]
        return "[\n" + ",\n".join(rows) + "\n" + pad + "]"
    return _inline(x)


def dumps(doc: Mapping[str, Any]) -> str:
    return _block(doc, 0) + "\n"


def loads(text: str | bytes, kind: str | None = None) -> dict:
    """Parse a document, checking ``version`` and (optionally) ``kind``."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError("document is not valid UTF-8", exc.start) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed document: {exc.msg}", exc.pos) from None
    if not isinstance(doc, dict):
        raise FormatError("document root must be an object", 0)
    if doc.get("version") != FORMAT_VERSION:
        raise FormatError(f"unsupported version {doc.get('version')!r}, expected {FORMAT_VERSION}")
    if kind is not None and doc.get("kind") != kind:
        raise FormatError(f"expected kind {kind!r}, got {doc.get('kind')!r}")
    return doc


def require(doc: Mapping[str, Any], field: str, typ, length: int | None = None):
    if field not in doc:
        raise FormatError(f"missing field {field!r}")
    value = doc[field]
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if typ is list:
        if not isinstance(value, list):
            raise FormatError(f"field {field!r} must be a list")
        if length is not None and len(value) != length:
            raise FormatError(f"field {field!r} has length {len(value)}, expected {length}")
    elif not isinstance(value, typ) or isinstance(value, bool) and typ is not bool:
        raise FormatError(f"field {field!r} has wrong type {type(value).__name__}")
    return value


def as_float(value: Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"non-numeric entry in {field!r}: {value!r}")
    return float(value)
