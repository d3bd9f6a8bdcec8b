"""Versioned, self-describing JSON artifacts with base64 numeric arrays.

Arrays are stored as little-endian bytes so floats survive exactly, and keys
are written sorted so identical objects give byte-identical files.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .errors import ModelFormatError

FORMAT_VERSION = 1


def encode_array(a: np.ndarray) -> dict:
    a = np.asarray(a)
    if a.dtype.kind in "iub":
        a = a.astype("<i8")
    else:
        a = a.astype("<f8")
    return {"dtype": a.dtype.str, "shape": list(a.shape),
            "data": base64.b64encode(np.ascontiguousarray(a).tobytes()).decode("ascii")}


def decode_array(blob: dict) -> np.ndarray:
    try:
        raw = base64.b64decode(blob["data"])
        return np.frombuffer(raw, dtype=np.dtype(blob["dtype"])).reshape(blob["shape"]).copy()
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed array blob: {exc}") from exc


def dumps(kind: str, payload: dict, arrays: dict[str, np.ndarray]) -> str:
    doc = {"format": f"rackcast.{kind}", "version": FORMAT_VERSION, **payload,
           "arrays": {k: encode_array(v) for k, v in arrays.items()}}
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def loads(kind: str, text: str, source: str = "<string>") -> tuple[dict, dict[str, np.ndarray]]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{source}: not a JSON artifact ({exc})") from exc
    if doc.get("format") != f"rackcast.{kind}":
        raise ModelFormatError(f"{source}: expected format rackcast.{kind}, found {doc.get('format')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"{source}: version {doc.get('version')!r} is not supported "
                               f"(expected {FORMAT_VERSION})")
    arrays = {k: decode_array(v) for k, v in doc.pop("arrays", {}).items()}
    return doc, arrays


def write(path, kind: str, payload: dict, arrays: dict[str, np.ndarray]) -> None:
    Path(path).write_text(dumps(kind, payload, arrays), encoding="utf-8")


def read(path, kind: str) -> tuple[dict, dict[str, np.ndarray]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFormatError(f"cannot read {path}: {exc}") from exc
    return loads(kind, text, str(path))
