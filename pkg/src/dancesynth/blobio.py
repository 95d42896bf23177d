"""Manifest + raw float64 blob storage shared by every on-disk format.

A store is a directory holding ``manifest.txt`` and one or more blobs of
little-endian float64 values. The manifest is line oriented UTF-8 text::

    <format-tag> <version>
    array <name> <blob-file> <offset> <dims>
    meta <key> <json-value>

``offset`` counts float64 values (not bytes) from the start of the blob;
``dims`` is ``x``-joined (``3x4``) or ``-`` for a scalar. Array lines keep
insertion order, meta lines are sorted by key, and JSON is written with
sorted keys, so identical content always produces identical bytes.
"""

import json
import os

import numpy as np

from .errors import ValidationError

MANIFEST = "manifest.txt"
_DTYPE = np.dtype("<f8")


def _dims(shape):
    return "x".join(str(d) for d in shape) if shape else "-"


def _parse_dims(text):
    return () if text == "-" else tuple(int(d) for d in text.split("x"))


def write_store(path, tag, arrays, meta=None, blobs=None):
    """Write ``arrays`` (name -> ndarray, in order) and ``meta`` under ``path``.

    ``blobs`` optionally maps array names to blob file names; unmapped arrays
    go to ``data.f64``.
    """
    os.makedirs(path, exist_ok=True)
    blobs = blobs or {}
    lines = [f"{tag} 1"]
    payload = {}
    for name, arr in arrays.items():
        if any(c.isspace() for c in name):
            raise ValidationError(f"array name {name!r} contains whitespace")
        arr = np.ascontiguousarray(arr, dtype=_DTYPE)
        blob = blobs.get(name, "data.f64")
        chunks = payload.setdefault(blob, [])
        offset = sum(c.size for c in chunks)
        chunks.append(arr.ravel())
        lines.append(f"array {name} {blob} {offset} {_dims(arr.shape)}")
    for key in sorted(meta or {}):
        lines.append(f"meta {key} {json.dumps(meta[key], sort_keys=True)}")
    for blob, chunks in payload.items():
        data = np.concatenate(chunks) if chunks else np.zeros(0, _DTYPE)
        with open(os.path.join(path, blob), "wb") as fh:
            fh.write(data.astype(_DTYPE).tobytes())
    with open(os.path.join(path, MANIFEST), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_store(path, tag):
    """Inverse of :func:`write_store`. Returns ``(arrays, meta)``."""
    manifest = os.path.join(path, MANIFEST)
    if not os.path.isfile(manifest):
        raise FileNotFoundError(f"no manifest at {manifest}")
    with open(manifest, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    head = lines[0].split()
    if head[0] != tag:
        raise ValidationError(f"{manifest}: expected format {tag!r}, found {head[0]!r}")
    arrays, meta, cache = {}, {}, {}
    for ln in lines[1:]:
        kind, rest = ln.split(" ", 1)
        if kind == "meta":
            key, value = rest.split(" ", 1)
            meta[key] = json.loads(value)
            continue
        if kind != "array":
            raise ValidationError(f"{manifest}: unknown record {kind!r}")
        name, blob, offset, dims = rest.split(" ")
        if blob not in cache:
            blob_path = os.path.join(path, blob)
            if not os.path.isfile(blob_path):
                raise FileNotFoundError(f"missing blob {blob_path}")
            raw = open(blob_path, "rb").read()
            if len(raw) % _DTYPE.itemsize:
                raise ValidationError(f"{blob_path}: {len(raw)} bytes is not a whole number of float64 values")
            cache[blob] = np.frombuffer(raw, dtype=_DTYPE)
        shape = _parse_dims(dims)
        count = int(np.prod(shape)) if shape else 1
        start = int(offset)
        values = cache[blob]
        if start + count > values.size:
            raise ValidationError(
                f"{os.path.join(path, blob)}: array {name} needs {(start + count) * 8} bytes, "
                f"blob has {values.size * 8}")
        arrays[name] = values[start: start + count].astype(np.float64).reshape(shape)
    return arrays, meta
