"""Single-file block container: a JSON manifest line plus raw float64 blocks.

Layout (all little-endian):

    %FISHERSCOPE-BLOCKS <version>\n
    <manifest JSON, one line>\n
    <concatenated float64 blocks>

The manifest carries ``kind`` (``checkpoint`` or ``fisher``), free-form
``meta``, and an ``arrays`` directory of ``{name, shape, offset}`` entries
with byte offsets into the blob.  Round trips are bit-exact.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import CorruptFileError, VersionMismatchError

MAGIC = b"%FISHERSCOPE-BLOCKS"
FORMAT_VERSION = 1


def save_blocks(path, kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    directory = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype="<f8")
        directory.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    manifest = {"kind": kind, "meta": meta, "arrays": directory, "blob_bytes": offset}
    with open(path, "wb") as fh:
        fh.write(MAGIC + b" %d\n" % FORMAT_VERSION)
        fh.write(json.dumps(manifest, sort_keys=True).encode("utf-8") + b"\n")
        for blob in blobs:
            fh.write(blob)


def load_blocks(path, expect_kind: str | None = None):
    """Return (meta, arrays) after validating magic, version, and byte count."""
    with open(path, "rb") as fh:
        header = fh.readline()
        if not header.startswith(MAGIC):
            raise CorruptFileError(f"{path}: not a fisherscope block file")
        try:
            version = int(header[len(MAGIC) :].strip())
        except ValueError:
            raise CorruptFileError(f"{path}: unreadable version field") from None
        if version != FORMAT_VERSION:
            raise VersionMismatchError(
                f"{path}: format version {version}, this build reads {FORMAT_VERSION}"
            )
        manifest_line = fh.readline()
        try:
            manifest = json.loads(manifest_line)
        except json.JSONDecodeError:
            raise CorruptFileError(f"{path}: manifest is not valid JSON") from None
        blob = fh.read()
    if len(blob) != manifest["blob_bytes"]:
        raise CorruptFileError(
            f"{path}: expected {manifest['blob_bytes']} blob bytes, found {len(blob)}"
        )
    if expect_kind is not None and manifest.get("kind") != expect_kind:
        raise CorruptFileError(
            f"{path}: expected a {expect_kind!r} file, found {manifest.get('kind')!r}"
        )
    arrays = {}
    for entry in manifest["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        end = start + 8 * count
        if end > len(blob):
            raise CorruptFileError(f"{path}: truncated block {entry['name']!r}")
        arrays[entry["name"]] = (
            np.frombuffer(blob[start:end], dtype="<f8").reshape(shape).copy()
        )
    return manifest["meta"], arrays
