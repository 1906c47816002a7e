"""Shared single-header blob files.

All binary formats in this package share one layout: a single line of
canonical JSON (UTF-8, no spaces, fixed key order, terminated by ``\\n``)
followed by the raw payload bytes.  Writing the same object twice must
produce identical bytes, so the canonical encoding lives here and nowhere
else.
"""

import json
from pathlib import Path

from .errors import MalformedHeader, UnknownVersion

__all__ = ["canonical_json", "write_blob", "read_blob"]


def canonical_json(obj) -> str:
    """Serialize `obj` with the one encoding used across all file formats.

    Key order is preserved as given by the caller, so builders insert keys
    in a fixed documented order instead of relying on sorting.
    """
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def write_blob(path, header: dict, payload: bytes) -> None:
    """Write header line + payload to `path` atomically enough for tests.

    Parameters
    ----------
    path : str or Path
        Destination file.
    header : dict
        JSON-serializable header.  Must contain a "version" key.
    payload : bytes
        Raw payload appended verbatim after the header newline.
    """
    if "version" not in header:
        raise ValueError("header must carry a version tag")
    data = canonical_json(header).encode("utf-8") + b"\n" + payload
    Path(path).write_bytes(data)


def read_blob(path, expected_version: str) -> tuple[dict, bytes]:
    """Read a blob file and return (header, payload).

    Raises
    ------
    MalformedHeader
        No newline found, or the first line is not a JSON object.
    UnknownVersion
        Header "version" differs from `expected_version`.
    """
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise MalformedHeader(f"{path}: no header line")
    try:
        header = json.loads(data[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedHeader(f"{path}: {exc}") from None
    if not isinstance(header, dict):
        raise MalformedHeader(f"{path}: header is not a JSON object")
    version = header.get("version")
    if version != expected_version:
        raise UnknownVersion(f"{path}: got {version!r}, expected {expected_version!r}")
    return header, data[nl + 1:]
