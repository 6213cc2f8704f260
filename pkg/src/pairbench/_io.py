"""Small shared IO helpers: atomic file writes and source/sink adapters."""
from __future__ import annotations

import os
import tempfile
from pathlib import Path


def atomic_write_bytes(path: str | os.PathLike, payload: bytes) -> None:
    """Write bytes to a temporary file in the target directory, then rename.

    The rename is atomic on POSIX, so readers never observe a half-written
    file and concurrent writers of the same path cannot interleave.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=target.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def safe_file_stem(identifier: str) -> str:
    """Map an arbitrary string id to a filesystem-safe stem."""
    return "".join(c if c.isalnum() or c in "._-" else "_" for c in identifier)
