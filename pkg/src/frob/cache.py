"""On-disk Groebner basis cache, content-addressed by ring and generators.

Enabled when ``FROB_CACHE_DIR`` is set (or :func:`set_cache_dir` is called).
Entries are canonical text; a hit is parsed back into exactly the basis that
recomputation would produce.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

_override: Path | None = None
_disabled = False


def set_cache_dir(path: str | os.PathLike | None) -> None:
    global _override, _disabled
    _override = Path(path) if path is not None else None
    _disabled = False


def disable() -> None:
    global _disabled
    _disabled = True


def cache_dir() -> Path | None:
    if _disabled:
        return None
    if _override is not None:
        return _override
    env = os.environ.get("FROB_CACHE_DIR")
    return Path(env) if env else None


def entry_key(ring, texts: tuple) -> str:
    h = hashlib.sha256()
    h.update(ring.fingerprint().encode())
    for t in texts:
        h.update(b"\n")
        h.update(t.encode())
    return h.hexdigest()


def _header(ring, texts: tuple) -> str:
    return f"ring {ring.p} {','.join(ring.variables)} {','.join(map(str, ring.weights))} {ring.order}\n" + "".join(
        f"gen {t}\n" for t in texts
    )


def _parse_poly(text: str) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(";"):
        c, m = item.split(":")
        out[tuple(int(e) for e in m.split(",")) if m else ()] = int(c)
    return out


def load_gb(ring, texts: tuple) -> list[dict] | None:
    d = cache_dir()
    if d is None:
        return None
    path = d / f"{entry_key(ring, texts)}.gb"
    try:
        content = path.read_text()
    except OSError:
        return None
    header = _header(ring, texts)
    if not content.startswith(header + "basis\n"):
        return None
    body = content[len(header) + len("basis\n"):]
    return [_parse_poly(line) for line in body.splitlines() if line]


def store_gb(ring, texts: tuple, basis: list[dict]) -> None:
    d = cache_dir()
    if d is None:
        return
    from .groebner import _canonical_poly_text

    d.mkdir(parents=True, exist_ok=True)
    path = d / f"{entry_key(ring, texts)}.gb"
    content = _header(ring, texts) + "basis\n" + "".join(_canonical_poly_text(ring, f) + "\n" for f in basis)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(content)
    os.replace(tmp, path)
