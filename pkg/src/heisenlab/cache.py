"""Content-addressed cache for study blobs (JSON-serializable dicts)."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path

from heisenlab import __version__
from heisenlab.report import to_jsonable

log = logging.getLogger(__name__)

#: bump when a pipeline changes numerically so stale entries stop matching
CODE_TAG = f"heisenlab-{__version__}/2"


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def cache_key(payload: dict, tag: str = CODE_TAG) -> str:
    """sha256 over the canonical JSON of `payload` and the code version tag."""
    return hashlib.sha256(_canonical({"payload": payload, "tag": tag})).hexdigest()


class Cache:
    """One file per key: ``{"key", "sha256", "blob"}``.

    A missing, unreadable or inconsistent entry is a miss; the last two are
    logged as warnings and the entry is recomputed by the caller.
    """

    def __init__(self, root, enabled: bool = True):
        self.root = Path(root)
        self.enabled = enabled
        self.hits = 0
        self.misses = 0

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str):
        if not self.enabled:
            self.misses += 1
            return None
        path = self._path(key)
        if not path.exists():
            self.misses += 1
            return None
        try:
            entry = json.loads(path.read_text())
            blob = entry["blob"]
            ok = entry["key"] == key and entry["sha256"] == hashlib.sha256(_canonical(blob)).hexdigest()
        except (OSError, ValueError, KeyError, TypeError):
            ok = False
        if not ok:
            log.warning("cache entry %s is corrupt; recomputing", path)
            self.misses += 1
            return None
        self.hits += 1
        return blob

    def put(self, key: str, blob) -> None:
        if not self.enabled:
            return
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {"key": key, "sha256": hashlib.sha256(_canonical(blob)).hexdigest(), "blob": blob}
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write(json.dumps(entry, sort_keys=True))
        os.replace(tmp, path)


def cached(cache: Cache | None, payload: dict, compute):
    """Return the blob for `payload`, computing and storing it on a miss.

    Fresh results pass through the same JSON normalization as stored ones,
    so a hit and a miss give identical blobs.
    """
    if cache is None:
        return to_jsonable(compute())
    key = cache_key(payload)
    blob = cache.get(key)
    if blob is None:
        blob = to_jsonable(compute())
        cache.put(key, blob)
    return blob
