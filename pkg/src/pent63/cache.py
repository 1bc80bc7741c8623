"""On-disk cache for automorphism groups, good sets and sieve dumps."""

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)

NAMESPACES = ("automorphisms", "goodsets", "tables")


def cache_key(key: Any) -> str:
    """SHA-256 of the canonical JSON form of ``key``."""
    canonical = json.dumps(key, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class DiskCache:
    """Namespaced JSON and byte blobs under ``cache_dir``; a no-op when it is None."""

    def __init__(self, cache_dir: Path | str | None):
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None

    @property
    def enabled(self) -> bool:
        return self.cache_dir is not None

    def _path(self, namespace: str, key: Any, suffix: str) -> Path:
        if namespace not in NAMESPACES:
            raise ValueError(f"Unknown cache namespace {namespace!r}")
        return self.cache_dir / namespace / f"{cache_key(key)}{suffix}"

    def _write(self, path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except OSError as e:
            logger.error(f"Failed to write cache entry {path}: {e}")
            Path(tmp).unlink(missing_ok=True)

    def get(self, namespace: str, key: Any) -> Any | None:
        if not self.enabled:
            return None
        path = self._path(namespace, key, ".json")
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except (OSError, json.JSONDecodeError) as e:
            logger.warning(f"Ignoring unreadable cache entry {path}: {e}")
            return None

    def put(self, namespace: str, key: Any, value: Any) -> None:
        if not self.enabled:
            return
        path = self._path(namespace, key, ".json")
        self._write(path, json.dumps(value, sort_keys=True).encode("utf-8"))
        logger.debug(f"Cached {namespace}/{path.name}")

    def get_bytes(self, namespace: str, key: Any) -> bytes | None:
        if not self.enabled:
            return None
        try:
            return self._path(namespace, key, ".bin").read_bytes()
        except FileNotFoundError:
            return None

    def put_bytes(self, namespace: str, key: Any, data: bytes) -> None:
        if self.enabled:
            self._write(self._path(namespace, key, ".bin"), data)
