"""Content-addressed on-disk cache for correlator sets.

Keys hash the full physical and numerical input (background, detectors,
numerics, code and numerics versions), so any change to the computation
invalidates old entries automatically.  Writes are atomic (temp file plus
rename) and therefore safe against concurrent sweep workers.  JSON stores
floats through repr round-tripping, so a cache hit reproduces bit-identical
results.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from ._version import __version__
from .correlators import NUMERICS_VERSION, CorrelatorSet, DetectorConfiguration
from .config import NumericsConfig

__all__ = ["CacheKey", "CorrelatorCache", "default_cache_dir"]

ENV_CACHE_DIR = "BTZHARVEST_CACHE_DIR"


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_CACHE_DIR)
    if env:
        return Path(env)
    xdg = os.environ.get("XDG_CACHE_HOME")
    base = Path(xdg) if xdg else Path.home() / ".cache"
    return base / "btzharvest"


@dataclass(frozen=True)
class CacheKey:
    """Canonical digest of everything that determines a correlator set."""

    digest: str

    @classmethod
    def for_run(cls, cfg: DetectorConfiguration, numerics: NumericsConfig) -> "CacheKey":
        bg = cfg.background
        payload = {
            "background": {"ell": bg.ell, "mass": bg.mass, "zeta": bg.zeta},
            "detectors": [
                {"radius": d.radius, "phi": d.phi, "omega": d.omega}
                for d in cfg.detectors
            ],
            "numerics": numerics.key_fields(),
            "numerics_version": NUMERICS_VERSION,
            "code_version": __version__,
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return cls(hashlib.sha256(canonical.encode("utf-8")).hexdigest())


class CorrelatorCache:
    """File-per-entry cache under one directory; disabled when dir is None."""

    def __init__(self, directory: Path | None):
        self.directory = Path(directory) if directory is not None else None

    @property
    def enabled(self) -> bool:
        return self.directory is not None

    def _path(self, key: CacheKey) -> Path:
        return self.directory / f"{key.digest}.json"

    def load(self, key: CacheKey) -> CorrelatorSet | None:
        if not self.enabled:
            return None
        path = self._path(key)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError):
            return None
        if data.get("numerics_version") != NUMERICS_VERSION:
            return None
        return CorrelatorSet.from_dict(data["correlators"])

    def store(self, key: CacheKey, cs: CorrelatorSet) -> None:
        if not self.enabled:
            return
        self.directory.mkdir(parents=True, exist_ok=True)
        payload = {
            "numerics_version": NUMERICS_VERSION,
            "code_version": __version__,
            "correlators": cs.to_dict(),
        }
        text = json.dumps(payload, sort_keys=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp, self._path(key))
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
