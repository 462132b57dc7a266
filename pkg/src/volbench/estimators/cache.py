"""Optional on-disk cache of moment estimates.

One file per estimate, keyed by a content hash of (window bytes, model id,
config).  Records are a self-describing JSON header line followed by the
mean vector and covariance matrix as little-endian 64-bit floats.
"""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from ..panel import WindowSlice
from .base import ModelConfig, MomentEstimate

_MAGIC = "volbench-estimate"
_VERSION = 1


def _content_key(model_id: str, window_slice: WindowSlice, config: ModelConfig) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(window_slice.window, dtype="<f8").tobytes())
    if window_slice.trailing_daily is not None:
        for days in window_slice.trailing_daily:
            h.update(np.ascontiguousarray(days, dtype="<f8").tobytes())
    h.update(model_id.encode())
    h.update(repr(config).encode())
    return h.hexdigest()


def _plain_diagnostics(diagnostics: dict) -> dict:
    out = {}
    for key, value in diagnostics.items():
        if isinstance(value, (bool, int, float, str)) or value is None:
            out[key] = value
        elif isinstance(value, np.generic):
            out[key] = value.item()
    return out


class EstimateCache:
    """Content-addressed store of :class:`MomentEstimate` records."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.est"

    def get(
        self, model_id: str, window_slice: WindowSlice, config: ModelConfig
    ) -> MomentEstimate | None:
        path = self._path(_content_key(model_id, window_slice, config))
        if not path.exists():
            return None
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode())
            if header.get("format") != _MAGIC or header.get("version") != _VERSION:
                return None
            n = int(header["n"])
            mu = np.frombuffer(fh.read(8 * n), dtype="<f8").copy()
            sigma = (
                np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n).copy()
            )
        return MomentEstimate(
            model_id=header["model"],
            mu=mu,
            sigma=sigma,
            diagnostics=dict(header.get("diagnostics", {}), cached=True),
        )

    def put(
        self,
        model_id: str,
        window_slice: WindowSlice,
        config: ModelConfig,
        estimate: MomentEstimate,
    ) -> None:
        path = self._path(_content_key(model_id, window_slice, config))
        header = {
            "format": _MAGIC,
            "version": _VERSION,
            "model": estimate.model_id,
            "n": int(estimate.mu.size),
            "byteorder": "little",
            "dtype": "float64",
            "diagnostics": _plain_diagnostics(estimate.diagnostics),
        }
        tmp = path.with_suffix(".tmp")
        with open(tmp, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
            fh.write(np.ascontiguousarray(estimate.mu, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(estimate.sigma, dtype="<f8").tobytes())
        os.replace(tmp, path)
