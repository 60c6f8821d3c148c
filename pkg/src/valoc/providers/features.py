"""Binary visual-feature store.

File layout (little-endian): magic ``IVALVF01``, u32 segment count,
u32 dimension, then count*dim IEEE-754 32-bit floats, segment-major.
One file per video, named ``{video_id}.ivf`` under the store root.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import FeatureLookupError
from .base import EmbeddingVector

FEATURE_MAGIC = b"IVALVF01"
_HEADER = struct.Struct("<8sII")


def write_feature_file(path: str | Path, features: np.ndarray) -> None:
    arr = np.ascontiguousarray(features, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError("features must be a (count, dim) array")
    count, dim = arr.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(FEATURE_MAGIC, count, dim))
        f.write(arr.tobytes())


def read_feature_file(path: str | Path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise FeatureLookupError(f"{path}: truncated header")
        magic, count, dim = _HEADER.unpack(header)
        if magic != FEATURE_MAGIC:
            raise FeatureLookupError(f"{path}: bad magic {magic!r}")
        data = f.read(count * dim * 4)
    if len(data) != count * dim * 4:
        raise FeatureLookupError(f"{path}: expected {count * dim} floats")
    return np.frombuffer(data, dtype="<f4").reshape(count, dim)


class FeatureStore:
    """Directory of per-video feature files, loaded lazily and memoized."""

    def __init__(self, root: str | Path, dim: int | None = None):
        self.root = Path(root)
        self.dim = dim
        self._loaded: dict[str, np.ndarray] = {}

    def _video_path(self, video_id: str) -> Path:
        return self.root / f"{video_id}.ivf"

    def put(self, video_id: str, features: np.ndarray) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        write_feature_file(self._video_path(video_id), features)
        self._loaded.pop(video_id, None)

    def _features(self, video_id: str) -> np.ndarray:
        feats = self._loaded.get(video_id)
        if feats is None:
            path = self._video_path(video_id)
            if not path.exists():
                raise FeatureLookupError(f"no feature file for video {video_id!r}")
            feats = read_feature_file(path)
            if self.dim is None:
                self.dim = int(feats.shape[1])
            elif feats.shape[1] != self.dim:
                raise FeatureLookupError(
                    f"video {video_id!r}: dimension {feats.shape[1]} != expected {self.dim}"
                )
            self._loaded[video_id] = feats
        return feats

    def visual_feature(self, video_id: str, seg_id: int) -> EmbeddingVector:
        feats = self._features(video_id)
        if not 0 <= seg_id < feats.shape[0]:
            raise FeatureLookupError(
                f"video {video_id!r}: segment {seg_id} out of range (store holds {feats.shape[0]})"
            )
        return EmbeddingVector(feats[seg_id].astype(np.float64), unit_norm=False)
