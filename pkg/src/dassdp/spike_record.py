"""Spike capture: binary trains, first-spike records and latency matrices.

Spike trains are ``uint8`` arrays indexed ``(sample, channel, timestep)``.
A channel that never fires in a window of length ``T`` gets first-spike
time ``T``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dassdp.counters import OpCounter
from dassdp.errors import ParameterError, ShapeError

_HEADER = struct.Struct("<III")


def check_spikes(train) -> np.ndarray:
    """Validate a (B, C, T) spike train and return it as ``uint8``."""
    arr = np.asarray(train)
    if arr.ndim != 3:
        raise ShapeError(f"spike train must be 3-D (B, C, T), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ShapeError(f"spike train dimensions must be >= 1, got {arr.shape}")
    if arr.dtype != np.uint8 or arr.max() > 1:
        bad = (arr != 0) & (arr != 1)
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise ParameterError(f"spike train entry at {idx} is {arr[idx]!r}, expected 0 or 1")
        arr = arr.astype(np.uint8)
    return arr


def binarize(activations, threshold: float) -> np.ndarray:
    """Spike where ``activations > threshold`` (strict)."""
    x = np.asarray(activations, dtype=np.float64)
    if not np.isfinite(threshold):
        raise ParameterError(f"threshold must be finite, got {threshold}")
    finite = np.isfinite(x)
    if not finite.all():
        idx = tuple(int(i) for i in np.argwhere(~finite)[0])
        raise ParameterError(f"non-finite activation {x[idx]} at index {idx}")
    return (x > threshold).astype(np.uint8)


def reduce_space(train) -> np.ndarray:
    """Fold a (B, C, H, W, T) train to (B, C, T) by OR over spatial positions.

    A channel counts as active at a step if any of its positions is active,
    so its first event is the earliest step where that OR fires.
    """
    arr = np.asarray(train)
    if arr.ndim != 5:
        raise ShapeError(f"expected (B, C, H, W, T), got shape {arr.shape}")
    return arr.any(axis=(2, 3)).astype(np.uint8)


@dataclass(frozen=True)
class FirstSpikeRecord:
    """Per-channel fire indicators and first-spike times for one window.

    Attributes:
        indicators: (B, C) uint8, 1 if the channel fired at least once.
        times: (B, C) int64, index of the first spike, or ``window`` if silent.
        window: window length T.
    """

    indicators: np.ndarray
    times: np.ndarray
    window: int

    @property
    def batch_size(self) -> int:
        return self.indicators.shape[0]

    @property
    def channels(self) -> int:
        return self.indicators.shape[1]

    def __eq__(self, other):
        if not isinstance(other, FirstSpikeRecord):
            return NotImplemented
        return (
            self.window == other.window
            and np.array_equal(self.indicators, other.indicators)
            and np.array_equal(self.times, other.times)
        )

    __hash__ = None


def extract_record(train, counter: OpCounter | None = None) -> FirstSpikeRecord:
    """Single scan over time producing indicators and first-spike times."""
    arr = check_spikes(train)
    B, C, T = arr.shape
    indicators = arr.any(axis=2).astype(np.uint8)
    # argmax returns the first maximal index, i.e. the earliest spike
    times = np.where(indicators == 1, arr.argmax(axis=2), T).astype(np.int64)
    if counter is not None:
        counter.add("record_scan", B * C * T)
    return FirstSpikeRecord(indicators=indicators, times=times, window=T)


def latency_matrix(
    post: FirstSpikeRecord, pre: FirstSpikeRecord, counter: OpCounter | None = None
) -> np.ndarray:
    """Broadcast ``|t_post[b, i] - t_pre[b, j]|`` into a (B, C_out, C_in) tensor."""
    if post.batch_size != pre.batch_size:
        raise ShapeError(
            f"batch size mismatch: post has {post.batch_size}, pre has {pre.batch_size}"
        )
    dt = np.abs(post.times[:, :, None] - pre.times[:, None, :])
    if counter is not None:
        counter.add("pairwise", dt.size)
    return dt


def save_binary(train, path) -> None:
    """Write a train as a little-endian (B, C, T) uint32 header plus row-major bytes."""
    arr = check_spikes(train)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*arr.shape))
        fh.write(np.ascontiguousarray(arr).tobytes())


def load_binary(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ShapeError(f"{path}: truncated header")
    B, C, T = _HEADER.unpack_from(raw)
    body = raw[_HEADER.size:]
    if len(body) != B * C * T:
        raise ShapeError(f"{path}: expected {B * C * T} payload bytes, found {len(body)}")
    return check_spikes(np.frombuffer(body, dtype=np.uint8).reshape(B, C, T).copy())


def to_events(train) -> list[tuple[int, int, int]]:
    arr = check_spikes(train)
    return [tuple(int(v) for v in idx) for idx in np.argwhere(arr)]


def from_events(events, shape) -> np.ndarray:
    arr = np.zeros(tuple(shape), dtype=np.uint8)
    for b, c, t in events:
        arr[b, c, t] = 1
    return check_spikes(arr)


def save_events(train, path) -> None:
    """JSON event list: ``{"shape": [B, C, T], "events": [[b, c, t], ...]}``."""
    arr = check_spikes(train)
    payload = {"shape": list(arr.shape), "events": [list(e) for e in to_events(arr)]}
    Path(path).write_text(json.dumps(payload))


def load_events(path, shape=None) -> np.ndarray:
    payload = json.loads(Path(path).read_text())
    if isinstance(payload, list):
        if shape is None:
            raise ShapeError("bare event list needs an explicit shape")
        return from_events(payload, shape)
    return from_events(payload["events"], shape or payload["shape"])
