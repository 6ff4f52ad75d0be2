"""Address-event representation: bit-exact event records, multi-channel
stream merging, a FIFO arbiter model, and `.aer` file I/O.

Wire format, 8 bytes per event, little-endian: bytes 0-5 hold the 48-bit
unsigned timestamp in microseconds, bytes 6-7 hold the 16-bit value
``(channel << 1) | polarity_bit`` with ON = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .encoders import Polarity, SpikeTrain
from .errors import FormatError, ValidationError

TIMESTAMP_BITS = 48
_T_MAX = 1 << TIMESTAMP_BITS
CHANNEL_MAX = 32767
RECORD_BYTES = 8


class AerEvent(NamedTuple):
    timestamp_us: int
    channel: int
    polarity: Polarity


@dataclass(frozen=True, eq=False)
class AerStream:
    """Event stream sorted by (timestamp_us, channel) ascending."""

    times_us: np.ndarray
    channels: np.ndarray
    polarities: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times_us, dtype=np.int64)
        c = np.asarray(self.channels, dtype=np.int32)
        p = np.asarray(self.polarities, dtype=np.uint8)
        object.__setattr__(self, "times_us", t)
        object.__setattr__(self, "channels", c)
        object.__setattr__(self, "polarities", p)
        self.validate()

    def validate(self):
        t, c, p = self.times_us, self.channels, self.polarities
        if not (t.shape == c.shape == p.shape) or t.ndim != 1:
            raise ValidationError("stream fields must be 1-D and equal length")
        if t.size == 0:
            return
        if t[0] < 0 or int(t.max()) >= _T_MAX:
            raise ValidationError(f"timestamps must be in [0, 2^{TIMESTAMP_BITS})")
        if c.min() < 0 or c.max() > CHANNEL_MAX:
            raise ValidationError(f"channels must be in [0, {CHANNEL_MAX}]")
        if not np.all((p == Polarity.ON) | (p == Polarity.OFF)):
            raise ValidationError("polarities must be ON (1) or OFF (0)")
        dt = np.diff(t)
        if np.any(dt < 0) or np.any((dt == 0) & (np.diff(c) < 0)):
            raise ValidationError("stream must be sorted by (timestamp_us, channel)")

    def __len__(self):
        return int(self.times_us.size)

    def __iter__(self) -> Iterator[AerEvent]:
        for t, c, p in zip(self.times_us, self.channels, self.polarities):
            yield AerEvent(int(t), int(c), Polarity(int(p)))

    def __eq__(self, other):
        if not isinstance(other, AerStream):
            return NotImplemented
        return (
            np.array_equal(self.times_us, other.times_us)
            and np.array_equal(self.channels, other.channels)
            and np.array_equal(self.polarities, other.polarities)
        )

    @classmethod
    def from_events(cls, events: Iterable[AerEvent]) -> "AerStream":
        ev = list(events)
        return cls(
            np.array([e[0] for e in ev], dtype=np.int64),
            np.array([e[1] for e in ev], dtype=np.int32),
            np.array([int(e[2]) for e in ev], dtype=np.uint8),
        )

    @classmethod
    def empty(cls) -> "AerStream":
        return cls(np.array([], dtype=np.int64), np.array([], dtype=np.int32), np.array([], dtype=np.uint8))


def merge_channels(trains: Sequence[tuple[int, SpikeTrain]]) -> AerStream:
    """Merge per-channel spike trains into one time-sorted stream.

    Equal timestamps are ordered by ascending channel id; the merge is
    stable, so each channel's own event order is preserved.
    """
    seen = set()
    for ch, train in trains:
        if ch in seen:
            raise ValidationError(f"duplicate channel id {ch}")
        if not 0 <= ch <= CHANNEL_MAX:
            raise ValidationError(f"channel id {ch} out of range [0, {CHANNEL_MAX}]")
        seen.add(ch)
        train.validate()
    if not trains:
        return AerStream.empty()
    times = np.concatenate([tr.times_us for _, tr in trains])
    chans = np.concatenate(
        [np.full(tr.n_events, ch, dtype=np.int32) for ch, tr in trains]
    )
    pols = np.concatenate([tr.polarities for _, tr in trains])
    order = np.lexsort((chans, times))  # stable: ties keep per-channel order
    return AerStream(times[order], chans[order], pols[order])


def arbiter_simulate(stream: AerStream, service_time_us: int) -> tuple[AerStream, int]:
    """Single-server FIFO arbiter: egress_i = max(arrival_i, egress_{i-1} + s).

    Returns the re-timestamped egress stream and the maximum latency
    (egress - arrival) over all events. With service time 0, or whenever all
    inter-arrival gaps are at least the service time, egress equals ingress.
    """
    if service_time_us < 0:
        raise ValidationError("service_time_us must be non-negative")
    stream.validate()
    n = len(stream)
    if n == 0:
        return stream, 0
    s = int(service_time_us)
    arrivals = stream.times_us.astype(np.int64)
    # egress_i = s*i + max_{j<=i} (arrival_j - s*j): the FIFO recurrence in
    # closed form via a running maximum.
    k = np.arange(n, dtype=np.int64)
    egress = s * k + np.maximum.accumulate(arrivals - s * k)
    latency = int((egress - arrivals).max())
    return AerStream(egress, stream.channels, stream.polarities), latency


def serialize(stream: AerStream) -> bytes:
    """Pack a stream into the 8-byte-per-event wire format."""
    stream.validate()
    t = stream.times_us.astype(np.uint64)
    value = (stream.channels.astype(np.uint64) << np.uint64(1)) | stream.polarities.astype(np.uint64)
    words = t | (value << np.uint64(TIMESTAMP_BITS))
    return words.astype("<u8").tobytes()


def deserialize(data: bytes) -> AerStream:
    """Unpack wire-format bytes; length and sortedness are enforced."""
    if len(data) % RECORD_BYTES != 0:
        raise FormatError(
            f"byte length {len(data)} is not a multiple of {RECORD_BYTES}"
        )
    words = np.frombuffer(data, dtype="<u8")
    t = (words & np.uint64(_T_MAX - 1)).astype(np.int64)
    value = words >> np.uint64(TIMESTAMP_BITS)
    channels = (value >> np.uint64(1)).astype(np.int32)
    pols = (value & np.uint64(1)).astype(np.uint8)
    try:
        return AerStream(t, channels, pols)
    except ValidationError as exc:
        raise FormatError(str(exc)) from None


def write_aer(path, stream: AerStream, metadata: dict | None = None) -> None:
    """Write a `.aer` file; metadata goes to a `<path>.meta` sidecar."""
    with open(path, "wb") as fh:
        fh.write(serialize(stream))
    if metadata is not None:
        with open(f"{path}.meta", "w", encoding="utf-8") as fh:
            for key, val in metadata.items():
                fh.write(f"{key}={val}\n")


def read_aer(path) -> tuple[AerStream, dict]:
    """Read a `.aer` file and its sidecar metadata ({} if no sidecar)."""
    with open(path, "rb") as fh:
        stream = deserialize(fh.read())
    metadata: dict[str, str] = {}
    try:
        with open(f"{path}.meta", "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise FormatError(f"bad sidecar line: {line!r}")
                key, _, val = line.partition("=")
                metadata[key.strip()] = val.strip()
    except FileNotFoundError:
        pass
    return stream, metadata


def stream_to_trains(stream: AerStream, duration_us: int | None = None) -> dict[int, SpikeTrain]:
    """Split a stream back into per-channel spike trains."""
    if duration_us is None:
        duration_us = int(stream.times_us.max()) + 1 if len(stream) else 0
    out: dict[int, SpikeTrain] = {}
    for ch in np.unique(stream.channels):
        mask = stream.channels == ch
        out[int(ch)] = SpikeTrain(
            stream.times_us[mask], stream.polarities[mask], duration_us
        )
    return out
