"""AER transport: merge a 16-channel array into one stream, serialize it
bit-exactly, and study arbiter queueing latency vs. service time.

Each event costs exactly 8 bytes on the wire (48-bit microsecond timestamp,
15-bit channel, 1-bit polarity). The FIFO arbiter model shows how the
maximum multiplexing latency grows once bursts arrive faster than the
service time.

Run:  python demos/03_aer_transport.py
"""

import pathlib

from admspike import (
    AdmConfig,
    adm_encode,
    arbiter_simulate,
    deserialize,
    merge_channels,
    serialize,
    write_aer,
)
from admspike.synthetic import action_potential_signal

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

config = AdmConfig()
trains = []
for channel in range(16):
    signal, _ = action_potential_signal(duration_s=4.0, rate_hz=40.0, seed=100 + channel)
    trains.append((channel, adm_encode(signal, config)))

stream = merge_channels(trains)
blob = serialize(stream)
assert deserialize(blob) == stream
print(f"merged {len(trains)} channels -> {len(stream)} events, "
      f"{len(blob)} bytes on the wire ({len(blob) // len(stream)} B/event)")

print(f"\n{'service_us':>10} {'max_latency_us':>15}")
for service_us in (0, 1, 5, 20, 100, 500):
    _, latency = arbiter_simulate(stream, service_us)
    print(f"{service_us:>10} {latency:>15}")

aer_path = OUT / "array16.aer"
write_aer(aer_path, stream, metadata={
    "channels": ",".join(str(ch) for ch, _ in trains),
    "duration_us": max(tr.duration_us for _, tr in trains),
    "events": len(stream),
})
print(f"\nwrote {aer_path} (+ sidecar {aer_path}.meta)")
