import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from admspike import (
    AerEvent,
    AerStream,
    FormatError,
    Polarity,
    SpikeTrain,
    ValidationError,
    arbiter_simulate,
    deserialize,
    merge_channels,
    read_aer,
    serialize,
    stream_to_trains,
    write_aer,
)


def train(on=(), off=(), duration=None):
    times = sorted([(t, 1) for t in on] + [(t, 0) for t in off])
    ts = np.array([t for t, _ in times], dtype=np.int64)
    ps = np.array([p for _, p in times], dtype=np.uint8)
    if duration is None:
        duration = (int(ts.max()) + 1) if ts.size else 1
    return SpikeTrain(ts, ps, duration)


def random_stream(rng, n):
    t = np.sort(rng.integers(0, 1 << 40, size=n))
    ch = rng.integers(0, 32768, size=n)
    # enforce the (t, ch) lexicographic invariant for duplicate timestamps
    order = np.lexsort((ch, t))
    return AerStream(t[order], ch[order], rng.integers(0, 2, size=n))


class TestMergeChannels:
    def test_single_channel_identity(self):
        tr = train(on=[10, 30], off=[20])
        stream = merge_channels([(3, tr)])
        assert len(stream) == 3
        assert stream.times_us.tolist() == [10, 20, 30]
        assert np.all(stream.channels == 3)

    def test_tie_break_by_channel(self):
        s = merge_channels([(0, train(on=[10, 30])), (1, train(on=[20, 30]))])
        assert [(e.timestamp_us, e.channel) for e in s] == [
            (10, 0), (20, 1), (30, 0), (30, 1)
        ]

    def test_empty_input(self):
        assert len(merge_channels([])) == 0

    def test_duplicate_channel_rejected(self):
        with pytest.raises(ValidationError):
            merge_channels([(0, train(on=[1])), (0, train(on=[2]))])

    def test_count_preserved_and_stable(self):
        rng = np.random.default_rng(0)
        trains = []
        for ch in range(8):
            on = np.sort(rng.choice(10_000, size=50, replace=False))
            off = np.sort(rng.choice(10_000, size=50, replace=False))
            trains.append((ch, train(on=on.tolist(), off=off.tolist(), duration=10_001)))
        stream = merge_channels(trains)
        assert len(stream) == sum(tr.n_events for _, tr in trains)
        for ch, tr in trains:
            mask = stream.channels == ch
            assert np.array_equal(stream.times_us[mask], tr.times_us)
            assert np.array_equal(stream.polarities[mask], tr.polarities)


class TestArbiter:
    def test_zero_service_identity(self):
        rng = np.random.default_rng(1)
        s = random_stream(rng, 500)
        out, latency = arbiter_simulate(s, 0)
        assert out == s
        assert latency == 0

    def test_two_simultaneous_events(self):
        s = AerStream(np.array([100, 100]), np.array([0, 1]), np.array([1, 1]))
        out, latency = arbiter_simulate(s, 1)
        assert out.times_us.tolist() == [100, 101]
        assert latency == 1

    def test_burst_closed_form(self):
        for n, svc in [(2, 3), (10, 5), (100, 2)]:
            s = AerStream(
                np.full(n, 1000, dtype=np.int64),
                np.arange(n, dtype=np.int32),
                np.ones(n, dtype=np.uint8),
            )
            out, latency = arbiter_simulate(s, svc)
            assert out.times_us.tolist() == [1000 + k * svc for k in range(n)]
            assert latency == (n - 1) * svc

    def test_never_decreases_and_order_preserved(self):
        rng = np.random.default_rng(2)
        s = random_stream(rng, 2000)
        out, _ = arbiter_simulate(s, 7)
        assert np.all(out.times_us >= s.times_us)
        assert np.array_equal(out.channels, s.channels)
        assert np.all(np.diff(out.times_us) >= 0)
        out.validate()  # egress is itself a valid sorted stream

    def test_identity_when_gaps_exceed_service(self):
        s = AerStream(np.array([0, 100, 250]), np.array([2, 0, 1]), np.array([1, 0, 1]))
        out, latency = arbiter_simulate(s, 50)
        assert out == s and latency == 0


class TestSerialization:
    def test_known_record_layout(self):
        s = AerStream.from_events([AerEvent(1, 2, Polarity.ON)])
        assert serialize(s).hex() == "010000000000" + "0500"

    def test_empty_stream(self):
        assert serialize(AerStream.empty()) == b""
        assert len(deserialize(b"")) == 0

    def test_round_trip_random(self):
        rng = np.random.default_rng(3)
        s = random_stream(rng, 1000)
        assert deserialize(serialize(s)) == s

    @settings(max_examples=100, deadline=None)
    @given(st.lists(
        st.tuples(st.integers(0, 2**48 - 1), st.integers(0, 32767), st.integers(0, 1)),
        max_size=50,
    ))
    def test_round_trip_property(self, raw):
        raw.sort()
        t = np.array([r[0] for r in raw], dtype=np.int64)
        ch = np.array([r[1] for r in raw], dtype=np.int32)
        pol = np.array([r[2] for r in raw], dtype=np.uint8)
        s = AerStream(t, ch, pol)
        assert deserialize(serialize(s)) == s

    def test_bad_length_rejected(self):
        with pytest.raises(FormatError):
            deserialize(b"\x00" * 12)

    def test_unsorted_payload_rejected(self):
        a = serialize(AerStream.from_events([AerEvent(10, 0, Polarity.ON)]))
        b = serialize(AerStream.from_events([AerEvent(5, 0, Polarity.ON)]))
        with pytest.raises(FormatError):
            deserialize(a + b)


class TestFileIo:
    def test_write_read_with_sidecar(self, tmp_path):
        rng = np.random.default_rng(4)
        s = random_stream(rng, 200)
        path = tmp_path / "events.aer"
        write_aer(path, s, metadata={"sample_rate_hz": 30000, "channels": "0,1"})
        back, meta = read_aer(path)
        assert back == s
        assert meta == {"sample_rate_hz": "30000", "channels": "0,1"}

    def test_read_without_sidecar(self, tmp_path):
        path = tmp_path / "events.aer"
        write_aer(path, AerStream.empty())
        back, meta = read_aer(path)
        assert len(back) == 0 and meta == {}

    def test_stream_to_trains_round_trip(self):
        trains = [(0, train(on=[10, 30], off=[20])), (5, train(on=[15]))]
        stream = merge_channels(trains)
        split = stream_to_trains(stream, duration_us=31)
        assert split[0] == trains[0][1]
        assert np.array_equal(split[5].times_us, trains[1][1].times_us)
