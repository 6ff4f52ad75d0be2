import json

import numpy as np
import pytest

from admspike import (
    SampledSignal,
    SpikeTrain,
    merge_channels,
    read_aer,
    save_signal_csv,
    serialize,
    stream_to_trains,
    write_aer,
)
from admspike.cli import main, parse_duration_us, parse_volts
from admspike.decoding import KinematicsSeries
from admspike.synthetic import (
    action_potential_signal,
    cosine_tuned_population,
    sinusoid_kinematics,
)

FS = 30_000.0


@pytest.fixture()
def signal_csv(tmp_path):
    sig, _ = action_potential_signal(duration_s=2.0, seed=3)
    path = tmp_path / "sig.csv"
    save_signal_csv(path, sig)
    return str(path)


def run(args):
    return main([str(a) for a in args])


class TestUnitParsing:
    def test_voltage_suffixes(self):
        assert parse_volts("1mV") == pytest.approx(1e-3)
        assert parse_volts("500uV") == pytest.approx(500e-6)
        assert parse_volts("25nV") == pytest.approx(25e-9)
        assert parse_volts("0.5V") == pytest.approx(0.5)
        assert parse_volts("0.002") == pytest.approx(0.002)

    def test_duration_suffixes(self):
        assert parse_duration_us("0.1ms") == 100
        assert parse_duration_us("1ms") == 1000
        assert parse_duration_us("250us") == 250
        assert parse_duration_us("1s") == 1_000_000
        assert parse_duration_us("42") == 42


class TestEncode:
    def test_constant_signal_reports_zero_events(self, tmp_path, capsys):
        path = tmp_path / "flat.csv"
        save_signal_csv(path, SampledSignal(np.full(3000, 0.1), FS))
        rc = run(["encode", "--in", path, "--encoder", "adm", "--delta", "1mV",
                  "--out", tmp_path / "train.csv"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "events_total = 0" in out
        train = SpikeTrain.from_csv(tmp_path / "train.csv")
        assert train.n_events == 0

    def test_deterministic_outputs(self, signal_csv, tmp_path):
        args = ["encode", "--in", signal_csv, "--encoder", "adm-circuit",
                "--delta", "30mV", "--seed", "7"]
        rc1 = run(args + ["--out", tmp_path / "a.csv", "--vout-trace", tmp_path / "ta.csv"])
        rc2 = run(args + ["--out", tmp_path / "b.csv", "--vout-trace", tmp_path / "tb.csv"])
        assert rc1 == rc2 == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "ta.csv").read_bytes() == (tmp_path / "tb.csv").read_bytes()

    def test_parameters_echoed(self, signal_csv, tmp_path, capsys):
        rc = run(["encode", "--in", signal_csv, "--encoder", "adm",
                  "--refractory", "1ms", "--reset-delay", "0.1ms",
                  "--out", tmp_path / "t.csv"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "refractory_us = 1000" in out
        assert "reset_delay_us = 100" in out

    def test_missing_input_is_io_error(self, tmp_path):
        rc = run(["encode", "--in", tmp_path / "nope.csv", "--out", tmp_path / "t.csv"])
        assert rc == 2

    def test_bad_encoder_is_config_error(self, signal_csv, tmp_path):
        rc = run(["encode", "--in", signal_csv, "--encoder", "zap",
                  "--out", tmp_path / "t.csv"])
        assert rc == 1

    def test_no_partial_write_on_error(self, signal_csv, tmp_path):
        out = tmp_path / "t.csv"
        rc = run(["encode", "--in", signal_csv, "--encoder", "threshold-abs",
                  "--out", out])  # missing --level
        assert rc == 1
        assert not out.exists()

    def test_config_file_and_flag_precedence(self, signal_csv, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("encoder = adm\ndelta = 50mV\nrefractory = 2ms\n")
        rc = run(["encode", "--in", signal_csv, "--config", cfg,
                  "--delta", "30mV", "--out", tmp_path / "t.csv"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "delta_on_v = 0.03" in out       # flag wins over config
        assert "refractory_us = 2000" in out    # config wins over default

    def test_unknown_config_key_rejected(self, signal_csv, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("zap = 1\n")
        rc = run(["encode", "--in", signal_csv, "--config", cfg,
                  "--out", tmp_path / "t.csv"])
        assert rc == 1


class TestSweepSnr:
    def test_zero_multiplier_scores_one(self, signal_csv, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = run(["sweep-snr", "--in", signal_csv, "--encoders", "adm,threshold-abs",
                  "--delta", "117mV", "--level", "54mV",
                  "--multipliers", "0", "--seed", "1", "--out", out])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "multiplier,snr_db,encoder,precision,recall,f1"
        assert len(lines) == 3
        for line in lines[1:]:
            assert line.split(",")[5] == "1.0"

    def test_four_levels_rows_and_decreasing_snr(self, signal_csv, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = run(["sweep-snr", "--in", signal_csv, "--encoders", "adm",
                  "--delta", "117mV", "--multipliers", "1,1.5,2,4",
                  "--seed", "1", "--out", out])
        assert rc == 0
        rows = [l.split(",") for l in out.read_text().splitlines()[1:]]
        assert [r[0] for r in rows] == ["1.0", "1.5", "2.0", "4.0"]
        snrs = [float(r[1]) for r in rows]
        assert all(a > b for a, b in zip(snrs, snrs[1:]))

    def test_deterministic(self, signal_csv, tmp_path):
        args = ["sweep-snr", "--in", signal_csv, "--encoders", "adm",
                "--delta", "60mV", "--multipliers", "1,2", "--seed", "5"]
        run(args + ["--out", tmp_path / "a.csv"])
        run(args + ["--out", tmp_path / "b.csv"])
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestCompare:
    def write_train(self, path, on):
        SpikeTrain(np.array(on, dtype=np.int64),
                   np.ones(len(on), dtype=np.uint8), max(on) + 1).to_csv(path)

    def test_self_compare_is_perfect(self, tmp_path, capsys):
        p = tmp_path / "t.csv"
        self.write_train(p, [100, 200, 300])
        rc = run(["compare", "--ref", p, "--cand", p, "--tolerance", "500us"])
        assert rc == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["f1"] == 1.0

    def test_worked_example(self, tmp_path, capsys):
        ref, cand = tmp_path / "r.csv", tmp_path / "c.csv"
        self.write_train(ref, [1000, 2000, 3000])
        self.write_train(cand, [1200, 2900, 5000])
        rc = run(["compare", "--ref", ref, "--cand", cand, "--tolerance", "500"])
        assert rc == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["f1"] == pytest.approx(2 / 3, abs=1e-4)

    def test_empty_vs_nonempty(self, tmp_path, capsys):
        ref, cand = tmp_path / "r.csv", tmp_path / "c.csv"
        self.write_train(ref, [1000])
        cand.write_text("timestamp_us,polarity\n")
        rc = run(["compare", "--ref", ref, "--cand", cand])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["f1"] == 0.0

    def test_unsorted_file_is_validation_error(self, tmp_path):
        ref = tmp_path / "r.csv"
        ref.write_text("timestamp_us,polarity\n200,ON\n100,ON\n")
        cand = tmp_path / "c.csv"
        self.write_train(cand, [100])
        rc = run(["compare", "--ref", ref, "--cand", cand])
        assert rc == 1


class TestAerPack:
    def test_single_channel_round_trip(self, tmp_path):
        train = SpikeTrain(np.array([10, 20, 400]), np.array([1, 0, 1]), 1000)
        train.to_csv(tmp_path / "ch0.csv")
        out = tmp_path / "stream.aer"
        rc = run(["aer-pack", "--channel", f"0={tmp_path / 'ch0.csv'}", "--out", out])
        assert rc == 0
        stream, meta = read_aer(out)
        assert meta["channels"] == "0"
        back = stream_to_trains(stream, duration_us=1000)[0]
        # CSV loses the original duration; event content must round-trip
        assert np.array_equal(back.times_us, train.times_us)
        assert np.array_equal(back.polarities, train.polarities)

    def test_arbiter_service_time_recorded(self, tmp_path, capsys):
        train = SpikeTrain(np.array([100, 100]), np.array([1, 0]), 1000)
        # same-timestamp events need distinct channels
        t0 = SpikeTrain(np.array([100]), np.array([1]), 1000)
        t1 = SpikeTrain(np.array([100]), np.array([0]), 1000)
        t0.to_csv(tmp_path / "a.csv")
        t1.to_csv(tmp_path / "b.csv")
        out = tmp_path / "s.aer"
        rc = run(["aer-pack", "--channel", f"0={tmp_path / 'a.csv'}",
                  "--channel", f"1={tmp_path / 'b.csv'}",
                  "--service-time", "3us", "--out", out])
        assert rc == 0
        assert "max_latency_us = 3" in capsys.readouterr().out
        stream, meta = read_aer(out)
        assert meta["service_time_us"] == "3"
        assert stream.times_us.tolist() == [100, 103]

    def test_deterministic(self, tmp_path):
        train = SpikeTrain(np.array([7, 19]), np.array([1, 1]), 100)
        train.to_csv(tmp_path / "c.csv")
        run(["aer-pack", "--channel", f"3={tmp_path / 'c.csv'}", "--out", tmp_path / "x.aer"])
        run(["aer-pack", "--channel", f"3={tmp_path / 'c.csv'}", "--out", tmp_path / "y.aer"])
        assert (tmp_path / "x.aer").read_bytes() == (tmp_path / "y.aer").read_bytes()

    def test_duplicate_channel_rejected(self, tmp_path):
        train = SpikeTrain(np.array([7]), np.array([1]), 100)
        train.to_csv(tmp_path / "c.csv")
        rc = run(["aer-pack", "--channel", f"3={tmp_path / 'c.csv'}",
                  "--channel", f"3={tmp_path / 'c.csv'}", "--out", tmp_path / "x.aer"])
        assert rc == 1


class TestDecode:
    def test_exact_linear_synthetic_gives_rho_one(self, tmp_path):
        # hand-built arm: one spike per bin scaled so counts are exactly
        # linear in the target
        rng = np.random.default_rng(0)
        n_bins, w = 120, 10_000
        on_counts = rng.integers(0, 6, size=n_bins)
        off_counts = rng.integers(0, 6, size=n_bins)  # keeps both columns full rank
        times, pols, kin_t, vx, vy = [], [], [], [], []
        for b in range(n_bins):
            times.extend(b * w + 1 + np.arange(on_counts[b]))
            pols.extend([1] * on_counts[b])
            times.extend(b * w + 5000 + np.arange(off_counts[b]))
            pols.extend([0] * off_counts[b])
            kin_t.append(b * w + w // 2)
            vx.append(float(on_counts[b]))
            vy.append(-2.0 * on_counts[b] + 0.5 * off_counts[b] + 1.0)
        train = SpikeTrain(np.array(times), np.array(pols, dtype=np.uint8), n_bins * w)
        train.to_csv(tmp_path / "t.csv")
        KinematicsSeries(np.array(kin_t), np.array(vx), np.array(vy)).to_csv(tmp_path / "k.csv")
        out = tmp_path / "report.json"
        rc = run(["decode", "--spikes", f"arm={tmp_path / 't.csv'}",
                  "--kinematics", tmp_path / "k.csv", "--bin-width", "10ms",
                  "--tau", "1us", "--ridge-lambda", "0", "--span", f"{n_bins * w}us",
                  "--out", out])
        assert rc == 0
        report = json.loads(out.read_text())
        assert report["arms"]["arm"]["rho_avg"] == pytest.approx(1.0, abs=1e-9)

    def test_decode_from_aer_stream(self, tmp_path):
        kin = sinusoid_kinematics(duration_s=8.0)
        signals = cosine_tuned_population(kin, n_channels=6, seed=2)
        from admspike import AdmConfig, adm_encode
        cfg = AdmConfig(delta_on_v=0.117, delta_off_v=0.117)
        stream = merge_channels([(c, adm_encode(s, cfg)) for c, s in enumerate(signals)])
        write_aer(tmp_path / "s.aer", stream, {"channels": "0-5"})
        kin.to_csv(tmp_path / "k.csv")
        out = tmp_path / "report.json"
        rc = run(["decode", "--aer", tmp_path / "s.aer", "--kinematics", tmp_path / "k.csv",
                  "--out", out])
        assert rc == 0
        report = json.loads(out.read_text())
        arm = report["arms"]["s"]
        assert arm["events"] == len(stream)
        assert arm["rho_avg"] > 0.5

    def test_deterministic(self, tmp_path):
        train = SpikeTrain(np.arange(1, 2001) * 450, np.tile([1, 0], 1000), 1_000_000)
        train.to_csv(tmp_path / "t.csv")
        kin = sinusoid_kinematics(duration_s=1.0, step_s=0.005)
        kin.to_csv(tmp_path / "k.csv")
        args = ["decode", "--spikes", f"{tmp_path / 't.csv'}", "--kinematics",
                tmp_path / "k.csv", "--bin-width", "20ms"]
        run(args + ["--out", tmp_path / "a.json"])
        run(args + ["--out", tmp_path / "b.json"])
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_missing_inputs_rejected(self, tmp_path):
        kin = sinusoid_kinematics(duration_s=1.0)
        kin.to_csv(tmp_path / "k.csv")
        rc = run(["decode", "--kinematics", tmp_path / "k.csv", "--out", tmp_path / "r.json"])
        assert rc == 1
