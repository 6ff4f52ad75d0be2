"""Experiment runner: encode, sweep-snr, compare, aer-pack, decode.

Option values may carry unit suffixes (mV, uV, nV, V; s, ms, us, ns) and are
normalized to volts / integer microseconds. Each option resolves with
precedence flags > config file > documented default; the config file is
plain ``key = value`` text keyed by the long option names, and unknown keys
are rejected. Exit codes: 0 success, 1 validation/config error, 2 I/O
error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .aer import arbiter_simulate, merge_channels, read_aer, write_aer
from .decoding import (
    DEFAULT_BIN_WIDTH_US,
    DEFAULT_TAU_US,
    KinematicsSeries,
    bin_spikes,
    evaluate_decoding,
    fit_readout,
    leaky_features,
    resample_kinematics,
    select_ridge_lambda,
)
from .encoders import (
    AdmConfig,
    SpikeTrain,
    ThresholdConfig,
    adm_circuit_encode,
    adm_encode,
    sweep_snr,
    threshold_encode,
)
from .errors import ConfigError, NumericalError, ValidationError
from .metrics import EnergyModel, energy_report, match_spike_trains, spike_rate
from .signals import FrontEndConfig, bandpass_front_end, load_signal, save_signal_csv

_VOLT_SUFFIXES = (("mv", 1e-3), ("uv", 1e-6), ("nv", 1e-9), ("v", 1.0))
_TIME_SUFFIXES = (("ms", 1e3), ("us", 1.0), ("ns", 1e-3), ("s", 1e6))


def parse_volts(text) -> float:
    """'1mV' -> 0.001; bare numbers are volts."""
    if isinstance(text, (int, float)):
        return float(text)
    s = text.strip().replace("µ", "u")
    low = s.lower()
    for suffix, scale in _VOLT_SUFFIXES:
        if low.endswith(suffix):
            try:
                return float(s[: -len(suffix)]) * scale
            except ValueError:
                raise ConfigError(f"bad voltage {text!r}") from None
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"bad voltage {text!r}") from None


def parse_duration_us(text) -> int:
    """'0.1ms' -> 100; bare numbers are microseconds."""
    if isinstance(text, (int, float)):
        return int(round(text))
    s = text.strip().replace("µ", "u")
    low = s.lower()
    for suffix, scale in _TIME_SUFFIXES:
        if low.endswith(suffix):
            try:
                return int(round(float(s[: -len(suffix)]) * scale))
            except ValueError:
                raise ConfigError(f"bad duration {text!r}") from None
    try:
        return int(round(float(s)))
    except ValueError:
        raise ConfigError(f"bad duration {text!r}") from None


def _parse_float(text) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"bad number {text!r}") from None


def _parse_int(text) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(f"bad integer {text!r}") from None


def _parse_multipliers(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        values = [float(tok) for tok in str(text).split(",") if tok.strip() != ""]
    except ValueError:
        raise ConfigError(f"bad multiplier list {text!r}") from None
    if not values:
        raise ConfigError("multiplier list is empty")
    return values


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {text!r}")


_REQUIRED = object()


@dataclass(frozen=True)
class Opt:
    name: str
    parse: Callable
    default: object
    help: str
    flag: bool = False


def _read_config(path) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: line {line_no}: expected `key = value`")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


def _add_options(parser: argparse.ArgumentParser, opts: list[Opt]) -> None:
    for o in opts:
        if o.flag:
            parser.add_argument(f"--{o.name}", action="store_const", const=True,
                                default=None, help=o.help)
        else:
            parser.add_argument(f"--{o.name}", type=str, default=None, help=o.help)
    parser.add_argument("--config", type=str, default=None,
                        help="plain-text `key = value` config file; flags win")


def _resolve(ns: argparse.Namespace, opts: list[Opt]) -> dict:
    config = _read_config(ns.config) if ns.config else {}
    known = {o.name for o in opts}
    unknown = sorted(set(config) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    resolved = {}
    for o in opts:
        raw = getattr(ns, o.name.replace("-", "_"))
        if raw is None and o.name in config:
            raw = config[o.name]
        if raw is None:
            if o.default is _REQUIRED:
                raise ConfigError(f"missing required option --{o.name}")
            resolved[o.name] = o.default
        else:
            resolved[o.name] = o.parse(raw) if not (o.flag and raw is True) else True
    return resolved


_SIGNAL_OPTS = [
    Opt("in", str, _REQUIRED, "input signal file"),
    Opt("signal-format", str, "csv", "signal file format: csv | raw_f32_le (default csv)"),
    Opt("rate", _parse_float, None, "sample rate in Hz (required for raw / single-column csv)"),
]

_ENCODER_PARAM_OPTS = [
    Opt("delta", parse_volts, None, "delta-modulator threshold for both polarities (e.g. 1mV)"),
    Opt("delta-on", parse_volts, None, "ON threshold override"),
    Opt("delta-off", parse_volts, None, "OFF threshold override"),
    Opt("gain", _parse_float, 4.044, "differencing amplifier gain A (default 4.044)"),
    Opt("reset-delay", parse_duration_us, 100, "reset delay / spike width (default 0.1ms)"),
    Opt("refractory", parse_duration_us, 1000, "refractory period (default 1ms)"),
    Opt("vref", parse_volts, 0.0, "amplifier reference voltage (default 0V)"),
    Opt("k", _parse_float, -4.5, "RMS multiplier for threshold-rms (default -4.5)"),
    Opt("level", parse_volts, None, "absolute threshold level for threshold-abs"),
]

_FRONT_END_OPTS = [
    Opt("front-end", _parse_bool, False, "apply the band-pass front-end before encoding", flag=True),
    Opt("fe-gain-db", _parse_float, 12.14, "front-end mid-band gain in dB (default 12.14)"),
    Opt("fe-low", _parse_float, 80.0, "front-end low corner in Hz (default 80)"),
    Opt("fe-high", _parse_float, 8000.0, "front-end high corner in Hz (default 8000)"),
]

_ENERGY_OPTS = [
    Opt("energy-per-spike", _parse_float, 60.7281e-9, "energy per spike in J (default 60.7281e-9)"),
    Opt("dynamic-power", _parse_float, 12.145e-6, "nominal dynamic power in W (default 12.145e-6)"),
]

ENCODER_NAMES = ("adm", "adm-circuit", "threshold-rms", "threshold-abs")


def _adm_config(opts) -> AdmConfig:
    delta = opts["delta"] if opts["delta"] is not None else AdmConfig.delta_on_v
    return AdmConfig(
        delta_on_v=opts["delta-on"] if opts["delta-on"] is not None else delta,
        delta_off_v=opts["delta-off"] if opts["delta-off"] is not None else delta,
        gain_a=opts["gain"],
        reset_delay_us=opts["reset-delay"],
        refractory_us=opts["refractory"],
        v_ref=opts["vref"],
    )


def _build_encoder(name: str, opts) -> tuple[Callable[[object], SpikeTrain], dict]:
    """Encoder callable plus the parameter set it runs with (for echoing)."""
    if name == "adm" or name == "adm-circuit":
        cfg = _adm_config(opts)
        params = {
            "delta_on_v": cfg.delta_on_v,
            "delta_off_v": cfg.delta_off_v,
            "gain_a": cfg.gain_a,
            "reset_delay_us": cfg.reset_delay_us,
            "refractory_us": cfg.refractory_us,
            "v_ref": cfg.v_ref,
        }
        if name == "adm":
            return (lambda s: adm_encode(s, cfg)), params
        return (lambda s: adm_circuit_encode(s, cfg)[0]), params
    if name == "threshold-rms":
        cfg = ThresholdConfig(mode="rms_multiplier", k_or_level=opts["k"],
                              refractory_us=opts["refractory"])
        return (lambda s: threshold_encode(s, cfg)), {
            "k": cfg.k_or_level, "refractory_us": cfg.refractory_us}
    if name == "threshold-abs":
        if opts["level"] is None:
            raise ConfigError("threshold-abs requires --level")
        cfg = ThresholdConfig(mode="absolute", k_or_level=opts["level"],
                              refractory_us=opts["refractory"])
        return (lambda s: threshold_encode(s, cfg)), {
            "level_v": cfg.k_or_level, "refractory_us": cfg.refractory_us}
    raise ConfigError(f"unknown encoder {name!r}; choose from {ENCODER_NAMES}")


def _load_input_signal(opts):
    return load_signal(opts["in"], opts["signal-format"], opts["rate"])


def _apply_front_end(signal, opts):
    if not opts["front-end"]:
        return signal
    fe = FrontEndConfig(midband_gain_db=opts["fe-gain-db"],
                        f_low_hz=opts["fe-low"], f_high_hz=opts["fe-high"])
    return bandpass_front_end(signal, fe)


def _echo(lines) -> None:
    for key, val in lines:
        print(f"{key} = {val}")


def cmd_encode(ns) -> int:
    opts = _resolve(ns, _SIGNAL_OPTS + _ENCODER_PARAM_OPTS + _FRONT_END_OPTS
                    + _ENERGY_OPTS + [
                        Opt("encoder", str, "adm", "adm | adm-circuit | threshold-rms | threshold-abs (default adm)"),
                        Opt("seed", _parse_int, 0, "run seed, echoed for provenance (default 0)"),
                        Opt("out", str, _REQUIRED, "output spike-train CSV"),
                        Opt("vout-trace", str, None, "write the amplifier output trace CSV (adm-circuit only)"),
                    ])
    if opts["vout-trace"] is not None and opts["encoder"] != "adm-circuit":
        raise ConfigError("--vout-trace needs --encoder adm-circuit")
    signal = _apply_front_end(_load_input_signal(opts), opts)
    encode, params = _build_encoder(opts["encoder"], opts)

    trace = None
    if opts["encoder"] == "adm-circuit" and opts["vout-trace"] is not None:
        train, trace = adm_circuit_encode(signal, _adm_config(opts))
    else:
        train = encode(signal)

    model = EnergyModel(energy_per_spike_j=opts["energy-per-spike"],
                        dynamic_power_w=opts["dynamic-power"])
    energy, power = energy_report(train, model)
    _echo([("encoder", opts["encoder"]), ("seed", opts["seed"])]
          + sorted(params.items())
          + [
              ("events_on", train.on_times().size),
              ("events_off", train.off_times().size),
              ("events_total", train.n_events),
              ("rate_hz", spike_rate(train)),
              ("dynamic_energy_j", energy),
              ("avg_power_w", power),
          ])
    train.to_csv(opts["out"])
    if trace is not None:
        save_signal_csv(opts["vout-trace"], trace)
    return 0


def cmd_sweep_snr(ns) -> int:
    opts = _resolve(ns, _SIGNAL_OPTS + _ENCODER_PARAM_OPTS + _ENERGY_OPTS + [
        Opt("encoders", str, "adm", "comma-separated encoder list (default adm)"),
        Opt("multipliers", _parse_multipliers, [1.0, 1.5, 2.0, 4.0],
            "noise multipliers of median |x| (default 1,1.5,2,4)"),
        Opt("seed", _parse_int, 0, "noise seed (default 0)"),
        Opt("tolerance", parse_duration_us, 500, "match window (default 500us)"),
        Opt("out", str, _REQUIRED, "output CSV (multiplier,snr_db,encoder,precision,recall,f1)"),
    ])
    signal = _load_input_signal(opts)
    names = [n.strip() for n in opts["encoders"].split(",") if n.strip()]
    if not names:
        raise ConfigError("no encoders selected")

    rows = []
    for name in names:
        encode, _ = _build_encoder(name, opts)
        entries = sweep_snr(signal, encode, opts["multipliers"], opts["seed"])
        reference = next(e for e in entries if e.multiplier == 0)
        offset = 1 if 0 not in opts["multipliers"] else 0
        for req, entry in zip(opts["multipliers"], entries[offset:]):
            rep = match_spike_trains(reference.train, entry.train, opts["tolerance"])
            rows.append((req, entry.snr_db, name, rep.precision, rep.recall, rep.f1))

    with open(opts["out"], "w", encoding="utf-8") as fh:
        fh.write("multiplier,snr_db,encoder,precision,recall,f1\n")
        for mult, snr, name, p, r, f1 in rows:
            fh.write(f"{mult!r},{snr!r},{name},{p!r},{r!r},{f1!r}\n")
    print(f"wrote {len(rows)} rows to {opts['out']}")
    return 0


def cmd_compare(ns) -> int:
    opts = _resolve(ns, [
        Opt("ref", str, _REQUIRED, "reference spike-train CSV"),
        Opt("cand", str, _REQUIRED, "candidate spike-train CSV"),
        Opt("tolerance", parse_duration_us, 500, "match window (default 500us)"),
        Opt("out", str, None, "also write the JSON report to this file"),
    ])
    reference = SpikeTrain.from_csv(opts["ref"])
    candidate = SpikeTrain.from_csv(opts["cand"])
    report = match_spike_trains(reference, candidate, opts["tolerance"])
    line = report.to_json()
    print(line)
    if opts["out"]:
        with open(opts["out"], "w", encoding="utf-8") as fh:
            fh.write(line + "\n")
    return 0


def cmd_aer_pack(ns) -> int:
    opts = _resolve(ns, [
        Opt("service-time", parse_duration_us, None,
            "run the FIFO arbiter with this service time before writing"),
        Opt("out", str, _REQUIRED, "output .aer file (sidecar metadata at <out>.meta)"),
    ])
    if not ns.channel:
        raise ConfigError("need at least one --channel CH=FILE")
    trains = []
    for item in ns.channel:
        ch_text, sep, filename = item.partition("=")
        if not sep:
            raise ConfigError(f"bad --channel {item!r}; expected CH=FILE")
        trains.append((_parse_int(ch_text), SpikeTrain.from_csv(filename)))

    stream = merge_channels(trains)
    metadata = {
        "channels": ",".join(str(ch) for ch, _ in trains),
        "duration_us": max((tr.duration_us for _, tr in trains), default=0),
        "events": len(stream),
    }
    max_latency = 0
    if opts["service-time"] is not None:
        stream, max_latency = arbiter_simulate(stream, opts["service-time"])
        metadata["service_time_us"] = opts["service-time"]
        metadata["max_latency_us"] = max_latency
    for item in ns.meta or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"bad --meta {item!r}; expected KEY=VALUE")
        metadata[key.strip()] = val.strip()

    write_aer(opts["out"], stream, metadata)
    _echo([("events", len(stream)), ("channels", len(trains)),
           ("max_latency_us", max_latency)])
    return 0


def cmd_decode(ns) -> int:
    opts = _resolve(ns, _ENERGY_OPTS + [
        Opt("aer", str, None, "input .aer stream (alternative to --spikes)"),
        Opt("kinematics", str, _REQUIRED, "kinematics CSV (time_s,vx,vy)"),
        Opt("bin-width", parse_duration_us, DEFAULT_BIN_WIDTH_US, "bin width (default 20ms)"),
        Opt("tau", parse_duration_us, DEFAULT_TAU_US, "leaky time constant (default 100ms)"),
        Opt("ridge-lambda", _parse_float, None,
            "ridge strength; omitted -> grid-selected on a held-out split"),
        Opt("span", parse_duration_us, None, "binned span (default: kinematics extent)"),
        Opt("out", str, _REQUIRED, "output JSON report"),
    ])
    kin = KinematicsSeries.from_csv(opts["kinematics"])
    span = opts["span"] if opts["span"] is not None else int(kin.t_us[-1])

    arms = []
    if opts["aer"]:
        stream, _ = read_aer(opts["aer"])
        arms.append((Path(opts["aer"]).stem, stream, len(stream)))
    for item in ns.spikes or []:
        label, sep, filename = item.partition("=")
        if not sep:
            label, filename = Path(item).stem, item
        train = SpikeTrain.from_csv(filename)
        arms.append((label, train, train.n_events))
    if not arms:
        raise ConfigError("need --spikes or --aer input")

    model = EnergyModel(energy_per_spike_j=opts["energy-per-spike"],
                        dynamic_power_w=opts["dynamic-power"])
    report: dict = {
        "bin_width_us": opts["bin-width"],
        "tau_us": opts["tau"],
        "span_us": span,
        "arms": {},
    }
    for label, source, n_events in arms:
        counts = bin_spikes(source, opts["bin-width"], span)
        feats = leaky_features(counts, opts["tau"])
        targets = resample_kinematics(kin, opts["bin-width"], counts.n_bins)
        lam = opts["ridge-lambda"]
        if lam is None:
            lam = select_ridge_lambda(feats, targets)
        readout = fit_readout(feats, targets, lam)
        rho_x, rho_y, rho_avg = evaluate_decoding(readout, feats, targets)
        energy = n_events * model.energy_per_spike_j
        report["arms"][label] = {
            "rho_x": rho_x,
            "rho_y": rho_y,
            "rho_avg": rho_avg,
            "events": n_events,
            "dynamic_energy_j": energy,
            "avg_power_w": energy * 1e6 / span,
            "ridge_lambda": lam,
        }
        print(f"{label}: rho_x={rho_x:.4f} rho_y={rho_y:.4f} rho_avg={rho_avg:.4f} "
              f"events={n_events} lambda={lam}")

    with open(opts["out"], "w", encoding="utf-8") as fh:
        fh.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="admspike", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode a signal file into a spike train")
    _add_options(p, _SIGNAL_OPTS + _ENCODER_PARAM_OPTS + _FRONT_END_OPTS
                 + _ENERGY_OPTS + [
                     Opt("encoder", str, "adm", "encoder name"),
                     Opt("seed", _parse_int, 0, "run seed"),
                     Opt("out", str, _REQUIRED, "output spike CSV"),
                     Opt("vout-trace", str, None, "amplifier trace CSV"),
                 ])
    p.set_defaults(run=cmd_encode)

    p = sub.add_parser("sweep-snr", help="noise-robustness sweep against the clean encoding")
    _add_options(p, _SIGNAL_OPTS + _ENCODER_PARAM_OPTS + _ENERGY_OPTS + [
        Opt("encoders", str, "adm", "encoder list"),
        Opt("multipliers", _parse_multipliers, [1.0, 1.5, 2.0, 4.0], "noise multipliers"),
        Opt("seed", _parse_int, 0, "noise seed"),
        Opt("tolerance", parse_duration_us, 500, "match window"),
        Opt("out", str, _REQUIRED, "output CSV"),
    ])
    p.set_defaults(run=cmd_sweep_snr)

    p = sub.add_parser("compare", help="score one spike train against another")
    _add_options(p, [
        Opt("ref", str, _REQUIRED, "reference spike CSV"),
        Opt("cand", str, _REQUIRED, "candidate spike CSV"),
        Opt("tolerance", parse_duration_us, 500, "match window"),
        Opt("out", str, None, "JSON output file"),
    ])
    p.set_defaults(run=cmd_compare)

    p = sub.add_parser("aer-pack", help="merge per-channel spike CSVs into a .aer stream")
    p.add_argument("--channel", action="append", metavar="CH=FILE",
                   help="channel id and spike CSV (repeatable)")
    p.add_argument("--meta", action="append", metavar="KEY=VALUE",
                   help="extra sidecar metadata (repeatable)")
    _add_options(p, [
        Opt("service-time", parse_duration_us, None, "arbiter service time"),
        Opt("out", str, _REQUIRED, "output .aer file"),
    ])
    p.set_defaults(run=cmd_aer_pack)

    p = sub.add_parser("decode", help="bin -> leaky features -> ridge readout -> Pearson rho")
    p.add_argument("--spikes", action="append", metavar="[LABEL=]FILE",
                   help="spike-train CSV arm (repeatable)")
    _add_options(p, _ENERGY_OPTS + [
        Opt("aer", str, None, ".aer input"),
        Opt("kinematics", str, _REQUIRED, "kinematics CSV"),
        Opt("bin-width", parse_duration_us, DEFAULT_BIN_WIDTH_US, "bin width"),
        Opt("tau", parse_duration_us, DEFAULT_TAU_US, "leaky tau"),
        Opt("ridge-lambda", _parse_float, None, "ridge strength"),
        Opt("span", parse_duration_us, None, "binned span"),
        Opt("out", str, _REQUIRED, "output JSON report"),
    ])
    p.set_defaults(run=cmd_decode)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        return ns.run(ns)
    except (ValidationError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
