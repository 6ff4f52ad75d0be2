"""Signal ingestion, the analog front-end model, and noise utilities.

Voltages are volts and times are seconds (CSV) or microseconds (event
timestamps) throughout. A :class:`SampledSignal` is a uniformly sampled
waveform; the time of sample ``i`` is ``t0_us + round(i * 1e6 / fs)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, freqz, lfilter

from .errors import ConfigError, DegenerateSignalWarning, ParseError, ValidationError

# Gaussian consistency constant: MAD of N(0, 1) is 0.6745.
MAD_GAUSSIAN_SCALE = 0.6745


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled voltage waveform.

    samples are float64 volts; sample_rate_hz must be positive and at most
    1 MHz so that per-sample microsecond timestamps stay unique.
    """

    samples: np.ndarray
    sample_rate_hz: float
    t0_us: int = 0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValidationError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("samples contain NaN or infinite values")
        if not (self.sample_rate_hz > 0):
            raise ValidationError("sample_rate_hz must be positive")
        if self.sample_rate_hz > 1e6:
            raise ValidationError(
                "sample_rate_hz above 1 MHz breaks 1 us timestamp resolution"
            )
        if self.t0_us < 0 or int(self.t0_us) != self.t0_us:
            raise ValidationError("t0_us must be a non-negative integer")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "t0_us", int(self.t0_us))

    def __len__(self):
        return self.samples.size

    def sample_times_us(self) -> np.ndarray:
        """Per-sample timestamps: t0_us + round(i * 1e6 / fs), int64."""
        i = np.arange(self.samples.size, dtype=np.float64)
        return self.t0_us + np.rint(i * 1e6 / self.sample_rate_hz).astype(np.int64)

    @property
    def end_time_us(self) -> int:
        """Exclusive end of the sampled window in microseconds."""
        return self.t0_us + int(round(self.samples.size * 1e6 / self.sample_rate_hz))


@dataclass(frozen=True)
class FrontEndConfig:
    """Band-pass front-end stage: mid-band gain and -3 dB corners.

    Defaults are the measured chip values. input_noise_vrms is carried as
    metadata (total input-referred noise); it is not injected by the filter.
    """

    midband_gain_db: float = 12.14
    f_low_hz: float = 80.0
    f_high_hz: float = 8000.0
    input_noise_vrms: float = 14.990e-6

    def __post_init__(self):
        if not (self.f_low_hz > 0 and self.f_high_hz > 0):
            raise ConfigError("corner frequencies must be positive")
        if not self.f_low_hz < self.f_high_hz:
            raise ConfigError("f_low_hz must be below f_high_hz")
        if self.input_noise_vrms < 0:
            raise ConfigError("input_noise_vrms must be non-negative")


def _parse_float(token: str, line_no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"not a number: {token!r}", line=line_no) from None


def _load_csv(path, sample_rate_hz):
    times = []
    values = []
    ncols = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = [f.strip() for f in line.split(",")]
            if ncols is None and any(f and not _looks_numeric(f) for f in fields):
                # optional header line, e.g. "time_s,value_v"
                continue
            if ncols is None:
                ncols = len(fields)
                if ncols not in (1, 2):
                    raise ParseError(
                        f"expected 1 or 2 columns, got {ncols}", line=line_no
                    )
            if len(fields) != ncols:
                raise ParseError(
                    f"expected {ncols} columns, got {len(fields)}", line=line_no
                )
            if ncols == 2:
                times.append(_parse_float(fields[0], line_no))
                values.append(_parse_float(fields[1], line_no))
            else:
                values.append(_parse_float(fields[0], line_no))
    if not values:
        raise ValidationError(f"no samples in {path}")
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValidationError("signal contains NaN or infinite values")

    if ncols == 1:
        if sample_rate_hz is None:
            raise ConfigError("sample_rate_hz required for single-column CSV")
        return SampledSignal(values, sample_rate_hz)

    t = np.asarray(times, dtype=np.float64)
    if not np.all(np.isfinite(t)):
        raise ValidationError("time column contains NaN or infinite values")
    if t.size < 2:
        raise ValidationError("two-column CSV needs at least 2 rows to infer rate")
    span = t[-1] - t[0]
    if span <= 0:
        raise ValidationError("timestamps must be strictly increasing")
    fs = (t.size - 1) / span
    ideal = t[0] + np.arange(t.size) / fs
    if np.max(np.abs(t - ideal)) > 0.5 / fs:
        raise ValidationError("timestamps are not uniform within half a sample period")
    if t[0] < 0:
        raise ValidationError("start time must be non-negative")
    return SampledSignal(values, fs, t0_us=int(round(t[0] * 1e6)))


def _looks_numeric(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _load_raw(path, sample_rate_hz):
    if sample_rate_hz is None:
        raise ConfigError("sample_rate_hz required for raw_f32_le input")
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) % 4 != 0:
        raise ValidationError(
            f"raw_f32_le byte length {len(blob)} is not a multiple of 4"
        )
    values = np.frombuffer(blob, dtype="<f4").astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise ValidationError("signal contains NaN or infinite values")
    return SampledSignal(values, sample_rate_hz)


def load_signal(path, format: str = "csv", sample_rate_hz: float | None = None) -> SampledSignal:
    """Load a voltage waveform from disk.

    CSV rows are ``time_s,value_v`` or a single ``value_v`` column (optional
    header). With a time column the sample rate is inferred and timestamps
    must be uniform within half a sample period. ``raw_f32_le`` is headerless
    little-endian float32 volts; the rate is supplied out of band.
    """
    if format == "csv":
        return _load_csv(path, sample_rate_hz)
    if format == "raw_f32_le":
        return _load_raw(path, sample_rate_hz)
    raise ConfigError(f"unknown signal format {format!r}")


def save_signal_csv(path, signal: SampledSignal, include_time: bool = True) -> None:
    """Write a signal as CSV (``time_s,value_v`` or bare values)."""
    with open(path, "w", encoding="utf-8") as fh:
        if include_time:
            fh.write("time_s,value_v\n")
            t0 = signal.t0_us * 1e-6
            fs = signal.sample_rate_hz
            for i, v in enumerate(signal.samples):
                fh.write(f"{t0 + i / fs:.9f},{float(v)!r}\n")
        else:
            fh.write("value_v\n")
            for v in signal.samples:
                fh.write(f"{float(v)!r}\n")


def bandpass_front_end(signal: SampledSignal, config: FrontEndConfig | None = None) -> SampledSignal:
    """Apply the first-order band-pass front-end model.

    A first-order high-pass at f_low cascaded with a first-order low-pass at
    f_high (bilinear transform with prewarped corners, so the -3 dB points
    land exactly on the configured corners), scaled so the magnitude at the
    geometric-mean frequency equals the configured mid-band gain.
    """
    config = config if config is not None else FrontEndConfig()
    fs = signal.sample_rate_hz
    if fs <= 2 * config.f_high_hz:
        raise ConfigError(
            f"sample rate {fs} Hz must exceed twice the high corner "
            f"({config.f_high_hz} Hz)"
        )
    b_hp, a_hp = butter(1, config.f_low_hz, btype="highpass", fs=fs)
    b_lp, a_lp = butter(1, config.f_high_hz, btype="lowpass", fs=fs)
    f_mid = math.sqrt(config.f_low_hz * config.f_high_hz)
    _, h_hp = freqz(b_hp, a_hp, worN=[f_mid], fs=fs)
    _, h_lp = freqz(b_lp, a_lp, worN=[f_mid], fs=fs)
    gain_lin = 10.0 ** (config.midband_gain_db / 20.0)
    scale = gain_lin / abs(h_hp[0] * h_lp[0])
    y = lfilter(b_lp, a_lp, lfilter(b_hp, a_hp, signal.samples)) * scale
    return SampledSignal(y, fs, signal.t0_us)


def awgn_sigma(signal: SampledSignal, level_multiplier: float) -> float:
    """Noise scale used by :func:`inject_awgn`: multiplier x median(|x|)."""
    if level_multiplier < 0:
        raise ValidationError("level_multiplier must be non-negative")
    return float(level_multiplier * np.median(np.abs(signal.samples)))


def inject_awgn(signal: SampledSignal, level_multiplier: float, rng_seed: int) -> SampledSignal:
    """Add zero-mean white Gaussian noise scaled to the signal's median |x|.

    sigma = level_multiplier * median(|samples|); deterministic for a fixed
    seed. A zero multiplier returns the signal unchanged; a degenerate
    signal (median |x| = 0) warns and returns the signal unchanged.
    """
    sigma = awgn_sigma(signal, level_multiplier)
    if level_multiplier == 0:
        return SampledSignal(signal.samples.copy(), signal.sample_rate_hz, signal.t0_us)
    if sigma == 0.0:
        warnings.warn(
            "median |x| is zero; no noise injected",
            DegenerateSignalWarning,
            stacklevel=2,
        )
        return SampledSignal(signal.samples.copy(), signal.sample_rate_hz, signal.t0_us)
    rng = np.random.default_rng(rng_seed)
    noisy = signal.samples + rng.normal(0.0, sigma, signal.samples.size)
    return SampledSignal(noisy, signal.sample_rate_hz, signal.t0_us)


def estimate_noise_sigma_mad(signal: SampledSignal) -> float:
    """Robust noise sigma: median(|x - median(x)|) / 0.6745."""
    x = signal.samples
    if x.size < 2:
        raise ValidationError("need at least 2 samples")
    med = np.median(x)
    return float(np.median(np.abs(x - med)) / MAD_GAUSSIAN_SCALE)


def rms(signal: SampledSignal) -> float:
    """Root-mean-square amplitude in volts."""
    return float(np.sqrt(np.mean(np.square(signal.samples))))


def estimate_snr_db(signal: SampledSignal, noise_sigma: float) -> float:
    """SNR convention used throughout: 20*log10(rms(signal) / noise_sigma)."""
    if noise_sigma <= 0:
        raise ValidationError("noise_sigma must be positive")
    r = rms(signal)
    if r == 0.0:
        return -math.inf
    return 20.0 * math.log10(r / noise_sigma)
