"""Synthetic surrogate signals: action-potential recordings and
kinematics-modulated channel populations for the decoding harness."""

from __future__ import annotations

import math

import numpy as np

from .decoding import KinematicsSeries
from .errors import ValidationError
from .signals import SampledSignal


def biphasic_pulse(sample_rate_hz: float, duration_s: float = 1e-3, peak_v: float = 0.220) -> np.ndarray:
    """One-cycle sine pulse: positive lobe then negative lobe, +-peak_v."""
    n = int(round(duration_s * sample_rate_hz))
    if n < 2:
        raise ValidationError("pulse too short for the sample rate")
    t = np.arange(n) / sample_rate_hz
    return peak_v * np.sin(2 * math.pi * t / duration_s)


def poisson_arrival_times(
    rng: np.random.Generator,
    duration_s: float,
    rate_hz: float,
    min_gap_s: float,
) -> np.ndarray:
    """Poisson arrivals thinned to a minimum gap, in seconds."""
    if rate_hz <= 0:
        return np.array([])
    n_expect = int(duration_s * rate_hz * 2) + 20
    gaps = rng.exponential(1.0 / rate_hz, size=n_expect)
    t = np.cumsum(gaps)
    t = t[t < duration_s]
    kept = []
    last = -math.inf
    for ti in t.tolist():
        if ti - last >= min_gap_s:
            kept.append(ti)
            last = ti
    return np.asarray(kept)


def _add_pulses(samples: np.ndarray, pulse: np.ndarray, start_indices: np.ndarray) -> None:
    n = samples.size
    m = pulse.size
    for i in start_indices.tolist():
        end = min(n, i + m)
        samples[i:end] += pulse[: end - i]


def action_potential_signal(
    sample_rate_hz: float = 30_000.0,
    duration_s: float = 10.0,
    rate_hz: float = 40.0,
    peak_v: float = 0.220,
    pulse_duration_s: float = 1e-3,
    background_sigma_v: float = 0.010,
    seed: int = 0,
    min_gap_s: float = 3e-3,
) -> tuple[SampledSignal, np.ndarray]:
    """Biphasic action-potential train over white background noise.

    Returns the signal and the ground-truth pulse start times in
    microseconds.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate_hz))
    samples = rng.normal(0.0, background_sigma_v, n) if background_sigma_v > 0 else np.zeros(n)
    pulse = biphasic_pulse(sample_rate_hz, pulse_duration_s, peak_v)
    starts_s = poisson_arrival_times(rng, duration_s - pulse_duration_s, rate_hz, min_gap_s)
    start_idx = np.round(starts_s * sample_rate_hz).astype(np.int64)
    _add_pulses(samples, pulse, start_idx)
    truth_us = np.round(start_idx * 1e6 / sample_rate_hz).astype(np.int64)
    return SampledSignal(samples, sample_rate_hz), truth_us


def sinusoid_kinematics(
    duration_s: float,
    step_s: float = 0.01,
    fx_hz: float = 0.25,
    fy_hz: float = 0.15,
) -> KinematicsSeries:
    """Smooth 2-D velocity targets: vx = sin(2 pi fx t), vy = cos(2 pi fy t)."""
    t = np.arange(0.0, duration_s, step_s)
    return KinematicsSeries(
        np.round(t * 1e6).astype(np.int64),
        np.sin(2 * math.pi * fx_hz * t),
        np.cos(2 * math.pi * fy_hz * t),
    )


def cosine_tuned_population(
    kinematics: KinematicsSeries,
    n_channels: int = 12,
    sample_rate_hz: float = 30_000.0,
    base_rate_hz: float = 80.0,
    modulation_depth: float = 0.8,
    peak_v: float = 0.220,
    pulse_duration_s: float = 1e-3,
    background_sigma_v: float = 0.005,
    seed: int = 0,
) -> list[SampledSignal]:
    """Per-channel signals whose pulse rate is cosine-tuned to the velocity.

    Channel c fires action potentials as an inhomogeneous Poisson process
    with rate base_rate * (1 + depth * (cos(theta_c) vx + sin(theta_c) vy)),
    theta_c evenly spaced over the circle. vx/vy are assumed in [-1, 1].
    """
    if not 0 <= modulation_depth <= 1:
        raise ValidationError("modulation_depth must be in [0, 1]")
    rng = np.random.default_rng(seed)
    duration_s = kinematics.t_us[-1] * 1e-6
    n = int(round(duration_s * sample_rate_hz))
    t_s = np.arange(n) / sample_rate_hz
    vx = np.interp(t_s, kinematics.t_us * 1e-6, kinematics.vx)
    vy = np.interp(t_s, kinematics.t_us * 1e-6, kinematics.vy)
    pulse = biphasic_pulse(sample_rate_hz, pulse_duration_s, peak_v)
    min_gap = int(round(pulse_duration_s * sample_rate_hz)) + 1

    signals = []
    for c in range(n_channels):
        theta = 2 * math.pi * c / n_channels
        rate = base_rate_hz * (
            1.0 + modulation_depth * (math.cos(theta) * vx + math.sin(theta) * vy)
        )
        np.clip(rate, 0.0, None, out=rate)
        fires = rng.random(n) < rate / sample_rate_hz
        idx = np.flatnonzero(fires)
        if idx.size:
            keep = [int(idx[0])]
            for i in idx[1:].tolist():
                if i - keep[-1] >= min_gap:
                    keep.append(i)
            idx = np.asarray(keep, dtype=np.int64)
        samples = (
            rng.normal(0.0, background_sigma_v, n)
            if background_sigma_v > 0
            else np.zeros(n)
        )
        _add_pulses(samples, pulse, idx)
        signals.append(SampledSignal(samples, sample_rate_hz))
    return signals
