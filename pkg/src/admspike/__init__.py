"""admspike: asynchronous delta-modulation spike encoding toolkit.

Simulates delta-modulator spike encoders (behavioral and first-order
circuit models) alongside threshold-crossing references, scores spike
trains with tolerance-windowed matching, transports events over a bit-exact
AER format with a FIFO arbiter model, and decodes binned spike features
back into kinematics with a ridge readout.
"""

from .aer import (
    AerEvent,
    AerStream,
    arbiter_simulate,
    deserialize,
    merge_channels,
    read_aer,
    serialize,
    stream_to_trains,
    write_aer,
)
from .decoding import (
    BinnedCounts,
    KinematicsSeries,
    LinearReadout,
    bin_spikes,
    evaluate_decoding,
    fit_readout,
    leaky_features,
    resample_kinematics,
    select_ridge_lambda,
)
from .encoders import (
    AdmConfig,
    AdmPhase,
    AdmState,
    Polarity,
    SpikeTrain,
    SweepEntry,
    ThresholdConfig,
    adm_circuit_encode,
    adm_encode,
    sweep_snr,
    threshold_encode,
)
from .errors import (
    ConfigError,
    DegenerateSignalWarning,
    FormatError,
    NumericalError,
    ParseError,
    ValidationError,
)
from .metrics import (
    EnergyModel,
    MatchReport,
    energy_report,
    match_spike_trains,
    pearson,
    spike_rate,
)
from .signals import (
    FrontEndConfig,
    SampledSignal,
    awgn_sigma,
    bandpass_front_end,
    estimate_noise_sigma_mad,
    estimate_snr_db,
    inject_awgn,
    load_signal,
    rms,
    save_signal_csv,
)

__version__ = "0.1.0"
