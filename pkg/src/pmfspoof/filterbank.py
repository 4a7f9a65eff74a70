"""Gammatone, inverse-gammatone and mel filter banks.

Filtering happens directly on time-domain samples: each channel of a
bank is a causal LTI filter and produces an output as long as its input.

Gammatone channels are the classic cascade of four second-order
recursive sections (the all-pole digital gammatone approximation), with
center frequencies equally spaced on the Glasberg-Moore ERB-rate scale
and bandwidth 1.019 * ERB(fc). The inverse bank mirrors the gammatone
bank along the frequency axis by spectral inversion: modulate the input
by (-1)^n, run the ordinary gammatone cascade, and modulate the output
back. Mel channels are linear-phase FIR band-passes obtained by
frequency sampling of triangular magnitude specs spaced on the mel
scale.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.signal

from .errors import DataError

VALID_KINDS = ("gammatone", "inverse_gammatone", "mel")

MEL_FIR_TAPS = 511

GAMMATONE_BANDWIDTH_FACTOR = 1.019


def erb_rate(f_hz):
    """Glasberg-Moore ERB-rate: 21.4 * log10(4.37 * f / 1000 + 1)."""
    return 21.4 * np.log10(4.37 * np.asarray(f_hz, dtype=np.float64) / 1000.0 + 1.0)


def erb_rate_inverse(rate):
    return (10.0 ** (np.asarray(rate, dtype=np.float64) / 21.4) - 1.0) * (1000.0 / 4.37)


def erb_bandwidth(f_hz):
    """Equivalent rectangular bandwidth at center frequency f (Hz)."""
    return 24.7 * (4.37 * np.asarray(f_hz, dtype=np.float64) / 1000.0 + 1.0)


def mel_scale(f_hz):
    return 2595.0 * np.log10(1.0 + np.asarray(f_hz, dtype=np.float64) / 700.0)


def mel_inverse(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@dataclass(frozen=True)
class BankSpec:
    """Design parameters of a filter bank (realization-independent)."""

    kind: str
    n_channels: int
    f_low_hz: float
    f_high_hz: float

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_channels": self.n_channels,
            "f_low_hz": self.f_low_hz,
            "f_high_hz": self.f_high_hz,
        }

    @staticmethod
    def from_dict(d: dict) -> "BankSpec":
        return BankSpec(
            kind=str(d["kind"]),
            n_channels=int(d["n_channels"]),
            f_low_hz=float(d["f_low_hz"]),
            f_high_hz=float(d["f_high_hz"]),
        )


@dataclass(frozen=True)
class ChannelFilter:
    """One band-pass channel: either a biquad cascade or an FIR kernel."""

    index: int  # 1-based, channel 1 is the bank's first band
    center_freq_hz: float  # effective center (mirrored for the inverse bank)
    sos: Optional[np.ndarray] = None  # (n_sections, 6) scipy convention
    fir: Optional[np.ndarray] = None


@dataclass(frozen=True)
class FilterBank:
    kind: str
    channels: tuple
    f_low_hz: float
    f_high_hz: float
    sample_rate_hz: int

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def center_frequencies(self) -> np.ndarray:
        return np.array([ch.center_freq_hz for ch in self.channels])

    @property
    def spec(self) -> BankSpec:
        return BankSpec(self.kind, self.n_channels, self.f_low_hz, self.f_high_hz)


@dataclass
class MultichannelWaveform:
    channels: np.ndarray  # (n_channels, n_samples)
    file_id: str


def _validate_band(n_channels: int, f_low: float, f_high: float, fs: int) -> None:
    if n_channels < 1:
        raise ValueError(f"need at least one channel, got {n_channels}")
    if not (0.0 <= f_low < f_high <= fs / 2.0):
        raise ValueError(
            f"invalid band edges [{f_low}, {f_high}] Hz for sample rate {fs} Hz "
            f"(need 0 <= f_low < f_high <= {fs / 2.0})"
        )


def gammatone_center_frequencies(n_channels: int, f_low: float, f_high: float) -> np.ndarray:
    """Centers uniform in ERB-rate with half-step margins from the edges.

    The margins keep f_low = 0 from producing a degenerate DC-centered
    channel.
    """
    e_lo = float(erb_rate(f_low))
    e_hi = float(erb_rate(f_high))
    step = (e_hi - e_lo) / n_channels
    rates = e_lo + (np.arange(n_channels) + 0.5) * step
    return erb_rate_inverse(rates)


def _gammatone_sos(fc: float, fs: int) -> np.ndarray:
    """Four second-order sections for one gammatone channel (unity peak gain)."""
    T = 1.0 / fs
    B = GAMMATONE_BANDWIDTH_FACTOR * 2.0 * np.pi * float(erb_bandwidth(fc))
    arg = 2.0 * fc * np.pi * T
    cos_a = np.cos(arg)
    sin_a = np.sin(arg)
    exp_bt = np.exp(B * T)

    a1 = -2.0 * cos_a / exp_bt  # shared denominator z^-1 coefficient
    a2 = np.exp(-2.0 * B * T)

    r_plus = np.sqrt(3.0 + 2.0 ** 1.5)
    r_minus = np.sqrt(3.0 - 2.0 ** 1.5)
    b11 = -(2.0 * T * cos_a / exp_bt + 2.0 * r_plus * T * sin_a / exp_bt) / 2.0
    b12 = -(2.0 * T * cos_a / exp_bt - 2.0 * r_plus * T * sin_a / exp_bt) / 2.0
    b13 = -(2.0 * T * cos_a / exp_bt + 2.0 * r_minus * T * sin_a / exp_bt) / 2.0
    b14 = -(2.0 * T * cos_a / exp_bt - 2.0 * r_minus * T * sin_a / exp_bt) / 2.0

    z = np.exp(2j * arg)
    w = 2.0 * T * np.exp(-B * T + 1j * arg)
    gain = np.abs(
        (-2.0 * z * T + w * (cos_a - r_minus * sin_a))
        * (-2.0 * z * T + w * (cos_a + r_minus * sin_a))
        * (-2.0 * z * T + w * (cos_a - r_plus * sin_a))
        * (-2.0 * z * T + w * (cos_a + r_plus * sin_a))
        / (-2.0 / np.exp(2.0 * B * T) - 2.0 * z + 2.0 * (1.0 + z) / exp_bt) ** 4
    )

    sos = np.array(
        [
            [T / gain, b11 / gain, 0.0, 1.0, a1, a2],
            [T, b12, 0.0, 1.0, a1, a2],
            [T, b13, 0.0, 1.0, a1, a2],
            [T, b14, 0.0, 1.0, a1, a2],
        ]
    )
    # poles sit at exp(-B*T) which is strictly inside the unit circle
    if not np.all(np.abs(np.roots([1.0, a1, a2])) < 1.0):
        raise ValueError(f"unstable gammatone section at fc={fc} Hz")
    return sos


def design_gammatone(
    n_channels: int, f_low_hz: float, f_high_hz: float, sample_rate_hz: int
) -> FilterBank:
    _validate_band(n_channels, f_low_hz, f_high_hz, sample_rate_hz)
    centers = gammatone_center_frequencies(n_channels, f_low_hz, f_high_hz)
    channels = tuple(
        ChannelFilter(index=i + 1, center_freq_hz=float(fc), sos=_gammatone_sos(float(fc), sample_rate_hz))
        for i, fc in enumerate(centers)
    )
    return FilterBank("gammatone", channels, f_low_hz, f_high_hz, sample_rate_hz)


def design_inverse_gammatone(
    n_channels: int, f_low_hz: float, f_high_hz: float, sample_rate_hz: int
) -> FilterBank:
    """Frequency-mirrored gammatone bank.

    Channel i reuses gammatone channel i's recursion and is applied under
    (-1)^n modulation, so its effective passband is the mirror
    f -> fs/2 - f of the gammatone passband. Indexing is preserved:
    channel 1 of the inverse bank is the mirror of gammatone channel 1.
    """
    base = design_gammatone(n_channels, f_low_hz, f_high_hz, sample_rate_hz)
    nyq = sample_rate_hz / 2.0
    channels = tuple(
        ChannelFilter(index=ch.index, center_freq_hz=nyq - ch.center_freq_hz, sos=ch.sos)
        for ch in base.channels
    )
    return FilterBank("inverse_gammatone", channels, f_low_hz, f_high_hz, sample_rate_hz)


def _mel_fir(f_lo: float, f_center: float, f_hi: float, fs: int, numtaps: int) -> np.ndarray:
    nyq = fs / 2.0
    freqs = [0.0]
    gains = [0.0]
    if f_lo > 1e-9:
        freqs.append(f_lo)
        gains.append(0.0)
    freqs.append(f_center)
    gains.append(1.0)
    if f_hi < nyq - 1e-9:
        freqs.append(f_hi)
        gains.append(0.0)
    freqs.append(nyq)
    gains.append(0.0)
    return scipy.signal.firwin2(numtaps, freqs, gains, fs=fs)


def design_mel(
    n_channels: int, f_low_hz: float, f_high_hz: float, sample_rate_hz: int
) -> FilterBank:
    """Triangular band-passes with centers equally spaced on the mel scale,
    realized as linear-phase FIR kernels by frequency sampling."""
    _validate_band(n_channels, f_low_hz, f_high_hz, sample_rate_hz)
    grid = mel_inverse(np.linspace(mel_scale(f_low_hz), mel_scale(f_high_hz), n_channels + 2))
    channels = []
    for i in range(1, n_channels + 1):
        fir = _mel_fir(float(grid[i - 1]), float(grid[i]), float(grid[i + 1]), sample_rate_hz, MEL_FIR_TAPS)
        channels.append(ChannelFilter(index=i, center_freq_hz=float(grid[i]), fir=fir))
    return FilterBank("mel", tuple(channels), f_low_hz, f_high_hz, sample_rate_hz)


def design_bank(spec: BankSpec, sample_rate_hz: int) -> FilterBank:
    if spec.kind == "gammatone":
        return design_gammatone(spec.n_channels, spec.f_low_hz, spec.f_high_hz, sample_rate_hz)
    if spec.kind == "inverse_gammatone":
        return design_inverse_gammatone(spec.n_channels, spec.f_low_hz, spec.f_high_hz, sample_rate_hz)
    if spec.kind == "mel":
        return design_mel(spec.n_channels, spec.f_low_hz, spec.f_high_hz, sample_rate_hz)
    raise ValueError(f"unknown filter-bank kind: {spec.kind!r}")


def _alternating(n: int) -> np.ndarray:
    mod = np.ones(n)
    mod[1::2] = -1.0
    return mod


def _filter_one(bank: FilterBank, ch: ChannelFilter, x: np.ndarray, x_mod=None, mod=None) -> np.ndarray:
    if bank.kind == "inverse_gammatone":
        return mod * scipy.signal.sosfilt(ch.sos, x_mod)
    if ch.sos is not None:
        return scipy.signal.sosfilt(ch.sos, x)
    return scipy.signal.fftconvolve(x, ch.fir)[: x.size]


def apply_channels(bank: FilterBank, waveform, indices: Sequence[int]) -> np.ndarray:
    """Filter a waveform through a subset of channels (1-based indices).

    Returns an array of shape (len(indices), n_samples).
    """
    if waveform.sample_rate_hz != bank.sample_rate_hz:
        raise DataError(
            f"sample-rate mismatch: waveform {waveform.sample_rate_hz} Hz, "
            f"bank designed for {bank.sample_rate_hz} Hz"
        )
    x = np.asarray(waveform.samples, dtype=np.float64)
    for idx in indices:
        if not 1 <= idx <= bank.n_channels:
            raise ValueError(f"channel index {idx} out of range 1-{bank.n_channels}")
    x_mod = mod = None
    if bank.kind == "inverse_gammatone":
        mod = _alternating(x.size)
        x_mod = x * mod
    out = np.empty((len(indices), x.size))
    for row, idx in enumerate(indices):
        out[row] = _filter_one(bank, bank.channels[idx - 1], x, x_mod, mod)
    return out


def apply(bank: FilterBank, waveform) -> MultichannelWaveform:
    """Filter a waveform through every channel of the bank."""
    channels = apply_channels(bank, waveform, range(1, bank.n_channels + 1))
    return MultichannelWaveform(channels=channels, file_id=waveform.file_id)


def impulse_response(bank: FilterBank, channel_index: int, n_samples: int) -> np.ndarray:
    """Truncated impulse response of one channel, inversion modulation included."""
    from .audio_io import Waveform

    x = np.zeros(n_samples)
    x[0] = 1.0
    w = Waveform(samples=x, sample_rate_hz=bank.sample_rate_hz, file_id="impulse")
    return apply_channels(bank, w, [channel_index])[0]
