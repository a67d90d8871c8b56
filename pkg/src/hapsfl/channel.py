"""Per-round channel realisation and link rates.

Channel power gain of client k in round n::

    h_k = g_k * h0 * ((d_k + dd) / d0) ** -2

with one Gaussian HAPS displacement ``dd ~ N(0, sigma^2)`` per round shared by
every client and independent unit-mean Rician power gains ``g_k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import STREAM_CHANNEL, Scenario

MIN_EFFECTIVE_DISTANCE_KM = 1.0


@dataclass(frozen=True)
class ChannelState:
    round_index: int
    displacement_km: float
    fading_gains: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        self.fading_gains.setflags(write=False)
        self.gains.setflags(write=False)


def rician_power_gain(k_factor: float, size, rng: np.random.Generator) -> np.ndarray:
    """Unit-mean Rician power gains ``|h|^2`` with linear K-factor ``k_factor``."""
    los = np.sqrt(k_factor / (k_factor + 1.0))
    scatter = np.sqrt(1.0 / (2.0 * (k_factor + 1.0)))
    re = los + scatter * rng.standard_normal(size)
    im = scatter * rng.standard_normal(size)
    return re * re + im * im


def path_gain(distance_km, reference_gain, reference_distance_km=1.0, exponent=2.0):
    d = np.maximum(distance_km, MIN_EFFECTIVE_DISTANCE_KM)
    return reference_gain * (d / reference_distance_km) ** (-exponent)


def channel_rng(s: Scenario, round_index: int) -> np.random.Generator:
    return s.rng(STREAM_CHANNEL, round_index)


def realize_channel(
    s: Scenario,
    round_index: int = 0,
    rng: np.random.Generator | None = None,
    *,
    antithetic: bool = False,
) -> ChannelState:
    """Draw the block-fading state of one communication round.

    The displacement's standard normal is drawn before the fading, so two
    scenarios differing only in ``displacement_variance_km2`` see common
    random numbers. ``antithetic=True`` negates that normal (variance
    reduction for paired sweeps); the marginal law is unchanged.
    """
    p = s.params
    rng = channel_rng(s, round_index) if rng is None else rng
    z = rng.standard_normal()
    if antithetic:
        z = -z
    dd = float(np.sqrt(p.displacement_variance_km2) * z)
    g = rician_power_gain(p.rician_k_linear, s.size, rng)
    h = g * path_gain(s.distances_km + dd, p.reference_gain_linear, p.reference_distance_km)
    return ChannelState(round_index, dd, g, h)


def fixed_channel(s: Scenario, fading=1.0, displacement_km=0.0, round_index=0) -> ChannelState:
    """Deterministic state with prescribed fading, for tests and oracles."""
    p = s.params
    g = np.broadcast_to(np.asarray(fading, dtype=float), (s.size,)).copy()
    h = g * path_gain(s.distances_km + displacement_km, p.reference_gain_linear, p.reference_distance_km)
    return ChannelState(round_index, float(displacement_km), g, h)


def uplink_rate(bandwidth_hz, power_w, gain, noise_psd):
    """FDMA uplink rate ``b log2(1 + h p / (b N0))``; zero bandwidth gives zero rate."""
    b = np.asarray(bandwidth_hz, dtype=float)
    p = np.asarray(power_w, dtype=float)
    h = np.asarray(gain, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = np.where(b > 0, h * p / np.where(b > 0, b, 1.0) / noise_psd, 0.0)
        rate = np.where(b > 0, b * np.log1p(snr) / np.log(2.0), 0.0)
    if rate.ndim == 0:
        return float(rate)
    return rate


def downlink_rate(total_bandwidth_hz, bc_power_w, selected_gains, noise_psd) -> float:
    """Broadcast rate limited by the weakest selected client."""
    g = np.atleast_1d(np.asarray(selected_gains, dtype=float))
    if g.size == 0:
        raise ValueError("downlink rate is undefined with no selected clients")
    return float(uplink_rate(total_bandwidth_hz, bc_power_w, g.min(), noise_psd))


def terrestrial_link_gain(distance_km, exponent=4.0, rng=None, *, k_factor=None,
                          reference_gain=10.0 ** (-12.81), reference_distance_km=1.0, fading=None):
    """Ground link gain ``g h0 (d/d0)^-exponent``.

    ``fading`` fixes ``g``; otherwise it is drawn from ``rng`` with Rician
    K-factor ``k_factor`` (linear, default 10 dB).
    """
    d = np.asarray(distance_km, dtype=float)
    if fading is None:
        if rng is None:
            raise ValueError("either fading or rng is required")
        k = 10.0 if k_factor is None else k_factor
        fading = rician_power_gain(k, d.shape, rng)
    gain = np.asarray(fading) * path_gain(d, reference_gain, reference_distance_km, exponent)
    return float(gain) if np.ndim(gain) == 0 else gain
