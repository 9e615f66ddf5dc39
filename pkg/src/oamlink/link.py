"""Two-stream 16-QAM link with time-division pilots and ZF channel estimation.

A frame is [P1 | P2 | M]: transmitter 1 sends its pilot while transmitter 2
is silent, then the roles swap, then both send payload at once.  Noise at
receiver n has variance sum_m |h_nm|^2 / snr, so ``snr`` is the average
received signal-to-noise ratio per receiver with unit-energy symbols.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List

import numpy as np
from scipy.special import erfc

from .channel import ChannelMatrix, correlation_coefficient, condition_number
from .errors import (
    DimensionMismatch,
    LengthMismatch,
    MisalignedBits,
    ModelError,
    PayloadOverflow,
    SingularEstimate,
    ZeroPilotEnergy,
)

FEC_THRESHOLD = 3.8e-3
ZF_CONDITION_LIMIT = 1e12

# Gray code per axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
_LEVELS = np.array([-3.0, -1.0, 3.0, 1.0])  # indexed by the 2-bit value
_SCALE = 1.0 / math.sqrt(10.0)
_LEVEL_TO_BITS = {-3: (0, 0), -1: (0, 1), 1: (1, 1), 3: (1, 0)}


class Equalizer(str, Enum):
    RAW = "Raw"
    ZERO_FORCING = "ZeroForcing"


@dataclass(frozen=True)
class FrameSchedule:
    pilot_len: int = 64
    payload_len: int = 1024

    def __post_init__(self):
        if int(self.pilot_len) != self.pilot_len or self.pilot_len < 1:
            raise ModelError("pilot_len must be a positive integer")
        if int(self.payload_len) != self.payload_len or self.payload_len < 1:
            raise ModelError("payload_len must be a positive integer")

    @property
    def frame_len(self):
        return 2 * self.pilot_len + self.payload_len

    @property
    def p1(self):
        return slice(0, self.pilot_len)

    @property
    def p2(self):
        return slice(self.pilot_len, 2 * self.pilot_len)

    @property
    def message(self):
        return slice(2 * self.pilot_len, self.frame_len)


def qam16_constellation():
    """The 16 points in nibble order (b0 b1 on I, b2 b3 on Q)."""
    nibbles = np.arange(16)
    return (_LEVELS[nibbles >> 2] + 1j * _LEVELS[nibbles & 3]) * _SCALE


def qam16_modulate(bits):
    """Gray-mapped unit-energy 16-QAM."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % 4:
        raise MisalignedBits(f"{bits.size} bits is not a multiple of 4")
    if np.any((bits != 0) & (bits != 1)):
        raise ModelError("bits must be 0 or 1")
    b = bits.reshape(-1, 4)
    i_idx = 2 * b[:, 0] + b[:, 1]
    q_idx = 2 * b[:, 2] + b[:, 3]
    return (_LEVELS[i_idx] + 1j * _LEVELS[q_idx]) * _SCALE


def _slice_axis(v):
    # nearest odd level in {-3, -1, 1, 3}
    return np.clip(2 * np.floor(v / 2.0) + 1, -3, 3).astype(np.int64)


def qam16_demodulate(symbols):
    """Minimum-distance hard decision back to bits."""
    s = np.asarray(symbols, dtype=complex).ravel() / _SCALE
    out = np.empty((s.size, 4), dtype=np.int8)
    for col, axis in ((0, s.real), (2, s.imag)):
        lv = _slice_axis(axis)
        out[:, col] = (lv > 0)
        out[:, col + 1] = (np.abs(lv) == 1)
    return out.ravel()


def ber(tx_bits, rx_bits):
    a, b = np.asarray(tx_bits).ravel(), np.asarray(rx_bits).ravel()
    if a.size != b.size:
        raise LengthMismatch(f"bit streams differ in length ({a.size} vs {b.size})")
    if a.size == 0:
        raise LengthMismatch("empty bit streams")
    return float(np.count_nonzero(a != b)) / a.size


def qfunc(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def qam16_ber_theory(snr):
    """Exact Gray 16-QAM bit error rate at symbol SNR Es/N0 (linear)."""
    a = np.sqrt(np.asarray(snr, dtype=float) / 5.0)
    return 0.75 * qfunc(a) + 0.5 * qfunc(3 * a) - 0.25 * qfunc(5 * a)


def pilot_symbols(length, pilot_seed, stream):
    """Deterministic 16-QAM pilot for one transmitter.

    Blocks of 16 walk the whole constellation in a seeded order, so the
    pilot energy is exact whenever the length is a multiple of 16.
    """
    rng = np.random.default_rng([int(pilot_seed), int(stream)])
    points = qam16_constellation()
    reps = -(-length // 16)
    order = np.concatenate([rng.permutation(16) for _ in range(reps)])[:length]
    return points[order]


def build_frame(m1, m2, sched, pilot_seed):
    """Return the two transmit sequences of one frame."""
    s1, s2 = qam16_modulate(m1), qam16_modulate(m2)
    for s in (s1, s2):
        if s.size > sched.payload_len:
            raise PayloadOverflow(f"{s.size} symbols exceed payload of {sched.payload_len}")
    tx = np.zeros((2, sched.frame_len), dtype=complex)
    tx[0, sched.p1] = pilot_symbols(sched.pilot_len, pilot_seed, 1)
    tx[1, sched.p2] = pilot_symbols(sched.pilot_len, pilot_seed, 2)
    start = sched.message.start
    tx[0, start:start + s1.size] = s1
    tx[1, start:start + s2.size] = s2
    return tx[0], tx[1]


def _noise(rng, shape, variance):
    return np.sqrt(variance / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def apply_channel(tx1, tx2, H, snr_db, noise_seed):
    """Pass both streams through a 2x2 channel and add receiver noise.

    ``noise_seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    ``snr_db=inf`` disables noise.
    """
    h = H.entries if isinstance(H, ChannelMatrix) else np.asarray(H, dtype=complex)
    x = np.vstack([np.asarray(tx1, dtype=complex), np.asarray(tx2, dtype=complex)]) \
        if len(tx1) == len(tx2) else None
    if x is None:
        raise DimensionMismatch("transmit sequences differ in length")
    if h.shape != (2, 2):
        raise DimensionMismatch(f"expected a 2x2 channel, got {h.shape}")
    y = h @ x
    if math.isinf(snr_db) and snr_db > 0:
        return y[0], y[1]
    rng = noise_seed if isinstance(noise_seed, np.random.Generator) else np.random.default_rng(noise_seed)
    variance = np.sum(np.abs(h) ** 2, axis=1) / 10.0 ** (snr_db / 10.0)
    y = y + _noise(rng, y.shape, variance[:, None])
    return y[0], y[1]


def zf_channel_estimate(rx1, rx2, pilot1, pilot2, sched):
    """Least-squares 2x2 estimate from the two time-disjoint pilot blocks."""
    y = np.vstack([rx1, rx2])
    est = np.empty((2, 2), dtype=complex)
    for m, (p, slot) in enumerate(((pilot1, sched.p1), (pilot2, sched.p2))):
        p = np.asarray(p, dtype=complex)
        energy = float(np.sum(np.abs(p) ** 2))
        if energy == 0:
            raise ZeroPilotEnergy(f"pilot {m + 1} has zero energy")
        est[:, m] = y[:, slot] @ p.conj() / energy
    return est


def equalize(y1, y2, h_est, mode=Equalizer.RAW):
    """Raw: divide each receiver by its own direct-path gain. ZeroForcing: invert the estimate."""
    mode = Equalizer(mode)
    y = np.vstack([y1, y2])
    h_est = np.asarray(h_est, dtype=complex)
    if mode is Equalizer.RAW:
        diag = np.diag(h_est)
        if np.any(diag == 0):
            raise SingularEstimate("direct-path estimate is zero")
        out = y / diag[:, None]
    else:
        if np.linalg.cond(h_est) > ZF_CONDITION_LIMIT:
            raise SingularEstimate("channel estimate too ill-conditioned to invert")
        out = np.linalg.solve(h_est, y)
    return out[0], out[1]


@dataclass(frozen=True, eq=False)
class LinkResult:
    snr_db: float
    ber_per_stream: List[float]
    rho_measured: float
    h_est: np.ndarray
    trials: int
    cond_number: float
    seed: int


def trial_seed(base_seed, snr_index, trial):
    return np.random.SeedSequence(int(base_seed), spawn_key=(int(snr_index), int(trial)))


def run_link_sim(channel, snr_grid, trials, base_seed, schedule=None, equalizer=Equalizer.RAW):
    """BER of both streams at every SNR point.

    Trial ``i`` at grid index ``s`` draws its payload, pilots and noise from
    ``SeedSequence(base_seed, spawn_key=(s, i))``; results are therefore
    reproducible and independent of evaluation order.  ``rho_measured`` and
    ``h_est`` describe the estimate averaged over trials.
    """
    if int(trials) != trials or trials < 1:
        raise ModelError("trials must be a positive integer")
    sched = schedule or FrameSchedule()
    h = channel.entries if isinstance(channel, ChannelMatrix) else np.asarray(channel, dtype=complex)
    if h.shape != (2, 2):
        raise DimensionMismatch(f"the link needs a 2x2 channel, got {h.shape}")
    results = []
    nbits = 4 * sched.payload_len
    for s_idx, snr_db in enumerate(snr_grid):
        errors = np.zeros(2, dtype=np.int64)
        est_sum = np.zeros((2, 2), dtype=complex)
        for trial in range(int(trials)):
            ss = trial_seed(base_seed, s_idx, trial)
            rng = np.random.default_rng(ss)
            bits = rng.integers(0, 2, size=(2, nbits))
            pilot_seed = int(rng.integers(0, 2 ** 32))
            tx1, tx2 = build_frame(bits[0], bits[1], sched, pilot_seed)
            y1, y2 = apply_channel(tx1, tx2, h, snr_db, rng)
            p1 = tx1[sched.p1]
            p2 = tx2[sched.p2]
            est = zf_channel_estimate(y1, y2, p1, p2, sched)
            est_sum += est
            z1, z2 = equalize(y1[sched.message], y2[sched.message], est, equalizer)
            for k, z in enumerate((z1, z2)):
                errors[k] += np.count_nonzero(qam16_demodulate(z) != bits[k])
        mean_est = est_sum / trials
        rates = [float(e) / (nbits * trials) for e in errors]
        results.append(LinkResult(float(snr_db), rates, correlation_coefficient(mean_est), mean_est,
                                  int(trials), condition_number(mean_est), int(base_seed)))
    return results


def awgn_ber_sim(snr_db, nbits, seed):
    """Monte Carlo BER of 16-QAM over a unit-gain AWGN channel."""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=4 * (nbits // 4))
    s = qam16_modulate(bits)
    y = s + _noise(rng, s.shape, 10.0 ** (-snr_db / 10.0))
    return ber(bits, qam16_demodulate(y))
