"""LoS-MIMO channel matrices and their correlation/capacity analytics.

Entries are complex amplitudes:

    h[n, m] = beta * lambda / (4 pi D) * sqrt(g_m(theta, phi)) * exp(-j k L) * exp(-j l_m (phi - phi_m))

where (theta, phi) locate receiver n in transmitter m's beam coordinates,
phi_m is the main-lobe azimuth of that beam and l_m its helical mode (0 for
a plane-wave horn).  With the default ``"planar"`` wavefront, D is the
centroid distance and L the projection of the link on the array axis, so
the carrier phase is common to every link and the OAM term alone decides
how distinguishable the transmitters are.  ``"spherical"`` uses the exact
link length for both D and L.
"""

import json
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Optional, Tuple

import numpy as np

from . import beam as beam_mod
from ._io import atomic_write_text
from .errors import DimensionMismatch, ModelError, ParseError, RankDeficientWarning, ZeroRow
from .geometry import link_distance

CHANNEL_SCHEMA = "oamlink.channel/1"
SINGULAR_LIMIT = 1e18
NUMERICALLY_SINGULAR = 1e10
WAVEFRONTS = ("planar", "spherical")


class Provenance(str, Enum):
    PLANE_WAVE = "PlaneWave"
    NTCS_OAM = "NtcsOam"
    MEASURED = "Measured"


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    entries: np.ndarray
    frequency: float
    attenuation: float = 1.0
    provenance: Provenance = Provenance.MEASURED
    modes: Tuple[int, ...] = ()

    def __post_init__(self):
        h = np.array(self.entries, dtype=complex)
        if h.ndim != 2 or h.shape[0] < 1 or h.shape[1] < 1:
            raise DimensionMismatch(f"channel must be a non-empty 2-D matrix, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ModelError("channel entries must be finite")
        if not self.attenuation > 0:
            raise ModelError(f"attenuation must be positive, got {self.attenuation}")
        if not self.frequency > 0:
            raise ModelError(f"frequency must be positive, got {self.frequency}")
        h.setflags(write=False)
        object.__setattr__(self, "entries", h)
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        object.__setattr__(self, "modes", tuple(int(v) for v in self.modes))

    @classmethod
    def from_array(cls, entries, frequency=10e9, **kw):
        return cls(np.asarray(entries, dtype=complex), frequency, **kw)

    @property
    def shape(self):
        return self.entries.shape

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def m(self):
        return self.entries.shape[1]


def _entries(h):
    return h.entries if isinstance(h, ChannelMatrix) else np.asarray(h, dtype=complex)


def _build(geom, wave, beta, beams, wavefront):
    if wavefront not in WAVEFRONTS:
        raise ModelError(f"wavefront must be one of {WAVEFRONTS}, got {wavefront!r}")
    if not beta > 0:
        raise ModelError(f"attenuation must be positive, got {beta}")
    if len(beams) != geom.m:
        raise DimensionMismatch(f"{len(beams)} beam specs for {geom.m} transmitters")
    lam, k = wave.wavelength, wave.wavenumber
    axis, dist = geom.los_axis(), geom.centroid_distance()
    h = np.empty((geom.n, geom.m), dtype=complex)
    for m, spec in enumerate(beams):
        local = np.array([geom.local_direction(n, m) for n in range(geom.n)])
        theta, phi = beam_mod.mount_angles(spec, wave, local)
        _, phi_main = beam_mod.main_lobe_direction(spec, wave)
        gain = beam_mod.gain_pattern(spec, wave, theta, phi)
        for n in range(geom.n):
            if wavefront == "planar":
                d_amp = dist
                path = float(axis @ (geom.rx[n].position - geom.tx[m].position))
            else:
                d_amp = path = link_distance(geom, n, m)
            helix = spec.helical_mode * (phi[n] - phi_main)
            h[n, m] = (beta * lam / (4 * math.pi * d_amp) * math.sqrt(gain[n])
                       * np.exp(-1j * (k * path + helix)))
    return h


def plane_wave_channel(geom, wave, beta=1.0, gain_model=None, wavefront="planar"):
    """Channel between plane-wave transmitters sharing one gain pattern.

    Args:
        geom: antenna layout.
        wave: carrier.
        beta: path attenuation factor.
        gain_model: horn ``BeamSpec`` (default 16 dB).
        wavefront: ``"planar"`` or ``"spherical"``.
    """
    spec = gain_model if gain_model is not None else beam_mod.BeamSpec.horn()
    h = _build(geom, wave, beta, [spec] * geom.m, wavefront)
    return ChannelMatrix(h, wave.frequency, beta, Provenance.PLANE_WAVE)


def oam_channel(geom, wave, beta, beams, wavefront="planar"):
    """Channel for one beam spec per transmitter (NTCS-OAM or plane-wave)."""
    beams = list(beams)
    h = _build(geom, wave, beta, beams, wavefront)
    return ChannelMatrix(h, wave.frequency, beta, Provenance.NTCS_OAM,
                         tuple(b.helical_mode for b in beams))


def _row_norms(h):
    norms = np.linalg.norm(h, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ZeroRow(f"receiver row {int(zero[0])} has zero norm")
    return norms


def correlation_matrix(H):
    """Pairwise |<h_i, h_j>| / (|h_i| |h_j|) between receive rows."""
    h = _entries(H)
    norms = _row_norms(h)
    g = np.abs(h @ h.conj().T) / np.outer(norms, norms)
    return np.clip(g, 0.0, 1.0)


def correlation_coefficient(H):
    """Largest normalized inner product between two receive rows (0 for a single row)."""
    h = _entries(H)
    g = correlation_matrix(h)
    if h.shape[0] < 2:
        return 0.0
    return float(max(g[i, j] for i, j in combinations(range(h.shape[0]), 2)))


def covariance(H):
    h = _entries(H)
    return h @ h.conj().T


def capacity_approx(H):
    """Relative capacity log2(N (1 - rho^2)) of a two-receiver channel.

    Returns -inf with a :class:`RankDeficientWarning` when the rows are
    linearly dependent.
    """
    h = _entries(H)
    if h.shape[0] != 2:
        raise DimensionMismatch(f"relative capacity is defined for two receivers, got {h.shape[0]}")
    p1, p2 = (float(np.sum(np.abs(row) ** 2)) for row in h)
    rho = correlation_coefficient(h)
    value = p1 * p2 * (1.0 - rho * rho)
    if value <= 1e-12 * p1 * p2:
        warnings.warn("channel rows are linearly dependent", RankDeficientWarning, stacklevel=2)
        return float("-inf")
    return math.log2(value)


def shannon_capacity(H, snr, normalize=True):
    """log2 det(I + snr/m * H H^H) in bits/s/Hz.

    With ``normalize`` the matrix is first scaled to unit mean entry power,
    which removes common path loss from the comparison.
    """
    if snr < 0:
        raise ModelError(f"snr must be nonnegative, got {snr}")
    h = _entries(H)
    if normalize:
        power = float(np.mean(np.abs(h) ** 2))
        if power == 0:
            return 0.0
        h = h / math.sqrt(power)
    sv = np.linalg.svd(h, compute_uv=False)
    return float(np.sum(np.log2(1.0 + snr / h.shape[1] * sv ** 2)))


def singular_values(H):
    return np.linalg.svd(_entries(H), compute_uv=False)


def condition_number(H):
    """Squared singular-value spread; inf past 1e18."""
    sv = singular_values(H)
    top, bottom = sv[0] ** 2, sv[-1] ** 2
    if top == 0:
        return float("inf")
    if bottom == 0 or top / bottom > SINGULAR_LIMIT:
        return float("inf")
    return float(top / bottom)


@dataclass(frozen=True, eq=False)
class ChannelAnalytics:
    rho: float
    pairwise: np.ndarray
    covariance: np.ndarray
    singular_values: np.ndarray
    condition_number: float
    capacity_rel: Optional[float]
    capacity_shannon: float
    snr: float
    numerically_singular: bool = field(default=False)


def analyze(H, snr=100.0):
    """All scalar summaries of a channel at linear ``snr``."""
    h = _entries(H)
    cond = condition_number(h)
    if h.shape[0] == 2:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficientWarning)
            rel = capacity_approx(h)
    else:
        rel = None
    return ChannelAnalytics(
        rho=correlation_coefficient(h), pairwise=correlation_matrix(h), covariance=covariance(h),
        singular_values=singular_values(h), condition_number=cond, capacity_rel=rel,
        capacity_shannon=shannon_capacity(h, snr), snr=snr,
        numerically_singular=cond > NUMERICALLY_SINGULAR)


def channel_to_dict(H):
    h = H.entries
    return {
        "schema": CHANNEL_SCHEMA,
        "n": int(h.shape[0]),
        "m": int(h.shape[1]),
        "frequency_hz": float(H.frequency),
        "attenuation": float(H.attenuation),
        "provenance": H.provenance.value,
        "modes": list(H.modes),
        "entries": [[float(v.real), float(v.imag)] for v in h.ravel()],
    }


def channel_from_dict(data):
    try:
        n, m = int(data["n"]), int(data["m"])
        pairs = data["entries"]
        freq = float(data["frequency_hz"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed channel document: {exc}") from None
    if len(pairs) != n * m or any(len(p) != 2 for p in pairs):
        raise ParseError(f"expected {n * m} [re, im] pairs", field="entries")
    entries = np.array([complex(re, im) for re, im in pairs]).reshape(n, m)
    return ChannelMatrix(entries, freq, float(data.get("attenuation", 1.0)),
                         Provenance(data.get("provenance", "Measured")), tuple(data.get("modes", ())))


def write_channel_json(H, path):
    atomic_write_text(path, json.dumps(channel_to_dict(H), indent=2) + "\n")


def read_channel_json(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno) from None
    return channel_from_dict(data)
