"""Far-field synthesis of plane-wave and NTCS-OAM beams.

An NTCS (non-uniform traveling-wave current source) is an arc of angle
``arc_angle`` carrying a current whose phase winds ``equivalent_mode`` times
per revolution.  Its far field is a sinc-weighted superposition of Bessel
modes and forms a directional main lobe inside which the wavefront phase
falls linearly with azimuth at a rate equal to the equivalent mode.

All angles are radians.  Field amplitudes carry the common constants of the
source (propagation constant, permeability, drive current) in a single
``amplitude_scale`` because they cancel in every channel metric.
"""

import csv
import functools
import io
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize, special
from scipy.constants import c as SPEED_OF_LIGHT

from ._io import atomic_write_text, fmt_float
from .errors import (
    EvanescentMode,
    InsufficientSamples,
    InvalidDistance,
    ModelError,
    NoMainLobe,
    NonPhysicalRadius,
    TruncationTooSmall,
)

DEFAULT_TRUNCATION = 64
TRUNCATION_TOLERANCE = 1e-4
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WaveParameters:
    frequency: float  # Hz

    def __post_init__(self):
        if not (math.isfinite(self.frequency) and self.frequency > 0):
            raise ModelError(f"frequency must be positive and finite, got {self.frequency!r}")

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.frequency

    @property
    def wavenumber(self):
        return TWO_PI / self.wavelength


@dataclass(frozen=True)
class WaveguideSpec:
    """Rectangular waveguide cross-section (defaults: WR-90)."""

    wide: float = 0.02286
    narrow: float = 0.01016

    def __post_init__(self):
        if not (self.wide > self.narrow > 0):
            raise ModelError(f"waveguide needs wide > narrow > 0, got {self.wide}, {self.narrow}")


class BeamKind(str, Enum):
    PLANE_WAVE = "plane_wave"
    NTCS_OAM = "ntcs_oam"


@dataclass(frozen=True)
class BeamSpec:
    """Radiation model of one transmitter.

    For ``PLANE_WAVE`` only ``peak_gain_db``, ``boresight_azimuth`` and
    ``amplitude_scale`` are used.  A full-circle source (``arc_angle == 2*pi``)
    is the classical single-mode OAM ring and may carry mode 0.
    """

    kind: BeamKind
    equivalent_mode: int = 0
    arc_angle: float = math.pi / 2
    boresight_azimuth: float = 0.0
    source_radius: float = 0.0
    peak_gain_db: float = 16.0
    amplitude_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", BeamKind(self.kind))
        if not math.isfinite(self.peak_gain_db):
            raise ModelError("peak_gain_db must be finite")
        if not (self.amplitude_scale > 0 and math.isfinite(self.amplitude_scale)):
            raise ModelError("amplitude_scale must be positive")
        if self.kind is BeamKind.NTCS_OAM:
            if int(self.equivalent_mode) != self.equivalent_mode:
                raise ModelError("equivalent_mode must be an integer")
            object.__setattr__(self, "equivalent_mode", int(self.equivalent_mode))
            if not (0 < self.arc_angle <= TWO_PI + 1e-12):
                raise ModelError(f"arc_angle must lie in (0, 2*pi], got {self.arc_angle}")
            if self.equivalent_mode == 0 and not self.is_full_circle:
                raise ModelError("an arc source needs a nonzero equivalent mode")
            if not self.source_radius > 0:
                raise ModelError(f"source_radius must be positive, got {self.source_radius}")

    @classmethod
    def horn(cls, peak_gain_db=16.0, boresight_azimuth=0.0, amplitude_scale=1.0):
        return cls(BeamKind.PLANE_WAVE, peak_gain_db=peak_gain_db,
                   boresight_azimuth=boresight_azimuth, amplitude_scale=amplitude_scale)

    @classmethod
    def ntcs(cls, mode, radius, arc_angle=math.pi / 2, boresight_azimuth=0.0,
             peak_gain_db=16.0, amplitude_scale=1.0):
        return cls(BeamKind.NTCS_OAM, equivalent_mode=mode, arc_angle=arc_angle,
                   boresight_azimuth=boresight_azimuth, source_radius=radius,
                   peak_gain_db=peak_gain_db, amplitude_scale=amplitude_scale)

    @property
    def is_full_circle(self):
        return abs(self.arc_angle - TWO_PI) <= 1e-12

    @property
    def peak_gain(self):
        return 10.0 ** (self.peak_gain_db / 10.0)

    @property
    def helical_mode(self):
        """Mode whose azimuthal phase this beam imprints (0 for a plane wave)."""
        return self.equivalent_mode if self.kind is BeamKind.NTCS_OAM else 0


@dataclass(frozen=True, eq=False)
class PatternCut:
    angles: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray
    polar_angle: float

    def __post_init__(self):
        arrays = [np.asarray(a, dtype=float).copy() for a in (self.angles, self.amplitude, self.phase)]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1 or arrays[0].size < 3:
            raise ModelError("pattern cut needs three equal-length 1-D lists of at least 3 samples")
        if np.any(np.diff(arrays[0]) <= 0):
            raise ModelError("pattern cut angles must be strictly increasing")
        if np.any(np.abs(np.diff(arrays[2])) > math.pi):
            raise ModelError("pattern cut phase must be unwrapped")
        for name, arr in zip(("angles", "amplitude", "phase"), arrays):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def cutoff_wavelength(wg, wave):
    """Operating TE10 wavelength of the waveguide, ``lambda0 / sqrt(1 - (lambda0/2 s_w)^2)``."""
    lam = wave.wavelength
    ratio = lam / (2.0 * wg.wide)
    if ratio >= 1.0:
        raise EvanescentMode(f"wavelength {lam:.6g} m does not propagate in a {wg.wide:.6g} m wide guide")
    return lam / math.sqrt(1.0 - ratio * ratio)


def radius_for_mode(mode, wave, wg):
    """Arc radius of the waveguide that produces equivalent mode ``mode``."""
    if mode == 0:
        raise ModelError("equivalent mode must be nonzero")
    lam = wave.wavelength
    if lam >= 2.0 * wg.wide:
        raise EvanescentMode(f"wavelength {lam:.6g} m does not propagate in a {wg.wide:.6g} m wide guide")
    r = abs(mode) / (math.pi * math.sqrt((2.0 / lam) ** 2 - (1.0 / wg.wide) ** 2)) - wg.wide / 2.0
    if r <= 0:
        raise NonPhysicalRadius(f"mode {mode} needs radius {r:.4g} m in this waveguide")
    return r


def bessel_j(order, x):
    """Bessel function of the first kind for integer ``order`` (array friendly)."""
    return special.jv(order, x)


def sinc(x):
    """Unnormalized sinc, sin(x)/x with sinc(0) = 1."""
    return np.sinc(np.asarray(x, dtype=float) / math.pi)


def mode_spectrum(spec, truncation=DEFAULT_TRUNCATION):
    """Mode orders and sinc weights retained for ``|l - l_e| <= truncation``."""
    orders = np.arange(spec.equivalent_mode - truncation, spec.equivalent_mode + truncation + 1)
    return orders, sinc(spec.arc_angle * (orders - spec.equivalent_mode) / 2.0)


def _significant_order(x_max):
    # J_l(x) < 1e-12 for |l| beyond this bound when |x| <= x_max
    return int(math.ceil(x_max + 10.0 * max(x_max, 1.0) ** (1.0 / 3.0) + 25.0))


def auto_truncation(spec, x_max):
    """Smallest truncation >= the default that spans every non-negligible Bessel order."""
    return max(DEFAULT_TRUNCATION, abs(spec.equivalent_mode) + _significant_order(x_max))


def _mode_coefficients(spec, x, truncation):
    """Coefficients a_l(x) with U = Ct * sum_l a_l(x) exp(-j l phi); shape (len(x), L)."""
    orders, weights = mode_spectrum(spec, truncation)
    phase = np.exp(-1j * spec.equivalent_mode * spec.arc_angle / 2.0) * np.exp(1j * orders * spec.boresight_azimuth)
    bessel = special.jv(orders[None, :], np.asarray(x, dtype=float)[:, None])
    return orders, bessel * (weights * phase)[None, :]


def _check_tail(spec, x, truncation, retained):
    orders = np.arange(-_significant_order(float(np.max(x, initial=0.0))),
                       _significant_order(float(np.max(x, initial=0.0))) + 1)
    omitted = orders[np.abs(orders - spec.equivalent_mode) > truncation]
    if omitted.size == 0:
        return
    tail = np.abs(sinc(spec.arc_angle * (omitted - spec.equivalent_mode) / 2.0)[None, :]
                  * special.jv(omitted[None, :], x[:, None]))
    scale = float(np.max(np.abs(retained), initial=0.0))
    worst = float(np.max(tail, initial=0.0))
    if worst > TRUNCATION_TOLERANCE * scale:
        raise TruncationTooSmall(
            f"largest omitted mode term {worst:.3g} exceeds {TRUNCATION_TOLERANCE:g} of the "
            f"retained field {scale:.3g}; raise the truncation above {truncation}")


def _prefactor(spec, wave, d):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise InvalidDistance(f"distance must be positive, got {d}")
    return spec.amplitude_scale * np.exp(-1j * wave.wavenumber * d) / (2.0 * d)


def single_mode_field(spec, wave, d, theta, phi):
    """Field of a uniform traveling-wave ring (single OAM mode)."""
    if spec.kind is not BeamKind.NTCS_OAM or not spec.is_full_circle:
        raise ModelError("single_mode_field needs a full-circle NTCS source")
    x = wave.wavenumber * spec.source_radius * np.sin(theta)
    mode = spec.equivalent_mode
    return _prefactor(spec, wave, d) * special.jv(mode, x) * np.exp(-1j * mode * np.asarray(phi, dtype=float))


def ntcs_field(spec, wave, d, theta, phi, truncation=None):
    """Radiated field of an NTCS arc source, evaluated by broadcasting ``theta`` and ``phi``.

    With ``truncation=None`` the mode sum is widened past the default of 64
    whenever more Bessel orders contribute; an explicit truncation that drops a
    term larger than 1e-4 of the field raises :class:`TruncationTooSmall`.
    """
    if spec.kind is not BeamKind.NTCS_OAM:
        raise ModelError("ntcs_field needs an NTCS-OAM beam spec")
    pre = _prefactor(spec, wave, d)
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    x = wave.wavenumber * spec.source_radius * np.sin(theta.ravel())
    ux, inverse = np.unique(x, return_inverse=True)
    k_trunc = auto_truncation(spec, float(np.max(np.abs(ux), initial=0.0))) if truncation is None else int(truncation)
    if k_trunc < 1:
        raise ModelError("truncation must be >= 1")
    orders, coeffs = _mode_coefficients(spec, ux, k_trunc)
    phases = np.exp(-1j * np.outer(phi.ravel(), orders))
    total = np.einsum("nl,nl->n", coeffs[inverse], phases)
    if truncation is not None:
        _check_tail(spec, ux, k_trunc, total)
    return pre * total.reshape(theta.shape)


def _cos_power(peak_gain):
    # directivity of cos^q over the forward hemisphere is 2(q + 1)
    return max(peak_gain / 2.0 - 1.0, 0.0)


def horn_exponent(spec):
    """Exponent q of the idealized cos^q plane-wave power pattern."""
    return _cos_power(spec.peak_gain)


def _horn_cos_offset(spec, theta, phi):
    # horn boresight sits on the equator at azimuth boresight_azimuth
    return np.sin(theta) * np.cos(np.asarray(phi) - spec.boresight_azimuth)


def horn_field(spec, wave, d, theta, phi):
    cos_psi = np.clip(_horn_cos_offset(spec, theta, phi), 0.0, 1.0)
    return _prefactor(spec, wave, d) * cos_psi ** (horn_exponent(spec) / 2.0)


def field(spec, wave, d, theta, phi, truncation=None):
    if spec.kind is BeamKind.PLANE_WAVE:
        return horn_field(spec, wave, d, theta, phi)
    return ntcs_field(spec, wave, d, theta, phi, truncation)


@functools.lru_cache(maxsize=256)
def _peak_argument(mode, arc_angle, x_max):
    """(x, dphi) maximizing |sum_l w_l J_l(x) exp(-j l dphi)| for x in (0, x_max]."""
    probe = BeamSpec.ntcs(mode, 1.0, arc_angle=arc_angle)
    k_trunc = auto_truncation(probe, x_max)
    xs = np.linspace(x_max / 400.0, x_max, 400)
    dphis = np.linspace(-math.pi, math.pi, 721)[:-1]
    orders, coeffs = _mode_coefficients(probe, xs, k_trunc)
    grid = np.abs(coeffs @ np.exp(-1j * np.outer(orders, dphis)))
    i, j = np.unravel_index(np.argmax(grid), grid.shape)

    def neg(p):
        xv = min(max(p[0], 1e-9), x_max)
        _, cf = _mode_coefficients(probe, np.array([xv]), k_trunc)
        return -abs(cf[0] @ np.exp(-1j * orders * p[1]))

    res = optimize.minimize(neg, x0=[xs[i], dphis[j]], method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
    x_best = min(max(res.x[0], 1e-9), x_max)
    return float(x_best), float(math.remainder(res.x[1], TWO_PI)), float(-res.fun)


def _unbounded_x(mode):
    return abs(mode) + 10.0 * max(abs(mode), 1) ** (1.0 / 3.0) + 20.0


def radius_for_main_lobe(mode, polar_angle, wave, arc_angle=math.pi / 2):
    """Arc radius that places the main lobe of mode ``mode`` at ``polar_angle``.

    The field depends on the polar angle only through k*r*sin(theta), so the
    peak sits at a fixed Bessel argument and the radius follows from it.
    """
    if mode == 0:
        raise ModelError("equivalent mode must be nonzero")
    if not 0 < polar_angle < math.pi:
        raise ModelError("main lobe polar angle must lie in (0, pi)")
    x_peak, _, _ = _peak_argument(int(mode), float(arc_angle), _unbounded_x(mode))
    return x_peak / (wave.wavenumber * math.sin(polar_angle))


@functools.lru_cache(maxsize=256)
def _main_lobe(spec, frequency):
    wave = WaveParameters(frequency)
    if spec.kind is BeamKind.PLANE_WAVE:
        return math.pi / 2, spec.boresight_azimuth, 1.0
    kr = wave.wavenumber * spec.source_radius
    x_peak, dphi, level = _peak_argument(spec.equivalent_mode, float(spec.arc_angle),
                                         min(kr, _unbounded_x(spec.equivalent_mode)))
    theta = math.asin(min(x_peak / kr, 1.0))
    phi = spec.boresight_azimuth + dphi
    peak = abs(ntcs_field(spec, wave, 1.0, theta, phi)) / abs(_prefactor(spec, wave, 1.0))
    return theta, phi, float(max(peak, level))


def main_lobe_direction(spec, wave):
    """(theta, phi) of the pattern maximum."""
    theta, phi, _ = _main_lobe(spec, wave.frequency)
    return theta, phi


def gain_pattern(spec, wave, theta, phi, truncation=None):
    """Linear power gain, scaled so the pattern maximum equals the peak gain."""
    if spec.kind is BeamKind.PLANE_WAVE:
        cos_psi = np.clip(_horn_cos_offset(spec, theta, phi), 0.0, 1.0)
        return spec.peak_gain * cos_psi ** horn_exponent(spec)
    _, _, peak = _main_lobe(spec, wave.frequency)
    u = ntcs_field(spec, wave, 1.0, theta, phi, truncation) / _prefactor(spec, wave, 1.0)
    return spec.peak_gain * np.abs(u) ** 2 / peak ** 2


def mount_angles(spec, wave, local):
    """Beam coordinates of directions given in a transmitter's mounting frame.

    ``local[..., :]`` holds (horizontal, vertical, forward) components.  The
    beam is mounted with its main lobe on the forward axis, its azimuth
    direction along the horizontal axis, and its arc axis tilted upward.
    Returns ``(theta, phi)`` arrays.
    """
    local = np.asarray(local, dtype=float)
    theta0, phi0 = main_lobe_direction(spec, wave)
    st, ct, sp, cp = math.sin(theta0), math.cos(theta0), math.sin(phi0), math.cos(phi0)
    e_r = np.array([st * cp, st * sp, ct])
    e_theta = np.array([ct * cp, ct * sp, -st])
    e_phi = np.array([-sp, cp, 0.0])
    vec = local[..., 2:3] * e_r + local[..., 0:1] * e_phi - local[..., 1:2] * e_theta
    vec = vec / np.linalg.norm(vec, axis=-1, keepdims=True)
    return np.arccos(np.clip(vec[..., 2], -1.0, 1.0)), np.arctan2(vec[..., 1], vec[..., 0])


def pattern_cut(spec, wave, theta, azimuth_grid, d=1.0, truncation=None):
    """Sample the field along constant polar angle ``theta``."""
    grid = np.asarray(azimuth_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0):
        raise ModelError("azimuth grid must be strictly increasing with at least 3 samples")
    step = float(np.max(np.diff(grid)))
    if abs(spec.helical_mode) * step >= math.pi:
        raise ModelError(f"azimuth step {step:.4g} rad is too coarse to unwrap mode {spec.helical_mode}")
    u = field(spec, wave, d, theta, grid, truncation)
    return PatternCut(grid, np.abs(u), np.unwrap(np.angle(u)), float(theta))


def main_lobe_window(cut):
    """Index bounds (lo, hi) of the 3 dB window around the global maximum."""
    amp = cut.amplitude
    peak_index = int(np.argmax(amp))
    peak = amp[peak_index]
    if not peak > 0:
        raise NoMainLobe("pattern cut has no radiated power")
    inside = amp >= peak / math.sqrt(2.0)
    lo = hi = peak_index
    while lo > 0 and inside[lo - 1]:
        lo -= 1
    while hi < amp.size - 1 and inside[hi + 1]:
        hi += 1
    if lo == 0 and hi == amp.size - 1:
        raise NoMainLobe("amplitude never drops 3 dB below its maximum within the cut")
    if hi - lo + 1 < 5:
        raise InsufficientSamples(f"only {hi - lo + 1} samples inside the 3 dB window (need 5)")
    return lo, hi


def main_lobe_phase_slope(cut, method="endpoints"):
    """Estimate the equivalent mode from the phase slope inside the 3 dB main lobe.

    ``method="endpoints"`` divides the unwrapped phase change between the
    window edges by their angular separation; ``"lstsq"`` fits a line to every
    sample in the window.  The sign is flipped so that an exp(-j l phi)
    wavefront returns +l.
    """
    lo, hi = main_lobe_window(cut)
    phi = cut.angles[lo:hi + 1]
    phase = cut.phase[lo:hi + 1]
    if method == "endpoints":
        slope = (phase[-1] - phase[0]) / (phi[-1] - phi[0])
    elif method == "lstsq":
        slope = np.polyfit(phi, phase, 1)[0]
    else:
        raise ValueError(f"unknown slope method {method!r}")
    return float(-slope)


PATTERN_CSV_COLUMNS = ("azimuth_deg", "amplitude_linear", "amplitude_db", "phase_deg_unwrapped")


def pattern_csv_text(cut):
    peak = float(np.max(cut.amplitude))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PATTERN_CSV_COLUMNS)
    for phi, amp, ph in zip(cut.angles, cut.amplitude, cut.phase):
        db = 20.0 * math.log10(amp / peak) if amp > 0 and peak > 0 else -300.0
        writer.writerow([fmt_float(math.degrees(phi)), fmt_float(amp), fmt_float(max(db, -300.0)),
                         fmt_float(math.degrees(ph))])
    return buf.getvalue()


def write_pattern_csv(cut, path):
    atomic_write_text(path, pattern_csv_text(cut))


def read_pattern_csv(path, polar_angle=float("nan")):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or tuple(rows[0].keys()) != PATTERN_CSV_COLUMNS:
        raise ModelError(f"{path}: expected header {','.join(PATTERN_CSV_COLUMNS)}")
    col = {name: np.array([float(r[name]) for r in rows]) for name in PATTERN_CSV_COLUMNS}
    return PatternCut(np.radians(col["azimuth_deg"]), col["amplitude_linear"],
                      np.radians(col["phase_deg_unwrapped"]), polar_angle)
