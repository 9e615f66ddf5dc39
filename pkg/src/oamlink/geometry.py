"""Antenna placements and per-link geometry.

Coordinates are x (lateral), y (height) and z (range).  Each transmitter
has a local frame built from its boresight f: the horizontal axis
h = up x f and the vertical axis v = f x h.  Link azimuth is measured from h
toward v in the plane orthogonal to the boresight, in (-pi, pi].
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DegenerateDirection, IndexOutOfRange, InvalidGeometry

UP = np.array([0.0, 1.0, 0.0])
AIM_MODES = ("rx_centroid", "paired")


def _frozen(vec):
    arr = np.array(vec, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AntennaPose:
    position: np.ndarray
    boresight: np.ndarray

    def __post_init__(self):
        pos, bore = np.asarray(self.position, dtype=float), np.asarray(self.boresight, dtype=float)
        if pos.shape != (3,) or bore.shape != (3,) or not np.all(np.isfinite(pos)):
            raise InvalidGeometry("position and boresight must be finite 3-vectors")
        norm = float(np.linalg.norm(bore))
        if not norm > 0:
            raise InvalidGeometry("boresight must be nonzero")
        object.__setattr__(self, "position", _frozen(pos))
        object.__setattr__(self, "boresight", _frozen(bore / norm))

    def frame(self):
        """Rows (h, v, f) of the local orthonormal frame."""
        f = self.boresight
        h = np.cross(UP, f)
        if np.linalg.norm(h) < 1e-12:
            # boresight vertical: fall back to the lateral axis
            h = np.array([1.0, 0.0, 0.0]) - f[0] * f
        h = h / np.linalg.norm(h)
        v = np.cross(f, h)
        return np.vstack([h, v, f])


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    tx: Tuple[AntennaPose, ...]
    rx: Tuple[AntennaPose, ...]

    def __post_init__(self):
        object.__setattr__(self, "tx", tuple(self.tx))
        object.__setattr__(self, "rx", tuple(self.rx))
        if not self.tx or not self.rx:
            raise InvalidGeometry("need at least one transmitter and one receiver")
        for t in self.tx:
            for r in self.rx:
                if np.linalg.norm(r.position - t.position) <= 0:
                    raise InvalidGeometry("a receiver coincides with a transmitter")

    @property
    def m(self):
        return len(self.tx)

    @property
    def n(self):
        return len(self.rx)

    def tx_centroid(self):
        return np.mean([t.position for t in self.tx], axis=0)

    def rx_centroid(self):
        return np.mean([r.position for r in self.rx], axis=0)

    def los_axis(self):
        """Unit vector from the transmit centroid to the receive centroid."""
        d = self.rx_centroid() - self.tx_centroid()
        norm = np.linalg.norm(d)
        if norm == 0:
            raise InvalidGeometry("array centroids coincide")
        return d / norm

    def centroid_distance(self):
        return float(np.linalg.norm(self.rx_centroid() - self.tx_centroid()))

    def _check(self, n, m):
        if not (0 <= n < self.n and 0 <= m < self.m):
            raise IndexOutOfRange(f"link ({n}, {m}) outside a {self.n}x{self.m} array")

    def local_direction(self, n, m):
        """Unit Tx->Rx direction expressed as (h, v, f) components in Tx m's frame."""
        self._check(n, m)
        d = self.rx[n].position - self.tx[m].position
        norm = np.linalg.norm(d)
        if norm == 0:
            raise DegenerateDirection(f"receiver {n} coincides with transmitter {m}")
        return self.tx[m].frame() @ (d / norm)


def _line(count, spacing, height, z):
    offsets = (np.arange(count) - (count - 1) / 2.0) * spacing
    return [np.array([x, height, z]) for x in offsets]


def build_uniform_linear_geometry(m, n, tx_spacing, rx_spacing, range_, height, aim="rx_centroid"):
    """Two parallel horizontal lines of antennas facing each other.

    Args:
        m: number of transmitters.
        n: number of receivers.
        tx_spacing: element pitch on the transmit line (m).
        rx_spacing: element pitch on the receive line (m).
        range_: distance between the two lines (m).
        height: mounting height of both lines (m).
        aim: ``"rx_centroid"`` points every transmitter at the receive
            centroid; ``"paired"`` points transmitter i at receiver i
            (requires m == n).
    """
    if int(m) != m or int(n) != n or m < 1 or n < 1:
        raise InvalidGeometry("antenna counts must be positive integers")
    for name, val in (("tx_spacing", tx_spacing), ("rx_spacing", rx_spacing),
                      ("range", range_), ("height", height)):
        if not (math.isfinite(val) and val > 0):
            raise InvalidGeometry(f"{name} must be positive, got {val!r}")
    if aim not in AIM_MODES:
        raise InvalidGeometry(f"aim must be one of {AIM_MODES}, got {aim!r}")
    if aim == "paired" and m != n:
        raise InvalidGeometry("paired aiming needs equal Tx and Rx counts")
    tx_pos = _line(int(m), tx_spacing, height, 0.0)
    rx_pos = _line(int(n), rx_spacing, height, range_)
    centroid = np.mean(rx_pos, axis=0)
    targets = rx_pos if aim == "paired" else [centroid] * int(m)
    tx = [AntennaPose(p, t - p) for p, t in zip(tx_pos, targets)]
    rx = [AntennaPose(p, np.array([0.0, 0.0, -1.0])) for p in rx_pos]
    return ArrayGeometry(tx, rx)


def link_distance(geom, n, m):
    """Euclidean distance from transmitter ``m`` to receiver ``n`` (0-based)."""
    geom._check(n, m)
    return float(np.linalg.norm(geom.rx[n].position - geom.tx[m].position))


def link_angles(geom, n, m):
    """Off-boresight angle and azimuth of receiver ``n`` seen from transmitter ``m``."""
    h, v, f = geom.local_direction(n, m)
    theta = math.atan2(math.hypot(h, v), f)
    if math.hypot(h, v) < 1e-15:
        return theta, 0.0
    phi = math.atan2(v, h)
    if phi == -math.pi:
        phi = math.pi
    return theta, phi
