"""Scenario files: YAML documents with units spelled out in the key names.

Unknown keys are rejected.  Angles are degrees here and radians everywhere
else in the package.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import yaml

from . import beam as beam_mod
from .channel import WAVEFRONTS, oam_channel, plane_wave_channel
from .errors import ParseError, ValidationError
from .geometry import AIM_MODES, build_uniform_linear_geometry
from .link import Equalizer, FrameSchedule

TX_TYPES = ("Horn", "NtcsOam")
RADIUS_RULES = ("waveguide", "main_lobe")


@dataclass(frozen=True)
class GeometryConfig:
    tx_count: int = 2
    rx_count: int = 2
    tx_spacing_m: float = 0.2
    rx_spacing_m: float = 0.2
    range_m: float = 10.0
    height_m: float = 1.5
    aim: str = "rx_centroid"


@dataclass(frozen=True)
class BeamConfig:
    arc_angle_deg: float = 90.0
    radius_rule: str = "waveguide"
    main_lobe_polar_deg: float = 18.0
    peak_gain_db: float = 16.0
    boresight_azimuth_deg: float = 0.0


@dataclass(frozen=True)
class WaveguideConfig:
    wide_m: float = 0.02286
    narrow_m: float = 0.01016


@dataclass(frozen=True)
class LinkConfig:
    pilot_len: int = 64
    payload_len: int = 1024


@dataclass(frozen=True)
class PatternConfig:
    polar_deg: Optional[float] = None  # None: cut through the main lobe
    azimuth_start_deg: float = -180.0
    azimuth_stop_deg: float = 180.0
    azimuth_step_deg: float = 0.1


@dataclass(frozen=True)
class Scenario:
    frequency_ghz: float
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    name: str = ""
    tx_type: str = "Horn"
    modes: Tuple[int, ...] = ()
    mode_sets: Tuple[Tuple[int, ...], ...] = ()
    array_sizes: Tuple[int, ...] = ()
    beam: BeamConfig = field(default_factory=BeamConfig)
    waveguide: WaveguideConfig = field(default_factory=WaveguideConfig)
    wavefront: str = "planar"
    attenuation: float = 1.0
    snr_grid_db: Tuple[float, ...] = (0.0, 10.0, 20.0, 30.0)
    trials: int = 10
    seed: int = 0
    equalizer: str = "Raw"
    link: LinkConfig = field(default_factory=LinkConfig)
    pattern: PatternConfig = field(default_factory=PatternConfig)

    # derived model objects

    @property
    def wave(self):
        return beam_mod.WaveParameters(self.frequency_ghz * 1e9)

    @property
    def waveguide_spec(self):
        return beam_mod.WaveguideSpec(self.waveguide.wide_m, self.waveguide.narrow_m)

    @property
    def schedule(self):
        return FrameSchedule(self.link.pilot_len, self.link.payload_len)

    def build_geometry(self, tx_count=None, rx_count=None):
        g = self.geometry
        return build_uniform_linear_geometry(
            tx_count or g.tx_count, rx_count or g.rx_count, g.tx_spacing_m, g.rx_spacing_m,
            g.range_m, g.height_m, g.aim)

    def horn_spec(self):
        return beam_mod.BeamSpec.horn(self.beam.peak_gain_db, math.radians(self.beam.boresight_azimuth_deg))

    def oam_spec(self, mode):
        b = self.beam
        arc = math.radians(b.arc_angle_deg)
        if b.radius_rule == "waveguide":
            radius = beam_mod.radius_for_mode(mode, self.wave, self.waveguide_spec)
        else:
            radius = beam_mod.radius_for_main_lobe(mode, math.radians(b.main_lobe_polar_deg), self.wave, arc)
        return beam_mod.BeamSpec.ntcs(mode, radius, arc, math.radians(b.boresight_azimuth_deg), b.peak_gain_db)

    def channel(self, modes=None, count=None):
        """Channel for horns (``modes`` None) or one OAM beam per mode.

        ``count`` forces a square array for horns.  Otherwise the receiver
        count comes from the geometry block when the transmitter count matches
        it, and mirrors the transmitter count when it does not.
        """
        g = self.geometry
        tx = len(modes) if modes is not None else (count or g.tx_count)
        rx = count or (g.rx_count if tx == g.tx_count else tx)
        geom = self.build_geometry(tx, rx)
        if modes is None:
            return plane_wave_channel(geom, self.wave, self.attenuation, self.horn_spec(), self.wavefront)
        beams = [self.oam_spec(m) for m in modes]
        return oam_channel(geom, self.wave, self.attenuation, beams, self.wavefront)

    def scenario_channel(self):
        """Channel of the configured transmitter type and array."""
        if self.tx_type == "Horn":
            return self.channel(None)
        return self.channel(list(self.modes))


_SECTIONS = {
    "geometry": GeometryConfig,
    "beam": BeamConfig,
    "waveguide": WaveguideConfig,
    "link": LinkConfig,
    "pattern": PatternConfig,
}


def _key_lines(node, prefix=()):
    """Map key paths to 1-based line numbers from a composed YAML tree."""
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            path = prefix + (str(key.value),)
            lines[path] = key.start_mark.line + 1
            lines.update(_key_lines(value, path))
    return lines


def _number(value, name, integer=False, line=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"expected a number, got {value!r}", line=line, field=name)
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ParseError(f"expected an integer, got {value!r}", line=line, field=name)
        return int(value)
    return float(value)


def _coerce(cls, data, path, lines):
    if not isinstance(data, dict):
        raise ParseError("expected a mapping", line=lines.get(path), field=".".join(path))
    hints = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        key_path = path + (str(key),)
        line = lines.get(key_path)
        name = ".".join(key_path)
        if key not in hints:
            raise ParseError(f"unknown key '{key}'", line=line, field=name)
        kwargs[key] = _convert(cls, hints[key], value, key_path, name, line, lines)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ParseError(f"missing required key: {exc}", field=".".join(path) or None) from None


def _convert(cls, fdef, value, key_path, name, line, lines):
    key = fdef.name
    if key in _SECTIONS and cls is Scenario:
        return _coerce(_SECTIONS[key], value, key_path, lines)
    default = fdef.default
    if key in ("modes", "array_sizes"):
        return tuple(_number(v, name, True, line) for v in _as_list(value, name, line))
    if key == "mode_sets":
        return tuple(tuple(_number(v, name, True, line) for v in _as_list(s, name, line))
                     for s in _as_list(value, name, line))
    if key == "snr_grid_db":
        return tuple(_number(v, name, False, line) for v in _as_list(value, name, line))
    if key == "polar_deg" and value is None:
        return None
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ParseError(f"expected a string, got {value!r}", line=line, field=name)
        return value
    if isinstance(default, bool):
        return bool(value)
    if isinstance(default, int) and not isinstance(default, bool):
        return _number(value, name, True, line)
    return _number(value, name, False, line)


def _as_list(value, name, line):
    if not isinstance(value, list):
        raise ParseError(f"expected a list, got {value!r}", line=line, field=name)
    return value


def validate(sc):
    """Raise :class:`ValidationError` naming the first violated invariant."""
    def positive(value, name):
        if not (math.isfinite(value) and value > 0):
            raise ValidationError(f"must be positive, got {value}", name)

    positive(sc.frequency_ghz, "frequency_ghz")
    g = sc.geometry
    for name in ("tx_count", "rx_count"):
        if getattr(g, name) < 1:
            raise ValidationError("must be at least 1", f"geometry.{name}")
    for name in ("tx_spacing_m", "rx_spacing_m", "range_m", "height_m"):
        positive(getattr(g, name), f"geometry.{name}")
    if g.aim not in AIM_MODES:
        raise ValidationError(f"must be one of {AIM_MODES}", "geometry.aim")
    if sc.tx_type not in TX_TYPES:
        raise ValidationError(f"must be one of {TX_TYPES}", "tx_type")
    if sc.tx_type == "NtcsOam" and len(sc.modes) != g.tx_count:
        raise ValidationError(f"has {len(sc.modes)} entries for {g.tx_count} transmitters", "modes")
    for mode_list in (sc.modes,) + tuple(sc.mode_sets):
        if any(v == 0 for v in mode_list):
            raise ValidationError("OAM modes must be nonzero", "modes")
    if any(len(s) == 0 for s in sc.mode_sets):
        raise ValidationError("mode sets must be non-empty", "mode_sets")
    if any(v < 1 for v in sc.array_sizes):
        raise ValidationError("array sizes must be at least 1", "array_sizes")
    b = sc.beam
    if not 0 < b.arc_angle_deg <= 360:
        raise ValidationError("must lie in (0, 360]", "beam.arc_angle_deg")
    if b.radius_rule not in RADIUS_RULES:
        raise ValidationError(f"must be one of {RADIUS_RULES}", "beam.radius_rule")
    if not 0 < b.main_lobe_polar_deg < 180:
        raise ValidationError("must lie in (0, 180)", "beam.main_lobe_polar_deg")
    if not math.isfinite(b.peak_gain_db):
        raise ValidationError("must be finite", "beam.peak_gain_db")
    if not sc.waveguide.wide_m > sc.waveguide.narrow_m > 0:
        raise ValidationError("needs wide_m > narrow_m > 0", "waveguide")
    if sc.wavefront not in WAVEFRONTS:
        raise ValidationError(f"must be one of {WAVEFRONTS}", "wavefront")
    positive(sc.attenuation, "attenuation")
    grid = sc.snr_grid_db
    if not grid:
        raise ValidationError("must not be empty", "snr_grid_db")
    if any(not math.isfinite(v) for v in grid) or any(b2 <= a for a, b2 in zip(grid, grid[1:])):
        raise ValidationError("must be finite and strictly increasing", "snr_grid_db")
    if sc.trials < 1:
        raise ValidationError("must be at least 1", "trials")
    if sc.seed < 0:
        raise ValidationError("must be nonnegative", "seed")
    if sc.equalizer not in [e.value for e in Equalizer]:
        raise ValidationError(f"must be one of {[e.value for e in Equalizer]}", "equalizer")
    if sc.link.pilot_len < 1 or sc.link.payload_len < 1:
        raise ValidationError("block lengths must be at least 1", "link")
    p = sc.pattern
    if p.azimuth_step_deg <= 0 or p.azimuth_stop_deg <= p.azimuth_start_deg:
        raise ValidationError("needs start < stop and a positive step", "pattern")
    return sc


def parse_scenario_text(text):
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                         line=mark.line + 1 if mark else None) from None
    if data is None:
        raise ParseError("empty scenario")
    return validate(_coerce(Scenario, data, (), _key_lines(node)))


def parse_scenario(path):
    with open(path) as fh:
        return parse_scenario_text(fh.read())


def scenario_to_dict(sc):
    def plain(value):
        if dataclasses.is_dataclass(value):
            return {f.name: plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
        if isinstance(value, tuple):
            return [plain(v) for v in value]
        return value
    return plain(sc)


def scenario_from_dict(data):
    return parse_scenario_text(yaml.safe_dump(data, sort_keys=False))


def serialize_scenario(sc):
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=None)


def with_seed(sc, seed):
    return dataclasses.replace(sc, seed=int(seed)) if seed is not None else sc
