"""Directional OAM beams, LoS-MIMO channels and 16-QAM link simulation."""

__version__ = "0.1.0"

from .beam import BeamKind, BeamSpec, PatternCut, WaveguideSpec, WaveParameters  # noqa: E402
from .channel import ChannelMatrix, analyze  # noqa: E402
from .geometry import ArrayGeometry, AntennaPose, build_uniform_linear_geometry  # noqa: E402
from .link import FrameSchedule, LinkResult, run_link_sim  # noqa: E402
from .scenario import Scenario, parse_scenario  # noqa: E402

__all__ = [
    "AntennaPose", "ArrayGeometry", "BeamKind", "BeamSpec", "ChannelMatrix", "FrameSchedule",
    "LinkResult", "PatternCut", "Scenario", "WaveParameters", "WaveguideSpec", "analyze",
    "build_uniform_linear_geometry", "parse_scenario", "run_link_sim",
]
