"""Sweep drivers behind the command line tools.

Each driver returns plain rows (lists of column values) so that the CSV
writer, the plotting helpers and the tests all consume the same data.
"""

import csv
import io
import math
from dataclasses import dataclass
from typing import List

import numpy as np

from . import beam as beam_mod
from ._io import fmt_float
from .channel import (
    NUMERICALLY_SINGULAR,
    condition_number,
    correlation_coefficient,
    shannon_capacity,
)
from .link import run_link_sim


@dataclass
class Table:
    columns: List[str]
    rows: List[list]

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_float(value)
    return str(value)


def config_label(modes):
    if modes is None:
        return "horn"
    return "oam_" + "_".join(str(m) for m in modes)


def _configurations(sc):
    return [None] + [list(s) for s in sc.mode_sets]


def capacity_sweep(sc):
    """Shannon capacity (bits/s/Hz) per transmitter configuration over the SNR grid."""
    channels = [(config_label(c), sc.channel(c)) for c in _configurations(sc)]
    columns = ["snr_db"] + [f"capacity_{label}" for label, _ in channels]
    rows = []
    for snr_db in sc.snr_grid_db:
        snr = 10.0 ** (snr_db / 10.0)
        rows.append([snr_db] + [shannon_capacity(h, snr) for _, h in channels])
    return Table(columns, rows)


def condition_table(sc):
    """Condition number and correlation for horns at each array size and every mode set."""
    configs = [(None, size) for size in (sc.array_sizes or (sc.geometry.tx_count,))]
    configs += [(list(s), None) for s in sc.mode_sets]
    rows = []
    for modes, size in configs:
        h = sc.channel(modes, size)
        cond = condition_number(h)
        rows.append([config_label(modes), h.m, h.n, cond, correlation_coefficient(h),
                     cond > NUMERICALLY_SINGULAR])
    return Table(["configuration", "tx", "rx", "cond_number", "rho", "numerically_singular"], rows)


def ber_sweep(sc):
    """Monte Carlo BER of the scenario's 2x2 link, one row per SNR point."""
    results = run_link_sim(sc.scenario_channel(), sc.snr_grid_db, sc.trials, sc.seed,
                           sc.schedule, sc.equalizer)
    rows = [[r.snr_db, r.ber_per_stream[0], r.ber_per_stream[1], r.rho_measured, r.cond_number,
             r.trials, r.seed] for r in results]
    return Table(["snr_db", "ber_stream1", "ber_stream2", "rho", "cond_number", "trials", "seed"], rows)


def pattern_spec(sc, mode=None):
    """Beam for a pattern cut: ``mode`` (or the first scenario mode) unless the scenario uses horns."""
    if mode is None:
        if sc.tx_type == "Horn" or not sc.modes:
            return sc.horn_spec()
        mode = sc.modes[0]
    if mode == 0:
        return sc.horn_spec()
    return sc.oam_spec(int(mode))


def pattern_cut(sc, mode=None, polar_deg=None):
    """Cut through the beam and the recovered equivalent mode.

    Returns ``(cut, slope)``; the polar angle defaults to the scenario's
    pattern block, then to the main lobe.
    """
    spec = pattern_spec(sc, mode)
    wave = sc.wave
    p = sc.pattern
    polar = polar_deg if polar_deg is not None else p.polar_deg
    theta = math.radians(polar) if polar is not None else beam_mod.main_lobe_direction(spec, wave)[0]
    count = int(round((p.azimuth_stop_deg - p.azimuth_start_deg) / p.azimuth_step_deg)) + 1
    grid = np.radians(np.linspace(p.azimuth_start_deg, p.azimuth_stop_deg, count))
    cut = beam_mod.pattern_cut(spec, wave, theta, grid)
    return cut, beam_mod.main_lobe_phase_slope(cut)
