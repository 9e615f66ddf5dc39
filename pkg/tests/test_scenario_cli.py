import csv
import dataclasses
import json
import math
import os
from pathlib import Path

import pytest

from oamlink import cli, experiments
from oamlink.errors import ParseError, ValidationError
from oamlink.scenario import parse_scenario, parse_scenario_text, scenario_to_dict, serialize_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

MINIMAL = """\
frequency_ghz: 10
geometry:
  tx_count: 2
  rx_count: 2
  tx_spacing_m: 0.2
  rx_spacing_m: 0.2
  range_m: 10
  height_m: 1.5
"""


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.scenario")), ids=lambda p: p.stem)
def test_checked_in_scenarios_parse_and_round_trip(path):
    sc = parse_scenario(path)
    assert parse_scenario_text(serialize_scenario(sc)) == sc


def test_10m_scenario_values():
    sc = parse_scenario(SCENARIOS / "capacity_10m.scenario")
    assert sc.frequency_ghz == 10.0
    assert sc.geometry.tx_spacing_m == 0.2 and sc.geometry.range_m == 10.0 and sc.geometry.height_m == 1.5
    assert sc.mode_sets[-1] == (25, 35)


def test_unknown_key_reports_line():
    with pytest.raises(ParseError) as err:
        parse_scenario_text(MINIMAL + "  rangee_m: 3\n")
    assert err.value.line == 9
    assert err.value.field == "geometry.rangee_m"


def test_malformed_yaml():
    with pytest.raises(ParseError, match="line"):
        parse_scenario_text("frequency_ghz: [10\n")


def test_wrong_types():
    with pytest.raises(ParseError):
        parse_scenario_text(MINIMAL + "trials: many\n")
    with pytest.raises(ParseError):
        parse_scenario_text(MINIMAL + "modes: 3\n")
    with pytest.raises(ParseError):
        parse_scenario_text("geometry: {}\n")


def test_mode_count_must_match_tx_count():
    with pytest.raises(ValidationError, match="modes"):
        parse_scenario_text(MINIMAL + "tx_type: NtcsOam\nmodes: [30]\n")


def test_snr_grid_rules():
    with pytest.raises(ValidationError, match="snr_grid_db"):
        parse_scenario_text(MINIMAL + "snr_grid_db: []\n")
    with pytest.raises(ValidationError, match="snr_grid_db"):
        parse_scenario_text(MINIMAL + "snr_grid_db: [0, 10, 10]\n")


def test_other_validation():
    for extra in ("tx_type: Dish\n", "wavefront: curved\n", "equalizer: MMSE\n",
                  "beam:\n  radius_rule: magic\n", "attenuation: -1\n", "mode_sets: [[0, 1]]\n"):
        with pytest.raises(ValidationError):
            parse_scenario_text(MINIMAL + extra)


def test_round_trip_through_dict():
    sc = parse_scenario(SCENARIOS / "bench_oam.scenario")
    doc = scenario_to_dict(sc)
    assert doc["modes"] == [30, 45]
    assert parse_scenario_text(serialize_scenario(sc)) == sc


def test_one_by_one_condition_is_unity():
    sc = dataclasses.replace(parse_scenario_text(MINIMAL), array_sizes=(1,), mode_sets=((30,),))
    table = experiments.condition_table(sc)
    assert table.column("cond_number") == [1.0, 1.0]


def test_capacity_sweep_zero_snr_row():
    sc = dataclasses.replace(parse_scenario(SCENARIOS / "capacity_10m.scenario"), snr_grid_db=(-math.inf, 10.0))
    table = experiments.capacity_sweep(sc)
    assert table.rows[0][1:] == [0.0] * (len(table.columns) - 1)


def _read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_cli_pattern_cut(tmp_path, capsys):
    out = tmp_path / "cut"
    code = cli.main(["pattern-cut", "--scenario", str(SCENARIOS / "pattern_oam30.scenario"),
                     "--out", str(out), "--mode", "45"])
    assert code == 0
    line = capsys.readouterr().out
    slope = float(line.split(":")[1].split()[0])
    assert slope == pytest.approx(45, rel=0.02)
    rows = _read_csv(out / "pattern_cut.csv")
    assert rows[0] == ["azimuth_deg", "amplitude_linear", "amplitude_db", "phase_deg_unwrapped"]
    assert (out / "pattern_cut.png").stat().st_size > 1000
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["summary"]["recovered_mode"] == pytest.approx(45, rel=0.02)


def test_cli_pattern_cut_horn_is_flat(tmp_path, capsys):
    code = cli.main(["pattern-cut", "--scenario", str(SCENARIOS / "pattern_oam30.scenario"),
                     "--out", str(tmp_path), "--mode", "0", "--theta-deg", "90", "--no-plots"])
    assert code == 0
    slope = float(capsys.readouterr().out.split(":")[1].split()[0])
    assert abs(slope) < 0.1
    assert not (tmp_path / "pattern_cut.png").exists()


def test_cli_condition_table_flags_singular(tmp_path):
    assert cli.main(["condition-table", "--scenario", str(SCENARIOS / "condition_sizes.scenario"),
                     "--out", str(tmp_path), "--no-plots"]) == 0
    rows = _read_csv(tmp_path / "condition_table.csv")
    header, body = rows[0], rows[1:]
    flags = {(r[0], r[1]): r[header.index("numerically_singular")] for r in body}
    assert flags[("horn", "2")] == "true"
    assert flags[("oam_1_2", "2")] == "false"
    for r in body:
        value = r[header.index("cond_number")]
        assert value == "inf" or math.isfinite(float(value))


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.scenario"
    bad.write_text(MINIMAL + "colour: blue\n")
    assert cli.main(["capacity-sweep", "--scenario", str(bad), "--out", str(tmp_path)]) == 3
    assert "error[parse]" in capsys.readouterr().err
    bad.write_text(MINIMAL + "snr_grid_db: []\n")
    assert cli.main(["capacity-sweep", "--scenario", str(bad), "--out", str(tmp_path)]) == 4
    # mode 1 has no physical waveguide radius
    bad.write_text(MINIMAL + "tx_type: NtcsOam\nmodes: [1, 2]\nbeam:\n  radius_rule: waveguide\n")
    assert cli.main(["capacity-sweep", "--scenario", str(bad), "--out", str(tmp_path)]) == 0
    assert cli.main(["pattern-cut", "--scenario", str(bad), "--out", str(tmp_path)]) == 5
    assert "error[model]" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        cli.main(["capacity-sweep"])
    assert exc.value.code == 2
    assert cli.main(["capacity-sweep", "--scenario", str(tmp_path / "missing"), "--out", str(tmp_path)]) == 1


def test_cli_ber_sweep_rerun_is_byte_identical(tmp_path):
    src = tmp_path / "short.scenario"
    text = (SCENARIOS / "bench_oam.scenario").read_text()
    src.write_text(text.replace("trials: 25", "trials: 2"))
    first, second = tmp_path / "a", tmp_path / "b"
    assert cli.main(["ber-sweep", "--scenario", str(src), "--out", str(first), "--seed", "77",
                     "--no-plots"]) == 0
    manifest = json.loads((first / "manifest.json").read_text())
    assert manifest["fec_threshold"] == 3.8e-3
    assert manifest["seed"] == 77 and manifest["schema"] == cli.MANIFEST_SCHEMA
    assert cli.main(["rerun", "--manifest", str(first / "manifest.json"), "--out", str(second)]) == 0
    assert (first / "ber_sweep.csv").read_bytes() == (second / "ber_sweep.csv").read_bytes()
    header = _read_csv(first / "ber_sweep.csv")[0]
    assert header == ["snr_db", "ber_stream1", "ber_stream2", "rho", "cond_number", "trials", "seed"]


def test_atomic_outputs_leave_no_temp_files(tmp_path):
    cli.main(["capacity-sweep", "--scenario", str(SCENARIOS / "capacity_10m.scenario"), "--out", str(tmp_path)])
    assert sorted(os.listdir(tmp_path)) == ["capacity_sweep.csv", "capacity_sweep.png", "manifest.json"]
