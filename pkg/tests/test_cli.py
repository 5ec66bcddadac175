from __future__ import annotations

import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from cfarey import __version__
from cfarey.cli import (
    EXIT_COMPUTE,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY,
    RunConfig,
    UsageError,
    main,
    parse_delta_grid,
    read_gaps_csv,
)


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_delta_grid_parsing():
    g = parse_delta_grid("1:8:0.05")
    assert g[0] == 1.0 and g[-1] == 8.0 and len(g) == 141
    assert parse_delta_grid("2:2:1").tolist() == [2.0]
    for bad in ("1:8", "8:1:0.1", "1:2:0", "a:b:c"):
        with pytest.raises(UsageError):
            parse_delta_grid(bad)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"disc": -5},
        {"disc": 3},
        {"command": "gaps"},
        {"command": "gaps", "height": 4, "t": 2.0},
        {"height": 0.5},
        {"region": "0.5,0.2,0,1"},
        {"formats": "csv,png"},
        {"mc_grid": 0},
        {"threads": 0},
    ],
)
def test_runconfig_validation(kwargs):
    with pytest.raises(UsageError):
        RunConfig(**kwargs)


def test_usage_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "enumerate", "--disc", "-5", "--height", "4") == EXIT_USAGE
    assert run(tmp_path, "gaps", "--disc", "-4") == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["gaps", "--height", "notanumber"])
    assert exc.value.code == EXIT_USAGE
    assert run(tmp_path, "verify", "--criteria", "42") == EXIT_USAGE


def test_compute_failure_exit(tmp_path):
    # the point budget is checked before enumeration starts
    assert run(tmp_path, "enumerate", "--disc", "-4", "--height", "1e4") == EXIT_COMPUTE


def test_verify_failure_exit(tmp_path, capsys):
    assert run(tmp_path, "verify", "--disc", "-4", "--criteria", "1") == EXIT_VERIFY
    doc = json.loads((tmp_path / "verify_D-4.json").read_text())
    assert doc["passed"] is False and doc["results"][0]["criterion"] == "1"
    assert "[FAIL] criterion 1" in capsys.readouterr().out


def test_enumerate_outputs(tmp_path):
    assert run(tmp_path, "enumerate", "--disc", "-4", "--height", "10") == EXIT_OK
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["farey_D-4_h10.cfry", "farey_D-4_h10.csv", "farey_D-4_h10.json", "farey_D-4_h10.svg"]
    meta = json.loads((tmp_path / "farey_D-4_h10.json").read_text())
    assert meta["config"]["disc"] == -4 and meta["config"]["version"] == __version__
    assert meta["count"] > 0
    head = (tmp_path / "farey_D-4_h10.csv").read_text().splitlines()[0]
    assert head.startswith("#")


def test_svgs_valid_and_small(tmp_path):
    assert run(tmp_path, "enumerate", "--disc", "-3", "--height", "20") == EXIT_OK
    assert run(tmp_path, "gaps", "--disc", "-4", "--height", "12") == EXIT_OK
    assert run(tmp_path, "limit", "--disc", "-4", "--delta-grid", "1:5:0.5", "--mc-grid", "128",
               "--gaps-csv", str(tmp_path / "gaps_D-4_h12.csv")) == EXIT_OK
    svgs = sorted(tmp_path.glob("*.svg"))
    assert {p.name for p in svgs} >= {"farey_D-3_h20.svg", "density_D-4_h12.svg", "tail_D-4_h12.svg",
                                      "limit_D-4.svg", "limit_tail_D-4.svg"}
    for p in svgs:
        root = ET.parse(p).getroot()
        assert root.tag.endswith("svg")
        meta = root.find("{http://www.w3.org/2000/svg}metadata")
        assert meta is not None and f"version={__version__}" in meta.text
        assert p.stat().st_size < 20 * 2**20


def test_gaps_outputs_and_region(tmp_path):
    assert run(tmp_path, "gaps", "--disc", "-4", "--height", "10", "--region", "0,0.5,0,0.5") == EXIT_OK
    g = read_gaps_csv(tmp_path / "gaps_D-4_h10_region.csv")
    assert g.min() >= 1.0
    doc = json.loads((tmp_path / "gaps_D-4_h10_region.json").read_text())
    assert doc["summary"]["region_kind"] == "basis-rectangle"
    assert doc["config"]["region"] == "0,0.5,0,0.5"
    cdf = (tmp_path / "cdf_D-4_h10_region.csv").read_text().splitlines()
    assert "# region=0,0.5,0,0.5" in cdf
    rows = [r.split(",") for r in cdf if not r.startswith("#")][1:]
    vals = np.array([float(r[1]) for r in rows])
    assert np.all(np.diff(vals) >= 0)


def test_limit_table_columns(tmp_path):
    assert run(tmp_path, "limit", "--disc", "-4", "--delta-grid", "3:5:1", "--mc-grid", "128",
               "--format", "csv,json") == EXIT_OK
    lines = [ln for ln in (tmp_path / "limit_D-4.csv").read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == "delta,F,tail,term1,term2,term3,residual,stderr"
    assert len(lines) == 4
    # below 4|omega| the decomposition columns are blank
    assert lines[1].split(",")[3] == ""
    last = lines[-1].split(",")
    assert float(last[5]) == 5.0**-4 and float(last[6]) == 0.0
    doc = json.loads((tmp_path / "limit_D-4.json").read_text())
    assert doc["all_converged"] is True


def test_config_file_overridden_by_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ndisc = -3\nheight = 6\nformat = json\nmc-grid = 64\n")
    out = tmp_path / "o"
    assert main(["enumerate", "--config", str(cfg), "--height", "5", "--out", str(out)]) == EXIT_OK
    doc = json.loads((out / "farey_D-3_h5.json").read_text())
    assert doc["config"]["disc"] == -3 and doc["config"]["height"] == 5.0
    assert doc["config"]["mc_grid"] == 64 and doc["config"]["formats"] == "json"
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert main(["enumerate", "--config", str(bad), "--height", "5", "--out", str(out)]) == EXIT_USAGE


def test_reruns_are_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["gaps", "--disc", "-3", "--height", "8", "--out", str(d)]) == EXIT_OK
        assert main(["limit", "--disc", "-3", "--delta-grid", "1:4.5:0.5", "--mc-grid", "96", "--out", str(d)]) == EXIT_OK
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_threads_do_not_change_results(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    common = ["limit", "--disc", "-4", "--delta-grid", "1:4:0.5", "--mc-grid", "96", "--format", "csv"]
    assert main([*common, "--out", str(a)]) == EXIT_OK
    assert main([*common, "--threads", "2", "--out", str(b)]) == EXIT_OK

    def body(p):
        return [ln for ln in p.read_text().splitlines() if not ln.startswith("# threads=")]

    assert body(a / "limit_D-4.csv") == body(b / "limit_D-4.csv")
