import numpy as np
import pytest

from curveflow.config import ConfigError, format_config, load_config, parse_config
from curveflow.driver import SCENARIOS, RunConfig, run
from curveflow.field import Shape
from curveflow.io import (
    AREA_HEADER,
    SEGMENT_HEADER,
    read_areas_csv,
    read_segments_csv,
    write_outputs,
    write_svg,
)

BASIC = """
# shrinking disk
mesh.nx = 20
mesh.ny = 20
phases.k = 2
shapes.disk = disk 1 0.5 0.5 0.3
shapes.background = 2
time.dt = 0.002
time.K = 5
time.M = 3
mode = bmo_star
constraint.enabled = true
constraint.epsilon = 1e-6
output.every = 1
fit.phase = 1
"""


def test_parse_basic():
    cfg = parse_config(BASIC)
    assert (cfg.nx, cfg.k, cfg.K, cfg.M) == (20, 2, 5, 3)
    assert cfg.shapes == (Shape("disk", (0.5, 0.5, 0.3), 0),)
    assert cfg.background == 1 and cfg.fit_phase == 0
    assert cfg.constraint and cfg.epsilon == 1e-6 and cfg.mode == "bmo_star"


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_format_round_trip(name):
    cfg = SCENARIOS[name]
    back = parse_config(format_config(cfg))
    assert back == cfg


def test_scenario_with_overrides():
    cfg = parse_config("scenario = double_bubble\ntime.M = 7\nmesh.nx = 30\n")
    assert cfg.M == 7 and cfg.nx == 30 and cfg.k == 3
    assert cfg.shapes == SCENARIOS["double_bubble"].shapes


@pytest.mark.parametrize("text,key", [
    ("mesh.nz = 3", "mesh.nz"),
    (BASIC.replace("time.M = 3", ""), "time.M"),
    (BASIC.replace("mesh.nx = 20", ""), "mesh.nx"),
    (BASIC.replace("time.K = 5", "time.K = five"), "time.K"),
    (BASIC.replace("mode = bmo_star", "mode = fast"), "mode"),
    (BASIC.replace("constraint.enabled = true", "constraint.enabled = maybe"), "constraint.enabled"),
    (BASIC + "time.K = 3\n", "time.K"),
    (BASIC.replace("disk 1 0.5 0.5 0.3", "disk 1 0.5 0.5"), "shapes.disk"),
    (BASIC.replace("disk 1 0.5 0.5 0.3", "blob 1 0.5 0.5 0.3"), "shapes.disk"),
    ("scenario = nowhere", "scenario"),
    (BASIC + "constraint.form = cubic\n", "constraint.form"),
    ("just words", "line 1"),
])
def test_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key
    assert str(exc.value).startswith(key)


def test_semantic_errors_are_config_errors():
    with pytest.raises(ConfigError):
        parse_config(BASIC.replace("shapes.background = 2", "shapes.background = 4"))


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_config(tmp_path / "nope.cfg")
    assert exc.value.key == "path"


def test_outputs_round_trip(tmp_path):
    cfg = parse_config(BASIC)
    traj = run(cfg)
    out = write_outputs(traj, tmp_path / "o", svg=True)
    segs = read_segments_csv(out / "segments.csv")
    areas = read_areas_csv(out / "areas.csv")
    assert sorted(segs) == [0, 1, 2, 3] == sorted(areas)
    for fr in traj.frames:
        pairs, pts = segs[fr.step]
        np.testing.assert_array_equal(pairs, fr.seg_pairs)
        np.testing.assert_array_equal(pts, fr.seg_points)
        np.testing.assert_array_equal(areas[fr.step], fr.areas)
    text = (out / "segments.csv").read_text()
    assert text.splitlines()[0] == ",".join(SEGMENT_HEADER)
    assert "\r" not in text
    assert (out / "areas.csv").read_text().splitlines()[0] == ",".join(AREA_HEADER)
    assert len(list(out.glob("frame_*.svg"))) == 4
    summary = (out / "summary.txt").read_text()
    assert "steps: 3" in summary
    diag = (out / "diagnostics.csv").read_text().splitlines()
    assert len(diag) == 5


def test_readers_reject_foreign_files(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_segments_csv(p)
    with pytest.raises(ValueError):
        read_areas_csv(p)


def test_svg_is_wellformed(tmp_path):
    import xml.etree.ElementTree as ET

    cfg = RunConfig(nx=10, ny=10, k=3, shapes=(Shape("disk", (0.4, 0.5, 0.3), 0), Shape("disk", (0.7, 0.5, 0.3), 1)),
                    background=2, dt=1e-3, K=2, M=1, mode="bmo_star")
    traj = run(cfg)
    write_svg(traj.frames[-1], tmp_path / "f.svg")
    root = ET.parse(tmp_path / "f.svg").getroot()
    assert root.tag.endswith("svg")
    assert sum(1 for e in root if e.tag.endswith("line")) == traj.frames[-1].seg_pairs.shape[0]


def test_shipped_configs_match_scenarios():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    files = sorted(root.glob("*.cfg"))
    assert {f.stem for f in files} == set(SCENARIOS)
    for f in files:
        assert load_config(f) == SCENARIOS[f.stem]
