import math

import pytest

from kcsnav.ddpg import DdpgConfig, train
from kcsnav.env import EpisodeConfig, WaypointEnv
from kcsnav.records import (
    TrainingLogWriter, metrics_row, metrics_summary, read_table, read_trajectory,
    read_training_log, read_waypoints, write_table, write_trajectory, write_waypoints,
)
from kcsnav.scenarios import (
    PdIlosController, build_ellipse_scenario, metrics_from_trace, run_scenario,
)

HEADER = "t,x,y,psi,u,v,r,delta,delta_c,d_c,chi_e,reward"


@pytest.fixture(scope="module")
def ellipse_run():
    return run_scenario(build_ellipse_scenario(), PdIlosController())


def test_trajectory_csv_round_trip(tmp_path, ellipse_run):
    rec, m = ellipse_run
    p = write_trajectory(rec, tmp_path / "e.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == HEADER
    assert len(lines) - 1 == m.steps_used
    rows = read_trajectory(p)
    m2 = metrics_from_trace(rows, rec.initial_delta, m.success, m.waypoints_reached, m.waypoints_total)
    for k in ("rms_cross_track", "controller_effort_rms", "rudder_travel"):
        assert getattr(m2, k) == pytest.approx(getattr(m, k), abs=1e-9)
    assert rows.tolist() == [list(r) for r in rec.rows]  # repr floats are exact


def test_bad_header_rejected(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_trajectory(p)


def test_numbers_are_locale_free(tmp_path, ellipse_run):
    p = write_trajectory(ellipse_run[0], tmp_path / "e.csv")
    body = p.read_text().splitlines()[1]
    assert all(";" not in f and f.count(",") == 0 for f in body.split(","))
    float(body.split(",")[1])


def test_waypoints_and_tables(tmp_path, ellipse_run):
    rec, m = ellipse_run
    write_waypoints(rec.waypoints, tmp_path / "w.csv")
    assert read_waypoints(tmp_path / "w.csv") == rec.waypoints
    rows = [metrics_row("ellipse", "pd-ilos", m)]
    write_table(rows, tmp_path / "m.csv")
    back = read_table(tmp_path / "m.csv")
    assert back[0]["scenario"] == "ellipse" and back[0]["success"] == "true"
    assert float(back[0]["rms_cross_track"]) == m.rms_cross_track
    assert "ellipse" in metrics_summary(rows)


def test_training_log_files_and_torn_line(tmp_path):
    env = WaypointEnv(EpisodeConfig(max_steps=20))
    with TrainingLogWriter(tmp_path) as w:
        _, log = train(env, DdpgConfig(total_steps=120), seed=0, on_episode=w.episode, on_update=w.update)
    back = read_training_log(tmp_path)
    assert back.episodes == log.episodes
    assert [u["step"] for u in back.updates] == [u["step"] for u in log.updates]
    assert all(math.isclose(a["critic_loss"], b["critic_loss"], rel_tol=0, abs_tol=0)
               for a, b in zip(back.updates, log.updates))
    # simulate a crash mid-write: the partial last line is dropped
    with (tmp_path / "episodes.csv").open("a") as fh:
        fh.write("99,-12.")
    assert len(read_training_log(tmp_path).episodes) == len(log.episodes)
