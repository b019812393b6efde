"""Smoke tests for the python bindings."""

import json
import os

import pytest

import headwayrl as hrl

TINY_LINE = json.dumps(
    {
        "stations": 4,
        "seats": 10,
        "capacity": 15,
        "service_start": 100,
        "service_end": 220,
        "min_interval": 2,
        "max_interval": 15,
    }
)

TINY_SPEC = json.dumps(
    {
        "stations": 4,
        "passengers": 150,
        "window_start": 100,
        "window_end": 220,
        "rate_curve": [[100, 0.3], [130, 1.0], [170, 0.3]],
    }
)

TINY_AGENT = json.dumps(
    {
        "hidden_layers": 1,
        "hidden_units": 8,
        "episodes": 2,
        "batch_size": 16,
        "buffer_capacity": 200,
        "target_sync_period": 100,
        "early_stop": False,
        "seed": 3,
    }
)


def test_version():
    assert hrl.__version__


def test_synthetic_demand_window_and_determinism():
    d1 = hrl.generate_synthetic(TINY_SPEC, seed=7)
    d2 = hrl.generate_synthetic(TINY_SPEC, seed=7)
    assert len(d1) == 150
    assert hrl.demand_to_csv(d1) == hrl.demand_to_csv(d2)
    for rec in d1.records:
        assert 100 <= rec.arrival_minute < 220
        assert rec.destination_station > rec.origin_station


def test_transforms():
    d = hrl.generate_synthetic(TINY_SPEC, seed=1)
    assert hrl.demand_to_csv(hrl.resample(d, 1.0, 5)) == hrl.demand_to_csv(d)
    shifted = hrl.shift_peak(d, 130, 170, 30)
    assert len(shifted) == len(d)
    half = hrl.resample(d, 0.5, 5)
    assert 0 < len(half) < len(d)


def test_line_and_evaluation():
    line = hrl.line_from_json(TINY_LINE)
    assert line.stations == 4
    assert line.trip_capacity() == pytest.approx(1.5 * 10 * 3)
    assert line.arrival_minute(100, 1) == pytest.approx(100)

    d = hrl.generate_synthetic(TINY_SPEC, seed=2)
    minutes = list(range(100, 221, 10))
    result = hrl.evaluate_timetable(d, line, minutes)
    assert result["nd"] == len(minutes)
    assert result["unserved"] >= 0
    assert result["awt"] >= 0
    assert any(b["provided"] > 0 for b in result["capacity_series"])


def test_env_rollout():
    line = hrl.line_from_json(TINY_LINE)
    d = hrl.generate_synthetic(TINY_SPEC, seed=3)
    env = hrl.Env(line, d)
    assert env.state_dim == 6
    state = env.observe()
    assert len(state) == 6
    first = env.step(0)
    assert first["forced"] and first["action"] == 1

    while not env.done:
        env.step(0 if env.minutes_since_departure < line.max_interval else 1)
    tt = env.timetable()
    assert tt[0] == line.service_start
    assert tt[-1] == line.service_end


def test_env_variants():
    line = hrl.line_from_json(TINY_LINE)
    d = hrl.generate_synthetic(TINY_SPEC, seed=4)
    assert hrl.Env(line, d, variant="scheme-two").state_dim == 3
    assert hrl.Env(line, d, variant="drop-feature:x4").state_dim == 5
    assert hrl.Env(line, d, variant="scheme-one").state_dim == 4 * 4 * 3


def test_train_smoke(tmp_path):
    line = hrl.line_from_json(TINY_LINE)
    d = hrl.generate_synthetic(TINY_SPEC, seed=5)
    ckpt = tmp_path / "net.bin"
    result = hrl.train(line, d, agent_json=TINY_AGENT, checkpoint_path=str(ckpt))
    assert len(result["curve"]) == 2
    assert result["metrics"]["nd"] >= 2
    assert result["timetable"][0] == line.service_start
    assert ckpt.exists()


def test_ga_smoke():
    line = hrl.line_from_json(TINY_LINE)
    d = hrl.generate_synthetic(TINY_SPEC, seed=6)
    res = hrl.ga_optimize(d, line, ga_json=json.dumps({"population": 8, "generations": 4}))
    assert res["timetable"][0] == line.service_start
    assert res["trace"][0]["best"] >= res["trace"][-1]["best"]


def test_cli_in_process(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(TINY_SPEC)
    out = tmp_path / "out"
    code = hrl.run_cli(["gen-data", "--spec", str(spec), "--seed", "11", "--out", str(out)])
    assert code == 0
    assert (out / "demand.csv").exists()
    assert (out / "manifest.json").exists()

    code = hrl.run_cli(["gen-data", "--spec", "/nonexistent.json", "--out", str(tmp_path / "x")])
    assert code != 0


def test_reference_data_files():
    data_dir = os.environ.get("HEADWAYRL_DATA_DIR")
    if not data_dir:
        pytest.skip("reference data dir not provided")
    line = hrl.load_line(os.path.join(data_dir, "line_ref.json"))
    assert line.stations == 10
    spec = open(os.path.join(data_dir, "demand_ref_spec.json")).read()
    d = hrl.generate_synthetic(spec, seed=17)
    assert len(d) == 2000
