import numpy as np
import pytest

from bfctl import EngineOptions, ModelConfig, Scenario, SweepSpec, lane_scenario_expand, run_sweep
from bfctl.engines import compare_results, run_engine
from bfctl.errors import UnknownScenario
from bfctl.scenarios import evaluate_scenario
from bfctl.sweep import crossing_pattern, parse_range, sweep_configs



def test_parse_range():
    assert parse_range("0:1:6") == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    assert parse_range("0.1, 0.5") == [0.1, 0.5]
    assert parse_range("3:3:1") == [3.0]
    with pytest.raises(ValueError):
        parse_range("0:1")


def test_sweep_spec_rejects_unknown_param():
    with pytest.raises(ValueError):
        SweepSpec.parse("colour=1,2")


def test_rho_rule_hits_target_load():
    base = ModelConfig.build(2, 4, 4, p=0.6, q=1.0)
    cfg = SweepSpec.parse("rho=0.5").configure(base, 0.5)
    total = sum(a.mean for a in cfg.arrivals)
    assert total == pytest.approx(0.5 * 4.56)


def test_infeasible_points_are_skipped():
    base = ModelConfig.build(2, 4, 4, p=1.0, q=1.0, arrivals=0.2)
    rows = run_sweep("solve", base, SweepSpec.parse("arrivals.mean=0.2,0.5"))
    assert [r["status"] for r in rows] == ["ok", "skipped"]
    assert rows[1]["reason"].startswith("Unstable")
    rows = run_sweep("solve", base, SweepSpec.parse("p=0.5,1.5"))
    assert rows[1]["status"] == "skipped" and "ProbabilityRange" in rows[1]["reason"]
    rows = run_sweep("solve", base, SweepSpec.parse("g2=2.5"))
    assert rows[0]["status"] == "skipped"


def test_worker_pool_keeps_order(monkeypatch):
    base = ModelConfig.build(2, 4, 4, p=0.6, q=1.0, arrivals=0.3)
    spec = SweepSpec.parse("arrivals.mean=0.35,0.1,0.3,0.2")
    serial = run_sweep("solve", base, spec)
    monkeypatch.setenv("BFCTL_WORKERS", "3")
    pooled = run_sweep("solve", base, spec)
    assert [r["index"] for r in pooled] == [0, 1, 2, 3]
    for a, b in zip(serial, pooled):
        assert a["mean_queue"] == pytest.approx(b["mean_queue"], abs=1e-13)


def test_dump_configs_round_trip():
    base = ModelConfig.build(2, 4, 4, p=0.6, q=1.0, arrivals=0.3)
    points = sweep_configs(base, SweepSpec.parse("q=0:1:3"))
    for pt in points:
        cfg = ModelConfig.from_dict(pt["config"])
        assert cfg == SweepSpec.parse("q=0:1:3").configure(base, pt["value"])


def test_crossing_patterns():
    np.testing.assert_allclose(crossing_pattern(2.5, 4, "uniform"), [0.625] * 4)
    np.testing.assert_allclose(crossing_pattern(2.5, 4, "step"), [1, 1, 0.5, 0])
    with pytest.raises(ValueError):
        crossing_pattern(5, 4, "step")


def test_layouts():
    single = lane_scenario_expand(Scenario("case1", 0.4))
    assert len(single) == 1 and single[0].p[0] == 0.3
    assert (single[0].g1, single[0].g2, single[0].r) == (8, 20, 20)
    ded = lane_scenario_expand(Scenario("case2", 1.0))
    assert [(c.p[0], c.arrivals[0].mean) for c in ded] == [(1.0, 0.3), (0.0, 0.7)]
    b = lane_scenario_expand(Scenario("shared-2b", 1.0))
    assert [(c.p[0], c.arrivals[0].mean) for c in b] == [(0.75, 0.4), (0.0, 0.6)]
    assert (b[0].g1, b[0].g2, b[0].r) == (8, 16, 16)
    # turning traffic is the same share of mu in every layout
    for name in ("single", "dedicated", "shared-2a", "shared-2b"):
        lanes = lane_scenario_expand(Scenario(name, 1.0))
        assert sum(c.p[0] * c.arrivals[0].mean for c in lanes) == pytest.approx(0.3)
    with pytest.raises(UnknownScenario):
        lane_scenario_expand(Scenario("case3", 1.0))


def test_zero_rate_scenario():
    res = evaluate_scenario(Scenario("dedicated", 0.0))
    assert res["total_mean_queue"] == 0.0


def test_compare_is_antisymmetric(small_p06):
    a = run_engine("solve", small_p06)
    b = run_engine("oracle", small_p06)
    ab, ba = compare_results(a, b), compare_results(b, a)
    np.testing.assert_allclose(ab["mean_diff"], -np.asarray(ba["mean_diff"]))
    assert ab["sup_tv"] == ba["sup_tv"] and ab["sup_distance"] == ba["sup_distance"]


def test_simulate_engine_has_no_pmfs(small_p0):
    res = run_engine("simulate", small_p0, EngineOptions(cycles=200, runs=3))
    assert res.slot_pmfs is None and res.overflow_cdf() is None
    assert "per_slot_ci" in res.extras
