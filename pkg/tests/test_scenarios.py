import jsonschema
import numpy as np
import pytest

import rthslab.scenarios as scenarios_mod
from rthslab.config import ExperimentConfig
from rthslab.scenarios import (
    DESCRIPTIONS,
    REPORT_SCHEMA,
    SCENARIO_NAMES,
    ScenarioContext,
    run_matrix,
    run_scenario,
)

from conftest import DT


@pytest.fixture(scope="module")
def short_cfg():
    return ExperimentConfig(duration=2.0)


@pytest.fixture(scope="module")
def matrix_2s(short_cfg):
    return run_matrix(short_cfg)


def test_scenario_names_have_descriptions():
    assert set(DESCRIPTIONS) == set(SCENARIO_NAMES)
    assert len(SCENARIO_NAMES) == 8


def test_pure_fe_scenario_matches_integrator(short_cfg, bench_model,
                                             bench_integrator, record_2048):
    from rthslab.integrator import run_pure_fe
    entry, hist = run_scenario(short_cfg, "pure-fe")
    want = run_pure_fe(bench_model, bench_integrator, record_2048, n=4097)
    assert len(hist) == 4097   # int(2.0 / dt) + 1
    np.testing.assert_array_equal(hist.command, want.command)
    assert entry["metrics"]["nrmse_percent"] == 0.0
    assert entry["metrics"]["reference_id"] == "pure-fe"


def test_unknown_scenario_rejected(short_cfg):
    with pytest.raises(ValueError, match="unknown scenario 'fe-sideways'"):
        run_scenario(short_cfg, "fe-sideways")
    with pytest.raises(ValueError, match="known:"):
        run_matrix(short_cfg, scenarios=["pure-fe", "nope"])


def test_matrix_full(matrix_2s):
    report, histories = matrix_2s
    assert report["failed"] == []
    assert set(report["scenarios"]) == set(SCENARIO_NAMES)
    assert set(histories) == set(SCENARIO_NAMES)
    assert len(report["comparison"]) == len(SCENARIO_NAMES)
    # every run covers the same grid
    for hist in histories.values():
        assert len(hist) == 4097


def test_matrix_report_schema(matrix_2s):
    report, _ = matrix_2s
    jsonschema.validate(report, REPORT_SCHEMA)


def test_matrix_expected_orderings(matrix_2s):
    report, _ = matrix_2s
    sc = report["scenarios"]
    err = {k: v["metrics"]["nrmse_percent"] for k, v in sc.items()}
    assert err["pure-fe"] == 0.0
    assert sc["fe-offline"]["extra"]["bit_identical_to_pure"] is True
    assert err["fe-online-ats"] < err["fe-online-uncompensated"]
    # the delayed plant shifts the uncompensated response by about the delay
    assert sc["fe-online-uncompensated"]["metrics"]["lag_ticks"] >= 14
    assert err["rnn-sweep"] <= 100.0


def test_matrix_record_block(matrix_2s):
    report, _ = matrix_2s
    rec = report["record"]
    assert rec["dt"] == pytest.approx(DT)
    assert rec["samples"] == 81921
    assert rec["duration_s"] == pytest.approx(40.0)
    assert report["config"]["duration"] == 2.0


def test_matrix_subset_resolves_dependencies(short_cfg):
    # lr-online alone must silently build pure -> phase1 -> offline -> phase2
    report, histories = run_matrix(short_cfg, scenarios=["lr-online"])
    assert list(report["scenarios"]) == ["lr-online"]
    assert list(histories) == ["lr-online"]
    entry = report["scenarios"]["lr-online"]
    assert entry["extra"]["phase"] == "recorded"
    assert entry["extra"]["delay_steps"] == scenarios_mod.RECORDED_FEEDBACK_LAG
    assert entry["metrics"]["nrmse_percent"] < 5.0
    jsonschema.validate(report, REPORT_SCHEMA)


def test_matrix_empty_list(short_cfg):
    report, histories = run_matrix(short_cfg, scenarios=[])
    assert report["scenarios"] == {}
    assert histories == {}
    assert report["comparison"] == []
    assert report["failed"] == []


def test_matrix_failure_recorded_and_batch_continues(short_cfg, monkeypatch):
    def boom(ctx):
        raise RuntimeError("synthetic scenario failure")

    monkeypatch.setitem(scenarios_mod._SCENARIOS, "fe-offline", boom)
    report, histories = run_matrix(
        short_cfg, scenarios=["pure-fe", "fe-offline", "fe-online-uncompensated"]
    )
    assert report["failed"] == ["fe-offline"]
    entry = report["scenarios"]["fe-offline"]
    assert entry["error"] == "RuntimeError: synthetic scenario failure"
    assert "metrics" not in entry
    # the rest of the batch still ran
    assert "fe-online-uncompensated" in histories
    assert "fe-offline" not in histories
    assert len(report["comparison"]) == 2
    jsonschema.validate(report, REPORT_SCHEMA)


def test_matrix_bad_record_aborts_before_running(tmp_path):
    cfg = ExperimentConfig(record=str(tmp_path / "missing.at2"), duration=1.0)
    with pytest.raises(OSError):
        run_matrix(cfg)


def test_context_laziness(short_cfg):
    ctx = ScenarioContext(short_cfg)
    assert ctx._gm is None
    assert ctx._pure is None
    _ = ctx.gm
    assert ctx._gm is not None
    # n_ticks honours duration without touching the pure run
    assert ctx.n_ticks == 4097
    assert ctx._pure is None


def test_context_shared_between_scenarios(short_cfg):
    ctx = ScenarioContext(short_cfg)
    run_scenario(short_cfg, "pure-fe", context=ctx)
    pure_obj = ctx._pure
    assert pure_obj is not None
    run_scenario(short_cfg, "lr-pure", context=ctx)
    assert ctx._pure is pure_obj   # reused, not recomputed
    assert ctx._lr_phase1 is not None
