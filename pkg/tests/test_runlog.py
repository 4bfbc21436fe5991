"""Run-logger tests: aggregation math, histogram contract, append-only
ordering, crash tolerance, and checkpoint discovery."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from explainlab.errors import LogOrderViolation, NotFound
from explainlab.graph import load_model
from explainlab.runlog import (
    HISTOGRAM_BINS,
    RunLog,
    graph_fingerprint,
    list_runs,
    summarize_tensor,
)

from util import linear_state


# ---------------------------------------------------------------------------
# summarize_tensor


def test_stats_by_hand():
    out = summarize_tensor(np.array([-1.0, 0.0, 3.0]))
    stats = out["stats"]
    assert stats["min"] == -1.0
    assert stats["max"] == 3.0
    assert stats["mean"] == pytest.approx(2.0 / 3.0)
    # population std of [-1, 0, 3]: sqrt(26/9)
    assert stats["std"] == pytest.approx(np.sqrt(26.0 / 9.0))
    assert stats["l2"] == pytest.approx(np.sqrt(10.0))
    assert out["count"] == 3


def test_histogram_contract():
    out = summarize_tensor(np.linspace(0.0, 3.0, 31))
    h = out["histogram"]
    assert len(h["edges"]) == HISTOGRAM_BINS + 1
    assert len(h["counts"]) == HISTOGRAM_BINS
    assert h["edges"][0] == 0.0
    assert h["edges"][-1] == 3.0
    assert sum(h["counts"]) == 31


def test_degenerate_histogram_range():
    out = summarize_tensor(np.full(7, 2.5))
    h = out["histogram"]
    assert len(h["edges"]) == HISTOGRAM_BINS + 1
    assert h["edges"][0] == 2.0
    assert h["edges"][-1] == 3.0
    assert sum(h["counts"]) == 7
    assert max(h["counts"]) == 7  # all mass in one bin


def test_empty_tensor_rejected():
    with pytest.raises(ValueError):
        summarize_tensor(np.array([]))


@settings(max_examples=60, deadline=None)
@given(
    hnp.arrays(
        dtype=np.float64,
        shape=hnp.array_shapes(min_dims=1, max_dims=3, min_side=1, max_side=8),
        elements=st.floats(-1e6, 1e6, allow_nan=False),
    )
)
def test_summary_properties(values):
    out = summarize_tensor(values)
    stats = out["stats"]
    flat = values.ravel()
    # summation rounding can push the mean a few ulp past min/max
    slack = 1e-9 * max(abs(stats["min"]), abs(stats["max"]), 1.0)
    assert stats["min"] - slack <= stats["mean"] <= stats["max"] + slack
    assert stats["std"] >= 0.0
    assert stats["l2"] >= abs(stats["mean"]) - slack
    assert out["count"] == flat.size
    h = out["histogram"]
    assert len(h["edges"]) == HISTOGRAM_BINS + 1
    assert len(h["counts"]) == HISTOGRAM_BINS
    assert sum(h["counts"]) == flat.size  # every element lands in a bin
    assert all(c >= 0 for c in h["counts"])
    edges = np.asarray(h["edges"])
    assert np.all(np.diff(edges) > 0)
    assert edges[0] <= stats["min"] and edges[-1] >= stats["max"]


# ---------------------------------------------------------------------------
# RunLog


@pytest.fixture
def run(tmp_path):
    return RunLog(tmp_path, "r1", create=True, meta={"dataset_id": "bars8"})


def _state(value=1.0):
    return linear_state(np.array([[value], [value]]))


def test_log_step_names_tensors(run):
    run.log_step(_state(), 0)
    assert run.nodes() == ["dense/bias", "dense/weights"]
    series = run.read_series("dense/weights", "mean")
    assert series == [(0, 1.0)]


def test_log_extras_series(run):
    run.log_step(_state(), 1, extras={"loss": [0.5, 1.5]})
    assert run.read_series("loss", "mean") == [(1, 1.0)]


def test_log_order_enforced(run):
    run.log_step(_state(), 5)
    with pytest.raises(LogOrderViolation):
        run.log_step(_state(), 5)
    with pytest.raises(LogOrderViolation):
        run.log_step(_state(), 4)
    run.log_step(_state(), 6)  # strictly increasing is fine


def test_order_enforced_across_reopen(tmp_path):
    run = RunLog(tmp_path, "r2", create=True)
    run.log_step(_state(), 3)
    reopened = RunLog(tmp_path, "r2")
    with pytest.raises(LogOrderViolation):
        reopened.log_step(_state(), 3)


def test_unknown_series_raises(run):
    run.log_step(_state(), 0)
    with pytest.raises(NotFound):
        run.read_series("dense/weights", "median")
    with pytest.raises(NotFound):
        run.read_series("ghost/weights", "mean")
    with pytest.raises(NotFound):
        run.read_histo_series("ghost/weights")


def test_missing_run_raises(tmp_path):
    with pytest.raises(NotFound):
        RunLog(tmp_path, "nope")


def test_torn_tail_line_ignored(run):
    run.log_step(_state(1.0), 0)
    run.log_step(_state(2.0), 1)
    raw = run.log_path.read_text()
    run.log_path.write_text(raw + '{"step": 2, "node": "dense/weights", "st')
    reopened = RunLog(run.dir.parent, "r1")
    steps = [s for s, _ in reopened.read_series("dense/weights", "mean")]
    assert steps == [0, 1]
    # The torn line also doesn't block further appends.
    reopened.log_step(_state(3.0), 2)
    assert [s for s, _ in reopened.read_series("dense/weights", "mean")] == [0, 1, 2]


def test_duplicate_records_deduped_keep_first(run):
    run.log_step(_state(1.0), 0)
    rec = dict(json.loads(run.log_path.read_text().splitlines()[0]))
    rec["stats"]["mean"] = 99.0
    with open(run.log_path, "a") as fh:
        fh.write(json.dumps(rec) + "\n")
    reopened = RunLog(run.dir.parent, "r1")
    assert reopened.read_series(rec["node"], "mean")[0][1] != 99.0


def test_records_sorted_by_step(run):
    for step in (0, 1, 2):
        run.log_step(_state(float(step)), step)
    series = run.read_series("dense/weights", "mean")
    assert series == [(0, 0.0), (1, 1.0), (2, 2.0)]
    histos = run.read_histo_series("dense/weights")
    assert [s for s, _ in histos] == [0, 1, 2]
    assert all(len(h["edges"]) == HISTOGRAM_BINS + 1 for _, h in histos)


def test_checkpoints_round_trip(run):
    state = _state(4.0)
    run.save_checkpoint(state, 0)
    run.save_checkpoint(state, 10)
    run.save_checkpoint(state, 2)
    ckpts = run.checkpoints()
    assert list(ckpts) == [0, 2, 10]
    assert ckpts[10].name == "ckpt_10.emodel.json"
    loaded = load_model(ckpts[0])
    assert np.array_equal(loaded.parameters["dense"]["weights"], state.parameters["dense"]["weights"])


def test_list_runs(tmp_path):
    RunLog(tmp_path, "b", create=True)
    RunLog(tmp_path, "a", create=True)
    assert list_runs(tmp_path) == ["a", "b"]
    assert list_runs(tmp_path / "missing") == []


def test_graph_fingerprint_tracks_architecture():
    a = graph_fingerprint(_state(1.0))
    b = graph_fingerprint(_state(2.0))  # same graph, different parameters
    assert a == b
    other = graph_fingerprint(linear_state(np.ones((3, 1))))
    assert other != a
    assert len(a) == 16
