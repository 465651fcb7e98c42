import csv

import pytest

from crewpair.network import CostRules, LegalityRules
from crewpair.orchestrator import RunConfig, run
from crewpair.report import (
    CURVES_HEADER, SUMMARY_HEADER, TRACE_HEADER, read_trace, summary_rows, write_report,
)
from crewpair.vgae import VgaeConfig

from conftest import toy_generated


@pytest.fixture(scope="module")
def traces():
    net = toy_generated(0)
    cfg = dict(param1=8, max_columns=4, cg_patience=50, learning_first=2, vgae=VgaeConfig(epochs=20))
    return {name: run(net, LegalityRules(), CostRules(), RunConfig(learning_enabled=on, **cfg))
            for name, on in (("without", False), ("with", True))}


def rows_of(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_files_and_headers(traces, tmp_path):
    written = write_report(traces, tmp_path)
    names = {p.name for p in written}
    assert {"trace_with.csv", "trace_without.csv", "summary.csv", "curves.csv", "timing.csv",
            "curves.png", "audit_with.jsonl", "vgae_with.csv"} <= names
    assert all(p.exists() for p in written)
    assert rows_of(tmp_path / "trace_with.csv")[0] == TRACE_HEADER
    assert rows_of(tmp_path / "summary.csv")[0] == SUMMARY_HEADER
    assert rows_of(tmp_path / "curves.csv")[0] == CURVES_HEADER


def test_trace_rows_match_run(traces, tmp_path):
    write_report(traces, tmp_path, figures=False)
    rows = read_trace(tmp_path / "trace_with.csv")
    assert len(rows) == len(traces["with"].rows)
    assert [float(r["cost"]) for r in rows] == pytest.approx([r.cost for r in traces["with"].rows], rel=1e-6)
    assert not (tmp_path / "curves.png").exists()


def test_summary_layout_and_deltas(traces):
    rows = summary_rows(traces["without"], traces["with"])
    labels = [r[0] for r in rows]
    assert labels[0] == "initial" and labels[-1] == "final"
    assert labels[1:3] == ["main-lp", "main-ip"]
    for r in rows:
        if r[3] is not None and r[4] is not None:
            assert r[5] == pytest.approx(r[4] - r[3])
    final = rows[-1]
    assert final[3] == traces["without"].final_cost and final[6] == traces["without"].total_z


def test_single_arm_leaves_deltas_blank(traces, tmp_path):
    rows = summary_rows(traces["without"], None)
    assert all(r[4] is None and r[5] is None for r in rows)
    write_report({"without": traces["without"]}, tmp_path, figures=False)
    assert not (tmp_path / "trace_with.csv").exists()
    body = rows_of(tmp_path / "summary.csv")[1:]
    assert all(r[4] == "" and r[5] == "" for r in body)


def test_curves_cover_both_arms(traces, tmp_path):
    write_report(traces, tmp_path, figures=False)
    body = rows_of(tmp_path / "curves.csv")[1:]
    for name, t in traces.items():
        mine = [r for r in body if r[0] == name]
        assert len(mine) == len(t.rows)
        assert [int(r[1]) for r in mine] == list(range(len(t.rows)))
