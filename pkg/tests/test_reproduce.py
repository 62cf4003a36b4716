import pytest
import numpy as np
import pandas as pd

from diracstab.lab.reproduce import ClaimSuite, claim_grid, reproduce_claims
from diracstab.utils.io.io import Io
from diracstab.utils.exception import DiracStabException


IDS = [cid for cid, _ in ClaimSuite.CRITERIA]


def stub_suite(monkeypatch, failing=()):
    def passing(self):
        return {"value": np.float64(1.5)}, "value > 1", np.bool_(True)

    def failing_criterion(self):
        raise DiracStabException("no eigenvalue")

    for cid in IDS:
        method = failing_criterion if cid in failing else passing
        monkeypatch.setattr(ClaimSuite, cid.lower(), method)


def test_claim_grid():
    grid = claim_grid(0.9)
    assert grid.half_width == 46.0
    assert grid.points == 2048
    assert claim_grid(0.9, points=256, width=10.0).half_width == 23.0


def test_criteria_ids():
    assert IDS == [f"AC{i}" for i in range(1, 11)]


def test_run_keeps_going_after_failure(monkeypatch):
    stub_suite(monkeypatch, failing=("AC3",))
    results = ClaimSuite().run()
    assert [r["id"] for r in results] == IDS
    by_id = {r["id"]: r for r in results}
    assert not by_id["AC3"]["pass"]
    assert by_id["AC3"]["measured"] == {"error": "no eigenvalue"}
    assert by_id["AC3"]["target"] is None
    assert all(by_id[cid]["pass"] for cid in IDS if cid != "AC3")
    assert by_id["AC1"]["measured"]["values"] == {"value": 1.5}
    assert by_id["AC1"]["measured"]["runtime"] >= 0.0


def test_run_in_debug_mode_raises(monkeypatch):
    stub_suite(monkeypatch, failing=("AC5",))
    with pytest.raises(DiracStabException):
        ClaimSuite(debug=True).run()


def test_reproduce_claims_writes_summary(monkeypatch, tmp_path):
    stub_suite(monkeypatch, failing=("AC7",))
    table = pd.DataFrame({"re_lambda": [0.1], "im_lambda": [0.0], "class": ["real-unstable"], "localization": [1.0]})
    monkeypatch.setattr(ClaimSuite, "figure_table", lambda self: {"meta": {"k": 3}, "table": table})

    summary = reproduce_claims(tmp_path / "out")
    assert not summary["passed"]
    written = Io.get_io(tmp_path / "out" / "summary.json").blocking_load()
    assert written == summary
    assert [c["id"] for c in written["criteria"] if not c["pass"]] == ["AC7"]
    figure = Io.get_io(tmp_path / "out" / "figure1_data.csv").blocking_load()
    assert figure["meta"] == {"k": "3"}
    assert list(figure["table"]["class"]) == ["real-unstable"]


def test_reproduce_claims_survives_missing_figure(monkeypatch, tmp_path):
    stub_suite(monkeypatch)

    def broken(self):
        raise DiracStabException("profile failed")

    monkeypatch.setattr(ClaimSuite, "figure_table", broken)
    summary = reproduce_claims(tmp_path)
    assert summary["passed"]
    assert (tmp_path / "summary.json").exists()
    assert not (tmp_path / "figure1_data.csv").exists()


def test_vk_criterion():
    measured, target, passed = ClaimSuite().ac2()
    assert set(measured) == {"k=1", "k=3", "k=4", "f0_closed(k=2)", "f0_closed(k=1)"}
    assert measured["f0_closed(k=2)"] == 0.0
    assert measured["f0_closed(k=1)"] == pytest.approx(-1.0)
    assert measured["k=1"]["f0_numeric"] < 0
    assert measured["k=3"]["f0_numeric"] > 0
    assert isinstance(target, str)
