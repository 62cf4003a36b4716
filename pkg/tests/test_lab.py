import filecmp

import pytest
import numpy as np

from diracstab.core.numerics import Grid
from diracstab.lab.config import ScanConfig, auto_grid, DENSE_LIMIT, CHECKS
from diracstab.lab.scan import (
    ScanRow, point_arguments, run_point, run_scan, charge_slope, free_gap_error,
    convergence_study, spectrum_filename, is_converged, DRIFT_TOLERANCE, WIDTH_TOLERANCE,
)
from diracstab.utils.io.io import Io
from diracstab.utils.metadata import MetaDataError, IncorrectProperty
from diracstab.utils.exception import DiracStabException, ConfigurationError


def test_auto_grid():
    grid = auto_grid(np.sqrt(0.19))
    assert grid.half_width == 69.0
    assert grid.spacing <= 0.02 / np.sqrt(0.19)
    assert auto_grid(1.0).spacing <= 0.02
    assert auto_grid(0.01).points == DENSE_LIMIT
    assert auto_grid(0.01, 1000).points == 1000
    with pytest.raises(ConfigurationError):
        auto_grid(0.0)


def test_config_defaults():
    config = ScanConfig({"omegas": [0.95, 0.9]})
    assert config.k == 3
    assert config.m == 1.0
    assert config.N == "auto"
    assert config.checks == list(CHECKS)
    assert config.omega_list == [0.9, 0.95]
    assert config.model.k == 3
    data = config.to_dict()
    assert data["k"] == 3 and data["Lambda_N"] == 1024
    assert "out" not in data


@pytest.mark.parametrize("data", [
    {"k": 0},
    {"k": 2.5},
    {"a": -1.0},
    {"bogus": 1},
    {"omegas": [1.2]},
    {"omegas": []},
    {"m": 2.0, "omega_min": 2.5},
    {"spacing": "log"},
    {"N": 8},
    {"N": "many"},
    {"checks": ["profile", "plots"]},
    {"higher_exponents": [4.0], "higher_coefficients": []},
    {"jobs": 0},
])
def test_config_rejects(data):
    with pytest.raises(IncorrectProperty):
        ScanConfig(data)


def test_frequency_ranges():
    linear = ScanConfig({"omega_min": 0.9, "omega_max": 0.98, "count": 3})
    np.testing.assert_allclose(linear.omega_list, [0.9, 0.94, 0.98], rtol=0., atol=1e-14)

    geometric = ScanConfig({"omega_min": 0.99, "omega_max": 0.9999, "count": 5, "spacing": "geometric"})
    gaps = 1.0 - np.array(geometric.omega_list)
    np.testing.assert_allclose(gaps[:-1] / gaps[1:], np.full(4, 10 ** 0.5), rtol=1e-10)

    assert ScanConfig({"omega_min": 0.9, "omega_max": 0.95}).omega_list == [0.9]

    with pytest.raises(MetaDataError):
        ScanConfig({}).omega_list
    with pytest.raises(MetaDataError):
        ScanConfig({"omega_min": 0.95, "omega_max": 0.9, "count": 2}).omega_list


def test_config_grid():
    config = ScanConfig({"omegas": [0.9]})
    assert config.grid(0.9).half_width == auto_grid(np.sqrt(0.19)).half_width

    massive = ScanConfig({"m": 2.0, "omegas": [1.8]})
    assert massive.grid(1.8).half_width == auto_grid(np.sqrt(0.19)).half_width / 2.0

    fixed = ScanConfig({"omegas": [0.9], "N": 512, "L": 40.0})
    grid = fixed.grid(0.9)
    assert (grid.points, grid.half_width) == (512, 40.0)


def test_config_files(tmp_path):
    path = tmp_path / "run.toml"
    ScanConfig({"k": 4, "omegas": [0.9], "checks": ["spectrum", "profile"]}).dump(path)
    config = ScanConfig.from_file(path, {"k": 5, "N": None})
    assert config.k == 5
    assert config.checks == ["profile", "spectrum"]
    assert config.N == "auto"
    assert config.output_dir(tmp_path / "default") == tmp_path / "default"

    yaml_path = tmp_path / "run.yaml"
    yaml_path.write_text("k: 1\nomegas: [0.5]\nout: results\n")
    config = ScanConfig.from_file(yaml_path)
    assert config.k == 1
    assert str(config.output_dir(tmp_path)) == "results"


def test_immutable_config():
    config = ScanConfig({"omegas": [0.9]}, mutable=False)
    with pytest.raises(MetaDataError):
        config.k = 4


def test_scan_row_columns():
    row = ScanRow(0.9, 128, 35.0, runtimes={"profile": 0.1})
    columns = ScanRow.columns()
    assert "runtimes" not in columns
    assert columns[:3] == ["omega", "N", "L"]
    assert row.record()["verdict"] == "unchecked"
    assert set(row.record()) == set(columns)


def test_run_point_maps_units():
    config = ScanConfig({"k": 3, "m": 2.0, "a": 0.5, "omegas": [1.8], "checks": ["profile"]})
    row, report = run_point(point_arguments(config, 1.8))
    normal, _ = run_point(point_arguments(ScanConfig({"omegas": [0.9], "checks": ["profile"]}), 0.9))
    scale = (2.0 / 0.5) ** (1.0 / 3.0)
    assert report is None
    assert row.status == "ok"
    assert row.eps == pytest.approx(normal.eps)
    assert row.gamma == pytest.approx(scale * normal.gamma, rel=1e-8)
    assert row.Q == pytest.approx(scale * normal.Q / 2.0, rel=1e-8)


def test_run_point_reports_failures():
    config = ScanConfig({"omegas": [0.9], "N": 64, "L": 5.0, "checks": ["profile"]})
    row, report = run_point(point_arguments(config, 0.9))
    assert row.status == "failed"
    assert row.message.startswith("DomainTooSmallError")
    assert report is None
    with pytest.raises(DiracStabException):
        run_point(point_arguments(config, 0.9, debug=True))


def test_run_scan_writes_files(tmp_path):
    config = ScanConfig({"k": 3, "omegas": [0.95, 0.9], "checks": ["profile"]})
    rows = run_scan(config, tmp_path)
    assert [row.omega for row in rows] == [0.9, 0.95]
    assert all(row.status == "ok" for row in rows)

    scan = Io.get_io(tmp_path / "scan.csv").blocking_load()
    assert list(scan["table"].columns) == ScanRow.columns()
    assert scan["meta"]["Lambda"] == "None"
    assert scan["meta"]["omega_0"] == "0.9"
    assert list(scan["table"]["verdict"]) == ["unchecked", "unchecked"]
    assert (tmp_path / "runtimes.csv").exists()
    assert ScanConfig.from_file(tmp_path / "config.toml").omega_list == [0.9, 0.95]
    assert not (tmp_path / spectrum_filename(0.9)).exists()


def test_run_scan_with_workers_matches_serial(tmp_path):
    data = {"k": 3, "omegas": [0.9, 0.93, 0.96], "checks": ["profile"]}
    run_scan(ScanConfig(data), tmp_path / "serial")
    run_scan(ScanConfig({**data, "jobs": 2}), tmp_path / "parallel")
    assert filecmp.cmp(tmp_path / "serial" / "scan.csv", tmp_path / "parallel" / "scan.csv", shallow=False)


def test_charge_slope_needs_geometric_range():
    with pytest.raises(ConfigurationError):
        charge_slope(ScanConfig({"omegas": [0.99, 0.999, 0.9999]}))
    with pytest.raises(ConfigurationError):
        charge_slope(ScanConfig({"omega_min": 0.99, "omega_max": 0.9999, "count": 4}))


def test_charge_slope_k1():
    config = ScanConfig({
        "k": 1, "omega_min": 0.99, "omega_max": 0.9999, "count": 6, "spacing": "geometric",
    })
    fit = charge_slope(config)
    assert fit.target == 0.5
    assert len(fit.charges) == 6
    assert fit.error < 0.05


@pytest.mark.parametrize("k, target", [(2, 0.0), (3, -1.0 / 6.0), (4, -0.25)])
def test_charge_slope(k, target):
    config = ScanConfig({
        "k": k, "omega_min": 0.99, "omega_max": 0.9999, "count": 6, "spacing": "geometric",
    })
    fit = charge_slope(config)
    assert fit.target == pytest.approx(target)
    assert fit.error < 0.02
    if k == 2:
        assert fit.spread < 0.02


def test_free_gap_error():
    assert 0.0 <= free_gap_error(0.9, Grid(35.0, 401)) < 0.2


def test_convergence_study_needs_one_frequency():
    with pytest.raises(ConfigurationError):
        convergence_study(ScanConfig({"omegas": [0.9, 0.95]}))


def test_convergence_study_stable_case():
    config = ScanConfig({
        "k": 1, "omegas": [0.9], "L": 35.0, "checks": ["profile", "spectrum"], "Lambda_N": 512,
    })
    study = convergence_study(config, points=(384, 512, 640))
    assert list(study.table["refine"]) == ["N", "N", "N", "L"]
    assert list(study.table["N"]) == [384, 512, 640, 1023]
    assert study.table["L"].iloc[-1] == 70.0
    assert list(study.table["status"]) == ["ok"] * 4
    assert study.converged


def refinement(kind, value, drift, status="ok"):
    return {"refine": kind, "lambda_unstable": value, "drift": drift, "status": status}


def test_is_converged():
    rows = [refinement("N", 0.1140, None), refinement("N", 0.11401, 1e-4)]
    assert is_converged(rows)
    assert is_converged(rows + [refinement("L", 0.11401, 1e-9)])
    assert not is_converged(rows + [refinement("L", 0.1141, 1e-4)])
    assert not is_converged(rows + [refinement("L", None, None)])
    assert not is_converged([refinement("N", 0.1, None), refinement("N", 0.11, 0.1)])
    assert not is_converged([refinement("N", 0.1, None)])
    assert is_converged([refinement("N", None, None), refinement("L", None, None)])
    assert not is_converged([refinement("N", None, None, "failed")])


def test_convergence_study_doubles_width():
    config = ScanConfig({
        "k": 3, "omegas": [0.9], "L": 35.0, "checks": ["profile", "spectrum"], "Lambda_N": 512,
    })
    study = convergence_study(config, points=(384, 512))
    table = study.table
    assert list(table["refine"]) == ["N", "N", "L"]
    assert list(table["N"]) == [384, 512, 1023]
    assert table["h"].iloc[2] == pytest.approx(table["h"].iloc[1])
    assert table["lambda_unstable"].iloc[2] == pytest.approx(table["lambda_unstable"].iloc[1], rel=WIDTH_TOLERANCE)
    assert table["drift"].iloc[2] < WIDTH_TOLERANCE
    assert study.converged == bool(table["drift"].iloc[1] < DRIFT_TOLERANCE)


def test_run_scan_spectrum_in_physical_units(tmp_path):
    data = {"k": 3, "N": 401, "checks": ["profile", "spectrum"], "Lambda_N": 512}
    heavy = run_scan(ScanConfig({**data, "m": 2.0, "L": 17.5, "omegas": [1.8]}), tmp_path / "heavy")
    unit = run_scan(ScanConfig({**data, "L": 35.0, "omegas": [0.9]}), tmp_path / "unit")

    spectrum = Io.get_io(tmp_path / "heavy" / spectrum_filename(1.8)).blocking_load()
    reference = Io.get_io(tmp_path / "unit" / spectrum_filename(0.9)).blocking_load()
    assert float(spectrum["meta"]["omega"]) == pytest.approx(1.8)
    assert float(spectrum["meta"]["gap_edge"]) == pytest.approx(0.2)
    assert float(spectrum["meta"]["embedded_threshold"]) == pytest.approx(3.8)
    for column in ("re_lambda", "im_lambda"):
        assert np.allclose(spectrum["table"][column], 2.0 * reference["table"][column], rtol=1e-12, atol=1e-14)
    assert list(spectrum["table"]["class"]) == list(reference["table"]["class"])

    assert heavy[0].eps == pytest.approx(unit[0].eps)
    if unit[0].lambda_unstable is not None:
        assert heavy[0].lambda_unstable == pytest.approx(2.0 * unit[0].lambda_unstable)
        assert heavy[0].mu0 == pytest.approx(unit[0].mu0)
