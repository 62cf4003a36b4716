import pytest
import numpy as np

from diracstab.core.numerics import Grid
from diracstab.core.nls import (
    assemble_nls, check_resolution, kernel_residuals, f0_closed, vk_verdict,
    vk_integral, kernel_group_size, limit_eigenvalue, limit_eigenvalue_block,
    spectral_structure, scaling_check, export_nls_summary,
)
from diracstab.utils.io.io import Io
from diracstab.utils.exception import ConfigurationError


TOL = 1e-12


def ops_for(k, points=1024, half_width=20.0):
    return assemble_nls(k, Grid(half_width, points))


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_kernel_identities(k):
    residuals = kernel_residuals(ops_for(k, 2048))
    assert residuals.r1 < 1e-6
    assert residuals.r2 < 1e-6
    assert residuals.r3 < 1e-5
    assert residuals.r4 < 1e-5
    assert residuals.r5 < 1e-5
    assert residuals.as_tuple() == (residuals.r1, residuals.r2, residuals.r3)


def test_kernel_identities_skip_truncated_rows():
    ops = ops_for(1, 2048)
    assert ops.interior == slice(3, 2045)
    assert assemble_nls(1, Grid(20.0, 2048), accuracy=4).interior == slice(2, 2046)

    boundary = np.abs(ops.Lminus.apply(ops.phi_hat)[:3]).max() / ops.phi_hat.max()
    assert boundary > 1e-6
    assert kernel_residuals(ops).r1 < 1e-6


def test_operators_are_symmetric():
    ops = ops_for(3, 512)
    np.testing.assert_allclose(ops.Lminus.matrix, ops.Lminus.matrix.T, rtol=0., atol=TOL)
    np.testing.assert_allclose(ops.Lplus.matrix, ops.Lplus.matrix.T, rtol=0., atol=TOL)
    np.testing.assert_array_equal(ops.phi_hat, ops.phi_hat[::-1])


def test_resolution_guard():
    with pytest.raises(ConfigurationError):
        assemble_nls(3, Grid(20.0, 200))
    with pytest.raises(ConfigurationError):
        assemble_nls(3, Grid(4.0, 1024))
    with pytest.raises(TypeError):
        assemble_nls(3.0, Grid(20.0, 1024))
    with pytest.raises(ConfigurationError):
        assemble_nls(0, Grid(20.0, 1024))
    check_resolution(1, Grid(20.0, 256))


def test_f0_closed_form():
    assert f0_closed(1) == pytest.approx(-1.0, abs=TOL)
    assert f0_closed(2) == 0.0
    assert f0_closed(3) > 0
    assert f0_closed(4) > 0


def test_vk_verdict():
    assert vk_verdict(1) == "stable-sign"
    assert vk_verdict(2) == "degenerate"
    assert vk_verdict(3) == "unstable-sign"
    assert vk_verdict(4) == "unstable-sign"


@pytest.mark.parametrize("k", [1, 3, 4])
def test_vk_integral(k):
    report = vk_integral(ops_for(k))
    assert report.f0_numeric == pytest.approx(report.f0_closed, abs=1e-5)
    assert np.sign(report.f0_numeric) == np.sign(f0_closed(k))
    assert report.q_slope == pytest.approx(1.0 / k - 0.5, abs=1e-10)


def test_kernel_group_size():
    assert kernel_group_size(2) == 3
    assert kernel_group_size(3) == 2


@pytest.mark.parametrize("k", [1, 2])
def test_no_limit_eigenvalue_below_k3(k):
    assert limit_eigenvalue(ops_for(k)) is None


def test_limit_eigenvalue_k3():
    Lambda = limit_eigenvalue(ops_for(3))
    assert Lambda is not None
    assert Lambda > 0
    assert limit_eigenvalue(ops_for(3, 2048)) == pytest.approx(Lambda, rel=1e-3)


def test_block_cross_check():
    ops = ops_for(3, 512)
    Lambda = limit_eigenvalue(ops)
    block = limit_eigenvalue_block(ops)
    assert block.Lambda == pytest.approx(Lambda, rel=1e-6)
    assert block.eigenvector_residual < 1e-6


def test_spectral_structure():
    structure = spectral_structure(ops_for(3))
    assert abs(structure.lminus_min) < 1e-5
    assert structure.lminus_ground_overlap == pytest.approx(1.0, abs=1e-6)
    assert structure.lplus_negative == 1
    assert structure.lplus_ground < 0
    assert structure.lplus_second_nodes == 1
    assert structure.lplus_second_overlap == pytest.approx(1.0, abs=1e-6)


def test_scaling_check():
    report = scaling_check(3, 0.99, Grid(150.0, 1024))
    assert report.eps2 == pytest.approx(0.02)
    assert report.lambda_x is not None
    assert report.relative_error < 1e-6

    stable = scaling_check(1, 0.99, Grid(150.0, 1024))
    assert stable.lambda_x is None and stable.Lambda is None
    assert stable.relative_error == 0.0

    with pytest.raises(ConfigurationError):
        scaling_check(3, 1.0, Grid(150.0, 1024))


def test_summary_export(tmp_path):
    ops = ops_for(3, 512)
    path = tmp_path / "nls.json"
    export_nls_summary(ops, path)
    summary = Io.get_io(path).blocking_load()
    assert summary["k"] == 3 and summary["N"] == 512
    assert summary["vk"]["verdict"] == "unstable-sign"
    assert summary["vk"]["consistent"]
    assert summary["Lambda"] > 0
    assert set(summary["kernel_residuals"]) == {"r1", "r2", "r3", "r4", "r5"}
