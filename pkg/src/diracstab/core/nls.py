"""Linearization of the NLS limit.

On the ``y``-grid

.. math::

    \\hat L_- = -\\tfrac12\\partial_y^2 + \\tfrac12 - \\frac{k+1}{2\\cosh^2 ky}, \\qquad
    \\hat L_+ = -\\tfrac12\\partial_y^2 + \\tfrac12 - \\frac{(2k+1)(k+1)}{2\\cosh^2 ky},

with kernel ``phi = cosh^{-1/k}(ky)`` of ``L_-`` and ``phi'`` of ``L_+``. The
limit eigenvalue ``Lambda`` is the positive eigenvalue of
``[[0, L_-], [-L_+, 0]]``, found from ``L_- L_+ xi = -Lambda^2 xi``.
"""

import math
from dataclasses import dataclass
import numpy as np
import scipy.linalg
from diracstab.core.numerics import (
    Grid, LinearOperator, NumericalFailure, diff_matrix, dense_eigs, quadrature,
    interior_mass, even_fold,
)
from diracstab.core.profiles import sech, sech_power_integral, nls_charge
from diracstab.utils.io.io import Io
from diracstab.utils.logger import Logger
from diracstab.utils.exception import ConfigurationError


LOCALIZATION = 0.99
"""float: Share of the norm inside ``|y| <= L/2`` required of the eigenvector of ``Lambda``."""

SIGMA_FLOOR = 1e-6
"""float: Smallest ``|sigma|`` accepted as a negative eigenvalue of ``L_- L_+``."""

_logger = Logger("nls")


@dataclass(frozen=True, eq=False)
class NlsOperators:
    """Discretized hat operators with their kernel functions."""

    k: int
    grid: Grid
    Lminus: LinearOperator
    Lplus: LinearOperator
    phi_hat: np.ndarray
    """:obj:`numpy.ndarray`: ``cosh^{-1/k}(ky)``."""
    theta_hat: np.ndarray
    """:obj:`numpy.ndarray`: ``-y sinh(ky) / cosh^{1+1/k}(ky)``."""
    dphi_hat: np.ndarray
    """:obj:`numpy.ndarray`: ``phi'`` in closed form."""
    accuracy: int = 6
    """:obj:`int`: Accuracy order of the second difference."""

    @property
    def interior(self):
        """:obj:`slice`: Rows whose stencil lies inside the grid."""
        margin = self.accuracy // 2
        return slice(margin, self.grid.points - margin)


@dataclass(frozen=True)
class KernelResiduals:
    """Relative sup-norm residuals of the kernel identities."""

    r1: float
    """:obj:`float`: ``L_- phi = 0``."""
    r2: float
    """:obj:`float`: ``L_+ phi' = 0``."""
    r3: float
    """:obj:`float`: ``L_+(-theta - phi/k) = phi``."""
    r4: float
    """:obj:`float`: ``L_+ phi = -k(k+1) sech^2(ky) phi``."""
    r5: float
    """:obj:`float`: ``L_+ theta = (-1 + (k+1) sech^2(ky)) phi``."""

    def as_tuple(self):
        return self.r1, self.r2, self.r3


@dataclass(frozen=True)
class VkReport:
    """Vakhitov-Kolokolov data of the NLS limit."""

    k: int
    f0_numeric: float
    """:obj:`float`: ``<phi, L_+^{-1} phi>`` on even functions."""
    f0_closed: float
    """:obj:`float`: ``(1/2 - 1/k)(1/k) \\int cosh^{-2/k} z dz``."""
    q_slope: float
    """:obj:`float`: ``d log Q / d log eps^2``."""
    verdict: str
    """:obj:`str`: ``stable-sign``, ``degenerate`` or ``unstable-sign``."""


@dataclass(frozen=True)
class StructureReport:
    """Low spectrum of the self-adjoint hat operators."""

    lminus_min: float
    lminus_ground_overlap: float
    """:obj:`float`: ``|<ground state, phi>|`` for unit vectors."""
    lplus_negative: int
    lplus_ground: float
    lplus_second_nodes: int
    lplus_second_overlap: float
    """:obj:`float`: ``|<second state, phi'>|`` for unit vectors."""


@dataclass(frozen=True)
class BlockCheck:
    """Cross-check of ``Lambda`` on the ``2N`` block system."""

    Lambda: object
    """:obj:`Union[float, None]`: Largest localized positive real eigenvalue of the block."""
    eigenvector_residual: float
    """:obj:`float`: Residual of ``[Lambda xi; -L_+ xi]`` built from the product reduction."""


@dataclass(frozen=True)
class ScalingReport:
    """Unscaled NLS eigenvalue against ``eps^2 Lambda``."""

    k: int
    omega: float
    eps2: float
    lambda_x: object
    Lambda: object

    @property
    def relative_error(self):
        """:obj:`Union[float, None]`: ``|lambda / (eps^2 Lambda) - 1|``, zero when both are absent."""
        if self.lambda_x is None and self.Lambda is None:
            return 0.0
        if self.lambda_x is None or self.Lambda is None:
            return None
        return abs(self.lambda_x / (self.eps2 * self.Lambda) - 1.0)


def check_resolution(k, grid):
    """Raises :class:`ConfigurationError` unless ``h*k <= 0.25`` and ``L*k >= 15``."""
    if grid.spacing * k > 0.25:
        raise ConfigurationError(f"h*k = {grid.spacing * k:.3g} exceeds 0.25")
    if grid.half_width * k < 15:
        raise ConfigurationError(f"L*k = {grid.half_width * k:.3g} is below 15")


def _schroedinger(grid, potential, accuracy):
    d2 = diff_matrix(grid, 2, accuracy=accuracy).matrix
    return -0.5 * d2 + np.diag(potential)


def assemble_nls(k, grid, accuracy=6):
    """Assembles the hat operators.

    Args:
        k (:obj:`int`): Exponent.
        grid (:obj:`Grid`): Grid in ``y``.
        accuracy (:obj:`int`): Accuracy order of the second difference.

    Returns:
        :class:`NlsOperators`.

    Raises:
        :class:`ConfigurationError`
    """
    if isinstance(k, bool) or not isinstance(k, int):
        raise TypeError(f"k must be an int, not {type(k)}")
    if k < 1:
        raise ConfigurationError(f"k must be at least 1, not {k}")
    check_resolution(k, grid)

    y = grid.nodes
    s2 = sech(k * y) ** 2
    lminus = _schroedinger(grid, 0.5 - (k + 1) / 2.0 * s2, accuracy)
    lplus = _schroedinger(grid, 0.5 - (2 * k + 1) * (k + 1) / 2.0 * s2, accuracy)
    phi = sech(k * y) ** (1.0 / k)
    dphi = -np.tanh(k * y) * phi
    theta = y * dphi

    return NlsOperators(
        k, grid, LinearOperator(lminus, grid, ("R",)), LinearOperator(lplus, grid, ("R",)),
        phi, theta, dphi, accuracy,
    )


def kernel_residuals(ops):
    """Residuals of the kernel identities of the hat operators.

    Measured on :py:attr:`NlsOperators.interior`: the truncated boundary
    rows see the tail of the profile outside the grid.

    Returns:
        :class:`KernelResiduals`.
    """
    k, y = ops.k, ops.grid.nodes
    phi, dphi, theta = ops.phi_hat, ops.dphi_hat, ops.theta_hat
    s2 = sech(k * y) ** 2
    norm = np.abs(phi).max()

    def sup(vector):
        return float(np.abs(vector[ops.interior]).max())

    return KernelResiduals(
        r1=sup(ops.Lminus.apply(phi)) / norm,
        r2=sup(ops.Lplus.apply(dphi)) / sup(dphi),
        r3=sup(ops.Lplus.apply(-theta - phi / k) - phi) / norm,
        r4=sup(ops.Lplus.apply(phi) + k * (k + 1) * s2 * phi) / norm,
        r5=sup(ops.Lplus.apply(theta) - (-1.0 + (k + 1) * s2) * phi) / norm,
    )


def f0_closed(k):
    """``<phi, L_+^{-1} phi> = (1/2 - 1/k) \\int phi^2 dy`` in closed form."""
    if k == 2:
        return 0.0
    return (0.5 - 1.0 / k) * sech_power_integral(2.0 / k) / k


def vk_verdict(k):
    """Sign of ``Q'(omega)`` in the NLS limit."""
    if k < 2:
        return "stable-sign"
    if k == 2:
        return "degenerate"
    return "unstable-sign"


def vk_integral(ops):
    """Vakhitov-Kolokolov integral ``f(0)``.

    ``L_+ w = phi`` is solved on even grid functions, where ``L_+`` is
    invertible.

    Returns:
        :class:`VkReport`.

    Raises:
        :class:`NumericalFailure`
    """
    restrict, extend = even_fold(ops.grid)
    reduced = restrict @ ops.Lplus.matrix @ extend
    try:
        w = extend @ scipy.linalg.solve(reduced, restrict @ ops.phi_hat)
    except np.linalg.LinAlgError as e:
        raise NumericalFailure(f"Even-restricted L_+ is singular:\n{e}", reduced.shape[0]) from e

    eps2 = np.array([0.01, 0.02])
    charges = [nls_charge(ops.k, 1.0, 1.0 - e / 2.0) for e in eps2]
    q_slope = float(np.diff(np.log(charges))[0] / np.diff(np.log(eps2))[0])

    return VkReport(
        ops.k, quadrature(ops.grid, ops.phi_hat * w), f0_closed(ops.k), q_slope, vk_verdict(ops.k),
    )


def kernel_group_size(k):
    """Number of eigenvalues of ``L_- L_+`` in the generalized kernel."""
    return 3 if k == 2 else 2


def product_eigenvalue(lminus, lplus, grid, group_size):
    """Most negative localized eigenvalue of ``lminus @ lplus``.

    Returns:
        :obj:`tuple` ``(sigma, xi, threshold)``; ``sigma`` and ``xi`` are
        ``None`` if there is none below ``-threshold``.
    """
    eigen = dense_eigs(lminus @ lplus, want_vectors=True)
    values = eigen.values
    order = np.argsort(np.abs(values))
    threshold = max(SIGMA_FLOOR, 10.0 * float(np.abs(values[order[:group_size]]).max()))

    best, vector = None, None
    for i in order[group_size:]:
        sigma = values[i]
        if abs(sigma.imag) > 1e-8 * max(1.0, abs(sigma)) or not sigma.real < -threshold:
            continue
        xi = eigen.vectors[:, i]
        if interior_mass(grid, xi) < LOCALIZATION:
            continue
        if best is None or sigma.real < best:
            best, vector = float(sigma.real), np.real_if_close(xi / xi[np.argmax(np.abs(xi))]).real
    _logger.debug(f"product spectrum threshold {threshold:.3e}, sigma={best}")
    return best, vector, threshold


def limit_eigenvalue(ops):
    """Positive eigenvalue ``Lambda`` of the limit block operator.

    Returns:
        :obj:`Union[float, None]`.
    """
    with _logger.timed(f"Lambda k={ops.k} N={ops.grid.points}"):
        sigma, _, _ = product_eigenvalue(
            ops.Lminus, ops.Lplus, ops.grid, kernel_group_size(ops.k)
        )
    return None if sigma is None else math.sqrt(-sigma)


def limit_eigenvalue_block(ops):
    """Cross-checks ``Lambda`` on ``[[0, L_-], [-L_+, 0]]``.

    Returns:
        :class:`BlockCheck`.
    """
    n = ops.grid.points
    lm, lp = ops.Lminus.matrix, ops.Lplus.matrix
    block = np.block([[np.zeros((n, n)), lm], [-lp, np.zeros((n, n))]])
    eigen = dense_eigs(block, want_vectors=True)

    sigma, xi, threshold = product_eigenvalue(ops.Lminus, ops.Lplus, ops.grid, kernel_group_size(ops.k))
    cutoff = math.sqrt(threshold)
    candidates = [
        value.real for i, value in enumerate(eigen.values)
        if value.real > cutoff and abs(value.imag) <= 1e-8 * abs(value)
        and interior_mass(ops.grid, eigen.vectors[:, i]) >= LOCALIZATION
    ]
    Lambda = max(candidates) if candidates else None

    residual = float("nan")
    if sigma is not None:
        lam = math.sqrt(-sigma)
        eta = np.concatenate([lam * xi, -lp @ xi])
        residual = float(np.linalg.norm(block @ eta - lam * eta) / np.linalg.norm(eta))
    return BlockCheck(Lambda, residual)


def spectral_structure(ops):
    """Low eigenpairs of ``L_-`` and ``L_+``.

    Returns:
        :class:`StructureReport`.
    """
    lm_values, lm_vectors = scipy.linalg.eigh(ops.Lminus.matrix, subset_by_index=[0, 1])
    lp_values, lp_vectors = scipy.linalg.eigh(ops.Lplus.matrix, subset_by_index=[0, 2])
    phi = ops.phi_hat / np.linalg.norm(ops.phi_hat)
    dphi = ops.dphi_hat / np.linalg.norm(ops.dphi_hat)

    second = lp_vectors[:, 1]
    significant = second[np.abs(second) > 1e-6 * np.abs(second).max()]
    nodes = int(np.count_nonzero(np.diff(np.sign(significant)) != 0))

    return StructureReport(
        lminus_min=float(lm_values[0]),
        lminus_ground_overlap=float(abs(lm_vectors[:, 0] @ phi)),
        lplus_negative=int(np.count_nonzero(lp_values < -1e-6)),
        lplus_ground=float(lp_values[0]),
        lplus_second_nodes=nodes,
        lplus_second_overlap=float(abs(second @ dphi)),
    )


def scaling_check(k, omega, grid):
    """Unscaled NLS linearization on an ``x``-grid against ``eps^2 Lambda``.

    With ``m = 1`` and ``eps^2 = 2(1 - omega)`` the unscaled operators are
    ``-1/2 d_x^2 + (1 - omega) - c (1 - omega) sech^2(k eps x)`` with
    ``c = k+1`` and ``c = (2k+1)(k+1)``. ``Lambda`` is computed on the
    ``y = eps x`` image of ``grid``.

    Returns:
        :class:`ScalingReport`.

    Raises:
        :class:`ConfigurationError`
    """
    if not 0.0 < omega < 1.0:
        raise ConfigurationError(f"omega must be in (0, 1), not {omega}")
    eps2 = 2.0 * (1.0 - omega)
    eps = math.sqrt(eps2)
    y_grid = grid.scaled(eps)
    ops = assemble_nls(k, y_grid)

    s2 = sech(k * eps * grid.nodes) ** 2
    gap = 1.0 - omega
    lminus = LinearOperator(_schroedinger(grid, gap - (k + 1) * gap * s2, 6), grid, ("R",))
    lplus = LinearOperator(_schroedinger(grid, gap - (2 * k + 1) * (k + 1) * gap * s2, 6), grid, ("R",))
    sigma, _, _ = product_eigenvalue(lminus, lplus, grid, kernel_group_size(k))

    return ScalingReport(
        k, float(omega), eps2, None if sigma is None else math.sqrt(-sigma), limit_eigenvalue(ops),
    )


def nls_summary(ops):
    """Collects every NLS-limit check into a JSON-ready dict."""
    residuals = kernel_residuals(ops)
    vk = vk_integral(ops)
    Lambda = limit_eigenvalue(ops)
    block = limit_eigenvalue_block(ops)
    structure = spectral_structure(ops)
    return {
        "k": ops.k,
        "N": ops.grid.points,
        "L": ops.grid.half_width,
        "kernel_residuals": vars(residuals),
        "vk": {
            "f0_numeric": vk.f0_numeric,
            "f0_closed": vk.f0_closed,
            "q_slope": vk.q_slope,
            "verdict": vk.verdict,
            "consistent": (vk.verdict == "unstable-sign") == (Lambda is not None),
        },
        "Lambda": Lambda,
        "Lambda_block": block.Lambda,
        "block_eigenvector_residual": None if math.isnan(block.eigenvector_residual) else block.eigenvector_residual,
        "structure": vars(structure),
    }


def export_nls_summary(ops, path):
    """Writes :func:`nls_summary` to a ``.json`` file."""
    Io.get_io(path).blocking_dump(nls_summary(ops))
