"""Linearization of the nonlinear Dirac equation about a solitary wave.

Perturbations ``(R, S)`` of a wave ``(v, u)`` evolve by
``d/dt [R; S] = [[0, L_-], [-L_+, 0]] [R; S]`` with

.. math::

    L_- = \\begin{bmatrix} m-\\omega-f & \\partial_x \\\\ -\\partial_x & -m-\\omega+f \\end{bmatrix},
    \\qquad
    L_+ = L_- + 2f' \\begin{bmatrix} -v^2 & vu \\\\ vu & -u^2 \\end{bmatrix},

``f`` and ``f'`` taken at ``X = v^2 - u^2``. Eigenvalues are computed through
``-L_- L_+ R = lambda^2 R``. Every mass entry carries the Wilson correction of
:func:`diracstab.core.numerics.wilson_matrix`.

Near ``omega = 1`` the unstable pair is ``O(eps^2)``; the rescaled problem in
``y = eps x`` with unknowns ``(R_1, R_2/eps, S_1, S_2/eps)`` resolves it as
``nu = lambda/eps^2``.
"""

from dataclasses import dataclass, field, replace
import numpy as np
import pandas as pd
import scipy.sparse
from diracstab.core.numerics import (
    Grid, LinearOperator, diff_matrix, wilson_matrix, dense_eigs, interior_mass, set_distance,
)
from diracstab.core.profiles import nls_density
from diracstab.utils.io.io import Io
from diracstab.utils.logger import Logger
from diracstab.utils.exception import DiracStabException, ConfigurationError


class DetectionError(DiracStabException):
    """No unstable eigenvalue where one was expected.

    Attributes:
        nearest (:obj:`list` of :obj:`complex`): Three eigenvalues closest to the target.
    """

    def __init__(self, message, nearest=()):
        super().__init__(f"{message}; nearest: {', '.join(f'{z:.6g}' for z in nearest)}")
        self.message = message
        self.nearest = list(nearest)

    def __reduce__(self):
        return DetectionError, (self.message, self.nearest)


WILSON_STRENGTH = 0.1
"""float: Coefficient of the Wilson mass correction."""

LOCALIZED = 0.9
"""float: Share of the norm inside ``|x| <= L/2`` of a point eigenvector."""

KERNEL_SIZE = 4
"""int: Algebraic multiplicity of zero kept by the near-zero cluster."""

CLASSES = ("near-zero", "exact-pair-2omega", "essential-proxy", "real-unstable", "imaginary-point", "other")
"""tuple: Eigenvalue classes of :class:`SpectrumReport`."""

_logger = Logger("dirac")


@dataclass(frozen=True, eq=False)
class DiracBlocks:
    """Discretized ``L_-`` and ``L_+`` of a wave, ``2N x 2N`` each in ``(v, u)`` layout."""

    wave: object
    omega: float
    grid: Grid
    Lminus: LinearOperator
    Lplus: LinearOperator
    potentials: dict
    """:obj:`dict`: ``f``, ``df``, ``fv2``, ``fu2``, ``fvu`` sampled on the grid (``f*`` include ``f'``)."""


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Classified spectrum of the linearization."""

    omega: float
    k: int
    m: float
    eps_dirac: float
    eigenvalues: np.ndarray
    classes: list
    localization: np.ndarray
    tol0: float
    """:obj:`float`: Radius of the near-zero class."""
    near_zero_radius: float
    residual_bound: float
    symmetry_defect: float
    lambda_unstable: object = None
    """:obj:`Union[float, None]`: Positive real unstable eigenvalue."""
    mu0: object = None
    """:obj:`Union[float, None]`: ``lambda/eps^2 - Lambda``."""
    annotations: dict = field(default_factory=dict)
    """:obj:`dict`: Gap edge ``m - omega`` and embedded threshold ``m + omega`` on the imaginary axis."""

    def count(self, name):
        """Number of eigenvalues of class ``name``."""
        return sum(1 for c in self.classes if c == name)

    def of_class(self, name):
        return self.eigenvalues[[c == name for c in self.classes]]

    def two_omega_error(self):
        """Relative distance of the closest eigenvalues to ``+2 omega i`` and ``-2 omega i``."""
        target = 2.0 * self.omega
        return max(
            float(np.abs(self.eigenvalues - 1j * target).min()),
            float(np.abs(self.eigenvalues + 1j * target).min()),
        ) / target

    def to_table(self):
        """:obj:`pandas.DataFrame` with ``re_lambda,im_lambda,class,localization``."""
        return pd.DataFrame({
            "re_lambda": self.eigenvalues.real,
            "im_lambda": self.eigenvalues.imag,
            "class": list(self.classes),
            "localization": self.localization,
        })


@dataclass(frozen=True, eq=False)
class RescaledProblem:
    """``C eta = nu D eta`` on the ``y``-grid with unknowns ``(R_1, R_2/eps, S_1, S_2/eps)``."""

    k: int
    omega: float
    eps: float
    grid_y: Grid
    Lambda: float
    C_matrix: scipy.sparse.csr_matrix
    """:obj:`scipy.sparse.csr_matrix`: ``4N x 4N`` rescaled operator without the Wilson part."""
    C_stab: scipy.sparse.csr_matrix
    """:obj:`scipy.sparse.csr_matrix`: Wilson part of the rescaled operator."""
    D_diag: np.ndarray
    """:obj:`numpy.ndarray`: Diagonal of ``K_1 + eps^2 K_2``."""
    A_Lambda_limit: scipy.sparse.csr_matrix
    """:obj:`scipy.sparse.csr_matrix`: Limit matrix ``A_0 - Lambda K_1``."""
    W: np.ndarray
    """:obj:`numpy.ndarray`: ``N x 4 x 4`` pointwise coefficient of ``A_0 - C``."""
    W_nls: np.ndarray
    """:obj:`numpy.ndarray`: The same with ``X -> eps^{2/k} U(eps x)``, ``u = 0``."""
    d1: scipy.sparse.csr_matrix = field(repr=False, default=None)


def _wave_potentials(model, v, u):
    X = v ** 2 - u ** 2
    df = model.df(X)
    return {"f": model.f(X), "df": df, "fv2": df * v ** 2, "fu2": df * u ** 2, "fvu": df * v * u}


def assemble_dirac(wave, model, grid):
    """Assembles ``L_-`` and ``L_+`` about a wave.

    Args:
        wave (:obj:`SolitaryWave`): Wave.
        model (:obj:`NonlinearityModel`): Model of the wave.
        grid (:obj:`Grid`): Grid of the wave.

    Returns:
        :class:`DiracBlocks`.

    Raises:
        :class:`ConfigurationError`
    """
    if wave.grid != grid:
        raise ConfigurationError(f"wave grid {wave.grid} does not match {grid}")
    if wave.model != model:
        raise ConfigurationError("wave was solved for a different model")

    omega, m = wave.omega, model.m
    d1 = diff_matrix(grid, 1).matrix
    wilson = wilson_matrix(grid, WILSON_STRENGTH)
    pot = _wave_potentials(model, wave.v, wave.u)

    lminus = np.block([
        [np.diag(m - omega - pot["f"]) + wilson, d1],
        [-d1, np.diag(-m - omega + pot["f"]) - wilson],
    ])
    coupling = np.block([
        [np.diag(-2.0 * pot["fv2"]), np.diag(2.0 * pot["fvu"])],
        [np.diag(2.0 * pot["fvu"]), np.diag(-2.0 * pot["fu2"])],
    ])
    layout = ("v", "u")
    return DiracBlocks(
        wave, omega, grid,
        LinearOperator(lminus, grid, layout), LinearOperator(lminus + coupling, grid, layout), pot,
    )


def _symmetrized(sigma):
    root = np.sqrt(sigma.astype(complex))
    return np.concatenate([root, -root])


def _near_zero_radius(values, size=KERNEL_SIZE):
    if values.size < size:
        return 0.0
    return float(np.sort(np.abs(values))[size - 1])


def dirac_spectrum(blocks, Lambda=None):
    """Computes and classifies the spectrum of the linearization.

    Args:
        blocks (:obj:`DiracBlocks`): Operators.
        Lambda (:obj:`Union[float, None]`): Limit eigenvalue for ``mu0``.

    Returns:
        :class:`SpectrumReport`.
    """
    wave = blocks.wave
    omega, m = blocks.omega, wave.model.m
    grid = blocks.grid

    with _logger.timed(f"spectrum omega={omega} N={grid.points}"):
        eigen = dense_eigs(-(blocks.Lminus @ blocks.Lplus).matrix, want_vectors=True)

    values = _symmetrized(eigen.values)
    masses = np.array([interior_mass(grid, eigen.vectors[:, i]) for i in range(eigen.values.size)])
    localization = np.concatenate([masses, masses])

    radius = 0.0 if wave.is_zero else _near_zero_radius(values)
    tol0 = max(1e-9, 10.0 * radius)
    gap = m - omega

    classes = []
    for value, mass in zip(values, localization):
        size = abs(value)
        flat = 1e-8 + 1e-6 * size
        if size < tol0:
            classes.append("near-zero")
        elif mass >= LOCALIZED and abs(size - 2.0 * omega) < 1e-3 * omega and abs(value.real) <= 1e-3 * omega:
            classes.append("exact-pair-2omega")
        elif mass < LOCALIZED and abs(value.imag) >= 0.95 * gap:
            classes.append("essential-proxy")
        elif mass >= LOCALIZED and abs(value.imag) <= flat:
            classes.append("real-unstable")
        elif mass >= LOCALIZED and abs(value.real) <= flat:
            classes.append("imaginary-point")
        else:
            classes.append("other")

    unstable = [v.real for v, c in zip(values, classes) if c == "real-unstable" and v.real > 0]
    lambda_unstable = max(unstable) if unstable else None
    eps = wave.eps_dirac
    mu0 = None
    if lambda_unstable is not None and Lambda is not None:
        mu0 = lambda_unstable / eps ** 2 - Lambda

    defect = max(set_distance(-values, values), set_distance(np.conj(values), values))

    report = SpectrumReport(
        omega, wave.model.k, m, eps, values, classes, localization, tol0, radius,
        eigen.residual_bound, defect, lambda_unstable, mu0,
        {"gap_edge": gap, "embedded_threshold": m + omega},
    )
    _logger.debug(
        f"omega={omega}: {report.count('real-unstable')} real, {report.count('exact-pair-2omega')} at 2 omega i, tol0={tol0:.3e}"
    )
    return report


def limit_extrapolation(eps, ratios):
    """Extrapolates ``lambda/eps^2`` to ``eps = 0``.

    ``lambda/eps^2 = Lambda + c*eps^2 + o(eps^2)``, so the line in ``eps^2``
    through the two smallest ``eps`` is evaluated at zero.

    Args:
        eps (:obj:`list` of :obj:`float`): Values of ``eps``, at least two distinct.
        ratios (:obj:`list` of :obj:`float`): ``lambda/eps^2`` at each ``eps``.

    Returns:
        :obj:`float`.

    Raises:
        :class:`ConfigurationError`
    """
    eps = np.asarray(eps, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    if eps.shape != ratios.shape or eps.size < 2:
        raise ConfigurationError("need at least two eps values with one ratio each")
    order = np.argsort(eps)[:2]
    (e1, e2), (r1, r2) = eps[order] ** 2, ratios[order]
    if e1 == e2:
        raise ConfigurationError(f"eps values must differ, got {eps[order]}")
    return float(r1 + (r1 - r2) * e1 / (e2 - e1))


def full_block_spectrum(blocks):
    """Eigenvalues of the ``4N`` block ``[[0, L_-], [-L_+, 0]]``."""
    n = blocks.Lminus.dimension
    block = np.block([
        [np.zeros((n, n)), blocks.Lminus.matrix],
        [-blocks.Lplus.matrix, np.zeros((n, n))],
    ])
    return dense_eigs(block).values


def schur_reduction_defect(blocks, report):
    """Relative disagreement of the product reduction with the full block spectrum.

    The near-zero cluster is left out.
    """
    full = full_block_spectrum(blocks)
    reduced = report.eigenvalues[np.abs(report.eigenvalues) >= report.tol0]
    if reduced.size == 0:
        return 0.0
    distances = np.array([np.abs(full - z).min() / abs(z) for z in reduced])
    return float(distances.max())


def identity_residuals(blocks):
    """Residuals of ``L_-(v,u) = 0``, ``L_+ d_x(v,u) = 0`` and ``L_pm(u,v) = -2 omega (u,v)``.

    Returns:
        :obj:`dict` of relative sup-norm residuals.
    """
    wave = blocks.wave
    if wave.is_zero:
        return {"kernel": 0.0, "translation": 0.0, "two_omega_minus": 0.0, "two_omega_plus": 0.0}
    d1 = diff_matrix(blocks.grid, 1, closure="one-sided").matrix
    vu = np.concatenate([wave.v, wave.u])
    uv = np.concatenate([wave.u, wave.v])
    dvu = np.concatenate([d1 @ wave.v, d1 @ wave.u])
    scale = np.abs(vu).max()

    def sup(vector):
        return float(np.abs(vector).max())

    return {
        "kernel": sup(blocks.Lminus.apply(vu)) / scale,
        "translation": sup(blocks.Lplus.apply(dvu)) / sup(dvu),
        "two_omega_minus": sup(blocks.Lminus.apply(uv) + 2.0 * blocks.omega * uv) / scale,
        "two_omega_plus": sup(blocks.Lplus.apply(uv) + 2.0 * blocks.omega * uv) / scale,
    }


def parity_defect(blocks):
    """``||P L P - L||`` for ``P(v, u)(x) = (v(-x), -u(-x))``, relative."""
    n = blocks.grid.points
    mirror = np.arange(n)[::-1]
    index = np.concatenate([mirror, n + mirror])
    sign = np.concatenate([np.ones(n), -np.ones(n)])
    result = 0.0
    for op in (blocks.Lminus, blocks.Lplus):
        conjugated = sign[:, np.newaxis] * op.matrix[np.ix_(index, index)] * sign[np.newaxis, :]
        result = max(result, float(np.abs(conjugated - op.matrix).max() / np.abs(op.matrix).max()))
    return result


def _limit_mass(n):
    """Diagonal of ``K_1``."""
    return np.concatenate([np.ones(n), np.zeros(n), np.ones(n), np.zeros(n)])


def _require_normalized(model):
    if not model.is_normalized:
        raise ConfigurationError("rescaled problem needs a model with m = a = 1; use NonlinearityModel.normalized()")


def _w_coefficients(model, omega, eps, U, v, u):
    k = model.k
    pot = _wave_potentials(model, v, u)
    Uk = U ** k
    n = U.size
    W = np.zeros((n, 4, 4))
    W[:, 0, 2] = 0.5 - Uk - (1.0 - omega - pot["f"]) / eps ** 2
    W[:, 1, 3] = -2.0 - (-1.0 - omega + pot["f"])
    W[:, 2, 0] = -0.5 + (2 * k + 1) * Uk - (-1.0 + omega + pot["f"] + 2.0 * pot["fv2"]) / eps ** 2
    W[:, 2, 1] = 2.0 * pot["fvu"] / eps
    W[:, 3, 0] = 2.0 * pot["fvu"] / eps
    W[:, 3, 1] = 2.0 - (1.0 + omega - pot["f"] + 2.0 * pot["fu2"])
    return W


def rescaled_problem(wave, model, Lambda):
    """Assembles the rescaled eigenproblem ``C eta = nu D eta``.

    Args:
        wave (:obj:`SolitaryWave`): Wave of a normalized model.
        model (:obj:`NonlinearityModel`): Model with ``m = a = 1``.
        Lambda (:obj:`Union[float, None]`): Limit eigenvalue, ``None`` read as zero.

    Returns:
        :class:`RescaledProblem`.

    Raises:
        :class:`ConfigurationError`
    """
    _require_normalized(model)
    if wave.model != model:
        raise ConfigurationError("wave was solved for a different model")
    Lambda = 0.0 if Lambda is None else float(Lambda)

    omega, eps, k = wave.omega, wave.eps_dirac, model.k
    grid_y = wave.grid.scaled(eps)
    n = grid_y.points
    d1 = scipy.sparse.csr_matrix(diff_matrix(grid_y, 1).matrix)
    wilson = scipy.sparse.csr_matrix(wilson_matrix(grid_y, WILSON_STRENGTH))
    pot = _wave_potentials(model, wave.v, wave.u)
    diag = scipy.sparse.diags

    C = scipy.sparse.bmat([
        [None, None, diag((1.0 - omega - pot["f"]) / eps ** 2), d1],
        [None, None, -d1, diag(-1.0 - omega + pot["f"])],
        [diag((-1.0 + omega + pot["f"] + 2.0 * pot["fv2"]) / eps ** 2), -d1 - diag(2.0 * pot["fvu"] / eps), None, None],
        [d1 - diag(2.0 * pot["fvu"] / eps), diag(1.0 + omega - pot["f"] + 2.0 * pot["fu2"]), None, None],
    ], format="csr")
    C_stab = scipy.sparse.bmat([
        [None, None, wilson / eps, None],
        [None, None, None, -eps * wilson],
        [-wilson / eps, None, None, None],
        [None, eps * wilson, None, None],
    ], format="csr")
    D_diag = np.concatenate([np.ones(n), np.full(n, eps ** 2), np.ones(n), np.full(n, eps ** 2)])

    U = nls_density(k, grid_y.nodes)
    Uk = U ** k
    identity = scipy.sparse.identity(n, format="csr")
    A0 = scipy.sparse.bmat([
        [None, None, diag(0.5 - Uk), d1],
        [None, None, -d1, -2.0 * identity],
        [diag(-0.5 + (2 * k + 1) * Uk), -d1, None, None],
        [d1, 2.0 * identity, None, None],
    ], format="csr")
    A_Lambda = (A0 - Lambda * diag(_limit_mass(n))).tocsr()

    W = _w_coefficients(model, omega, eps, U, wave.v, wave.u)
    W_nls = _w_coefficients(model, omega, eps, U, eps ** (1.0 / k) * np.sqrt(U), np.zeros(n))

    return RescaledProblem(k, omega, eps, grid_y, Lambda, C, C_stab, D_diag, A_Lambda, W, W_nls, d1)


def w_norm(problem, nls=False):
    """Sup over nodes of the infinity norm of the ``4x4`` coefficient of ``W``.

    Args:
        problem (:obj:`RescaledProblem`): Problem.
        nls (:obj:`bool`): Use the NLS-substituted coefficient.

    Returns:
        :obj:`float`.
    """
    W = problem.W_nls if nls else problem.W
    return float(np.abs(W).sum(axis=2).max())


def unstable_eigenvalue_rescaled(problem):
    """Real eigenvalue ``nu`` of ``D^{-1} C`` close to ``Lambda``.

    Solved through the ``2N`` product of the off-diagonal halves. The
    near-zero cluster is excluded and ``nu`` must lie within ``Lambda`` of
    ``Lambda`` (anywhere when ``Lambda = 0``).

    Returns:
        :obj:`tuple` ``(nu, mu0)``.

    Raises:
        :class:`DetectionError`
    """
    n2 = problem.C_matrix.shape[0] // 2
    C = (problem.C_matrix + problem.C_stab).tocsr()
    dinv = 1.0 / problem.D_diag
    upper = scipy.sparse.diags(dinv[:n2]) @ C[:n2, n2:]
    lower = scipy.sparse.diags(dinv[n2:]) @ C[n2:, :n2]

    with _logger.timed(f"rescaled omega={problem.omega}"):
        eigen = dense_eigs((upper @ lower).toarray(), want_vectors=True)
    values = _symmetrized(eigen.values)
    masses = np.array([interior_mass(problem.grid_y, eigen.vectors[:, i]) for i in range(eigen.values.size)])
    masses = np.concatenate([masses, masses])
    tol0 = max(1e-9, 10.0 * _near_zero_radius(values))
    Lambda = problem.Lambda

    candidates = []
    for value, mass in zip(values, masses):
        if abs(value) < tol0 or value.real <= 0 or mass < LOCALIZED:
            continue
        if abs(value.imag) > 1e-8 + 1e-6 * abs(value):
            continue
        if Lambda > 0 and abs(value.real - Lambda) >= Lambda:
            continue
        candidates.append(value.real)

    if not candidates:
        nearest = values[np.argsort(np.abs(values - Lambda))[:3]]
        raise DetectionError(f"No real eigenvalue near Lambda={Lambda:.6g} at omega={problem.omega}", nearest)

    nu = min(candidates, key=lambda z: abs(z - Lambda))
    return nu, nu - Lambda


def schur_elimination_defect(problem):
    """Checks that eliminating rows 2 and 4 of the limit matrix gives the hat operators.

    With ``R_2 = -D R_1 / 2`` and ``S_2 = -D S_1 / 2`` rows 1 and 3 of
    ``A_0`` become ``L_- S_1`` and ``-L_+ R_1`` with ``L_pm`` built from
    ``-D^2/2``.

    Returns:
        :obj:`float`: Largest entry of the difference.
    """
    n = problem.grid_y.points
    d1 = problem.d1.toarray()
    A0 = (problem.A_Lambda_limit + problem.Lambda * scipy.sparse.diags(_limit_mass(n))).tocsr()
    elimination = -0.5 * d1
    block = [[A0[i * n:(i + 1) * n, j * n:(j + 1) * n].toarray() for j in range(4)] for i in range(4)]

    lminus_schur = block[0][2] + block[0][3] @ elimination
    minus_lplus_schur = block[2][0] + block[2][1] @ elimination

    k = problem.k
    Uk = nls_density(k, problem.grid_y.nodes) ** k
    laplacian = -0.5 * d1 @ d1
    lminus = laplacian + np.diag(0.5 - Uk)
    lplus = laplacian + np.diag(0.5 - (2 * k + 1) * Uk)

    row2 = block[1][2] + block[1][3] @ elimination
    row4 = block[3][0] + block[3][1] @ elimination
    return float(max(
        np.abs(lminus_schur - lminus).max(),
        np.abs(minus_lplus_schur + lplus).max(),
        np.abs(row2).max(),
        np.abs(row4).max(),
    ))


def physical_units(report, m):
    """Maps a report of the ``m = 1`` problem to mass ``m``.

    Frequencies, eigenvalues and the radii measured on them are multiplied
    by ``m``. ``eps_dirac`` and ``mu0`` are dimensionless and kept.

    Args:
        report (:obj:`SpectrumReport`): Report of the normalized problem.
        m (:obj:`float`): Mass.

    Returns:
        :class:`SpectrumReport`.
    """
    if report.m != 1.0:
        raise ConfigurationError(f"report must be normalized to m = 1, got m = {report.m}")
    if m == 1.0:
        return report
    return replace(
        report,
        omega=m * report.omega,
        m=float(m),
        eigenvalues=m * report.eigenvalues,
        tol0=m * report.tol0,
        near_zero_radius=m * report.near_zero_radius,
        residual_bound=m * report.residual_bound,
        symmetry_defect=m * report.symmetry_defect,
        lambda_unstable=None if report.lambda_unstable is None else m * report.lambda_unstable,
        annotations={key: m * value for key, value in report.annotations.items()},
    )


def report_dict(report, N, L, Lambda_ref=None, w_norm_value=None, extra=None):
    """JSON-ready summary of a :class:`SpectrumReport`."""
    result = {
        "omega": report.omega,
        "k": report.k,
        "N": N,
        "L": L,
        "eps": report.eps_dirac,
        "lambda_unstable": report.lambda_unstable,
        "Lambda_ref": Lambda_ref,
        "mu0": report.mu0,
        "checks": {
            "zero_pair_resid": report.near_zero_radius,
            "two_omega_resid": report.two_omega_error(),
            "symmetry_defect": report.symmetry_defect,
            "w_norm": w_norm_value,
        },
        "counts": {name: report.count(name) for name in CLASSES},
        "annotations": dict(report.annotations),
    }
    if extra:
        result.update(extra)
    return result


def export_spectrum(report, path):
    """Writes the classified spectrum to a ``.csv`` file with annotations."""
    meta = {
        "omega": repr(report.omega),
        "k": report.k,
        "gap_edge": repr(report.annotations.get("gap_edge")),
        "embedded_threshold": repr(report.annotations.get("embedded_threshold")),
    }
    Io.get_io(path).blocking_dump({"meta": meta, "table": report.to_table()})
