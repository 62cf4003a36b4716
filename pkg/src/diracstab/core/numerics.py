"""Provides grids, differentiation matrices, quadrature, root finding
and the dense eigenvalue contract used by every other core module.

All values are immutable after construction.
"""

import math
from dataclasses import dataclass
from functools import cached_property
import numpy as np
import scipy.linalg
import scipy.sparse
from scipy import integrate, optimize
from diracstab.utils.logger import Logger
from diracstab.utils.exception import DiracStabException, ConfigurationError


class NumericalFailure(DiracStabException):
    """Dense solver did not converge.

    Attributes:
        dimension (:obj:`int`): Dimension of the matrix.
    """

    def __init__(self, message, dimension):
        super().__init__(f"{message} (dimension {dimension})")
        self.message = message
        self.dimension = dimension

    def __reduce__(self):
        return NumericalFailure, (self.message, self.dimension)


class BracketingError(DiracStabException):
    """Root bracket without a sign change."""


MIN_GRID_POINTS = 16
"""int: Smallest grid accepted by :func:`build_grid`."""

_CENTRAL_STENCILS = {
    (1, 2): [-1 / 2, 0, 1 / 2],
    (1, 4): [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12],
    (1, 6): [-1 / 60, 3 / 20, -3 / 4, 0, 3 / 4, -3 / 20, 1 / 60],
    (2, 2): [1, -2, 1],
    (2, 4): [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12],
    (2, 6): [1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90],
}

_logger = Logger("numerics")


@dataclass(frozen=True)
class Grid:
    """Uniform symmetric grid on ``[-L, L]``.

    Nodes are placed symmetrically about zero, so ``nodes[j] == -nodes[N-1-j]``
    holds exactly.
    """

    half_width: float
    """:obj:`float`: Half-width ``L``."""
    points: int
    """:obj:`int`: Number of nodes ``N``."""

    def __post_init__(self):
        if isinstance(self.points, bool) or not isinstance(self.points, (int, np.integer)):
            raise TypeError(f"points must be an int, not {type(self.points)}")
        if isinstance(self.half_width, bool) or not isinstance(self.half_width, (int, float, np.floating)):
            raise TypeError(f"half_width must be a float, not {type(self.half_width)}")
        if not (math.isfinite(self.half_width) and self.half_width > 0):
            raise ConfigurationError(f"half_width must be positive, not {self.half_width}")
        if self.points < 3:
            raise ConfigurationError(f"points must be at least 3, not {self.points}")

        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "points", int(self.points))

    @cached_property
    def nodes(self):
        """:obj:`numpy.ndarray`: Nodes ``x_j = -L + j*h``."""
        step = 2.0 * self.half_width / (self.points - 1)
        result = step * (np.arange(self.points) - (self.points - 1) / 2.0)
        result.setflags(write=False)
        return result

    @property
    def spacing(self):
        """:obj:`float`: Spacing ``h``, equal to ``nodes[1] - nodes[0]``."""
        return float(self.nodes[1] - self.nodes[0])

    def scaled(self, factor):
        """Returns the grid with half-width multiplied by ``factor``.

        Used to pass between ``x`` and ``y = eps*x``.
        """
        return Grid(self.half_width * factor, self.points)


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """Dense real matrix acting on ``len(block_layout)`` stacked grid functions."""

    matrix: np.ndarray
    grid: Grid
    block_layout: tuple = ("f",)
    boundary: str = "dirichlet"

    def __post_init__(self):
        if not isinstance(self.grid, Grid):
            raise TypeError(f"grid must be a Grid, not {type(self.grid)}")
        matrix = np.asarray(self.matrix)
        if np.iscomplexobj(matrix):
            raise ConfigurationError("matrix must be real")
        matrix = matrix.astype(float)
        size = self.grid.points * len(self.block_layout)
        if matrix.shape != (size, size):
            raise ConfigurationError(
                f"matrix shape {matrix.shape} does not match {len(self.block_layout)} blocks of {self.grid.points} points"
            )
        if not np.all(np.isfinite(matrix)):
            raise ConfigurationError("matrix has non-finite entries")

        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "block_layout", tuple(self.block_layout))

    @property
    def dimension(self):
        """:obj:`int`: Matrix dimension."""
        return self.matrix.shape[0]

    def block(self, row, column):
        """Returns the ``(row, column)`` block as an ``N x N`` array."""
        n = self.grid.points
        return self.matrix[row * n:(row + 1) * n, column * n:(column + 1) * n]

    def apply(self, vector):
        return self.matrix @ vector

    def __matmul__(self, other):
        if not isinstance(other, LinearOperator):
            return NotImplemented
        if other.grid != self.grid or other.block_layout != self.block_layout:
            raise ConfigurationError("operators act on different spaces")
        return LinearOperator(self.matrix @ other.matrix, self.grid, self.block_layout, self.boundary)


@dataclass(frozen=True, eq=False)
class EigenSet:
    """Result of :func:`dense_eigs`."""

    values: np.ndarray
    """:obj:`numpy.ndarray`: Complex eigenvalues."""
    vectors: object
    """:obj:`Union[numpy.ndarray, None]`: Eigenvectors as columns."""
    residual_bound: float
    """:obj:`float`: ``max ||Mv - lv|| / ||v||`` over all pairs."""

    def conjugation_defect(self):
        """Largest distance from ``conj(l)`` to the nearest eigenvalue."""
        return set_distance(np.conj(self.values), self.values)


def build_grid(half_width, points):
    """Creates a :class:`Grid` suitable for the solvers.

    Args:
        half_width (:obj:`float`): Half-width ``L > 0``.
        points (:obj:`int`): Number of nodes, at least :data:`MIN_GRID_POINTS`.

    Returns:
        :class:`Grid`.

    Raises:
        :class:`ConfigurationError`
    """
    if isinstance(points, (int, np.integer)) and not isinstance(points, bool) and points < MIN_GRID_POINTS:
        raise ConfigurationError(f"points must be at least {MIN_GRID_POINTS}, not {points}")
    return Grid(half_width, points)


def _stencil_weights(offsets, order):
    offsets = np.asarray(offsets, dtype=float)
    powers = np.arange(len(offsets))
    vandermonde = offsets[np.newaxis, :] ** powers[:, np.newaxis]
    rhs = np.zeros(len(offsets))
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vandermonde, rhs)


def diff_matrix(grid, order, closure="dirichlet", accuracy=4):
    """Central finite-difference matrix.

    Args:
        grid (:obj:`Grid`): Grid.
        order (:obj:`int`): Derivative order, 1 or 2.
        closure (:obj:`str`): ``"dirichlet"`` truncates the stencil (zero
            values outside the grid, exactly (anti)symmetric matrix);
            ``"one-sided"`` replaces boundary rows by one-sided stencils of
            the same width.
        accuracy (:obj:`int`): Interior accuracy order, 2, 4 or 6.

    Returns:
        :class:`LinearOperator`.

    Raises:
        :class:`ConfigurationError`
    """
    if (order, accuracy) not in _CENTRAL_STENCILS:
        raise ConfigurationError(f"Unsupported order {order} with accuracy {accuracy}")
    if closure not in ("dirichlet", "one-sided"):
        raise ConfigurationError(f"Unknown closure \"{closure}\"")

    n = grid.points
    h = grid.spacing
    stencil = _CENTRAL_STENCILS[(order, accuracy)]
    half = len(stencil) // 2
    if n < len(stencil):
        raise ConfigurationError(f"Grid of {n} points is too small for a {len(stencil)}-point stencil")

    offsets = range(-half, half + 1)
    matrix = scipy.sparse.diags(
        [np.full(n - abs(o), c) for o, c in zip(offsets, stencil)], list(offsets), shape=(n, n)
    ).toarray()

    if closure == "one-sided":
        width = len(stencil)
        for j in range(half):
            left = _stencil_weights(np.arange(width) - j, order)
            matrix[j, :] = 0.0
            matrix[j, :width] = left
            matrix[n - 1 - j, :] = 0.0
            matrix[n - 1 - j, n - width:] = left[::-1] * (-1) ** order

    return LinearOperator(matrix / h ** order, grid, boundary=closure)


def wilson_matrix(grid, strength=0.1):
    """Wilson-type mass correction ``strength * h^5 * (-D2)^3``.

    Added to the mass of centred first-order systems. It is ``O(h^5)`` on
    resolved modes and of order ``15*strength/h`` on the grid Nyquist mode,
    removing the spurious doubled branch of the centred first derivative.

    Args:
        grid (:obj:`Grid`): Grid.
        strength (:obj:`float`): Coefficient.

    Returns:
        :obj:`numpy.ndarray` (symmetric).
    """
    laplacian = -diff_matrix(grid, 2).matrix
    return strength * grid.spacing ** 5 * (laplacian @ laplacian @ laplacian)


def dense_eigs(op, want_vectors=False):
    """Full spectrum of a dense real matrix.

    Eigenvectors are always computed to evaluate the residual bound; they are
    returned only if ``want_vectors``.

    Args:
        op (:obj:`Union[LinearOperator, numpy.ndarray]`): Operator.
        want_vectors (:obj:`bool`): Return eigenvectors.

    Returns:
        :class:`EigenSet`.

    Raises:
        :class:`ConfigurationError`
        :class:`NumericalFailure`
    """
    matrix = op.matrix if isinstance(op, LinearOperator) else np.asarray(op, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ConfigurationError(f"matrix must be square, not of shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ConfigurationError("matrix has non-finite entries")

    try:
        values, vectors = scipy.linalg.eig(matrix, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f"Eigenvalue iteration failed:\n{e}", matrix.shape[0]) from e

    norms = np.linalg.norm(vectors, axis=0)
    norms[norms == 0] = 1.0
    residuals = np.linalg.norm(matrix @ vectors - vectors * values, axis=0) / norms
    residual_bound = float(residuals.max()) if residuals.size else 0.0

    _logger.debug(f"eig of {matrix.shape[0]}x{matrix.shape[0]}: residual bound {residual_bound:.3e}")

    return EigenSet(values, vectors if want_vectors else None, residual_bound)


def quadrature(grid, samples):
    """Integrates grid samples over ``[-L, L]``.

    Simpson's rule for odd ``N``, trapezoidal rule for even ``N``. Both use
    weights symmetric about the centre. Logs a warning if the samples have not
    decayed to ``1e-12`` of their maximum at the ends.

    Args:
        grid (:obj:`Grid`): Grid.
        samples (:obj:`numpy.ndarray`): Real samples at ``grid.nodes``.

    Returns:
        :obj:`float`.

    Raises:
        :class:`ConfigurationError`
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (grid.points,):
        raise ConfigurationError(f"samples of shape {samples.shape} do not match {grid.points} points")

    peak = np.abs(samples).max()
    if peak > 0 and max(abs(samples[0]), abs(samples[-1])) > 1e-12 * peak:
        _logger.warning(f"Integrand has not decayed at the ends of [-{grid.half_width:g}, {grid.half_width:g}]")

    if grid.points % 2:
        return float(integrate.simpson(samples, dx=grid.spacing))
    return float(integrate.trapezoid(samples, dx=grid.spacing))


def find_root(f, bracket, tol=1e-14):
    """Finds a root of a scalar function inside a bracket.

    Args:
        f (:obj:`callable`): Scalar function.
        bracket (:obj:`tuple`): ``(lo, hi)`` with a sign change.
        tol (:obj:`float`): Absolute tolerance in ``x``.

    Returns:
        :obj:`float`.

    Raises:
        :class:`BracketingError`
    """
    lo, hi = bracket
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise BracketingError(f"No sign change on [{lo}, {hi}]: f = {flo}, {fhi}")
    return float(optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))


def interior_mass(grid, vector, fraction=0.5):
    """Share of the squared norm of a stacked grid function inside ``|x| <= fraction*L``.

    Args:
        grid (:obj:`Grid`): Grid.
        vector (:obj:`numpy.ndarray`): ``b*N`` values, ``b`` stacked blocks.
        fraction (:obj:`float`): Relative radius.

    Returns:
        :obj:`float` in ``[0, 1]``.
    """
    weights = np.abs(np.asarray(vector).reshape(-1, grid.points)) ** 2
    total = weights.sum()
    if total == 0:
        return 0.0
    inside = np.abs(grid.nodes) <= fraction * grid.half_width
    return float(weights[:, inside].sum() / total)


def even_fold(grid):
    """Restriction and extension matrices for even grid functions.

    Returns:
        :obj:`tuple` ``(R, P)``: ``R`` keeps the first ``ceil(N/2)`` nodes,
        ``P`` mirrors them onto the full grid, so ``R @ A @ P`` is ``A`` on
        even functions.
    """
    n = grid.points
    half = (n + 1) // 2
    extend = np.zeros((n, half))
    columns = np.arange(half)
    extend[columns, columns] = 1.0
    extend[n - 1 - columns, columns] = 1.0
    restrict = np.zeros((half, n))
    restrict[columns, columns] = 1.0
    return restrict, extend


def set_distance(points, reference, chunk=512):
    """Largest distance from a point of ``points`` to the nearest of ``reference``."""
    points = np.asarray(points, dtype=complex)
    reference = np.asarray(reference, dtype=complex)
    if points.size == 0:
        return 0.0
    nearest = [
        np.abs(points[start:start + chunk, None] - reference[None, :]).min(axis=1)
        for start in range(0, points.size, chunk)
    ]
    return float(np.concatenate(nearest).max())


def fit_power_law(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ConfigurationError("power law fit needs at least two positive points")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)
