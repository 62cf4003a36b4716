"""Nonlinearity models, solitary waves of the nonlinear Dirac equation and
their nonrelativistic (NLS) limit.

A solitary wave ``phi(x) e^{-i omega t}`` has spinor profile ``(v, u)`` with
``v`` even and ``u`` odd. With ``X = v^2 - u^2`` and ``Y = v*u`` the profile
reduces to the first-order equation

.. math::

    \\partial_x X = -2 X \\sqrt{P(X)}, \\quad
    P(s) = (m - \\omega - \\Phi(s))(m + \\omega - \\Phi(s)), \\quad
    \\Phi(s) = F(s)/s,

integrated from the turning point ``X(0) = Gamma`` where ``Phi(Gamma) = m - omega``.
"""

import math
from dataclasses import dataclass, field
from numbers import Integral, Real
import numpy as np
import pandas as pd
from scipy import integrate
from diracstab.core.numerics import Grid, diff_matrix, quadrature, find_root
from diracstab.utils.io.io import Io
from diracstab.utils.logger import Logger
from diracstab.utils.exception import DiracStabException, ConfigurationError


class ExistenceConditionError(DiracStabException):
    """No solitary wave for the requested frequency."""


class ProfileIntegrationError(DiracStabException):
    """Profile equation left its admissible region."""


class DomainTooSmallError(DiracStabException):
    """Profile has not decayed at the end of the grid."""


NEGATIVE_CLIP = -1e-13
"""float: Most negative value of ``P`` treated as rounding."""

DECAY_TOLERANCE = 1e-12
"""float: Required ``X(L) / Gamma``."""

_logger = Logger("profiles")


def sech(z):
    """Overflow-free ``1/cosh(z)``."""
    t = np.exp(-np.abs(z))
    return 2.0 * t / (1.0 + t * t)


def nls_density(k, y):
    """Closed-form NLS profile ``U(y) = ((k+1)/(2 cosh^2 ky))^{1/k}``."""
    return ((k + 1) / 2.0 * sech(k * np.asarray(y, dtype=float)) ** 2) ** (1.0 / k)


def sech_power_integral(p):
    """``\\int_R cosh^{-p} z dz`` by adaptive quadrature."""
    value, _ = integrate.quad(lambda z: sech(z) ** p, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)
    return value


@dataclass(frozen=True)
class NonlinearityModel:
    """``f(s) = a s^k + sum c_j s^j``, ``g = m - f``, ``G' = g``, ``G(0) = 0``."""

    k: int
    a: float = 1.0
    higher_terms: tuple = ()
    """:obj:`tuple` of ``(exponent, coefficient)`` with exponents above ``k``."""
    m: float = 1.0

    def __post_init__(self):
        if isinstance(self.k, bool) or not isinstance(self.k, Integral):
            raise TypeError(f"k must be an int, not {type(self.k)}")
        for name in ("a", "m"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, Real):
                raise TypeError(f"{name} must be a float, not {type(value)}")
        if self.k < 1:
            raise ConfigurationError(f"k must be at least 1, not {self.k}")
        if not self.a > 0:
            raise ConfigurationError(f"a must be positive, not {self.a}")
        if not self.m > 0:
            raise ConfigurationError(f"m must be positive, not {self.m}")

        terms = tuple((float(j), float(c)) for j, c in self.higher_terms)
        for j, _ in terms:
            if not j > self.k:
                raise ConfigurationError(f"higher exponent {j} must exceed k={self.k}")

        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "higher_terms", terms)

    def f(self, s):
        s = np.asarray(s, dtype=float)
        result = self.a * s ** self.k
        for j, c in self.higher_terms:
            result = result + c * s ** j
        return result

    def df(self, s):
        """``f'(s)``."""
        s = np.asarray(s, dtype=float)
        result = self.a * self.k * s ** (self.k - 1)
        for j, c in self.higher_terms:
            result = result + c * j * s ** (j - 1)
        return result

    def g(self, s):
        return self.m - self.f(s)

    def G(self, s):
        """Antiderivative of ``g`` vanishing at zero."""
        s = np.asarray(s, dtype=float)
        return s * (self.m - self.Phi(s))

    def Phi(self, s):
        """``F(s)/s`` where ``F`` is the antiderivative of ``f``."""
        s = np.asarray(s, dtype=float)
        result = self.a * s ** self.k / (self.k + 1)
        for j, c in self.higher_terms:
            result = result + c * s ** j / (j + 1)
        return result

    @property
    def is_normalized(self):
        """:obj:`bool`: ``m == a == 1``."""
        return self.m == 1.0 and self.a == 1.0

    @property
    def density_scale(self):
        """:obj:`float`: ``(m/a)^{1/k}``, maps normalized densities back."""
        return (self.m / self.a) ** (1.0 / self.k)

    def normalized(self):
        """Equivalent model with ``m = a = 1``.

        Lengths scale by ``m``, frequencies and eigenvalues by ``1/m``,
        densities ``X``, ``Gamma`` by ``1/density_scale`` and charges by
        ``m/density_scale``.

        Returns:
            :class:`NonlinearityModel`.
        """
        scale = self.density_scale
        return NonlinearityModel(
            self.k,
            1.0,
            tuple((j, c * scale ** j / self.m) for j, c in self.higher_terms),
            1.0,
        )


@dataclass(frozen=True)
class TurningPoint:
    """Turning point ``Gamma`` with the result of the existence checks."""

    gamma: float
    conditions_hold: bool
    """:obj:`bool`: ``omega s < G(s)`` on ``(0, Gamma)`` and ``g(Gamma) < omega``."""

@dataclass(frozen=True, eq=False)
class SolitaryWave:
    """Sampled solitary wave."""

    model: NonlinearityModel
    omega: float
    gamma: float
    grid: Grid
    v: np.ndarray
    u: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Q: float
    eps_dirac: float
    """:obj:`float`: ``sqrt(m^2 - omega^2)``."""
    eps_nls: float
    """:obj:`float`: ``sqrt(2(m - omega))``."""

    @staticmethod
    def zero(model, omega, grid):
        """Zero-amplitude wave, the free reference."""
        zeros = np.zeros(grid.points)
        return SolitaryWave(
            model, float(omega), 0.0, grid, zeros, zeros, zeros, zeros, 0.0,
            math.sqrt(model.m ** 2 - omega ** 2), math.sqrt(2 * (model.m - omega)),
        )

    @property
    def is_zero(self):
        return self.gamma == 0.0


@dataclass(frozen=True, eq=False)
class NlsProfile:
    """NLS profile ``U`` sampled on a ``y``-grid."""

    k: int
    grid: Grid
    U: np.ndarray
    C: float
    """:obj:`float`: ``\\int U dy``."""
    residual: float
    """:obj:`float`: Sup-norm residual of ``U'' = 4U - 4(k+2)/(k+1) U^{k+1}`` with exact derivatives."""
    first_order_residual: float
    """:obj:`float`: Sup-norm residual of ``U' = -2U sqrt(1 - 2U^k/(k+1))``."""
    fd_residual: float = field(default=float("nan"))
    """:obj:`float`: Interior residual of the second-order equation with finite differences."""

    def evaluate(self, y):
        return nls_density(self.k, y)


@dataclass(frozen=True)
class AsymptoticReport:
    """Distance between a Dirac wave and its nonrelativistic limit."""

    eps: float
    deviation: float
    """:obj:`float`: ``sup |X - eps^{2/k} U(eps x)|``."""
    ratio: float
    """:obj:`float`: ``deviation / eps^{4/k}``."""
    u_ratio: float
    """:obj:`float`: ``sup |u| / eps^{1+1/k}``."""
    v_deviation: float
    """:obj:`float`: ``sup |v - eps^{1/k} U(eps x)^{1/2}|``."""
    v_ratio: float
    """:obj:`float`: ``v_deviation / eps^{3/k}``."""


@dataclass(frozen=True)
class ProfileResiduals:
    """Pointwise checks of a solved wave, all in sup norm."""

    hamiltonian: float
    """:obj:`float`: ``(omega/2)(v^2+u^2) - G(X)/2``."""
    constraint: float
    """:obj:`float`: ``omega(v^2+u^2) - G(X)`` relative to ``max omega(v^2+u^2)``."""
    system_u: float
    """:obj:`float`: ``u' - (omega - g)v`` relative to ``||v||``."""
    system_v: float
    """:obj:`float`: ``v' + (omega + g)u`` relative to ``||v||``."""
    xy_relation: float
    """:obj:`float`: ``Y + X'/(4 omega)`` relative to ``Gamma``."""
    second_order: float
    """:obj:`float`: ``X'' - 4(G g - omega^2 X)`` relative to ``Gamma``."""
    parity: float
    """:obj:`float`: Parity defect of ``v`` and ``u`` relative to ``||v||``."""


def make_model(k, a=1.0, higher_terms=(), m=1.0):
    """Creates a checked :class:`NonlinearityModel`.

    ``G`` is compared with a numerical antiderivative of ``g`` on ``[0, 1]``.

    Raises:
        :class:`ConfigurationError`
    """
    model = NonlinearityModel(k, a, tuple(higher_terms), m)
    for s in np.linspace(0.1, 1.0, 10):
        expected, _ = integrate.quad(lambda t: float(model.g(t)), 0.0, s, epsabs=1e-14, epsrel=1e-13)
        if abs(float(model.G(s)) - expected) > 1e-10 * max(1.0, abs(expected)):
            raise ConfigurationError(f"G({s}) = {float(model.G(s))} disagrees with quadrature {expected}")
    return model


def _check_frequency(model, omega):
    if isinstance(omega, bool) or not isinstance(omega, Real):
        raise TypeError(f"omega must be a float, not {type(omega)}")
    if not 0.0 < omega < model.m:
        raise ExistenceConditionError(f"omega={omega} is outside (0, m={model.m})")


def turning_point(model, omega):
    """Smallest positive root ``Gamma`` of ``omega Gamma = G(Gamma)``.

    Args:
        model (:obj:`NonlinearityModel`): Model.
        omega (:obj:`float`): Frequency in ``(0, m)``.

    Returns:
        :class:`TurningPoint`.

    Raises:
        :class:`ExistenceConditionError`
    """
    _check_frequency(model, omega)
    gap = model.m - omega

    def excess(s):
        return float(model.Phi(s)) - gap

    hi = 1.0
    while excess(hi) <= 0:
        hi *= 2.0
        if hi > 2.0 ** 60:
            raise ExistenceConditionError(f"No turning point for omega={omega}")

    samples = np.linspace(0.0, hi, 1025)
    values = model.Phi(samples) - gap
    first = int(np.argmax(values[1:] > 0)) + 1
    gamma = find_root(excess, (samples[first - 1], samples[first]), tol=1e-15 * hi)

    inner = gamma * np.linspace(0.0, 1.0, 1002)[1:-1]
    below = bool(np.all(omega * inner < model.G(inner)))
    turning = float(model.g(gamma)) < omega
    conditions_hold = below and turning
    if not conditions_hold:
        _logger.warning(f"Existence conditions fail at omega={omega}: below={below}, g(Gamma)<omega={turning}")

    return TurningPoint(gamma, conditions_hold)


def _radicand(model, omega, s):
    phi = model.Phi(s)
    p = (model.m - omega - phi) * (model.m + omega - phi)
    if np.any(p < NEGATIVE_CLIP):
        raise ProfileIntegrationError(f"Negative radicand {np.min(p):.3e} at omega={omega}")
    return np.maximum(p, 0.0)


def solve_profile(model, omega, grid):
    """Solves the solitary wave profile on a grid.

    ``log X`` is integrated from a Taylor start next to the turning point with
    an adaptive Runge-Kutta 4(5) method (``rtol=1e-12``) and evaluated on
    ``|x|``. ``Y``, ``v`` and ``u`` follow algebraically, so the Hamiltonian
    and the constraint hold to rounding.

    Args:
        model (:obj:`NonlinearityModel`): Model.
        omega (:obj:`float`): Frequency.
        grid (:obj:`Grid`): Grid.

    Returns:
        :class:`SolitaryWave`.

    Raises:
        :class:`ExistenceConditionError`
        :class:`ProfileIntegrationError`
        :class:`DomainTooSmallError`
    """
    tp = turning_point(model, omega)
    gamma = tp.gamma

    curvature = 4.0 * omega * gamma * (float(model.g(gamma)) - omega)
    if not curvature < 0:
        raise ProfileIntegrationError(f"X''(0) = {curvature} is not negative at omega={omega}")

    start = gamma * (1.0 - 1e-8)
    x0 = math.sqrt(2.0 * (gamma - start) / -curvature)
    distance = np.abs(grid.nodes)
    if x0 >= grid.half_width:
        raise DomainTooSmallError(f"Grid half-width {grid.half_width} is inside the Taylor start {x0}")

    def rhs(_, y):
        return -2.0 * np.sqrt(_radicand(model, omega, np.exp(y)))

    with _logger.timed(f"profile omega={omega}"):
        try:
            solution = integrate.solve_ivp(
                rhs, (x0, grid.half_width), [math.log(start)],
                method="RK45", rtol=1e-12, atol=1e-14, dense_output=True,
            )
        except ProfileIntegrationError:
            raise
        except Exception as e:
            raise ProfileIntegrationError(f"Integration failed at omega={omega}:\n{e}") from e
    if not solution.success:
        raise ProfileIntegrationError(f"Integration failed at omega={omega}: {solution.message}")

    X = np.empty(grid.points)
    core = distance < x0
    X[core] = gamma + 0.5 * curvature * distance[core] ** 2
    X[~core] = np.exp(solution.sol(distance[~core])[0])

    tail = X[np.argmax(distance)]
    if not tail < DECAY_TOLERANCE * gamma:
        raise DomainTooSmallError(f"X(L)/Gamma = {tail / gamma:.3e} at L={grid.half_width}, omega={omega}")

    Y = np.sign(grid.nodes) * X * np.sqrt(_radicand(model, omega, X)) / (2.0 * omega)
    v = np.sqrt(np.maximum(model.G(X) / omega + X, 0.0) / 2.0)
    u = np.divide(Y, v, out=np.zeros_like(Y), where=v > 0)
    Q = quadrature(grid, v ** 2 + u ** 2)

    _logger.debug(f"omega={omega}: Gamma={gamma:.12g}, Q={Q:.12g}")

    return SolitaryWave(
        model, float(omega), gamma, grid, v, u, X, Y, Q,
        math.sqrt(model.m ** 2 - omega ** 2), math.sqrt(2.0 * (model.m - omega)),
    )


def nls_profile(k, grid):
    """Closed-form NLS profile on a ``y``-grid.

    Args:
        k (:obj:`int`): Exponent.
        grid (:obj:`Grid`): Grid in ``y``.

    Returns:
        :class:`NlsProfile`.
    """
    if isinstance(k, bool) or not isinstance(k, Integral):
        raise TypeError(f"k must be an int, not {type(k)}")
    if k < 1:
        raise ConfigurationError(f"k must be at least 1, not {k}")

    y = grid.nodes
    U = nls_density(k, y)
    s2 = sech(k * y) ** 2
    tanh = np.tanh(k * y)
    dU = -2.0 * U * tanh
    d2U = U * (4.0 - (2 * k + 4) * s2)
    rhs = 4.0 * U - 4.0 * (k + 2) / (k + 1) * U ** (k + 1)
    scale = U.max()
    residual = float(np.abs(d2U - rhs).max() / scale)
    first_order = float(
        np.abs(dU + 2.0 * np.sign(y) * U * np.sqrt(np.maximum(1.0 - 2.0 * U ** k / (k + 1), 0.0))).max() / scale
    )

    fd = diff_matrix(grid, 2).apply(U) - rhs
    fd_residual = float(np.abs(fd[3:-3]).max() / scale)

    return NlsProfile(k, grid, U, quadrature(grid, U), residual, first_order, fd_residual)


def charge(wave):
    """Charge ``Q = \\int (v^2 + u^2) dx``."""
    return quadrature(wave.grid, wave.v ** 2 + wave.u ** 2)


def nls_charge(k, m, omega):
    """NLS charge ``(2(m - omega))^{1/k - 1/2} \\int U dy`` in closed form."""
    if not 0.0 < omega < m:
        raise ExistenceConditionError(f"omega={omega} is outside (0, m={m})")
    integral = ((k + 1) / 2.0) ** (1.0 / k) * sech_power_integral(2.0 / k) / k
    return (2.0 * (m - omega)) ** (1.0 / k - 0.5) * integral


def asymptotic_deviation(wave, profile):
    """Compares a wave with ``eps^{2/k} U(eps x)``, ``eps = sqrt(1 - omega^2)``.

    Args:
        wave (:obj:`SolitaryWave`): Wave of a normalized model.
        profile (:obj:`NlsProfile`): Profile with the same ``k``.

    Returns:
        :class:`AsymptoticReport`.

    Raises:
        :class:`ConfigurationError`
    """
    if not wave.model.is_normalized:
        raise ConfigurationError("asymptotic deviation needs a model with m = a = 1")
    k = wave.model.k
    if profile.k != k:
        raise ConfigurationError(f"profile k={profile.k} does not match wave k={k}")

    eps = wave.eps_dirac
    limit = profile.evaluate(eps * wave.grid.nodes)
    deviation = float(np.abs(wave.X - eps ** (2.0 / k) * limit).max())
    v_deviation = float(np.abs(wave.v - eps ** (1.0 / k) * np.sqrt(limit)).max())
    return AsymptoticReport(
        eps,
        deviation,
        deviation / eps ** (4.0 / k),
        float(np.abs(wave.u).max()) / eps ** (1.0 + 1.0 / k),
        v_deviation,
        v_deviation / eps ** (3.0 / k),
    )


def profile_residuals(wave):
    """Pointwise residuals of a solved wave.

    Derivatives use one-sided closed fourth-order differences.

    Returns:
        :class:`ProfileResiduals`.
    """
    model, omega = wave.model, wave.omega
    d1 = diff_matrix(wave.grid, 1, closure="one-sided")
    d2 = diff_matrix(wave.grid, 2, closure="one-sided")
    norm_v = max(float(np.abs(wave.v).max()), np.finfo(float).tiny)
    gamma = max(wave.gamma, np.finfo(float).tiny)
    g = model.g(wave.X)
    G = model.G(wave.X)
    density = omega * (wave.v ** 2 + wave.u ** 2)

    return ProfileResiduals(
        hamiltonian=float(np.abs(0.5 * density - 0.5 * G).max()),
        constraint=float(np.abs(density - G).max() / max(float(density.max()), np.finfo(float).tiny)),
        system_u=float(np.abs(d1.apply(wave.u) - (omega - g) * wave.v).max() / norm_v),
        system_v=float(np.abs(d1.apply(wave.v) + (omega + g) * wave.u).max() / norm_v),
        xy_relation=float(np.abs(wave.Y + d1.apply(wave.X) / (4.0 * omega)).max() / gamma),
        second_order=float(np.abs(d2.apply(wave.X) - 4.0 * (G * g - omega ** 2 * wave.X)).max() / gamma),
        parity=float(max(np.abs(wave.v - wave.v[::-1]).max(), np.abs(wave.u + wave.u[::-1]).max()) / norm_v),
    )


def export_profile(wave, path):
    """Writes ``x,v,u,X,Y`` with a metadata header.

    Args:
        wave (:obj:`SolitaryWave`): Wave.
        path (:obj:`pathlib.Path`): Output ``.csv`` file.
    """
    model = wave.model
    meta = {
        "k": model.k, "a": repr(model.a), "m": repr(model.m), "omega": repr(wave.omega),
        "gamma": repr(wave.gamma), "Q": repr(wave.Q),
    }
    table = pd.DataFrame({"x": wave.grid.nodes, "v": wave.v, "u": wave.u, "X": wave.X, "Y": wave.Y})
    Io.get_io(path).blocking_dump({"meta": meta, "table": table})
