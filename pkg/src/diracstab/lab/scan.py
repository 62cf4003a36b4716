"""Frequency scans, charge fits and convergence studies.

Every point of a scan is computed by :func:`run_point`, a module-level
function of plain arguments, so it can be sent to a worker process. Files
are written by the calling process only, after all points returned.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
import numpy as np
import pandas as pd
from diracstab.core.numerics import Grid, fit_power_law
from diracstab.core.profiles import make_model, solve_profile, SolitaryWave
from diracstab.core.nls import assemble_nls, limit_eigenvalue
from diracstab.core.dirac import (
    assemble_dirac, dirac_spectrum, rescaled_problem, unstable_eigenvalue_rescaled,
    w_norm, export_spectrum, physical_units,
)
from diracstab.utils.io.io import Io
from diracstab.utils.logger import Logger
from diracstab.utils.exception import DiracStabException, ConfigurationError


_logger = Logger("scan")


@dataclass
class ScanRow:
    """Result of one frequency of a scan.

    Lengths, frequencies, eigenvalues, ``Gamma`` and ``Q`` are in the units of
    the configured model; ``eps``, ``lambda_over_eps2``, ``mu0`` and ``nu``
    refer to the normalized problem with ``m = a = 1``.
    """

    omega: float
    N: int
    L: float
    eps: float = None
    gamma: float = None
    Q: float = None
    lambda_unstable: float = None
    lambda_over_eps2: float = None
    mu0: float = None
    nu: float = None
    w_norm: float = None
    verdict: str = "unchecked"
    """:obj:`str`: ``unstable``, ``no-real-eigenvalue`` or ``unchecked``."""
    status: str = "ok"
    message: str = ""
    runtimes: dict = field(default_factory=dict)
    """:obj:`dict`: Wall time in seconds per stage."""

    @staticmethod
    def columns():
        """:obj:`list` of :obj:`str`: Columns of ``scan.csv``."""
        return [f.name for f in fields(ScanRow) if f.name != "runtimes"]

    def record(self):
        return {name: getattr(self, name) for name in ScanRow.columns()}


@dataclass(frozen=True)
class ChargeFit:
    """Least-squares fit of ``log Q`` against ``log 2(m - omega)``."""

    k: int
    omegas: tuple
    charges: tuple
    slope: float
    target: float
    """:obj:`float`: ``1/k - 1/2``."""
    spread: float
    """:obj:`float`: ``(max Q - min Q) / mean Q``."""

    @property
    def error(self):
        return abs(self.slope - self.target)


@dataclass(frozen=True)
class ConvergenceStudy:
    """Refinement table of :func:`convergence_study`."""

    k: int
    omega: float
    table: pd.DataFrame
    converged: bool
    """:obj:`bool`: Last drift in ``N`` below ``DRIFT_TOLERANCE`` and drift in ``L`` below ``WIDTH_TOLERANCE``."""


CONVERGENCE_POINTS = (512, 1024, 2048)
"""tuple: Grid sizes of a convergence study."""

DRIFT_TOLERANCE = 1e-3
"""float: Relative drift of ``lambda_unstable`` accepted as converged."""

WIDTH_TOLERANCE = 1e-6
"""float: Relative change of ``lambda_unstable`` accepted when ``L`` is doubled."""


def limit_lambda(k, half_width=20.0, points=1024):
    """``Lambda`` of the NLS limit, ``None`` when there is none."""
    return limit_eigenvalue(assemble_nls(k, Grid(half_width, points)))


def point_arguments(config, omega, Lambda=None, debug=False, grid=None):
    """Plain arguments of :func:`run_point` for one frequency of a config."""
    grid = config.grid(omega) if grid is None else grid
    return {
        "k": config.k,
        "a": config.a,
        "m": config.m,
        "higher_terms": list(zip(config.higher_exponents, config.higher_coefficients)),
        "omega": omega,
        "N": grid.points,
        "L": grid.half_width,
        "checks": config.checks,
        "Lambda": Lambda,
        "debug": debug,
    }


def run_point(args):
    """Solves one frequency.

    The model is normalized to ``m = a = 1`` first, results are mapped back.

    Args:
        args (:obj:`dict`): Output of :func:`point_arguments`.

    Returns:
        :obj:`tuple` ``(ScanRow, Union[SpectrumReport, None])``, the report in
        units of the configured mass.
    """
    omega = float(args["omega"])
    logger = Logger("scan", context=f"k={args['k']} omega={omega:.10g}")
    row = ScanRow(omega, int(args["N"]), float(args["L"]))
    report = None
    Lambda = args["Lambda"]
    checks = args["checks"]

    try:
        model = make_model(args["k"], args["a"], tuple(map(tuple, args["higher_terms"])), args["m"])
        m, scale = model.m, model.density_scale
        nmodel = model.normalized()
        grid = Grid(row.L, row.N).scaled(m)

        with logger.timed("profile") as timer:
            wave = solve_profile(nmodel, omega / m, grid)
        row.runtimes["profile"] = timer.elapsed
        row.eps = wave.eps_dirac
        row.gamma = scale * wave.gamma
        row.Q = scale * wave.Q / m

        if "spectrum" in checks:
            with logger.timed("spectrum") as timer:
                report = dirac_spectrum(assemble_dirac(wave, nmodel, grid), Lambda)
            row.runtimes["spectrum"] = timer.elapsed
            if report.lambda_unstable is None:
                row.verdict = "no-real-eigenvalue"
            else:
                row.verdict = "unstable"
                row.lambda_unstable = m * report.lambda_unstable
                row.lambda_over_eps2 = report.lambda_unstable / wave.eps_dirac ** 2
                row.mu0 = report.mu0
            report = physical_units(report, m)

        if "rescaled" in checks:
            with logger.timed("rescaled") as timer:
                problem = rescaled_problem(wave, nmodel, Lambda)
                row.w_norm = w_norm(problem)
                if not Lambda is None:
                    row.nu, mu0 = unstable_eigenvalue_rescaled(problem)
                    if row.mu0 is None:
                        row.mu0 = mu0
            row.runtimes["rescaled"] = timer.elapsed

        logger.info(f"Solved: Gamma={row.gamma:.6g}, Q={row.Q:.6g}, verdict={row.verdict}")
    except DiracStabException as e:
        logger.error(f"Failed:\n{e}")
        if args["debug"]:
            raise
        row.status = "failed"
        row.message = f"{e.__class__.__name__}: {e}".replace("\n", " ")

    return row, report


def _map_points(arguments, jobs):
    if jobs == 1 or len(arguments) == 1:
        return [run_point(a) for a in arguments]
    with ProcessPoolExecutor(max_workers=min(jobs, len(arguments))) as executor:
        return list(executor.map(run_point, arguments))


def spectrum_filename(omega):
    return f"spectrum_omega_{omega:.10g}.csv"


def run_scan(config, out, max_jobs=None, debug=False):
    """Runs a scan and writes its files.

    ``Lambda`` of the NLS limit is computed once, on the config's
    ``Lambda_L``/``Lambda_N`` grid. Written to ``out``:

    * ``scan.csv``: one :class:`ScanRow` per frequency, sorted by ``omega``.
      The header holds ``omega_0``, the smallest frequency with a solved wave.
    * ``runtimes.csv``: wall times per stage.
    * ``spectrum_omega_<omega>.csv``: classified spectrum per frequency.
    * ``config.toml``: the config.

    Args:
        config (:obj:`ScanConfig`): Config.
        out (:obj:`pathlib.Path`): Output directory.
        max_jobs (:obj:`Union[int, None]`): Cap on worker processes.
        debug (:obj:`bool`): Re-raise failures of points.

    Returns:
        :obj:`list` of :class:`ScanRow`.
    """
    omegas = config.omega_list
    jobs = config.jobs if max_jobs is None else min(config.jobs, max_jobs)

    Lambda = None
    if "spectrum" in config.checks or "rescaled" in config.checks:
        with _logger.timed("Lambda"):
            Lambda = limit_lambda(config.k, config.Lambda_L, config.Lambda_N)
        _logger.info(f"Lambda(k={config.k}) = {Lambda}")

    _logger.info(f"Scanning {len(omegas)} frequenc{'y' if len(omegas) == 1 else 'ies'} with {jobs} job{'' if jobs == 1 else 's'}")
    results = _map_points([point_arguments(config, w, Lambda, debug) for w in omegas], jobs)
    results.sort(key=lambda r: r[0].omega)
    rows = [row for row, _ in results]

    out.mkdir(parents=True, exist_ok=True)
    existing = [row.omega for row in rows if not row.gamma is None]
    meta = {
        "k": config.k, "a": repr(config.a), "m": repr(config.m), "Lambda": repr(Lambda),
        "omega_0": repr(min(existing)) if existing else "None",
    }
    table = pd.DataFrame([row.record() for row in rows], columns=ScanRow.columns())
    Io.get_io(out / "scan.csv").blocking_dump({"meta": meta, "table": table})
    runtimes = pd.DataFrame([{"omega": row.omega, **row.runtimes} for row in rows])
    Io.get_io(out / "runtimes.csv").blocking_dump({"table": runtimes})
    for _, report in results:
        if not report is None:
            export_spectrum(report, out / spectrum_filename(report.omega))
    config.dump(out / "config.toml")

    failed = sum(1 for row in rows if row.status != "ok")
    if failed:
        _logger.warning(f"{failed} of {len(rows)} points failed")
    _logger.info(f"Wrote scan of {len(rows)} points to \"{out}\"")
    return rows


def charge_slope(config):
    """Fits the charge power law over the frequencies of a config.

    Raises:
        :class:`ConfigurationError`
    """
    omegas = config.omega_list
    if len(omegas) < 4:
        raise ConfigurationError(f"charge fit needs at least 4 frequencies, not {len(omegas)}")
    if config.omegas is None and config.spacing != "geometric":
        raise ConfigurationError("charge fit needs geometric spacing in m - omega")

    model = make_model(config.k, config.a, tuple(zip(config.higher_exponents, config.higher_coefficients)), config.m)
    nmodel, m, scale = model.normalized(), model.m, model.density_scale
    charges = []
    for omega in omegas:
        wave = solve_profile(nmodel, omega / m, config.grid(omega).scaled(m))
        charges.append(scale * wave.Q / m)

    slope = fit_power_law(2.0 * (m - np.array(omegas)), np.array(charges))
    spread = (max(charges) - min(charges)) / float(np.mean(charges))
    fit = ChargeFit(config.k, tuple(omegas), tuple(charges), slope, 1.0 / config.k - 0.5, spread)
    _logger.info(f"Charge slope k={config.k}: {slope:.6f} (target {fit.target:.6f}), spread {spread:.3e}")
    return fit


def free_gap_error(omega, grid):
    """Relative distance of the smallest ``|lambda|`` of the zero wave to ``1 - omega``."""
    model = make_model(1)
    report = dirac_spectrum(assemble_dirac(SolitaryWave.zero(model, omega, grid), model, grid))
    gap = 1.0 - omega
    return abs(float(np.abs(report.eigenvalues).min()) - gap) / gap


def convergence_study(config, points=CONVERGENCE_POINTS, debug=False):
    """Refines the spectrum of one ``(k, omega)``.

    Repeats the point at each ``N`` of ``points`` on the config's half-width,
    then once more at the middle ``N`` with ``L`` doubled and ``h`` kept.
    Every row also carries the gap edge error of the zero wave on the same
    grid.

    Returns:
        :class:`ConvergenceStudy`.

    Raises:
        :class:`ConfigurationError`
    """
    omegas = config.omega_list
    if len(omegas) != 1:
        raise ConfigurationError(f"convergence study needs one frequency, not {len(omegas)}")
    omega = omegas[0]
    half_width = config.grid(omega).half_width
    Lambda = limit_lambda(config.k, config.Lambda_L, config.Lambda_N)

    middle = points[len(points) // 2]
    grids = [("N", Grid(half_width, n)) for n in points]
    grids.append(("L", Grid(2.0 * half_width, 2 * middle - 1)))

    records, previous = [], None
    for kind, grid in grids:
        if grid.points > config.N_max:
            _logger.warning(f"Skipping N={grid.points} above N_max={config.N_max}")
            continue
        row, report = run_point(point_arguments(config, omega, Lambda, debug, grid))
        reference = previous if kind == "N" else _lambda_at(records, middle)
        drift = None
        if not (reference is None or row.lambda_unstable is None):
            drift = abs(row.lambda_unstable / reference - 1.0)
        records.append({
            "refine": kind,
            "N": grid.points,
            "L": grid.half_width,
            "h": grid.spacing,
            "lambda_unstable": row.lambda_unstable,
            "drift": drift,
            "near_zero_radius": None if report is None else report.near_zero_radius,
            "free_gap_error": free_gap_error(omega / config.m, grid.scaled(config.m)),
            "status": row.status,
        })
        if kind == "N":
            previous = row.lambda_unstable

    table = pd.DataFrame(records)
    converged = is_converged(records)
    if not converged:
        _logger.warning(f"Not converged at k={config.k}, omega={omega}")
    return ConvergenceStudy(config.k, omega, table, converged)


def is_converged(records):
    """Decides convergence from the rows of a refinement table.

    A wave without unstable eigenvalue on every solved row is converged.
    Otherwise the last ``N`` drift must be below ``DRIFT_TOLERANCE`` and the
    ``L`` row, when present, must agree within ``WIDTH_TOLERANCE``.

    Args:
        records (:obj:`list` of :obj:`dict`): Rows with ``refine``,
            ``lambda_unstable``, ``drift`` and ``status``.

    Returns:
        :obj:`bool`.
    """
    by_n = [r for r in records if r["refine"] == "N"]
    by_l = [r for r in records if r["refine"] == "L"]
    if all(r["lambda_unstable"] is None and r["status"] == "ok" for r in by_n + by_l):
        return True
    last = by_n[-1]["drift"] if len(by_n) > 1 else None
    if last is None or not last < DRIFT_TOLERANCE:
        return False
    return all(r["drift"] is not None and r["drift"] < WIDTH_TOLERANCE for r in by_l)


def _lambda_at(records, points):
    """``lambda_unstable`` of the refinement row with ``N = points``."""
    for r in records:
        if r["refine"] == "N" and r["N"] == points:
            return r["lambda_unstable"]
    return None
