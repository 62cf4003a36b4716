#!/usr/bin/env python3

"""diracstab application module.

Execute next command to get help message:

.. code-block:: console

    $ diracstab --help
"""

import os
import sys
from pathlib import Path
from docopt import docopt
from diracstab.core.numerics import Grid
from diracstab.core.profiles import solve_profile, profile_residuals, export_profile
from diracstab.core.nls import assemble_nls, nls_summary
from diracstab.core.dirac import report_dict, export_spectrum
from diracstab.lab.config import ScanConfig
from diracstab.lab.scan import (
    limit_lambda, point_arguments, run_point, run_scan, convergence_study,
)
from diracstab.lab.reproduce import reproduce_claims
from diracstab.utils.io.io import Io
from diracstab.utils.logger import Logger
from diracstab.utils.exception import DiracStabException, ConfigurationError

HELP_MESSAGE = r"""
     ___                   __       __
 ___/ (_)______ ________ _/ /____ _/ /
/ _  / / __/ _ `/ __(_-</ __/ _ `/ _ \
\_,_/_/_/  \_,_/\__/___/\__/\_,_/_.__/

Spectral stability of nonlinear Dirac solitary waves

diracstab solves solitary waves of the nonlinear Dirac equation, computes
the spectrum of their linearization and checks it against the
nonrelativistic limit.

Usage:
    diracstab profile [options]
    diracstab nls [options]
    diracstab spectrum [options]
    diracstab scan [options]
    diracstab converge [options]
    diracstab reproduce [options]
    diracstab (-h | --help)
    diracstab (-v | --version)

Options:
    -h --help           Show this screen
    -v --version        Show version
    -d --debug          Run in debug mode
    --config=<path>     Config file (.toml, .yaml or .json)
    --k=<k>             Exponent of the nonlinearity
    --a=<a>             Leading coefficient of the nonlinearity
    --m=<m>             Mass
    --omega=<omegas>    Frequency or comma separated frequencies
    --N=<N>             Grid points or "auto"
    --L=<L>             Grid half-width or "auto"
    --out=<dir>         Output directory
    --jobs=<jobs>       Worker processes

"""

VERSION = "diracstab 0.1.0"
"""str: Version of diracstab"""


class DiracStab:
    """Main application class.

    Provides methods to start application.
    """

    class ArgumentsHelper:
        """Command line argument container.

        Provides methods to work with ``docopt`` arguments
        """

        COMMANDS = ("profile", "nls", "spectrum", "scan", "converge", "reproduce")

        def __init__(self, args):
            """
            Args:
                args (:obj:`dict`): Dictionary, returned by ``docopt.docopt``.
            """
            assert isinstance(args, dict)
            self._args = args

        @property
        def command(self):
            """:obj:`str`: Name of the subcommand."""
            return next(c for c in DiracStab.ArgumentsHelper.COMMANDS if self._args.get(c))

        @property
        def debug(self):
            """:obj:`bool`: ``True`` if ``--debug`` in options."""
            return self._args["--debug"]

        @property
        def config_path(self):
            """:obj:`Union[pathlib.Path, None]`: Config file."""
            value = self._args["--config"]
            return None if value is None else Path(value).expanduser()

        @property
        def out(self):
            """:obj:`Union[pathlib.Path, None]`: Output directory."""
            value = self._args["--out"]
            return None if value is None else Path(value).expanduser()

        def _parse(self, key, kind):
            value = self._args[key]
            if value is None:
                return None
            try:
                return kind(value)
            except ValueError as e:
                raise ConfigurationError(f'Invalid {key} value "{value}":\n{e}') from e

        @staticmethod
        def _auto(kind):
            def parse(value):
                return value if value == "auto" else kind(value)
            return parse

        @property
        def overrides(self):
            """:obj:`dict`: Config values given on the command line.

            Raises:
                :class:`ConfigurationError`
            """
            omegas = self._parse("--omega", lambda v: [float(x) for x in v.split(",")])
            return {
                "k": self._parse("--k", int),
                "a": self._parse("--a", float),
                "m": self._parse("--m", float),
                "omegas": omegas,
                "N": self._parse("--N", self._auto(int)),
                "L": self._parse("--L", self._auto(float)),
                "jobs": self._parse("--jobs", int),
                "out": None if self.out is None else str(self.out),
            }

    class ConfigHelper:
        """Manages diracstab configuration.

        Settings of diracstab are stored in environment variables:

        * ``DIRACSTAB_OUTPUT`` is the default output directory.
        * ``DIRACSTAB_MAX_JOBS`` caps the number of worker processes.
        """

        DEFAULTS = {
            "DIRACSTAB_OUTPUT": "./diracstab-output",
            "DIRACSTAB_MAX_JOBS": "4",
        }
        """:obj:`dict` Default diracstab settings."""

        def __init__(self, defaults=None):
            """
            Args:
                defaults (:obj:`Union[dict, None]`): default settings.
                    If None, defaults are set from ``DEFAULTS`` attribute.
            """
            assert defaults is None or isinstance(defaults, dict)
            self._dict = (
                defaults if not defaults is None else dict(DiracStab.ConfigHelper.DEFAULTS)
            )
            self.load()

            assert "DIRACSTAB_OUTPUT" in self._dict
            assert "DIRACSTAB_MAX_JOBS" in self._dict

        def _check(self):
            try:
                path = Path(self._dict["DIRACSTAB_OUTPUT"]).expanduser()
                if path.exists() and not path.is_dir():
                    raise ConfigurationError(f'Path "{path}" must be a directory')
            except Exception as e:
                raise ConfigurationError(f'Invalid "DIRACSTAB_OUTPUT" variable:\n{e}') from e
            try:
                if int(self._dict["DIRACSTAB_MAX_JOBS"]) < 1:
                    raise ConfigurationError("Must be positive")
            except Exception as e:
                raise ConfigurationError(f'Invalid "DIRACSTAB_MAX_JOBS" variable:\n{e}') from e

        def load(self):
            """Loads system environment variables.

            Raises:
                :class:`ConfigurationError`
            """
            for key in self._dict:
                self._dict[key] = os.environ.get(key, self._dict[key])
            self._check()

        @property
        def output(self):
            """:obj:`pathlib.Path`: Default output directory."""
            return Path(self._dict["DIRACSTAB_OUTPUT"]).expanduser()

        @property
        def max_jobs(self):
            """:obj:`int`: Cap on worker processes."""
            return int(self._dict["DIRACSTAB_MAX_JOBS"])

    def __init__(self, args):
        """
        Args:
            args (:obj:`dict`): ``docopt`` arguments.
        """
        assert isinstance(args, dict)

        self._args = DiracStab.ArgumentsHelper(args)

        Logger.basic_config(loglevel="DEBUG" if self._args.debug else "INFO")
        self._logger = Logger("DiracStab")

        self._logger.debug("Loading config")
        self._config = DiracStab.ConfigHelper()

    def scan_config(self):
        """Builds the run config from ``--config`` and command line flags.

        Returns:
            :class:`ScanConfig`.

        Raises:
            :class:`DiracStabException`
        """
        overrides = self._args.overrides
        if self._args.config_path is None:
            return ScanConfig({k: v for k, v in overrides.items() if not v is None})
        self._logger.debug(f'Loading config "{self._args.config_path}"')
        return ScanConfig.from_file(self._args.config_path, overrides)

    def output(self, config=None):
        """:obj:`pathlib.Path`: Output directory of the command."""
        if not config is None:
            return config.output_dir(self._config.output)
        return self._args.out if not self._args.out is None else self._config.output

    def _single(self, config):
        omegas = config.omega_list
        if len(omegas) != 1:
            raise ConfigurationError(f"{self._args.command} needs one frequency, not {len(omegas)}")
        return omegas[0]

    def profile(self):
        """Solves one wave and writes ``profile.csv`` and ``profile.json``."""
        config = self.scan_config()
        omega = self._single(config)
        model = config.model
        grid = config.grid(omega)
        wave = solve_profile(model, omega, grid)
        out = self.output(config)
        export_profile(wave, out / "profile.csv")
        residuals = profile_residuals(wave)
        Io.get_io(out / "profile.json").blocking_dump({
            "k": model.k, "a": model.a, "m": model.m, "omega": omega,
            "N": grid.points, "L": grid.half_width,
            "gamma": wave.gamma, "Q": wave.Q, "residuals": vars(residuals),
        })
        self._logger.info(f"Solved profile: Gamma={wave.gamma:.12g}, Q={wave.Q:.12g}")

    def nls(self):
        """Writes the checks of the NLS limit to ``nls.json``."""
        config = self.scan_config()
        N = config.Lambda_N if config.N == "auto" else config.N
        L = config.Lambda_L if config.L == "auto" else config.L
        summary = nls_summary(assemble_nls(config.k, Grid(L, N)))
        Io.get_io(self.output(config) / "nls.json").blocking_dump(summary)
        self._logger.info(f"NLS limit k={config.k}: Lambda={summary['Lambda']}")

    def spectrum(self):
        """Writes the classified spectrum of one wave."""
        config = self.scan_config()
        omega = self._single(config)
        Lambda = limit_lambda(config.k, config.Lambda_L, config.Lambda_N)
        row, report = run_point(point_arguments(config, omega, Lambda, self._args.debug))
        if report is None:
            raise DiracStabException(row.message)
        out = self.output(config)
        export_spectrum(report, out / "spectrum.csv")
        Io.get_io(out / "spectrum.json").blocking_dump(report_dict(
            report, row.N, row.L, Lambda, row.w_norm,
            {"nu": row.nu, "status": row.status, "message": row.message},
        ))
        self._logger.info(f"Spectrum at omega={omega}: verdict {row.verdict}")
        if row.status != "ok":
            raise DiracStabException(row.message)

    def scan(self):
        """Runs a scan. Fails if any point failed."""
        config = self.scan_config()
        rows = run_scan(config, self.output(config), self._config.max_jobs, self._args.debug)
        failed = [row.omega for row in rows if row.status != "ok"]
        if failed:
            raise DiracStabException(f"Failed points: {', '.join(map(str, failed))}")

    def converge(self):
        """Writes ``convergence.csv``."""
        config = self.scan_config()
        study = convergence_study(config, debug=self._args.debug)
        meta = {"k": study.k, "omega": repr(study.omega), "converged": study.converged}
        Io.get_io(self.output(config) / "convergence.csv").blocking_dump({"meta": meta, "table": study.table})
        self._logger.info(f"Convergence at omega={study.omega}: {'converged' if study.converged else 'not converged'}")

    def reproduce(self):
        """Runs the acceptance suite. Fails if any criterion failed."""
        jobs = self._args.overrides["jobs"] or 1
        summary = reproduce_claims(self.output(), min(jobs, self._config.max_jobs), self._args.debug)
        if not summary["passed"]:
            raise DiracStabException("Some criteria failed")

    def execute(self):
        """Execute command from CLI.

        Returns:
            :obj:`int`: Exit status.
        """
        command = self._args.command
        try:
            self._logger.debug(f'Running "{command}"')
            getattr(self, command)()
        except DiracStabException as e:
            self._logger.error(f'Command "{command}" failed:\n{e}')
            if self._args.debug:
                raise
            return 1
        return 0


def main(argv=None):
    """Entry point.

    Args:
        argv (:obj:`Union[list, None]`): Arguments, ``sys.argv[1:]`` if None.

    Returns:
        :obj:`int`: Exit status.
    """
    return DiracStab(docopt(HELP_MESSAGE, argv=argv, version=VERSION)).execute()


if __name__ == "__main__":
    sys.exit(main())
