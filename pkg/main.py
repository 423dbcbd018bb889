"""Main entry point - viscoflow command line"""

import logging
import sys

import click

from services.scenario import EXIT_CONFIG, dispatch, load_config
from src.viscoflow import __version__
from src.viscoflow.config import settings
from src.viscoflow.exceptions import ConfigError

logger = logging.getLogger(__name__)


def _run(subcommand: str, config_path: str, out_dir: str, overrides, **kwargs) -> None:
    try:
        config = load_config(config_path, overrides)
    except ConfigError as e:
        for issue in e.issues:
            click.echo(f"config error: {issue}", err=True)
        sys.exit(EXIT_CONFIG)
    record = dispatch(subcommand, config, out_dir=out_dir, emit=click.echo, **kwargs)
    logger.debug("%s finished with status %s in %.3fs", subcommand, record.status, record.wall_time)
    sys.exit(record.exit_code)


def scenario_options(func):
    func = click.option("--override", "overrides", multiple=True, metavar="SECTION.KEY=VALUE",
                        help="Override one config value; may be repeated.")(func)
    func = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                        help="Directory for CSV files and run_record.json.")(func)
    func = click.option("--config", "config_path", required=True,
                        type=click.Path(exists=True, dir_okay=False),
                        help="Scenario config file.")(func)
    return func


@click.group()
@click.version_option(__version__, prog_name="viscoflow")
def viscoflow():
    """Characteristic speeds, linear stability, finite-volume runs and breakdown
    certificates for non-Newtonian relaxation fluids."""


@viscoflow.command()
@scenario_options
def speeds(config_path, out_dir, overrides):
    """Closed-form and numerical characteristic speeds at the analysis state."""
    _run("speeds", config_path, out_dir, overrides)


@viscoflow.command()
@scenario_options
def stability(config_path, out_dir, overrides):
    """Routh-Hurwitz verdict and dispersion roots at one wavevector."""
    _run("stability", config_path, out_dir, overrides)


@viscoflow.command()
@scenario_options
@click.option("--sweep", default=None, metavar="KMIN:KMAX:N", help="Wavenumber sweep; overrides analysis.sweep.")
def dispersion(config_path, out_dir, overrides, sweep):
    """omega(k) branches as CSV on stdout."""
    _run("dispersion", config_path, out_dir, overrides, sweep=sweep)


@viscoflow.command()
@scenario_options
@click.option("--diagnostics", is_flag=True, help="Stream progress to stderr and print the series CSV.")
def simulate(config_path, out_dir, overrides, diagnostics):
    """Run the finite-volume solver from the configured profile."""
    _run("simulate", config_path, out_dir, overrides, diagnostics=diagnostics)


@viscoflow.command("blowup-cert")
@scenario_options
def blowup_cert(config_path, out_dir, overrides):
    """Evaluate the finite-lifespan certificate on the initial data."""
    _run("blowup-cert", config_path, out_dir, overrides)


def main():
    logging.basicConfig(level=settings.LOG_LEVEL,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    viscoflow()


if __name__ == "__main__":
    main()
