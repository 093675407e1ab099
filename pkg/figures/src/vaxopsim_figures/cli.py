"""vaxopsim-plot: render result CSVs into the standard figure families."""

from __future__ import annotations

import click
import matplotlib.pyplot as plt

from . import __version__
from .plotting import FAMILIES, PlotError, build_figure, load_rows, save_figure, verify_figure


@click.command()
@click.option("--family", required=True, type=click.Choice(FAMILIES))
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option(
    "--filter",
    "filters",
    multiple=True,
    metavar="COL=VALUE",
    help="Keep only rows whose column equals the value; repeatable.",
)
@click.option(
    "--self-test",
    is_flag=True,
    help="After rendering, extract the drawn data and verify it matches the CSV.",
)
@click.version_option(__version__)
def main(family, csv_path, out_path, filters, self_test):
    """Plot a result CSV (or a trace CSV for the evolution family)."""
    parsed = {}
    for item in filters:
        if "=" not in item:
            raise click.ClickException(f"bad --filter {item!r}, expected COL=VALUE")
        col, value = item.split("=", 1)
        parsed[col] = value
    try:
        df = load_rows(csv_path, family, parsed)
        fig, expected = build_figure(df, family)
    except PlotError as exc:
        raise click.ClickException(str(exc))
    save_figure(fig, out_path)
    if self_test:
        problems = verify_figure(fig, expected, family)
        if problems:
            for problem in problems:
                click.echo(f"self-test: {problem}", err=True)
            raise click.ClickException("self-test failed: plotted data does not match the CSV")
        click.echo("self-test ok: every plotted value matches its CSV cell", err=True)
    plt.close(fig)
    click.echo(f"wrote {out_path}", err=True)


if __name__ == "__main__":
    main()
