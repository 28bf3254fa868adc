"""Command line front end for the experiment harness."""

from __future__ import annotations

import json
import os

import click

from ..errors import PripearlError
from .experiments import EXPERIMENT_NAMES, HarnessConfig, run_experiment
from .synthetic import SyntheticSpec, generate_synthetic


@click.group()
def main() -> None:
    """Generate synthetic workloads and run privacy/utility experiments."""


@main.command()
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--queries", default=100_000, show_default=True, type=int)
@click.option("--geometric-q", default=0.3, show_default=True, type=float)
@click.option("--days", default=1, show_default=True, type=int)
def gen(out_dir: str, seed: int, queries: int, geometric_q: float, days: int) -> None:
    """Write events.ndjson plus the exact per-cell counts to OUT-DIR."""
    try:
        spec = SyntheticSpec(
            num_queries=queries, geometric_q=geometric_q, seed=seed, days=days
        )
        data = generate_synthetic(spec, out_dir)
    except PripearlError as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(
        json.dumps(
            {
                "events": data.events_path,
                "cells": data.cells_path,
                "numCells": data.num_cells,
            }
        )
    )


@main.command()
@click.argument("name", type=click.Choice(EXPERIMENT_NAMES))
@click.option("--data-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option(
    "--secret-hex",
    envvar="PPRL_SECRET_HEX",
    required=True,
    help="Hex noise secret; defaults to PPRL_SECRET_HEX.",
)
@click.option("--epsilon-list", default=None, help="Comma-separated override of the epsilon grid.")
@click.option("--tau-max", default=10, show_default=True, type=int)
def run(
    name: str,
    data_dir: str,
    out_dir: str,
    secret_hex: str,
    epsilon_list: str | None,
    tau_max: int,
) -> None:
    """Run one experiment against a generated workload."""
    try:
        secret = bytes.fromhex(secret_hex)
    except ValueError:
        raise click.ClickException("--secret-hex must be hex-encoded") from None
    epsilons = None
    if epsilon_list:
        try:
            epsilons = tuple(float(part) for part in epsilon_list.split(","))
        except ValueError:
            raise click.ClickException("--epsilon-list must be comma-separated numbers") from None
    config = HarnessConfig(
        events_path=os.path.join(data_dir, "events.ndjson"),
        cells_path=os.path.join(data_dir, "cells.ndjson"),
        out_dir=out_dir,
        secret=secret,
        epsilons=epsilons,
        tau_max=tau_max,
    )
    try:
        path = run_experiment(name, config)
    except PripearlError as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(path)


if __name__ == "__main__":
    main()
