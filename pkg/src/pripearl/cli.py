"""Command line entry points: run the service, or talk to one over HTTP."""

from __future__ import annotations

import sys

import click
import httpx

from .config import load_settings
from .errors import PripearlError


@click.group()
def main() -> None:
    """Privacy-preserving analytics service and client."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--listen", default=None, metavar="HOST:PORT", help="Bind address.")
@click.option("--snapshot", default=None, type=click.Path(), help="Snapshot file to serve.")
def serve(config_path: str | None, listen: str | None, snapshot: str | None) -> None:
    """Start the HTTP service. The secret comes from PPRL_SECRET_HEX or the config."""
    import uvicorn

    from .service.app import create_app

    try:
        settings = load_settings(config_path, listen=listen, snapshot=snapshot)
        app = create_app(settings)
    except PripearlError as exc:
        raise click.ClickException(str(exc)) from None
    host, _, port = settings.listen.rpartition(":")
    if not host or not port.isdigit():
        raise click.ClickException(f"listen address must be HOST:PORT, got {settings.listen!r}")
    uvicorn.run(app, host=host, port=int(port), log_level="info")


def _emit(response: httpx.Response) -> None:
    click.echo(response.text)
    if response.is_error:
        sys.exit(1)


_URL = click.option("--url", default="http://127.0.0.1:8080", show_default=True)


@main.command()
@_URL
@click.option("--stat", required=True)
@click.option("--entity", required=True)
@click.option("--attr", required=True)
@click.option("--value", required=True)
@click.option("--start", required=True, help="ISO-8601 instant, inclusive.")
@click.option("--end", required=True, help="ISO-8601 instant, exclusive.")
def count(url: str, stat: str, entity: str, attr: str, value: str, start: str, end: str) -> None:
    """Fetch one noisy count."""
    params = {
        "stat": stat,
        "entity": entity,
        "attr": attr,
        "value": value,
        "start": start,
        "end": end,
    }
    _emit(httpx.get(f"{url}/v1/count", params=params))


@main.command()
@_URL
@click.option("--stat", required=True)
@click.option("--entity", required=True)
@click.option("--attr", required=True)
@click.option("--top-k", "top_k", required=True, type=int)
@click.option("--k-max", "k_max", default=100, show_default=True, type=int)
@click.option("--start", required=True)
@click.option("--end", required=True)
def topk(url: str, stat: str, entity: str, attr: str, top_k: int, k_max: int, start: str, end: str) -> None:
    """Fetch a noisy top-k ranking of attribute values."""
    params = {
        "stat": stat,
        "entity": entity,
        "attr": attr,
        "topK": top_k,
        "kMax": k_max,
        "start": start,
        "end": end,
    }
    _emit(httpx.get(f"{url}/v1/topk", params=params))


@main.command()
@_URL
@click.option("--token", required=True, help="Admin token.")
@click.option("--path", required=True, type=click.Path(), help="Server-side events file.")
def ingest(url: str, token: str, path: str) -> None:
    """Ask the server to ingest an NDJSON events file."""
    _emit(
        httpx.post(
            f"{url}/v1/admin/ingest",
            headers={"X-Admin-Token": token},
            json={"path": path},
        )
    )


@main.command()
@_URL
@click.option("--token", required=True, help="Admin token.")
@click.option("--action", type=click.Choice(["save", "load"]), required=True)
@click.option("--path", required=True, type=click.Path())
def snapshot(url: str, token: str, action: str, path: str) -> None:
    """Save the served store to disk, or load and publish a snapshot."""
    _emit(
        httpx.post(
            f"{url}/v1/admin/snapshot",
            headers={"X-Admin-Token": token},
            json={"action": action, "path": path},
        )
    )


if __name__ == "__main__":
    main()
