"""Main entry point for the symdyn lab: config-driven runs and the MCP server."""

import os
import sys
from typing import Any, Dict, Optional

# Add the server directory to the Python path for module resolution
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import click
from mcp.server.fastmcp.utilities.logging import configure_logging

from errors import ConfigError
from runner import Command, OutputFormat, load_config, run
from settings import get_settings


def _overrides(**values: Any) -> Dict[str, Any]:
    return {key: value for key, value in values.items() if value is not None}


def _execute(config_path: Optional[str], overrides: Dict[str, Any]) -> None:
    try:
        config = load_config(config_path, overrides)
    except ConfigError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(e.exit_code)
    status = run(config)
    if status == 0:
        click.echo(f"Run finished: {config.out / 'manifest.json'}")
    else:
        click.echo(f"Run failed with exit status {status}: see {config.out / 'manifest.json'}", err=True)
    sys.exit(status)


@click.group()
@click.option("--log-level", default=None, help="Override SYMDYN_LOG_LEVEL")
def cli(log_level: Optional[str]) -> None:
    """Symbolic dynamics lab: shift models, scrambled-set constructions and chaos statistics."""
    configure_logging((log_level or get_settings().log_level).upper())


@cli.command("run")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Run config (JSON)")
@click.option("--command", type=click.Choice([c.value for c in Command]), help="Command, overriding the config")
@click.option("--model", help="Model preset name, overriding the config")
@click.option("--out", type=click.Path(file_okay=False), help="Output directory")
@click.option("--horizon", type=click.IntRange(min=1), help="Realized horizon")
@click.option("--stages", type=click.IntRange(min=1), help="Number of construction stages")
@click.option("--alpha", help="Alpha name (sqrt, cbrt, log, log2) or path to a JSON table")
@click.option("--precision", type=click.IntRange(min=16), help="Interval precision in bits for beta models")
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), help="RNG seed for dense-word order")
@click.option("--format", "output_format", type=click.Choice([f.value for f in OutputFormat]), help="Report format")
def run_command(
    config_path: Optional[str],
    command: Optional[str],
    model: Optional[str],
    out: Optional[str],
    horizon: Optional[int],
    stages: Optional[int],
    alpha: Optional[str],
    precision: Optional[int],
    seed: Optional[int],
    output_format: Optional[str],
) -> None:
    """Execute a run config; flags override its fields."""
    _execute(
        config_path,
        _overrides(
            command=command,
            model=model,
            out=out,
            horizon=horizon,
            stages=stages,
            alpha=alpha,
            precision=precision,
            rng_seed=seed,
            format=output_format,
        ),
    )


@cli.command("check")
@click.argument("model")
@click.option("--out", type=click.Path(file_okay=False), default="runs/check")
def check_command(model: str, out: str) -> None:
    """Graph analysis of a model preset (transitivity, primitivity index, period)."""
    _execute(None, {"command": Command.CHECK.value, "model": model, "out": out})


@cli.command("decompose")
@click.argument("model")
@click.option("--out", type=click.Path(file_okay=False), default="runs/decompose")
def decompose_command(model: str, out: str) -> None:
    """Cyclic classes of a transitive transition system."""
    _execute(None, {"command": Command.DECOMPOSE.value, "model": model, "out": out})


@cli.command("beta-expand")
@click.argument("beta")
@click.argument("values", nargs=-1)
@click.option("--depth", type=click.IntRange(min=1), default=40)
@click.option("--precision", type=click.IntRange(min=16), default=None)
@click.option("--out", type=click.Path(file_okay=False), default="runs/beta")
def beta_expand_command(beta: str, values: tuple, depth: int, precision: Optional[int], out: str) -> None:
    """Greedy beta-expansions of VALUES (rationals or polynomials in beta)."""
    _execute(
        None,
        _overrides(
            command=Command.BETA_EXPAND.value,
            model={"kind": "beta", "beta": beta},
            out=out,
            precision=precision,
            params={"values": list(values) or ["1/2"], "depth": depth},
        ),
    )


@cli.command("serve")
def serve_command() -> None:
    """Serve the lab as MCP tools over stdio."""
    import server as server_module

    server_module.server.run()


def main():
    """Main entry point for the symdyn CLI."""
    cli()


if __name__ == "__main__":
    main()
