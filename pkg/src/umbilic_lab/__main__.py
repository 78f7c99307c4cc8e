import json
import logging
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import typer
from pydantic import ValidationError

from .core.config import TOOL_VERSION, settings
from .core.exceptions import UmbilicLabError
from .schemas.error import LabError
from .services import io_service, scenario_service

logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
    format="%(asctime)s - %(levelname)s - %(message)s",
)
log = logging.getLogger(__name__)

cli = typer.Typer(
    name="umbilic-lab",
    help=(
        "Umbilic-lab: certificates for quasi-CMC surfaces, umbilic indices "
        "and the sandglass sphere."
    ),
    add_completion=False,
)


def _fail(error: LabError) -> None:
    typer.echo(error.model_dump_json(), err=True)
    raise typer.Exit(code=1)


def with_lab_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Turns lab and validation errors into a LabError on stderr and exit code 1."""

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except UmbilicLabError as e:
            log.error(f"{type(e).__name__}: {e}")
            _fail(LabError(error=str(e), details=io_service.to_builtin(e.details)))
        except ValidationError as e:
            details = [
                {"loc": " -> ".join(str(p) for p in err["loc"]), "msg": err["msg"]}
                for err in e.errors()
            ]
            _fail(LabError(error="Validation error", details=details))

    return wrapper


def _field_tolerances(values: List[str]) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for item in values:
        path, sep, rel = item.partition("=")
        try:
            if not sep or not path:
                raise ValueError(item)
            out[path] = float(rel)
        except ValueError:
            raise typer.BadParameter(f"Expected PATH=REL, got '{item}'.")
    return out


@cli.command(help="Run a scenario file and write report.json plus CSV data.")
@with_lab_errors
def run(
    config: Path = typer.Argument(..., help="Scenario TOML file."),
    out: Optional[Path] = typer.Option(
        None, "--out", help="Output directory override."
    ),
):
    """Exit 0 when every certificate holds, 2 when any fails, 1 on errors."""
    code = scenario_service.run(config, out)
    raise typer.Exit(code=code)


@cli.command(help="Compare two report.json files field by field.")
@with_lab_errors
def diff(
    a: Path = typer.Argument(..., help="Baseline report."),
    b: Path = typer.Argument(..., help="Candidate report."),
    tolerance: float = typer.Option(
        0.0, "--tolerance", help="Relative float tolerance."
    ),
    field_tolerance: List[str] = typer.Option(
        [], "--field-tolerance", help="PATH=REL override for a dotted field prefix."
    ),
):
    """Exit 0 without drift, 2 with drift, 1 on unreadable or mismatched reports."""
    result = io_service.compare_reports(
        io_service.load_report(a),
        io_service.load_report(b),
        tolerance,
        _field_tolerances(field_tolerance),
    )
    payload = io_service.to_builtin(result.model_dump())
    typer.echo(json.dumps(payload, indent=2, sort_keys=True))
    raise typer.Exit(code=2 if result.drift else 0)


@cli.command("list-scenarios", help="Print every scenario kind with its defaults.")
def list_scenarios():
    """Print the scenario registry as JSON."""
    typer.echo(json.dumps(scenario_service.list_scenarios(), indent=2, sort_keys=True))


@cli.command(help="Show the application's version and exit.")
def version():
    """Show the application's version and exit."""
    typer.echo(f"umbilic-lab version: {TOOL_VERSION}")


if __name__ == "__main__":
    cli()
