"""Bundled scenarios and the scenario name resolver."""

from importlib import resources
from pathlib import Path
from typing import Tuple, Union

from slice_planner.errors import ScenarioError
from slice_planner.model.scenario import Scenario, load_scenario

BUNDLED: Tuple[str, ...] = ("robots", "vehicular")


def resolve_scenario(name_or_path: Union[str, Path]) -> Path:
    """Map a bundled scenario name or a file path to a readable file.

    Raises:
        ScenarioError: If the argument is neither an existing file nor a bundled name.
    """
    path = Path(name_or_path)
    if path.is_file():
        return path
    if str(name_or_path) in BUNDLED:
        bundled = resources.files("slice_planner.scenarios") / f"{name_or_path}.yaml"
        return Path(str(bundled))
    raise ScenarioError(
        f"no such scenario file, and not one of the bundled scenarios {', '.join(BUNDLED)}",
        path=str(name_or_path),
    )


def open_scenario(name_or_path: Union[str, Path]) -> Scenario:
    return load_scenario(resolve_scenario(name_or_path))
