"""
Shipped graph-of-groups fixtures and JSON loading helpers.

Fixtures:
- swap: F(x1, x2) semidirect Z by the swap
- fibonacci: F(x1, x2) semidirect Z by x1 -> x2, x2 -> x1 x2
- partial_hnn: HNN extension along <x1> -> <x2>, abstractly free
- amalgam: two vertices over a tree edge plus a loop, exercising collapse
"""

# Import Path for locating the packaged JSON files.
from pathlib import Path
# Import typing for type hints.
from typing import List, Union

# Import ValidationError to report malformed files as invalid input.
from pydantic import ValidationError

from ..exceptions import InvalidInput
from ..schemas import FixtureModel, GraphOfGroupsModel

FIXTURE_DIR = Path(__file__).parent


def fixture_names() -> List[str]:
    return sorted(path.stem for path in FIXTURE_DIR.glob("*.json"))


def load_fixture(name: str) -> FixtureModel:
    """
    Load a shipped fixture by name.

    Raises:
        InvalidInput: if no fixture has that name
    """
    path = FIXTURE_DIR / f"{name}.json"
    if not path.exists():
        raise InvalidInput(f"unknown fixture {name!r}; available: {', '.join(fixture_names())}")
    return FixtureModel.model_validate_json(path.read_text(encoding="utf-8"))


def load_gog(source: Union[str, Path]) -> GraphOfGroupsModel:
    """
    Load a graph of groups from a fixture name, a fixture file or a bare graph-of-groups file.

    Raises:
        InvalidInput: if the file cannot be read or does not match either schema
    """
    path = Path(source)
    if not path.exists() and (FIXTURE_DIR / f"{source}.json").exists():
        path = FIXTURE_DIR / f"{source}.json"
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInput(f"cannot read {source}: {exc}")
    try:
        return FixtureModel.model_validate_json(text).gog
    except ValidationError:
        pass
    try:
        return GraphOfGroupsModel.model_validate_json(text)
    except ValidationError as exc:
        raise InvalidInput(f"{source} is not a graph of groups: {exc.error_count()} schema errors")
