"""
Registries for command-line commands and lemma-lab suites.

This module implements the registration system that:
1. Defines the structure of a registered entry (description plus handler)
2. Provides a registry for storing and retrieving entries by name
3. Handles registration through decorators

Why is this important?
-----------------------------------
The CLI dispatches on a command name and the lemma lab on a suite name. Keeping
both in a registry means a new command or suite is one decorated function,
and `--help` / `--list` stay in sync with what actually exists.
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, List

from .exceptions import InvalidInput


@dataclass
class Entry:
    """
    A registered command or suite.

    Attributes:
        name (str): Lookup name
        description (str): One-line help text
        handler (Callable): Function implementing it
    """
    name: str
    description: str
    handler: Callable

    def execute(self, *args, **kwargs) -> Any:
        return self.handler(*args, **kwargs)


class Registry:
    """
    Name-to-handler registry filled through a decorator.

    Example:
        suites = Registry("suite")

        @suites.register("filtration-laws", "Commutator and p-power containments")
        def filtration_laws(config):
            ...
    """

    def __init__(self, kind: str):
        self.kind = kind
        self._entries: Dict[str, Entry] = {}

    def register(self, name: str, description: str):
        """
        Decorator registering a handler under a unique name.

        Raises:
            ValueError: if the name is already taken
        """
        def wrapper(handler: Callable) -> Callable:
            if name in self._entries:
                raise ValueError(f"{self.kind} {name!r} is already registered")
            self._entries[name] = Entry(name, description, handler)
            return handler
        return wrapper

    def get(self, name: str) -> Entry:
        """
        Retrieve an entry by name.

        Raises:
            InvalidInput: if nothing is registered under the name
        """
        try:
            return self._entries[name]
        except KeyError:
            raise InvalidInput(f"unknown {self.kind} {name!r}; available: {', '.join(self.names())}")

    def names(self) -> List[str]:
        return sorted(self._entries)

    def describe(self) -> Dict[str, str]:
        return {name: self._entries[name].description for name in self.names()}

    def __contains__(self, name: str) -> bool:
        return name in self._entries
