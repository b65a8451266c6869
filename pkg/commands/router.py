# commands/router.py

"""
Registration of subcommands.

Handler modules create a `router = CommandRouter()` and decorate their
handlers; app.py includes every router and builds the argparse parser
from the registrations.
"""

import argparse
import logging
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from models.instance import Instance
from services.errors import ArgumentError

logger = logging.getLogger("router")

ENGINE_CHOICES = ("mc", "fiber", "exact")


class CommandResult(BaseModel):
    """Rows for <command>.csv, the summary record and the keys echoed to stdout"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    rows: List[Dict[str, Any]]
    summary: Dict[str, Any]
    echo: List[str]
    fieldnames: Optional[List[str]] = None
    engine: Optional[str] = None
    violation: Optional[str] = None


Handler = Callable[[argparse.Namespace, Instance], CommandResult]


class Command(BaseModel):
    name: str
    help: str
    handler: Callable
    arguments: Optional[Callable] = None


class CommandRouter:
    def __init__(self):
        self.commands: Dict[str, Command] = {}

    def command(self, name: str, help: str = "", arguments: Callable[[argparse.ArgumentParser], None] = None):
        def register(handler: Handler) -> Handler:
            if name in self.commands:
                raise ValueError(f"command {name} registered twice")
            self.commands[name] = Command(name=name, help=help, handler=handler, arguments=arguments)
            return handler
        return register

    def include_router(self, other: "CommandRouter") -> None:
        for name, command in other.commands.items():
            if name in self.commands:
                raise ValueError(f"command {name} registered twice")
            self.commands[name] = command


def parse_s_range(text: str) -> List[float]:
    """`a:b:k` -> k equally spaced values from a to b; a plain comma list is also accepted"""
    try:
        if ":" in text:
            a, b, k = text.split(":")
            count = int(k)
            if count < 1:
                raise ValueError
            return [float(v) for v in np.linspace(float(a), float(b), count)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ArgumentError(f"cannot read s values from {text!r}; expected a:b:k")


def harmonic_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--harmonic", default=None,
                        help="nu1, nu2, nu3, translation or shear")


def s_argument(parser: argparse.ArgumentParser, default: str = "0.02:0.1:5") -> None:
    parser.add_argument("--s", dest="s_values", default=default, help="perturbation sizes a:b:k")
