# services/instance_service.py

"""
Reading and writing instance files.

Instance files are flat key=value text parsed with python-dotenv:

    name=rs111
    coeffs=1 0; 0 1; 1 1
    d=1
    e=1 1 1
    labels=f g h
    seed=7

Exactly one of `e` and `radii` must be present. Numbers are written with
repr, the shortest decimal that round-trips, so a dumped instance loads back
to identical floats.
"""

import logging
import os
from typing import Dict, List

from dotenv import dotenv_values
from pydantic import ValidationError

from models.family import LinearFamily
from models.instance import Instance
from models.measures import MeasureSpec
from services.errors import ArgumentError

logger = logging.getLogger("instance_service")

KNOWN_KEYS = {"name", "coeffs", "d", "e", "radii", "labels", "seed"}


def _numbers(text: str, key: str) -> List[float]:
    try:
        return [float(token) for token in text.split()]
    except ValueError:
        raise ArgumentError(f"{key}: expected whitespace-separated numbers, got {text!r}")


def _matrix(text: str) -> List[List[float]]:
    rows = [row for row in text.split(";") if row.strip()]
    return [_numbers(row, "coeffs") for row in rows]


def parse_instance(values: Dict[str, str], default_name: str = "instance") -> Instance:
    """Build an Instance from already-parsed key/value strings"""
    values = {k.strip().lower(): (v or "").strip() for k, v in values.items()}
    unknown = set(values) - KNOWN_KEYS
    if unknown:
        raise ArgumentError(f"unknown instance keys: {sorted(unknown)}")
    if "coeffs" not in values:
        raise ArgumentError("instance is missing coeffs")
    if ("e" in values) == ("radii" in values):
        raise ArgumentError("instance needs exactly one of e and radii")

    try:
        d = int(values.get("d", "1"))
        labels = tuple(values["labels"].split()) if values.get("labels") else None
        family = LinearFamily(coeffs=_matrix(values["coeffs"]), dim_d=d, labels=labels)
        if "e" in values:
            spec = MeasureSpec(e=_numbers(values["e"], "e"), d=d)
        else:
            spec = MeasureSpec.from_radii(_numbers(values["radii"], "radii"), d)
        seed = int(values["seed"]) if values.get("seed") else None
        return Instance(name=values.get("name") or default_name, family=family, spec=spec, seed=seed)
    except (ValidationError, ValueError) as e:
        logger.error(f"Invalid instance: {e}")
        raise ArgumentError(f"invalid instance: {e}")


def load_instance(path: str) -> Instance:
    """
    Load an instance file.

    Raises:
        ArgumentError: If the file is missing or malformed
    """
    if not os.path.isfile(path):
        logger.error(f"Instance file not found: {path}")
        raise ArgumentError(f"instance file not found: {path}")
    default_name = os.path.splitext(os.path.basename(path))[0]
    instance = parse_instance(dotenv_values(path), default_name=default_name)
    logger.info(f"Loaded instance {instance.name}: {instance.family.size} maps, m={instance.family.m}, d={instance.d}")
    return instance


def format_instance(instance: Instance) -> str:
    fam = instance.family
    lines = [
        f"name={instance.name}",
        "coeffs=" + "; ".join(" ".join(repr(a) for a in row) for row in fam.coeffs),
        f"d={instance.d}",
        "e=" + " ".join(repr(v) for v in instance.spec.e),
    ]
    if fam.labels:
        lines.append("labels=" + " ".join(fam.labels))
    if instance.seed is not None:
        lines.append(f"seed={instance.seed}")
    return "\n".join(lines) + "\n"


def dump_instance(instance: Instance, path: str) -> None:
    with open(path, "w") as f:
        f.write(format_instance(instance))
    logger.info(f"Wrote instance {instance.name} to {path}")
