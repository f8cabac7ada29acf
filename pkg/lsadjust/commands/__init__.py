"""Subcommands; each module exposes register(subparsers) and a run(args) handler."""

import argparse
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from ..config import WORKERS


def add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="Seed every random stream derives from")
    parser.add_argument("--out-dir", type=Path, default=Path("."), help="Output directory (default: .)")
    parser.add_argument("--workers", type=int, default=None, help=f"Parallel workers (default: {WORKERS})")
    parser.add_argument("--config", type=Path, default=None, help="JSON config file with per-section settings")


def add_model_flags(parser: argparse.ArgumentParser, model: type[BaseModel], exclude: tuple[str, ...] = ()) -> None:
    """One optional flag per scalar field of a config model; unset flags stay None."""
    for name, field in model.model_fields.items():
        if name in exclude or field.annotation not in (int, float, bool, str):
            continue
        flag = "--" + name.replace("_", "-")
        if field.annotation is bool:
            parser.add_argument(flag, action=argparse.BooleanOptionalAction, default=None, help=field.description)
        else:
            parser.add_argument(flag, type=field.annotation, default=None, help=f"(default: {field.default})")


def model_overrides(args: argparse.Namespace, model: type[BaseModel], **extra: Any) -> dict[str, Any]:
    overrides = {name: getattr(args, name) for name in model.model_fields if hasattr(args, name)}
    overrides.update(extra)
    return overrides


def workers(args: argparse.Namespace) -> int:
    return WORKERS if args.workers is None else args.workers
