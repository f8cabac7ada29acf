"""
Readers and writers for the s50-style plain-text files.

Adjacency files hold one matrix row per line with whitespace-separated 0/1
tokens; attribute files hold one node per line and one wave per column. There
is no header and no missing-data code.
"""

import io
import logging
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel

from .errors import DataError
from .schemas import AttributePanel, Network, StudyData

logger = logging.getLogger(__name__)


class StudyPaths(BaseModel):
    """File roles of one study: adjacency files in wave order and attribute files by label."""

    networks: list[Path]
    attributes: dict[str, Path] = {}


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _read_tokens(text: str, what: str) -> pd.DataFrame:
    """Whitespace-separated matrix as a frame of string tokens; ragged rows raise."""
    if not text.strip():
        raise DataError(f"{what} is empty", kind="empty")
    widths = {len(line.split()) for line in text.splitlines() if line.strip()}
    if len(widths) > 1:
        raise DataError(f"{what} has rows of different lengths", kind="ragged")
    try:
        # NA-like tokens stay literal so they fail the value checks, not the shape check
        frame = pd.read_csv(
            io.StringIO(text), sep=r"\s+", header=None, dtype=str, skip_blank_lines=True, na_filter=False
        )
    except pd.errors.ParserError as e:
        raise DataError(f"{what} has rows of different lengths: {e}", kind="ragged")
    except pd.errors.EmptyDataError:
        raise DataError(f"{what} is empty", kind="empty")
    if frame.isna().any().any():
        raise DataError(f"{what} has rows of different lengths", kind="ragged")
    return frame


def read_text(path: Path) -> str:
    try:
        return Path(path).read_text()
    except FileNotFoundError:
        raise DataError(f"File '{path}' not found", kind="missing_file")
    except IsADirectoryError:
        raise DataError(f"'{path}' is a directory, expected a file", kind="missing_file")
    except UnicodeDecodeError:
        raise DataError(f"File '{path}' is not a text file", kind="non_numeric")


# ---------------------------------------------------------------------------
# Parsers
# ---------------------------------------------------------------------------


def parse_adjacency(text: str, wave: int = 1) -> Network:
    frame = _read_tokens(text, "Adjacency matrix")
    if frame.shape[0] != frame.shape[1]:
        raise DataError(
            f"Adjacency matrix must be square, got {frame.shape[0]} rows of {frame.shape[1]} tokens",
            kind="non_square",
        )
    tokens = frame.to_numpy()
    bad = ~np.isin(tokens, ("0", "1"))
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise DataError(f"Adjacency entry ({i + 1}, {j + 1}) is '{tokens[i, j]}', expected 0 or 1", kind="non_binary")
    return Network(adj=(tokens == "1").astype(np.int8), wave=wave)


def parse_attribute_panel(text: str, name: str) -> AttributePanel:
    frame = _read_tokens(text, f"Attribute file '{name}'")
    try:
        values = frame.apply(pd.to_numeric, errors="raise").to_numpy(dtype=float)
    except (ValueError, TypeError) as e:
        raise DataError(f"Attribute file '{name}' has a non-numeric token: {e}", kind="non_numeric")
    if not np.isfinite(values).all():
        i, j = np.argwhere(~np.isfinite(values))[0]
        raise DataError(
            f"Attribute file '{name}' entry ({i + 1}, {j + 1}) is '{frame.iat[i, j]}', expected a finite number",
            kind="non_numeric",
        )
    return AttributePanel(name=name, values=values)


def serialize_network(net: Network) -> str:
    return "".join(" ".join(str(int(x)) for x in row) + "\n" for row in net.adj)


def serialize_attribute_panel(panel: AttributePanel) -> str:
    return "".join(" ".join(repr(float(x)) for x in row) + "\n" for row in panel.values)


# ---------------------------------------------------------------------------
# Study loading
# ---------------------------------------------------------------------------


def load_study(paths: StudyPaths) -> StudyData:
    """Parse and cross-validate every file of a study; networks are numbered by their position in the list."""
    networks = [parse_adjacency(read_text(path), wave=w) for w, path in enumerate(paths.networks, start=1)]
    attributes = [parse_attribute_panel(read_text(path), name) for name, path in paths.attributes.items()]
    study = StudyData(networks=networks, attributes=attributes)
    logger.info(
        "Loaded study: n=%d, waves=%d, attributes=%s",
        study.n,
        study.waves,
        ", ".join(p.name for p in attributes) or "none",
    )
    return study
