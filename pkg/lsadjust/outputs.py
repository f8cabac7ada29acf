import hashlib
import json
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

from . import __version__
from .errors import DataError
from .schemas import LsmParams, RunManifest


def write_json(path: Path, data: Any) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=False, allow_nan=True) + "\n")
    return path


def write_text(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def read_fit_params(path: Path) -> LsmParams:
    """Point estimates from a latent space fit JSON written by fit-lsm or s50."""
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"Fit file '{path}' not found", kind="missing_file")
    except json.JSONDecodeError as e:
        raise DataError(f"Fit file '{path}' is not valid JSON: {e}", kind="non_numeric")
    return LsmParams.from_json_dict(data)


class RunClock:
    """Start time and elapsed wall clock of one CLI run."""

    def __init__(self) -> None:
        self.started_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self._start = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return round(time.perf_counter() - self._start, 3)


def write_manifest(
    directory: Path,
    subcommand: str,
    config: dict[str, Any],
    seed: int | None,
    inputs: Iterable[Path],
    clock: RunClock,
) -> Path:
    """manifest.json next to the outputs already written to `directory`."""
    outputs = sorted(p.name for p in directory.iterdir())
    manifest = RunManifest(
        subcommand=subcommand,
        config=config,
        seed=seed,
        inputs={str(p): file_digest(p) for p in inputs},
        version=__version__,
        started_at=clock.started_at,
        wall_clock_s=clock.elapsed,
        outputs=outputs,
    )
    return write_json(directory / "manifest.json", manifest.model_dump(mode="json"))
