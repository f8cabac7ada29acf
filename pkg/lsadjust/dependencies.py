import logging
import os
import shutil
import tempfile
from concurrent.futures import Executor, ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Generator

import numpy as np

from .config import WORKERS

logger = logging.getLogger(__name__)


def get_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """The only place generators are created; every stream is seeded."""
    return np.random.default_rng(seed)


def derive_seeds(seed: int, count: int) -> list[int]:
    """Independent child seeds of `seed`, stable across runs and platforms."""
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(count)]


@contextmanager
def get_executor(workers: int | None = None) -> Generator[Executor | None, None, None]:
    """
    Process pool for independent work units, or None when one worker is requested.

    Usage:
        with get_executor(workers) as pool:
            results = list(pool.map(fn, items)) if pool else [fn(x) for x in items]
    """
    workers = WORKERS if workers is None else workers
    if workers <= 1:
        yield None
        return
    pool = ProcessPoolExecutor(max_workers=workers)
    try:
        yield pool
    finally:
        pool.shutdown(cancel_futures=True)


@contextmanager
def staged_output(out_dir: Path) -> Generator[Path, None, None]:
    """
    Directory to write a run's outputs into; files reach `out_dir` only if the block succeeds.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))
    try:
        yield staging
        for item in sorted(staging.iterdir()):
            os.replace(item, out_dir / item.name)
        logger.info("Wrote outputs to %s", out_dir)
    finally:
        shutil.rmtree(staging, ignore_errors=True)
