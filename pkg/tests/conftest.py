import os
from pathlib import Path

import numpy as np
import pytest

from lsadjust.config import S50_ATTRIBUTE_FILES, S50_NETWORK_FILES
from lsadjust.dataio import StudyPaths, load_study
from lsadjust.schemas import AttributePanel, Network, StudyData

S50_DIR = os.getenv("LSADJUST_S50_DIR")


def _s50_paths(data_dir: Path) -> StudyPaths:
    return StudyPaths(
        networks=[data_dir / name for name in S50_NETWORK_FILES],
        attributes={label: data_dir / name for label, name in S50_ATTRIBUTE_FILES.items()},
    )


@pytest.fixture(scope="session")
def s50_dir() -> Path:
    if not S50_DIR or not Path(S50_DIR).is_dir():
        pytest.skip("LSADJUST_S50_DIR is not set to the s50 data directory")
    return Path(S50_DIR)


@pytest.fixture(scope="session")
def s50_study(s50_dir: Path) -> StudyData:
    return load_study(_s50_paths(s50_dir))


@pytest.fixture
def ring4() -> Network:
    """Directed 4-cycle plus one reciprocated tie."""
    adj = np.zeros((4, 4), dtype=int)
    for i in range(4):
        adj[i, (i + 1) % 4] = 1
    adj[1, 0] = 1
    return Network(adj=adj, wave=1)


@pytest.fixture
def small_study() -> StudyData:
    """Three waves, six nodes, outcome 'y' and covariate 'x'."""
    rng = np.random.default_rng(42)
    networks = []
    for w in range(1, 4):
        adj = (rng.random((6, 6)) < 0.4).astype(int)
        np.fill_diagonal(adj, 0)
        networks.append(Network(adj=adj, wave=w))
    return StudyData(
        networks=networks,
        attributes=[
            AttributePanel(name="y", values=rng.integers(1, 6, size=(6, 3))),
            AttributePanel(name="x", values=rng.normal(size=(6, 3))),
        ],
    )
