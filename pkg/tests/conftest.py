"""
Pytest configuration and fixtures for raydiff tests.
"""
import os
import sys

import numpy as np
import pytest
from fastapi.testclient import TestClient

# Add app to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from main import app
from app.schemas.dataset import Dataset, ReceiverRecord
from app.schemas.layout import ExplicitLayout, ExplicitReceiver
from app.schemas.path import PathSet, PathTuple
from app.schemas.scene import Box, SceneSpec, Transmitter


def _random_paths(rng: np.random.Generator, n: int):
    return [
        PathTuple(
            power_dbm=float(rng.uniform(-60.0, 60.0)),
            delay_s=float(rng.uniform(0.0, 3e-6)),
            dod_az=float(rng.uniform(-180.0, 180.0)),
            dod_el=float(np.degrees(np.arcsin(rng.uniform(-1.0, 1.0)))),
            doa_az=float(rng.uniform(-180.0, 180.0)),
            doa_el=float(np.degrees(np.arcsin(rng.uniform(-1.0, 1.0)))),
        )
        for _ in range(n)
    ]


@pytest.fixture(scope="session")
def client():
    """Provide test client."""
    with TestClient(app) as test_client:
        yield test_client


@pytest.fixture
def rng():
    """Seeded generator; every test gets the same stream."""
    return np.random.default_rng(20240617)


@pytest.fixture
def random_path_set():
    """Factory: random path set spanning +-60 dBm, 0-3 us and the full sphere."""
    def make(rng: np.random.Generator, n: int, rx_id: str = "rx") -> PathSet:
        return PathSet(rx_id=rx_id, paths=_random_paths(rng, n))
    return make


@pytest.fixture
def make_path():
    """Factory for a single path with readable defaults."""
    def make(power_dbm=0.0, delay_ns=100.0, dod=(0.0, 0.0), doa=(180.0, 0.0)) -> PathTuple:
        return PathTuple(
            power_dbm=power_dbm,
            delay_s=delay_ns * 1e-9,
            dod_az=dod[0],
            dod_el=dod[1],
            doa_az=doa[0],
            doa_el=doa[1],
        )
    return make


@pytest.fixture
def sample_path_set(make_path):
    """Four paths with distinct delays and well separated directions."""
    return PathSet(rx_id="r1", paths=[
        make_path(-60.0, 100.0, (0.0, 0.0), (180.0, 0.0)),
        make_path(-72.0, 180.0, (45.0, -10.0), (120.0, 10.0)),
        make_path(-80.0, 260.0, (-90.0, 5.0), (60.0, -20.0)),
        make_path(-95.0, 410.0, (150.0, 30.0), (-30.0, 40.0)),
    ])


@pytest.fixture
def ground_scene():
    """Bare ground and a transmitter 10 m up."""
    return SceneSpec(tx=Transmitter(position=(0.0, 0.0, 10.0)))


@pytest.fixture
def wall_scene():
    """Ground plus one 100 m long wall along y at x = 10."""
    return SceneSpec(
        tx=Transmitter(position=(0.0, 0.0, 5.0)),
        boxes=[Box(min_corner=(10.0, -50.0, 0.0), max_corner=(11.0, 50.0, 20.0), material="glass", name="wall")],
    )


@pytest.fixture
def make_dataset():
    """Factory: explicit-layout dataset from {rx_id: (position, paths)}."""
    def make(receivers, label="ds") -> Dataset:
        records = {
            rx_id: ReceiverRecord(position=position, path_set=PathSet(rx_id=rx_id, paths=list(paths)))
            for rx_id, (position, paths) in receivers.items()
        }
        layout = ExplicitLayout(points=[
            ExplicitReceiver(rx_id=rx_id, x=pos[0], y=pos[1], z=pos[2])
            for rx_id, (pos, _) in receivers.items()
        ])
        return Dataset(label=label, receivers=records, layout=layout)
    return make
