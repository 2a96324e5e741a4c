from pathlib import Path

import numpy as np
import pytest

from reflexcr.layers import Cone, GenericManifold, Wedge

from .helpers import sphere_graph

SCENARIOS = Path(__file__).parent.parent / "scenarios"


@pytest.fixture
def scenarios_dir() -> Path:
    return SCENARIOS


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def rigid_manifold() -> GenericManifold:
    """Im w = |z|^2 in C^2"""
    return GenericManifold(1, 1, [sphere_graph()], z_radius=0.5, w_radius=0.5)


@pytest.fixture
def rigid_wedge(rigid_manifold) -> Wedge:
    return Wedge(rigid_manifold, Cone([[1.0]], label="up"))
