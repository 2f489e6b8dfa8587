"""Shared fixtures: the M=10 ideal array, the Q=200 grid and on-grid angles."""
import numpy as np
import pytest
from beamcraft.array_geometry import ArrayConfig, angle_to_index, make_grid, steering_vector


def on_grid_deg(grid, degrees):
    """The grid angle nearest to `degrees`, in degrees."""
    return float(np.rad2deg(grid.angles[angle_to_index(grid, np.deg2rad(degrees))]))


@pytest.fixture
def cfg():
    return ArrayConfig(m=10)


@pytest.fixture
def grid():
    return make_grid(200)


@pytest.fixture
def steer(cfg):
    return lambda degrees: steering_vector(cfg, np.deg2rad(degrees)).values


@pytest.fixture
def golden():
    import os
    root = os.path.join(os.path.dirname(__file__), 'golden')

    def header(name):
        with open(os.path.join(root, name), encoding='utf-8') as file:
            return file.readline()
    return header
