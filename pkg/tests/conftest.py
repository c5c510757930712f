import numpy as np
import pytest

from kinuq.phase_space import (
    Boundary,
    MacroState,
    SpatialGrid,
    VelocityGrid,
)


@pytest.fixture(scope="session")
def vg32():
    return VelocityGrid(32, 8.0)


@pytest.fixture(scope="session")
def vg16():
    return VelocityGrid(16, 8.0)


@pytest.fixture(scope="session")
def vg8():
    return VelocityGrid(8, 8.0)


@pytest.fixture
def sg50_periodic():
    return SpatialGrid(50, -0.5, 0.5, Boundary.PERIODIC)


@pytest.fixture
def sod_grid():
    return SpatialGrid(100, 0.0, 1.0, Boundary.SPECULAR)


def smooth_periodic_state(sg: SpatialGrid) -> MacroState:
    x = sg.centers
    return MacroState(
        1.0 + 0.2 * np.sin(2 * np.pi * x),
        0.3 * np.cos(2 * np.pi * x),
        np.zeros_like(x),
        1.0 + 0.1 * np.cos(2 * np.pi * x),
    )


def blast_state(sg: SpatialGrid) -> MacroState:
    x = sg.centers
    return MacroState(
        np.ones_like(x),
        np.where(x < -0.3, 1.0, np.where(x >= 0.3, -1.0, 0.0)),
        np.zeros_like(x),
        np.where((x >= -0.3) & (x < 0.3), 0.25, 2.0),
    )


def double_peak_values(vg: VelocityGrid, rho0=1.0, t0=0.25, u0=(0.75, -0.75)):
    v1, v2 = vg.velocity_mesh()
    return 0.5 * rho0 * (
        np.exp(-((v1 - u0[0]) ** 2 + (v2 - u0[1]) ** 2) / t0)
        + np.exp(-((v1 + u0[0]) ** 2 + (v2 + u0[1]) ** 2) / t0)
    )
