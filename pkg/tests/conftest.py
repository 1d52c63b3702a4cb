import numpy as np
import pytest

from ucfem.geometry import Geometry
from ucfem.mesh import build_disk_mesh, mesh_from_arrays


@pytest.fixture(scope="session")
def geometry():
    return Geometry(0.25, 0.5, 1.0)


@pytest.fixture(scope="session")
def base_mesh(geometry):
    return build_disk_mesh(geometry, sectors=8, level=0)


@pytest.fixture(scope="session")
def mesh_l2(geometry):
    return build_disk_mesh(geometry, sectors=8, level=2)


@pytest.fixture()
def unit_triangle_mesh():
    return mesh_from_arrays(
        np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        np.array([[0, 1, 2]]),
        np.array([0]),
    )
