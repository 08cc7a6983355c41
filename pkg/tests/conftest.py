import numpy as np
import pytest

from tdbem.mesh import TriangleMesh, generate_sphere, generate_torus


def make_tetrahedron():
    verts = np.array([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.4, 1.0, 0.0],
        [0.45, 0.35, 0.9],
    ])
    tris = np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]])
    return TriangleMesh(verts, tris)


@pytest.fixture(scope="session")
def tetrahedron():
    return make_tetrahedron()


@pytest.fixture(scope="session")
def coarse_sphere():
    return generate_sphere(1.0, 0.8)


@pytest.fixture(scope="session")
def coarse_torus():
    return generate_torus(3.0, 1.0, 1.6)
