"""Shared mesh fixtures.

Session scope: mesh generation (Loop subdivision in particular) is the slow
part of the suite, and every consumer treats the meshes as read-only.
"""

import pytest

from mlc import mesh


@pytest.fixture(scope="session")
def icosphere():
    """Genus-0 icosphere, two midpoint rounds (162 vertices)."""
    return mesh.generate_genus(0, 2)


@pytest.fixture(scope="session")
def torus_mesh():
    """Genus-1 sheared voxel frame, one Loop round."""
    return mesh.generate_genus(1, 1)


@pytest.fixture(scope="session")
def genus2_mesh():
    """Genus-2 sheared voxel frame, one Loop round (198 vertices)."""
    return mesh.generate_genus(2, 1)


@pytest.fixture(scope="session")
def genus3_mesh():
    return mesh.generate_genus(3, 1)


@pytest.fixture(scope="session")
def flat_torus_9():
    """9x9 equilateral flat torus: every edge length exactly 1."""
    return mesh.flat_torus(9, 9)
