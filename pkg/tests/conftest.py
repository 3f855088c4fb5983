import numpy as np
import pytest

from fasthyperdt import geometry

DIMS = (1, 2, 4, 16)
CURVATURES = (-0.5, -1.0, -2.0)


def random_directions(rng, n, d):
    z = rng.normal(size=(n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def random_lorentz(rng, n, d, K, max_radius=4.0):
    """Points at geodesic distance up to ``max_radius`` (in K-units) from the origin."""
    rho = rng.uniform(0.0, max_radius, size=n)
    s = np.sqrt(-K)
    spatial = (np.sinh(rho) / s)[:, None] * random_directions(rng, n, d)
    return geometry.project_to_hyperboloid(spatial, K)


def random_klein(rng, n, d, max_radius=4.0):
    rho = rng.uniform(0.0, max_radius, size=n)
    return np.tanh(rho)[:, None] * random_directions(rng, n, d)


def random_poincare(rng, n, d, K, max_radius=4.0):
    rho = rng.uniform(0.0, max_radius, size=n)
    return (np.tanh(rho / 2) / np.sqrt(-K))[:, None] * random_directions(rng, n, d)


def rel_err(a, b):
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    scale = np.maximum(np.linalg.norm(b, axis=-1), 1.0)
    return np.linalg.norm(a - b, axis=-1) / scale


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
