"""Mixtures of wrapped Gaussians on the hyperboloid.

A wrapped Gaussian draws a tangent vector at the origin, parallel-transports
it to the cluster mean and follows the exponential map from there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .cart import CLASSIFICATION, REGRESSION, TASKS


@dataclass(frozen=True)
class MixtureConfig:
    n_classes: int = 2
    n_samples: int = 1000
    dim: int = 2
    K: float = -1.0
    mean_scale: float = 1.0
    cluster_scale: float = 0.5
    seed: int = 0
    task: str = CLASSIFICATION
    regression_noise: float = 0.1

    def __post_init__(self):
        if self.n_classes < 1:
            raise ValueError("n_classes must be at least 1")
        if self.n_samples < 0 or self.dim < 1:
            raise ValueError("n_samples must be >= 0 and dim >= 1")
        if not (self.mean_scale > 0 and self.cluster_scale > 0):
            raise ValueError("mean_scale and cluster_scale must be positive")
        if self.regression_noise < 0:
            raise ValueError("regression_noise must be nonnegative")
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        object.__setattr__(self, "K", geometry.check_curvature(self.K))


def origin(dim, K):
    mu0 = np.zeros(dim + 1)
    mu0[0] = 1.0 / np.sqrt(-K)
    return mu0


def exp_map(mu, v, K):
    """Exponential map at ``mu`` of tangent vectors ``v`` (ambient coordinates)."""
    mu = np.asarray(mu, dtype=float)
    v = np.asarray(v, dtype=float)
    s = np.sqrt(-K)
    norm = np.sqrt(np.maximum(geometry.minkowski_inner(v, v), 0.0))
    r = s * norm
    safe = np.where(norm > 0, s * norm, 1.0)
    out = np.cosh(r)[..., None] * mu + (np.sinh(r) / safe)[..., None] * v
    return geometry.project_to_hyperboloid(out[..., 1:], K)


def exp_origin(z, K):
    """Exponential map at the origin of tangent vectors ``z`` (length ``d``)."""
    K = geometry.check_curvature(K)
    z = np.asarray(z, dtype=float)
    v = np.concatenate([np.zeros(z.shape[:-1] + (1,)), z], axis=-1)
    return exp_map(origin(z.shape[-1], K), v, K)


def parallel_transport_origin_to(mu, z, K):
    """Transport origin-tangent vectors ``z`` (length ``d``) along the geodesic to ``mu``."""
    K = geometry.check_curvature(K)
    mu = np.asarray(mu, dtype=float)
    z = np.asarray(z, dtype=float)
    v = np.concatenate([np.zeros(z.shape[:-1] + (1,)), z], axis=-1)
    mu0 = origin(z.shape[-1], K)
    coef = -K * geometry.minkowski_inner(mu, v) / (1.0 + K * geometry.minkowski_inner(mu0, mu))
    return v + coef[..., None] * (mu0 + mu)


def balanced_labels(n_samples, n_classes, rng):
    labels = np.repeat(np.arange(n_classes), n_samples // n_classes)
    labels = np.concatenate([labels, np.arange(n_samples % n_classes)])
    return rng.permutation(labels)


def sample_mixture(cfg: MixtureConfig):
    """Draw ``(X, y, true_class)`` from a wrapped-Gaussian mixture.

    ``y`` is the class id for classification; for regression it is
    ``w_k . z + b_k + noise`` with ``z`` the point's origin-tangent draw.
    """
    rng = np.random.default_rng(cfg.seed)
    d, K = cfg.dim, cfg.K
    means = exp_origin(rng.normal(0.0, cfg.mean_scale, size=(cfg.n_classes, d)), K)
    true_class = balanced_labels(cfg.n_samples, cfg.n_classes, rng)
    z = rng.normal(0.0, cfg.cluster_scale, size=(cfg.n_samples, d))
    mu = means[true_class]
    X = exp_map(mu, parallel_transport_origin_to(mu, z, K), K)
    if cfg.task == REGRESSION:
        slopes = rng.normal(size=(cfg.n_classes, d))
        intercepts = rng.normal(size=cfg.n_classes)
        noise = rng.normal(0.0, cfg.regression_noise, size=cfg.n_samples)
        y = np.sum(slopes[true_class] * z, axis=1) + intercepts[true_class] + noise
    else:
        y = true_class.copy()
    return X, y, true_class


def train_test_split(n, test_fraction, seed):
    """Deterministic permutation split into ``(train_idx, test_idx)``."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_test = int(round(n * test_fraction))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])
