"""Shared fixtures and instance generators for the test suite."""

import numpy as np
import pytest

from sketchnewton.problems import GlmDataset, quadratic_loss


def random_invertible_linear(rng, p):
    """F(x) = A x - b with well-conditioned square A; returns (A, b, x_star)."""
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    A = Q @ np.diag(rng.uniform(0.5, 2.0, size=p)) @ Q.T + 0.0
    x_star = rng.standard_normal(p)
    return A, A @ x_star, x_star


def random_glm(rng, n, d, lam=None):
    A = rng.standard_normal((d, n))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    return GlmDataset(A=A, y=y, lam=lam if lam is not None else 1.0 / n)


def random_quad_losses(rng, n, d, ridge=0.5):
    losses = []
    for _ in range(n):
        G = rng.standard_normal((d, d))
        losses.append(quadratic_loss(G @ G.T + ridge * np.eye(d), rng.standard_normal(d)))
    return losses


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
