"""Shared builders: Gaussian data, closed-form free evolution, random fields."""

import numpy as np
import pytest

from wnls.grid import Field, FieldPair, SpectralGrid


def coords(grid):
    """Meshgrid of coordinates, list of d arrays."""
    return np.meshgrid(*grid.x, indexing="ij")


def gaussian_field(grid, a=1.0, amplitude=1.0, center=None, velocity=None, chirp=0.0):
    """amplitude * exp(-a |x-c|^2) * exp(i v.(x-c)) * exp(i chirp |x-c|^2)."""
    mesh = coords(grid)
    if center is None:
        center = (0.0,) * grid.d
    if velocity is None:
        velocity = (0.0,) * grid.d
    r2 = sum((m - c) ** 2 for m, c in zip(mesh, center))
    phase = sum(v * (m - c) for v, m, c in zip(velocity, mesh, center))
    data = amplitude * np.exp(-a * r2) * np.exp(1j * (phase + chirp * r2))
    return Field(grid, data)


def free_gaussian(grid, t, a=1.0, amplitude=1.0):
    """Closed-form linear evolution of amplitude*exp(-a|x|^2):

    u(t,x) = amplitude * (1+4iat)^(-d/2) * exp(-a|x|^2/(1+4iat)).
    """
    mesh = coords(grid)
    r2 = sum(m**2 for m in mesh)
    denom = 1.0 + 4.0j * a * t
    data = amplitude * denom ** (-grid.d / 2.0) * np.exp(-a * r2 / denom)
    return Field(grid, data)


def random_field(grid, seed=0, scale=1.0, decay=2.0):
    """Seeded smooth random field: band-limited noise with spectral decay."""
    rng = np.random.default_rng(seed)
    spec = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    spec *= np.exp(-decay * grid.k_sq() / grid.k_sq().max())
    data = np.fft.ifftn(spec)
    data *= scale / max(np.abs(data).max(), 1e-300)
    return Field(grid, data)


def pair(u, v, t=0.0):
    return FieldPair(u, v, t)


@pytest.fixture
def grid1d():
    return SpectralGrid(1, 256, 16.0)


@pytest.fixture
def grid3d():
    return SpectralGrid(3, 16, 6.0)
