import numpy as np
import pytest

from mcns.grid import GridSpec, ScalarField, VectorField3, forward_transform, to_spectral
from mcns.operators import CurlDivState, curl, divergence
from mcns.propagators import PhysicalParams


@pytest.fixture(scope="session")
def unit_params():
    return PhysicalParams(epsilon=1.0, eta=1.0, c=1.0)


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(16, 12.0)


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(32, 24.0)


@pytest.fixture(scope="session")
def grid40():
    """Moment-quadrature grid: h = 0.5 so width-1 Gaussians are spectrally
    resolved to ~1e-13 and fully decayed at the faces."""
    return GridSpec(80, 40.0)


@pytest.fixture(scope="session")
def grid_decomp():
    """Decomposition-test grid: h = 0.5 and enough box that polynomially
    weighted moments of width-1 Gaussians decay below 1e-12 at the faces."""
    return GridSpec(56, 28.0)


@pytest.fixture(scope="session")
def grid_profiles():
    """Profile-fidelity grid: n=96, box per the wave-wrap rule for t <= 5."""
    return GridSpec(96, 48.0)


def random_real_field(grid, seed=0, band_limit=None):
    """Zero-mean random band-limited real field (spectral representation)."""
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((grid.n,) * 3)
    f = forward_transform(ScalarField(grid, vals.astype(complex), "physical"))
    keep = band_limit if band_limit is not None else grid.n // 4
    k_idx = np.fft.fftfreq(grid.n, 1.0 / grid.n)
    mask1 = np.abs(k_idx) <= keep
    mask = (mask1.reshape(-1, 1, 1) & mask1.reshape(1, -1, 1)
            & mask1.reshape(1, 1, -1))
    out = f.values * mask
    out[0, 0, 0] = 0.0
    return ScalarField(grid, out, "spectral")


def random_vector_field(grid, seed=0, band_limit=None):
    return VectorField3(tuple(
        random_real_field(grid, seed=seed + i, band_limit=band_limit)
        for i in range(3)))


def gaussian_bump_field(grid, center=(0.0, 0.0, 0.0), width2=1.0, amp=1.0):
    """amp * exp(-|x-center|^2/(4 width2)) sampled on the grid (physical)."""
    X, Y, Z = grid.meshgrid()
    r2 = (X - center[0]) ** 2 + (Y - center[1]) ** 2 + (Z - center[2]) ** 2
    return ScalarField(grid, (amp * np.exp(-r2 / (4.0 * width2))).astype(complex),
                       "physical")


def shifted_state(grid, params, amplitude, center=(2.0, -1.0, 1.5),
                  direction=(0.4, -0.3, 0.8), width2=1.0):
    """Generic small state: rho a Gaussian bump, (a, omega) from a bump momentum."""
    bump = gaussian_bump_field(grid, center, width2, amplitude * (4 * np.pi) ** -1.5)
    m = VectorField3(tuple(bump * d for d in direction))
    ms = to_spectral(m)
    return CurlDivState(to_spectral(bump), divergence(ms), curl(ms), params)
