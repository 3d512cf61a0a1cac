from tempfile import TemporaryDirectory

import pytest
from numpy import meshgrid

from parastack import POD, FrequencyGrid, Material, TwoPhotonAmplitude
from parastack.utils import settings

# Dispersionless materials with the LiNbO3/SiO2 contrast at 1 μm
HI = Material("H", 2.2325)
LO = Material("L", 1.45)


params = [
    "file",
    "memory",
]


@pytest.fixture(scope="function", params=params)
def pod(request):
    if request.param == "memory":
        yield POD.from_uri("memory://")

    elif request.param == "file":
        # Local filesytem
        with TemporaryDirectory() as tdir:
            yield POD.from_uri(f"file://{tdir}")

    else:
        raise


@pytest.fixture(scope="function", params=[False, True])
def threaded(request):
    settings.threaded = request.param
    yield request.param
    settings.threaded = True


@pytest.fixture
def amplitude():
    """
    Build a `TwoPhotonAmplitude` from a function of (ω_s, ω_i) sampled
    on a square grid (step 0.001 rad/fs with the defaults)
    """

    def build(fn, center=2.0, half_width=0.064, n_points=129, normalization="physical"):
        grid = FrequencyGrid.uniform(center, half_width, n_points)
        ws, wi = meshgrid(grid.omega_s, grid.omega_i, indexing="ij")
        return TwoPhotonAmplitude(
            grid, fn(ws, wi) + 0j, omega_p0=2 * center, normalization=normalization
        )

    return build
