import numpy as np
import pytest

from hyperdyn import build_system
from hyperdyn.energy import build_energy


@pytest.fixture(scope="session")
def cat_system():
    return build_system([[2, 1], [1, 1]])


@pytest.fixture(scope="session")
def tilde_system():
    return build_system([[2, 1], [1, 1]], gluing_kind="generic_Htilde")


@pytest.fixture()
def rng():
    return np.random.default_rng(20260809)


@pytest.fixture(scope="session")
def energy_ctx(cat_system):
    # small but adequate context shared by the energy tests
    return build_energy(
        cat_system,
        rng=np.random.default_rng(11),
        cloud_density=64,
        cloud_iters=24,
        budget=1800,
    )
