import numpy as np
import pytest

from pcadenoise.core import LevelImage
from pcadenoise.model import NoiseModel, PcaParams, PriorParams
from pcadenoise.oracle import SmallInstance

# 3x3 checkerboard observation, two levels: the fixed reference instance for
# every exact-enumeration check.
CHECKER = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])


@pytest.fixture
def checker_g():
    return LevelImage.from_array(CHECKER, 2)


@pytest.fixture
def reference_instance(checker_g):
    return SmallInstance(checker_g, PriorParams(1 / 3), NoiseModel(0.25), beta=1.0,
                         pca=PcaParams(0.51))


def random_image(rng, width, height, levels):
    return LevelImage.from_array(rng.integers(0, levels, size=(height, width)), levels)


def pca_kernel_args(inst):
    """Coupling, data table and inertia table as pca_update_range expects them."""
    from pcadenoise.model import data_table
    scale = inst.pca.field_scale
    coupling2b = 2.0 * inst.beta * inst.prior.coupling * scale
    dt = data_table(inst.levels, inst.noise) * scale
    inert = inst.beta * inst.pca.cost_table(inst.levels)
    return coupling2b, dt, inert
