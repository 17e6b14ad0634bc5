import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dwcouple.assembly import CoupledEnergy, DofLayout, ProblemData, assemble_load
from dwcouple.bem import BoundaryMesh
from dwcouple.mesh import generate_initial_mesh
from dwcouple.potential import WellParams
from dwcouple.steklov import steklov_for

WELLS = WellParams((-1.0, 0.0), (1.0, 0.0))


class Setup:
    """Everything needed to solve on one mesh."""

    def __init__(self, mesh, params=WELLS, data=None):
        self.mesh = mesh
        self.params = params
        self.data = data or ProblemData()
        self.bm = BoundaryMesh.from_mesh(mesh)
        self.sp = steklov_for(self.bm)
        self.layout = DofLayout(mesh, self.bm)
        self.load = assemble_load(self.layout, self.data, self.sp)
        self.energy = CoupledEnergy(self.layout, params, self.sp, self.load)
        self.u0 = self.bm.interpolate(self.data.u0)


def benchmark_mesh(h0=0.25):
    return generate_initial_mesh("unit_square", labels={0: "S"}, h0=h0)


@pytest.fixture(scope="session")
def benchmark_setup():
    return Setup(benchmark_mesh(0.25), data=ProblemData(f=0.2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
