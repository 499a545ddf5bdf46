import numpy, pytest

from pidlmi.utils import *
from pidlmi import pidlmi as synthesis_tool

# published design for the default problem
MU_STAR = 1.0764e-5
GAMMA_STAR = 304.7995
K_STAR = numpy.array([0.0, 0.0, 0.0, -1664.71, -47.71, -0.50])


@pytest.fixture(scope="session")
def plant():
    return SecondOrderPlant(1 / 400, 1 / 200)


@pytest.fixture(scope="session")
def box():
    return UncertaintyBox()


@pytest.fixture(scope="session")
def weights():
    return WeightSpec()


@pytest.fixture(scope="session")
def scurve():
    return SCurveSpec()


@pytest.fixture(scope="session")
def vertices(plant, box, scurve, weights):
    return polytope_vertices(plant, box, scurve, weights)


@pytest.fixture(scope="session")
def nominal_system(plant, scurve, weights):
    return build_augmented(plant, 0.0, 0.0, scurve, weights)


@pytest.fixture(scope="session")
def k_star():
    return GainVector(K_STAR)


@pytest.fixture(scope="session")
def pid_star():
    return PidGains(kp=47.71, ki=1664.71, kd=0.50)


@pytest.fixture(scope="session")
def printed_certificate():
    """
    Optimal certificate as printed with three significant figures.
    """
    W = numpy.zeros((7, 7))
    W[:3, :3] = [[1.81e-1, -3.19e-1, 5.34e-2],
                 [-3.19e-1, 7.06e-1, -6.90e-1],
                 [5.34e-2, -6.90e-1, 3.12]]
    W[3:6, 3:6] = [[4.16e-7, -1.62e-5, 3.54e-5],
                   [-1.62e-5, 1.00e-3, -2.95e-2],
                   [3.54e-5, -2.95e-2, 2.74]]
    W[3:6, 6] = W[6, 3:6] = [5.60e-5, -5.87e-3, -3.62e-2]
    W[6, 6] = 7.21
    return Certificate.from_matrix(W, MU_STAR)


@pytest.fixture(scope="session")
def config():
    return Config()


@pytest.fixture(scope="session")
def synthesis(config):
    """
    Robust sparse synthesis with default options, shared by all tests.
    """
    return synthesis_tool.run(config)
