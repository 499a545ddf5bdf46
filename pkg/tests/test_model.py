import numpy, pytest
from numpy.testing import assert_allclose, assert_array_equal

from pidlmi.utils import *


def test_plant_rejects_nonpositive_mass():
    with pytest.raises(ModelError):
        SecondOrderPlant(0.0, 1.0)
    with pytest.raises(ModelError):
        SecondOrderPlant(1.0, -1.0)


def test_box_corner_order(box):
    assert box.corners() == [(-0.3, -0.3), (-0.3, 0.3), (0.3, -0.3), (0.3, 0.3)]


def test_box_lattice_of_two_is_corners(box):
    assert box.lattice(2) == box.corners()
    assert len(box.lattice(11)) == 121
    with pytest.raises(ConfigError):
        box.lattice(1)


@pytest.mark.parametrize("bounds", [(0.3, -0.3, 0.0, 0.0), (0.0, 0.0, 0.3, -0.3), (-1.0, 0.0, 0.0, 0.0)])
def test_box_invalid_bounds(bounds):
    with pytest.raises(ConfigError):
        UncertaintyBox(*bounds)


def test_weights_reject_zero_r():
    with pytest.raises(ConfigError, match=r"\[weights\] r"):
        WeightSpec(r=0.0)


def test_scurve_requires_hurwitz_generator():
    with pytest.raises(ConfigError, match="Hurwitz"):
        SCurveSpec(z1=125.0)
    with pytest.raises(ConfigError, match="Hurwitz"):
        SCurveSpec(z1=0.0, z2=0.0, z3=0.0)


def test_scurve_with_unit_triple_pole():
    A_z, _ = scurve_matrices(SCurveSpec(z1=-1.0, z2=-3.0, z3=-3.0))
    # (s + 1)^3
    assert_allclose(numpy.poly(A_z), [1.0, 3.0, 3.0, 1.0], atol=1e-8)
    assert_allclose(numpy.linalg.eigvals(A_z).real, -1.0, atol=1e-4)


def test_scurve_triple_pole(scurve):
    A_z, C_z = scurve_matrices(scurve)
    assert_allclose(numpy.linalg.eigvals(A_z).real, -5.0, atol=1e-3)
    assert_array_equal(C_z, [[1.0, 0.0, 0.0]])


def test_reference_matches_closed_form(scurve):
    t = numpy.linspace(0.0, 3.0, 301)
    ref = reference_trajectory(scurve, t)
    p = -2e-5 * numpy.exp(-5 * t) * (1 + 5 * t + 12.5 * t ** 2)
    assert_allclose(ref[:, 0], p + 2e-5, rtol=0, atol=1e-15)
    assert ref[0, 0] == 0.0
    assert abs(ref[-1, 0] - 2e-5) < 1e-9


def test_reference_derivative_columns(scurve):
    t = numpy.linspace(0.0, 1.0, 20001)
    ref = reference_trajectory(scurve, t)
    assert_allclose(numpy.gradient(ref[:, 0], t)[1:-1], ref[1:-1, 1], atol=1e-10)
    assert_allclose(numpy.gradient(ref[:, 1], t)[1:-1], ref[1:-1, 2], atol=1e-8)
    assert_allclose(numpy.gradient(ref[:, 2], t)[1:-1], ref[1:-1, 3], atol=1e-6)


def test_reference_jerk_satisfies_generator(scurve):
    ref = reference_trajectory(scurve, numpy.linspace(0.0, 3.0, 601))
    p = ref[:, 0] - scurve.offset
    expected = scurve.z1 * p + scurve.z2 * ref[:, 1] + scurve.z3 * ref[:, 2]
    assert_allclose(ref[:, 3], expected, rtol=1e-9, atol=1e-15)
    assert ref[0, 3] == pytest.approx(-125.0 * -2e-5)


@pytest.mark.parametrize("grid", [[], [0.1, 0.2], [0.0, 0.2, 0.1]])
def test_reference_rejects_bad_grid(scurve, grid):
    with pytest.raises(ModelError):
        reference_trajectory(scurve, grid)


def test_feedforward_and_perturbation(plant):
    assert feedforward(plant, 2.0, 4.0) == pytest.approx(4.0 / 400 + 2.0 / 200)
    loaded = perturbed(plant, 0.3, -0.3)
    assert loaded.m == pytest.approx(1.3 / 400)
    assert loaded.d == pytest.approx(0.7 / 200)
    with pytest.raises(ModelError):
        perturbed(plant, -1.0, 0.0)


def test_nominal_augmented_system(nominal_system, scurve):
    aug = nominal_system
    assert_array_equal(aug.A[2, :3], [scurve.z1, scurve.z2, scurve.z3])
    assert_array_equal(aug.A[5, :3], 0.0)
    assert_allclose(aug.A[5, 3:], [0.0, 0.0, -2.0])
    assert aug.B2[5, 0] == pytest.approx(-400.0)
    assert_array_equal(aug.B1, numpy.eye(6))
    assert_array_equal(aug.C[:, 3:], [[1e4, 0, 0], [0, 1e2, 0], [0, 0, 0], [0, 0, 0]])
    assert_array_equal(aug.D[:, 0], [0, 0, 0, 1])


def test_perturbation_couples_reference(plant, scurve, weights):
    dm, dd = 0.3 * plant.m, -0.3 * plant.d
    aug = build_augmented(plant, dm, dd, scurve, weights)
    mass = plant.m + dm
    assert_allclose(aug.A[5, :3], [scurve.z1 * dm / mass, scurve.z2 * dm / mass, (scurve.z3 * dm + dd) / mass])
    assert aug.A[5, 5] == pytest.approx(-(plant.d + dd) / mass)
    with pytest.raises(ModelError):
        build_augmented(plant, -plant.m, 0.0, scurve, weights)


def test_perturbed_vertex_entries(plant, scurve, weights):
    aug = build_augmented(plant, 0.3 * plant.m, 0.3 * plant.d, scurve, weights)
    assert_allclose(aug.A[5, :3], [-28.84615, -17.30769, -3.0], rtol=1e-6)
    assert aug.A[5, 5] == pytest.approx(-2.0)
    assert aug.B2[5, 0] == pytest.approx(-307.6923, rel=1e-6)


def test_degenerate_box_gives_identical_vertices(plant, scurve, weights):
    vertices = polytope_vertices(plant, UncertaintyBox(0, 0, 0, 0), scurve, weights)
    assert len(vertices) == 4
    for aug in vertices[1:]:
        assert_array_equal(aug.A, vertices[0].A)


def test_allocation_examples():
    assert_allclose(allocate_forces([0, 0, 4.0, 0, 0, 0], 0.1), [0, 1, 0, 1, 0, 1, 0, 1], atol=1e-12)
    assert_array_equal(allocate_forces(numpy.zeros(6), 0.1), numpy.zeros(8))
    assert_allclose(allocate_forces([0, 0, 0, 0, 0, 1.0], 0.1),
                    [2.5, 0, -2.5, 0, -2.5, 0, 2.5, 0], atol=1e-12)


def test_wrench_columns():
    e1, e8 = numpy.eye(8)[0], numpy.eye(8)[7]
    assert_allclose(compose_wrench(e1, 0.1), [0, 1, 0, 0, 0, 0.1])
    assert_allclose(compose_wrench(e8, 0.1), [0, 0, 1, 0.1, 0, 0])
    assert allocation_matrix(0.1).shape == (6, 8)


def test_allocation_round_trip():
    rng = numpy.random.default_rng(7)
    for _ in range(1000):
        F_g = rng.normal(size=6) * 10.0 ** rng.uniform(-3, 3)
        residual = compose_wrench(allocate_forces(F_g, 0.1), 0.1) - F_g
        assert numpy.linalg.norm(residual) <= 1e-12 * numpy.linalg.norm(F_g)


def test_allocation_rejects_bad_arm():
    with pytest.raises(ModelError):
        allocation_matrix(0.0)
