import numpy, pytest
from numpy.testing import assert_array_equal

from pidlmi.utils import *
from conftest import MU_STAR, GAMMA_STAR


def unit_ball_problem():
    """
    maximize x subject to [[1, x], [x, 1]] >= 0; optimum x = 1.
    """
    block = LmiBlock("ball", numpy.eye(2), numpy.array([[[0.0, 1.0], [1.0, 0.0]]]))
    return make_problem([block], [1.0])


def test_options_validation():
    with pytest.raises(ConfigError, match="gap-tol"):
        SolverOptions(gap_tol=0.0)
    with pytest.raises(ConfigError, match="barrier-factor"):
        SolverOptions(barrier_factor=1.0)
    with pytest.raises(ConfigError, match="trace-bound"):
        SolverOptions(trace_bound=-1.0)


def test_coefficient_shape_checked():
    block = LmiBlock("bad", numpy.eye(2), numpy.zeros((2, 2, 2)))
    with pytest.raises(ModelError):
        make_problem([block], [1.0])


def test_toy_problem():
    solution = solve(unit_ball_problem())
    assert solution.status is Status.OPTIMAL
    assert solution.x[0] == pytest.approx(1.0, rel=1e-6)
    assert solution.x[0] <= 1.0
    assert 0.0 <= solution.gap <= SolverOptions().gap_tol
    assert solution.dual_bound >= solution.objective
    assert solution.dual_bound == pytest.approx(solution.objective, rel=1e-6)


def test_toy_scaling_is_transparent():
    block = LmiBlock("ball", numpy.diag([1e6, 1e-6]), numpy.array([[[0.0, 1.0], [1.0, 0.0]]]))
    solution = solve(make_problem([block], [1.0]))
    assert solution.status is Status.OPTIMAL
    assert solution.x[0] == pytest.approx(1.0, rel=1e-6)


def test_toy_infeasible():
    blocks = [
        LmiBlock("lower", numpy.array([[-2.0]]), numpy.array([[[1.0]]])),
        LmiBlock("upper", numpy.array([[1.0]]), numpy.array([[[-1.0]]])),
    ]
    problem = make_problem(blocks, [1.0])
    assert not phase1(problem).feasible
    solution = solve(problem)
    assert solution.status is Status.INFEASIBLE
    assert solution.block_names == ("lower", "upper")


def test_assembled_sizes(vertices, weights):
    problem = assemble(vertices, weights, SolverOptions(trace_bound=0.0))
    assert problem.nvars == 17
    assert problem.block_sizes == (7, 13, 13, 13, 13, 1)
    assert problem.mu_index == 16
    assert len(problem.diag_vars) == 7

    problem = assemble(vertices, weights)
    assert problem.block_sizes == (7, 13, 13, 13, 13, 1, 1)
    assert assemble(vertices, weights, structured=False).nvars == 29


def test_structured_layout_skips_coupling_entries():
    layout = certificate_layout(True)
    assert len(layout) == len(set(layout)) == 16
    assert all(not (i < 3 <= j) for i, j in layout)
    full = certificate_layout(False)
    assert len(full) == len(set(full)) == 28
    assert set(layout) < set(full)


def test_assembled_blocks_reproduce_schur_form(synthesis):
    problem, x = synthesis.problem, synthesis.solution.x
    cert = certificate_from_x(problem, x)
    for block, aug in zip(problem.blocks[1:5], synthesis.vertices):
        expected = schur_lmi(cert, build_fqr(aug))
        numpy.testing.assert_allclose(block.value(x), expected, rtol=1e-9, atol=1e-10 * numpy.abs(expected).max())


def test_degenerate_box_gives_identical_blocks(plant, scurve, weights):
    vertices = polytope_vertices(plant, UncertaintyBox(0, 0, 0, 0), scurve, weights)
    problem = assemble(vertices, weights)
    for block in problem.blocks[2:5]:
        assert_array_equal(block.const, problem.blocks[1].const)
        assert_array_equal(block.coeffs, problem.blocks[1].coeffs)


def test_vertex_dimension_mismatch(vertices, weights):
    odd = AugmentedSystem(A=vertices[0].A, B1=vertices[0].B1, B2=vertices[0].B2,
                          C=vertices[0].C[:3], D=vertices[0].D[:3])
    with pytest.raises(ModelError):
        assemble([vertices[0], odd], weights)
    with pytest.raises(ModelError):
        assemble([], weights)


def test_robust_sparse_optimum(synthesis):
    solution = synthesis.solution
    assert solution.status is Status.OPTIMAL
    # the default trace bound contains the published certificate
    assert solution.objective >= MU_STAR
    assert synthesis.certificate.gamma <= GAMMA_STAR
    assert 0.0 <= solution.gap <= SolverOptions().gap_tol
    assert solution.dual_bound >= solution.objective
    assert solution.dual_residual < 1e-3


def test_trace_bound_sets_mu(synthesis, vertices, weights):
    bound = SolverOptions().trace_bound
    mu = synthesis.solution.objective
    assert numpy.trace(synthesis.certificate.matrix) == pytest.approx(bound, rel=1e-3)
    # the weighted error alone keeps gamma above q2 at DC
    assert mu < 1.0 / weights.q2 ** 2

    half = SolverOptions(trace_bound=bound / 2)
    smaller = solve(assemble(vertices, weights, half), half)
    assert smaller.status is Status.OPTIMAL
    assert smaller.objective <= mu
    assert smaller.objective >= 0.5 * mu * (1 - 1e-4)
    cert = certificate_from_x(assemble(vertices, weights, half), smaller.x)
    assert numpy.trace(cert.matrix) == pytest.approx(bound / 2, rel=1e-3)


def test_path_is_monotone(synthesis):
    history = synthesis.solution.history
    assert len(history) == synthesis.solution.outer_iterations
    for before, after in zip(history, history[1:]):
        assert after >= before - 1e-9 * abs(before)


def test_solution_blocks_feasible(synthesis):
    problem, x = synthesis.problem, synthesis.solution.x
    values = [block.value(x) for block in problem.blocks]
    largest = max(numpy.linalg.norm(V, 2) for V in values)
    for V in values:
        assert numpy.linalg.eigvalsh(V)[0] >= -SolverOptions().feas_tol * largest
    assert x[problem.mu_index] >= SolverOptions().mu_min


def test_solve_is_deterministic(synthesis):
    again = solve(synthesis.problem, SolverOptions())
    assert_array_equal(again.x, synthesis.solution.x)
    assert again.iterations == synthesis.solution.iterations


def test_fix_variable(synthesis):
    problem = synthesis.problem
    fixed = fix_variable(problem, problem.mu_index, MU_STAR)
    assert fixed.nvars == problem.nvars - 1
    assert fixed.mu_index is None
    assert len(fixed.layout) == 16
    x = synthesis.solution.x
    for full, reduced in zip(problem.blocks, fixed.blocks):
        expected = full.value(numpy.append(x[:-1], MU_STAR))
        numpy.testing.assert_allclose(reduced.value(x[:-1]), expected, rtol=1e-10,
                                      atol=1e-10 * max(numpy.abs(expected).max(), 1.0))


def test_doubled_mu_is_infeasible(synthesis):
    problem, mu = synthesis.problem, synthesis.solution.objective
    assert not phase1(fix_variable(problem, problem.mu_index, 2 * mu), margin=0.0, center=False).feasible
    assert phase1(fix_variable(problem, problem.mu_index, 0.5 * mu), margin=0.0, center=False).feasible


def test_bisection_agrees_with_path_following(synthesis):
    bracket = bisect_mu(synthesis.problem)
    mu = synthesis.solution.objective
    assert bracket.lo < bracket.hi
    assert bracket.lo == pytest.approx(mu, rel=1e-4)
    assert bracket.hi == pytest.approx(mu, rel=1e-4)
    assert bracket.phase1_solves > 2


def test_bisection_needs_mu():
    with pytest.raises(ModelError):
        bisect_mu(unit_ball_problem())
    with pytest.raises(ModelError):
        certificate_from_x(unit_ball_problem(), [0.0])
