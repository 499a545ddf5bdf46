import collections, dataclasses, enum, logging, warnings
import numpy, scipy.linalg

from pidlmi.utils.errors import ConfigError, InfeasibleError, ModelError, SolverError
from pidlmi.utils.lmi import Certificate, build_fqr, schur_lmi

logger = logging.getLogger(__name__)

_MIN_STEP = 1e-14
_BACKTRACK = 0.5
_ARMIJO = 0.25
_TINY = 1e-300
# Newton decrement below which full steps are taken without line search
_PURE_NEWTON = 0.25


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    MAX_ITERATIONS = "MaxIterations"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclasses.dataclass(frozen=True)
class SolverOptions:
    """
    Tolerances and limits of the barrier solver. feas_tol is relative to
    the largest block norm, gap_tol to the attained objective.

    trace_bound normalises the certificate. The supremum of mu over the
    unbounded certificate set is not attained (it is approached as the
    integral gain grows without limit), so the attained mu grows with the
    bound. The default 14 is the smallest integer trace that contains the
    published optimum (tr W* = 13.96).
    """
    gap_tol: float = 1e-9
    feas_tol: float = 1e-10
    mu_min: float = 1e-12
    max_outer: int = 60
    max_newton: int = 200
    barrier_factor: float = 10.0
    strict_margin: float = 1e-14
    newton_tol: float = 1e-10
    trace_bound: float = 14.0
    bisect_rtol: float = 1e-5

    def __post_init__(self):
        positive = ("gap_tol", "feas_tol", "max_outer", "max_newton", "newton_tol", "bisect_rtol")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError("[solver] %s: must be > 0 (got %r)" % (name.replace("_", "-"), getattr(self, name)))
        for name in ("mu_min", "strict_margin", "trace_bound"):
            if not getattr(self, name) >= 0:
                raise ConfigError("[solver] %s: must be >= 0 (got %r)" % (name.replace("_", "-"), getattr(self, name)))
        if not self.barrier_factor > 1:
            raise ConfigError("[solver] barrier-factor: must be > 1 (got %r)" % self.barrier_factor)


@dataclasses.dataclass(frozen=True, eq=False)
class LmiBlock:
    """
    Affine matrix constraint const + sum_k x_k coeffs[k] >= 0.
    """
    name: str
    const: numpy.ndarray
    coeffs: numpy.ndarray

    @property
    def size(self):
        return self.const.shape[0]

    def value(self, x):
        return self.const + numpy.tensordot(numpy.asarray(x, dtype=float), self.coeffs, axes=1)


@dataclasses.dataclass(frozen=True, eq=False)
class SdpProblem:
    """
    maximize objective^T x subject to every block >= 0.

    layout lists the W entry (i, j) of each certificate variable (None for
    problems that are not certificate searches); the remaining variable is
    mu at mu_index. The scaling fields are derived by make_problem.
    """
    blocks: tuple
    objective: numpy.ndarray
    mu_index: object = None
    layout: object = None
    diag_vars: tuple = ()
    mu_min: float = 0.0
    congruence: tuple = ()
    block_scale: numpy.ndarray = None
    var_scale: numpy.ndarray = None

    @property
    def nvars(self):
        return self.objective.size

    @property
    def block_sizes(self):
        return tuple(b.size for b in self.blocks)


@dataclasses.dataclass(frozen=True, eq=False)
class SdpSolution:
    x: numpy.ndarray
    objective: float
    status: Status
    iterations: int
    gap: float
    outer_iterations: int = 0
    history: tuple = ()
    dual_bound: float = float("nan")
    dual_residual: float = float("nan")
    block_min_eigs: tuple = ()
    block_names: tuple = ()


Phase1Result = collections.namedtuple("Phase1Result", ["x", "slack", "feasible", "status", "iterations"])
Bracket = collections.namedtuple("Bracket", ["lo", "hi", "phase1_solves"])
_PathResult = collections.namedtuple(
    "_PathResult", ["y", "chols", "t", "status", "newton", "outer", "history", "gap", "residual"]
)


# problem construction


def _ruiz(const, coeffs, sweeps=8):
    """
    Diagonal congruence scaling that equilibrates the row magnitudes of a
    block over its constant and coefficient matrices.
    """
    magnitude = numpy.max(numpy.abs(numpy.concatenate([const[None], coeffs])), axis=0)
    d = numpy.ones(const.shape[0])
    for _ in range(sweeps):
        rows = numpy.max(magnitude * numpy.outer(d, d), axis=1)
        rows[rows == 0] = 1.0
        d = d / numpy.sqrt(rows)
    return d


def make_problem(blocks, objective, mu_index=None, layout=None, diag_vars=(), mu_min=0.0):
    """
    Builds an SdpProblem and records its scaling: a diagonal congruence and
    a Frobenius normalisation per block, then one scale per variable so that
    its largest scaled coefficient has unit norm.
    """
    blocks = tuple(blocks)
    objective = numpy.asarray(objective, dtype=float)
    nvars = objective.size
    for b in blocks:
        if b.coeffs.shape != (nvars, b.size, b.size):
            raise ModelError("block %s: coefficient shape %s does not match %d variables"
                             % (b.name, b.coeffs.shape, nvars))

    congruence = []
    block_scale = numpy.empty(len(blocks))
    coeff_norms = numpy.zeros((len(blocks), nvars))
    for j, b in enumerate(blocks):
        d = _ruiz(b.const, b.coeffs)
        D = numpy.outer(d, d)
        norms = numpy.sqrt(numpy.sum((b.coeffs * D) ** 2, axis=(1, 2)))
        largest = max(numpy.linalg.norm(b.const * D), numpy.max(norms, initial=0.0))
        block_scale[j] = 1.0 / largest if largest > 0 else 1.0
        congruence.append(d)
        coeff_norms[j] = norms * block_scale[j]

    largest = numpy.max(coeff_norms, axis=0, initial=0.0)
    var_scale = numpy.where(largest > 0, 1.0 / numpy.where(largest > 0, largest, 1.0), 1.0)

    return SdpProblem(
        blocks=blocks,
        objective=objective,
        mu_index=mu_index,
        layout=None if layout is None else tuple(layout),
        diag_vars=tuple(diag_vars),
        mu_min=mu_min,
        congruence=tuple(congruence),
        block_scale=block_scale,
        var_scale=var_scale,
    )


def _scaled_data(p):
    """
    Constant and coefficient matrices of every block in solver coordinates
    (x = var_scale * y).
    """
    consts, coeffs = [], []
    for b, d, sigma in zip(p.blocks, p.congruence, p.block_scale):
        D = sigma * numpy.outer(d, d)
        consts.append(b.const * D)
        coeffs.append(b.coeffs * D * p.var_scale[:, None, None])
    return consts, coeffs


def certificate_layout(structured=True):
    """
    W entries (i, j), i <= j, that are decision variables. The structured
    layout leaves out W_12 and W_21 (L(W) = 0), giving 16 entries.
    """
    layout = [(a, b) for a in range(3) for b in range(a, 3)]
    layout += [(a, b) for a in range(3, 6) for b in range(a, 6)]
    if not structured:
        layout += [(a, b) for a in range(3) for b in range(3, 7)]
    layout += [(3, 6), (4, 6), (5, 6), (6, 6)]
    return layout


def _basis(i, j):
    E = numpy.zeros((7, 7))
    E[i, j] = E[j, i] = 1.0
    return E


def assemble(vertices, weights, opts=None, structured=True):
    """
    Robust (sparse) H-infinity synthesis as an SdpProblem: W >= 0, one Schur
    block per vertex, mu >= mu_min and, unless disabled, tr(W) <= trace_bound.

    Args:
        vertices: augmented systems of the polytope corners
        weights: WeightSpec the vertices were built with
        opts: SolverOptions (mu_min, trace_bound)
        structured: drop the W_12/W_21 variables

    Returns:
        SdpProblem
    """
    opts = opts or SolverOptions()
    vertices = list(vertices)
    if not vertices:
        raise ModelError("no vertex systems")
    reference = vertices[0]
    for aug in vertices:
        for name in ("A", "B1", "B2", "C", "D"):
            if getattr(aug, name).shape != getattr(reference, name).shape:
                raise ModelError("dimension mismatch between vertex systems (%s)" % name)
    if reference.A.shape != (6, 6) or reference.B2.shape != (6, 1):
        raise ModelError("vertex systems must have 6 states and one input (got %s, %s)"
                         % (reference.A.shape, reference.B2.shape))
    if not weights.r > 0 or any(aug.D[-1, 0] == 0 for aug in vertices):
        raise ConfigError("[weights] r: must be > 0, D loses rank")

    layout = certificate_layout(structured)
    nvars = len(layout) + 1
    mu = nvars - 1
    bases = [_basis(i, j) for i, j in layout]
    zero = numpy.zeros((7, 7))

    coeffs = numpy.zeros((nvars, 7, 7))
    coeffs[:mu] = bases
    blocks = [LmiBlock("W", zero.copy(), coeffs)]

    for i, aug in enumerate(vertices, 1):
        lifted = build_fqr(aug)
        S0 = schur_lmi(Certificate.from_matrix(zero, 0.0), lifted)
        coeffs = [schur_lmi(Certificate.from_matrix(E, 0.0), lifted) - S0 for E in bases]
        coeffs.append(schur_lmi(Certificate.from_matrix(zero, 1.0), lifted) - S0)
        blocks.append(LmiBlock("vertex%d" % i, S0, numpy.array(coeffs)))

    coeffs = numpy.zeros((nvars, 1, 1))
    coeffs[mu] = 1.0
    blocks.append(LmiBlock("mu", numpy.array([[-opts.mu_min]]), coeffs))

    diag_vars = [k for k, (i, j) in enumerate(layout) if i == j]
    if opts.trace_bound > 0:
        coeffs = numpy.zeros((nvars, 1, 1))
        coeffs[diag_vars] = -1.0
        blocks.append(LmiBlock("trace", numpy.array([[opts.trace_bound]]), coeffs))

    objective = numpy.zeros(nvars)
    objective[mu] = 1.0

    logger.info("assembled %d variables, blocks %s", nvars, [b.size for b in blocks])
    return make_problem(blocks, objective, mu_index=mu, layout=layout, diag_vars=diag_vars, mu_min=opts.mu_min)


def certificate_from_x(p, x):
    """
    Certificate encoded by the variable vector of an assembled problem.
    """
    if p.layout is None:
        raise ModelError("problem carries no certificate layout")
    W = numpy.zeros((7, 7))
    for value, (i, j) in zip(x, p.layout):
        W[i, j] = W[j, i] = value
    return Certificate.from_matrix(W, x[p.mu_index])


def fix_variable(p, index, value):
    """
    Problem with variable `index` frozen at `value`.
    """
    blocks = [LmiBlock(b.name, b.const + value * b.coeffs[index], numpy.delete(b.coeffs, index, axis=0))
              for b in p.blocks]

    def shift(k):
        return k if k < index else k - 1

    mu_index = None if p.mu_index in (None, index) else shift(p.mu_index)
    layout = None
    if p.layout is not None:
        layout = [pair for k, pair in enumerate(p.layout) if k != index]
    diag_vars = [shift(k) for k in p.diag_vars if k != index]
    return make_problem(blocks, numpy.delete(p.objective, index), mu_index=mu_index,
                        layout=layout, diag_vars=diag_vars, mu_min=p.mu_min)


# barrier machinery


class _Barrier:
    """
    phi(y) = -sum_j log det F_j(y) for affine blocks F_j.
    """

    def __init__(self, consts, coeffs):
        self.consts = consts
        self.coeffs = coeffs
        self.degree = sum(C.shape[0] for C in consts)

    def factor(self, y):
        chols = []
        for C, A in zip(self.consts, self.coeffs):
            F = C + numpy.tensordot(y, A, axes=1)
            try:
                chols.append(scipy.linalg.cholesky(F, lower=True))
            except (numpy.linalg.LinAlgError, ValueError):
                return None
        return chols

    @staticmethod
    def logdet(chols):
        return sum(2.0 * numpy.sum(numpy.log(numpy.diag(L))) for L in chols)

    def derivatives(self, chols):
        nvars = self.coeffs[0].shape[0]
        grad = numpy.zeros(nvars)
        hess = numpy.zeros((nvars, nvars))
        # fixed reduction order over blocks
        for L, A in zip(chols, self.coeffs):
            Linv = scipy.linalg.solve_triangular(L, numpy.eye(L.shape[0]), lower=True)
            S = Linv @ A @ Linv.T
            flat = S.reshape(nvars, -1)
            grad -= numpy.trace(S, axis1=1, axis2=2)
            hess += flat @ flat.T
        return grad, hess

    def dual(self, chols, c, t, dy):
        """
        Newton-corrected dual point Z_j = (F_j^-1 - F_j^-1 dF_j F_j^-1) / t
        with dF_j the block change along the Newton direction dy. Z
        satisfies the dual equalities whenever dy solves the Newton system,
        and it is PSD iff every L^-1 dF_j L^-T has eigenvalues below 1.

        Returns:
            (gap, residual): gap = sum_j tr(F_j Z_j), the distance from the
            primal objective to the dual bound, or inf if Z is not PSD;
            residual of the dual equalities c + <A_k, Z> = 0
        """
        gap = 0.0
        residual = numpy.array(c, dtype=float)
        for L, A in zip(chols, self.coeffs):
            n = L.shape[0]
            Linv = scipy.linalg.solve_triangular(L, numpy.eye(n), lower=True)
            S = Linv @ numpy.tensordot(dy, A, axes=1) @ Linv.T
            S = (S + S.T) / 2
            if numpy.linalg.eigvalsh(S)[-1] >= 1.0:
                gap = numpy.inf
            else:
                gap += (n - numpy.trace(S)) / t
            Z = Linv.T @ (numpy.eye(n) - S) @ Linv / t
            residual += numpy.einsum("kij,ij->k", A, Z)
        return gap, residual


def _newton_direction(hess, grad):
    """
    Solves hess * step = -grad with Jacobi preconditioning.
    """
    diag = numpy.diag(hess).copy()
    diag[~(diag > 0)] = 1.0
    s = 1.0 / numpy.sqrt(diag)
    scaled = hess * numpy.outer(s, s)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        try:
            step = scipy.linalg.solve(scaled, -s * grad, assume_a="pos")
        except (numpy.linalg.LinAlgError, ValueError):
            step = scipy.linalg.lstsq(scaled, -s * grad)[0]
    return s * step


def _center(barrier, c, y, chols, t, opts):
    """
    Damped Newton minimisation of -t c^T y + phi(y) from a strictly
    feasible y. Every accepted step keeps all blocks positive definite.

    Returns:
        y, chols, number of Newton steps, state
        ("centered", "stalled", "maxiter" or "failed")
    """
    phi = -barrier.logdet(chols)
    for step in range(opts.max_newton):
        gphi, hess = barrier.derivatives(chols)
        grad = -t * c + gphi
        dy = _newton_direction(hess, grad)
        slope = float(grad @ dy)
        if not (numpy.all(numpy.isfinite(dy)) and numpy.isfinite(slope)):
            return y, chols, step, "failed"
        if -slope / 2 <= opts.newton_tol:
            return y, chols, step, "centered"
        if slope >= 0:
            return y, chols, step, "stalled"

        if -slope < _PURE_NEWTON ** 2:
            # quadratic convergence region, full step
            trial_chols = barrier.factor(y + dy)
            if trial_chols is not None:
                y, chols, phi = y + dy, trial_chols, -barrier.logdet(trial_chols)
                continue

        alpha = 1.0
        while alpha >= _MIN_STEP:
            trial = y + alpha * dy
            trial_chols = barrier.factor(trial)
            if trial_chols is not None:
                trial_phi = -barrier.logdet(trial_chols)
                change = -t * alpha * float(c @ dy) + (trial_phi - phi)
                if change <= _ARMIJO * alpha * slope:
                    break
            alpha *= _BACKTRACK
        else:
            return y, chols, step, "stalled"

        y, chols, phi = trial, trial_chols, trial_phi
    return y, chols, opts.max_newton, "maxiter"


def _initial_t(barrier, c, chols):
    """
    Barrier weight that best centres the starting point.
    """
    gphi, hess = barrier.derivatives(chols)
    Hc = _newton_direction(hess, -c)
    Hg = -_newton_direction(hess, gphi)
    t = float(c @ Hg) / float(c @ Hc) if c @ Hc > 0 else float("nan")
    if not (numpy.isfinite(t) and t > 0):
        t = 1.0
    return t


def _follow_path(barrier, c, y, opts, stop):
    """
    Primal barrier path following: centre, ask `stop`, multiply t.

    stop(y, objective, gap) returns a Status to terminate or None. gap is
    the certified distance to the dual bound of the Newton-corrected dual
    point at y, inf when that point is not dual feasible (the iterate is
    too far from the central path).
    """
    chols = barrier.factor(y)
    if chols is None:
        raise SolverError("starting point is not strictly feasible")
    t = _initial_t(barrier, c, chols)
    history = []
    newton = 0
    gap, residual = numpy.inf, numpy.full(c.shape, numpy.nan)

    for outer in range(1, opts.max_outer + 1):
        y, chols, steps, state = _center(barrier, c, y, chols, t, opts)
        newton += steps
        if state == "failed":
            logger.warning("Newton system broke down at t = %.3e", t)
            return _PathResult(y, chols, t, Status.NUMERICAL_FAILURE, newton, outer, tuple(history), gap, residual)
        if state != "centered":
            logger.debug("centering %s at t = %.3e after %d steps", state, t, steps)

        objective = float(c @ y)
        if history and objective < history[-1] - 1e-9 * abs(history[-1]):
            logger.warning("objective decreased along the path: %.12g -> %.12g", history[-1], objective)
        history.append(objective)
        gphi, hess = barrier.derivatives(chols)
        gap, residual = barrier.dual(chols, c, t, _newton_direction(hess, gphi - t * c))
        logger.debug("outer %d: t = %.3e, objective = %.12g, gap = %.3e, newton = %d",
                     outer, t, objective, gap, steps)

        verdict = stop(y, objective, gap)
        if verdict is not None:
            return _PathResult(y, chols, t, verdict, newton, outer, tuple(history), gap, residual)
        t *= opts.barrier_factor

    return _PathResult(y, chols, t, Status.MAX_ITERATIONS, newton, opts.max_outer, tuple(history), gap, residual)


def _min_eigs(consts, coeffs, y):
    return [numpy.linalg.eigvalsh(C + numpy.tensordot(y, A, axes=1))[0] for C, A in zip(consts, coeffs)]


def _initial_point(p, consts, coeffs):
    """
    Phase-1 start: mu = 2 mu_min and all diagonal certificate entries equal
    to alpha, with alpha from a logarithmic scan maximising the worst block
    eigenvalue.
    """
    x = numpy.zeros(p.nvars)
    if p.mu_index is not None:
        x[p.mu_index] = 2 * p.mu_min
    if not p.diag_vars:
        return x

    diag = list(p.diag_vars)
    best_alpha, best_worst = None, -numpy.inf
    for alpha in numpy.logspace(-8, 2, 41):
        x[diag] = alpha
        worst = min(_min_eigs(consts, coeffs, x / p.var_scale))
        if worst > best_worst:
            best_alpha, best_worst = alpha, worst
    x[diag] = best_alpha
    logger.debug("phase 1 start alpha = %.3e (worst scaled eigenvalue %.3e)", best_alpha, best_worst)
    return x


def phase1(p, opts=None, margin=None, center=True):
    """
    Searches a point whose scaled blocks all have eigenvalues >= margin by
    minimising a common shift s with blocks F_j + s I.

    Args:
        p: SdpProblem
        opts: SolverOptions
        margin: required scaled margin (default opts.strict_margin)
        center: keep following the path until the margin is within a
                factor 1.5 of the best attainable one

    Returns:
        Phase1Result(x, slack, feasible, status, iterations); feasible is
        False when the lower bound on the optimal shift exceeds -margin
    """
    opts = opts or SolverOptions()
    margin = opts.strict_margin if margin is None else margin
    consts, coeffs = _scaled_data(p)
    x0 = _initial_point(p, consts, coeffs)
    y0 = x0 / p.var_scale

    worst = min(_min_eigs(consts, coeffs, y0))
    if worst >= margin and not center:
        return Phase1Result(x0, -worst, True, Status.OPTIMAL, 0)

    shifted = [numpy.concatenate([A, numpy.eye(C.shape[0])[None]]) for C, A in zip(consts, coeffs)]
    barrier = _Barrier(consts, shifted)
    c = numpy.zeros(p.nvars + 1)
    c[-1] = -1.0
    z0 = numpy.append(y0, max(0.0, -worst) + 1.0)

    def stop(z, objective, gap):
        s = z[-1]
        if s < -margin and (not center or gap <= -s / 2):
            return Status.OPTIMAL
        if s - gap >= -margin:
            return Status.INFEASIBLE
        return None

    path = _follow_path(barrier, c, z0, opts, stop)
    x = path.y[:-1] * p.var_scale
    slack = float(path.y[-1])
    feasible = path.status is Status.OPTIMAL
    if path.status is Status.INFEASIBLE:
        logger.info("phase 1: no strictly feasible point (shift >= %.3e)", slack - path.gap)
    else:
        logger.debug("phase 1 %s: shift %.3e after %d Newton steps", path.status.value, slack, path.newton)
    return Phase1Result(x, slack, feasible, path.status, path.newton)


def solve(p, opts=None):
    """
    Maximises the objective of p by phase 1 followed by barrier path
    following.

    Returns:
        SdpSolution; status Optimal means relative gap <= gap_tol and every
        block eigenvalue >= -feas_tol * largest block norm
    """
    opts = opts or SolverOptions()
    names = tuple(b.name for b in p.blocks)
    start = phase1(p, opts)
    if not start.feasible:
        return SdpSolution(
            x=start.x, objective=float(p.objective @ start.x), status=start.status,
            iterations=start.iterations, gap=float("inf"), block_names=names,
            block_min_eigs=tuple(float(numpy.linalg.eigvalsh(b.value(start.x))[0]) for b in p.blocks),
        )

    consts, coeffs = _scaled_data(p)
    barrier = _Barrier(consts, coeffs)
    c = p.objective * p.var_scale

    def stop(y, objective, gap):
        if gap <= opts.gap_tol * max(abs(objective), _TINY):
            return Status.OPTIMAL
        return None

    path = _follow_path(barrier, c, start.x / p.var_scale, opts, stop)
    x = path.y * p.var_scale
    objective = float(p.objective @ x)
    dual_bound = objective + path.gap
    gap = path.gap / max(abs(objective), _TINY)

    values = [b.value(x) for b in p.blocks]
    min_eigs = tuple(float(numpy.linalg.eigvalsh(V)[0]) for V in values)
    largest = max(numpy.linalg.norm(V, 2) for V in values)
    status = path.status
    if status is Status.OPTIMAL and min(min_eigs) < -opts.feas_tol * largest:
        logger.warning("block eigenvalue %.3e below feasibility tolerance", min(min_eigs))
        status = Status.NUMERICAL_FAILURE

    logger.info("solve %s: objective %.12g, gap %.3e, %d outer / %d Newton steps",
                status.value, objective, gap, path.outer, start.iterations + path.newton)
    return SdpSolution(
        x=x,
        objective=objective,
        status=status,
        iterations=start.iterations + path.newton,
        gap=gap,
        outer_iterations=path.outer,
        history=path.history,
        dual_bound=float(dual_bound),
        dual_residual=float(numpy.linalg.norm(path.residual) / max(numpy.linalg.norm(c), _TINY)),
        block_min_eigs=min_eigs,
        block_names=names,
    )


def bisect_mu(p, opts=None):
    """
    Brackets the optimal mu by bisection, each step a phase-1 feasibility
    test with mu frozen. Independent of the path-following solver.

    Returns:
        Bracket(lo, hi, phase1_solves): lo certified strictly feasible,
        hi not
    """
    opts = opts or SolverOptions()
    if p.mu_index is None:
        raise ModelError("problem has no mu variable")
    solves = [0]

    def feasible(mu):
        solves[0] += 1
        result = phase1(fix_variable(p, p.mu_index, mu), opts, margin=0.0, center=False)
        logger.debug("bisection: mu = %.12g %s", mu, "feasible" if result.feasible else "infeasible")
        return result.feasible

    lo = 2 * p.mu_min if p.mu_min > 0 else 1e-12
    if not feasible(lo):
        raise InfeasibleError("no strictly feasible point at mu = %.3e" % lo)
    hi = 10 * lo
    while feasible(hi):
        lo, hi = hi, 10 * hi
        if hi > 1e30:
            raise SolverError("mu is unbounded")
    while hi / lo - 1 > opts.bisect_rtol:
        mid = numpy.sqrt(lo * hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    logger.info("bisection bracket [%.12g, %.12g] after %d phase-1 solves", lo, hi, solves[0])
    return Bracket(lo, hi, solves[0])
