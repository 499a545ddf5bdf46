import dataclasses, logging
import numpy, scipy.linalg

from pidlmi.utils.errors import ConfigError, ModelError

logger = logging.getLogger(__name__)

# classes for storage of plant, reference and weighting parameters


@dataclasses.dataclass(frozen=True)
class SecondOrderPlant:
    """
    Lumped single-axis plant m*y'' + d*y' = u.
    """
    m: float
    d: float

    def __post_init__(self):
        if not self.m > 0:
            raise ModelError("mass must be > 0 (got %r)" % self.m)
        if not self.d >= 0:
            raise ModelError("damping must be >= 0 (got %r)" % self.d)


@dataclasses.dataclass(frozen=True)
class UncertaintyBox:
    """
    Fractional perturbation bounds dm/m in [dm_lo, dm_hi], dd/d in [dd_lo, dd_hi].
    """
    dm_lo: float = -0.3
    dm_hi: float = 0.3
    dd_lo: float = -0.3
    dd_hi: float = 0.3

    def __post_init__(self):
        if self.dm_lo > self.dm_hi:
            raise ConfigError("[uncertainty] dm-lo: must not exceed dm-hi")
        if self.dd_lo > self.dd_hi:
            raise ConfigError("[uncertainty] dd-lo: must not exceed dd-hi")
        if not 1 + self.dm_lo > 0:
            raise ConfigError("[uncertainty] dm-lo: perturbed mass must stay positive (got %r)" % self.dm_lo)

    def corners(self):
        """
        Returns the four (dm, dd) fractions in the fixed order
        (lo,lo), (lo,hi), (hi,lo), (hi,hi).
        """
        return [(self.dm_lo, self.dd_lo), (self.dm_lo, self.dd_hi),
                (self.dm_hi, self.dd_lo), (self.dm_hi, self.dd_hi)]

    def lattice(self, n):
        """
        Returns n*n (dm, dd) fractions, dm varying slowest.
        """
        if n < 2:
            raise ConfigError("grid size must be >= 2 (got %r)" % n)
        dms = numpy.linspace(self.dm_lo, self.dm_hi, n)
        dds = numpy.linspace(self.dd_lo, self.dd_hi, n)
        return [(float(a), float(b)) for a in dms for b in dds]


@dataclasses.dataclass(frozen=True)
class SCurveSpec:
    """
    Companion-form reference generator r''' = z1*p + z2*p' + z3*p''.
    rho0 is the initial state [p, p', p''] (m, m/s, m/s^2), offset shifts
    the position output only.
    """
    z1: float = -125.0
    z2: float = -75.0
    z3: float = -15.0
    rho0: tuple = (-2e-5, 0.0, 0.0)
    offset: float = 2e-5

    def __post_init__(self):
        object.__setattr__(self, "rho0", tuple(float(v) for v in self.rho0))
        if len(self.rho0) != 3:
            raise ConfigError("[scurve] rho0: three entries expected (got %d)" % len(self.rho0))
        A_z, _ = scurve_matrices(self)
        abscissa = numpy.max(numpy.linalg.eigvals(A_z).real)
        if not abscissa < 0:
            raise ConfigError(
                "[scurve] z1, z2, z3: companion matrix is not Hurwitz (spectral abscissa %.6g)" % abscissa
            )


@dataclasses.dataclass(frozen=True)
class WeightSpec:
    """
    Output weights q1, q2, q3 on e, e', e'' and r on the fictitious input.
    """
    q1: float = 1e4
    q2: float = 1e2
    q3: float = 0.0
    r: float = 1.0

    def __post_init__(self):
        for name in ("q1", "q2", "q3"):
            if not getattr(self, name) >= 0:
                raise ConfigError("[weights] %s: must be >= 0 (got %r)" % (name, getattr(self, name)))
        if not self.r > 0:
            raise ConfigError("[weights] r: must be > 0 (got %r)" % self.r)


@dataclasses.dataclass(frozen=True, eq=False)
class AugmentedSystem:
    """
    Tracking system x' = A x + B2 u_fb' + B1 w, z = C x + D u_fb'
    with x = [p, p', p'', e, e', e''].
    """
    A: numpy.ndarray
    B1: numpy.ndarray
    B2: numpy.ndarray
    C: numpy.ndarray
    D: numpy.ndarray


# reference generator


def scurve_matrices(spec):
    """
    Companion matrix and output row of the reference generator.

    Returns:
        A_z (3x3), C_z (1x3)
    """
    A_z = numpy.array([
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [spec.z1, spec.z2, spec.z3],
    ])
    C_z = numpy.array([[1.0, 0.0, 0.0]])
    return A_z, C_z


def reference_trajectory(spec, t_grid):
    """
    Samples the S-curve reference on a time grid. The state is propagated
    with the matrix exponential of A_z over each grid step, so samples are
    exact regardless of spacing.

    Args:
        spec: SCurveSpec
        t_grid: strictly ascending sample times starting at 0

    Returns:
        array (n, 4) with columns r, r', r'', r'''

    Example:
        >>> reference_trajectory(SCurveSpec(), [0.0])[0, 0]
        0.0
    """
    t_grid = numpy.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ModelError("empty time grid")
    if t_grid[0] != 0:
        raise ModelError("time grid must start at 0 (got %r)" % t_grid[0])
    steps = numpy.diff(t_grid)
    if numpy.any(steps <= 0):
        raise ModelError("time grid must be strictly ascending")

    A_z, _ = scurve_matrices(spec)
    transitions = {}
    out = numpy.empty((t_grid.size, 4))
    p, v, a = spec.rho0
    out[0] = (p, v, a, spec.z1 * p + spec.z2 * v + spec.z3 * a)

    for i, h in enumerate(steps, 1):
        # steps of a uniform grid differ in the last bits
        key = float("%.12g" % h)
        phi = transitions.get(key)
        if phi is None:
            phi = scipy.linalg.expm(A_z * key).tolist()
            transitions[key] = phi
        p, v, a = (phi[0][0] * p + phi[0][1] * v + phi[0][2] * a,
                   phi[1][0] * p + phi[1][1] * v + phi[1][2] * a,
                   phi[2][0] * p + phi[2][1] * v + phi[2][2] * a)
        out[i] = (p, v, a, spec.z1 * p + spec.z2 * v + spec.z3 * a)

    out[:, 0] += spec.offset
    return out


# plant and feedforward


def feedforward(plant, rdot, rddot):
    """
    Nominal-model feedforward u_ff = m*r'' + d*r'.
    """
    return plant.m * rddot + plant.d * rdot


def perturbed(plant, dm_frac, dd_frac):
    """
    Plant with mass and damping scaled by (1 + dm_frac), (1 + dd_frac).
    """
    if not 1 + dm_frac > 0:
        raise ModelError("perturbed mass must stay positive (dm_frac = %r)" % dm_frac)
    return SecondOrderPlant(plant.m * (1 + dm_frac), plant.d * (1 + dd_frac))


def build_augmented(nominal, dm, dd, spec, weights):
    """
    Augmented tracking system for absolute perturbations dm, dd of the
    nominal plant, with the nominal feedforward in the loop.

    Args:
        nominal: SecondOrderPlant
        dm, dd: absolute mass and damping perturbations
        spec: SCurveSpec
        weights: WeightSpec

    Returns:
        AugmentedSystem
    """
    mass = nominal.m + dm
    if not mass > 0:
        raise ModelError("perturbed mass must stay positive (m + dm = %r)" % mass)

    A = numpy.zeros((6, 6))
    A[0, 1] = A[1, 2] = 1.0
    A[2, :3] = (spec.z1, spec.z2, spec.z3)
    A[3, 4] = A[4, 5] = 1.0
    A[5, 0] = spec.z1 * dm / mass
    A[5, 1] = spec.z2 * dm / mass
    A[5, 2] = (spec.z3 * dm + dd) / mass
    A[5, 5] = -(nominal.d + dd) / mass

    B2 = numpy.zeros((6, 1))
    B2[5, 0] = -1.0 / mass

    C = numpy.zeros((4, 6))
    C[0, 3] = weights.q1
    C[1, 4] = weights.q2
    C[2, 5] = weights.q3
    D = numpy.zeros((4, 1))
    D[3, 0] = weights.r

    return AugmentedSystem(A=A, B1=numpy.eye(6), B2=B2, C=C, D=D)


def polytope_vertices(nominal, box, spec, weights):
    """
    Augmented systems at the four corners of the uncertainty box, in the
    order of UncertaintyBox.corners().
    """
    return [build_augmented(nominal, dm * nominal.m, dd * nominal.d, spec, weights)
            for dm, dd in box.corners()]


# force allocation of the planar stage


def allocation_matrix(L):
    """
    Maps the local forces [F1x, F1z, F2y, F2z, F3x, F3z, F4y, F4z] to the
    wrench [Fx, Fy, Fz, Tx, Ty, Tz].
    """
    if not L > 0:
        raise ModelError("arm length must be > 0 (got %r)" % L)
    return numpy.array([
        [0, 0, 1, 0, 0, 0, 1, 0],
        [1, 0, 0, 0, 1, 0, 0, 0],
        [0, 1, 0, 1, 0, 1, 0, 1],
        [0, 0, 0, -L, 0, 0, 0, L],
        [0, -L, 0, 0, 0, L, 0, 0],
        [L, 0, -L, 0, -L, 0, L, 0],
    ], dtype=float)


def compose_wrench(F_l, L):
    return allocation_matrix(L) @ numpy.asarray(F_l, dtype=float)


def allocate_forces(F_g, L):
    """
    Minimum-norm local forces producing the wrench F_g, i.e.
    F_l = M^T (M M^T)^-1 F_g. M has full row rank for L > 0, so this is
    the pseudo-inverse solution.
    """
    M = allocation_matrix(L)
    try:
        factor = scipy.linalg.cho_factor(M @ M.T)
    except numpy.linalg.LinAlgError:
        raise ModelError("allocation matrix is rank deficient for L = %r" % L)
    return M.T @ scipy.linalg.cho_solve(factor, numpy.asarray(F_g, dtype=float))
