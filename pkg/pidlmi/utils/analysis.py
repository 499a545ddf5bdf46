import collections, dataclasses, logging, math
import numpy, scipy.linalg, scipy.optimize

from pidlmi.utils.errors import CertificateError, NormMismatchError, StabilityError
from pidlmi.utils.lmi import extract_gain, schur_lmi, build_fqr, sparsity_residual, theta
from pidlmi.utils.model import build_augmented

logger = logging.getLogger(__name__)

# frequency grid of the coarse sweep (rad/s)
SWEEP_POINTS = numpy.logspace(-3, 6, 400)
# eigenvalues with |Re| below this fraction of the balanced Hamiltonian norm count as imaginary
IMAG_RTOL = 1e-8
# slack for checks of certificates printed to three significant figures
TOL_PRINT = 1e-2

SweepPoint = collections.namedtuple("SweepPoint", ["dm", "dd", "stable", "abscissa", "hinf"])


@dataclasses.dataclass(frozen=True, eq=False)
class ClosedLoop:
    """
    w -> z closed loop of an augmented system under u_fb' = -k x.
    """
    Acl: numpy.ndarray
    B1: numpy.ndarray
    Ccl: numpy.ndarray


@dataclasses.dataclass(frozen=True)
class CertificateReport:
    psd_ok: bool
    psd_margin: float
    sparsity_ok: bool
    sparsity_residual: float
    theta1_max: tuple
    schur_min: tuple
    schur_ok: tuple
    gain: object
    abscissas: tuple
    hinf: tuple
    hinf_ok: tuple
    gamma: float
    failures: tuple = ()

    @property
    def passed(self):
        return not self.failures


@dataclasses.dataclass(frozen=True)
class SweepResult:
    points: tuple
    all_stable: bool
    max_hinf: float
    max_vertex_hinf: float

    @property
    def vertex_bound_ok(self):
        return self.max_hinf <= self.max_vertex_hinf * (1 + 1e-9)


def closed_loop(aug, k):
    row = numpy.asarray(k.row if hasattr(k, "row") else k, dtype=float).reshape(1, -1)
    if row.shape[1] != aug.A.shape[0]:
        raise ValueError("gain has %d entries, system has %d states" % (row.shape[1], aug.A.shape[0]))
    return ClosedLoop(Acl=aug.A - aug.B2 @ row, B1=aug.B1, Ccl=aug.C - aug.D @ row)


def spectral_abscissa(Acl):
    """
    Largest real part of the eigenvalues; the system is stable iff < 0.

    Example:
        >>> spectral_abscissa(numpy.diag([-1.0, -2.0]))
        -1.0
    """
    Acl = numpy.asarray(Acl, dtype=float)
    if Acl.ndim != 2 or Acl.shape[0] != Acl.shape[1]:
        raise ValueError("square matrix expected (got shape %s)" % (Acl.shape,))
    return float(numpy.max(numpy.linalg.eigvals(Acl).real))


def sigma_max(cl, omega):
    """
    Largest singular value of Ccl (j omega I - Acl)^-1 B1.
    """
    n = cl.Acl.shape[0]
    try:
        X = scipy.linalg.solve(1j * omega * numpy.eye(n) - cl.Acl, cl.B1.astype(complex))
    except numpy.linalg.LinAlgError:
        return math.inf
    return float(numpy.linalg.svd(cl.Ccl @ X, compute_uv=False)[0])


def _sweep_norm(cl):
    """
    Peak gain over the logarithmic grid and omega = 0, each local maximum
    of the grid refined by golden-section search in log frequency.
    """
    best_omega, best = 0.0, sigma_max(cl, 0.0)
    logs = numpy.log10(SWEEP_POINTS)
    values = numpy.array([sigma_max(cl, w) for w in SWEEP_POINTS])
    peaks = [i for i in range(1, len(values) - 1) if values[i] >= values[i - 1] and values[i] >= values[i + 1]]
    if values[-1] > values[-2]:
        peaks.append(len(values) - 1)

    for i in sorted(peaks, key=lambda i: -values[i])[:3]:
        if values[i] > best:
            best_omega, best = SWEEP_POINTS[i], values[i]
        if 0 < i < len(values) - 1 and values[i] > max(values[i - 1], values[i + 1]):
            refined = scipy.optimize.minimize_scalar(
                lambda x: -sigma_max(cl, 10.0 ** x),
                bracket=(logs[i - 1], logs[i], logs[i + 1]),
                method="golden",
                options={"xtol": 1e-10},
            )
            if -refined.fun > best:
                best_omega, best = 10.0 ** refined.x, -refined.fun
    return best, best_omega


def _has_imaginary_eigenvalue(cl, gamma):
    n = cl.Acl.shape[0]
    H = numpy.empty((2 * n, 2 * n))
    H[:n, :n] = cl.Acl
    H[:n, n:] = cl.B1 @ cl.B1.T / gamma ** 2
    H[n:, :n] = -cl.Ccl.T @ cl.Ccl
    H[n:, n:] = -cl.Acl.T
    # diagonal similarity; the raw norm is dominated by C^T C
    H, _ = scipy.linalg.matrix_balance(H, permute=False)
    evals = numpy.linalg.eigvals(H)
    return bool(numpy.any(numpy.abs(evals.real) <= IMAG_RTOL * numpy.linalg.norm(H, 2)))


def hinf_norm(cl, tol=1e-6, return_both=False):
    """
    H-infinity norm of a stable closed loop, computed by a frequency sweep
    and by gamma bisection on the Hamiltonian matrix.

    Args:
        cl: ClosedLoop with Hurwitz Acl
        tol: relative bisection tolerance; both methods must agree to 10*tol
        return_both: also return the sweep value and its peak frequency

    Returns:
        bisection value (or (bisection, sweep, omega_peak))
    """
    abscissa = spectral_abscissa(cl.Acl)
    if not abscissa < 0:
        raise StabilityError("closed loop is not Hurwitz (spectral abscissa %.6g)" % abscissa)

    sweep, omega = _sweep_norm(cl)
    if not math.isfinite(sweep):
        raise StabilityError("closed loop has a pole on the imaginary axis")
    if sweep == 0:
        return (0.0, 0.0, omega) if return_both else 0.0

    lo, hi = sweep, sweep * (1 + 2 * tol)
    while _has_imaginary_eigenvalue(cl, hi):
        lo, hi = hi, 2 * hi
    while hi - lo > tol * lo:
        mid = 0.5 * (lo + hi)
        if _has_imaginary_eigenvalue(cl, mid):
            lo = mid
        else:
            hi = mid
    bisection = 0.5 * (lo + hi)

    if abs(bisection - sweep) > 10 * tol * bisection:
        raise NormMismatchError(sweep, bisection)
    logger.debug("H-infinity norm %.12g (sweep %.12g at %.6g rad/s)", bisection, sweep, omega)
    return (bisection, sweep, omega) if return_both else bisection


def riccati_residual(aug, k, P, gamma, scaled=False):
    """
    Largest eigenvalue of
    Acl^T P + P Acl + gamma^-2 P B1 B1^T P + Ccl^T Ccl.

    With scaled=True the value is divided by the largest spectral norm of
    the three terms.
    """
    P = numpy.asarray(P, dtype=float)
    if numpy.max(numpy.abs(P - P.T), initial=0.0) > 1e-12 * numpy.max(numpy.abs(P), initial=0.0):
        raise CertificateError("P is not symmetric")
    cl = closed_loop(aug, k)
    lyapunov = cl.Acl.T @ P + P @ cl.Acl
    coupling = P @ cl.B1 @ cl.B1.T @ P / gamma ** 2
    output = cl.Ccl.T @ cl.Ccl
    residual = lyapunov + coupling + output
    value = float(numpy.linalg.eigvalsh(0.5 * (residual + residual.T))[-1])
    if scaled:
        scale = max(numpy.linalg.norm(M, 2) for M in (lyapunov, coupling, output))
        if scale > 0:
            value /= scale
    return value


def validate_certificate(cert, vertices, tol=1e-10, hinf_slack=1e-3, hinf_tol=1e-6):
    """
    Checks membership of (W, mu) in the robust sparse certificate set.
    Failures are collected in the report, never raised.

    Args:
        cert: Certificate
        vertices: augmented vertex systems
        tol: eigenvalue slack relative to the spectral norm of each block
        hinf_slack: relative slack of the per-vertex bound ||H||_inf <= gamma
        hinf_tol: tolerance passed to hinf_norm

    Returns:
        CertificateReport
    """
    failures = []
    W = cert.matrix
    W_norm = numpy.linalg.norm(W, 2)

    psd_margin = float(numpy.linalg.eigvalsh(W)[0])
    W1_min = float(numpy.linalg.eigvalsh(cert.W1)[0])
    psd_ok = psd_margin >= -tol * W_norm and W1_min > 0
    if not psd_ok:
        failures.append("W is not PSD with W1 > 0 (min eigenvalues %.3e, %.3e)" % (psd_margin, W1_min))

    residual = float(numpy.linalg.norm(sparsity_residual(cert)))
    sparsity_ok = residual <= tol * W_norm
    if not sparsity_ok:
        failures.append("sparsity residual %.3e" % residual)

    theta1_max, schur_min, schur_ok = [], [], []
    for i, aug in enumerate(vertices, 1):
        lifted = build_fqr(aug)
        theta1_max.append(float(numpy.linalg.eigvalsh(theta(cert, lifted).theta1)[-1]))
        S = schur_lmi(cert, lifted)
        schur_min.append(float(numpy.linalg.eigvalsh(S)[0]))
        schur_ok.append(schur_min[-1] >= -tol * numpy.linalg.norm(S, 2))
        if not schur_ok[-1]:
            failures.append("vertex %d: LMI violated (min eigenvalue %.3e)" % (i, schur_min[-1]))

    gamma = cert.gamma if cert.mu > 0 else math.inf
    try:
        gain = extract_gain(cert)
    except CertificateError as e:
        gain = None
        failures.append("gain extraction failed: %s" % e)

    abscissas, norms, hinf_ok = [], [], []
    if gain is not None:
        for i, aug in enumerate(vertices, 1):
            abscissa, norm = closed_loop_metrics(aug, gain, hinf_tol)
            abscissas.append(abscissa)
            norms.append(norm)
            hinf_ok.append(norm <= gamma * (1 + hinf_slack))
            if not abscissa < 0:
                failures.append("vertex %d: unstable (spectral abscissa %.6g)" % (i, abscissa))
            elif math.isnan(norm):
                failures.append("vertex %d: H-infinity methods disagree" % i)
            elif not hinf_ok[-1]:
                failures.append("vertex %d: H-infinity norm %.9g exceeds gamma %.9g" % (i, norm, gamma))

    report = CertificateReport(
        psd_ok=psd_ok,
        psd_margin=psd_margin,
        sparsity_ok=sparsity_ok,
        sparsity_residual=residual,
        theta1_max=tuple(theta1_max),
        schur_min=tuple(schur_min),
        schur_ok=tuple(schur_ok),
        gain=gain,
        abscissas=tuple(abscissas),
        hinf=tuple(norms),
        hinf_ok=tuple(hinf_ok),
        gamma=gamma,
        failures=tuple(failures),
    )
    for failure in failures:
        logger.info("certificate check failed: %s", failure)
    return report


def closed_loop_metrics(aug, k, tol=1e-6):
    """
    Returns (spectral abscissa, H-infinity norm); the norm is inf for an
    unstable loop and nan when the two norm computations disagree.
    """
    cl = closed_loop(aug, k)
    abscissa = spectral_abscissa(cl.Acl)
    norm = math.inf
    if abscissa < 0:
        try:
            norm = hinf_norm(cl, tol)
        except StabilityError as e:
            logger.info("%s", e)
        except NormMismatchError as e:
            logger.warning("%s", e)
            norm = math.nan
    return abscissa, norm


def uncertainty_sweep(nominal, box, k, grid_n, spec, weights, tol=1e-6):
    """
    Stability and H-infinity norm on a grid_n x grid_n lattice over the
    uncertainty box (fractions of m and d, dm varying slowest).

    Returns:
        SweepResult; max_hinf is taken over the whole lattice, including
        the corners, and is nan if any point has an unverified norm
    """
    points = []
    for dm, dd in box.lattice(grid_n):
        aug = build_augmented(nominal, dm * nominal.m, dd * nominal.d, spec, weights)
        abscissa, norm = closed_loop_metrics(aug, k, tol)
        points.append(SweepPoint(dm, dd, abscissa < 0, abscissa, norm))

    corners = set(box.corners())
    vertex_norms = [p.hinf for p in points if (p.dm, p.dd) in corners]
    result = SweepResult(
        points=tuple(points),
        all_stable=all(p.stable for p in points),
        max_hinf=float(numpy.max([p.hinf for p in points])),
        max_vertex_hinf=float(numpy.max(vertex_norms)),
    )
    logger.info("sweep of %d points: all stable %s, max norm %.9g, max vertex norm %.9g",
                len(points), result.all_stable, result.max_hinf, result.max_vertex_hinf)
    return result
