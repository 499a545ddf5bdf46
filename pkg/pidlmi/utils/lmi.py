import collections, dataclasses
import numpy, scipy.linalg

from pidlmi.utils.errors import CertificateError

# index sets of the partitioned certificate
REFERENCE = slice(0, 3)
ERROR = slice(3, 6)

ThetaBlocks = collections.namedtuple("ThetaBlocks", ["theta1", "theta2", "theta3"])
PidGains = collections.namedtuple("PidGains", ["kp", "ki", "kd"])


@dataclasses.dataclass(frozen=True, eq=False)
class LiftedData:
    """
    Lifted open-loop data F, G, Q, R of one (vertex) system and the
    symmetric square root of R. G is kept for completeness; no constraint
    uses it.
    """
    F: numpy.ndarray
    G: numpy.ndarray
    Q: numpy.ndarray
    R: numpy.ndarray
    Rhalf: numpy.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class Certificate:
    """
    Partitioned certificate W = [[W1, W2], [W2^T, W3]] and mu = 1/gamma^2.
    """
    W1: numpy.ndarray
    W2: numpy.ndarray
    W3: float
    mu: float

    @classmethod
    def from_matrix(cls, W, mu):
        W = numpy.asarray(W, dtype=float)
        if W.shape != (7, 7):
            raise CertificateError("certificate matrix must be 7x7 (got %s)" % (W.shape,))
        return cls(W1=W[:6, :6].copy(), W2=W[:6, 6].copy(), W3=float(W[6, 6]), mu=float(mu))

    @property
    def matrix(self):
        W = numpy.empty((7, 7))
        W[:6, :6] = self.W1
        W[:6, 6] = self.W2
        W[6, :6] = self.W2
        W[6, 6] = self.W3
        return W

    @property
    def gamma(self):
        return 1.0 / numpy.sqrt(self.mu)


@dataclasses.dataclass(frozen=True, eq=False)
class GainVector:
    """
    Fictitious state-feedback gain, u_fb' = -k x.
    """
    k: numpy.ndarray

    def __post_init__(self):
        object.__setattr__(self, "k", numpy.asarray(self.k, dtype=float).reshape(6))

    @property
    def structured(self):
        return not numpy.any(self.k[REFERENCE])

    @property
    def row(self):
        return self.k.reshape(1, 6)


def psd_sqrt(R):
    """
    Symmetric square root of a PSD matrix; eigenvalues below zero
    (rounding) are clamped.
    """
    evals, evecs = numpy.linalg.eigh(R)
    return (evecs * numpy.sqrt(numpy.clip(evals, 0.0, None))) @ evecs.T


def build_fqr(aug):
    """
    Lifted matrices of an augmented system.

    Returns:
        LiftedData with F = [[A, -B2], [0, 0]], G = [0; 1],
        Q = blkdiag(B1 B1^T, 0), R = blkdiag(C^T C, D^T D)
    """
    F = numpy.zeros((7, 7))
    F[:6, :6] = aug.A
    F[:6, 6] = -aug.B2[:, 0]

    G = numpy.zeros((7, 1))
    G[6, 0] = 1.0

    Q = numpy.zeros((7, 7))
    Q[:6, :6] = aug.B1 @ aug.B1.T

    R = numpy.zeros((7, 7))
    R[:6, :6] = aug.C.T @ aug.C
    R[6, 6] = float(aug.D[:, 0] @ aug.D[:, 0])

    return LiftedData(F=F, G=G, Q=Q, R=R, Rhalf=psd_sqrt(R))


def theta_matrix(cert, lifted):
    W = cert.matrix
    return lifted.F @ W + W @ lifted.F.T + W @ lifted.R @ W + cert.mu * lifted.Q


def theta(cert, lifted):
    """
    Partition of Theta(W, mu) = F W + W F^T + W R W + mu Q.
    """
    T = theta_matrix(cert, lifted)
    return ThetaBlocks(theta1=T[:6, :6], theta2=T[:6, 6].copy(), theta3=float(T[6, 6]))


def theta1_expanded(cert, aug):
    """
    Theta_1 written out in the plant matrices, used as a cross-check of
    the block formula.
    """
    W1, W2 = cert.W1, cert.W2.reshape(6, 1)
    A, B1, B2, C, D = aug.A, aug.B1, aug.B2, aug.C, aug.D
    return (A @ W1 - B2 @ W2.T + W1 @ A.T - W2 @ B2.T
            + W1 @ C.T @ C @ W1 + W2 @ D.T @ D @ W2.T + cert.mu * B1 @ B1.T)


def sparsity_residual(cert):
    """
    L(W) = V1 W V2 = [W_12, W_21]; zero iff the extracted gain has the
    PID pattern.
    """
    V1 = numpy.hstack([numpy.eye(3), numpy.zeros((3, 4))])
    V2 = numpy.vstack([numpy.zeros((3, 4)), numpy.eye(4)])
    return V1 @ cert.matrix @ V2


def _equilibrated_solve(S, b):
    """
    Solves S x = b for symmetric positive definite S after symmetric
    diagonal scaling. Raises CertificateError if S is not positive definite.
    """
    diag = numpy.diag(S)
    if numpy.any(diag <= 0):
        raise CertificateError("W1 is not positive definite")
    scale = 1.0 / numpy.sqrt(diag)
    rows = scale.reshape((-1,) + (1,) * (numpy.ndim(b) - 1))
    try:
        factor = scipy.linalg.cho_factor(S * numpy.outer(scale, scale))
    except numpy.linalg.LinAlgError:
        raise CertificateError("W1 is singular or indefinite")
    return rows * scipy.linalg.cho_solve(factor, rows * b)


def extract_gain(cert):
    """
    Gain K = W2^T W1^-1. When L(W) = 0 only the error block is solved, so
    the reference entries are exactly zero.

    Returns:
        GainVector
    """
    W1 = numpy.asarray(cert.W1, dtype=float)
    W2 = numpy.asarray(cert.W2, dtype=float)
    k = numpy.zeros(6)

    if not numpy.any(sparsity_residual(cert)):
        # W1 is block diagonal, so W1 > 0 iff both diagonal blocks are
        _equilibrated_solve(W1[REFERENCE, REFERENCE], numpy.zeros(3))
        k[ERROR] = _equilibrated_solve(W1[ERROR, ERROR], W2[ERROR])
    else:
        k[:] = _equilibrated_solve(W1, W2)

    return GainVector(k)


def to_pid(gain):
    """
    PID gains of a structured gain K = [0, 0, 0, -ki, -kp, -kd].

    Returns:
        PidGains(kp, ki, kd)
    """
    if not gain.structured:
        raise CertificateError("gain has nonzero reference entries, no PID form: %s" % gain.k[REFERENCE])
    return PidGains(kp=-gain.k[4], ki=-gain.k[3], kd=-gain.k[5])


def from_pid(kp, ki, kd):
    return GainVector([0.0, 0.0, 0.0, -ki, -kp, -kd])


def schur_lmi(cert, lifted):
    """
    Linear 13x13 form of Theta_1 <= 0:

        [[-V F W V^T - V W F^T V^T - mu V Q V^T,  V W R^(1/2)],
         [R^(1/2) W V^T,                          I_7        ]]  >= 0

    with V = [I_6 0].
    """
    W = cert.matrix
    V = numpy.hstack([numpy.eye(6), numpy.zeros((6, 1))])
    VFW = V @ lifted.F @ W @ V.T
    S = numpy.empty((13, 13))
    S[:6, :6] = -VFW - VFW.T - cert.mu * (V @ lifted.Q @ V.T)
    S[:6, 6:] = V @ W @ lifted.Rhalf
    S[6:, :6] = S[:6, 6:].T
    S[6:, 6:] = numpy.eye(7)
    return S


def lyapunov_matrix(cert):
    """
    P = W1^-1, computed from the equilibrated factorisation of W1.
    """
    P = _equilibrated_solve(numpy.asarray(cert.W1, dtype=float), numpy.eye(6))
    return 0.5 * (P + P.T)
