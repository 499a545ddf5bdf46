import collections, dataclasses, enum, logging, math
import numpy, scipy.signal

from pidlmi.utils.errors import ConfigError, DivergenceError, SimulationError
from pidlmi.utils.model import feedforward, perturbed, reference_trajectory

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("t", "r", "y", "e", "edot", "u_ff", "u_fb", "udot_fb", "w")

RmsSummary = collections.namedtuple("RmsSummary", ["rms_e", "rms_edot", "rms_udotfb"])


class ControllerMode(enum.Enum):
    CONTINUOUS = "Continuous"
    SAMPLED = "Sampled"


@dataclasses.dataclass(frozen=True)
class SimConfig:
    """
    Simulation scenario. true_dm and true_dd are fractional perturbations
    of the simulated plant; the controller always uses the nominal model
    for its feedforward.
    """
    duration: float = 3.0
    dt: float = 1e-5
    true_dm: float = 0.0
    true_dd: float = 0.0
    force_noise_amp: float = 0.0
    seed: int = 0
    controller_mode: ControllerMode = ControllerMode.CONTINUOUS
    sample_hz: float = 2500.0
    deriv_filter_pole: float = 100.0
    integral0: float = 0.0
    feedforward: bool = True

    def __post_init__(self):
        object.__setattr__(self, "controller_mode", ControllerMode(self.controller_mode))
        if not self.dt > 0:
            raise ConfigError("[sim] dt: must be > 0 (got %r)" % self.dt)
        if not self.duration >= self.dt:
            raise ConfigError("[sim] duration: must be >= dt (got %r)" % self.duration)
        if not self.force_noise_amp >= 0:
            raise ConfigError("[sim] force-noise-amp: must be >= 0 (got %r)" % self.force_noise_amp)
        if not self.sample_hz > 0:
            raise ConfigError("[sim] sample-hz: must be > 0 (got %r)" % self.sample_hz)
        if not self.deriv_filter_pole > 0:
            raise ConfigError("[sim] deriv-filter-pole: must be > 0 (got %r)" % self.deriv_filter_pole)
        if not 1 + self.true_dm > 0:
            raise ConfigError("[sim] true-dm: perturbed mass must stay positive (got %r)" % self.true_dm)


@dataclasses.dataclass(frozen=True, eq=False)
class Trace:
    t: numpy.ndarray
    r: numpy.ndarray
    y: numpy.ndarray
    e: numpy.ndarray
    edot: numpy.ndarray
    u_ff: numpy.ndarray
    u_fb: numpy.ndarray
    udot_fb: numpy.ndarray
    w: numpy.ndarray

    def as_array(self):
        return numpy.column_stack([getattr(self, name) for name in TRACE_COLUMNS])

    @property
    def dt(self):
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0


def _ticks(cfg):
    """
    Number of integration steps per controller tick; exact in sampled mode.
    """
    per_tick = 1.0 / (cfg.sample_hz * cfg.dt)
    steps = max(1, int(round(per_tick)))
    if cfg.controller_mode is ControllerMode.SAMPLED:
        if cfg.dt > 1.0 / (10 * cfg.sample_hz):
            raise SimulationError("dt = %g s does not resolve the %g Hz hold (need dt <= %g s)"
                                  % (cfg.dt, cfg.sample_hz, 1.0 / (10 * cfg.sample_hz)))
        if abs(steps - per_tick) > 1e-9 * per_tick:
            raise SimulationError("controller period is not a multiple of dt (%.12g steps per tick)" % per_tick)
    return steps


def simulate(nominal, cfg, spec, pid):
    """
    Integrates the perturbed plant (m+dm) y'' = u + w - (d+dd) y' under
    nominal feedforward plus PID feedback with classical fixed-step RK4.

    Args:
        nominal: SecondOrderPlant the controller was designed for
        cfg: SimConfig
        spec: SCurveSpec
        pid: (kp, ki, kd)

    Returns:
        Trace sampled at every integration step
    """
    kp, ki, kd = (float(v) for v in pid)
    true = perturbed(nominal, cfg.true_dm, cfg.true_dd)
    m_t, d_t = true.m, true.d
    dt = cfg.dt
    n = int(round(cfg.duration / dt))
    per_tick = _ticks(cfg)
    sampled = cfg.controller_mode is ControllerMode.SAMPLED

    # reference on the half-step grid used by the RK4 stages
    ref = reference_trajectory(spec, numpy.arange(2 * n + 1) * (0.5 * dt)).tolist()
    if cfg.feedforward:
        uff = [feedforward(nominal, row[1], row[2]) for row in ref]
    else:
        uff = [0.0] * len(ref)

    n_ticks = n // per_tick + 1
    rng = numpy.random.default_rng(cfg.seed)
    if cfg.force_noise_amp > 0:
        noise = rng.uniform(-cfg.force_noise_amp, cfg.force_noise_amp, n_ticks).tolist()
    else:
        noise = [0.0] * n_ticks

    if sampled:
        Ts = 1.0 / cfg.sample_hz
        b, a = scipy.signal.bilinear([cfg.deriv_filter_pole, 0.0], [1.0, cfg.deriv_filter_pole], fs=cfg.sample_hz)
        b0, b1, a1 = b[0] / a[0], b[1] / a[0], a[1] / a[0]
        e_prev = d_prev = None
        integral = cfg.integral0
        # output before the first tick, with zero error and the initial integrator
        held = ki * integral
        held_rate = 0.0

    out = numpy.empty((n + 1, len(TRACE_COLUMNS)))
    y = v = 0.0
    I = cfg.integral0

    for i in range(n + 1):
        t = i * dt
        row = ref[2 * i]
        w = noise[i // per_tick]
        e = row[0] - y
        edot = row[1] - v

        if sampled:
            if i % per_tick == 0:
                if e_prev is None:
                    e_prev, d_prev = e, 0.0
                else:
                    integral += 0.5 * Ts * (e + e_prev)
                d_k = b0 * e + b1 * e_prev - a1 * d_prev
                previous = held
                held = kp * e + ki * integral + kd * d_k
                held_rate = (held - previous) / Ts
                e_prev, d_prev = e, d_k
            u_fb = held
            udot_fb = held_rate
        else:
            u_fb = kp * e + ki * I + kd * edot
            accel = (uff[2 * i] + u_fb + w - d_t * v) / m_t
            udot_fb = kp * edot + ki * e + kd * (row[2] - accel)

        out[i] = (t, row[0], y, e, edot, uff[2 * i], u_fb, udot_fb, w)
        if i == n:
            break

        def deriv(y_, v_, I_, j):
            ref_j = ref[j]
            e_ = ref_j[0] - y_
            fb = u_fb if sampled else kp * e_ + ki * I_ + kd * (ref_j[1] - v_)
            return v_, (uff[j] + fb + w - d_t * v_) / m_t, e_

        j = 2 * i
        k1 = deriv(y, v, I, j)
        k2 = deriv(y + 0.5 * dt * k1[0], v + 0.5 * dt * k1[1], I + 0.5 * dt * k1[2], j + 1)
        k3 = deriv(y + 0.5 * dt * k2[0], v + 0.5 * dt * k2[1], I + 0.5 * dt * k2[2], j + 1)
        k4 = deriv(y + dt * k3[0], v + dt * k3[1], I + dt * k3[2], j + 2)
        y += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        v += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        I += dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])

        if not (math.isfinite(y) and math.isfinite(v) and math.isfinite(I)):
            raise DivergenceError((i + 1) * dt)

    logger.debug("simulated %d steps (%s, dm %+g, dd %+g, noise %g)", n, cfg.controller_mode.value,
                 cfg.true_dm, cfg.true_dd, cfg.force_noise_amp)
    return Trace(*(out[:, c].copy() for c in range(len(TRACE_COLUMNS))))


def rms(series, dt=None):
    """
    Root mean square with uniform sample weights. dt is accepted for
    signature symmetry with time-weighted variants and does not change the
    result.

    Example:
        >>> rms([3.0, 4.0])
        3.5355339059327378
    """
    x = numpy.asarray(series, dtype=float)
    if x.size == 0:
        raise SimulationError("rms of an empty series")
    return float(numpy.sqrt(numpy.mean(x ** 2)))


def filtered_derivative(x, dt, pole=100.0):
    """
    x passed through pole*s/(s + pole), discretised with the bilinear
    transform at 1/dt and started in steady state for x[0].
    """
    x = numpy.asarray(x, dtype=float)
    b, a = scipy.signal.bilinear([pole, 0.0], [1.0, pole], fs=1.0 / dt)
    zi = scipy.signal.lfilter_zi(b, a) * x[0]
    return scipy.signal.lfilter(b, a, x, zi=zi)[0]


def summarize(trace, pole=100.0):
    """
    RMS of e and of the filtered derivatives of e and u_fb.
    """
    dt = trace.dt
    if dt <= 0:
        return RmsSummary(rms(trace.e), 0.0, 0.0)
    return RmsSummary(
        rms_e=rms(trace.e),
        rms_edot=rms(filtered_derivative(trace.e, dt, pole)),
        rms_udotfb=rms(filtered_derivative(trace.u_fb, dt, pole)),
    )


def write_trace_csv(trace, path):
    numpy.savetxt(path, trace.as_array(), fmt="%.17g", delimiter=",",
                  header=",".join(TRACE_COLUMNS), comments="", newline="\n")
