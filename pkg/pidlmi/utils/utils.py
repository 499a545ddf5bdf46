import collections, configargparse, dataclasses, json, logging, math, os, sys
import numpy

from pidlmi.utils.errors import CertificateError, ConfigError, ModelError
from pidlmi.utils.lmi import Certificate, PidGains
from pidlmi.utils.model import SCurveSpec, SecondOrderPlant, UncertaintyBox, WeightSpec
from pidlmi.utils.sdp import SolverOptions
from pidlmi.utils.sim import ControllerMode, SimConfig

logger = logging.getLogger(__name__)

CONFIG_ENV = "PIDLMI_CONFIG"
SEPARATOR = "----------------------"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER = 3
EXIT_DIVERGENCE = 4


def str2bool(value):
    if isinstance(value, bool):
        return value
    if value.lower() in ("1", "true", "yes", "on"):
        return True
    if value.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean: %r" % value)


Option = collections.namedtuple("Option", ["section", "name", "type", "default", "help"])

# all defaults reproduce the published numerical example
OPTIONS = [
    Option("plant", "m", float, 1 / 400, "Nominal lumped mass."),
    Option("plant", "d", float, 1 / 200, "Nominal lumped damping."),
    Option("uncertainty", "dm-lo", float, -0.3, "Lower bound of the mass perturbation (fraction of m)."),
    Option("uncertainty", "dm-hi", float, 0.3, "Upper bound of the mass perturbation (fraction of m)."),
    Option("uncertainty", "dd-lo", float, -0.3, "Lower bound of the damping perturbation (fraction of d)."),
    Option("uncertainty", "dd-hi", float, 0.3, "Upper bound of the damping perturbation (fraction of d)."),
    Option("weights", "q1", float, 1e4, "Weight on the position error e."),
    Option("weights", "q2", float, 1e2, "Weight on the error velocity."),
    Option("weights", "q3", float, 0.0, "Weight on the error acceleration."),
    Option("weights", "r", float, 1.0, "Weight on the fictitious input (must be > 0)."),
    Option("scurve", "z1", float, -125.0, "Reference generator coefficient of p."),
    Option("scurve", "z2", float, -75.0, "Reference generator coefficient of p'."),
    Option("scurve", "z3", float, -15.0, "Reference generator coefficient of p''."),
    Option("scurve", "rho-p0", float, -2e-5, "Initial reference position (m)."),
    Option("scurve", "rho-v0", float, 0.0, "Initial reference velocity (m/s)."),
    Option("scurve", "rho-a0", float, 0.0, "Initial reference acceleration (m/s^2)."),
    Option("scurve", "offset", float, 2e-5, "Constant added to the reference position (m)."),
    Option("solver", "gap-tol", float, 1e-9, "Relative duality gap at which the barrier method stops."),
    Option("solver", "feas-tol", float, 1e-10, "Block eigenvalue slack relative to the largest block norm."),
    Option("solver", "mu-min", float, 1e-12, "Lower bound on mu."),
    Option("solver", "max-outer", int, 60, "Maximum number of barrier updates."),
    Option("solver", "max-newton", int, 200, "Maximum number of Newton steps per centering."),
    Option("solver", "barrier-factor", float, 10.0, "Barrier weight multiplier per outer iteration."),
    Option("solver", "strict-margin", float, 1e-14, "Scaled eigenvalue margin a phase-1 point must reach."),
    Option("solver", "newton-tol", float, 1e-10, "Newton decrement at which centering stops."),
    Option("solver", "trace-bound", float, 14.0, "Upper bound on tr(W) normalising the certificate; mu grows with it. 0 disables the bound."),
    Option("solver", "bisect-rtol", float, 1e-5, "Relative bracket width of the mu bisection."),
    Option("sim", "duration", float, 3.0, "Simulated time (s)."),
    Option("sim", "dt", float, 1e-5, "Integration step (s)."),
    Option("sim", "true-dm", float, 0.0, "Mass perturbation of the simulated plant (fraction of m)."),
    Option("sim", "true-dd", float, 0.0, "Damping perturbation of the simulated plant (fraction of d)."),
    Option("sim", "force-noise-amp", float, 0.05, "Amplitude of the uniform force noise (0 disables)."),
    Option("sim", "seed", int, 0, "Seed of the noise generator."),
    Option("sim", "controller-mode", str, "Continuous", "Continuous or Sampled PID."),
    Option("sim", "sample-hz", float, 2500.0, "Controller sample rate (Hz)."),
    Option("sim", "deriv-filter-pole", float, 100.0, "Pole of the filtered differentiator (rad/s)."),
    Option("sim", "integral0", float, 0.0, "Initial content of the integrator."),
    Option("sim", "feedforward", str2bool, True, "Apply the model feedforward (true/false)."),
    Option("sim", "load-dm", float, 0.3, "Mass perturbation of the loaded scenario of the paired study."),
    Option("sim", "load-dd", float, 0.3, "Damping perturbation of the loaded scenario of the paired study."),
    Option("allocation", "arm-length", float, 0.1, "Arm length L of the planar stage (m)."),
    Option("output", "out", str, ".", "Output directory."),
]

SECTIONS = sorted(set(opt.section for opt in OPTIONS))


class SectionedConfigParser(configargparse.IniConfigParser):
    """
    INI config file parser restricted to the pidlmi sections.
    """

    def __init__(self):
        super().__init__(SECTIONS, False)


def build_parser(description, default_config=True):
    """
    Parser with the common options of all tools.

    Args:
        description: tool description
        default_config: read the file named by $PIDLMI_CONFIG first

    Returns:
        configargparse.ArgParser
    """
    default_files = []
    if default_config and os.environ.get(CONFIG_ENV):
        default_files.append(os.environ[CONFIG_ENV])

    cparser = configargparse.ArgParser(
        description=description,
        default_config_files=default_files,
        config_file_parser_class=SectionedConfigParser,
    )
    cparser.add_argument(
        "-C", "--config-file", "--config",
        required=False,
        is_config_file=True,
        help="Config file with [plant], [uncertainty], [weights], [scurve], [solver], [sim], \
        [allocation] and [output] sections; keys are long option names."
    )
    cparser.add_argument(
        "-v", "--verbose",
        action="count",
        default=0,
        help="Increase log verbosity (-v: INFO, -vv: DEBUG)."
    )
    cparser.add_argument(
        "--gnuplot",
        action="store_true",
        help="[output] Write a gnuplot script next to every CSV file."
    )
    for opt in OPTIONS:
        kwargs = dict(type=opt.type, default=opt.default, help="[%s] %s" % (opt.section, opt.help))
        if opt.name == "controller-mode":
            kwargs["choices"] = [mode.value for mode in ControllerMode]
        cparser.add_argument("--" + opt.name, **kwargs)
    return cparser


def setup_logging(verbose):
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose and verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


# typed configuration


@dataclasses.dataclass(frozen=True)
class Config:
    plant: SecondOrderPlant = SecondOrderPlant(1 / 400, 1 / 200)
    box: UncertaintyBox = UncertaintyBox()
    weights: WeightSpec = WeightSpec()
    scurve: SCurveSpec = SCurveSpec()
    solver: SolverOptions = SolverOptions()
    sim: SimConfig = SimConfig(force_noise_amp=0.05)
    load: tuple = (0.3, 0.3)
    arm_length: float = 0.1
    out: str = "."
    gnuplot: bool = False


def config_from_namespace(args):
    """
    Converts parsed options into a Config. Violated invariants raise
    ConfigError naming section and field.
    """
    try:
        plant = SecondOrderPlant(args.m, args.d)
    except ModelError as e:
        raise ConfigError("[plant] %s" % e)
    if not args.arm_length > 0:
        raise ConfigError("[allocation] arm-length: must be > 0 (got %r)" % args.arm_length)
    if not 1 + args.load_dm > 0:
        raise ConfigError("[sim] load-dm: perturbed mass must stay positive (got %r)" % args.load_dm)
    return Config(
        plant=plant,
        box=UncertaintyBox(args.dm_lo, args.dm_hi, args.dd_lo, args.dd_hi),
        weights=WeightSpec(args.q1, args.q2, args.q3, args.r),
        scurve=SCurveSpec(args.z1, args.z2, args.z3, (args.rho_p0, args.rho_v0, args.rho_a0), args.offset),
        solver=SolverOptions(
            gap_tol=args.gap_tol,
            feas_tol=args.feas_tol,
            mu_min=args.mu_min,
            max_outer=args.max_outer,
            max_newton=args.max_newton,
            barrier_factor=args.barrier_factor,
            strict_margin=args.strict_margin,
            newton_tol=args.newton_tol,
            trace_bound=args.trace_bound,
            bisect_rtol=args.bisect_rtol,
        ),
        sim=SimConfig(
            duration=args.duration,
            dt=args.dt,
            true_dm=args.true_dm,
            true_dd=args.true_dd,
            force_noise_amp=args.force_noise_amp,
            seed=args.seed,
            controller_mode=ControllerMode(args.controller_mode),
            sample_hz=args.sample_hz,
            deriv_filter_pole=args.deriv_filter_pole,
            integral0=args.integral0,
            feedforward=args.feedforward,
        ),
        load=(args.load_dm, args.load_dd),
        arm_length=args.arm_length,
        out=args.out,
        gnuplot=bool(args.gnuplot),
    )


def config_items(config):
    """
    Option name -> value of a Config, in the order of OPTIONS.
    """
    c = config
    values = {
        "m": c.plant.m, "d": c.plant.d,
        "dm-lo": c.box.dm_lo, "dm-hi": c.box.dm_hi, "dd-lo": c.box.dd_lo, "dd-hi": c.box.dd_hi,
        "q1": c.weights.q1, "q2": c.weights.q2, "q3": c.weights.q3, "r": c.weights.r,
        "z1": c.scurve.z1, "z2": c.scurve.z2, "z3": c.scurve.z3,
        "rho-p0": c.scurve.rho0[0], "rho-v0": c.scurve.rho0[1], "rho-a0": c.scurve.rho0[2],
        "offset": c.scurve.offset,
        "duration": c.sim.duration, "dt": c.sim.dt, "true-dm": c.sim.true_dm, "true-dd": c.sim.true_dd,
        "force-noise-amp": c.sim.force_noise_amp, "seed": c.sim.seed,
        "controller-mode": c.sim.controller_mode.value, "sample-hz": c.sim.sample_hz,
        "deriv-filter-pole": c.sim.deriv_filter_pole, "integral0": c.sim.integral0,
        "feedforward": c.sim.feedforward, "load-dm": c.load[0], "load-dd": c.load[1],
        "arm-length": c.arm_length, "out": c.out,
    }
    for field in dataclasses.fields(SolverOptions):
        values[field.name.replace("_", "-")] = getattr(c.solver, field.name)
    return collections.OrderedDict((opt.name, values[opt.name]) for opt in OPTIONS)


def _ini_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_config(config, path):
    """
    Writes a Config as an INI file readable by load_config.
    """
    items = config_items(config)
    with open(path, "w", newline="\n") as f:
        for section in SECTIONS:
            f.write("[%s]\n" % section)
            for opt in OPTIONS:
                if opt.section == section:
                    f.write("%s = %s\n" % (opt.name, _ini_value(items[opt.name])))
            if section == "output":
                f.write("gnuplot = %s\n" % _ini_value(config.gnuplot))
            f.write("\n")


def load_config(path):
    """
    Reads an INI config file; missing keys keep their defaults.
    """
    if not os.path.isfile(path):
        raise ConfigError("config file not found: %s" % path)
    cparser = build_parser("", default_config=False)
    try:
        args = cparser.parse_args(["-C", path])
    except SystemExit:
        raise ConfigError("%s: invalid config file" % path)
    return config_from_namespace(args)


def parse_config(cparser, argv=None):
    """
    Parses command line and config files of a tool, configures logging
    and exits with status 1 on configuration errors.

    Returns:
        (namespace, Config)
    """
    args = cparser.parse_args(argv)
    setup_logging(args.verbose)
    try:
        config = config_from_namespace(args)
    except ConfigError as e:
        sys.exit("Error: %s" % e)
    return args, config


# reports


def options_dump(args):
    """
    `key: value` lines of all options, sorted by key.
    """
    return ["%s: %s" % (key, value) for key, value in sorted(vars(args).items())
            if key not in ("config_file", "verbose")]


def _format_scalar(value):
    if isinstance(value, (bool, numpy.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, numpy.floating)):
        return "%.17g" % value
    return str(value)


def format_report(header, sections):
    """
    Text report: option dump, separator, then one [section] per entry with
    `key: value` lines. Arrays are written row-wise.

    Args:
        header: list of lines (usually options_dump(args))
        sections: list of (name, list of (key, value))

    Returns:
        report string
    """
    lines = list(header) + [SEPARATOR]
    for name, entries in sections:
        lines.append("[%s]" % name)
        for key, value in entries:
            if isinstance(value, (numpy.ndarray, list, tuple)):
                arr = numpy.atleast_2d(numpy.asarray(value, dtype=float))
                lines.append("%s:" % key)
                for row in arr:
                    lines.append("    " + " ".join("%.17g" % v for v in row))
            else:
                lines.append("%s: %s" % (key, _format_scalar(value)))
        lines.append("")
    return "\n".join(lines)


def _jsonable(value):
    if isinstance(value, numpy.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (numpy.bool_, bool)):
        return bool(value)
    if isinstance(value, (numpy.integer, int)):
        return int(value)
    if isinstance(value, (numpy.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


def write_report(out_dir, header, sections, name="report"):
    """
    Prints the text report and writes <name>.txt and <name>.json to out_dir.
    """
    os.makedirs(out_dir, exist_ok=True)
    text = format_report(header, sections)
    print(text)
    with open(os.path.join(out_dir, name + ".txt"), "w", newline="\n") as f:
        f.write(text)
    data = {section: {key: _jsonable(value) for key, value in entries} for section, entries in sections}
    with open(os.path.join(out_dir, name + ".json"), "w", newline="\n") as f:
        json.dump(data, f, sort_keys=True, indent=2)
        f.write("\n")


# certificate and gain files


def _load_json(path):
    try:
        with open(path, "r") as f:
            return json.load(f)
    except OSError as e:
        raise CertificateError("%s: %s" % (path, e.strerror))
    except json.JSONDecodeError as e:
        raise CertificateError("%s, line %d: %s" % (path, e.lineno, e.msg))


def write_certificate(cert, path):
    with open(path, "w", newline="\n") as f:
        json.dump({"mu": cert.mu, "W": cert.matrix.tolist()}, f, indent=2)
        f.write("\n")


def read_certificate(path):
    """
    Reads {"mu": float, "W": 7x7 nested list}.

    Returns:
        Certificate
    """
    data = _load_json(path)
    if not isinstance(data, dict) or "mu" not in data or "W" not in data:
        raise CertificateError("%s: keys 'mu' and 'W' expected" % path)
    try:
        W = numpy.array(data["W"], dtype=float)
        mu = float(data["mu"])
    except (TypeError, ValueError):
        raise CertificateError("%s: non-numeric entries" % path)
    if W.shape != (7, 7):
        raise CertificateError("%s: W must be 7x7 (got %s)" % (path, W.shape))
    if not numpy.allclose(W, W.T, rtol=1e-12, atol=0.0):
        raise CertificateError("%s: W is not symmetric" % path)
    return Certificate.from_matrix(0.5 * (W + W.T), mu)


def write_gains(pid, path, gamma=None):
    data = {"kp": float(pid.kp), "ki": float(pid.ki), "kd": float(pid.kd)}
    if gamma is not None:
        data["gamma"] = float(gamma)
    with open(path, "w", newline="\n") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def read_gains(path):
    """
    Reads {"kp": float, "ki": float, "kd": float[, "gamma": float]}.

    Returns:
        (PidGains, gamma or None)
    """
    data = _load_json(path)
    if not isinstance(data, dict):
        raise CertificateError("%s: JSON object expected" % path)
    missing = [key for key in ("kp", "ki", "kd") if key not in data]
    if missing:
        raise CertificateError("%s: missing keys %s" % (path, ", ".join(missing)))
    try:
        pid = PidGains(float(data["kp"]), float(data["ki"]), float(data["kd"]))
        gamma = float(data["gamma"]) if "gamma" in data else None
    except (TypeError, ValueError):
        raise CertificateError("%s: non-numeric gain" % path)
    return pid, gamma


# plot scripts


def write_gnuplot(csv_path, x, ys, title=""):
    """
    Writes <csv>.gp plotting columns ys against column x (names from the
    CSV header).

    Returns:
        script path
    """
    with open(csv_path, "r") as f:
        header = f.readline().strip().split(",")
    script = os.path.splitext(csv_path)[0] + ".gp"
    name = os.path.basename(csv_path)
    plots = ", ".join('"%s" using %d:%d with lines title "%s"'
                      % (name, header.index(x) + 1, header.index(y) + 1, y) for y in ys)
    with open(script, "w", newline="\n") as f:
        f.write('set datafile separator ","\n')
        if title:
            f.write('set title "%s"\n' % title)
        f.write('set xlabel "%s"\n' % x)
        f.write("plot %s\n" % plots)
        f.write("pause -1\n")
    return script
