#!/usr/bin/env python3

import collections, logging, sys
from pidlmi.utils import *
from pidlmi.pidlmi import certificate_entries

logger = logging.getLogger(__name__)

VerifyResult = collections.namedtuple("VerifyResult", ["passed", "report", "metrics", "gamma"])

# resolution of the H-infinity bisection
HINF_TOL = 1e-6


def run(config, certificate=None, pid=None, gamma=None, print_tolerance=False):
    """
    Checks a certificate (W, mu) or a PID gain against the vertex systems
    of the configured box.

    Args:
        config: Config
        certificate: Certificate, or None to check pid
        pid: PidGains (ignored if a certificate is given)
        gamma: bound on the per-vertex H-infinity norm of pid (optional)
        print_tolerance: use the loose tolerance for certificates printed
                         to three significant figures

    Returns:
        VerifyResult
    """
    vertices = polytope_vertices(config.plant, config.box, config.scurve, config.weights)

    if certificate is not None:
        tol = TOL_PRINT if print_tolerance else config.solver.feas_tol
        slack = TOL_PRINT if print_tolerance else 1e-3
        report = validate_certificate(certificate, vertices, tol=tol, hinf_slack=slack, hinf_tol=HINF_TOL)
        return VerifyResult(report.passed, report, None, report.gamma)

    gain = from_pid(pid.kp, pid.ki, pid.kd)
    metrics = [closed_loop_metrics(aug, gain, HINF_TOL) for aug in vertices]
    passed = all(abscissa < 0 for abscissa, _ in metrics)
    if gamma is not None:
        passed = passed and all(norm <= gamma * (1 + HINF_TOL) for _, norm in metrics)
    return VerifyResult(passed, None, metrics, gamma)


def report_sections(result):
    if result.report is not None:
        return [("verification", certificate_entries(result.report))]
    entries = [("passed", result.passed)]
    if result.gamma is not None:
        entries.append(("gamma", result.gamma))
    for i, (abscissa, norm) in enumerate(result.metrics, 1):
        entries.append(("vertex%d_abscissa" % i, abscissa))
        entries.append(("vertex%d_hinf" % i, norm))
    return [("verification", entries)]


def main(argv=None):
    cparser = build_parser("Verify a certificate (W, mu) or a PID gain on the vertex systems.")
    cparser.add_argument(
        "--certificate",
        help="Certificate file (JSON with keys mu and W)."
    )
    cparser.add_argument(
        "--gains",
        help="Gain file (JSON with keys kp, ki, kd and optionally gamma)."
    )
    cparser.add_argument(
        "--gamma",
        type=float,
        help="Bound on the per-vertex H-infinity norm of the gain (overrides gamma of the gain file)."
    )
    cparser.add_argument(
        "--print-tolerance",
        action="store_true",
        help="Check with the tolerance for certificates printed to three significant figures."
    )
    args, config = parse_config(cparser, argv)

    if bool(args.certificate) == bool(args.gains):
        sys.exit("Error: exactly one of --certificate and --gains is required")
    try:
        if args.certificate:
            result = run(config, certificate=read_certificate(args.certificate),
                         print_tolerance=args.print_tolerance)
        else:
            pid, gamma = read_gains(args.gains)
            result = run(config, pid=pid, gamma=args.gamma if args.gamma is not None else gamma)
    except CertificateError as e:
        sys.exit("Error: %s" % e)

    write_report(config.out, options_dump(args), report_sections(result), name="verify")
    sys.exit(EXIT_OK if result.passed else EXIT_INFEASIBLE)


if __name__ == "__main__":
    main()
