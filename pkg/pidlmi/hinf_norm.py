#!/usr/bin/env python3

import collections, logging, sys
from pidlmi.utils import *
from pidlmi.pidlmi import load_or_synthesize

logger = logging.getLogger(__name__)

NormRow = collections.namedtuple("NormRow", ["dm", "dd", "abscissa", "bisection", "sweep", "omega"])


def run(config, pid, points=None, tol=1e-6):
    """
    H-infinity norm of the closed loop with pid, by both methods, at the
    corners of the box or at the given (dm, dd) fractions.

    Returns:
        list of NormRow; norms are inf for unstable points
    """
    gain = from_pid(pid.kp, pid.ki, pid.kd)
    rows = []
    for dm, dd in points or config.box.corners():
        aug = build_augmented(config.plant, dm * config.plant.m, dd * config.plant.d, config.scurve, config.weights)
        cl = closed_loop(aug, gain)
        abscissa = spectral_abscissa(cl.Acl)
        if abscissa < 0:
            bisection, sweep, omega = hinf_norm(cl, tol, return_both=True)
        else:
            bisection = sweep = omega = float("inf")
        rows.append(NormRow(dm, dd, abscissa, bisection, sweep, omega))
    return rows


def main(argv=None):
    cparser = build_parser("H-infinity norm of a PID gain on the vertex systems.")
    cparser.add_argument(
        "--gains",
        help="Gain file (JSON with keys kp, ki, kd); synthesised inline if omitted."
    )
    cparser.add_argument(
        "-p", "--point",
        nargs=2,
        type=float,
        action="append",
        metavar=("DM", "DD"),
        help="Evaluate at this (dm, dd) fraction instead of the box corners (repeatable)."
    )
    cparser.add_argument(
        "--tol",
        type=float,
        default=1e-6,
        help="Relative tolerance of the Hamiltonian bisection."
    )
    args, config = parse_config(cparser, argv)

    try:
        pid, _ = load_or_synthesize(args.gains, config)
        rows = run(config, pid, [tuple(p) for p in args.point] if args.point else None, args.tol)
    except (CertificateError, ConfigError, ModelError) as e:
        sys.exit("Error: %s" % e)
    except NormMismatchError as e:
        print("Error: %s" % e, file=sys.stderr)
        sys.exit(EXIT_SOLVER)
    except PidlmiError as e:
        print("Error: synthesis failed: %s" % e, file=sys.stderr)
        sys.exit(EXIT_SOLVER)

    entries = []
    for i, row in enumerate(rows, 1):
        entries.extend(("point%d_%s" % (i, key), value) for key, value in row._asdict().items())
    write_report(config.out, options_dump(args), [("hinf", entries)], name="hinf")
    sys.exit(EXIT_OK if all(row.abscissa < 0 for row in rows) else EXIT_INFEASIBLE)


if __name__ == "__main__":
    main()
