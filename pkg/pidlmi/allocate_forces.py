#!/usr/bin/env python3

import logging, sys
import numpy
from pidlmi.utils import *

logger = logging.getLogger(__name__)

FORCE_LABELS = ("F1x", "F1z", "F2y", "F2z", "F3x", "F3z", "F4y", "F4z")


def run(wrench, L):
    """
    Minimum-norm local forces for a wrench [Fx, Fy, Fz, Tx, Ty, Tz].

    Returns:
        (local forces, residual norm of M F_l - F_g)
    """
    F_g = numpy.asarray(wrench, dtype=float)
    F_l = allocate_forces(F_g, L)
    return F_l, float(numpy.linalg.norm(compose_wrench(F_l, L) - F_g))


def main(argv=None):
    cparser = build_parser("Distribute a wrench of the planar stage onto its eight actuator forces.")
    cparser.add_argument(
        "-w", "--wrench",
        nargs=6,
        type=float,
        required=True,
        metavar=("FX", "FY", "FZ", "TX", "TY", "TZ"),
        help="Global force and torque."
    )
    args, config = parse_config(cparser, argv)

    try:
        F_l, residual = run(args.wrench, config.arm_length)
    except ModelError as e:
        sys.exit("Error: %s" % e)

    for label, force in zip(FORCE_LABELS, F_l):
        print("%s: %.17g" % (label, force))
    print("residual: %.3e" % residual)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
