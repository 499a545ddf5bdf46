#!/usr/bin/env python3

import logging, os, sys, time
import numpy
from pidlmi.utils import *
from pidlmi.pidlmi import load_or_synthesize

logger = logging.getLogger(__name__)

SWEEP_HEADER = "dm,dd,stable,abscissa,hinf"


def run(config, pid, grid_n=11):
    gain = from_pid(pid.kp, pid.ki, pid.kd)
    return uncertainty_sweep(config.plant, config.box, gain, grid_n, config.scurve, config.weights)


def write_sweep_csv(result, path):
    rows = numpy.array([(p.dm, p.dd, int(p.stable), p.abscissa, p.hinf) for p in result.points], dtype=float)
    numpy.savetxt(path, rows, fmt=["%.17g", "%.17g", "%d", "%.17g", "%.17g"], delimiter=",",
                  header=SWEEP_HEADER, comments="", newline="\n")


def save(out_dir, args, config, result):
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "sweep.csv")
    write_sweep_csv(result, csv_path)
    if config.gnuplot:
        write_gnuplot(csv_path, "dm", ["hinf"], title="H-infinity norm over the box")
    sections = [("sweep", [
        ("points", len(result.points)),
        ("all_stable", result.all_stable),
        ("max_hinf", result.max_hinf),
        ("max_vertex_hinf", result.max_vertex_hinf),
        ("vertex_bound_ok", result.vertex_bound_ok),
    ])]
    write_report(out_dir, options_dump(args), sections, name="sweep")


def main(argv=None):
    cparser = build_parser("Stability and H-infinity norm of a PID gain on a grid over the uncertainty box.")
    cparser.add_argument(
        "--gains",
        help="Gain file (JSON with keys kp, ki, kd); synthesised inline if omitted."
    )
    cparser.add_argument(
        "-g", "--grid",
        type=int,
        default=11,
        help="Grid points per axis (>= 2)."
    )
    args, config = parse_config(cparser, argv)
    if args.grid < 2:
        sys.exit("Error: grid size must be >= 2 (got %d)" % args.grid)

    time_start = time.time()
    try:
        pid, _ = load_or_synthesize(args.gains, config)
    except (CertificateError, ConfigError) as e:
        sys.exit("Error: %s" % e)
    except PidlmiError as e:
        print("Error: synthesis failed: %s" % e, file=sys.stderr)
        sys.exit(EXIT_SOLVER)

    result = run(config, pid, args.grid)
    save(config.out, args, config, result)
    print("Total time elapsed:", "%.2f" % (time.time() - time_start), "s")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
