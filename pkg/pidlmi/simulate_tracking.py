#!/usr/bin/env python3

import collections, dataclasses, logging, os, sys, time
from pidlmi.utils import *
from pidlmi.pidlmi import load_or_synthesize

logger = logging.getLogger(__name__)

Scenario = collections.namedtuple("Scenario", ["name", "dm", "dd", "noise"])
SimulationResult = collections.namedtuple("SimulationResult", ["trace", "summary", "table"])


def scenarios(config):
    """
    Paired study: {nominal, loaded} x {noise-free, noisy}.
    """
    dm, dd = config.load
    amp = config.sim.force_noise_amp
    return [
        Scenario("nominal", 0.0, 0.0, 0.0),
        Scenario("nominal_noisy", 0.0, 0.0, amp),
        Scenario("loaded", dm, dd, 0.0),
        Scenario("loaded_noisy", dm, dd, amp),
    ]


def run(config, pid, paired=False):
    """
    Simulates the configured scenario and, optionally, the paired study.

    Returns:
        SimulationResult(trace, summary, table); table lists
        (Scenario, RmsSummary) pairs
    """
    pole = config.sim.deriv_filter_pole
    trace = simulate(config.plant, config.sim, config.scurve, pid)
    summary = summarize(trace, pole)

    table = []
    if paired:
        for scenario in scenarios(config):
            cfg = dataclasses.replace(config.sim, true_dm=scenario.dm, true_dd=scenario.dd,
                                      force_noise_amp=scenario.noise)
            table.append((scenario, summarize(simulate(config.plant, cfg, config.scurve, pid), pole)))
    return SimulationResult(trace, summary, table)


def format_table(table):
    lines = ["%-16s %-24s %-24s %-24s" % ("scenario", "rms_e (m)", "rms_edot (m/s)", "rms_udotfb (1/s)")]
    for scenario, summary in table:
        lines.append("%-16s %-24.17g %-24.17g %-24.17g" % ((scenario.name,) + tuple(summary)))
    return "\n".join(lines)


def save(out_dir, args, config, pid, result):
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "trace.csv")
    write_trace_csv(result.trace, csv_path)
    if config.gnuplot:
        write_gnuplot(csv_path, "t", ["e"], title="tracking error")

    sections = [
        ("gains", [("kp", pid.kp), ("ki", pid.ki), ("kd", pid.kd)]),
        ("summary", list(result.summary._asdict().items())),
    ]
    if result.table:
        entries = []
        for scenario, summary in result.table:
            entries.extend(("%s_%s" % (scenario.name, key), value) for key, value in summary._asdict().items())
        sections.append(("paired", entries))
    write_report(out_dir, options_dump(args), sections, name="simulation")
    if result.table:
        print(format_table(result.table))


def main(argv=None):
    cparser = build_parser("Simulate the feedforward + PID tracking loop on the perturbed plant.")
    cparser.add_argument(
        "--gains",
        help="Gain file (JSON with keys kp, ki, kd); synthesised inline if omitted."
    )
    cparser.add_argument(
        "--paired",
        action="store_true",
        help="Also run nominal/loaded x noise-free/noisy scenarios and print a comparison table."
    )
    args, config = parse_config(cparser, argv)

    time_start = time.time()
    try:
        pid, _ = load_or_synthesize(args.gains, config)
    except (CertificateError, ConfigError) as e:
        sys.exit("Error: %s" % e)
    except PidlmiError as e:
        print("Error: synthesis failed: %s" % e, file=sys.stderr)
        sys.exit(EXIT_SOLVER)

    try:
        result = run(config, pid, paired=args.paired)
    except DivergenceError as e:
        print("Error: %s" % e, file=sys.stderr)
        sys.exit(EXIT_DIVERGENCE)
    except SimulationError as e:
        sys.exit("Error: %s" % e)

    save(config.out, args, config, pid, result)
    print("Total time elapsed:", "%.2f" % (time.time() - time_start), "s")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
