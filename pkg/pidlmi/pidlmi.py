#!/usr/bin/env python3

import collections, logging, os, sys, time
from pidlmi.utils import *

logger = logging.getLogger(__name__)

SynthesisResult = collections.namedtuple(
    "SynthesisResult", ["vertices", "problem", "solution", "certificate", "report", "pid", "bracket", "structured"]
)


def run(config, structured=True, nominal=False, bisect=False):
    """
    Robust (sparse) H-infinity synthesis on the corners of the uncertainty
    box.

    Args:
        config: Config
        structured: restrict the gain to the PID pattern
        nominal: ignore the uncertainty box
        bisect: additionally bracket mu by bisection

    Returns:
        SynthesisResult; pid is None for unstructured gains

    Raises:
        InfeasibleError, SolverError
    """
    box = UncertaintyBox(0.0, 0.0, 0.0, 0.0) if nominal else config.box
    vertices = polytope_vertices(config.plant, box, config.scurve, config.weights)
    problem = assemble(vertices, config.weights, config.solver, structured=structured)
    solution = solve(problem, config.solver)

    if solution.status is Status.INFEASIBLE:
        raise InfeasibleError("no strictly feasible certificate with mu >= %g" % config.solver.mu_min, solution)
    if solution.status is not Status.OPTIMAL:
        raise SolverError("solver stopped with status %s" % solution.status.value, solution)

    cert = certificate_from_x(problem, solution.x)
    report = validate_certificate(cert, vertices, tol=config.solver.feas_tol)
    if not report.passed:
        logger.warning("synthesised certificate fails verification: %s", "; ".join(report.failures))
    pid = None
    if report.gain is not None and report.gain.structured:
        pid = to_pid(report.gain)
    bracket = bisect_mu(problem, config.solver) if bisect else None

    return SynthesisResult(vertices, problem, solution, cert, report, pid, bracket, structured)


def load_or_synthesize(gains_path, config):
    """
    PID gains from a gain file, or from an inline synthesis if no file is
    given.

    Returns:
        (PidGains, gamma or None)
    """
    if gains_path:
        return read_gains(gains_path)
    logger.info("no gain file given, running synthesis")
    result = run(config)
    return result.pid, result.certificate.gamma


def report_sections(result):
    solution, cert, report = result.solution, result.certificate, result.report
    sections = [
        ("synthesis", [
            ("structured", result.structured),
            ("nvars", result.problem.nvars),
            ("status", solution.status.value),
            ("iterations", solution.iterations),
            ("outer_iterations", solution.outer_iterations),
            ("gap", solution.gap),
            ("dual_bound", solution.dual_bound),
            ("dual_residual", solution.dual_residual),
            ("mu", cert.mu),
            ("gamma", cert.gamma),
        ]),
        ("gain", [("K", report.gain.k if report.gain is not None else [])]),
    ]
    if result.pid is not None:
        sections[1][1].extend([("kp", result.pid.kp), ("ki", result.pid.ki), ("kd", result.pid.kd)])
    sections.append(("certificate", [("W", cert.matrix)]))
    sections.append(("checks", certificate_entries(report)))
    if result.bracket is not None:
        sections.append(("bisection", [
            ("mu_lo", result.bracket.lo),
            ("mu_hi", result.bracket.hi),
            ("phase1_solves", result.bracket.phase1_solves),
        ]))
    return sections


def certificate_entries(report):
    entries = [
        ("passed", report.passed),
        ("psd_ok", report.psd_ok),
        ("psd_margin", report.psd_margin),
        ("sparsity_ok", report.sparsity_ok),
        ("sparsity_residual", report.sparsity_residual),
        ("gamma", report.gamma),
    ]
    for i, (t1, smin) in enumerate(zip(report.theta1_max, report.schur_min), 1):
        entries.append(("vertex%d_theta1_max" % i, t1))
        entries.append(("vertex%d_lmi_min" % i, smin))
    for i, (abscissa, norm) in enumerate(zip(report.abscissas, report.hinf), 1):
        entries.append(("vertex%d_abscissa" % i, abscissa))
        entries.append(("vertex%d_hinf" % i, norm))
    for i, failure in enumerate(report.failures, 1):
        entries.append(("failure%d" % i, failure))
    return entries


def save(out_dir, args, result):
    write_report(out_dir, options_dump(args), report_sections(result))
    write_certificate(result.certificate, os.path.join(out_dir, "certificate.json"))
    if result.pid is not None:
        write_gains(result.pid, os.path.join(out_dir, "gains.json"), gamma=result.certificate.gamma)


def main(argv=None):
    cparser = build_parser("Robust sparse H-infinity PID synthesis by LMI optimisation.")
    cparser.add_argument(
        "--unstructured",
        action="store_true",
        help="Synthesise a full state-feedback gain (no PID pattern); its gamma lower-bounds the PID gamma."
    )
    cparser.add_argument(
        "--nominal",
        action="store_true",
        help="Ignore the uncertainty box (nominal synthesis)."
    )
    cparser.add_argument(
        "--bisect",
        action="store_true",
        help="Bracket the optimal mu by bisection as an independent check."
    )
    args, config = parse_config(cparser, argv)

    time_start = time.time()
    try:
        result = run(config, structured=not args.unstructured, nominal=args.nominal, bisect=args.bisect)
    except ConfigError as e:
        sys.exit("Error: %s" % e)
    except InfeasibleError as e:
        print("Error: %s" % e, file=sys.stderr)
        sys.exit(EXIT_INFEASIBLE)
    except PidlmiError as e:
        print("Error: %s" % e, file=sys.stderr)
        sys.exit(EXIT_SOLVER)

    save(config.out, args, result)
    print("Total time elapsed:", "%.2f" % (time.time() - time_start), "s")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
