"""Command-line interface.

Subcommands: analyze | verify-domain | solve | floquet | example.  Every run
writes a schema-versioned report.json into the output directory; solve-style
commands add one CSV per solution and the report-path figures.

Exit codes: 0 all checks passed, 2 checks ran but one failed, 1 execution
error (bad config, unexpected exception).
"""

from __future__ import annotations

import argparse
import sys as _sys
from pathlib import Path

from . import figures, report as report_mod
from .config import ConfigError, build_run, load_config
from .errors import (
    DDEPeriodicError,
    ResonantLinearisationError,
    WeakConditionError,
)
from .geometry import delay_budget, sup_norm_estimate, verify_inward
from .linear_analysis import (
    LinearPair,
    nonresonance_certificate,
    resonance_scan,
    small_delay_test,
)
from .solver import degree_audit, forcing_transform, multi_start_solve
from .timedomain import (
    floquet_report,
    ode_poincare_degree,
    orbit_trajectory,
    poincare_gap,
    positive_characteristic_root,
    write_trajectory_csv,
)


def _parser():
    parser = argparse.ArgumentParser(
        prog="ddeperiodic",
        description="Find, count and certify periodic solutions of forced delay systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("analyze", "resonance certificate, multiplicity bound and margin scan"),
        ("verify-domain", "sampled inward-pointing conditions and the delay budget"),
        ("solve", "multi-start periodic solution search with degree audit"),
        ("floquet", "multipliers of the linearised one-period map"),
        ("example", "end-to-end run of the built-in singular benchmark"),
    ]:
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, type=Path, help="TOML run file")
        cmd.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument("--threads", type=int, default=1, help="worker cap for inner parallelism")
        cmd.add_argument("--force", action="store_true",
                         help="solve even when the nonresonance certificate fails")
        cmd.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    return parser


def _certificate_fragment(run):
    lp = run.system.linear_pair()
    cert = nonresonance_certificate(lp, euler_char=run.euler_char)
    m_sum = run.system.jac_state + run.system.jac_delayed
    passed, offending = small_delay_test(m_sum, run.system.period)
    return cert, {
        "certificate": cert.as_dict(),
        "small_delay_test": {"passed": passed, "offending_k": offending},
    }


def _scan_fragment(run):
    if run.scan is not None:
        lo, hi, steps = run.scan
    else:
        lo, hi, steps = 0.5 * run.system.period, 1.5 * run.system.period, 120
    data = resonance_scan(run.system.jac_state, run.system.jac_delayed,
                          run.system.tau, (lo, hi), steps)
    return data, {"resonance_scan": {"periods": [float(t) for t in data[:, 0]],
                                     "margins": [float(m) for m in data[:, 1]]}}


def cmd_analyze(run, out_dir, args, rep):
    cert, fragment = _certificate_fragment(run)
    rep.update(fragment)
    scan, scan_fragment = _scan_fragment(run)
    rep.update(scan_fragment)
    if not args.no_figures:
        path = figures.save_resonance_scan(out_dir / "resonance_scan.png", scan,
                                           period=run.system.period)
        rep["files"]["figures"].append(path.name)
    if not cert.nonresonant:
        report_mod.flag_failure(rep, f"resonant at harmonic {cert.failing_k}")


def cmd_verify_domain(run, out_dir, args, rep):
    if run.domain is None:
        raise ConfigError("verify-domain needs [domain] geometry")
    sys = run.system
    inward = verify_inward(sys, run.domain, run.boundary_samples, run.pair_samples)
    rep["domain_verification"] = inward.as_dict()
    rep["field_sup_estimate"] = inward.field_sup
    if inward.weak_pass:
        budget = delay_budget(sys, run.domain)
        rep["delay_budget"] = budget
        rep["delay_budget_ok"] = bool(sys.tau < budget)
    else:
        report_mod.flag_failure(rep, "weak inward condition fails on the boundary")
    if inward.delay_pass is False:
        report_mod.flag_failure(rep, "delay inward condition fails on sampled pairs")
    if not args.no_figures:
        path = figures.save_boundary_margins(out_dir / "boundary_margins.png", sys, run.domain)
        rep["files"]["figures"].append(path.name)


def _solve_pipeline(run, out_dir, args, rep):
    if run.domain is None:
        raise ConfigError("solve needs [domain] geometry")
    sys = run.system
    cert, fragment = _certificate_fragment(run)
    rep.update(fragment)
    if not cert.nonresonant and not args.force:
        report_mod.flag_failure(
            rep, f"resonant at harmonic {cert.failing_k}; rerun with --force to solve anyway"
        )
        return None

    if sys.rhs_sup is None:
        sys.rhs_sup = sup_norm_estimate(sys, run.domain, max(512, run.pair_samples))
        rep["field_sup_estimate"] = sys.rhs_sup
    if sys.forcing is not None:
        p_sup = sys.forcing_poly(run.degree).sup_norm()
        if p_sup > 0:
            rep["forcing_gain"] = forcing_transform(sys, run.degree).sup_norm() / p_sup
    solset = multi_start_solve(sys, run.domain, run.degree, run.budget,
                               seed=run.seed, threads=args.threads)
    if run.check_poincare and sys.tau <= sys.period:
        for rec in solset.records:
            rec.poincare_gap = poincare_gap(sys, rec.u, nodes=run.nodes)
    rep["solutions"] = solset.as_dict()
    audit = degree_audit(solset, sys.dim, solset.euler_char, cert.det_sign)
    rep["degree_audit"] = audit.as_dict()

    for i, rec in enumerate(solset.records):
        csv_path = out_dir / f"solution_{i}.csv"
        write_trajectory_csv(csv_path, orbit_trajectory(sys, rec.u))
        rep["files"]["csv"].append(csv_path.name)
    if not args.no_figures:
        path = figures.save_solutions(out_dir / "solutions.png", solset, sys, run.domain)
        rep["files"]["figures"].append(path.name)

    if not solset.records and audit.expected_sum != 0:
        report_mod.flag_failure(rep, "no solutions found although the total degree is nonzero")
    if audit.solutions_missed:
        report_mod.flag_failure(rep, audit.message)
    return solset


def cmd_solve(run, out_dir, args, rep):
    _solve_pipeline(run, out_dir, args, rep)


def cmd_floquet(run, out_dir, args, rep):
    sys = run.system
    lp = sys.linear_pair()
    nodes = max(run.nodes, 16)
    try:
        fl = floquet_report(lp, nodes=nodes)
        rep["floquet"] = fl.as_dict()
        if not args.no_figures:
            path = figures.save_multipliers(out_dir / "floquet_multipliers.png", fl)
            rep["files"]["figures"].append(path.name)
    except ResonantLinearisationError as err:
        report_mod.flag_failure(rep, str(err))
        return
    if sys.tau == 0:
        sign, consistent = ode_poincare_degree(sys.jac_state + sys.jac_delayed, sys.period)
        rep["ode_degree"] = {"sign": sign, "consistent": consistent}
    cert = nonresonance_certificate(lp)
    if cert.det_sign is not None:
        # the period-map index should mirror the fixed-point operator's index
        # up to the (-1)^N factor; for large delays this is reported, not
        # asserted, so disagreement is only flagged
        operator_index = (-1) ** sys.dim * cert.det_sign
        rep["index_relation"] = {
            "poincare_index": fl.index,
            "operator_index": operator_index,
            "agrees": fl.index == operator_index,
        }
    root = positive_characteristic_root(sys.jac_state, sys.jac_delayed, sys.tau)
    rep["instability_root"] = root


def cmd_example(run, out_dir, args, rep):
    if run.domain is None or run.domain.hole_count < 1:
        raise ConfigError("the example command needs a punctured domain (J >= 1)")
    sys = run.system
    inward = verify_inward(sys, run.domain, run.boundary_samples, run.pair_samples)
    rep["domain_verification"] = inward.as_dict()
    if not (inward.weak_pass and inward.delay_pass is not False):
        report_mod.flag_failure(rep, "inward-pointing verification failed")

    solset = _solve_pipeline(run, out_dir, args, rep)
    lp0 = LinearPair(sys.jac_state, sys.jac_delayed, 0.0, sys.period)
    try:
        rep["floquet"] = floquet_report(lp0).as_dict()
    except ResonantLinearisationError as err:
        report_mod.flag_failure(rep, str(err))

    if solset is not None:
        expected = solset.expected_count
        found = len(solset.records)
        rep["headline"] = (
            f"found {found} of expected {expected}" if expected is not None
            else f"found {found} (no multiplicity bound available)"
        )
        if expected is not None and found < expected:
            report_mod.flag_failure(
                rep,
                "found fewer solutions than the generic bound; "
                "the forcing may be outside the small-forcing regime",
            )


_HANDLERS = {
    "analyze": cmd_analyze,
    "verify-domain": cmd_verify_domain,
    "solve": cmd_solve,
    "floquet": cmd_floquet,
    "example": cmd_example,
}


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        raw = load_config(args.config)
        run = build_run(raw, seed_override=args.seed)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        rep = report_mod.make_report(args.command, raw, run.seed)
        try:
            _HANDLERS[args.command](run, out_dir, args, rep)
        except (WeakConditionError, ResonantLinearisationError) as err:
            report_mod.flag_failure(rep, str(err))
        path = report_mod.write_report(out_dir, rep)
        print(f"wrote {path}")
        for line in rep["status"]["failures"]:
            print(f"check failed: {line}", file=_sys.stderr)
        return 0 if rep["status"]["ok"] else 2
    except (ConfigError, OSError) as err:
        print(f"error: {err}", file=_sys.stderr)
        return 1
    except DDEPeriodicError as err:
        print(f"error: {err}", file=_sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
