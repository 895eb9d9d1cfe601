"""Command-line entry point.

Exit codes: 0 success, 1 a check or certificate failed, 2 configuration error
or inadmissible initial data without ``--force``, 3 cone violation during the
run, 4 no convergence before the horizon or step limit.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import export, flow, prescribed, selftest
from .errors import AdmissibilityError, ConeViolation, DomainError
from .monitors import certify

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CONE, EXIT_NO_CONVERGENCE = 0, 1, 2, 3, 4


def _times(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad time list {text!r}") from exc


def _print_json(obj):
    print(export.json_text(obj), end="")


def _problem(args):
    conf = cfgmod.load(args.config)
    return conf, conf.grid(), conf.curvature(), conf.prescribed()


def cmd_check_f(args):
    conf, grid, F_spec, f_spec = _problem(args)
    rep = prescribed.admissibility(f_spec, F_spec.degree, conf.r1, conf.r2)
    _print_json(rep.as_dict())
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_check_init(args):
    conf, grid, F_spec, f_spec = _problem(args)
    u0 = conf.initial_field(grid)
    check = flow.check_initial(grid, u0, F_spec, f_spec, conf.r1, conf.r2)
    _print_json(check.as_dict())
    return EXIT_OK if check.passed else EXIT_FAIL


def _post_mortem(out, grid, exc, report=None, u=None):
    info = {"termination": "cone-violation", "error": str(exc)}
    if isinstance(exc, ConeViolation):
        info["node"] = [int(i) for i in exc.node]
        info["margin"] = float(exc.margin) if np.isfinite(exc.margin) else None
    if report is not None:
        info["t"] = report.state.t
        info["step"] = report.state.step
        export.write_series(out / "series.csv", report.series)
        u = report.state.u
    if u is not None:
        export.write_field(out / "postmortem_field.csv", grid, np.exp(u))
    export.write_json(out / "postmortem.json", info)
    print(f"cone violation: {exc}; post-mortem written to {out}", file=sys.stderr)


def cmd_solve(args):
    conf, grid, F_spec, f_spec = _problem(args)
    flow_cfg = conf.flow()
    u0 = conf.initial_field(grid)
    out = args.out if args.out is not None else conf.out_dir
    times = args.snapshot_times if args.snapshot_times is not None else conf.snapshot_times

    adm = prescribed.admissibility(f_spec, F_spec.degree, conf.r1, conf.r2)
    check = flow.check_initial(grid, u0, F_spec, f_spec, conf.r1, conf.r2)
    if not check.admissible and not args.force:
        print(f"initial surface is not admissible: {check.detail}", file=sys.stderr)
        return EXIT_CONFIG
    if not (check.passed and adm.passed) and not args.force:
        _print_json({"initial_check": check.as_dict(), "prescribed": adm.as_dict()})
        print("initial data or prescribed function fails its checks; use --force to run anyway", file=sys.stderr)
        return EXIT_CONFIG

    report = flow.evolve(grid, u0, F_spec, f_spec, flow_cfg, snapshot_times=times)
    if report.termination == "cone-violation":
        _post_mortem(out, grid, report.violation, report)
        return EXIT_CONE

    export.write_series(out / "series.csv", report.series)
    export.write_field(out / "final_field.csv", grid, report.state.rho)
    for s in sorted(report.snapshots):
        t, u = report.snapshots[s]
        export.write_obj(out / f"mesh_t{s:g}.obj", grid, np.exp(u), comment=f"t = {t:.17g}")

    summary = {
        "termination": report.termination,
        "t": report.state.t,
        "steps": report.state.step,
        "initial_check": check.as_dict(),
    }
    try:
        certs = certify(grid, u0, report, F_spec, f_spec, conf.r1, conf.r2)
    except AdmissibilityError as exc:
        summary["certificates"] = {"pass": False, "error": str(exc)}
        passed = False
    else:
        summary["certificates"] = certs.as_dict()
        passed = certs.passed
    export.write_json(out / "certificates.json", summary)
    print(f"{report.termination} at t = {report.state.t:.6g} after {report.state.step} steps; "
          f"certificates {'pass' if passed else 'FAIL'}; outputs in {out}")
    if not report.converged:
        return EXIT_NO_CONVERGENCE
    return EXIT_OK if passed else EXIT_FAIL


def cmd_selftest(args):
    return EXIT_OK if selftest.run(mutate=args.mutate) else EXIT_FAIL


def cmd_export(args):
    """Write the OBJ mesh and field file of the initial data, or of ``--field``."""
    conf = cfgmod.load(args.config)
    grid = conf.grid()
    if args.field:
        try:
            rho = export.read_field(args.field, grid)
        except (OSError, ValueError) as exc:
            raise cfgmod.ConfigError(str(exc)) from exc
        stem = "field"
    else:
        rho = np.exp(conf.initial_field(grid))
        stem = "initial"
    out = args.out if args.out is not None else conf.out_dir
    export.write_field(out / f"{stem}_field.csv", grid, rho)
    export.write_obj(out / f"{stem}.obj", grid, rho)
    print(f"wrote {stem}_field.csv and {stem}.obj to {out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="radialflow", description="Radial curvature flow on the sphere.")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="flat key = value config file")
        return p

    with_config(sub.add_parser("check-f", help="check admissibility of the prescribed function")).set_defaults(func=cmd_check_f)
    with_config(sub.add_parser("check-init", help="check the initial surface")).set_defaults(func=cmd_check_init)

    p = with_config(sub.add_parser("solve", help="run the flow and certify the result"))
    p.add_argument("--force", action="store_true", help="run even if the initial checks fail")
    p.add_argument("--snapshot-times", type=_times, default=None, metavar="T1,T2,...", help="times for OBJ meshes")
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides output.dir)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("selftest", help="run the built-in invariant suites")
    p.add_argument("--mutate", choices=selftest.MUTATIONS, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selftest)

    p = with_config(sub.add_parser("export", help="write mesh and field files for a radius field"))
    p.add_argument("--field", type=Path, default=None, help="theta,phi,rho file (default: configured initial data)")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (cfgmod.ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConeViolation as exc:
        print(f"initial surface is not admissible: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
