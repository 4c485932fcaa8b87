"""Command line entry point: ``almostpoisson {analyze,simulate,report,presets}``.

Exit codes: 0 success, 2 configuration error, 3 singularity during a run.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import config as cfg
from . import dynamics as dyn
from . import jacobi, presets, report
from .exterior import VectorField, hamiltonian_vector_field
from .framecraft import FrameError, MetricError, NonQuadraticHamiltonianError, SingularEliminationError
from .symexpr import DEFAULT_SEED, EvaluationError, ExprSyntaxError, parse

EXIT_OK, EXIT_CONFIG, EXIT_SINGULAR = 0, 2, 3

_CONTACT_FIELD = ("u1", "u2/(1 + x^2)", "0", "u1*u2*x/(1 + x^2)")


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


def _system_source(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--preset", metavar="NAME", help="built-in system (see `presets`)")
    g.add_argument("--config", metavar="PATH", help="system config file")


def _sampling(p):
    p.add_argument("--samples", type=int, default=jacobi.DEFAULT_POINTS, metavar="N",
                   help="sample points for the pointwise Jacobi test (default %(default)s)")
    p.add_argument("--tol", type=float, default=jacobi.DEFAULT_THRESHOLD, metavar="X",
                   help="relative residual above which no E exists (default %(default)s)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, metavar="N", help="sampling seed")


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="almostpoisson", description="Almost-Poisson brackets of constrained systems.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="print bracket, defects and verdicts")
    _system_source(a)
    _sampling(a)

    r = sub.add_parser("report", help="full report as json or text")
    _system_source(r)
    _sampling(r)
    r.add_argument("--format", default="json", help="json or text (default json)")
    r.add_argument("--out", metavar="PATH", help="write to file instead of stdout")

    s = sub.add_parser("simulate", help="integrate the (compressed) flow and write CSV")
    _system_source(s)
    _sampling(s)
    s.add_argument("--t-end", type=float, dest="t_end")
    s.add_argument("--dt", type=float)
    s.add_argument("--x0", metavar="k=v,...", help="initial value overrides")
    s.add_argument("--reconstruct", action="store_true", help="add fiber columns by quadrature")
    s.add_argument("--rescaled", action="store_true", help="also run the conformally rescaled flow")
    s.add_argument("--oracle-check", action="store_true", dest="oracle_check",
                   help="compare with the closed-form contact solution")
    s.add_argument("--out", metavar="PATH", help="CSV path (default <name>.csv)")

    pr = sub.add_parser("presets", help="list built-in systems")
    pr.add_argument("--dump", metavar="NAME", help="print the config text of one preset")
    return p


def _load(args) -> presets.SystemDefinition:
    if args.preset is not None:
        try:
            return presets.get(args.preset)
        except KeyError as exc:
            raise cfg.ConfigError(exc.args[0]) from None
    return cfg.load(args.config)


def _build(defn) -> presets.BuiltSystem:
    try:
        return presets.build(defn)
    except (FrameError, MetricError, NonQuadraticHamiltonianError, SingularEliminationError,
            ExprSyntaxError, ValueError) as exc:
        raise cfg.ConfigError(f"cannot build system {defn.name!r}: {exc}") from None


def _report(args, fmt: str) -> str:
    system = _build(_load(args))
    rep = report.build_report(system, points=args.samples, threshold=args.tol, seed=args.seed)
    return report.render(rep, fmt)


def cmd_analyze(args, out) -> int:
    out.write(_report(args, "text"))
    return EXIT_OK


def cmd_report(args, out) -> int:
    if args.format not in report.FORMATS:
        raise cfg.ConfigError(f"unsupported format {args.format!r}; choose from {', '.join(report.FORMATS)}")
    text = _report(args, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        out.write(f"wrote {args.out}\n")
    else:
        out.write(text)
    return EXIT_OK


def is_contact_flow(B, H) -> bool:
    names = B.chart.names
    if names != ("x", "y", "u1", "u2"):
        return False
    X = hamiltonian_vector_field(B, H)
    return X.equals(VectorField(B.chart, [parse(c) for c in _CONTACT_FIELD]))


def _oracle_column(traj: dyn.Trajectory) -> np.ndarray:
    x0, y0, z0, a, A = dyn.contact_parameters(traj.point(0))
    z0 = float(traj.extra["z"][0]) if "z" in traj.extra else 0.0
    col = np.empty(len(traj))
    for k in range(len(traj)):
        ref = dyn.contact_oracle(x0, y0, z0, a, A, float(traj.t[k]))
        p = traj.point(k)
        col[k] = max(abs(p[n] - v) for n, v in ref.items() if n in p)
    return col


def cmd_simulate(args, out) -> int:
    defn = _load(args)
    system = _build(defn)
    run = defn.run
    dt = args.dt if args.dt is not None else run.dt
    t_end = args.t_end if args.t_end is not None else run.t_end
    x0 = run.x0_dict()
    if args.x0:
        x0.update(cfg.parse_assignments(args.x0))
    target = system.compressed if system.compressed is not None else system.constrained
    B, H = target.bivector, target.hamiltonian
    missing = [n for n in B.chart.names if n not in x0]
    if missing:
        raise cfg.ConfigError(f"initial value missing for {', '.join(missing)}")
    invariants = {"H": H}
    invariants.update({k: parse(v) for k, v in run.invariants})
    if args.oracle_check and not is_contact_flow(B, H):
        raise cfg.ConfigError("--oracle-check applies only to the Euclidean contact flow")
    path = args.out or f"{defn.name}.csv"
    rules = getattr(target, "reconstruction", {}) if args.reconstruct else {}
    fiber0 = {z: x0.get(z, 0.0) for z in rules}

    try:
        traj = dyn.integrate(B, H, x0, t_end, dt, name=defn.name)
    except dyn.IntegrationSingularityError as exc:
        dyn.write_csv(exc.partial, path)
        out.write(f"singularity: {exc}\npartial trajectory written to {path}\n")
        return EXIT_SINGULAR
    except ValueError as exc:
        raise cfg.ConfigError(str(exc)) from None
    if rules:
        traj = dyn.reconstruct_fiber(traj, rules, fiber0)
    if args.oracle_check:
        traj.extra["oracle_dev"] = _oracle_column(traj)
    dyn.write_csv(traj, path, invariants)
    out.write(f"wrote {path} ({len(traj)} samples, dt = {dt:g}, t_end = {t_end:g})\n")
    out.write(str(dyn.invariant_report(traj, invariants)) + "\n")
    if args.oracle_check:
        dev = dyn.oracle_deviation(traj, z0=fiber0.get("z", 0.0))
        out.write("oracle deviation: " + ", ".join(f"{k}={v:.3e}" for k, v in dev.items()) + "\n")
        out.write(f"max oracle deviation: {float(np.max(traj.extra['oracle_dev'])):.3e}\n")
    if args.rescaled:
        verdict = jacobi.classify(B, points=args.samples, threshold=args.tol, seed=args.seed)
        if verdict.f is None:
            raise cfg.ConfigError(f"--rescaled needs a conformal factor; verdict is {verdict}")
        try:
            resc = dyn.reparametrized_flow(B, H, verdict.f, x0, t_end, dt, name=defn.name)
        except dyn.IntegrationSingularityError as exc:
            out.write(f"singularity in rescaled run: {exc}\n")
            return EXIT_SINGULAR
        t_max = min(t_end, float(resc.t[-1]))
        dev = dyn.rescaling_deviation(traj, resc, t_max)
        rpath = path[:-4] + "_rescaled.csv" if path.endswith(".csv") else path + "_rescaled"
        dyn.write_csv(resc, rpath)
        out.write(f"rescaled run (f = {verdict.f}) written to {rpath}\n")
        out.write(f"t-matched deviation over [0, {t_max:g}]: {dev:.3e}\n")
    return EXIT_OK


def cmd_presets(args, out) -> int:
    if args.dump:
        try:
            out.write(cfg.dumps(presets.get(args.dump)))
        except KeyError as exc:
            raise cfg.ConfigError(exc.args[0]) from None
        return EXIT_OK
    for name in presets.names():
        out.write(f"{name:<24} {presets.get(name).description}\n")
    return EXIT_OK


_COMMANDS = {"analyze": cmd_analyze, "report": cmd_report, "simulate": cmd_simulate, "presets": cmd_presets}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = make_parser().parse_args(argv)
    except _ArgError as exc:
        err.write(f"almostpoisson: error: {exc}\n")
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args, out)
    except cfg.ConfigError as exc:
        err.write(f"almostpoisson: config error: {exc}\n")
        return EXIT_CONFIG
    except EvaluationError as exc:
        err.write(f"almostpoisson: singularity: {exc}\n")
        return EXIT_SINGULAR


if __name__ == "__main__":
    sys.exit(main())
