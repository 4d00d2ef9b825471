"""Command-line entry point.

Exit codes: 0 success, 1 generator not admitted, 2 parse error, 3 certificate
failure, 4 numeric domain error, 5 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import dsl
from .errors import (
    CertificateFailed,
    DomainError,
    DslError,
    InvarianceTestFailed,
    NonFinite,
    NotASymmetry,
    UnboundSymbol,
)
from .ibragimov import adjoint_system, conserved_quantity, extend_generator, formal_lagrangian
from .numeric import NumericConfig, integrate, monitor, sample_params, write_csv
from .symmetry import check_symmetry

OK, NOT_ADMITTED, PARSE_ERROR, CERTIFICATE_FAILURE, NUMERIC_ERROR, USAGE_ERROR = range(6)


class UsageError(Exception):
    pass


class SourceUnavailable(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="DSL file describing the system and generators")
    common.add_argument("--system", help="system to use when the file declares several")
    common.add_argument("--generator", action="append", help="restrict to this generator (repeatable)")
    common.add_argument("--format", choices=dsl.FORMATS, default="plain")

    parser = _ArgumentParser(prog="claw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    sub.add_parser("check", parents=[common], help="symmetry admission report per generator")
    sub.add_parser("adjoint", parents=[common], help="adjoint system")
    sub.add_parser("lagrangian", parents=[common], help="formal Lagrangian")
    sub.add_parser("extend", parents=[common], help="generators extended to adjoint variables")
    conserve = sub.add_parser("conserve", parents=[common], help="certified conserved quantities")
    conserve.add_argument("--allow-unverified", action="store_true", help="print quantities whose certificate failed")
    simulate = sub.add_parser("simulate", parents=[common], help="integrate and monitor conservation drift")
    simulate.add_argument("--params", default="", help="k=v,... (missing parameters are sampled from the seed)")
    simulate.add_argument("--init", default="", help="initial values, e.g. u1=980,u2=20,u3=1,v1=1")
    simulate.add_argument("--t0", type=float, default=0.0)
    simulate.add_argument("--t1", type=float, default=10.0)
    simulate.add_argument("--step", type=float, default=1e-3)
    simulate.add_argument("--seed", type=int, default=None, help="parameter sampling seed (default $CLAW_SEED or 0)")
    simulate.add_argument("--probe", action="append", default=[], help="extra expression to monitor")
    simulate.add_argument("--precision", choices=("extended", "double"), default="extended")
    simulate.add_argument("--output", help="CSV path; the drift report then goes to stdout")
    return parser


def _load(args):
    try:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SourceUnavailable(f"{args.input}: cannot read: {exc.strerror or exc}") from None
    doc = dsl.parse(text)
    if not doc.systems:
        raise DslError("no system declared", 1, 1)
    if args.system is None and len(doc.systems) > 1:
        raise UsageError("the file declares several systems; choose one with --system")
    if args.system is not None and args.system not in doc.systems:
        raise UsageError(f"no system named {args.system!r}")
    system = doc.system(args.system)
    generators = doc.generators_for(system.name)
    if args.generator:
        unknown = [g for g in args.generator if g not in generators]
        if unknown:
            raise UsageError(f"unknown generator(s) for {system.name}: {', '.join(unknown)}")
        generators = {g: generators[g] for g in args.generator}
    return system, generators


def _emit(items, fmt, system, out):
    if fmt == "json":
        payload = [dsl.to_json(item, system) for item in items]
        out.write(json.dumps(payload[0] if len(payload) == 1 else payload, indent=2) + "\n")
    else:
        out.write("\n".join(dsl.render(item, fmt, system) for item in items) + "\n")


def _parse_pairs(text, what):
    pairs = {}
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        key, sep, value = chunk.partition("=")
        if not sep:
            raise UsageError(f"malformed {what} entry {chunk!r}; expected name=value")
        try:
            pairs[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"{what} value for {key.strip()!r} is not a number: {value!r}") from None
    return pairs


def cmd_check(args, system, generators, out, err):
    reports = [check_symmetry(system, g) for g in generators.values()]
    _emit(reports, args.format, system, out)
    return OK if all(r.admitted for r in reports) else NOT_ADMITTED


def cmd_adjoint(args, system, generators, out, err):
    _emit([adjoint_system(system)], args.format, system, out)
    return OK


def cmd_lagrangian(args, system, generators, out, err):
    _emit([formal_lagrangian(system)], args.format, system, out)
    return OK


def _admitted(system, generators, err, fmt):
    admitted, code = {}, OK
    for name, g in generators.items():
        report = check_symmetry(system, g)
        if report.admitted:
            admitted[name] = g
        else:
            err.write(dsl.render(report, "plain", system) + "\n")
            code = NOT_ADMITTED
    return admitted, code


def cmd_extend(args, system, generators, out, err):
    admitted, code = _admitted(system, generators, err, args.format)
    extensions = []
    for g in admitted.values():
        try:
            extensions.append(extend_generator(system, g))
        except InvarianceTestFailed as exc:
            err.write(f"{g.name}: {exc}\n")
            code = max(code, CERTIFICATE_FAILURE)
    if extensions:
        _emit(extensions, args.format, system, out)
    return code


def _quantities(system, generators, err, allow_unverified):
    admitted, code = _admitted(system, generators, err, "plain")
    adj = adjoint_system(system)
    quantities = []
    for g in admitted.values():
        try:
            q = conserved_quantity(system, g, adj, strict=False)
        except (InvarianceTestFailed, CertificateFailed) as exc:
            err.write(f"{g.name}: {exc}\n")
            code = max(code, CERTIFICATE_FAILURE)
            continue
        if not q.certified:
            code = max(code, CERTIFICATE_FAILURE)
            err.write(f"{g.name}: on-shell certificate failed, residual {dsl.to_plain(q.certificate.residual, dsl.plain_names(system))}\n")
            if not allow_unverified:
                continue
        quantities.append(q)
    return adj, quantities, code


def cmd_conserve(args, system, generators, out, err):
    _, quantities, code = _quantities(system, generators, err, args.allow_unverified)
    if quantities:
        _emit(quantities, args.format, system, out)
    return code


def cmd_simulate(args, system, generators, out, err):
    import numpy as np

    explicit = bool(args.generator)
    if explicit:
        adj, quantities, code = _quantities(system, generators, err, False)
        if code != OK:
            return code
    else:
        # without a filter, skip generators the system does not admit
        admitted = {n: g for n, g in generators.items() if check_symmetry(system, g).admitted}
        for name in generators.keys() - admitted.keys():
            err.write(f"note: {name} is not admitted; not monitored\n")
        adj, quantities, code = _quantities(system, admitted, err, False)
        if code != OK:
            return code

    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("CLAW_SEED", "0"))
    given = _parse_pairs(args.params, "--params")
    declared = {p.name: p for p in system.params}
    unknown = given.keys() - declared.keys()
    if unknown:
        raise UsageError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
    params = {p: v for p, v in sample_params(system.params, seed).items() if p.name not in given}
    params.update({declared[k]: v for k, v in given.items()})

    init = _parse_pairs(args.init, "--init")
    adjoint_names = [f"v{k}" for k in range(1, system.m + 1)]
    unknown = init.keys() - set(system.state_names) - set(adjoint_names)
    if unknown:
        raise UsageError(f"unknown initial value name(s): {', '.join(sorted(unknown))}")
    missing = [s for s in system.state_names if s not in init]
    if missing:
        raise UsageError(f"missing initial value(s) for {', '.join(missing)}")
    u0 = [init[s] for s in system.state_names]
    v0 = [init.get(v, 1.0) for v in adjoint_names]

    probes = []
    for text in args.probe:
        try:
            probes.append((f"probe {text}", dsl.parse_expression(text, system)))
        except DslError as exc:
            raise UsageError(f"--probe {text!r}: {exc}") from None
    try:
        cfg = NumericConfig(args.t0, args.t1, args.step, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    dtype = np.longdouble if args.precision == "extended" else np.float64
    traj = integrate(system, adj, params, u0, v0, cfg, dtype=dtype)
    report = monitor(traj, [*quantities, *probes])
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            write_csv(traj, fh)
        _emit([report], args.format, system, out)
    else:
        write_csv(traj, out)
        _emit([report], args.format, system, err)
    return OK


COMMANDS = {
    "check": cmd_check,
    "adjoint": cmd_adjoint,
    "lagrangian": cmd_lagrangian,
    "extend": cmd_extend,
    "conserve": cmd_conserve,
    "simulate": cmd_simulate,
}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        system, generators = _load(args)
        return COMMANDS[args.command](args, system, generators, out, err)
    except DslError as exc:
        err.write(f"{args.input}:{exc}\n")
        return PARSE_ERROR
    except SourceUnavailable as exc:
        err.write(f"{exc}\n")
        return PARSE_ERROR
    except UsageError as exc:
        err.write(f"claw: error: {exc}\n")
        return USAGE_ERROR
    except NotASymmetry as exc:
        err.write(f"{exc}\n")
        return NOT_ADMITTED
    except (InvarianceTestFailed, CertificateFailed) as exc:
        err.write(f"{exc}\n")
        return CERTIFICATE_FAILURE
    except (DomainError, NonFinite, UnboundSymbol) as exc:
        err.write(f"numeric error: {exc}\n")
        return NUMERIC_ERROR
    except OSError as exc:
        err.write(f"claw: error: {exc}\n")
        return USAGE_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
