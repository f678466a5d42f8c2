"""Command-line front door.

Commands: ``suspend``, ``homology``, ``plumb``, ``gon``, ``certify``,
``profile-export``.  Every command prints deterministic JSON (sorted
keys, fixed-format floats).  Exit codes: 0 success, 1 computed failure,
2 usage or parse error, 3 unsupported request.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys

from . import grammar, jsonout, orbitgon, plumbing, riccicert, topology, warpmetric
from .errors import ComputedFailure, InputError, TwistbenchError, Unsupported

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_UNSUPPORTED = 3


def _read_text(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    with open(source, "r", encoding="utf-8") as fh:
        return fh.read()


def _emit(payload, out_path):
    text = jsonout.dumps(payload)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _expr_report(x) -> dict:
    h = topology.homology(x)
    return {
        "expression": topology.render(x),
        "dimension": topology.dim(x),
        "pi1": topology.pi1(x).render(),
        "simply_connected": topology.simply_connected(x),
        "spin": topology.spin_label(topology.spin(x)),
        "homology": [g.render() for g in h],
        "cohomology": [g.render() for g in topology.cohomology(x)],
        "betti": list(topology.betti(x)),
        "euler_characteristic": topology.euler_characteristic(x),
    }


def cmd_suspend(args) -> int:
    expr_text = args.expr if args.expr != "-" else sys.stdin.read().strip()
    x = grammar.parse_manifold(expr_text)
    e = grammar.parse_euler(args.euler)
    result = topology.suspend(x, e)
    _emit(_expr_report(result), args.out)
    return EXIT_OK


def cmd_homology(args) -> int:
    expr_text = args.expr if args.expr != "-" else sys.stdin.read().strip()
    x = grammar.parse_manifold(expr_text)
    if args.decompose:
        x = topology.decompose(x)
    _emit(_expr_report(x), args.out)
    return EXIT_OK


def cmd_plumb(args) -> int:
    g = plumbing.parse_graph(_read_text(args.graph))
    reduced = plumbing.reduce(g)
    boundary = plumbing.boundary(g)
    payload = _expr_report(boundary)
    payload["reduced_edges"] = [[i, j, s] for (i, j, s) in reduced.edges]
    payload["nodes"] = len(g.nodes)
    _emit(payload, args.out)
    return EXIT_OK


def cmd_gon(args) -> int:
    if args.standard is not None:
        g = orbitgon.standard_gon(args.standard)
    else:
        data = json.loads(_read_text(args.gon))
        try:
            g = orbitgon.gon(data["n"], data["labels"])
        except KeyError as exc:
            raise InputError(f"gon JSON needs key {exc}") from exc
    report = orbitgon.validate(g)
    payload = {
        "n": g.n,
        "m": g.m,
        "labels": [list(a) for a in g.labels],
        "validation": report.as_dict(),
    }
    if report.valid:
        payload["b2"] = orbitgon.betti2(g)
        model = orbitgon.unimodular_model(g)
        payload["model"] = model.to_lists()
        payload["model_det"] = model.det()
    _emit(payload, args.out)
    return EXIT_OK if report.valid or args.standard is not None else EXIT_FAIL


_CERTIFY_KEYS = {
    "n", "s0", "connection", "sup_f", "sup_delta_f", "support_lo", "support_hi",
    "ric_min_base", "safety", "target_margin", "tol_glue", "tol_ode",
    "lambda0", "alpha", "cap_width", "tail_width", "origin_eps", "step",
}

_PROFILE_KEYS = {
    "n", "s0", "r", "lambda0", "alpha", "cap_width", "tail_width",
    "origin_eps", "step", "tol_ode",
}


def _load_config(path: str, section: str, allowed: set) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise InputError(f"config file {path!r} not found")
    if section not in parser:
        raise InputError(f"config file needs a [{section}] section")
    out = {}
    for key, value in parser[section].items():
        if key not in allowed:
            raise InputError(f"unknown config key {key!r} in [{section}]")
        out[key] = value
    return out


def _build_params(cfg, n, lam) -> warpmetric.WarpParams:
    def fget(key):
        return float(cfg[key]) if key in cfg else None

    kwargs = {
        "lam0": fget("lambda0"),
        "alpha": fget("alpha"),
        "cap_width": fget("cap_width"),
        "tail_width": fget("tail_width"),
        "origin_eps": fget("origin_eps"),
        "step": fget("step"),
    }
    if "tol_ode" in cfg:
        kwargs["tol_ode"] = float(cfg["tol_ode"])
    return warpmetric.WarpParams(n=n, lam=lam, **kwargs)


def _connection_from(cfg) -> riccicert.ConnectionModel:
    variant = cfg.get("connection", "trivial")
    if variant == "trivial":
        return riccicert.TRIVIAL_CONNECTION
    support = None
    if "support_lo" in cfg or "support_hi" in cfg:
        support = (float(cfg["support_lo"]), float(cfg["support_hi"]))
    return riccicert.ConnectionModel(
        "bounded",
        sup_f=float(cfg.get("sup_f", 0.0)),
        sup_delta_f=float(cfg.get("sup_delta_f", 0.0)),
        support=support,
    )


def cmd_certify(args) -> int:
    import math

    cfg = _load_config(args.config, "certify", _CERTIFY_KEYS)
    try:
        n = int(cfg["n"])
        s0 = float(cfg["s0"])
    except KeyError as exc:
        raise InputError(f"certify config needs key {exc}") from exc
    params = _build_params(cfg, n, math.cos(s0))
    result = riccicert.certify(
        n,
        s0,
        _connection_from(cfg),
        float(cfg.get("ric_min_base", 1.0)),
        params=params,
        target_margin=float(cfg.get("target_margin", 1e-6)),
        safety=float(cfg.get("safety", 0.5)),
        tol_glue=float(cfg.get("tol_glue", 1e-8)),
    )
    _emit(result.to_json_dict(), args.out)
    return EXIT_OK if result.passed() else EXIT_FAIL


def cmd_profile_export(args) -> int:
    import math

    cfg = _load_config(args.config, "profile", _PROFILE_KEYS)
    try:
        n = int(cfg["n"])
        s0 = float(cfg["s0"])
    except KeyError as exc:
        raise InputError(f"profile config needs key {exc}") from exc
    lam = math.cos(s0)
    params = _build_params(cfg, n, lam).resolve()
    w = warpmetric.integrate_core(params)
    w = warpmetric.cap_sine(w, lam, params.cap_width)
    w = warpmetric.flatten_h_tail(w, params.tail_width)
    r = float(cfg.get("r", 0.5))
    eps = min(params.origin_eps, 0.75 * w.cap.blend_start)
    w = warpmetric.smooth_origin(w, r, eps)
    warpmetric.export_profile(w, args.out or sys.stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twistbench",
        description="Twisted-suspension topology and certified warped metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("suspend", help="twisted suspension of an expression")
    p.add_argument("expr", help="manifold expression, or - for stdin")
    p.add_argument("euler", help="twisting class: 0, prim, div(k), [e1,...]")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_suspend)

    p = sub.add_parser("homology", help="homology report for an expression")
    p.add_argument("expr", help="manifold expression, or - for stdin")
    p.add_argument("--decompose", action="store_true", help="rewrite first")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_homology)

    p = sub.add_parser("plumb", help="boundary of a plumbing graph")
    p.add_argument("graph", help="graph file, or - for stdin")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_plumb)

    p = sub.add_parser("gon", help="validate an orbit gon (JSON in)")
    p.add_argument("gon", nargs="?", default="-", help="JSON file, or - for stdin")
    p.add_argument("--standard", type=int, default=None, metavar="L",
                   help="emit the standard gon with b2 = 2L instead")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gon)

    p = sub.add_parser("certify", help="run the metric certification pipeline")
    p.add_argument("config", help="INI config with a [certify] section")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("profile-export", help="write a warp profile as CSV")
    p.add_argument("config", help="INI config with a [profile] section")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_profile_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except Unsupported as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except ComputedFailure as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (InputError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TwistbenchError as exc:
        cause = getattr(exc, "cause", None)
        if isinstance(cause, Unsupported):
            print(f"unsupported: {exc}", file=sys.stderr)
            return EXIT_UNSUPPORTED
        if isinstance(cause, ComputedFailure):
            print(f"failed: {exc}", file=sys.stderr)
            return EXIT_FAIL
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
