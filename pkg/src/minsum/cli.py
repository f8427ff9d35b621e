"""``minsum`` command line.

Exit codes: 0 success, 1 usage or I/O error, 2 ill-posed update,
3 not walk-summable (or not positive definite), 4 iteration limit reached,
5 a walk-sum verification failed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import analyze, compute_gamma_star
from .async_engine import AsyncConfig, run_async
from .decomposition import (
    EdgeParams,
    check_witness,
    construct_witness,
    is_convex_decomposition,
    is_convex_dominated,
    load_params,
)
from .engine import SolverConfig, Status, check_well_posed, run_sync
from .errors import IllPosed, MinSumError, NotWalkSummable
from .generate import MODELS, SIGN_MODES, WEIGHT_MODES, generate
from .model import (
    denormalize_solution,
    fmt,
    format_problem,
    format_trace,
    load_problem,
    normalize,
    validate,
)
from .spectral import spectral_radius
from .walksum import max_nb_depth, verify_nb_identity_from, verify_self_return

EXIT_OK, EXIT_USAGE, EXIT_ILL_POSED, EXIT_NOT_WS, EXIT_MAX_ITER, EXIT_VERIFY = 0, 1, 2, 3, 4, 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with "ill-posed"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _json_safe(v):
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def _dump_json(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n"


def _write(path, text):
    Path(path).write_text(text)


def _load(path):
    raw = load_problem(path)
    p, rec = normalize(raw)
    return raw, p, rec


def _init_params(choice: str, p):
    if choice == "zero":
        return EdgeParams.zeros(p)
    if choice == "gamma-star":
        g = compute_gamma_star(p).gamma_star
        return EdgeParams(g, np.zeros_like(g))
    if choice.startswith("file:") and len(choice) > 5:
        return load_params(choice[5:], p)
    raise UsageError(f"--init must be zero, gamma-star or file:PATH, got {choice!r}")


# --------------------------------------------------------------------------
def cmd_gen(a) -> int:
    p = generate(a.n, a.model, a.target_rho, a.sign_mode, a.seed, a.weights)
    text = format_problem(p)
    if a.out:
        _write(a.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_solve(a) -> int:
    async_flags = [f for f in ("seed", "activation_prob", "max_delay") if getattr(a, f) is not None]
    if a.schedule == "sync" and async_flags:
        flags = ", ".join("--" + f.replace("_", "-") for f in async_flags)
        raise UsageError(f"{flags} require --schedule async")
    raw, p, rec = _load(a.instance)
    v = validate(p)
    if not v.positive_definite:
        print(f"not positive definite: smallest eigenvalue {fmt(v.min_eigenvalue)}", file=sys.stderr)
        return EXIT_NOT_WS
    init = _init_params(a.init, p)
    tol = {k: getattr(a, k) for k in ("tol_gamma", "tol_z", "tol_residual") if getattr(a, k) is not None}
    if a.schedule == "sync":
        if a.max_iter is not None:
            tol["max_iter"] = a.max_iter
        state, trace = run_sync(p, init, SolverConfig.for_problem(p, **tol))
    else:
        kw = dict(tol)
        for f in ("seed", "activation_prob", "max_delay"):
            if getattr(a, f) is not None:
                kw[f] = getattr(a, f)
        if a.max_iter is not None:
            kw["max_ticks"] = a.max_iter
        state, trace = run_async(p, init, AsyncConfig(**kw))

    if a.trace:
        _write(a.trace, format_trace(trace))
    x = denormalize_solution(state.x, rec) if state.x is not None else None
    lines = [f"status: {state.status.value}", f"iterations: {state.t}"]
    if state.status is Status.ILL_POSED:
        i, j = state.ill_posed_edge
        lines.append(f"ill-posed edge: {i} {j} at t={state.ill_posed_at}")
    lines.append(f"residual: {fmt(state.residual)}")
    if x is not None:
        lines += [f"x {i} {fmt(val)}" for i, val in enumerate(x)]
    sys.stdout.write("\n".join(lines) + "\n")
    if a.report:
        _write(a.report, _dump_json({
            "status": state.status.value,
            "iterations": state.t,
            "residual": state.residual,
            "ill_posed_edge": list(state.ill_posed_edge) if state.ill_posed_edge else None,
            "ill_posed_at": state.ill_posed_at,
            "schedule": a.schedule,
            "x": None if x is None else list(x),
        }))
    return {
        Status.CONVERGED: EXIT_OK,
        Status.ILL_POSED: EXIT_ILL_POSED,
        Status.MAX_ITER: EXIT_MAX_ITER,
    }[state.status]


def _yn(b) -> str:
    return "yes" if b else "no"


def cmd_check(a) -> int:
    raw, p, rec = _load(a.instance)
    init = _init_params(a.init, p)
    out = []
    rho = spectral_radius(p.abs_R()) if p.num_edges else 0.0
    out.append(f"rho(|R|): {fmt(rho)}")
    out.append(f"walk-summable: {_yn(rho < 1.0)}")
    ok, cert = is_convex_decomposition(p, init.gamma)
    out.append(f"initial decomposition convex: {_yn(ok)}")
    if not ok:
        out.append(f"  reason: {cert.reason}")
    wp = check_well_posed(p, init.gamma)
    out.append(f"first update well-posed: {_yn(wp.ok)}")
    if not wp.ok:
        i, j = wp.edges[0]
        out.append(f"  ill-posed edge: {i} {j}")
    code = EXIT_OK
    if a.witness:
        w = check_witness(p, load_params(a.witness, p).gamma)
        out.append(f"dominated by supplied witness: {_yn(is_convex_dominated(p, init.gamma, w))}")
    try:
        w = construct_witness(p)
    except NotWalkSummable:
        out.append("dominated by default witness: n/a (no convex decomposition exists)")
        code = EXIT_NOT_WS
    else:
        out.append(f"default witness margin: {fmt(w.margin)}")
        out.append(f"dominated by default witness: {_yn(is_convex_dominated(p, init.gamma, w))}")
    sys.stdout.write("\n".join(out) + "\n")
    return code


def cmd_analyze(a) -> int:
    raw, p, rec = _load(a.instance)
    try:
        rep = analyze(p)
    except NotWalkSummable as exc:
        text = _dump_json({"walk_summable": False, "rho_R": exc.rho})
        print(f"not walk-summable: rho(|R|) = {fmt(exc.rho)}", file=sys.stderr)
        code = EXIT_NOT_WS
    else:
        text = _dump_json({"walk_summable": True, **rep.as_dict()})
        code = EXIT_OK
    sys.stdout.write(text)
    if a.report:
        _write(a.report, text)
    return code


def cmd_walksum(a) -> int:
    raw, p, rec = _load(a.instance)
    g = compute_gamma_star(p).gamma_star
    depth = a.depth if a.depth is not None else max_nb_depth(p)
    sources = range(p.n) if a.source is None else [a.source]
    rows = ["# i,r,lhs,rhs,discrepancy,lhs_bound,rhs_bound,walks,passed"]
    all_ok = True
    for i in sources:
        if not 0 <= i < p.n:
            raise UsageError(f"--source {i} out of range")
        for r in verify_nb_identity_from(p, g, i, depth):
            all_ok &= r.passed
            rows.append(",".join([str(r.i), str(r.r), fmt(r.lhs), fmt(r.rhs), fmt(r.discrepancy),
                                  fmt(r.lhs_bound), fmt(r.rhs_bound), str(r.walks), str(int(r.passed))]))
    if a.self_return is not None:
        rows.append("# i,j,depth,value,error,max_error,passed")
        for i, j in p.directed_edges():
            s = verify_self_return(p, g, i, j, a.self_return)
            passed = "" if s.passed is None else str(int(s.passed))
            all_ok &= s.passed is not False
            rows.append(",".join([str(i), str(j), str(s.depth), fmt(s.value), fmt(s.error),
                                  fmt(s.max_error), passed]))
    text = "\n".join(rows) + "\n"
    sys.stdout.write(text)
    if a.report:
        _write(a.report, text)
    return EXIT_OK if all_ok else EXIT_VERIFY


# --------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="minsum", description="Min-sum message passing for quadratic problems.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a walk-summable instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--model", choices=MODELS, required=True)
    g.add_argument("--target-rho", type=float, required=True)
    g.add_argument("--sign-mode", choices=SIGN_MODES, default="attractive")
    g.add_argument("--weights", choices=WEIGHT_MODES, default="random")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output path (default: stdout)")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run min-sum on an instance")
    s.add_argument("instance")
    s.add_argument("--schedule", choices=("sync", "async"), default="sync")
    s.add_argument("--init", default="zero", help="zero | gamma-star | file:PATH")
    s.add_argument("--max-iter", type=int, help="iterations (sync) or ticks (async)")
    s.add_argument("--tol-gamma", type=float)
    s.add_argument("--tol-z", type=float)
    s.add_argument("--tol-residual", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--activation-prob", type=float)
    s.add_argument("--max-delay", type=int)
    s.add_argument("--trace", help="write the per-iteration trace CSV here")
    s.add_argument("--report", help="write a JSON summary here")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="certify an initial decomposition")
    c.add_argument("instance")
    c.add_argument("--init", default="zero", help="zero | gamma-star | file:PATH")
    c.add_argument("--witness", help="parameter file with a witness in its g records")
    c.set_defaults(func=cmd_check)

    n = sub.add_parser("analyze", help="fixed-point and spectral analysis as JSON")
    n.add_argument("instance")
    n.add_argument("--report", help="also write the JSON here")
    n.set_defaults(func=cmd_analyze)

    w = sub.add_parser("walksum", help="verify walk-sum identities")
    w.add_argument("instance")
    w.add_argument("--depth", type=int, help="non-backtracking enumeration depth")
    w.add_argument("--source", type=int, help="only walks from this vertex")
    w.add_argument("--self-return", type=int, metavar="DEPTH",
                   help="also run the self-return recursion to DEPTH")
    w.add_argument("--report", help="also write the table here")
    w.set_defaults(func=cmd_walksum)
    return ap


def main(argv=None) -> int:
    try:
        a = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error already reported
        return exc.code
    try:
        return a.func(a)
    except UsageError as exc:
        print(f"minsum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotWalkSummable as exc:
        print(f"minsum: {exc}", file=sys.stderr)
        return EXIT_NOT_WS
    except IllPosed as exc:
        print(f"minsum: {exc}", file=sys.stderr)
        return EXIT_ILL_POSED
    except (MinSumError, ValueError, OSError) as exc:
        print(f"minsum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
