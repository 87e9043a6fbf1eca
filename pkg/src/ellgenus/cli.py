"""Command-line entry point: ``ellgenus <command> [input] [flags]``.

Exit codes: 0 success or passed verification, 1 input error, 2 failed
verification.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from . import hypersurface_genus as hg
from . import jacobi_ring as jr
from . import series_core as sc
from . import toric_core as tc
from . import toric_genus as tg
from .theta_forms import NumericPoint

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2


class InputError(Exception):
    pass


# --------------------------------------------------------------------------
# Helpers
# --------------------------------------------------------------------------

def _plan(args) -> tg.EnumerationPlan:
    return tg.EnumerationPlan(q_order=args.q_order, y_window=args.y_window, m_bound=args.m_bound,
                              stabilization_shells=args.shells, workers=args.threads)


def _load(path: str, kind: Optional[type] = None):
    try:
        obj = tc.load_fixture(path)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(str(exc)) from exc
    if kind is not None and not isinstance(obj, kind):
        want = "a polytope (vertices)" if kind is tc.ReflexivePair else "a fan (rays, max_cones)"
        raise InputError(f"{path}: expected {want}")
    return obj


def _genus_of(obj, args) -> sc.Genus:
    if isinstance(obj, tc.ReflexivePair):
        return hg.ell_cy(hg.CYFamily(obj, _plan(args)))
    return tg.ell_toric(obj, _plan(args))


def _samples(seed: int, count: int, rank: int) -> List[NumericPoint]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        tau = complex(round(rng.uniform(-0.3, 0.3), 6), round(rng.uniform(0.9, 1.4), 6))
        z = complex(round(rng.uniform(-0.3, 0.3), 6), round(rng.uniform(-0.15, 0.15), 6))
        nu = tuple(complex(round(rng.uniform(-0.3, 0.3), 6), round(rng.uniform(-0.1, 0.1), 6))
                   for _ in range(rank))
        out.append(NumericPoint(tau, z, nu))
    return out


def _text(report) -> str:
    if isinstance(report, dict):
        lines = []
        for k in sorted(report):
            v = report[k]
            lines.append(f"{k}: {json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v}")
        return "\n".join(lines)
    return str(report)


# --------------------------------------------------------------------------
# Commands; each returns (exit code, json object, text)
# --------------------------------------------------------------------------

def cmd_toric_genus(args):
    fan = _load(args.input, tc.Fan)
    g = tg.ell_toric(fan, _plan(args))
    obj = sc.genus_to_json(g)
    text = sc.format_series(g.body)
    if args.ellhat:
        hat = tg.ellhat_toric(fan, _plan(args))
        obj["ellhat"] = sc.series_to_json(hat)
        text += "\nellhat:\n" + sc.format_series(hat)
    return EXIT_OK, obj, text


def cmd_cy_genus(args):
    pair = _load(args.input, tc.ReflexivePair)
    if args.mirror:
        pair = pair.mirror()
    g = hg.ell_cy(hg.CYFamily(pair, _plan(args)))
    return EXIT_OK, sc.genus_to_json(g), sc.format_series(g.body)


def cmd_mirror_check(args):
    pair = _load(args.input, tc.ReflexivePair)
    fam = hg.CYFamily(pair, _plan(args))
    gx = hg.ell_cy(fam)
    gm = hg.ell_cy(hg.mirror(fam))
    reports = [hg.check_mirror_sign(gx, gm), hg.check_mirror_transform(gx, gm)]
    ok = all(r["status"] == "pass" for r in reports)
    obj = {"input": pair.name, "dimension": gx.d, "sign": (-1) ** gx.d, "reports": reports,
           "status": "pass" if ok else "fail"}
    return (EXIT_OK if ok else EXIT_FAIL), obj, _text(obj)


def cmd_elliptic_law(args):
    g = _genus_of(_load(args.input), args)
    rep = hg.elliptic_transform_check(g)
    rep["input"] = g.label
    return (EXIT_OK if rep["status"] == "pass" else EXIT_FAIL), rep, _text(rep)


def cmd_decompose(args):
    g = _genus_of(_load(args.input), args)
    try:
        dec = jr.decompose(g)
    except (jr.Inconsistent, jr.UnderDetermined) as exc:
        obj = {"dimension": g.d, "status": "fail", "error": str(exc)}
        return EXIT_FAIL, obj, _text(obj)
    obj = dec.to_json()
    return EXIT_OK, obj, _text(obj)


def cmd_hodge_slice(args):
    g = _genus_of(_load(args.input), args)
    try:
        hs = jr.hodge_slice(g)
    except jr.PalindromyFailure as exc:
        obj = {"dimension": g.d, "status": "fail", "error": str(exc)}
        return EXIT_FAIL, obj, _text(obj)
    return EXIT_OK, hs.to_json(), " ".join(str(c) for c in hs.chi)


def cmd_identity_cone_factor(args):
    rep = tg.cone_factor_check(args.q_order)
    return (EXIT_OK if rep["status"] == "pass" else EXIT_FAIL), rep, _text(rep)


def cmd_identity_p2(args):
    lhs, rhs = tg.p2_identity_sides(args.q_order)
    first = next((k for k, (a, b) in enumerate(zip(lhs, rhs)) if a != b), None)
    try:
        bij = tg.verify_bijection(args.d_max)
        bij_ok, bij_err = True, None
    except tg.BijectionFailure as exc:
        bij, bij_ok, bij_err = [], False, str(exc)
    ok = first is None and bij_ok
    obj = {"check": "p2-identity", "status": "pass" if ok else "fail", "q_order": args.q_order,
           "first_difference": None if first is None else f"q^{first}",
           "rhs": [str(v) for v in rhs], "bijection_d_max": args.d_max,
           "bijection": "pass" if bij_ok else bij_err, "bijection_checked": len(bij)}
    return (EXIT_OK if ok else EXIT_FAIL), obj, _text(obj)


def cmd_dim_table(args):
    dims = [jr.dim_weak_jacobi(k) for k in range(args.max_k + 1)]
    return EXIT_OK, {"k": list(range(args.max_k + 1)), "dimensions": dims}, " ".join(map(str, dims))


def cmd_rank_analysis(args):
    dims = [args.dim] if args.dim else list(range(2, args.d_max + 1))
    rows = [jr.q0_rank_analysis(d).to_json() for d in dims]
    text = "\n".join(f"d={r['dimension']} forms={r['dim_forms']} rank_q0={r['rank_q0']} "
                     f"{'determined' if r['determined'] else 'deficient'}" for r in rows)
    return EXIT_OK, {"analysis": rows}, text


def cmd_degenerate_pair(args):
    try:
        pair = jr.chi_degenerate_pair(args.dim)
    except jr.NoKernel as exc:
        obj = {"dimension": args.dim, "status": "fail", "error": str(exc)}
        return EXIT_FAIL, obj, _text(obj)
    obj = pair.to_json()
    return EXIT_OK, obj, _text(obj)


def cmd_numeric_jacobi(args):
    pair = _load(args.input, tc.ReflexivePair)
    sigma = tc.subdivide_simplicial(pair, args.order)
    samples = _samples(args.seed, args.samples, pair.dim + 1)
    rep = hg.jacobi_numeric_check(pair, sigma, samples, args.tol)
    rep["seed"] = args.seed
    rep["input"] = pair.name
    return (EXIT_OK if rep["status"] == "pass" else EXIT_FAIL), rep, _text(rep)


def cmd_numeric_gamma02(args):
    fan = _load(args.input, tc.Fan)
    pts = _samples(args.seed, args.samples, fan.rank)
    reports = []
    for p in pts:
        p0 = NumericPoint(p.tau, 0j, p.nu)
        reports.append(tg.gamma02_numeric_check(fan, p0, args.tol))
        reports.append(tg.parity_numeric_check(fan, p0, args.tol))
    ok = all(r["status"] == "pass" for r in reports)
    obj = {"check": "numeric-gamma02", "input": fan.name, "seed": args.seed,
           "status": "pass" if ok else "fail", "reports": reports}
    return (EXIT_OK if ok else EXIT_FAIL), obj, _text(obj)


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q-order", type=int, default=None)
    common.add_argument("--y-window", type=int, default=0)
    common.add_argument("--m-bound", type=int, default=None)
    common.add_argument("--shells", type=int, default=2)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--out", default=None)
    common.add_argument("--threads", type=int, default=1)

    parser = argparse.ArgumentParser(prog="ellgenus", description="Elliptic genera of toric varieties "
                                     "and Calabi-Yau hypersurfaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, input_=False, q_default=4, tol_default=1e-8):
        p = sub.add_parser(name, parents=[common], help=help_)
        if input_:
            p.add_argument("input", help="built-in fixture name or JSON file")
        p.set_defaults(fn=fn, q_default=q_default, tol_default=tol_default)
        return p

    p = add("toric-genus", cmd_toric_genus, "genus of a complete Gorenstein toric variety", True)
    p.add_argument("--ellhat", action="store_true", help="also print the y = -1 normalized genus")
    p = add("cy-genus", cmd_cy_genus, "genus of the anticanonical hypersurface of a reflexive polytope", True)
    p.add_argument("--mirror", action="store_true")
    add("mirror-check", cmd_mirror_check, "sign and transform checks between mirror genera", True)
    add("elliptic-law-check", cmd_elliptic_law, "series-level y -> yq law", True)
    add("decompose", cmd_decompose, "coefficients in the weak Jacobi basis", True)
    add("hodge-slice", cmd_hodge_slice, "q^0 slice of the genus", True)
    add("identity-eq11", cmd_identity_cone_factor, "t-deformed product identity", q_default=10)
    p = add("identity-p2", cmd_identity_p2, "P^2 divisor-sum identity and its bijection", q_default=40)
    p.add_argument("--d-max", type=int, default=40)
    p = add("dim-table", cmd_dim_table, "dimensions of weight-0 weak Jacobi forms")
    p.add_argument("--max-k", type=int, default=6)
    p = add("rank-analysis", cmd_rank_analysis, "rank of the q^0 restriction")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--d-max", type=int, default=15)
    p = add("degenerate-pair", cmd_degenerate_pair, "equal Hodge slices, different genera")
    p.add_argument("--dim", type=int, default=12)
    p = add("numeric-jacobi", cmd_numeric_jacobi, "numeric modular and elliptic laws", True, tol_default=1e-7)
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--order", default="lex", help="subdivision insertion order")
    p = add("numeric-gamma02", cmd_numeric_gamma02, "numeric level-2 law and nu-parity", True)
    p.add_argument("--samples", type=int, default=3)
    return parser


def run(argv: Optional[List[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    if args.q_order is None:
        args.q_order = args.q_default
    if args.tol is None:
        args.tol = args.tol_default
    if args.q_order < 1 or args.tol <= 0 or args.threads < 1:
        print("error: --q-order and --threads must be >= 1 and --tol > 0", file=sys.stderr)
        return EXIT_INPUT
    try:
        code, obj, text = args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (tc.ToricError, tc.Unsupported) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (tg.StabilizationFailure, sc.WindowError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = sc.dumps(obj) if args.format == "json" else text
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
    else:
        print(out, file=stdout)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
