"""Command-line front end.

Subcommands wrap the solvers and emit machine-readable JSON/CSV with a
schema_version field.  Exit codes: 0 success, 1 usage/input error,
2 non-convergence, 3 no transition found.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import baselines, rdh, transitions
from .drp import DrpProblem, solve_drp
from .errors import NoTransitionFound, RdpotError
from .probability import (
    CostMatrix,
    Distribution,
    hamming_matrix,
    load_cost_matrix,
    load_distribution,
    squared_error_matrix,
)
from .rdp import (
    RdpProblem,
    SolverConfig,
    solve_rdp_kl,
    solve_rdp_tv,
    solve_rdp_wasserstein,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NONCONV = 2
EXIT_NO_TRANSITION = 3

_LN2 = float(np.log(2.0))


class UsageError(RdpotError):
    pass


def _parse_kv(spec: str) -> dict:
    out = {}
    for part in spec.split(","):
        if "=" not in part:
            raise UsageError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _parse_source(spec: str) -> Distribution:
    """binary:p=<f> | gaussian:mu=,sigma=,S=,delta= | file=<path>."""
    if spec.startswith("binary:"):
        kv = _parse_kv(spec[len("binary:"):])
        p = float(kv["p"])
        if not (0.0 < p < 1.0):
            raise UsageError("binary source needs 0 < p < 1")
        return Distribution.from_probs([p, 1.0 - p])
    if spec.startswith("gaussian:"):
        kv = _parse_kv(spec[len("gaussian:"):])
        gs = baselines.GaussianSpec(
            mu=float(kv.get("mu", 0.0)),
            sigma=float(kv["sigma"]),
            S=float(kv.get("S", 8.0)),
            delta=float(kv.get("delta", 0.5)),
        )
        return baselines.discretize_gaussian(gs)
    if spec.startswith("file="):
        return load_distribution(spec[len("file="):])
    raise UsageError(f"unrecognized source spec {spec!r}")


def _parse_distortion(spec: str, p: Distribution) -> CostMatrix:
    n = len(p)
    if spec == "hamming":
        return hamming_matrix(n, n)
    if spec == "mse":
        return squared_error_matrix(p.support, p.support)
    if spec.startswith("file="):
        return load_cost_matrix(spec[len("file="):])
    raise UsageError(f"unrecognized distortion spec {spec!r}")


def _parse_grid(spec: str):
    """start:stop:count inclusive grid."""
    try:
        start, stop, count = spec.split(":")
        return np.linspace(float(start), float(stop), int(count))
    except ValueError as exc:
        raise UsageError(f"bad grid spec {spec!r}: {exc}") from None


def _solver_config(args) -> SolverConfig:
    return SolverConfig(max_iter=args.max_iter, residual_tol=args.tol)


def _solve_point(measure, p, d, D, P, eps, cfg):
    """Dispatch one solve; the w2 perception cost reuses the distortion matrix."""
    if measure == "w2":
        return solve_rdp_wasserstein(RdpProblem(p, d, D, P, c=d, epsilon=eps), cfg)
    if measure == "tv":
        return solve_rdp_tv(RdpProblem(p, d, D, P, epsilon=eps), cfg)
    if measure == "kl":
        return solve_rdp_kl(RdpProblem(p, d, D, P, epsilon=eps), cfg)
    raise UsageError(f"unknown perception measure {measure!r}")


def _emit(obj, out_path):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w") as f:
            f.write(text + "\n")
    print(text)


def _result_json(res, bits: bool) -> dict:
    obj = {
        "schema_version": SCHEMA_VERSION,
        "rate": res.rate,
        "achieved_D": res.achieved_distortion,
        "achieved_P": res.achieved_perception,
        "iterations": res.iterations,
        "converged": bool(res.converged),
        "residual": res.residual_trace[-1].overall if res.residual_trace else 0.0,
    }
    if bits:
        obj["rate_bits"] = res.rate / _LN2
    return obj


def cmd_solve_rdp(args) -> int:
    p = _parse_source(args.source)
    d = _parse_distortion(args.distortion, p)
    cfg = _solver_config(args)
    res = _solve_point(args.perception, p, d, args.D, args.P, args.eps, cfg)
    _emit(_result_json(res, args.bits), args.out)
    return EXIT_OK if res.converged else EXIT_NONCONV


def cmd_solve_drp(args) -> int:
    p = _parse_source(args.source)
    d = _parse_distortion(args.distortion, p)
    if args.perception != "w2":
        raise UsageError("the DRP command supports the w2 perception measure")
    cfg = _solver_config(args)
    res = solve_drp(DrpProblem(p, d, d, args.R, args.P, epsilon=args.eps), cfg)
    obj = {
        "schema_version": SCHEMA_VERSION,
        "distortion": res.achieved_distortion,
        "achieved_R": res.rate,
        "achieved_P": res.achieved_perception,
        "iterations": res.iterations,
        "converged": bool(res.converged),
        "residual": res.residual_trace[-1].overall if res.residual_trace else 0.0,
    }
    if args.bits:
        obj["achieved_R_bits"] = res.rate / _LN2
    _emit(obj, args.out)
    return EXIT_OK if res.converged else EXIT_NONCONV


def cmd_sweep(args) -> int:
    p = _parse_source(args.source)
    d = _parse_distortion(args.distortion, p)
    cfg = _solver_config(args)
    rows = []
    all_converged = True
    for D in _parse_grid(args.D_grid):
        for P in _parse_grid(args.P_grid):
            try:
                res = _solve_point(args.perception, p, d, float(D), float(P),
                                   args.eps, cfg)
                rows.append([SCHEMA_VERSION, D, P, res.rate,
                             res.achieved_distortion, res.achieved_perception,
                             res.converged])
                all_converged &= res.converged
            except RdpotError:
                rows.append([SCHEMA_VERSION, D, P, "", "", "", False])
                all_converged = False
    writer_target = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(writer_target)
        writer.writerow(["schema_version", "D", "P", "rate",
                         "achieved_D", "achieved_P", "converged"])
        writer.writerows(rows)
    finally:
        if args.out:
            writer_target.close()
    return EXIT_OK


def cmd_transition(args) -> int:
    p = _parse_source(args.source)
    d = _parse_distortion(args.distortion, p)
    cfg = _solver_config(args)
    c = d if args.perception == "w2" else None
    point = None
    if args.mode == "f":
        rows = [(pt.D, pt.P, pt.rate, pt.method)
                for pt in transitions.transition_curve_via_rd(
                    p, d, c, _parse_grid(args.D_grid), measure=args.perception,
                    epsilon=args.eps, cfg=cfg)]
    elif args.mode == "h":
        rows = [(pt.D, pt.P, pt.rate, pt.method)
                for pt in transitions.upper_bound_h(
                    p, d, c, _parse_grid(args.P_grid), measure=args.perception)]
    elif args.mode == "detect":
        samples = []
        for P in _parse_grid(args.P_grid):
            res = solve_drp(DrpProblem(p, d, d, args.R, float(P),
                                       epsilon=args.eps), cfg)
            samples.append(transitions.CurveSample(
                abscissa=float(P), ordinate=res.achieved_distortion,
                meta={"rate": res.rate}))
        try:
            point = transitions.detect_transition_point(samples, args.slope_tol)
        except NoTransitionFound as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NO_TRANSITION
        rows = [(s.ordinate, s.abscissa, s.meta["rate"], "sample") for s in samples]
    else:
        raise UsageError(f"unknown mode {args.mode!r}")

    target = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(target)
        writer.writerow(["schema_version", "D", "P", "rate", "method"])
        for D_val, P_val, rate, method in rows:
            writer.writerow([SCHEMA_VERSION, D_val, P_val, rate, method])
        if point is not None:
            target.write(json.dumps({
                "schema_version": SCHEMA_VERSION,
                "D": point.D, "P": point.P, "rate": point.rate,
                "method": point.method,
            }, sort_keys=True) + "\n")
    finally:
        if args.out:
            target.close()
    if point is not None and args.out:
        print(json.dumps({"schema_version": SCHEMA_VERSION, "D": point.D,
                          "P": point.P, "rate": point.rate,
                          "method": point.method}, sort_keys=True))
    return EXIT_OK


def cmd_rdh(args) -> int:
    img = rdh.load_pgm(args.image)
    _, hist = rdh.prediction_errors(img)
    d = squared_error_matrix(hist.support, hist.support)
    cfg = SolverConfig(max_iter=args.max_iter, residual_tol=args.tol)
    sol = rdh.solve_rdh_rdp(hist, d, d, args.D, args.P, args.eps, cfg)
    marked, psnr_val = rdh.simulate_marking(img, sol, args.seed)
    if args.emit_marked:
        rdh.save_pgm(marked, args.emit_marked)
    _emit({
        "schema_version": SCHEMA_VERSION,
        "embedding_rate_nats": sol.embedding_rate,
        "embedding_rate_bits": sol.embedding_rate / _LN2,
        "achieved_D": sol.achieved_D,
        "achieved_P": sol.achieved_P,
        "psnr": "inf" if psnr_val == rdh.PSNR_INF else psnr_val,
        "converged": bool(sol.converged),
    }, args.out)
    return EXIT_OK if sol.converged else EXIT_NONCONV


def _add_common(sub, drp=False):
    sub.add_argument("--source", required=True,
                     help="binary:p=<f> | gaussian:mu=,sigma=,S=,delta= | file=<path>")
    sub.add_argument("--distortion", default="hamming",
                     help="hamming | mse | file=<path>")
    sub.add_argument("--perception", default="tv", choices=["w2", "tv", "kl"])
    sub.add_argument("--eps", type=float, default=0.01)
    sub.add_argument("--max-iter", dest="max_iter", type=int, default=1000)
    sub.add_argument("--tol", type=float, default=1e-10)
    sub.add_argument("--bits", action="store_true",
                     help="also report rates converted to bits")
    sub.add_argument("--out", default=None, help="write machine output here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rdpot",
                                 description="rate-distortion-perception solvers")
    sp = ap.add_subparsers(dest="command", required=True)

    s = sp.add_parser("solve-rdp", help="rate under distortion/perception budgets")
    _add_common(s)
    s.add_argument("--D", type=float, required=True)
    s.add_argument("--P", type=float, required=True)
    s.set_defaults(fn=cmd_solve_rdp)

    s = sp.add_parser("solve-drp", help="distortion under rate/perception budgets")
    _add_common(s)
    s.add_argument("--R", type=float, required=True)
    s.add_argument("--P", type=float, required=True)
    s.set_defaults(fn=cmd_solve_drp)

    s = sp.add_parser("sweep", help="grid sweep emitting CSV")
    _add_common(s)
    s.add_argument("--D-grid", dest="D_grid", required=True, help="start:stop:count")
    s.add_argument("--P-grid", dest="P_grid", required=True, help="start:stop:count")
    s.set_defaults(fn=cmd_sweep)

    s = sp.add_parser("transition", help="transition curves and detection")
    _add_common(s)
    s.add_argument("--mode", choices=["f", "h", "detect"], required=True)
    s.add_argument("--D-grid", dest="D_grid", default="0:0.1:20")
    s.add_argument("--P-grid", dest="P_grid", default="0:0.2:20")
    s.add_argument("--R", type=float, default=0.05, help="rate for detect mode")
    s.add_argument("--slope-tol", dest="slope_tol", type=float, default=1e-3)
    s.set_defaults(fn=cmd_transition)

    s = sp.add_parser("rdh", help="reversible-data-hiding analysis of a PGM image")
    s.add_argument("--image", required=True)
    s.add_argument("--D", type=float, required=True)
    s.add_argument("--P", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--emit-marked", dest="emit_marked", default=None)
    s.add_argument("--eps", type=float, default=0.01)
    s.add_argument("--max-iter", dest="max_iter", type=int, default=1000)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--out", default=None)
    s.set_defaults(fn=cmd_rdh)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RdpotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
