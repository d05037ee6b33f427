"""Command-line driver: `supineq <command> ...` prints a JSON report.

Exit codes: 0 certified (or success), 2 not certified / not converged,
3 inadmissible exponents, 1 any other error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, cases, curvature
from .gridfn import GridError, GridFunction, lp_norm
from .rearrange import steiner_symmetrize, symmetric_rearrange
from .supfunc import (DegenerateWarning, ExponentSpec, Family, bilinear_sup,
                      classify_exponents, det_sup, forced_gamma, product_sup)
from .symmetrize import bilinear_iterate, multilinear_iterate, trace_csv, trace_lines

EXIT_OK, EXIT_ERROR, EXIT_NOT_CERTIFIED, EXIT_INADMISSIBLE = 0, 1, 2, 3
DEFAULT_SEED = 0


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _clean(obj):
    """Make a report strictly JSON: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _exponent(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    return x


def _load(path: str) -> GridFunction:
    try:
        return GridFunction.from_json(Path(path).read_text())
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise CliError(f"cannot read function file {path}: {e}")


def _truncation(f: GridFunction, label: str) -> list[str]:
    v = np.asarray(f.values)
    edge = np.zeros(v.shape, dtype=bool)
    for a in range(v.ndim):
        idx = [slice(None)] * v.ndim
        idx[a] = 0
        edge[tuple(idx)] = True
        idx[a] = -1
        edge[tuple(idx)] = True
    if np.any(v[edge] > 0):
        return [f"truncation: {label} is nonzero on the box boundary; mass outside the box is cut off"]
    return []


def _zeroed(f: GridFunction, label: str) -> list[str]:
    z = f.meta.get("zeroed_cells", 0)
    return [f"zeroed cells: {label} has {z} cells zeroed on singular sets"] if z else []


def _report(command: str, params: dict, seed: int, **fields) -> dict:
    base = {"command": command, "params": params, "lhs": None, "rhs_lower": None,
            "rhs_center": None, "rhs_upper": None, "constant": None, "ratio": None,
            "certified": False, "argmax": None, "warnings": [], "seed": seed,
            "version": __version__, "status": "ok"}
    base.update(fields)
    return base


# ------------------------------------------------------------------ verify

def cmd_verify(args) -> tuple[dict, int]:
    form = args.form
    if form == "bilinear":
        if not args.f:
            raise CliError("verify bilinear needs --f")
        fs = [_load(args.f), _load(args.g) if args.g else None]
        fs[1] = fs[1] if fs[1] is not None else fs[0]
        p = args.p if args.p is not None else 2.0
        ps = [p, args.q if args.q is not None else p]
    else:
        if not args.fs:
            raise CliError(f"verify {form} needs --fs")
        fs = [_load(x) for x in args.fs]
        ps = list(args.p_list) if args.p_list else [args.p if args.p is not None else 2.0] * len(fs)
    if len(ps) != len(fs):
        raise CliError("one exponent per function")
    n = fs[0].dim
    if args.n is not None and args.n != n:
        raise CliError(f"--n {args.n} does not match the function files (dimension {n})")
    if any(f.dim != n for f in fs):
        raise CliError("all functions must share one dimension")

    fam = Family(form)
    r = None
    if fam == Family.PRODUCT:
        if args.r is None:
            raise CliError("verify product needs --r")
        try:
            r = json.loads(args.r)
        except json.JSONDecodeError as e:
            raise CliError(f"--r is not valid JSON: {e}")
        r = tuple(tuple(float(x) for x in row) for row in r)
    gamma = None
    gamma_auto = args.gamma in (None, "auto")
    if fam != Family.PRODUCT:
        probe = ExponentSpec(fam, n, tuple(ps))
        if gamma_auto:
            gamma = forced_gamma(probe)
        else:
            gamma = _exponent(args.gamma)
    spec = ExponentSpec(fam, n, tuple(ps), gamma, r)
    cls = classify_exponents(spec)
    params = {"form": form, "n": n, "p": ps, "gamma": gamma, "r": r,
              "gamma_auto": gamma_auto, "mode": args.mode,
              "files": [args.f, args.g] if form == "bilinear" else list(args.fs)}
    classification = {"status": cls.status, "violations": list(cls.violations),
                      "detail": cls.detail}
    if cls.status == "boundary_violation":
        classification["counterexample"] = _COUNTEREXAMPLE_FOR[fam]
        return _report("verify", params, args.seed, status="inadmissible",
                       classification=classification), EXIT_INADMISSIBLE
    warn = []
    if cls.status == "homogeneity_violation":
        if gamma_auto:
            return _report("verify", params, args.seed, status="inadmissible",
                           classification=classification), EXIT_INADMISSIBLE
        warn.append(f"homogeneity: {cls.detail}; no constant can hold for all functions")
    for j, f in enumerate(fs, 1):
        warn += _truncation(f, f"f{j}") + _zeroed(f, f"f{j}")

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateWarning)
        if fam == Family.BILINEAR:
            res = bilinear_sup(fs[0], fs[1], gamma, args.mode, args.threads)
        elif fam == Family.DETERMINANT:
            res = det_sup(fs, gamma, args.mode, args.threads)
        else:
            res = product_sup(fs, r, args.mode, args.threads)
    warn += sorted({f"degenerate: {w.message}" for w in caught})

    lhs = math.prod(lp_norm(f, pj) for f, pj in zip(fs, ps))
    constant, kind = _constant(args.constant, fam, n, ps, gamma, cls.admissible)
    if constant is None:
        warn.append("no constant available for these exponents; pass --constant")
    fields = {"lhs": lhs, "rhs_lower": res.lower, "rhs_center": res.center,
              "rhs_upper": res.upper, "constant": constant, "constant_kind": kind,
              "argmax": res.to_dict()["argmax"], "classification": classification}
    if res.vacuous:
        fields.update(status="vacuous", certified=constant is not None and lhs == 0,
                      warnings=warn + ["vacuous: the sup-functional vanishes"])
        return _report("verify", params, args.seed, **fields), EXIT_OK if fields["certified"] else EXIT_NOT_CERTIFIED
    ratio = lhs / res.lower if res.lower > 0 else math.inf
    certified = constant is not None and lhs <= constant * res.lower
    fields.update(ratio=ratio, certified=certified, warnings=warn)
    return _report("verify", params, args.seed, **fields), EXIT_OK if certified else EXIT_NOT_CERTIFIED


# the family in `cases` that shows each boundary case fails
_COUNTEREXAMPLE_FOR = {Family.BILINEAR: "linf", Family.DETERMINANT: "boundary-det",
                       Family.PRODUCT: "product"}


def _constant(user, fam: Family, n: int, ps, gamma, admissible: bool):
    if user is not None:
        return user, "user"
    if not admissible:
        return None, None
    if fam == Family.BILINEAR:
        p, q = ps
        if p == q:
            return cases.sharp_constant("bilinear-rn", p, n).value, "sharp"
        return cases.bilinear_proof_constant(p, q, n), "proof"
    if fam == Family.DETERMINANT and len(set(ps)) == 1:
        return cases.sharp_constant("multilinear-rn", ps[0], n).value, "sharp"
    return None, None


# --------------------------------------------------------------- extremize

def cmd_extremize(args) -> tuple[dict, int]:
    if not args.f:
        raise CliError("extremize needs --f")
    f = _load(args.f)
    p = args.p if args.p is not None else 2.0
    if not 0 < p < math.inf:
        raise CliError("p must be positive and finite")
    common = dict(max_iter=args.max_iter, tol=args.tol, track_sup=not args.no_sup,
                  threads=args.threads)
    if args.family == "bilinear":
        res = bilinear_iterate(f, p, **common)
    else:
        res = multilinear_iterate(f, p, alpha=args.alpha, **common)
    if args.trace:
        Path(args.trace).write_text(trace_lines(res.trace))
    if args.csv:
        Path(args.csv).write_text(trace_csv(res.trace))
    if args.save_f:
        Path(args.save_f).write_text(res.function.to_json())
    last = res.trace[-1]
    params = {"family": args.family, "p": p, "n": f.dim, "alpha": args.alpha,
              "tol": args.tol, "max_iter": args.max_iter, "file": args.f}
    warn = list(res.warnings) + _truncation(res.function, "final iterate")
    report = _report("extremize", params, args.seed, lhs=last.norm, rhs_upper=last.sup,
                     constant=res.c, warnings=warn, status=res.status,
                     converged=res.converged, iterations=last.k, final_dist=last.dist,
                     trace=[json.loads(t.to_json()) for t in res.trace] if args.inline_trace else None)
    return report, EXIT_OK if res.converged else EXIT_NOT_CERTIFIED


# ---------------------------------------------------------------- wrappers

def cmd_constants(args) -> tuple[dict, int]:
    p = args.p if args.p is not None else 2.0
    n = args.n if args.n is not None else 1
    fams = [args.family] if args.family != "all" else [f.value for f in cases.ConstantFamily]
    out = [cases.sharp_constant(fam, p, n).to_dict() for fam in fams]
    fields = {"constants": out, "constant": out[0]["value"] if len(out) == 1 else None}
    return _report("constants", {"family": args.family, "p": p, "n": n}, args.seed, **fields), EXIT_OK


def cmd_counterexample(args) -> tuple[dict, int]:
    kw = {"N": args.N or (10, 100, 1000)}
    if args.kind in ("endpoint-bilinear", "linf"):
        kw["p"] = args.p if args.p is not None else 2.0
    if args.kind == "boundary-det" and args.gamma not in (None, "auto"):
        kw["gamma"] = _exponent(args.gamma)
    if args.kind == "product" and args.r is not None:
        kw["r"] = json.loads(args.r)
    exp = cases.counterexample(args.kind, **kw)
    rec = exp.to_dict()
    params = rec.pop("params")
    return _report("counterexample", {"kind": args.kind, **params}, args.seed,
                   record=rec, status="ok"), EXIT_OK


def cmd_rearrange(args) -> tuple[dict, int]:
    if not args.f:
        raise CliError("rearrange needs --f")
    f = _load(args.f)
    if args.mode == "steiner":
        if args.axis is None:
            raise CliError("steiner mode needs --axis")
        g = steiner_symmetrize(f, args.axis, refine=args.refine)
    else:
        g = symmetric_rearrange(f, refine=args.refine)
    if args.save_f:
        Path(args.save_f).write_text(g.to_json())
    p = args.p if args.p is not None else 2.0
    a = np.sort(np.repeat(f.flat, g.size // f.size))
    b = np.sort(g.flat)
    equimeasurable = bool(np.array_equal(a, b)) and math.isclose(
        f.cell_volume, g.cell_volume * g.size / f.size, rel_tol=1e-12)
    params = {"mode": args.mode, "axis": args.axis, "refine": args.refine, "file": args.f}
    report = _report("rearrange", params, args.seed, lhs=lp_norm(f, p),
                     status="ok" if equimeasurable else "not equimeasurable",
                     equimeasurable=equimeasurable, norm_in=lp_norm(f, p),
                     norm_out=lp_norm(g, p), p=p, output=g.to_dict() if not args.save_f else args.save_f)
    return report, EXIT_OK if equimeasurable else EXIT_ERROR


def cmd_probe(args) -> tuple[dict, int]:
    seed = args.seed
    if args.kind == "curvature":
        rep = curvature.curvature_probe(args.measure, args.k, args.alpha if args.alpha is not None else 1.0,
                                        trials=args.trials, n=args.n or 2, seed=seed)
        fields = {"probe": rep.to_dict(), "growth": rep.growth}
    elif args.kind == "ellipsoid-det":
        lengths = args.lengths or [1.0, 1.0]
        e = curvature.Ellipsoid.axis_aligned(lengths)
        best, ratio = curvature.ellipsoid_det_sup(e, args.k, samples=args.samples or 2000, seed=seed)
        fields = {"probe": {"lengths": lengths, "k": args.k, "det_sup": best,
                            "content": curvature.k_content(e, args.k), "ratio": ratio}}
    else:
        balls = [curvature.Ball((0.0, 0.0), 1.0), curvature.Ball((0.0, 0.0), 1.0)]
        base = (args.base[0], args.base[1]) if args.base else None
        rows = []
        for d in args.delta or [0.1, 0.03, 0.01, 0.003]:
            est = curvature.sublevel_tuple_measure(balls, d, samples=args.samples or 10**6,
                                                   seed=seed, base=base)
            rows.append({"delta": d, "measure": est.value, "stderr": est.stderr,
                         "per_delta": est.value / d})
        fields = {"probe": {"sets": "two unit discs", "base": base, "rows": rows}}
    return _report("probe", {"kind": args.kind, **{k: v for k, v in vars(args).items()
                                                   if k not in ("func", "command", "kind", "out", "threads")}},
                   seed, **fields), EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="supineq", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", help="also write the report here")

    v = sub.add_parser("verify", help="compare norms with the sup-functional")
    v.add_argument("form", choices=["bilinear", "det", "product"])
    v.add_argument("--f")
    v.add_argument("--g")
    v.add_argument("--fs", nargs="+")
    v.add_argument("--p", type=_exponent)
    v.add_argument("--q", type=_exponent)
    v.add_argument("--p-list", type=_exponent, nargs="+")
    v.add_argument("--gamma", default="auto", help="a number or 'auto'")
    v.add_argument("--r", help="JSON matrix of pair exponents")
    v.add_argument("--n", type=int)
    v.add_argument("--mode", choices=["lower", "center", "upper"], default="lower")
    v.add_argument("--constant", type=float)
    common(v)
    v.set_defaults(func=cmd_verify)

    x = sub.add_parser("extremize", help="run a competing-symmetries iteration")
    x.add_argument("--family", choices=["bilinear", "multilinear"], default="bilinear")
    x.add_argument("--f")
    x.add_argument("--p", type=_exponent)
    x.add_argument("--alpha", type=float, default=1.0)
    x.add_argument("--tol", type=float, default=1e-2)
    x.add_argument("--max-iter", type=int, default=50)
    x.add_argument("--trace", help="write the trace as JSON lines")
    x.add_argument("--csv", help="write the trace as CSV")
    x.add_argument("--save-f", help="write the final iterate as JSON")
    x.add_argument("--inline-trace", action="store_true")
    x.add_argument("--no-sup", action="store_true", help="skip sup tracking")
    common(x)
    x.set_defaults(func=cmd_extremize)

    c = sub.add_parser("constants", help="closed-form constants")
    c.add_argument("--family", default="all",
                   choices=["all"] + [f.value for f in cases.ConstantFamily])
    c.add_argument("--p", type=_exponent)
    c.add_argument("--n", type=int)
    common(c)
    c.set_defaults(func=cmd_constants)

    ce = sub.add_parser("counterexample", help="run a counterexample family")
    ce.add_argument("kind", choices=sorted(cases.COUNTEREXAMPLES))
    ce.add_argument("--N", type=float, nargs="+")
    ce.add_argument("--p", type=_exponent)
    ce.add_argument("--gamma")
    ce.add_argument("--r")
    common(ce)
    ce.set_defaults(func=cmd_counterexample)

    ra = sub.add_parser("rearrange", help="symmetric or Steiner rearrangement")
    ra.add_argument("--f")
    ra.add_argument("--mode", choices=["symmetric", "steiner"], default="symmetric")
    ra.add_argument("--axis", type=int)
    ra.add_argument("--refine", type=int, default=1)
    ra.add_argument("--p", type=_exponent)
    ra.add_argument("--save-f")
    common(ra)
    ra.set_defaults(func=cmd_rearrange)

    pr = sub.add_parser("probe", help="curvature and sublevel probes")
    pr.add_argument("kind", choices=["curvature", "ellipsoid-det", "sublevel"])
    pr.add_argument("--measure", choices=[m.value for m in curvature.Measure], default="lebesgue")
    pr.add_argument("--k", type=int, default=2)
    pr.add_argument("--alpha", type=float)
    pr.add_argument("--n", type=int)
    pr.add_argument("--trials", type=int, default=1000)
    pr.add_argument("--lengths", type=float, nargs="+")
    pr.add_argument("--samples", type=int)
    pr.add_argument("--delta", type=float, nargs="+")
    pr.add_argument("--base", type=float, nargs=2)
    common(pr)
    pr.set_defaults(func=cmd_probe)
    return top


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise CliError("--threads must be at least 1")
        report, code = args.func(args)
    except (CliError, GridError, ValueError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_ERROR
    text = dumps(report)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
