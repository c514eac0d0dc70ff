"""Command-line entry point: ``horomax <subcommand> ...``.

Exit codes: 0 decided, 1 input error, 2 undecided or inconclusive.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import collapse_lab as cl
from . import diagonal_domain as dd
from . import free_group_tree as ft
from . import max_boundary as mb
from . import spectra as sp
from . import tree_fibres as tf
from .spaces import H2Space, TreeSpace, space_from_name, to_json_value

EXIT_OK, EXIT_INPUT, EXIT_UNDECIDED = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# output helpers


def _meta(args) -> dict:
    return {"tool": "horomax", "version": __version__, "command": args.command, "seed": args.seed}


def _csv_text(args, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# horomax {__version__} command={args.command} seed={args.seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Fraction):
        return str(v)
    if v is None:
        return ""
    return v


def _json_text(args, payload: dict) -> str:
    return json.dumps({"meta": _meta(args), **payload}, indent=2, sort_keys=True,
                      default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if hasattr(o, "to_json"):
        return o.to_json()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _float_clean(x):
    x = float(x)
    return "inf" if math.isinf(x) else x


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc


def _parse_json_arg(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what} must be JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# sequences and points from CSV


def _point_columns(space, prefix: str) -> list[str]:
    if isinstance(space, H2Space):
        return [f"{prefix}_u", f"{prefix}_v"]
    return [f"{prefix}_vertex", f"{prefix}_edge", f"{prefix}_offset"]


def _point_from_row(space, row: dict, prefix: str):
    if isinstance(space, H2Space):
        return space.point_from_json([float(row[f"{prefix}_u"]), float(row[f"{prefix}_v"])])
    edge = row.get(f"{prefix}_edge") or None
    off = row.get(f"{prefix}_offset") or "0"
    return space.point_from_json({"vertex": row[f"{prefix}_vertex"] or "", "edge": edge,
                                  "offset": off})


def read_product_csv(path: str, s1, s2) -> list[mb.ProductPoint]:
    try:
        text = Path(path).read_text()
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {path}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    need = _point_columns(s1, "x") + _point_columns(s2, "y")
    if reader.fieldnames is None or any(c not in reader.fieldnames for c in need
                                        if not c.endswith(("_edge", "_offset"))):
        raise InputError(f"{path}: header must contain {need}")
    try:
        return [mb.ProductPoint(_point_from_row(s1, r, "x"), _point_from_row(s2, r, "y"))
                for r in reader]
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: bad row: {exc}") from exc


def write_product_csv(seq, s1, s2) -> str:
    """CSV (without the comment line) accepted by ``classify``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_point_columns(s1, "x") + _point_columns(s2, "y"))
    for p in seq:
        row = []
        for space, pt in ((s1, p.x), (s2, p.y)):
            if isinstance(space, H2Space):
                row += [repr(pt.u), repr(pt.v)]
            else:
                row += [pt.vertex, pt.edge or "", str(pt.offset)]
        w.writerow(row)
    return buf.getvalue()


def _base_pair(args, s1, s2) -> mb.BasePair:
    if not args.base:
        return mb.BasePair(s1.origin, s2.origin)
    obj = _parse_json_arg(args.base, "--base")
    if not isinstance(obj, list) or len(obj) != 2:
        raise InputError("--base must be a JSON list [point1, point2]")
    try:
        return mb.BasePair(s1.point_from_json(obj[0]), s2.point_from_json(obj[1]))
    except ValueError as exc:
        raise InputError(f"--base: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_classify(args) -> int:
    s1 = space_from_name(args.space, args.rank)
    s2 = space_from_name(args.space2 or args.space, args.rank)
    base = _base_pair(args, s1, s2)
    seq = read_product_csv(args.input, s1, s2)
    prod = mb.MaxProduct(s1, s2)
    params = mb.ClassifyParams(tail_fraction=args.tail, gap_tol=args.tol,
                               gap_threshold=args.gap_threshold,
                               direction_tol=args.direction_tol,
                               divergence_radius=args.divergence_radius)
    try:
        res = prod.classify_sequence(seq, base, params)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    gaps = [float(g) for g in prod.gaps(seq, base)]
    decided = not isinstance(res, mb.Undecided)
    if args.format == "csv":
        rows = [(i + 1, g) for i, g in enumerate(gaps)]
        text = _csv_text(args, ["index", "gap"], rows)
        text += f"# result {json.dumps(res.to_json(), sort_keys=True, default=_json_default)}\n"
    else:
        text = _json_text(args, {"result": res.to_json(), "decided": decided,
                                 "n_samples": len(seq), "last_gap": gaps[-1]})
    _emit(args, text)
    if args.plot:
        from . import plotting
        start = min(int(math.floor(len(seq) * (1 - args.tail))), len(seq) - 2)
        plotting.plot_gaps(gaps, start, json.dumps(res.to_json(), default=_json_default)[:90],
                           args.plot)
    return EXIT_OK if decided else EXIT_UNDECIDED


def cmd_fibre(args) -> int:
    try:
        kind = tf.parse_base_kind(args.base_kind, args.L)
        g = tf.build_fibre(args.arity, kind, Fraction(args.radius))
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(str(exc)) from exc
    report = tf.validate_fibre(g)
    if args.format == "dot":
        text = f"// horomax {__version__} command=fibre seed={args.seed}\n" + g.to_dot()
    elif args.format == "csv":
        text = _csv_text(args, ["source", "target", "length", "source_time", "target_time"],
                         [(i, j, L, g.times[i], g.times[j]) for i, j, L in g.edges])
    else:
        deg = g.degrees()
        text = _json_text(args, {"graph": g.to_json_obj(), "validation": str(report),
                                 "root_degree": deg[g.root],
                                 "interior_degrees": sorted({deg[i] for i in g.interior()})})
    _emit(args, text)
    if args.plot:
        from . import plotting
        plotting.plot_fibre(g, args.plot)
    return EXIT_OK if report.ok else EXIT_UNDECIDED


def cmd_collapse(args) -> int:
    if args.grid:
        s_vals, th_vals = cl.default_grid(args.grid, args.s_max)
    else:
        s_vals, th_vals = [args.s], [args.theta]
    try:
        if args.t_values:
            ts = [float(t) for t in args.t_values.split(",")]
            rows = []
            for s in s_vals:
                for th in th_vals:
                    cfg = cl.CollapseConfig(float(s), float(th), args.tmax)
                    for t in ts:
                        dp, dm = cl.dplus_dminus(cfg, t)
                        pred = cl.predicted_limit(cfg)
                        rows.append(cl.SweepRow(cfg.s, cfg.theta, t, dp - dm, pred,
                                                abs(dp - dm - pred), cl.convergence_rate(cfg)))
        else:
            rows = cl.collapse_sweep(s_vals, th_vals, args.tmax)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    header = ["s", "theta", "t", "gap", "predicted", "error", "rate"]
    table = [(r.s, r.theta, r.t, r.gap, r.predicted, r.error, r.rate) for r in rows]
    if args.format == "json":
        text = _json_text(args, {"rows": [dict(zip(header, map(_float_clean_nan, r)))
                                          for r in table],
                                 "max_error": max(r.error for r in rows)})
    else:
        text = _csv_text(args, header, table)
    _emit(args, text)
    if args.plot:
        from . import plotting
        plotting.plot_collapse(rows, args.plot)
    return EXIT_OK


def _float_clean_nan(x):
    x = float(x)
    if math.isnan(x):
        return None
    return "inf" if math.isinf(x) else x


def _load_rep(path: str) -> sp.Representation:
    try:
        return sp.representation_from_json(_load_json(path))
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def cmd_spectra(args) -> int:
    r1, r2 = _load_rep(args.rep1), _load_rep(args.rep2)
    if r1.rank != r2.rank:
        raise InputError("representations have different ranks")
    table = sp.spectrum_table(r1, r2, args.cap)
    tol = args.tol if args.tol is not None else (
        0.0 if r1.space.exact and r2.space.exact else 1e-6)
    verdict = sp.spectrum_equality_test(table, tol)
    coarse = sp.coarse_equivalence_estimate(r1, r2, args.cap)
    if args.format == "json":
        text = _json_text(args, {"verdict": verdict.to_json(),
                                 "coarse": {"c_est": coarse.c_est, "witness": list(coarse.witness),
                                            "cap": coarse.cap},
                                 "rows": [{"word": w, "tau1": t1, "tau2": t2, "diff": d}
                                          for w, t1, t2, d in table.to_csv_rows()]})
    else:
        text = _csv_text(args, ["word", "tau1", "tau2", "abs_diff"], table.to_csv_rows())
        text += (f"# verdict {'PASS' if verdict.passed else 'FAIL'} max_diff={verdict.max_diff!r} "
                 f"witness={verdict.witness or ''} tol={tol!r} cap={args.cap} "
                 f"c_est={coarse.c_est!r}\n")
    _emit(args, text)
    if args.plot:
        from . import plotting
        plotting.plot_spectrum(table, args.plot)
    return EXIT_OK


def _load_group(args):
    rep = _load_rep(args.group)
    spec = dd.GroupSpec(rep.space, [rep.images[c] for c in sorted(rep.images)], args.cap)
    return spec, rep


def _load_seeds(args, space, rng) -> list[mb.ProductPoint]:
    if args.seeds:
        return read_product_csv(args.seeds, space, space)
    # deterministic default: the diagonal seed at the base plus two random pairs
    pts = [mb.ProductPoint(space.origin, space.origin)]
    for _ in range(2):
        if isinstance(space, H2Space):
            from . import hyperbolic_plane as hp
            mk = lambda: hp.point_toward(space.origin, hp.HBoundary(rng.uniform(0, 2 * math.pi)),
                                         rng.uniform(0.1, 1.0))
        else:
            letters = ft.alphabet(space.rank)
            mk = lambda: ft.vertex("".join(rng.choice(letters) for _ in range(2)), space.rank)
        pts.append(mb.ProductPoint(mk(), mk()))
    return pts


def cmd_limitset(args) -> int:
    spec, rep = _load_group(args)
    rng = np.random.default_rng(args.seed)
    seeds = _load_seeds(args, spec.space, rng)
    base = mb.BasePair(rep.base, rep.base)
    rep_out = dd.sample_large_limit_set(spec, seeds, base, word_len=args.word_len,
                                        resolution=args.resolution)
    rows = []
    for r in rep_out.records:
        res = r.result
        kind = type(res).__name__.lower()
        xi = to_json_value(res.xi) if isinstance(res, (mb.Regular, mb.Singular)) else None
        xi2 = to_json_value(res.xi2) if isinstance(res, mb.Regular) else None
        c = res.c if isinstance(res, mb.Regular) else None
        rows.append({"word": r.word, "seed": r.seed, "powers": r.power_max, "kind": kind,
                     "xi": xi, "xi2": xi2, "c": c, "predicted_c": r.predicted.c})
    diag = all(isinstance(r.result, mb.Regular)
               and spec.space.boundary_equal(r.result.xi, r.result.xi2, args.resolution)
               for r in rep_out.records)
    if args.format == "json":
        text = _json_text(args, {"points": rows, "all_diagonal_regular": diag,
                                 "max_gap_excess": rep_out.max_gap_excess,
                                 "gap_checks": rep_out.n_gap_checks,
                                 "resolution": args.resolution,
                                 "directions": [to_json_value(d) for d in rep_out.sample.directions]})
    else:
        def bstr(b):
            if b is None:
                return ""
            return repr(b["angle"]) if "angle" in b else f"{b['prefix']}({b['period']})"
        text = _csv_text(args, ["word", "seed", "powers", "kind", "xi", "xi2", "c", "predicted_c"],
                         [(r["word"], r["seed"], r["powers"], r["kind"], bstr(r["xi"]),
                           bstr(r["xi2"]), r["c"], r["predicted_c"]) for r in rows])
        text += (f"# all_diagonal_regular={diag} max_gap_excess={_fmt(rep_out.max_gap_excess)} "
                 f"gap_checks={rep_out.n_gap_checks}\n")
    _emit(args, text)
    if args.plot:
        from . import plotting
        if isinstance(spec.space, H2Space):
            pts = [r for r in rep_out.records if isinstance(r.result, mb.Regular)]
            plotting.plot_limitset([r.result.xi.angle for r in pts],
                                   [float(r.result.c) for r in pts], args.plot)
        else:
            plotting.plot_c_values([f"{r.word}/{r.seed}" for r in rep_out.records],
                                   [float(r.predicted.c) for r in rep_out.records], args.plot)
    return EXIT_OK if diag else EXIT_UNDECIDED


def cmd_probe(args) -> int:
    spec, rep = _load_group(args)
    rng = np.random.default_rng(args.seed)
    seeds = _load_seeds(args, spec.space, rng) if args.seeds else []
    space = spec.space
    try:
        b1 = mb.boundary_point_from_json(_parse_json_arg(args.b1, "--b1"), space, space)
        b2 = mb.boundary_point_from_json(_parse_json_arg(args.b2, "--b2"), space, space)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"bad boundary point: {exc}") from exc
    base = mb.BasePair(rep.base, rep.base)
    report = dd.dynamical_relation_probe(spec, b1, b2, base, seeds=seeds, trials=args.trials,
                                         threshold=args.threshold, seed=args.seed,
                                         escape_radius=args.escape_radius)
    payload = {"report": report.to_json(), "b1": b1.to_json(), "b2": b2.to_json()}
    if args.format == "csv":
        r = report.to_json()
        keys = sorted(r)
        text = _csv_text(args, keys, [[r[k] for k in keys]])
    else:
        text = _json_text(args, payload)
    _emit(args, text)
    # a failed search is evidence, not proof, so only a found relation is decided
    return EXIT_OK if report.related else EXIT_UNDECIDED


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="horomax", description="Max-metric horofunction boundaries of products "
                "of hyperbolic planes and free-group trees.")
    p.add_argument("--version", action="version", version=f"horomax {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(q, formats=("json", "csv"), default="json", plot=True):
        q.add_argument("--format", choices=formats, default=default)
        q.add_argument("--out", help="output file (default stdout)")
        q.add_argument("--seed", type=int, default=0, help="RNG seed, echoed in headers")
        if plot:
            q.add_argument("--plot", metavar="PATH", help="also render a figure to PATH")

    q = sub.add_parser("classify", help="classify the limit of a diverging product sequence")
    q.add_argument("input", help="CSV of product points")
    q.add_argument("--space", default="h2", help="h2 or tree (factor 1, and factor 2 by default)")
    q.add_argument("--space2", help="space of the second factor")
    q.add_argument("--rank", type=int, default=2, help="free group rank for tree spaces")
    q.add_argument("--base", help="JSON [o1, o2]; defaults to the origins")
    q.add_argument("--tol", type=float, default=None, help="Cauchy tolerance on the gap")
    q.add_argument("--gap-threshold", type=float, default=None,
                   help="gap above which a growing gap counts as divergent (default 10*log10 N)")
    q.add_argument("--tail", type=float, default=0.25, help="tail window fraction")
    q.add_argument("--direction-tol", type=float, default=1e-6)
    q.add_argument("--divergence-radius", type=float, default=5.0)
    common(q)
    q.set_defaults(func=cmd_classify)

    q = sub.add_parser("fibre", help="build a midpoint-projection fibre in T x T")
    q.add_argument("--arity", type=int, default=2, help="free group rank n (valence 2n)")
    q.add_argument("--base", dest="base_kind", default="vertex",
                   choices=["vertex", "midpoint", "generic"])
    q.add_argument("--L", default=None, help="distance of a generic base to the nearest vertex")
    q.add_argument("--radius", default="3")
    common(q, ("dot", "json", "csv"), "dot")
    q.set_defaults(func=cmd_fibre)

    q = sub.add_parser("collapse", help="signed fibre collapse along a ray")
    q.add_argument("--s", type=float, default=1.0)
    q.add_argument("--theta", type=float, default=math.pi / 3)
    q.add_argument("--tmax", type=float, default=30.0)
    q.add_argument("--grid", type=int, default=0, help="sweep an N x N (s, theta) grid")
    q.add_argument("--s-max", type=float, default=3.0)
    q.add_argument("--t-values", help="comma-separated times instead of just tmax")
    common(q, ("csv", "json"), "csv")
    q.set_defaults(func=cmd_collapse)

    q = sub.add_parser("spectra", help="compare marked length spectra of two representations")
    q.add_argument("rep1")
    q.add_argument("rep2")
    q.add_argument("--cap", type=int, default=6)
    q.add_argument("--tol", type=float, default=None)
    common(q, ("csv", "json"), "csv")
    q.set_defaults(func=cmd_spectra)

    for name, fn, hlp in (("limitset", cmd_limitset, "sample the large limit set"),
                          ("probe", cmd_probe, "probe for dynamically related boundary points")):
        q = sub.add_parser(name, help=hlp)
        q.add_argument("group", help="representation JSON describing the group")
        q.add_argument("--seeds", help="CSV of product seed points")
        q.add_argument("--cap", type=int, default=6 if name == "limitset" else 8)
        if name == "limitset":
            q.add_argument("--word-len", type=int, default=2)
            q.add_argument("--resolution", type=float, default=1e-3)
            common(q, ("csv", "json"), "csv")
        else:
            q.add_argument("--b1", required=True, help="JSON max-boundary point")
            q.add_argument("--b2", required=True, help="JSON max-boundary point")
            q.add_argument("--trials", type=int, default=12, help="size of the test grid")
            q.add_argument("--threshold", type=float, default=0.05)
            q.add_argument("--escape-radius", type=float, default=5.0)
            common(q, ("json", "csv"), "json", plot=False)
        q.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("cap",):
        if getattr(args, name, 1) is not None and getattr(args, name, 1) < 1:
            print(f"horomax: error: --{name} must be >= 1", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"horomax: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
