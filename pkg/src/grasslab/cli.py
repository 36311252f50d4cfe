"""Command-line driver: analyses, reports and the corpus runner.

Exit codes: 0 when results match the expectations, 1 on a mismatch or a
failed check, 2 on input or computation errors.
"""

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from fnmatch import fnmatch

from . import classify as cl
from . import gl2struct as gl
from . import laxverify as lx
from .exprcore import ParseError, Rat, rat_str
from .grassmann import ChartBoundary, SL5Element
from .jetspace import SystemEvol
from .weylgeom import symbol_metric

SCHEMA = 1
EXIT_OK, EXIT_MISMATCH, EXIT_ERROR = 0, 1, 2


class CliError(Exception):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def load_fixture(path):
    data = _load_json(path)
    try:
        return cl.system_from_json(data)
    except (KeyError, ValueError, ParseError) as exc:
        raise CliError(f"invalid system file {path}: {exc}") from exc


def _jsonable(x):
    if isinstance(x, Rat):
        return rat_str(x)
    raise TypeError(f"not serialisable: {type(x).__name__}")


def emit(report, out=None):
    text = json.dumps({"schema": SCHEMA, **report}, indent=1, sort_keys=True, default=_jsonable)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _symbolic_summary(sys):
    if not isinstance(sys, SystemEvol):
        return {}
    out = {}
    try:
        m = symbol_metric(sys)
        out["metric_up"] = [[str(x) for x in r] for r in m.g_up]
    except (ValueError, ZeroDivisionError):
        pass
    try:
        sd = gl.symplectic_data(sys)
        phi, dphi = gl.lee_form(sd)
        out["det_A"] = str(sd.detA)
        out["lee_closed"] = all(x.is_zero() for r in dphi for x in r)
    except (gl.DegenerateFrame, ZeroDivisionError):
        out["det_A"] = "0"
    return out


def analyze_fixture(fx, mode="points", points=cl.DEFAULT_POINTS, seed=0):
    """Report dict for a fixture; ``match`` compares with its expected block."""
    verdicts = cl.classify(fx.analysed, mode, points, (seed, seed + 1))
    found = {k: v.passed for k, v in verdicts.items()}
    mismatches = sorted(k for k, e in fx.expected.items() if k in found and found[k] != e)
    missing = sorted(k for k in fx.expected if k not in found)
    return {
        "system": fx.name,
        "mode": mode,
        "points": points,
        "seeds": [seed, seed + 1],
        "verdicts": {k: v.to_json() for k, v in verdicts.items()},
        "summary": _symbolic_summary(fx.system),
        "expected": fx.expected,
        "match": not mismatches and not missing,
        "mismatches": mismatches + missing,
    }


def cmd_analyze(args):
    fx = load_fixture(args.file)
    report = analyze_fixture(fx, args.mode, args.points, args.seed)
    emit(report, args.json)
    return EXIT_OK if report["match"] else EXIT_MISMATCH


def cmd_derive_conditions(args):
    cond = cl.derive_integrability_conditions(seed=args.seed)
    print(f"rank {cond.rank} of {len(cond.rows)} equations; attempts {cond.attempts}",
          file=sys.stderr)
    report = {"conditions": cond.to_json(), "count": len(cond.solved), "attempts": cond.attempts}
    emit(report, args.json)
    return EXIT_OK if cond.rank == 40 else EXIT_MISMATCH


def gl2_report(fx, seed=0):
    sys_ = fx.analysed
    psys, _ = cl.prepare(sys_)
    jp = cl.jet_points(psys, 1, seed, 3)[0]
    frame = gl.build_frame_germs(jp.f, jp.g)
    casimir_ok = frame.casimir("vector").c0 == gl.la.identity(4) * 15
    conn = gl.bryant_connection_frame(frame)
    sym = gl.symmetric_connection_frame(frame)
    rel = gl.invariant_relations(conn)
    univ = gl.universal_identities(conn)
    _, dphi = gl.lee_form_values(frame)
    report = {
        "system": fx.name,
        "seed": seed,
        "point": jp.label(),
        "casimir_on_vectors_is_15": casimir_ok,
        "torsion_dims": gl.eigen_dims(frame.casimir("torsion").c0, gl.TORSION_WEIGHTS),
        "curvature_dims": gl.eigen_dims(frame.casimir("curvature").c0, gl.CURVATURE_WEIGHTS),
        "torsion_zero": conn.torsion_is_zero(),
        "curvature_zero": conn.curvature_is_zero(),
        "symmetric_connection": None if sym is None else {"curvature_zero": sym.curvature_is_zero()},
        "lee_closed_at_point": all(x == 0 for r in dphi for x in r),
        "omega_conformally_parallel": gl.omega_parallel_check(conn),
        "theorem3_residuals": {k: [rat_str(x) for x in v if x != 0][:4] for k, v in rel.items()},
        "theorem3_holds": all(x == 0 for v in rel.values() for x in v),
        "universal_identities_hold": all(x == 0 for v in univ.values() for x in v),
    }
    report["torsion_dims"] = {str(k): v for k, v in report["torsion_dims"].items()}
    report["curvature_dims"] = {str(k): v for k, v in report["curvature_dims"].items()}
    report.update(_symbolic_summary(fx.system))
    return report


def cmd_gl2(args):
    fx = load_fixture(args.file)
    report = gl2_report(fx, args.seed)
    emit(report, args.json)
    ok = report["casimir_on_vectors_is_15"] and report["universal_identities_hold"]
    if fx.expected.get("integrable"):
        ok = ok and report["theorem3_holds"]
    return EXIT_OK if ok else EXIT_MISMATCH


def _systems_by_name():
    return {fx.name: fx.system for fx in cl.corpus()}


def lax_report(data, mode="symbolic", points=cl.DEFAULT_POINTS, seed=0):
    if "P" in data:
        systems = _systems_by_name()
        sys_ = systems.get(data["system"]) if isinstance(data["system"], str) else None
        if sys_ is None:
            sys_ = cl.system_from_json(data["system"]).system
        lax = lx.LaxPair.parse(data["P"], data["Q"], strict=False)
        checks = {
            "relations": lx.check_lax_relations(sys_, lax, mode, points, seed),
            "dispersion": lx.check_dispersion_identity(sys_, lax, mode, points, seed),
        }
    else:
        rules, fields = lx.lax_from_json(data, None)
        checks = {"commute": lx.check_vf_commute(rules, fields, seed)}
    return {"lax": data.get("name", ""), "checks": {k: v.to_json() for k, v in checks.items()},
            "passed": all(v.passed for v in checks.values())}


def cmd_lax(args):
    data = _load_json(args.file)
    try:
        report = lax_report(data, args.mode, args.points, args.seed)
    except (KeyError, ValueError, ParseError) as exc:
        raise CliError(f"invalid lax file {args.file}: {exc}") from exc
    emit(report, args.json)
    return EXIT_OK if report["passed"] else EXIT_MISMATCH


def cmd_chasles(args):
    try:
        lam = [x.strip() for x in args.eigenvalues.split(",")]
        res = cl.chasles_generate(eigenvalues=lam)
    except (ValueError, ChartBoundary) as exc:
        raise CliError(str(exc)) from exc
    report = {
        "eigenvalues": lam,
        "alpha": rat_str(res.alpha),
        "beta": rat_str(res.beta),
        "F": str(res.system.F),
        "G": str(res.system.G),
        "parametrisation": {k: str(v) for k, v in sorted(res.parametrisation.items())},
    }
    emit(report, args.json)
    return EXIT_OK


def cmd_transform(args):
    fx = load_fixture(args.file)
    try:
        M = SL5Element.from_json(_load_json(args.matrix))
    except (ValueError, TypeError) as exc:
        raise CliError(f"invalid matrix: {exc}") from exc
    total = M if fx.transform is None else M @ fx.transform
    data = dict(fx.data)
    data["transform"] = json.loads(total.to_json())
    data["name"] = f"{fx.name}_transformed"
    report = {"fixture": data}
    if args.analyze:
        fx2 = cl.system_from_json(data)
        report["analysis"] = analyze_fixture(fx2, args.mode, args.points, args.seed)
    emit(report, args.json)
    if args.analyze and not report["analysis"]["match"]:
        return EXIT_MISMATCH
    return EXIT_OK


def _corpus_entry(job):
    name, mode, points, seed = job
    fx = cl.corpus_entry(name)
    try:
        return analyze_fixture(fx, mode, points, seed)
    except (cl.DegenerateSystem, cl.NoSampler, ChartBoundary, ValueError, ZeroDivisionError) as exc:
        return {"system": name, "match": False, "error": str(exc)}


def run_corpus(filter_="", mode="points", points=cl.DEFAULT_POINTS, seed=0, jobs=1):
    names = [fx.name for fx in cl.corpus() if fnmatch(fx.name, filter_ + "*")]
    work = [(n, mode, points, seed) for n in names]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_corpus_entry, work))
    else:
        results = [_corpus_entry(w) for w in work]
    return {
        "filter": filter_,
        "entries": results,
        "passed": sum(r["match"] for r in results),
        "failed": [r["system"] for r in results if not r["match"]],
    }


def cmd_corpus(args):
    report = run_corpus(args.filter, args.mode, args.points, args.seed, args.jobs)
    for r in report["entries"]:
        print(f"{'PASS' if r['match'] else 'FAIL'} {r['system']}", file=sys.stderr)
    emit(report, args.json)
    return EXIT_OK if not report["failed"] else EXIT_MISMATCH


def _common(mode):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=("points", "symbolic"), default=mode)
    common.add_argument("--points", type=int, default=cl.DEFAULT_POINTS)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-order", type=int, default=4)
    common.add_argument("--json", metavar="PATH")
    return common


def build_parser():
    common = _common("points")

    p = argparse.ArgumentParser(prog="grasslab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="classify a system file")
    a.add_argument("file")
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("derive-conditions", parents=[common], help="solve the 40 third-order conditions")
    d.set_defaults(func=cmd_derive_conditions)

    g = sub.add_parser("gl2", parents=[common], help="GL(2) invariants at a point")
    g.add_argument("file")
    g.set_defaults(func=cmd_gl2)

    lp = sub.add_parser("lax", help="Lax pair checks")
    lsub = lp.add_subparsers(dest="lax_command", required=True)
    lv = lsub.add_parser("verify", parents=[_common("symbolic")])
    lv.add_argument("file")
    lv.set_defaults(func=cmd_lax)

    c = sub.add_parser("chasles", parents=[common], help="(alpha, beta) system from eigenvalues")
    c.add_argument("--eigenvalues", required=True)
    c.set_defaults(func=cmd_chasles)

    t = sub.add_parser("transform", parents=[common], help="apply an SL(5) element to a system file")
    t.add_argument("file")
    t.add_argument("--matrix", required=True)
    t.add_argument("--analyze", action="store_true")
    t.set_defaults(func=cmd_transform)

    cp = sub.add_parser("corpus", help="fixture corpus")
    csub = cp.add_subparsers(dest="corpus_command", required=True)
    cr = csub.add_parser("run", parents=[common])
    cr.add_argument("--filter", default="", help="name prefix, glob patterns allowed")
    cr.add_argument("--jobs", type=int, default=1)
    cr.set_defaults(func=cmd_corpus)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (cl.DegenerateSystem, cl.NoSampler) as exc:
        print(f"error: degenerate system: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ChartBoundary as exc:
        print(f"error: chart failure: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
