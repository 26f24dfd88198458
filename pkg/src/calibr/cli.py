"""Command-line front end: one subcommand per library operation, strict
configuration parsing, fixed default seeds, and deterministic JSON/CSV
report emission (identical configs produce byte-identical reports)."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import calibrations, cones, currents, duality, fields, grassmann, hessian
from .exterior import ExteriorElement, form_from_json, form_to_json

DEFAULT_SEED = 1729


# ---------------------------------------------------------------------------
# deterministic report emission
# ---------------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def _format_json(obj, indent=0):
    """JSON with insertion-ordered keys and floats at 17 significant digits."""
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  "{k}": {_format_json(v, indent + 2)}'
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        flat = all(not isinstance(v, (dict, list)) for v in obj)
        if flat and len(obj) <= 8:
            return "[" + ", ".join(_format_json(v) for v in obj) + "]"
        items = [f"{pad}  {_format_json(v, indent + 2)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, float):
        return f"{obj:.17g}"
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(obj)


def emit_report(report: dict, config: dict, args):
    payload = {"config": _jsonable(config), "report": _jsonable(report)}
    text = _format_json(payload) + "\n"
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _config_from(args, keys):
    cfg = {"subcommand": args.command}
    for k in keys:
        cfg[k] = getattr(args, k.replace("-", "_"), None)
    cfg["seed"] = getattr(args, "seed", None)
    cfg["threads"] = getattr(args, "threads", None)
    return cfg


def _threads(args):
    t = getattr(args, "threads", None)
    if t:
        return int(t)
    env = os.environ.get("CALIBR_THREADS")
    return int(env) if env else 1


def parallel_map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# shared loaders
# ---------------------------------------------------------------------------

def _load_cal(args):
    return calibrations.resolve(args.cal)


def _load_form(path) -> ExteriorElement:
    with open(path) as fh:
        return form_from_json(json.load(fh))


def _load_field(spec, n):
    if spec.startswith("builtin:"):
        return fields.builtin_field(spec.split(":", 1)[1], n)
    with open(spec) as fh:
        return fields.field_from_json(json.load(fh), n=n)


def _parse_probes(spec, n):
    if spec.startswith("grid:"):
        # grid:LO..HI:K  ->  K^n lattice (capped)
        body = spec[len("grid:"):]
        rng_part, k = body.rsplit(":", 1)
        lo, hi = (float(v) for v in rng_part.split(".."))
        k = int(k)
        if k ** n > 4096:
            raise ValueError(f"grid too large: {k}^{n} points")
        axes = [np.linspace(lo, hi, k)] * n
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])
    with open(spec) as fh:
        return np.asarray(json.load(fh), dtype=float)


def _samples_for(cal, args, count=None):
    return grassmann.sample_grassmannian(
        cal, tol=getattr(args, "tol", 1e-6) or 1e-6,
        count=count or getattr(args, "count", 40) or 40,
        seed=args.seed)


def _load_mesh(spec, cal=None, flatness_tol=1e-9):
    if spec.startswith("builtin:disc:"):
        m = int(spec.rsplit(":", 1)[1])
        return currents.disc_mesh(m, cal=cal)
    if spec.startswith("builtin:graph:"):
        m = int(spec.rsplit(":", 1)[1])
        return currents.graph_curve_mesh(m, cal=cal, flatness_tol=5e-2)
    return currents.read_mesh(spec, cal=cal, flatness_tol=flatness_tol)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_catalogue(args):
    if args.dump:
        cal = calibrations.resolve(args.dump)
        emit_report(cal.to_json(), _config_from(args, ["dump"]), args)
        return 0
    rows = calibrations.list_catalogue()
    emit_report({"entries": [{"name": nm, "n": n, "p": p, "terms": t}
                             for nm, n, p, t in rows]},
                _config_from(args, []), args)
    return 0


def cmd_comass(args):
    form = _load_form(args.form) if args.form else _load_cal(args).form
    res = grassmann.comass(form, multistarts=args.multistarts,
                           max_iter=args.max_iter, tol=args.tol,
                           seed=args.seed)
    report = {"value": res.value, "saturated": res.saturated,
              "converged": res.converged, "multistarts": res.multistarts,
              "frame": res.plane.frame}
    emit_report(report, _config_from(args, ["cal", "form", "multistarts",
                                            "max_iter", "tol"]), args)
    return 0


def cmd_gsample(args):
    cal = _load_cal(args)
    ss = grassmann.sample_grassmannian(cal, tol=args.tol, count=args.count,
                                       seed=args.seed)
    report = {"calibration": cal.name, "requested": args.count,
              "accepted": len(ss), "exhausted": ss.exhausted,
              "values": list(ss.values)}
    if args.emit_csv:
        header = [f"frame_{r}_{c}" for r in range(cal.p) for c in range(cal.n)]
        rows = [[*pl.frame.ravel().tolist(), v]
                for pl, v in zip(ss.planes, ss.values)]
        write_csv(args.emit_csv, header + ["phi_value"], rows)
        report["csv"] = args.emit_csv
    emit_report(report, _config_from(args, ["cal", "tol", "count"]), args)
    return 0


def cmd_reduce(args):
    cal = _load_cal(args)
    ss = _samples_for(cal, args)
    res = grassmann.reduce_calibration(cal, ss)
    report = {"dim_W": res.W.shape[0], "elliptic": res.elliptic,
              "psi": form_to_json(res.psi), "W_rows": res.W,
              "witness": res.witness, "witness_residual": res.witness_residual}
    emit_report(report, _config_from(args, ["cal", "count", "tol"]), args)
    return 0


def cmd_positivity(args):
    cal = _load_cal(args)
    alpha = _load_form(args.form)
    ss = _samples_for(cal, args)
    rep = cones.positivity_classify(alpha, cal, ss, tol=args.tol)
    report = {"status": rep.status, "margin": rep.margin,
              "tolerances": rep.tolerances,
              "sample_count": rep.meta.get("sample_count")}
    if rep.witness is not None:
        report["witness_frame"] = rep.witness.frame
    emit_report(report, _config_from(args, ["cal", "form", "tol"]), args)
    return 0 if rep.status != "Outside" else 1


def cmd_lemma25(args):
    cal = _load_cal(args)
    xi = _load_form(args.pvector)
    ss = _samples_for(cal, args)
    gens = grassmann.random_plane_set(cal.n, cal.p, count=args.generators,
                                      seed=args.seed)
    rep = cones.lemma_2_5_check(xi, cal, ss, gens, seed=args.seed)
    report = {"agree": rep.agree,
              "mass_bracket": list(rep.mass_bracket),
              "conditions": {k: {"holds": v[0], "margin": v[1]}
                             for k, v in rep.conditions.items()}}
    emit_report(report, _config_from(args, ["cal", "pvector", "generators"]),
                args)
    return 0 if rep.agree else 1


def cmd_massnorm(args):
    xi = _load_form(args.pvector)
    gens = grassmann.random_plane_set(xi.n, xi.p, count=args.generators,
                                      seed=args.seed)
    upper, lower, meta = cones.mass_norm_estimate(xi, gens, seed=args.seed)
    emit_report({"upper": upper, "lower": lower, **meta},
                _config_from(args, ["pvector", "generators"]), args)
    return 0


def cmd_psh(args):
    cal = _load_cal(args)
    f = _load_field(args.field, cal.n)
    probes = _parse_probes(args.probes, cal.n)
    ss = _samples_for(cal, args)
    marks = hessian.psh_classify(f, probes, cal, ss, tol=args.tol,
                                 starts_limit=10, extra_starts=2)
    statuses = [m.status for m in marks]
    report = {"field": f.name,
              "points": [{"x": probes[i], "status": m.status,
                          "margin": m.margin}
                         for i, m in enumerate(marks)],
              "all_psh": all(s != "NotPsh" for s in statuses)}
    emit_report(report, _config_from(args, ["cal", "field", "probes", "tol"]),
                args)
    return 0 if report["all_psh"] else 1


def cmd_modd(args):
    cal = _load_cal(args)
    f = _load_field(args.field, cal.n)
    x = np.array([float(v) for v in args.point.split(",")])
    ss = _samples_for(cal, args)
    res = hessian.pluriharmonic_mod_d_residual(f, x, cal, samples=ss)
    emit_report({"residual": res.residual,
                 "gradient_norm": res.gradient_norm,
                 "alpha_fit": form_to_json(res.alpha_fit),
                 "sigma_fit": form_to_json(res.sigma_fit)},
                _config_from(args, ["cal", "field", "point"]), args)
    return 0


def cmd_flat(args):
    cal = _load_cal(args)
    f = _load_field(args.field, cal.n)
    x = np.array([float(v) for v in args.point.split(",")])
    ss = _samples_for(cal, args)
    rep = hessian.phi_flat_check(f, x, cal, ss, tol=args.tol, seed=args.seed)
    emit_report({"flat": rep.flat, "worst_value": rep.worst_value,
                 "vacuous": rep.vacuous},
                _config_from(args, ["cal", "field", "point", "tol"]), args)
    return 0 if rep.flat else 1


def cmd_normality(args):
    cal = _load_cal(args)
    rep = hessian.normality_check(cal, trials=args.trials, seed=args.seed)
    emit_report({"normal": rep.normal, "trials": rep.trials,
                 "degenerate": rep.degenerate,
                 "worst_mismatch": rep.worst_mismatch,
                 "failures": len(rep.failures)},
                _config_from(args, ["cal", "trials"]), args)
    return 0 if rep.normal else 1


def cmd_current_check(args):
    cal = _load_cal(args)
    M = _load_mesh(args.mesh, cal=None)
    T = M.to_current()
    gap = currents.calibration_gap(T, cal)
    pos = currents.phi_positive_check(T, cal)
    report = {"mass": gap["mass"], "tphi": gap["tphi"], "gap": gap["gap"],
              "positive": pos["positive"],
              "violations": len(pos["violations"]),
              "boundary_simplices": len(currents.boundary(T))}
    if args.emit_csv:
        rows = []
        for k, (verts, mult) in enumerate(T.simplices):
            xi, vol = currents.tangent_pvector(verts)
            from .exterior import pairing
            rows.append([k, vol, mult, pairing(cal.form, xi)])
        write_csv(args.emit_csv, ["simplex", "volume", "mult", "phi_value"],
                  rows)
        report["csv"] = args.emit_csv
    emit_report(report, _config_from(args, ["cal", "mesh"]), args)
    return 0 if pos["positive"] else 1


def cmd_green(args):
    cal = _load_cal(args)
    M = _load_mesh(args.mesh, cal=cal)
    if args.tests == "builtin:set1":
        tests = [fields.builtin_field(nm, cal.n) for nm in fields.BUILTIN_SET1]
    else:
        tests = [_load_field(t, cal.n) for t in args.tests.split(";")]
    res = currents.green_check(M, args.x_index, tests, cal)
    report = {"exact_disc": res.exact_disc,
              "residuals": res.residuals,
              "mu_sum": res.meta["mu_sum"], "mu_min": res.meta["mu_min"]}
    emit_report(report, _config_from(args, ["cal", "mesh", "x_index",
                                            "tests"]), args)
    return 0


def cmd_maxprinciple(args):
    cal = _load_cal(args)
    M = _load_mesh(args.mesh, cal=cal)
    f = _load_field(args.field, cal.n)
    ss = _samples_for(cal, args) if args.mode == "bounds" else None
    rep = currents.max_principle_check(M, f, args.mode, cal, samples=ss)
    emit_report({"ok": rep.ok, "precondition_ok": rep.precondition_ok,
                 "details": rep.details},
                _config_from(args, ["cal", "mesh", "field", "mode"]), args)
    return 0 if rep.ok else 1


def _random_boundary_batch(cal, ss, count, seed, degree, threads):
    from .duality import assemble_boundary_model, boundary_alternative, build_boundary_model

    def one(inst):
        rng = grassmann.rng_stream(seed, inst)
        sites = rng.uniform(-1, 1, size=(4, cal.n))
        model = build_boundary_model(cal, sites, ss, degree=degree,
                                     planes_per_site=3)
        A, _ = assemble_boundary_model(
            model, np.zeros(len(model.test_family)))
        c = np.abs(rng.standard_normal(A.shape[1]))
        S = A @ c
        if inst % 2 == 1:
            S = S * rng.choice([-1.0, 1.0], size=len(S))
        res = boundary_alternative(model, S)
        return (inst, res.primal, res.dual or "None", res.consistent,
                res.boundary_tie)

    return parallel_map(one, list(range(count)), threads)


def _random_jensen_batch(cal, ss, count, seed, degree, threads):
    from .duality import build_jensen_model, jensen_alternative

    def one(inst):
        rng = grassmann.rng_stream(seed, 5000 + inst)
        pts = rng.uniform(-1, 1, size=(5, cal.n))
        model = build_jensen_model(cal, pts, ss, degree=degree,
                                   planes_per_site=4)
        res = jensen_alternative(model, [0, 1, 2, 3], 4)
        return (inst, res.primal, res.dual or "None", res.consistent,
                res.boundary_tie)

    return parallel_map(one, list(range(count)), threads)


def cmd_duality(args):
    cal = _load_cal(args)
    ss = _samples_for(cal, args, count=args.count or 8)
    if args.random:
        rows = _random_boundary_batch(cal, ss, args.random, args.seed,
                                      args.deg, _threads(args))
        ok = sum(1 for r in rows if r[3] or r[4])
        if args.emit_csv:
            write_csv(args.emit_csv,
                      ["instance", "primal", "dual", "consistent", "tie"],
                      rows)
        emit_report({"instances": args.random, "consistent": ok,
                     "all_consistent": ok == args.random},
                    _config_from(args, ["cal", "deg", "random"]), args)
        return 0 if ok == args.random else 1
    from .duality import boundary_alternative, build_boundary_model
    with open(args.sites) as fh:
        sites = np.asarray(json.load(fh), dtype=float)
    with open(args.boundary) as fh:
        S = np.asarray(json.load(fh), dtype=float)
    model = build_boundary_model(cal, sites, ss, degree=args.deg)
    res = boundary_alternative(model, S, lam=args.lam)
    emit_report({"primal": res.primal, "dual": res.dual,
                 "margin": res.margin, "consistent": res.consistent,
                 "tie": res.boundary_tie, "model": res.meta},
                _config_from(args, ["cal", "sites", "boundary", "deg",
                                    "lam"]), args)
    return 0 if res.consistent or res.boundary_tie else 1


def cmd_jensen(args):
    cal = _load_cal(args)
    ss = _samples_for(cal, args, count=args.count or 8)
    if args.random:
        rows = _random_jensen_batch(cal, ss, args.random, args.seed,
                                    args.deg, _threads(args))
        ok = sum(1 for r in rows if r[3] or r[4])
        if args.emit_csv:
            write_csv(args.emit_csv,
                      ["instance", "primal", "dual", "consistent", "tie"],
                      rows)
        emit_report({"instances": args.random, "consistent": ok,
                     "all_consistent": ok == args.random},
                    _config_from(args, ["cal", "deg", "random"]), args)
        return 0 if ok == args.random else 1
    from .duality import build_jensen_model, jensen_alternative
    with open(args.sites) as fh:
        sites = np.asarray(json.load(fh), dtype=float)
    K = [int(v) for v in args.K.split(",")]
    model = build_jensen_model(cal, sites, ss, degree=args.deg)
    res = jensen_alternative(model, K, args.x)
    emit_report({"primal": res.primal, "dual": res.dual,
                 "margin": res.margin, "consistent": res.consistent,
                 "tie": res.boundary_tie, "model": res.meta},
                _config_from(args, ["cal", "sites", "K", "x", "deg"]), args)
    return 0 if res.consistent or res.boundary_tie else 1


def cmd_verify_all(args):
    from . import acceptance
    results = acceptance.run_all(quick=args.quick, seed=args.seed)
    all_ok = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} - {res.name}: {res.summary}  [{res.seconds:.1f}s]")
        all_ok = all_ok and res.passed
    total = sum(r.seconds for r in results)
    print(f"{'PASS' if all_ok else 'FAIL'} - total {total:.1f}s")
    return 0 if all_ok else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(
        prog="calibr",
        description="numerical operators, cones and dualities of calibrated "
                    "geometry in flat R^n")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, cal=True):
        if cal:
            p.add_argument("--cal", help="catalogue selector or JSON path")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--output", "-o", help="write the JSON report here")

    p = sub.add_parser("catalogue", help="list or dump catalogue entries")
    p.add_argument("--list", action="store_true")
    p.add_argument("--dump", help="catalogue selector to dump")
    common(p, cal=False)
    p.set_defaults(fn=cmd_catalogue)

    p = sub.add_parser("comass", help="comass by multistart ascent")
    p.add_argument("--form", help="JSON form spec (overrides --cal)")
    p.add_argument("--multistarts", type=int, default=200)
    p.add_argument("--max-iter", type=int, default=600)
    p.add_argument("--tol", type=float, default=1e-12)
    common(p)
    p.set_defaults(fn=cmd_comass)

    p = sub.add_parser("gsample", help="sample the phi-Grassmannian")
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--emit-csv")
    common(p)
    p.set_defaults(fn=cmd_gsample)

    p = sub.add_parser("reduce", help="variable-involvement reduction")
    p.add_argument("--count", type=int, default=40)
    p.add_argument("--tol", type=float, default=1e-6)
    common(p)
    p.set_defaults(fn=cmd_reduce)

    p = sub.add_parser("positivity", help="classify a form against the cone")
    p.add_argument("--form", required=True)
    p.add_argument("--count", type=int, default=40)
    p.add_argument("--tol", type=float, default=1e-6)
    common(p)
    p.set_defaults(fn=cmd_positivity)

    p = sub.add_parser("lemma25", help="three-way membership equivalence")
    p.add_argument("--pvector", required=True)
    p.add_argument("--count", type=int, default=40)
    p.add_argument("--generators", type=int, default=40)
    p.add_argument("--tol", type=float, default=1e-6)
    common(p)
    p.set_defaults(fn=cmd_lemma25)

    p = sub.add_parser("massnorm", help="bracket the mass norm")
    p.add_argument("--pvector", required=True)
    p.add_argument("--generators", type=int, default=40)
    common(p, cal=False)
    p.set_defaults(fn=cmd_massnorm)

    p = sub.add_parser("psh", help="classify plurisubharmonicity at probes")
    p.add_argument("--field", required=True)
    p.add_argument("--probes", required=True)
    p.add_argument("--count", type=int, default=40)
    p.add_argument("--tol", type=float, default=1e-8)
    common(p)
    p.set_defaults(fn=cmd_psh)

    p = sub.add_parser("modd", help="pluriharmonic-mod-d residual at a point")
    p.add_argument("--field", required=True)
    p.add_argument("--point", required=True, help="comma-separated coords")
    p.add_argument("--count", type=int, default=40)
    p.add_argument("--tol", type=float, default=1e-6)
    common(p)
    p.set_defaults(fn=cmd_modd)

    p = sub.add_parser("flat", help="level-set flatness at a point")
    p.add_argument("--field", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--count", type=int, default=40)
    p.add_argument("--tol", type=float, default=1e-8)
    common(p)
    p.set_defaults(fn=cmd_flat)

    p = sub.add_parser("normality", help="random-hyperplane normality check")
    p.add_argument("--trials", type=int, default=50)
    common(p)
    p.set_defaults(fn=cmd_normality)

    p = sub.add_parser("current-check",
                       help="mass/boundary/positivity of a meshed current")
    p.add_argument("--mesh", required=True)
    p.add_argument("--emit-csv")
    common(p)
    p.set_defaults(fn=cmd_current_check)

    p = sub.add_parser("green", help="Poisson-Jensen residuals on a disc mesh")
    p.add_argument("--mesh", required=True)
    p.add_argument("--x-index", type=int, default=0)
    p.add_argument("--tests", default="builtin:set1")
    common(p)
    p.set_defaults(fn=cmd_green)

    p = sub.add_parser("maxprinciple", help="discrete maximum principle")
    p.add_argument("--mesh", required=True)
    p.add_argument("--field", required=True)
    p.add_argument("--mode", choices=["bounds", "lemma58"], default="bounds")
    p.add_argument("--count", type=int, default=40)
    common(p)
    p.set_defaults(fn=cmd_maxprinciple)

    p = sub.add_parser("duality", help="boundary alternative (Farkas pair)")
    p.add_argument("--sites")
    p.add_argument("--boundary", help="JSON list of S(beta_k) values")
    p.add_argument("--deg", type=int, default=2)
    p.add_argument("--lam", "--lambda", dest="lam", type=float, default=None)
    p.add_argument("--random", type=int, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--emit-csv")
    common(p)
    p.set_defaults(fn=cmd_duality)

    p = sub.add_parser("jensen", help="hull alternative (Farkas pair)")
    p.add_argument("--sites")
    p.add_argument("--K", help="comma-separated K site indices")
    p.add_argument("--x", type=int, default=None)
    p.add_argument("--deg", type=int, default=2)
    p.add_argument("--random", type=int, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--emit-csv")
    common(p)
    p.set_defaults(fn=cmd_jensen)

    p = sub.add_parser("verify-all", help="run the acceptance suite")
    p.add_argument("--quick", action="store_true",
                   help="reduced instance counts (not the acceptance gate)")
    common(p, cal=False)
    p.set_defaults(fn=cmd_verify_all)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError, json.JSONDecodeError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
