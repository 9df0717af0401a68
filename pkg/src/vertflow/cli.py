"""Command-line interface: classification, suspension tools, continued
fractions, the disjointness pipeline, and measure transport.

Exit codes: 0 success (including inconclusive verdicts), 1 computation
error, 2 usage error.  Output is deterministic JSON/CSV: exact values are
rendered as p/q strings, numeric shadows as repr'd floats; timing is
reported only on request so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from . import __version__
from .exact_linalg import QVector
from .permutations import (
    LabeledPermutation,
    enumerate_reduced_classes,
    find_acceptable_symbols,
    is_degenerate,
    is_irreducible,
    is_symmetric,
    rauzy_class,
    satisfies_pierost,
    translation_matrix,
)
from .suspension import (
    SuspensionDatum,
    datum_area,
    polygon_vertices,
    polygonal_rv_left,
    polygonal_rv_right,
    roof_of,
    triangulate,
    validate_theta_datum,
)
from .circle_dynamics import ContinuedFraction, rigidity_indices
from .pipeline import run_pipeline
from .transport import (
    PCDensity,
    bisection_transport,
    surface_transport,
)


class UsageError(ValueError):
    pass


def _manifest(command: str, params: dict, timing_ms=None) -> dict:
    return {
        "command": command,
        "parameters": params,
        "precision_bits": 256,
        "seed": params.get("seed", 0),
        "version": __version__,
        "timing_ms": timing_ms,
    }


def _emit(obj: dict, path=None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _parse_perm(text: str) -> LabeledPermutation:
    try:
        if text.strip().startswith("{"):
            return LabeledPermutation.from_json(json.loads(text))
        return LabeledPermutation.parse(text)
    except Exception as exc:
        raise UsageError(f"cannot parse permutation {text!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# perm


def cmd_perm_classify(args) -> int:
    p = _parse_perm(args.perm)
    irreducible = is_irreducible(p)
    out = {
        "perm": p.to_json(),
        "sigma": list(p.sigma()),
        "irreducible": irreducible,
        "symmetric": is_symmetric(p),
        "omega": [list(r) for r in translation_matrix(p)],
    }
    if irreducible:
        deg, tag = is_degenerate(p)
        out["degenerate"] = deg
        out["degeneracy_tag"] = tag
        out["pierost"] = satisfies_pierost(p)
        if not deg and out["pierost"]:
            w = find_acceptable_symbols(p)
            out["acceptable_symbols"] = list(w) if w else None
    out["manifest"] = _manifest("perm classify", {"perm": args.perm})
    _emit(out, args.out)
    return 0


def cmd_perm_class(args) -> int:
    if args.d_max is not None:
        import os
        from concurrent.futures import ProcessPoolExecutor

        ds = list(range(2, args.d_max + 1))
        jobs = args.jobs or os.cpu_count() or 1
        if jobs > 1 and len(ds) > 1:
            with ProcessPoolExecutor(max_workers=min(jobs, len(ds))) as pool:
                per_d = list(
                    pool.map(enumerate_reduced_classes, ds, [args.extended] * len(ds))
                )
        else:
            per_d = [enumerate_reduced_classes(d, args.extended) for d in ds]
        report = []
        for d, classes in zip(ds, per_d):
            for cls in sorted(classes, key=lambda c: sorted(c)[0]):
                members = sorted(cls)
                has_sym = any(
                    all(s[i] == len(s) - i for i in range(len(s)))
                    for s in members
                )
                report.append(
                    {
                        "d": d,
                        "size": len(members),
                        "smallest_member": list(members[0]),
                        "has_symmetric_member": has_sym,
                    }
                )
        out = {
            "classes": report,
            "extended": args.extended,
            "manifest": _manifest(
                "perm class", {"d_max": args.d_max, "extended": args.extended}
            ),
        }
        _emit(out, args.out)
        return 0
    if not args.seed_perm:
        raise UsageError("need --seed or --d-max")
    p = _parse_perm(args.seed_perm)
    cls = rauzy_class(p, extended=args.extended)
    reduced = sorted({q.sigma() for q in cls})
    out = {
        "seed": p.to_json(),
        "extended": args.extended,
        "labeled_size": len(cls),
        "reduced_size": len(reduced),
        "reduced_members": [list(s) for s in reduced],
        "has_symmetric_member": any(
            all(s[i] == len(s) - i for i in range(len(s))) for s in reduced
        ),
        "manifest": _manifest(
            "perm class", {"seed": args.seed_perm, "extended": args.extended}
        ),
    }
    _emit(out, args.out)
    return 0


def cmd_perm_acceptable(args) -> int:
    p = _parse_perm(args.perm)
    w = find_acceptable_symbols(p)
    out = {
        "perm": p.to_json(),
        "witness": list(w) if w else None,
        "manifest": _manifest("perm acceptable", {"perm": args.perm}),
    }
    _emit(out, args.out)
    return 0


# ---------------------------------------------------------------------------
# suspension


def _load_datum(args) -> SuspensionDatum:
    with open(args.config) as fh:
        obj = json.load(fh)
    return SuspensionDatum.from_json(obj)


def cmd_suspend(args) -> int:
    datum = _load_datum(args)
    ok, report = validate_theta_datum(datum)
    out = {
        "datum": datum.to_json(),
        "theta_valid": ok,
        "theta_violation": report,
    }
    if ok:
        roof = roof_of(datum)
        bv = datum.basis_values()
        out["roof"] = [h.to_json() for h in roof]
        out["roof_numeric"] = [float(h.evaluate(bv)) for h in roof]
        out["area"] = datum_area(datum).to_json()
    out["manifest"] = _manifest("suspend", {"config": args.config})
    _emit(out, args.out)
    return 0


def cmd_rv(args) -> int:
    datum = _load_datum(args)
    history = []
    for step in range(args.steps):
        side = args.side
        if side == "alternate":
            side = "right" if step % 2 == 0 else "left"
        datum = (
            polygonal_rv_right(datum) if side == "right" else polygonal_rv_left(datum)
        )
        ok, _ = validate_theta_datum(datum)
        history.append(
            {
                "step": step + 1,
                "side": side,
                "sigma": list(datum.perm.sigma()),
                "theta_valid": ok,
                "area": datum_area(datum).to_json(),
            }
        )
    out = {
        "final": datum.to_json(),
        "history": history,
        "manifest": _manifest(
            "rv", {"config": args.config, "side": args.side, "steps": args.steps}
        ),
    }
    _emit(out, args.out)
    return 0


def cmd_triangulate(args) -> int:
    datum = _load_datum(args)
    model = polygon_vertices(datum)
    tri = triangulate(model)
    rows = ["label,x,y"]
    for lbl in sorted(model.points):
        x, y = model.numeric(lbl)
        rows.append(f"{lbl[0]}{lbl[1]},{x!r},{y!r}")
    csv_text = "\n".join(rows) + "\n"
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(csv_text)
    out = {
        "vertex_order": [f"{k}{i}" for k, i in model.order],
        "triangles": [[f"{k}{i}" for k, i in t] for t in tri.triangles],
        "triangle_count": len(tri.triangles),
        "manifest": _manifest("triangulate", {"config": args.config}),
    }
    if not args.csv:
        out["vertices_csv"] = csv_text
    _emit(out, args.out)
    return 0


# ---------------------------------------------------------------------------
# cf


def cmd_cf(args) -> int:
    quotients = [int(t) for t in args.alpha.replace(",", " ").split()]
    cf = ContinuedFraction(tuple(quotients), Fraction(args.circle))
    conv = cf.convergents()
    out = {
        "quotients": quotients,
        "circle": str(cf.l),
        "alpha": str(cf.alpha()),
        "alpha_numeric": float(cf.alpha()),
        "convergents": [[p, q] for p, q in conv],
        "manifest": _manifest(
            "cf", {"alpha": args.alpha, "circle": str(args.circle)}
        ),
    }
    if args.rigidity:
        idx = rigidity_indices(cf)
        out["rigidity_indices"] = idx
        out["rigidity_window"] = ["1/52", "1/25"]
        out["window_values"] = {
            str(n): str(cf.denominator(n) * cf.norm_unit(cf.denominator(n)))
            for n in idx
        }
    _emit(out, args.out)
    return 0


# ---------------------------------------------------------------------------
# pipeline


def cmd_pipeline(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    p = (
        LabeledPermutation.from_json(cfg["perm"])
        if isinstance(cfg["perm"], dict)
        else LabeledPermutation.parse(cfg["perm"])
    )
    tau = cfg.get("tau", "auto")
    tau = None if tau == "auto" else [QVector.from_json(t) for t in tau]
    lam_hat = cfg.get("lambda_hat", "auto")
    lam_hat = (
        None if lam_hat == "auto" else [Fraction(x) for x in lam_hat]
    )
    quotients = cfg.get("cf_quotients", [25] * 40)
    if args.depth is not None:
        quotients = quotients[: args.depth]
    t0 = time.monotonic()
    report = run_pipeline(
        p,
        tau=tau,
        lam_hat=lam_hat,
        cf_quotients=quotients,
        rigidity_index=args.rigidity_index,
        tau_dependent_debug=args.tau_dependent,
    )
    ms = int((time.monotonic() - t0) * 1000)
    out = report.to_json()
    out["status"] = (
        "inconclusive"
        if report.analysis and report.analysis.status != "ok"
        else "ok"
    )
    out["manifest"] = _manifest(
        "pipeline run",
        {
            "config": args.config,
            "depth": args.depth,
            "rigidity_index": args.rigidity_index,
            "tau_dependent": args.tau_dependent,
        },
        ms if args.timing else None,
    )
    if args.emit_distribution and report.analysis and report.analysis.forward:
        bv = None
        from .suspension import _parse_basis

        bv = _parse_basis(report.flow.basis_spec, 256)
        rows = ["location,mass"]
        rows += report.analysis.forward.as_csv_rows(bv)
        rows.append("backward_location,mass")
        rows += report.analysis.backward.as_csv_rows(bv)
        with open(args.emit_distribution, "w") as fh:
            fh.write("\n".join(rows) + "\n")
    _emit(out, args.out)
    return 0


# ---------------------------------------------------------------------------
# transport


def _density_from_config(cfg) -> PCDensity:
    cells = []
    for poly, value in cfg["cells"]:
        cells.append(
            (
                tuple((Fraction(x), Fraction(y)) for x, y in poly),
                Fraction(value),
            )
        )
    return PCDensity.build(cells)


def cmd_transport(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    eps_hat = Fraction(cfg.get("eps_hat", "1/1000000000"))
    depth = int(cfg.get("depth", 6))
    mode = cfg.get("mode", "triangle")
    if mode == "triangle":
        density = _density_from_config(cfg["density"])
        tt = bisection_transport(density, eps_hat, depth)
        from .geometry import triangle_area

        residuals = [
            str(abs(mass - triangle_area(*leaf))) for leaf, mass in tt.leaves
        ]
        out = {
            "mode": mode,
            "depth": depth,
            "eps_hat": str(eps_hat),
            "max_lipschitz": tt.max_lipschitz(),
            "leaf_residuals": residuals,
            "max_leaf_residual": float(
                max(abs(mass - triangle_area(*leaf)) for leaf, mass in tt.leaves)
            ),
            "homeomorphism": tt.to_json() if args.full else "omitted (--full)",
        }
    elif mode == "surface":
        triangles = [
            tuple((Fraction(x), Fraction(y)) for x, y in t)
            for t in cfg["triangles"]
        ]
        density = _density_from_config(cfg["density"])
        st = surface_transport(triangles, density, eps_hat, depth)
        leaf = st.leaf_mass_report()
        out = {
            "mode": mode,
            "depth": depth,
            "eps_hat": str(eps_hat),
            "corridor_v": [str(v) for v in st.v_solution],
            "corridor_h": [str(c[2]) for c in st.corridors],
            "per_triangle_mass_after_corridors": [
                {"mass": str(m), "lebesgue": str(l), "exact": m == l}
                for m, l in st.per_triangle_mass_after_G
            ],
            "global_mass_exact": st.global_mass_before == st.global_mass_after,
            "max_leaf_residual": float(
                max(abs(m - leb) for _, m, leb in leaf)
            ),
            "max_lipschitz": max(t.max_lipschitz() for t in st.stage2),
        }
    else:
        raise UsageError(f"unknown transport mode {mode!r}")
    out["manifest"] = _manifest(
        "transport run", {"config": args.config, "mode": mode}
    )
    _emit(out, args.out)
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write JSON output to a file")
    common.add_argument("--timing", action="store_true", help="include timing")
    common.add_argument("--jobs", type=int, default=None, help="worker count")
    ap = argparse.ArgumentParser(
        prog="vertflow",
        description="exact IET / translation-flow computations",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_perm = sub.add_parser("perm")
    perm_sub = p_perm.add_subparsers(dest="perm_command", required=True)
    pc = perm_sub.add_parser("classify", parents=[common])
    pc.add_argument("perm")
    pc.set_defaults(func=cmd_perm_classify)
    pk = perm_sub.add_parser("class", parents=[common])
    pk.add_argument("--seed", dest="seed_perm")
    pk.add_argument("--extended", action="store_true")
    pk.add_argument("--d-max", type=int, default=None)
    pk.set_defaults(func=cmd_perm_class)
    pa = perm_sub.add_parser("acceptable", parents=[common])
    pa.add_argument("perm")
    pa.set_defaults(func=cmd_perm_acceptable)

    ps = sub.add_parser("suspend", parents=[common])
    ps.add_argument("config")
    ps.set_defaults(func=cmd_suspend)

    pr = sub.add_parser("rv", parents=[common])
    pr.add_argument("config")
    pr.add_argument("--side", choices=["left", "right", "alternate"], default="right")
    pr.add_argument("--steps", type=int, default=1)
    pr.set_defaults(func=cmd_rv)

    pt = sub.add_parser("triangulate", parents=[common])
    pt.add_argument("config")
    pt.add_argument("--csv", help="write the vertex table to a CSV file")
    pt.set_defaults(func=cmd_triangulate)

    pf = sub.add_parser("cf", parents=[common])
    pf.add_argument("--alpha", required=True, help="partial quotients")
    pf.add_argument("--circle", default="1")
    pf.add_argument("--rigidity", action="store_true")
    pf.set_defaults(func=cmd_cf)

    pp = sub.add_parser("pipeline")
    pp_sub = pp.add_subparsers(dest="pipeline_command", required=True)
    ppr = pp_sub.add_parser("run", parents=[common])
    ppr.add_argument("config")
    ppr.add_argument("--depth", type=int, default=None)
    ppr.add_argument("--rigidity-index", type=int, default=None)
    ppr.add_argument("--tau-dependent", action="store_true")
    ppr.add_argument("--emit-distribution", default=None)
    ppr.set_defaults(func=cmd_pipeline)

    px = sub.add_parser("transport")
    px_sub = px.add_subparsers(dest="transport_command", required=True)
    pxr = px_sub.add_parser("run", parents=[common])
    pxr.add_argument("config")
    pxr.add_argument("--full", action="store_true", help="include the map")
    pxr.set_defaults(func=cmd_transport)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # computation errors
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
