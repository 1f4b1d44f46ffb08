"""Command line entry point: ``gridnet <subcommand> [options]``.

Every subcommand prints a JSON summary on stdout and exits 0 when all
requested checks pass, 1 with a failure record otherwise.  Relative output
paths are resolved against $GRIDNET_OUTPUT_DIR when it is set.
"""

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import net as netmod
from . import qcmaps, speiser, typecheck, uniformize
from .errors import GridnetError

OUTPUT_DIR_ENV = "GRIDNET_OUTPUT_DIR"


class CheckFailed(Exception):
    def __init__(self, invariant, witness):
        super().__init__(invariant)
        self.record = {"error": "assertion-failed", "invariant": invariant, "witness": witness}


def _out_path(path):
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _write(path, text):
    if path:
        _out_path(path).write_text(text)


def _dumps(obj):
    return json.dumps(obj, indent=1, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def _require(cond, invariant, **witness):
    if not cond:
        raise CheckFailed(invariant, witness)


# -- subcommands ------------------------------------------------------------------


def cmd_gamma(args):
    g = speiser.build_gamma(args.window) if args.kind == "gamma" else speiser.build_grid(args.window)
    labeling = speiser.label_faces(g)
    _write(args.out, g.to_json(labeling))
    _write(args.dot, g.to_dot(labeling))
    problems = speiser.check_graph(g)
    summary = {
        "window": g.window,
        "kind": g.kind,
        "vertices": len(g.vertices),
        "edges": sum(k for _, _, k in g.edges),
        "faces": len(g.faces),
        "face_kinds": _count_kinds(speiser.classify_faces(g)),
        "problems": [list(map(str, p)) for p in problems],
    }
    _require(not problems, "speiser-graph", problems=summary["problems"][:10])
    return summary


def _count_kinds(kinds):
    counts = {}
    for kind, _ in kinds.values():
        counts[kind] = counts.get(kind, 0) + 1
    return counts


def _in_path(path):
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if not p.exists() and base and not p.is_absolute():
        p = Path(base) / p
    return p


def _load_graph(args):
    if args.source:
        return speiser.SpeiserGraph.from_dict(json.loads(_in_path(args.source).read_text()))
    return speiser.build_gamma(args.window)


def cmd_net(args):
    g = _load_graph(args)
    n = netmod.dual_net(g, speiser.label_faces(g))
    ends_before = len(netmod.find_staircases(n))
    if args.rewrite_spines:
        n = netmod.replace_all_spines(n)
    summary = {
        "window": g.window,
        "nodes": len(n.nodes),
        "edges": len(n.edges),
        "cells": len(n.cells),
        "staircase_ends": ends_before,
        "spines": len(n.spines),
        "spines_valid": all(netmod.spine_is_valid(p) for p in n.spines),
        "problems": [list(map(str, p)) for p in netmod.check_net(n)],
    }
    _write(args.out, n.to_json())
    _write(args.svg, netmod.to_svg(n, show_cells=args.cells))
    _require(not summary["problems"], "net-structure", problems=summary["problems"][:10])
    if args.verify:
        verdict = netmod.verify_square_grid(n)
        summary["square_grid"] = verdict.ok
        _require(verdict.ok, "square-grid", **verdict.witness)
        _require(summary["spines_valid"], "spine-pattern")
    return summary


def _lemma1(args):
    fmap = qcmaps.interpolate_strip(qcmaps.f0, qcmaps.identity, 2.0, qcmaps.df0, qcmaps.one)
    bound = qcmaps.lemma1_bound(2.0)
    rep = qcmaps.dilatation(fmap, qcmaps.Grid(-60.0, 60.0, 0.0, 1.0, args.nx, args.ny), bound=bound)
    out = rep.summary()
    _require(out["pass"], "lemma1-bound", supK=out["supK"], bound=bound, argmax=out["argmax"])
    return out, rep


def _lemma2(args):
    eta = qcmaps.STEPS[args.eta]
    params = qcmaps.SpineMapParams(M=args.M, eta=eta)
    M = params.resolved_M()
    bounds = qcmaps.f0_bounds()
    G = qcmaps.build_G(params)
    band = qcmaps.dilatation(G, qcmaps.Grid(-M - 1.0, -float(M), -20.0, 20.0, args.nx, args.ny), bound=None)
    t = np.linspace(-20.0, 20.0, 4001)
    edge = float(np.max(np.abs(G(1.0 + 1j * t) - np.exp(1.0 + 1j * t))))
    crit = qcmaps.critical_points(G)
    trace = qcmaps.trace_real_preimage(G)
    out = {
        "eta": eta.name,
        "M": M,
        "minimal_M": qcmaps.minimal_M(eta),
        "margins": qcmaps.lemma2_margins(M, eta),
        "f0": bounds,
        "band": band.summary(),
        "boundary_error": edge,
        "critical_points": [[z.real, z.imag] for z in crit],
        "real_preimage": trace.summary,
    }
    _require(band.sup_mu <= 0.5 + 1e-6, "blend-band-beltrami", sup_mu=band.sup_mu)
    _require(edge <= 1e-12, "boundary-agreement", error=edge)
    _require(len(crit) == 1 and abs(crit[0] - qcmaps.CRITICAL_POINT) < 1e-6, "critical-point",
             found=out["critical_points"])
    _require(trace.summary["ok"], "real-preimage-topology", **trace.summary)
    return out, band


def cmd_qc(args):
    run1 = args.lemma1 or not args.lemma2
    run2 = args.lemma2 or not args.lemma1
    summary, report = {}, None
    if run1:
        summary["lemma1"], report = _lemma1(args)
    if run2:
        summary["lemma2"], report = _lemma2(args)
    if args.csv and report is not None:
        _write(args.csv, report.to_csv())
    _write(args.out, _dumps(summary))
    return summary


def cmd_uniformize(args):
    data = uniformize.compute_tau()
    W = uniformize.default_wp()
    tau = data.tau
    corners = W(np.array([0.0, math.pi / 2, math.pi / 2 + 1j * tau, 1j * tau]))
    fit = uniformize.fit_gluing(n=args.samples)
    verdict = uniformize.volkovyskii_check(fit)
    summary = {
        "tau": tau,
        "tau_golden": uniformize.TAU_GOLDEN,
        "k": data.k,
        "wp_corners": {"0": corners[0], "pi/2": corners[1], "pi/2+i tau": "inf" if np.isinf(corners[2]) else
                       corners[2], "i tau": corners[3]},
        "gluing": fit.summary(),
        "verdict": verdict.to_dict(),
    }
    if args.table:
        x = np.linspace(0.0, 2 * math.pi, 241)
        rows = ["x,wp_re,wp_im"] + [f"{a:.12g},{v.real:.15g},{v.imag:.15g}" for a, v in zip(x, W(x))]
        _write(args.table, "\n".join(rows) + "\n")
    _write(args.csv, fit.to_csv())
    _write(args.out, _dumps(summary))
    _require(abs(tau - uniformize.TAU_GOLDEN) < 1e-10, "tau-golden", tau=tau)
    _require(verdict.verdict == uniformize.HYPERBOLIC, "volkovyskii-template", **verdict.diagnostics)
    return summary


def _type_network(args, radii):
    n_max = max(radii)
    if args.labels == "spine-decay":
        return typecheck.spine_decay_network(n_max, args.growth)
    net = netmod.square_grid_net(n_max + 1)
    if args.labels == "symmetric":
        labels = netmod.uniform_labels(net)
    else:
        labels = json.loads(_in_path(args.labels).read_text())
    return typecheck.assemble_network(net, labels)


def cmd_type(args):
    radii = [int(r) for r in args.radii.split(",")]
    network = _type_network(args, radii)
    verdict = typecheck.estimate(network, radii)
    summary = {"labels": args.labels, "radii": radii, **verdict.to_dict()}
    _write(args.out, _dumps(summary))
    if args.expect:
        _require(verdict.verdict == args.expect, "type-verdict", verdict=verdict.verdict)
    return summary


# -- parser -----------------------------------------------------------------------


def _positive_int(text):
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="gridnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gamma", help="build the Speiser graph and export it")
    p.add_argument("--window", type=_positive_int, default=6)
    p.add_argument("--kind", choices=sorted(speiser.KINDS), default="gamma")
    p.add_argument("--out", help="JSON output path")
    p.add_argument("--dot", help="Graphviz output path")
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("net", help="dual net, staircase ends, spine rewriting")
    p.add_argument("--from", dest="source", help="Speiser graph JSON written by 'gamma'")
    p.add_argument("--window", type=_positive_int, default=8)
    p.add_argument("--rewrite-spines", action="store_true")
    p.add_argument("--verify", action="store_true", help="require a square-grid net")
    p.add_argument("--svg")
    p.add_argument("--cells", action="store_true", help="shade cells in the SVG")
    p.add_argument("--out", help="net JSON output path")
    p.set_defaults(func=cmd_net)

    p = sub.add_parser("qc", help="dilatation checks for the strip and blend constructions")
    p.add_argument("--lemma1", action="store_true")
    p.add_argument("--lemma2", action="store_true")
    p.add_argument("--eta", choices=sorted(qcmaps.STEPS), default="cubic")
    p.add_argument("--M", type=_positive_int, default=None)
    p.add_argument("--nx", type=_positive_int, default=400)
    p.add_argument("--ny", type=_positive_int, default=100)
    p.add_argument("--csv", help="dilatation samples of the last report")
    p.add_argument("--out", help="summary JSON path")
    p.set_defaults(func=cmd_qc)

    p = sub.add_parser("uniformize", help="rectangle height, elliptic map, gluing fit, verdict")
    p.add_argument("--samples", type=_positive_int, default=2001)
    p.add_argument("--table", help="CSV of wp on one real period")
    p.add_argument("--csv", help="CSV of the gluing samples")
    p.add_argument("--out", help="summary JSON path")
    p.set_defaults(func=cmd_uniformize)

    p = sub.add_parser("type", help="effective-resistance type estimate")
    p.add_argument("--labels", default="symmetric",
                   help="'symmetric', 'spine-decay' or a JSON file mapping edge keys to labels")
    p.add_argument("--radii", default="8,16,32,64,128")
    p.add_argument("--growth", type=float, default=1.25, help="ring growth of the spine-decay model")
    p.add_argument("--expect", choices=[uniformize.PARABOLIC, uniformize.HYPERBOLIC, uniformize.INCONCLUSIVE])
    p.add_argument("--out", help="verdict JSON path")
    p.set_defaults(func=cmd_type)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        summary = args.func(args)
    except CheckFailed as exc:
        print(_dumps(exc.record))
        return 1
    except GridnetError as exc:
        print(_dumps(exc.as_dict()))
        return 1
    print(_dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
