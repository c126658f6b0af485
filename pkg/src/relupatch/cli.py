"""Command-line workbench: gen -> probe -> fit -> eval -> report.

Each stage reads and writes JSON files, so runs are cacheable and
deterministic per seed. Numbers print with 9 significant digits.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis, fit, oracle, patches, relunet
from .errors import RelupatchError


def _fmt(x: float) -> str:
    return f"{float(x):.9g}"


# hard defaults per command; applied after any --config file, flags win
_DEFAULTS = {
    "gen": {"seed": 0, "scale": 1.0, "final_activation": False},
    "probe": {"radius": 1.0, "samples": 20, "seed": 0, "h": oracle.DEFAULT_H,
              "tol": oracle.DEFAULT_TOL, "ndirs": 0},
    "fit": {"radii_mode": "disjoint", "reg": "none", "lam": 0.0, "lr": 0.0,
            "iters": 100_000, "pairs": "none", "scale": 1.0,
            "mc": fit.DEFAULT_MC_SAMPLES, "seed": 0, "normal_eq": False,
            "report_out": None},
    "eval": {"radius": 1.0, "p": 2.0, "mc": fit.DEFAULT_MC_SAMPLES, "seed": 0},
    "report": {"probes": None},
}


def _resolve_options(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset (None) options from --config, then from hard defaults."""
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = json.load(fh)
    for key, hard in _DEFAULTS.get(args.command, {}).items():
        if getattr(args, key, None) is None:
            setattr(args, key, cfg.get(key, hard))
    return args


def _parse_arch(text: str) -> relunet.Architecture:
    try:
        widths = tuple(int(tok) for tok in text.split(","))
        return relunet.Architecture(widths)
    except ValueError as exc:
        raise RelupatchError(f"bad architecture {text!r}: {exc}") from exc


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _write(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")


def cmd_gen(args) -> int:
    arch = _parse_arch(args.arch)
    net = relunet.random_network(arch, args.seed, args.scale,
                                 bool(args.final_activation))
    _write(args.out, relunet.save(net))
    print(f"arch={','.join(map(str, arch.widths))} D={relunet.param_count(arch)}")
    return 0


def cmd_probe(args) -> int:
    net = relunet.load(_read(args.net))
    orc = oracle.wrap_network(net, args.radius)
    sp = oracle.SmoothParams(h=args.h, tol=args.tol, ndirs=args.ndirs)
    ps = oracle.sample_points(orc, args.samples, args.seed, sp)
    _write(args.out, oracle.save_probes(ps))
    print(f"accepted={len(ps)} rejected={ps.rejected} queries={ps.queries}")
    return 0


def _build_patches(ps, scale: float, radii: np.ndarray) -> list:
    return [patches.make_patch(ps.points[i], ps.gradients[i], ps.values[i],
                               scale, radii[i]) for i in range(len(ps))]


def cmd_fit(args) -> int:
    net = relunet.load(_read(args.net))
    ps = oracle.load_probes(_read(args.probes))
    orc = oracle.wrap_network(net, ps.T)
    cfg = fit.FitConfig(learning_rate=args.lr, max_iters=args.iters,
                        reg=args.reg, lam=args.lam, mc_samples=args.mc,
                        seed=args.seed)
    radii = fit.select_radii(ps, args.scale, ps.T, args.radii_mode,
                             seed=args.seed)
    plist = _build_patches(ps, args.scale, radii)
    if args.pairs == "all_overlapping":
        rep = fit.fit_second_order(plist, orc, cfg,
                                   fit.all_overlapping_pairs(plist))
    else:
        rep = fit.fit_weights(plist, orc, cfg)
    model = patches.PatchModel(plist, rep.weights, rep.pair_weights)
    _write(args.out, patches.save_model(model))
    report_doc = json.loads(fit.save_report(rep))
    report_doc["inputs"] = {
        "net": args.net, "probes": args.probes, "radii_mode": args.radii_mode,
        "scale": args.scale, "pairs": args.pairs,
    }
    _write(args.report_out, json.dumps(report_doc, indent=1))
    margins = rep.gershgorin_margins
    print(f"objective={_fmt(rep.final_objective)} iterations={rep.iterations} "
          f"converged={rep.converged}")
    print(f"gershgorin ok={rep.gershgorin_ok} "
          f"min_margin={_fmt(margins.min())} max_margin={_fmt(margins.max())}")
    print(f"nonzero_weights={rep.nonzero_count()} "
          f"nonzero_pairs={rep.nonzero_pair_count()}")
    if args.normal_eq:
        w_ne = fit.solve_normal_equations(plist, orc, cfg.mc_samples, cfg.seed)
        diff = float(np.max(np.abs(w_ne - rep.weights)))
        print(f"normal_eq_max_diff={_fmt(diff)}")
    return 0


def cmd_eval(args) -> int:
    net = relunet.load(_read(args.net))
    model = patches.load_model(_read(args.model))
    if model.dim != net.input_dim:
        raise RelupatchError("model and network input dims differ")
    T = args.radius
    h_fn = lambda X: patches.model_eval_batch(model, X)
    f_fn = lambda X: net.eval_batch(X)
    zero = lambda X: np.zeros(len(X))
    d = analysis.dp_distance(h_fn, f_fn, net.input_dim, T, args.p,
                             args.mc, args.seed)
    ref = analysis.dp_distance(zero, f_fn, net.input_dim, T, args.p,
                               args.mc, args.seed)
    print(f"d_p(h,f)={_fmt(d.value)} stderr={_fmt(d.stderr)}")
    print(f"d_p(0,f)={_fmt(ref.value)} stderr={_fmt(ref.stderr)}")
    return 0


def cmd_report(args) -> int:
    net = relunet.load(_read(args.net))
    report_doc = json.loads(_read(args.fit))
    rep = fit.load_report(json.dumps(report_doc))
    inputs = report_doc.get("inputs", {})
    ps = oracle.load_probes(_read(inputs.get("probes", args.probes)))
    scale = float(inputs.get("scale", 1.0))
    radii_mode = inputs.get("radii_mode", "disjoint")
    pairs_policy = inputs.get("pairs", "none")
    lam_grid = [float(tok) for tok in args.lambda_grid.split(",")]
    base = rep.config

    def rerun(lam: float):
        orc = oracle.wrap_network(net, ps.T)
        cfg = fit.FitConfig(learning_rate=base.learning_rate,
                            max_iters=base.max_iters, grad_tol=base.grad_tol,
                            reg="l1", lam=lam, mc_samples=base.mc_samples,
                            seed=base.seed)
        radii = fit.select_radii(ps, scale, ps.T, radii_mode, seed=base.seed)
        plist = _build_patches(ps, scale, radii)
        if pairs_policy == "all_overlapping":
            return fit.fit_second_order(plist, orc, cfg,
                                        fit.all_overlapping_pairs(plist))
        return fit.fit_weights(plist, orc, cfg)

    conj = analysis.conjecture_report(rep, net, lam_grid, rerun, T=ps.T,
                                      region_seed=base.seed)
    _write(args.out, conj.to_json())
    print(f"n1={conj.first_layer_width} regions={conj.empirical_region_count}")
    for lam, k in conj.lambda_grid:
        print(f"lambda={_fmt(lam)} nonzero={k}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relupatch",
        description="Reconstruct black-box ReLU networks from local patches.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random target network")
    p.add_argument("--arch", required=True, help="widths, e.g. 2,3,1")
    p.add_argument("--seed", type=int)
    p.add_argument("--scale", type=float)
    p.add_argument("--final-activation", action="store_true", default=None,
                   dest="final_activation")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("probe", help="sample smooth probe points")
    p.add_argument("--net", required=True)
    p.add_argument("--radius", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--h", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--ndirs", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("fit", help="fit patch weights to the target")
    p.add_argument("--net", required=True)
    p.add_argument("--probes", required=True)
    p.add_argument("--radii-mode", dest="radii_mode",
                   choices=("disjoint", "gershgorin"))
    p.add_argument("--reg", choices=("none", "l1", "l2"))
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--lr", type=float,
                   help="0 = automatic (1 / largest Hessian eigenvalue)")
    p.add_argument("--iters", type=int)
    p.add_argument("--pairs",
                   choices=("none", "all_overlapping"))
    p.add_argument("--scale", type=float)
    p.add_argument("--mc", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--normal-eq", dest="normal_eq", action="store_true", default=None,
                   help="print max weight difference vs the exact solve")
    p.add_argument("--out", required=True, help="fitted model file")
    p.add_argument("--report-out", dest="report_out",
                   help="fit report file (default: <out>.report.json)")
    p.add_argument("--config")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="d_p distance of the fitted model")
    p.add_argument("--net", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--radius", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--mc", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="sparsity-vs-architecture table")
    p.add_argument("--net", required=True)
    p.add_argument("--fit", required=True, help="fit report file")
    p.add_argument("--probes", help="probe file (default: from the report)")
    p.add_argument("--lambda-grid", dest="lambda_grid", required=True,
                   help="comma-separated lambda values")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _resolve_options(args)
    if args.command == "fit" and args.report_out is None:
        args.report_out = args.out + ".report.json"
    try:
        return args.func(args)
    except (RelupatchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
