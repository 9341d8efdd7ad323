"""Command line: synthesize noisy scenes, segment, score and benchmark.

Exit codes: 0 success, 1 model errors (degenerate chains, zero transition
rows, insufficient data), 2 file problems (missing, malformed or
misshapen images), 3 configuration problems (bad flags or values).
PEANOSEG_THREADS caps the number of parallel bench workers (default 1).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .chain import DegenerateChain, chain_from_potentials, mpm_decode
from .estimation import (InsufficientData, SemConfig, kmeans_init,
                         kmeans_init_evidential, param_values, sem_run)
from .imaging import (BadFormat, BadShape, LabelImage, ObservedImage,
                      TooManyClasses, TooManyLevels, count_levels, error_rate,
                      load_labels, load_observed, save_observed,
                      save_segmentation, synth_noise)
from .models import (ZeroRow, build_hemc_cps, build_hmc_cps, build_hmc_ps,
                     evidential_states, marginalize_evidential)
from .scan import build_context, build_scan

METHODS = ("hmc-ps", "hmc-cps", "hemc-cps")

EXIT_MODEL = 1
EXIT_IO = 2
EXIT_CONFIG = 3


def segment_observed(obs: ObservedImage, method: str, n_classes: int,
                     config: SemConfig) -> tuple[LabelImage, dict]:
    """Full unsupervised pipeline: k-means start, SEM fit, marginal decode.

    Returns the label image and a run-info dict with the iteration count,
    wall time and final parameters.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r} (one of {', '.join(METHODS)})")
    t0 = time.perf_counter()
    layout = build_scan(obs.shape.k)
    y = obs.values[layout.scan_indices]
    context = build_context(layout) if method != "hmc-ps" else None
    if method == "hemc-cps":
        init = kmeans_init_evidential(y, n_classes, layout, config.seed)
        params, trace = sem_run(init, y, layout, context, config)
        post = chain_from_potentials(build_hemc_cps(params, y, layout, context))
        marginals = marginalize_evidential(post.marginals, evidential_states(n_classes))
    else:
        init = kmeans_init(y, n_classes, layout, config.seed)
        params, trace = sem_run(init, y, layout, context, config)
        if context is not None:
            pots = build_hmc_cps(params, y, layout, context)
        else:
            pots = build_hmc_ps(params, y, layout)
        marginals = chain_from_potentials(pots).marginals
    states = mpm_decode(marginals)
    labels = np.empty(obs.shape.n_pixels, dtype=np.int64)
    labels[layout.scan_indices] = states + 1
    info = {"iterations": len(trace) - 1,
            "seconds": time.perf_counter() - t0,
            "params": params}
    return LabelImage(obs.shape, labels, n_classes), info


# ---------------------------------------------------------------------------
# subcommands

def cmd_synth(args) -> int:
    truth = load_labels(args.truth, len(args.means))
    if len(args.vars) != len(args.means):
        raise ValueError("--means and --vars must have the same length")
    obs = synth_noise(truth, args.means, args.vars, args.seed)
    save_observed(obs, args.out)
    meta = {"truth": str(args.truth), "means": list(args.means),
            "vars": list(args.vars), "seed": args.seed, "k": truth.shape.k}
    with open(str(args.out) + ".json", "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
    print(f"wrote {args.out} ({truth.shape.side}x{truth.shape.side}, seed {args.seed})")
    return 0


def cmd_segment(args) -> int:
    obs = load_observed(args.input, crop=args.crop)
    config = SemConfig(max_iters=args.sem_iters, tol=args.sem_tol,
                       seed=args.seed, approx_mode=args.approx)
    labels, info = segment_observed(obs, args.method, args.classes, config)
    save_segmentation(labels, args.out)
    print(f"segmented {args.input} method={args.method} classes={args.classes} "
          f"iters={info['iterations']} seconds={info['seconds']:.3f}")
    print("final: " + json.dumps(param_values(info["params"]), sort_keys=True))
    if args.csv:
        with open(args.csv, "a", newline="") as fh:
            csv.writer(fh).writerow([str(args.input), args.method, args.seed,
                                     "", info["iterations"],
                                     f"{info['seconds']:.3f}"])
    return 0


def cmd_eval(args) -> int:
    k = max(count_levels(args.truth), count_levels(args.predicted))
    truth = load_labels(args.truth, k)
    predicted = load_labels(args.predicted, k)
    print(f"{error_rate(truth, predicted):.4f}")
    return 0


def _bench_cell(truth: LabelImage, method: str, seed: int, means, variances,
                sem_iters: int, sem_tol: float, approx: bool) -> dict:
    obs = synth_noise(truth, means, variances, seed)
    config = SemConfig(max_iters=sem_iters, tol=sem_tol, seed=seed,
                       approx_mode=approx)
    labels, info = segment_observed(obs, method, truth.n_classes, config)
    return {"method": method, "seed": seed,
            "error": error_rate(truth, labels),
            "iters": info["iterations"], "seconds": info["seconds"]}


def cmd_bench(args) -> int:
    methods = args.methods.split(",")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    if len(args.vars) != len(args.means):
        raise ValueError("--means and --vars must have the same length")
    truth = load_labels(args.truth, len(args.means))
    seeds = args.seeds
    cells = [(m, s) for m in methods for s in seeds]
    workers = max(1, min(len(cells), int(os.environ.get("PEANOSEG_THREADS", "1"))))
    results = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {(m, s): pool.submit(_bench_cell, truth, m, s, args.means,
                                           args.vars, args.sem_iters, args.sem_tol,
                                           args.approx)
                       for m, s in cells}
            for key, fut in futures.items():
                results[key] = fut.result()
    else:
        for m, s in cells:
            results[(m, s)] = _bench_cell(truth, m, s, args.means, args.vars,
                                          args.sem_iters, args.sem_tol, args.approx)
    name = os.path.basename(str(args.truth))
    with open(args.csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image", "method", "seed", "error", "iters",
                         "seconds", "error_std"])
        for m, s in cells:
            r = results[(m, s)]
            writer.writerow([name, m, s, f"{r['error']:.6f}", r["iters"],
                             f"{r['seconds']:.3f}", ""])
        for m in methods:
            errs = np.array([results[(m, s)]["error"] for s in seeds])
            secs = np.array([results[(m, s)]["seconds"] for s in seeds])
            iters = np.array([results[(m, s)]["iters"] for s in seeds])
            writer.writerow([name, m, "mean", f"{errs.mean():.6f}",
                             f"{iters.mean():.1f}", f"{secs.mean():.3f}",
                             f"{errs.std():.6f}"])
    for m in methods:
        errs = np.array([results[(m, s)]["error"] for s in seeds])
        print(f"{name} {m}: mean error {errs.mean():.4f} (std {errs.std():.4f}, "
              f"{len(seeds)} seeds)")
    return 0


def cmd_scan_grid(args) -> int:
    layout = build_scan(args.order)
    for row in layout.rank_grid():
        print(" ".join(str(int(v)) for v in row))
    return 0


# ---------------------------------------------------------------------------
# parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # config problems exit 3, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="peanoseg",
                     description="Scan-based Bayesian image segmentation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="add Gaussian class noise to a label map")
    p.add_argument("truth", help="PGM label map")
    p.add_argument("--means", type=_float_list, required=True,
                   help="per-class means, comma separated")
    p.add_argument("--vars", type=_float_list, required=True,
                   help="per-class variances, comma separated")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output (.npy exact, .pgm rescaled)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("segment", help="unsupervised segmentation of an image")
    p.add_argument("input", help="observation image (.pgm or .npy)")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sem-iters", type=int, default=100)
    p.add_argument("--sem-tol", type=float, default=1e-4)
    p.add_argument("--approx", action="store_true",
                   help="sample from the context-free chain during SEM")
    p.add_argument("--crop", action="store_true",
                   help="center-crop to the largest power-of-two square")
    p.add_argument("--out", required=True, help="output segmentation PGM")
    p.add_argument("--csv", default=None, help="append a report row to this CSV")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval", help="permutation-invariant error rate")
    p.add_argument("truth")
    p.add_argument("predicted")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="synth + segment + eval over methods and seeds")
    p.add_argument("truth", help="PGM label map")
    p.add_argument("--methods", default="hmc-ps,hmc-cps,hemc-cps")
    p.add_argument("--seeds", type=_int_list, default=[0, 1, 2, 3, 4])
    p.add_argument("--means", type=_float_list, default=[0.0, 1.0])
    p.add_argument("--vars", type=_float_list, default=[1.0, 1.0])
    p.add_argument("--sem-iters", type=int, default=100)
    p.add_argument("--sem-tol", type=float, default=1e-4)
    p.add_argument("--approx", action="store_true")
    p.add_argument("--csv", required=True, help="output CSV")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("scan-grid", help="print the scan rank grid (debug)")
    p.add_argument("order", type=int, help="grid order k")
    p.set_defaults(func=cmd_scan_grid)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ZeroRow, DegenerateChain, InsufficientData) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (BadFormat, BadShape, TooManyLevels, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TooManyClasses, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
