"""Command-line interface: ``manifold-fit {sample,fit,bench,eval}``.

Exit codes: 0 success, 2 configuration error, 3 some cells/points failed,
4 I/O error.
"""
import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from .baseline import LocalPCAFitter
from .contraction import ContractionFitter
from .exceptions import AllExcluded, ConfigError, ManifoldFitError
from .harness import ExperimentSpec, emit_outputs, run_experiment
from .io import read_manifest, read_points, write_points
from .manifolds import InitialBand, NoiseModel, add_noise, initial_points, make_manifold
from .metrics import FitReport, sup_and_avg_error

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("manifold_fit")


def _add_manifold_args(p, required):
    p.add_argument("--manifold", choices=["circle", "sphere", "torus", "cy"], required=required)
    p.add_argument("--radius", type=float, help="circle/sphere radius (default 1)")
    p.add_argument("--R", type=float, help="torus major radius (default 1)")
    p.add_argument("--r", type=float, help="torus minor radius (default 0.4)")
    p.add_argument("--psi", type=float, help="cy: project to R^3 with this angle (default: stay in R^4)")
    p.add_argument("--theta-step", type=float, help="cy sample-grid theta step")
    p.add_argument("--zeta-step", type=float, help="cy sample-grid zeta step")


def _manifold_params(args):
    mapping = {
        "circle": {"radius": args.radius},
        "sphere": {"radius": args.radius},
        "torus": {"R": args.R, "r": args.r},
        "cy": {"psi": args.psi, "theta_step": args.theta_step, "zeta_step": args.zeta_step},
    }
    return {k: v for k, v in mapping[args.manifold].items() if v is not None}


def _model_from(args, manifest):
    if getattr(args, "manifold", None):
        return make_manifold(args.manifold, **_manifold_params(args))
    if manifest and manifest.get("kind"):
        return make_manifold(manifest["kind"], **manifest.get("params", {}))
    return None


def cmd_sample(args):
    model = make_manifold(args.manifold, **_manifold_params(args))
    noise = NoiseModel(args.sigma)
    manifest = {
        "kind": model.kind,
        "d": model.intrinsic_dim,
        "params": model.params(),
        "seed": args.seed,
        "sigma": args.sigma,
    }
    if args.initial:
        pts = initial_points(model, InitialBand.for_sigma(args.sigma, args.n), noise, args.seed)
        manifest["role"] = "initial"
    else:
        batch = add_noise(model.sample(args.n, args.seed), noise, args.seed + 1)
        pts = batch.noisy
        manifest["role"] = "samples"
        if args.clean_out:
            write_points(args.clean_out, batch.clean, {**manifest, "role": "clean"})
    write_points(args.out, pts, manifest)
    return EXIT_OK


def cmd_fit(args):
    samples = read_points(args.samples)
    W = read_points(args.init)
    if args.method == "ysl23":
        if args.d is not None:
            log.info("--d is ignored by ysl23")
        est = ContractionFitter(
            sigma=args.sigma, k=args.k, r0=args.r0, r1=args.r1, r2=args.r2, n_jobs=args.workers
        )
    else:
        manifest = read_manifest(args.samples) or {}
        d = args.d if args.d is not None else manifest.get("d")
        if d is None:
            raise ConfigError("yx19 needs the intrinsic dimension: pass --d")
        est = LocalPCAFitter(sigma=args.sigma, d=int(d), radius=args.radius_pca, n_jobs=args.workers)
    t0 = time.perf_counter()
    est.fit(samples)
    outcome = est.project(W)
    seconds = time.perf_counter() - t0

    model = _model_from(args, read_manifest(args.init) or read_manifest(args.samples))
    mask = outcome.ok
    sup = avg = math.nan
    if model is not None:
        try:
            sup, avg = sup_and_avg_error(outcome.outputs, model, mask)
        except AllExcluded:
            pass
    config = est.config_.snapshot(len(samples)) if args.method == "ysl23" else est.config_.snapshot()
    report = FitReport(
        method=args.method,
        sup_error=sup,
        avg_error=avg,
        n_scored=int(mask.sum()),
        n_excluded=int((~mask).sum()),
        wall_clock_seconds=seconds,
        config={**config, "status_counts": _counts(outcome.status)},
        seed=None,
    )
    out = Path(args.out)
    write_points(out, outcome.outputs)
    out.with_suffix(".report.json").write_text(
        json.dumps(_nan_to_none(report.to_dict()), indent=2, allow_nan=False) + "\n"
    )
    return EXIT_OK if mask.all() else EXIT_PARTIAL


def cmd_bench(args):
    spec = ExperimentSpec.from_json(args.spec)
    if args.out:
        spec.output_dir = args.out
    if args.repeats:
        spec.repeats = args.repeats
    result = run_experiment(spec, n_jobs=args.workers)
    for path in emit_outputs(result, spec.output_dir):
        print(path)
    return EXIT_PARTIAL if result.n_failed else EXIT_OK


def cmd_eval(args):
    pts = read_points(args.points)
    model = _model_from(args, read_manifest(args.points))
    if model is None:
        raise ConfigError("no manifold given and none recorded next to the points file")
    sup, avg = sup_and_avg_error(pts, model)
    print(json.dumps({"manifold": model.kind, "n": len(pts), "sup_error": sup, "avg_error": avg}))
    return EXIT_OK


def _counts(status):
    values, counts = np.unique(status, return_counts=True)
    return {str(v): int(c) for v, c in zip(values, counts)}


def _nan_to_none(d):
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


def build_parser():
    parser = argparse.ArgumentParser(prog="manifold-fit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw noisy samples (or initial band points) from a manifold")
    _add_manifold_args(p, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--initial", action="store_true", help="write band points sigma/2 <= d <= 2 sigma instead")
    p.add_argument("--clean-out", help="also write the clean points here")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="project initial points with ysl23 or yx19")
    p.add_argument("--method", choices=["ysl23", "yx19"], required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--init", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--r0", type=float)
    p.add_argument("--r1", type=float)
    p.add_argument("--r2", type=float)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--d", type=int, help="intrinsic dimension (yx19 only)")
    p.add_argument("--radius-pca", type=float, help="yx19 neighborhood radius (default 2 sqrt(sigma))")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    _add_manifold_args(p, required=False)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bench", help="run an experiment spec (JSON)")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", help="override output_dir from the experiment file")
    p.add_argument("--repeats", type=int, help="override repeats from the experiment file")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="score points against a manifold")
    p.add_argument("--points", required=True)
    _add_manifold_args(p, required=False)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ManifoldFitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
