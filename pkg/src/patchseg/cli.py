"""Command-line entry points.

Subcommands: segment, mosaic, bench-basis, alpha-sweep, one-vs-all, eval.
Runtime options come from flags plus an optional JSON config file; every
failure prints one machine-readable JSON line on stderr and exits nonzero.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bench import (run_alpha_sweep, run_benchmark_gd_vs_svd,
                    write_benchmark_csv, write_sweep_csv)
from .images import load_image
from .metrics import evaluate
from .mosaic import (TEXTURE_KINDS, MosaicSpec, TextureDescriptor,
                     centered_rect_mask, make_mosaic, seed_circles_in_region,
                     seed_circles_mask, texture_field)
from .reports import (LABEL_PALETTE, run_metrics, write_labels_png,
                      write_metrics_json, write_run_artifacts)
from .segment import SegmentationConfig, segment_one_vs_all, segment_two_phase

_KIND_ALIASES = {"bandpass": "bandpass_noise", "sin": "sinusoid", "check": "checker"}
_ANGLE_PARAMS = ("orientation",)  # CLI angles are degrees; internals use radians


class CLIError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit with plain text
        raise CLIError(message)


def parse_texture(text: str):
    """Descriptor string like 'sinusoid:orientation=45,frequency=0.15,contrast=1'
    (angles in degrees), or a path to a texture image."""
    if os.path.exists(text):
        return text
    kind, _, rest = text.partition(":")
    kind = _KIND_ALIASES.get(kind.strip(), kind.strip())
    if kind not in TEXTURE_KINDS:
        raise CLIError(f"unknown texture kind or missing file: {text!r}")
    params, contrast = {}, 1.0
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, _, val = item.partition("=")
        if not _:
            raise CLIError(f"texture parameter {item!r} is not key=value")
        key = key.strip()
        try:
            num = float(val)
        except ValueError:
            raise CLIError(f"texture parameter {key!r} has non-numeric value {val!r}")
        if key == "contrast":
            contrast = num
        elif key in _ANGLE_PARAMS:
            params[key] = float(np.deg2rad(num))
        elif key in ("period", "seed"):
            params[key] = int(num)
        else:
            params[key] = num
    try:
        return TextureDescriptor(kind, params, contrast=contrast)
    except ValueError as exc:
        raise CLIError(str(exc))


def load_labels(path) -> np.ndarray:
    """Integer label map from .npy, integer-mode PNG, or palette-colored PNG."""
    if str(path).endswith(".npy"):
        return np.load(path).astype(np.int64)
    from PIL import Image

    arr = np.asarray(Image.open(path))
    if arr.ndim == 2:
        return arr.astype(np.int64)
    flat = arr[..., :3].reshape(-1, 3)
    lut = {tuple(c): i for i, c in enumerate(LABEL_PALETTE)}
    try:
        out = np.array([lut[tuple(px)] for px in flat], np.int64)
    except KeyError:
        raise CLIError(f"{path}: colors do not match the label palette")
    return out.reshape(arr.shape[:2])


def _config_from(args) -> SegmentationConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data.update(json.load(fh))
    for name in SegmentationConfig.__dataclass_fields__:
        val = getattr(args, name, None)
        if val is not None:
            data[name] = val
    return SegmentationConfig.from_dict(data)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of config fields; flags override it")
    p.add_argument("--m", type=int, help="patch side")
    p.add_argument("--K", type=int, help="basis vectors per region")
    p.add_argument("--alpha", type=float, help="smooth-vs-patch coupling in [0,1]")
    p.add_argument("--nu", type=float, help="contour length weight")
    p.add_argument("--sigma", type=float, help="smooth-model blur, px")
    p.add_argument("--seed", type=int, help="master RNG seed")
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--stop-change", dest="stop_change", type=float,
                   help="early-stop label-change fraction; 0 disables")
    p.add_argument("--intensity-scale", dest="intensity_scale", type=float)


def _init_mask(init: str, shape, truth=None):
    if init == "circles":
        return seed_circles_mask(shape)
    if init == "rect":
        base = np.ones(shape, np.uint8) if truth is None else (truth != 0).astype(np.uint8)
        return centered_rect_mask(base)
    mask = load_image(init) > 0.5
    if mask.shape != shape:
        raise CLIError(f"init mask shape {mask.shape} does not match image {shape}")
    return mask.astype(np.uint8)


def _cmd_mosaic(args) -> int:
    spec = MosaicSpec(
        size=args.size,
        texture_a=parse_texture(args.texture_a),
        texture_b=parse_texture(args.texture_b),
        template=args.template,
        zero_mean=args.zero_mean,
        noise_sd=args.noise_sd,
        seed=args.seed if args.seed is not None else 0,
    )
    img, truth = make_mosaic(spec)
    os.makedirs(args.out, exist_ok=True)
    np.save(os.path.join(args.out, "image.npy"), img)
    from .images import save_image

    save_image(os.path.join(args.out, "image.png"), img)
    np.save(os.path.join(args.out, "truth.npy"), truth)
    write_labels_png(os.path.join(args.out, "truth.png"), truth)
    print(json.dumps({"out": args.out, "size": args.size}))
    return 0


def _load_input_image(path) -> np.ndarray:
    if str(path).endswith(".npy"):
        return np.asarray(np.load(path), np.float64)
    return load_image(path)


def _cmd_segment(args) -> int:
    img = _load_input_image(args.image)
    truth = load_labels(args.truth) if args.truth else None
    cfg = _config_from(args)
    init = _init_mask(args.init, img.shape, truth)
    res = segment_two_phase(img, init, cfg)
    metrics = write_run_artifacts(args.out, res, truth, extra={"config": cfg.to_dict()})
    np.save(os.path.join(args.out, "labels.npy"), res.labels)
    print(json.dumps(metrics, sort_keys=True))
    return 0


def _cmd_one_vs_all(args) -> int:
    img = _load_input_image(args.image)
    regions = load_labels(args.regions)
    n = int(regions.max()) + 1
    if args.init == "circles":
        inits = [seed_circles_in_region(regions == i) for i in range(n)]
    else:
        inits = [centered_rect_mask(regions == i) for i in range(n)]
    cfg = _config_from(args)
    res = segment_one_vs_all(img, inits, cfg)
    truth = load_labels(args.truth) if args.truth else None
    metrics = write_run_artifacts(args.out, res, truth, n_regions=n,
                                  extra={"config": cfg.to_dict()})
    np.save(os.path.join(args.out, "labels.npy"), res.labels)
    print(json.dumps(metrics, sort_keys=True))
    return 0


def _cmd_bench_basis(args) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    images = [rng.random((args.size, args.size)) for _ in range(args.n_random)]
    for text in args.texture or []:
        images.append(texture_field(parse_texture(text), (args.size, args.size)))
    K_range = range(args.k_min, args.k_max + 1)
    report = run_benchmark_gd_vs_svd(images, args.m, K_range)
    os.makedirs(args.out, exist_ok=True)
    write_benchmark_csv(os.path.join(args.out, "benchmark.csv"), report)
    summary = {
        "max_gap_norm": report["max_gap_norm"],
        "images": len(images),
        "wall_time_per_image": report["wall_time_per_image"],
    }
    write_metrics_json(os.path.join(args.out, "metrics.json"), summary)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_alpha_sweep(args) -> int:
    ta, tb = parse_texture(args.texture_a), parse_texture(args.texture_b)
    specs = [MosaicSpec(args.size, ta, tb, template=args.template,
                        zero_mean=args.zero_mean, noise_sd=args.noise_sd,
                        seed=(args.seed or 0) + i)
             for i in range(args.n_mosaics)]
    alphas = [float(a) for a in args.alphas.split(",")]
    report = run_alpha_sweep(specs, alphas, cfg=_config_from(args))
    os.makedirs(args.out, exist_ok=True)
    write_sweep_csv(os.path.join(args.out, "sweep.csv"), report)
    write_metrics_json(os.path.join(args.out, "metrics.json"),
                       {"mean_by_alpha": {str(k): v for k, v in report["mean_by_alpha"].items()}})
    print(json.dumps({"mean_by_alpha": {str(k): v for k, v in report["mean_by_alpha"].items()}},
                     sort_keys=True))
    return 0


def _cmd_eval(args) -> int:
    labels = load_labels(args.labels)
    truth = load_labels(args.truth)
    out = evaluate(labels, truth, n_regions=args.n_regions)
    print(json.dumps(out, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="patchseg", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("segment", help="two-phase segmentation of one image")
    ps.add_argument("--image", required=True, help="input image (.png/.npy)")
    ps.add_argument("--init", default="circles",
                    help="'circles', 'rect', or a mask file path")
    ps.add_argument("--truth", help="ground-truth labels for metrics")
    ps.add_argument("--out", required=True, help="run directory")
    _add_config_flags(ps)
    ps.set_defaults(fn=_cmd_segment)

    pm = sub.add_parser("mosaic", help="generate a two-texture test image")
    pm.add_argument("--size", type=int, default=128)
    pm.add_argument("--texture-a", required=True)
    pm.add_argument("--texture-b", required=True)
    pm.add_argument("--template", default="right-half")
    pm.add_argument("--zero-mean", action="store_true")
    pm.add_argument("--noise-sd", type=float, default=0.0)
    pm.add_argument("--seed", type=int)
    pm.add_argument("--out", required=True)
    pm.set_defaults(fn=_cmd_mosaic)

    pb = sub.add_parser("bench-basis", help="gradient-descent vs oracle basis table")
    pb.add_argument("--n-random", type=int, default=10)
    pb.add_argument("--size", type=int, default=64)
    pb.add_argument("--m", type=int, default=7)
    pb.add_argument("--k-min", type=int, default=1)
    pb.add_argument("--k-max", type=int, default=8)
    pb.add_argument("--texture", action="append",
                    help="extra texture descriptor; repeatable")
    pb.add_argument("--seed", type=int)
    pb.add_argument("--out", required=True)
    pb.set_defaults(fn=_cmd_bench_basis)

    pa = sub.add_parser("alpha-sweep", help="error-vs-coupling table on mosaics")
    pa.add_argument("--texture-a", required=True)
    pa.add_argument("--texture-b", required=True)
    pa.add_argument("--size", type=int, default=128)
    pa.add_argument("--template", default="right-half")
    pa.add_argument("--zero-mean", action="store_true")
    pa.add_argument("--noise-sd", type=float, default=0.0)
    pa.add_argument("--n-mosaics", type=int, default=3)
    pa.add_argument("--alphas", default="0.0,0.1,0.5,0.9")
    pa.add_argument("--out", required=True)
    _add_config_flags(pa)
    pa.set_defaults(fn=_cmd_alpha_sweep)

    po = sub.add_parser("one-vs-all", help="multi-region segmentation")
    po.add_argument("--image", required=True)
    po.add_argument("--regions", required=True,
                    help="label map whose regions seed the subproblems")
    po.add_argument("--init", default="circles", choices=("circles", "rect"))
    po.add_argument("--truth", help="ground-truth labels for metrics")
    po.add_argument("--out", required=True)
    _add_config_flags(po)
    po.set_defaults(fn=_cmd_one_vs_all)

    pe = sub.add_parser("eval", help="score a label map against ground truth")
    pe.add_argument("--labels", required=True)
    pe.add_argument("--truth", required=True)
    pe.add_argument("--n-regions", type=int, default=2)
    pe.set_defaults(fn=_cmd_eval)

    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args)
    except CLIError as exc:
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
