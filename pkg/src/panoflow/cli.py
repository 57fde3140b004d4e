"""Command-line interface: ``panoflow {estimate,eval,synth,vis,sweep,flow}``.

Exit codes: 0 success, 2 usage or input error, 3 backend/stage failure.
"""
import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, io, metrics, pipeline, synth, tangent, vis
from ._jit import set_num_threads
from .backend import BackendConfig, estimate_flow
from .errors import ConfigError, DimensionError, GeometryError, PanoflowError, StageError

log = logging.getLogger("panoflow")

EXIT_OK, EXIT_USAGE, EXIT_BACKEND = 0, 2, 3
FLO_NOTE = "du is wrap-normalised to [-W/2, W/2); planar tools misread seam-crossing vectors"


class UsageError(Exception):
    pass


def _read_image(path):
    try:
        return io.read_png(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read image {path}: {exc}") from exc


def _read_flow(path):
    try:
        return io.read_flo(path).astype(np.float64)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read flow {path}: {exc}") from exc


def _parse_floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _config_from_args(args):
    if args.config:
        manifest = json.loads(Path(args.config).read_text())
        return pipeline.PipelineConfig.from_dict(manifest.get("config", manifest))
    return pipeline.PipelineConfig(
        stages=tuple(s.strip() for s in args.stages.split(",") if s.strip()),
        use_blend_weights=not args.no_blend_weights,
        padding_cube=args.padding_cube,
        padding_ico=args.padding_ico,
        res_cube=args.res_cube,
        res_ico=args.res_ico,
        backend=args.backend,
        rotation_stride=args.stride,
    )


def cmd_estimate(args):
    cfg = _config_from_args(args)
    I_t = _read_image(args.src)
    I_t1 = _read_image(args.dst)
    if I_t.shape != I_t1.shape:
        raise DimensionError(f"images differ in size: {I_t.shape} vs {I_t1.shape}")
    from .erp import check_erp

    check_erp(I_t, str(args.src))
    flow, report = pipeline.run(I_t, I_t1, cfg)
    io.write_flo(args.out, flow)
    manifest = {
        "tool": "panoflow",
        "version": __version__,
        "command": "estimate",
        "config": cfg.to_dict(),
        "inputs": {"src": str(args.src), "dst": str(args.dst)},
        "outputs": {"flow": str(args.out)},
        "report": report.to_dict(),
        "note": FLO_NOTE,
    }
    if args.gt:
        gt = _read_flow(args.gt)
        manifest["metrics"] = metrics.evaluate(flow, gt).to_dict()
    manifest_path = Path(args.manifest) if args.manifest else Path(str(args.out) + ".json")
    io.write_json(manifest_path, manifest)
    log.info("flow written to %s (%.1f s)", args.out, report.timings["total"])
    return EXIT_OK


def _render_report(rep):
    units = {"epe": "px", "aae": "rad", "rms": "px", "sepe": "rad", "saae": "rad", "srms": "rad",
             "polar_sepe": "rad", "equatorial_sepe": "rad", "n_pixels": ""}
    lines = [f"{k:<16} {v:<14.8g} {units[k]}".rstrip() for k, v in rep.to_dict().items()]
    return "\n".join(lines) + "\n"


def cmd_eval(args):
    est = _read_flow(args.est)
    gt = _read_flow(args.gt)
    rep = metrics.evaluate(est, gt)
    text = _render_report(rep)
    sys.stdout.write(text)
    if args.report:
        Path(args.report).write_text(text)
        io.write_kv(args.kv or Path(args.report).with_suffix(".kv"), rep.to_dict())
    elif args.kv:
        io.write_kv(args.kv, rep.to_dict())
    return EXIT_OK


def cmd_synth(args):
    kind = {"box": "box_room", "sphere": "sphere_texture"}[args.kind]
    scene = synth.SceneSpec(kind, seed=args.seed, half_size=args.room_half_size, texture=args.texture)
    if args.path:
        poses = synth.camera_path(args.path, scene, n=args.n, seed=args.seed)
    elif kind == "sphere_texture":
        poses = [synth.rotation_pose(), synth.rotation_pose(*np.deg2rad([args.rot_yaw, args.rot_pitch, args.rot_roll]))]
    else:
        raise UsageError("box scenes need --path")
    if kind == "sphere_texture":
        poses = [synth.CameraPose(np.zeros(3), p.orientation) for p in poses]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    W = args.width
    frames = []
    for i, pose in enumerate(poses):
        name = f"frame_{i:04d}.png"
        io.write_png(out / name, synth.render_erp(scene, pose, W))
        frames.append(name)
    flows = []
    for i in range(len(poses) - 1):
        name = f"flow_{i:04d}_{i + 1:04d}.flo"
        io.write_flo(out / name, synth.gt_flow(scene, poses[i], poses[i + 1], W))
        flows.append(name)
    io.write_poses(out / "poses.txt", poses)
    io.write_json(out / "manifest.json", {
        "tool": "panoflow", "version": __version__, "command": "synth",
        "scene": {"kind": kind, "seed": args.seed, "half_size": args.room_half_size, "texture": args.texture},
        "path": args.path, "n": len(poses), "width": W, "height": W // 2,
        "frames": frames, "flows": flows, "poses": "poses.txt", "note": FLO_NOTE,
    })
    log.info("%d frames, %d GT flows written to %s", len(frames), len(flows), out)
    return EXIT_OK


def cmd_vis(args):
    if args.mode == "flow":
        img = vis.flow_to_color(_read_flow(args.input), args.max_mag)
    else:
        if not args.gt:
            raise UsageError("heatmap needs --gt")
        img = vis.error_heatmap(_read_flow(args.input), _read_flow(args.gt), args.max_error)
    from PIL import Image

    Image.fromarray(img).save(args.output, format="PNG")
    return EXIT_OK


def load_pair_set(directory, limit=None):
    """(I_t, I_t1, gt) triples from a ``panoflow synth`` output directory."""
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    frames = manifest["frames"]
    pairs = []
    for i, name in enumerate(manifest["flows"]):
        pairs.append((io.read_png(d / frames[i]), io.read_png(d / frames[i + 1]),
                      io.read_flo(d / name).astype(np.float64)))
        if limit and len(pairs) >= limit:
            break
    return pairs


def sweep_padding(pairs, paddings, base=None, fixed_res=True):
    """Mean SEPE of the pipeline over ``pairs`` for each padding value.

    With ``fixed_res`` the tangent raster sizes stay at the defaults of the
    base paddings, so larger padding widens the field of view at the cost of
    angular resolution. Otherwise the rasters grow with the padding.
    """
    base = base or pipeline.PipelineConfig()
    rows = []
    for p in paddings:
        errs = []
        t0 = time.perf_counter()
        cfg = None
        for I_t, I_t1, gt in pairs:
            over = {"padding_cube": p, "padding_ico": p}
            if fixed_res:
                W = I_t.shape[1]
                if base.res_cube is None:
                    over["res_cube"] = tangent.default_res("cube", base.padding_cube, W)
                if base.res_ico is None:
                    over["res_ico"] = tangent.default_res("icosahedron", base.padding_ico, W)
            cfg = pipeline.PipelineConfig.from_dict({**base.to_dict(), **over})
            flow, _ = pipeline.run(I_t, I_t1, cfg)
            errs.append(metrics.sepe(flow, gt))
        rows.append({"padding": p, "sepe": float(np.mean(errs)), "n_pairs": len(pairs),
                     "seconds": time.perf_counter() - t0,
                     "config": cfg.to_dict() if cfg else base.to_dict()})
    return rows


def format_sweep(rows):
    lines = ["padding\tsepe\tn_pairs\tconfig"]
    for r in rows:
        lines.append(f"{r['padding']:.2f}\t{r['sepe']:.8g}\t{r['n_pairs']}\t{json.dumps(r['config'], sort_keys=True)}")
    return "\n".join(lines) + "\n"


def cmd_sweep(args):
    pairs = load_pair_set(args.pairs, args.limit)
    if not pairs:
        raise UsageError(f"no pairs with ground truth in {args.pairs}")
    rows = sweep_padding(pairs, _parse_floats(args.paddings), fixed_res=not args.scale_res)
    text = format_sweep(rows)
    sys.stdout.write(text)
    if args.report:
        Path(args.report).write_text(text)
    return EXIT_OK


def cmd_flow(args):
    a = _read_image(args.a)
    b = _read_image(args.b)
    io.write_flo(args.out, estimate_flow(a, b, cfg=BackendConfig()))
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="panoflow", description="360-degree optical flow for ERP panoramas")
    ap.add_argument("--version", action="version", version=f"panoflow {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--threads", type=int, default=None, help="cap numba worker threads")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate 360 flow between two ERP images")
    p.add_argument("src")
    p.add_argument("dst")
    p.add_argument("out", help="output .flo path")
    p.add_argument("--padding-cube", type=float, default=0.25)
    p.add_argument("--padding-ico", type=float, default=0.5)
    p.add_argument("--res-cube", type=int, default=None)
    p.add_argument("--res-ico", type=int, default=None)
    p.add_argument("--stages", default="erp,cube,ico", help="comma-separated subset of erp,cube,ico")
    p.add_argument("--no-blend-weights", action="store_true", help="unit blending weights")
    p.add_argument("--backend", default="builtin", help="builtin | external:'<cmd with {a} {b} {out}>'")
    p.add_argument("--stride", type=int, default=4, help="rotation sampling stride (px)")
    p.add_argument("--gt", help="optional GT .flo; metrics go into the manifest")
    p.add_argument("--manifest", help="manifest path (default: <out>.json)")
    p.add_argument("--config", help="reuse the config block of an earlier manifest")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("eval", help="compare an estimated .flo with ground truth")
    p.add_argument("est")
    p.add_argument("gt")
    p.add_argument("--report", help="text report path (also writes <report>.kv)")
    p.add_argument("--kv", help="key-value report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="render synthetic ERP sequences with GT flow")
    p.add_argument("kind", choices=("box", "sphere"))
    p.add_argument("--out", required=True)
    p.add_argument("--path", choices=("circle", "line", "random"))
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--width", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--texture", choices=("value-noise", "checker"), default="value-noise")
    p.add_argument("--room-half-size", type=float, default=2.0)
    p.add_argument("--rot-yaw", type=float, default=0.0, help="degrees (sphere scenes)")
    p.add_argument("--rot-pitch", type=float, default=0.0)
    p.add_argument("--rot-roll", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("vis", help="render a flow colour wheel or SEPE heatmap")
    p.add_argument("mode", choices=("flow", "heatmap"))
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--gt")
    p.add_argument("--max-mag", type=float, default=None)
    p.add_argument("--max-error", type=float, default=0.05, help="radians mapped to black")
    p.set_defaults(func=cmd_vis)

    p = sub.add_parser("sweep", help="SEPE versus tangent padding")
    p.add_argument("pairs", help="directory written by 'panoflow synth'")
    p.add_argument("--paddings", default="0,0.1,0.2,0.3,0.4,0.5,0.6")
    p.add_argument("--limit", type=int, default=None, help="use at most this many pairs")
    p.add_argument("--scale-res", action="store_true",
                   help="grow tangent rasters with padding instead of keeping them fixed")
    p.add_argument("--report")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("flow", help="built-in perspective backend on one image pair")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("out")
    p.set_defaults(func=cmd_flow)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    set_num_threads(args.threads)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"panoflow: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (UsageError, ConfigError, DimensionError, GeometryError) as exc:
        print(f"panoflow: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PanoflowError as exc:
        print(f"panoflow: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
