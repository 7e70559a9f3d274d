"""Batch command-line surface.

Subcommands: estimate (clips -> MVF motion fields), mask (clips -> MSK1
masks plus optional box tracks and PPM overlays), saliency (motion +
box annotations -> scores), oracle (temporal-copy reconstruction error
per generator), info (print parsed headers).

Batches continue past bad files and exit nonzero if any failed.  Outputs
are written atomically and carry no timestamps, so identical configs
produce byte-identical results.  When --seed is absent the MGMASK_SEED
environment variable applies.  Per-clip seeds are derived from the
position in the sorted input list, so results do not depend on filesystem
enumeration order.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import clipio, maskgen, motionfield, saliency, tokengrid
from .errors import MgmaskError, MissingAnnotation, MissingMotion

STATS_VERSION = 1

_CLIP_SUFFIXES = {".rvc": "rvc", ".y4m": "y4m"}


def _collect_inputs(paths: list[str], suffixes: tuple[str, ...]) -> list[Path]:
    found: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            found.extend(q for q in p.iterdir()
                         if q.is_file() and q.suffix in suffixes)
        else:
            found.append(p)
    return sorted(set(found), key=str)


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _load_clip(path: Path, fmt: str) -> clipio.Clip:
    if fmt == "auto":
        fmt = _CLIP_SUFFIXES.get(path.suffix, "")
        if not fmt:
            raise MgmaskError(f"cannot infer format of {path.name}; "
                              f"pass --format rvc|y4m")
    data = path.read_bytes()
    return clipio.parse_rvc(data) if fmt == "rvc" else clipio.parse_y4m(data)


def _load_motion(path: Path, clip: clipio.Clip, estimate: bool,
                 radius: int) -> motionfield.MotionField:
    if estimate:
        return motionfield.estimate_mv(clipio.to_luma(clip), radius)
    mvf_path = path.with_suffix(".mvf")
    if not mvf_path.exists():
        raise MissingMotion(f"no {mvf_path.name} next to {path.name}; "
                            f"pass --estimate or provide the MVF")
    return motionfield.read_mvf(mvf_path.read_bytes())


def _run_batch(inputs: list[Path], worker, jobs: int) -> list[dict]:
    """Run worker(index, path) over inputs; results ordered by input."""
    def wrapped(item):
        index, path = item
        try:
            record = worker(index, path)
        except (MgmaskError, OSError, ValueError) as exc:
            record = {"error": f"{type(exc).__name__}: {exc}"}
        record["input"] = path.name
        record["ok"] = "error" not in record
        return record

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(wrapped, enumerate(inputs)))
    return [wrapped(item) for item in enumerate(inputs)]


def _write_stats(args, payload: dict) -> None:
    payload["version"] = STATS_VERSION
    out = Path(args.stats) if args.stats else Path(args.output_dir) / "stats.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(out, (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode())


def _finish(results: list[dict]) -> int:
    failed = False
    for record in results:
        if not record["ok"]:
            failed = True
            print(f"error: {record['input']}: {record['error']}", file=sys.stderr)
    return 1 if failed else 0


def render_overlay(clip: clipio.Clip, mask: tokengrid.Mask3D,
                   frame_index: int) -> bytes:
    """Frame as PPM with masked token regions tinted red."""
    t, h, w = mask.spec.patch
    frame = clip.data[frame_index]
    rgb = (np.repeat(frame, 3, axis=-1) if clip.channels == 1
           else frame).astype(np.uint8).copy()
    plane = np.repeat(np.repeat(mask.bits[frame_index // t], h, 0), w, 1)
    region = rgb[plane]
    region[:, 0] = 255 - (255 - region[:, 0]) // 2
    region[:, 1] //= 2
    region[:, 2] //= 2
    rgb[plane] = region
    header = f"P6\n{clip.width} {clip.height}\n255\n".encode("ascii")
    return header + rgb.tobytes()


# --- subcommands -------------------------------------------------------------

def cmd_estimate(args) -> int:
    inputs = _collect_inputs(args.inputs, tuple(_CLIP_SUFFIXES))
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    def worker(index: int, path: Path) -> dict:
        clip = clipio.to_luma(_load_clip(path, args.format))
        field = motionfield.estimate_mv(clip, args.search_radius, args.block)
        _atomic_write(outdir / f"{path.stem}.mvf", motionfield.write_mvf(field))
        mags = motionfield.magnitude(field)
        mean_mag = float(mags[1:].mean()) if field.frames > 1 else 0.0
        return {"output": f"{path.stem}.mvf", "frames": field.frames,
                "block_rows": field.block_rows, "block_cols": field.block_cols,
                "mean_mv_magnitude": mean_mag}

    results = _run_batch(inputs, worker, args.jobs)
    _write_stats(args, {"command": "estimate", "search_radius": args.search_radius,
                        "block": args.block, "results": results})
    return _finish(results)


def cmd_mask(args) -> int:
    inputs = _collect_inputs(args.inputs, tuple(_CLIP_SUFFIXES))
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    seed = _resolve_seed(args)
    patch = _parse_patch(args.patch)

    def worker(index: int, path: Path) -> dict:
        clip = _load_clip(path, args.format)
        spec = tokengrid.grid_from_clip(clip.frames, clip.height,
                                        clip.width, patch)
        clip_seed = maskgen.derive_seed(seed, index)
        params = maskgen.MaskParams(args.gamma, args.velocity_cap,
                                    args.jitter_cap, clip_seed)
        motion = None
        if args.generator.startswith("mgm"):
            motion = _load_motion(path, clip, args.estimate, args.search_radius)
        mask, track = maskgen.generate(args.generator, spec, params, motion)
        _atomic_write(outdir / f"{path.stem}.msk", tokengrid.write_msk(mask))
        if args.emit_mvf and motion is not None and args.estimate:
            _atomic_write(outdir / f"{path.stem}.mvf",
                          motionfield.write_mvf(motion))
        if args.emit_boxtrack and track is not None:
            doc = json.dumps(tokengrid.boxtrack_to_json(track), indent=2)
            _atomic_write(outdir / f"{path.stem}.boxtrack.json",
                          (doc + "\n").encode())
        if args.emit_overlays:
            for f in range(clip.frames):
                _atomic_write(outdir / f"{path.stem}.f{f:03d}.ppm",
                              render_overlay(clip, mask, f))
        quota = maskgen.slab_quota(spec, args.gamma)
        return {"output": f"{path.stem}.msk", "seed": clip_seed,
                "target_masked": mask.target_masked, "masked": mask.popcount,
                "slab_quota": quota,
                "correction_residue": mask.target_masked - quota * spec.t_slabs}

    results = _run_batch(inputs, worker, args.jobs)
    _write_stats(args, {"command": "mask", "generator": args.generator,
                        "gamma": args.gamma, "seed": seed,
                        "patch": list(patch), "results": results})
    return _finish(results)


def cmd_saliency(args) -> int:
    inputs = _collect_inputs(args.inputs, tuple(_CLIP_SUFFIXES) + (".mvf",))
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    boxes_path = Path(args.boxes)
    if not boxes_path.exists():
        print(f"error: MissingAnnotation: {boxes_path}", file=sys.stderr)
        return 1

    def load_boxes(path: Path) -> saliency.BoxAnnotation:
        source = boxes_path / f"{path.stem}.json" if boxes_path.is_dir() else boxes_path
        if not source.exists():
            raise MissingAnnotation(f"no annotation {source.name} for {path.name}")
        return saliency.BoxAnnotation.from_json(source.read_text())

    def worker(index: int, path: Path) -> dict:
        if path.suffix == ".mvf":
            motion = motionfield.read_mvf(path.read_bytes())
        else:
            clip = _load_clip(path, args.format)
            motion = _load_motion(path, clip, args.estimate, args.search_radius)
        score = saliency.saliency_score(motion, load_boxes(path))
        if math.isinf(score):
            return {"score": None, "infinite": True}
        return {"score": score, "infinite": False}

    results = _run_batch(inputs, worker, args.jobs)
    finite = [r["score"] for r in results if r["ok"] and r["score"] is not None]
    _write_stats(args, {"command": "saliency", "results": results,
                        "mean_score": float(np.mean(finite)) if finite else None})
    return _finish(results)


def cmd_oracle(args) -> int:
    inputs = _collect_inputs(args.inputs, tuple(_CLIP_SUFFIXES))
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    seed = _resolve_seed(args)
    patch = _parse_patch(args.patch)
    generators = args.generator or ["random"]

    per_gen: dict[str, list[dict]] = {name: [] for name in generators}

    def worker(index: int, path: Path) -> dict:
        clip = _load_clip(path, args.format)
        spec = tokengrid.grid_from_clip(clip.frames, clip.height,
                                        clip.width, patch)
        clip_seed = maskgen.derive_seed(seed, index)
        params = maskgen.MaskParams(args.gamma, args.velocity_cap,
                                    args.jitter_cap, clip_seed)
        motion = None
        if any(name.startswith("mgm") for name in generators):
            motion = _load_motion(path, clip, args.estimate, args.search_radius)
        record: dict = {}
        for name in generators:
            mask, _ = maskgen.generate(name, spec, params, motion)
            result = saliency.temporal_copy_reconstruct(clip, mask, spec)
            record[name] = {"mse": result.mse,
                            "fallback_fill": result.fallback_fill}
        return record

    results = _run_batch(inputs, worker, args.jobs)
    for record in results:
        if record["ok"]:
            for name in generators:
                per_gen[name].append({"input": record["input"],
                                      **record.pop(name)})
    summary = {
        name: {"results": rows,
               "mean_mse": float(np.mean([r["mse"] for r in rows])) if rows else None}
        for name, rows in per_gen.items()
    }
    _write_stats(args, {"command": "oracle", "gamma": args.gamma, "seed": seed,
                        "generators": summary,
                        "results": [{"input": r["input"], "ok": r["ok"],
                                     **({"error": r["error"]} if not r["ok"] else {})}
                                    for r in results]})
    return _finish(results)


def cmd_info(args) -> int:
    status = 0
    for path in _collect_inputs(args.inputs,
                                tuple(_CLIP_SUFFIXES) + (".mvf", ".msk")):
        try:
            print(json.dumps({"input": path.name, **_describe(path)},
                             sort_keys=True))
        except (MgmaskError, OSError) as exc:
            print(f"error: {path.name}: {type(exc).__name__}: {exc}",
                  file=sys.stderr)
            status = 1
    return status


def _describe(path: Path) -> dict:
    data = path.read_bytes()
    if data[:4] == clipio.RVC_MAGIC:
        clip = clipio.parse_rvc(data)
        return {"format": "rvc", "frames": clip.frames, "height": clip.height,
                "width": clip.width, "channels": clip.channels}
    if data[:4] == motionfield.MVF_MAGIC:
        field = motionfield.read_mvf(data)
        return {"format": "mvf", "frames": field.frames,
                "block_rows": field.block_rows, "block_cols": field.block_cols}
    if data[:4] == tokengrid.MSK_MAGIC:
        mask = tokengrid.read_msk(data)
        return {"format": "msk", "t_slabs": mask.spec.t_slabs,
                "rows": mask.spec.rows, "cols": mask.spec.cols,
                "target_masked": mask.target_masked}
    if data[:9] == b"YUV4MPEG2":
        clip = clipio.parse_y4m(data)
        return {"format": "y4m", "frames": clip.frames, "height": clip.height,
                "width": clip.width, "channels": clip.channels}
    raise MgmaskError("unrecognized file format")


# --- argument plumbing --------------------------------------------------------

def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("MGMASK_SEED", "0"))


def _parse_patch(text: str) -> tuple[int, int, int]:
    try:
        t, h, w = (int(part) for part in text.split(","))
    except ValueError:
        raise SystemExit(f"error: bad --patch {text!r}; expected t,h,w") from None
    return t, h, w


def _add_common(sub, output_dir=True):
    sub.add_argument("inputs", nargs="+", help="input files or directories")
    if output_dir:
        sub.add_argument("--output-dir", default=".", help="where outputs go")
        sub.add_argument("--stats", default=None,
                         help="stats JSON path (default: <output-dir>/stats.json)")
    sub.add_argument("--format", choices=("auto", "rvc", "y4m"), default="auto")
    sub.add_argument("--jobs", type=int, default=1, help="worker threads")


def _add_motion_source(sub):
    sub.add_argument("--estimate", action="store_true",
                     help="estimate motion in-process instead of reading "
                          "a co-located .mvf")
    sub.add_argument("--search-radius", type=int,
                     default=motionfield.DEFAULT_SEARCH_RADIUS)


def _add_mask_params(sub):
    sub.add_argument("--gamma", type=float, default=0.75)
    sub.add_argument("--patch", default="2,16,16", help="token size t,h,w")
    sub.add_argument("--velocity-cap", type=int, default=1)
    sub.add_argument("--jitter-cap", type=int, default=1)
    sub.add_argument("--seed", type=int, default=None,
                     help="base seed (default: $MGMASK_SEED or 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgmask",
        description="Motion-guided 3D masking toolkit")
    commands = parser.add_subparsers(dest="command", required=True)

    est = commands.add_parser("estimate", help="estimate motion fields")
    _add_common(est)
    est.add_argument("--search-radius", type=int,
                     default=motionfield.DEFAULT_SEARCH_RADIUS)
    est.add_argument("--block", type=int, default=motionfield.BLOCK)
    est.set_defaults(func=cmd_estimate)

    msk = commands.add_parser("mask", help="generate token masks")
    _add_common(msk)
    msk.add_argument("--generator", choices=maskgen.GENERATORS, required=True)
    _add_mask_params(msk)
    _add_motion_source(msk)
    msk.add_argument("--emit-mvf", action="store_true",
                     help="also write estimated motion fields")
    msk.add_argument("--emit-boxtrack", action="store_true")
    msk.add_argument("--emit-overlays", action="store_true",
                     help="write per-frame PPM overlays")
    msk.set_defaults(func=cmd_mask)

    sal = commands.add_parser("saliency", help="score motion against boxes")
    _add_common(sal)
    sal.add_argument("--boxes", required=True,
                     help="annotation JSON file, or a directory of "
                          "<stem>.json files")
    _add_motion_source(sal)
    sal.set_defaults(func=cmd_saliency)

    orc = commands.add_parser("oracle", help="temporal-copy reconstruction error")
    _add_common(orc)
    orc.add_argument("--generator", action="append",
                     choices=maskgen.GENERATORS,
                     help="repeatable; default: random")
    _add_mask_params(orc)
    _add_motion_source(orc)
    orc.set_defaults(func=cmd_oracle)

    inf = commands.add_parser("info", help="print parsed file headers")
    inf.add_argument("inputs", nargs="+")
    inf.set_defaults(func=cmd_info)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
