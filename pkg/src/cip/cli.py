"""Command-line pipeline: plan, tile, encode, compress, analyze, report.

Exit codes: 0 success, 1 internal error, 2 invalid arguments, 3 I/O
failure. Flags beat the CIP_BUDGET / CIP_TILE_SIDE / CIP_SEED environment
variables, which beat the built-in defaults. All subcommands are
reproducible byte-for-byte for fixed flags and seeds.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import encoder, planner, sawtooth, scm, tiler

CHANNELS_DEFAULT = 64


def _env_int(name: str, fallback: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return fallback
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"environment variable {name}={raw!r} is not an integer")


def _resolve(args: argparse.Namespace):
    if args.budget is None:
        args.budget = _env_int("CIP_BUDGET", planner.BUDGET_DEFAULT)
    if args.tile_side is None:
        args.tile_side = _env_int("CIP_TILE_SIDE", planner.TILE_SIDE_DEFAULT)
    if getattr(args, "seed", None) is None:
        args.seed = _env_int("CIP_SEED", 0)


def _parse_dims(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except Exception:
        raise ValueError(f"expected WIDTHxHEIGHT, got {text!r}")


def _input_dims(args) -> tuple[int, int]:
    if getattr(args, "dims", None):
        return _parse_dims(args.dims)
    if not getattr(args, "image", None):
        raise ValueError("need --image or --dims")
    img = tiler.load_image(args.image)
    return img.shape[1], img.shape[0]


def _plan_for(args, dims) -> planner.PyramidPlan:
    kw = {}
    if args.strategy == "overlapping":
        kw["overlap_frac"] = args.overlap_frac
    return planner.make_plan(args.strategy, dims, args.budget, args.tile_side, **kw)


def cmd_plan(args) -> int:
    plan = _plan_for(args, _input_dims(args))
    text = plan.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_tile(args) -> int:
    img = tiler.load_image(args.image)
    plan = _plan_for(args, (img.shape[1], img.shape[0]))
    tilesets = tiler.crop_tiles(img, plan, threads=args.threads)
    written = tiler.write_tiles(tilesets, args.out_dir, plan)
    summary = {"out_dir": str(args.out_dir), "files": len(written), "tiles": plan.total_tiles}
    print(json.dumps(summary) if args.json else f"wrote {len(written)} files to {args.out_dir}")
    return 0


def _encode_pyramid(args, img, plan):
    tilesets = tiler.crop_tiles(img, plan, threads=args.threads)
    return {ts.level: encoder.encode_tiles(ts, args.channels, args.seed) for ts in tilesets}


def cmd_encode(args) -> int:
    img = tiler.load_image(args.image)
    plan = _plan_for(args, (img.shape[1], img.shape[0]))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tensors = _encode_pyramid(args, img, plan)
    if args.prompt:
        tensors["text"] = encoder.embed_text(args.prompt, args.channels, args.seed)
    for level, tm in tensors.items():
        encoder.write_cipt(tm, out_dir / f"{level}.cipt")
    (out_dir / "plan.json").write_text(plan.to_json() + "\n")
    summary = {level: tm.length for level, tm in tensors.items()}
    print(json.dumps(summary) if args.json else f"encoded {summary} tokens to {out_dir}")
    return 0


def _load_pyramid_tensors(tensors_dir: Path) -> dict[str, encoder.TokenMatrix]:
    out = {}
    for level in ("detailed", "adaptive", "global", "text"):
        path = tensors_dir / f"{level}.cipt"
        if not path.exists():
            raise ValueError(f"missing tensor file {path}")
        out[level] = encoder.read_cipt(path)
    return out


def cmd_compress(args) -> int:
    if args.tensors_dir:
        tensors = _load_pyramid_tensors(Path(args.tensors_dir))
    else:
        if not args.image or not args.prompt:
            raise ValueError("compress needs either --tensors-dir or both --image and --prompt")
        img = tiler.load_image(args.image)
        args.strategy = "cip"
        plan = _plan_for(args, (img.shape[1], img.shape[0]))
        tensors = _encode_pyramid(args, img, plan)
        tensors["text"] = encoder.embed_text(args.prompt, args.channels, args.seed)

    scores = scm.score(
        tensors["detailed"], tensors["adaptive"], tensors["global"], tensors["text"],
        use_pe=not args.no_pe,
    )
    result = scm.compress(tensors["detailed"], scores, args.drop_ratio)
    assembled = scm.assemble_llm_input(result, tensors["adaptive"], tensors["global"], tensors["text"])

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    encoder.write_cipt(result.tokens, out_dir / "compressed.cipt")
    encoder.write_cipt(assembled, out_dir / "llm_input.cipt")
    sidecar = scm.sidecar_dict(result, args.drop_ratio, tensors["detailed"].length)
    (out_dir / "kept.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    summary = {
        "L1": sidecar["L1"],
        "K": sidecar["K"],
        "drop_ratio": args.drop_ratio,
        "llm_input_length": assembled.length,
    }
    print(json.dumps(summary) if args.json else
          f"kept {sidecar['K']}/{sidecar['L1']} detailed tokens; llm input length {assembled.length}")
    return 0


def _scene_from_args(args) -> sawtooth.SceneSpec:
    canvas = _parse_dims(args.canvas)
    lo, hi = (int(p) for p in args.size_range.split(":"))
    return sawtooth.generate_scene(canvas, args.objects, (lo, hi), args.seed)


def cmd_analyze(args) -> int:
    scene = _scene_from_args(args)
    strategies = args.strategies.split(",")
    report = sawtooth.analyze(
        scene, strategies, args.budget, args.tile_side,
        overlap_frac=args.overlap_frac, threads=args.threads,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(sawtooth.report_to_json(report) + "\n")
    (out_dir / "report.csv").write_text(sawtooth.report_to_csv(report))
    doc = sawtooth.report_to_dict(report)
    print(json.dumps(doc) if args.json else
          "\n".join(f"{s['strategy']}: cut_rate={s['cut_rate']['exact']}" for s in doc["strategies"]))
    return 0


def cmd_report(args) -> int:
    scene = _scene_from_args(args)
    strategies = args.strategies.split(",")
    budgets = [int(b) for b in args.budgets.split(",")]
    rows = sawtooth.budget_curves(scene, strategies, budgets, args.tile_side, args.overlap_frac)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "curves.json").write_text(json.dumps(rows, indent=2) + "\n")
    (out_dir / "curves.dat").write_text(sawtooth.curves_to_gnuplot(rows) + "\n")
    print(json.dumps(rows) if args.json else f"wrote rate-vs-budget curves for {len(budgets)} budgets to {out_dir}")
    return 0


def _add_common(p: argparse.ArgumentParser, seed: bool = True):
    p.add_argument("--budget", type=int, default=None, help="max total tiles (env CIP_BUDGET, default 24)")
    p.add_argument("--tile-side", type=int, default=None, help="tile side px (env CIP_TILE_SIDE, default 448)")
    p.add_argument("--threads", type=int, default=1, help="internal parallelism; output is independent of it")
    p.add_argument("--json", action="store_true", help="machine-readable stdout")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="RNG seed (env CIP_SEED, default 0)")


def _add_strategy(p: argparse.ArgumentParser):
    p.add_argument("--strategy", choices=planner.STRATEGIES, default="cip")
    p.add_argument("--overlap-frac", type=float, default=planner.OVERLAP_FRAC_DEFAULT)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cip", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="print or write the pyramid plan JSON")
    p.add_argument("--image", help="image to plan for")
    p.add_argument("--dims", help="plan for WIDTHxHEIGHT without reading an image")
    p.add_argument("--out", help="write JSON here instead of stdout")
    _add_strategy(p)
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("tile", help="resize, crop, and write tile PNGs")
    p.add_argument("--image", required=True)
    p.add_argument("--out-dir", required=True)
    _add_strategy(p)
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_tile)

    p = sub.add_parser("encode", help="encode tiles (and prompt) to CIPT tensors")
    p.add_argument("--image", required=True)
    p.add_argument("--prompt", help="also write a text tensor for this prompt")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--channels", type=int, default=CHANNELS_DEFAULT)
    _add_strategy(p)
    _add_common(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("compress", help="score and prune detailed tokens")
    p.add_argument("--tensors-dir", help="directory with detailed/adaptive/global/text .cipt files")
    p.add_argument("--image", help="end-to-end from an image instead of tensors")
    p.add_argument("--prompt", help="prompt for the end-to-end path")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--drop-ratio", type=float, default=0.5)
    p.add_argument("--channels", type=int, default=CHANNELS_DEFAULT)
    p.add_argument("--no-pe", action="store_true", help="disable positional encoding in scoring")
    _add_common(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("analyze", help="cut-rate report on a synthetic scene")
    p.add_argument("--canvas", required=True, help="scene WIDTHxHEIGHT")
    p.add_argument("--objects", type=int, default=100)
    p.add_argument("--size-range", default="20:60", help="object size MIN:MAX px")
    p.add_argument("--strategies", default="cip,dynamic,fixed,overlapping,multiscale_fixed")
    p.add_argument("--overlap-frac", type=float, default=planner.OVERLAP_FRAC_DEFAULT)
    p.add_argument("--out-dir", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="cut-rate vs budget curves across strategies")
    p.add_argument("--canvas", required=True)
    p.add_argument("--objects", type=int, default=100)
    p.add_argument("--size-range", default="20:60")
    p.add_argument("--strategies", default="cip,dynamic")
    p.add_argument("--budgets", default="18,24,32,48")
    p.add_argument("--overlap-frac", type=float, default=planner.OVERLAP_FRAC_DEFAULT)
    p.add_argument("--out-dir", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        _resolve(args)
        return args.func(args)
    except (planner.BudgetTooSmallError, planner.EmptyPoolError, encoder.FormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
