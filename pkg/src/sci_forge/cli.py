"""Command-line entry point: ``sci-forge <subcommand>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .core import SeededRng, dump_json, load_cube, load_frame_dir, save_cube, write_manifest


def _load_source(path: str, pattern: str) -> np.ndarray:
    p = Path(path)
    return load_frame_dir(p, pattern) if p.is_dir() else load_cube(p)


def cmd_degrade(args) -> int:
    from .degrade import Scenario, apply_scenario, scenario_params

    cube = _load_source(args.input, args.pattern)
    scenario = Scenario.parse(args.scenario)
    degraded, gt = apply_scenario(cube, scenario, args.gt_stride, SeededRng(args.seed))
    save_cube(degraded, args.out)
    files = [args.out]
    if args.out_gt:
        save_cube(gt, args.out_gt)
        files.append(args.out_gt)
    n, alpha, sigma = scenario_params(scenario)
    write_manifest(args.out, {"scenario": scenario.value, "blur_n": n, "alpha": alpha,
                              "sigma": sigma, "gt_stride": args.gt_stride, "input": args.input},
                   seed=args.seed, files=files)
    return 0


def cmd_encode(args) -> int:
    from .cacti import encode, generate_masks

    cube = _load_source(args.cube, args.pattern)
    if args.masks:
        masks = load_cube(args.masks)
    else:
        masks = generate_masks(args.cr, cube.shape[1], cube.shape[2], args.mask_density,
                               SeededRng(args.mask_seed).generator())
    if cube.shape[0] != masks.shape[0]:
        cube = cube[: masks.shape[0]]
    y = encode(cube, masks, args.meas_noise, SeededRng(args.seed).generator())
    save_cube(y, args.out)
    files = [args.out]
    if args.out_masks:
        save_cube(masks, args.out_masks)
        files.append(args.out_masks)
    write_manifest(args.out, {"cr": int(masks.shape[0]), "mask_density": args.mask_density,
                              "mask_seed": args.mask_seed, "meas_noise": args.meas_noise},
                   seed=args.seed, files=files)
    return 0


def cmd_reconstruct(args) -> int:
    from .gap_tv import GapTvConfig, reconstruct

    cfg = GapTvConfig(outer_iters=args.iters, tv_weight=args.tv_weight,
                      tv_inner_iters=args.tv_inner, accelerate=args.accelerate)
    x, report = reconstruct(load_cube(args.meas), load_cube(args.masks), cfg)
    save_cube(x, args.out)
    report_path = args.report or str(args.out) + ".report.json"
    dump_json({"config": cfg.__dict__, **report.to_dict()}, report_path)
    return 0


def cmd_metrics(args) -> int:
    from .metrics import score_cube

    report = score_cube(load_cube(args.ref), load_cube(args.test)).to_dict()
    if args.out:
        dump_json(report, args.out)
    print(f"PSNR {report['psnr_db']} dB  SSIM {report['ssim']:.4f}")
    return 0


def cmd_bench(args) -> int:
    from .bench import BenchConfig, run_bench

    d = json.loads(Path(args.config).read_text()) if args.config else {}
    overrides = {"cr": args.cr, "out_dir": args.out_dir, "mask_seed": args.mask_seed,
                 "data_seed": args.data_seed, "max_chunks": args.max_chunks}
    d.update({k: v for k, v in overrides.items() if v is not None})
    if args.inputs:
        d["input_dirs"] = args.inputs
    if args.scenarios:
        d["scenarios"] = args.scenarios
    solver = dict(d.get("solver", {}))
    for key, val in (("outer_iters", args.iters), ("tv_weight", args.tv_weight)):
        if val is not None:
            solver[key] = val
    d["solver"] = solver
    result = run_bench(BenchConfig.from_dict(d))
    print(result.markdown_path.read_text(), end="")
    for row in result.failed:
        print(f"FAILED {row.video}/{row.scenario}: {row.status}", file=sys.stderr)
    return 1 if result.failed else 0


def cmd_gen_pairs(args) -> int:
    from .bench import gen_training_pairs
    from .degrade import ScheduleSpec

    d = json.loads(Path(args.config).read_text()) if args.config else {}
    if args.seed is not None:
        d["seed"] = args.seed
    if args.chunk_len is not None:
        d["chunk_len"] = args.chunk_len
    manifest = gen_training_pairs(ScheduleSpec.from_dict(d), args.inputs, args.out,
                                  mask_seed=args.mask_seed)
    print(manifest)
    return 0


def cmd_blocks(args) -> int:
    from .net_blocks import selftest

    rows = selftest(args.seed)
    width = max(len(name) for name, _, _ in rows)
    for name, ok, detail in rows:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}")
    return 0 if all(ok for _, ok, _ in rows) else 1


def cmd_plot(args) -> int:
    from .bench import plot_psnr_bars

    plot_psnr_bars(args.csv, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sci-forge", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("degrade", help="apply a test scenario to a high-speed clip")
    s.add_argument("--input", required=True, help="PGM frame directory or SCIB cube")
    s.add_argument("--scenario", required=True, help='e.g. "Clean", "MotionBlur-L2", "Mixed-L3"')
    s.add_argument("--gt-stride", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--pattern", default="*.pgm")
    s.add_argument("--out", required=True)
    s.add_argument("--out-gt")
    s.set_defaults(func=cmd_degrade)

    s = sub.add_parser("encode", help="encode a cube into a snapshot measurement")
    s.add_argument("--cube", required=True)
    s.add_argument("--masks", help="existing SCIB mask set; generated when omitted")
    s.add_argument("--cr", type=int, default=8)
    s.add_argument("--mask-seed", type=int, default=0)
    s.add_argument("--mask-density", type=float, default=0.5)
    s.add_argument("--meas-noise", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--pattern", default="*.pgm")
    s.add_argument("--out", required=True)
    s.add_argument("--out-masks")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("reconstruct", help="GAP-TV reconstruction")
    s.add_argument("--meas", required=True)
    s.add_argument("--masks", required=True)
    s.add_argument("--iters", type=int, default=100)
    s.add_argument("--tv-weight", type=float, default=0.07)
    s.add_argument("--tv-inner", type=int, default=5)
    s.add_argument("--accelerate", action="store_true")
    s.add_argument("--out", required=True)
    s.add_argument("--report")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("metrics", help="PSNR/SSIM between two cubes")
    s.add_argument("--ref", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("bench", help="run the scenario benchmark")
    s.add_argument("--config")
    s.add_argument("--inputs", nargs="*")
    s.add_argument("--scenarios", nargs="*")
    s.add_argument("--cr", type=int)
    s.add_argument("--mask-seed", type=int)
    s.add_argument("--data-seed", type=int)
    s.add_argument("--max-chunks", type=int)
    s.add_argument("--iters", type=int)
    s.add_argument("--tv-weight", type=float)
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("gen-pairs", help="generate training pairs with a smooth schedule")
    s.add_argument("--config", help="JSON with schedule fields (n_range, alpha_range, ...)")
    s.add_argument("--inputs", nargs="*", default=[])
    s.add_argument("--seed", type=int)
    s.add_argument("--chunk-len", type=int)
    s.add_argument("--mask-seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_pairs)

    s = sub.add_parser("blocks", help="block kernel utilities")
    bsub = s.add_subparsers(dest="blocks_command", required=True)
    st = bsub.add_parser("selftest", help="run the block invariant suite")
    st.add_argument("--seed", type=int, default=0)
    st.set_defaults(func=cmd_blocks)

    s = sub.add_parser("plot", help="grouped PSNR bar chart from a bench CSV")
    s.add_argument("--csv", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
