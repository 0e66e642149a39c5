"""Command-line entry point: ``posedpp {select,run,augment,score,report}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from ..augment.image import read_image, write_image
from ..augment.pipeline import warp_augment
from ..errors import ConfigError, IntegrityError, PoseDPPError
from ..kernels import flatten_poses
from ..memory import STRATEGIES, ExemplarMemory, SamplerStrategy, read_manifest, update_memory, write_manifest
from .annotations import load_annotations, save_annotations
from .metrics import diversity_report, load_predictions, pck_score
from .schedule import ExperimentSchedule, _stable_seed, run_schedule

log = logging.getLogger("posedpp")


def _strategy(args) -> SamplerStrategy:
    return SamplerStrategy(kind=args.strategy, gamma=args.gamma, seed=args.seed)


def cmd_select(args) -> int:
    ds = load_annotations(args.annotations, args.num_keypoints)
    by_class = ds.by_class
    classes = args.classes or list(by_class)
    unknown = [c for c in classes if c not in by_class]
    if unknown:
        raise ConfigError(f"classes not in dataset: {unknown}")
    budget = args.budget if args.budget else args.n * len(classes)
    mem = update_memory(ExemplarMemory.fixed(budget), {c: by_class[c] for c in classes},
                        _strategy(args))
    path = write_manifest(mem, Path(args.output_dir) / "manifest.json")
    for c, n in mem.counts().items():
        print(f"{c}\t{n}")
    print(f"manifest: {path}")
    return 0


def cmd_run(args) -> int:
    if not args.config:
        raise ConfigError("run needs --config")
    sched = ExperimentSchedule.load(args.config)
    if args.seed is not None:
        sched.seed = args.seed
    ds = load_annotations(args.annotations, args.num_keypoints)
    reports = run_schedule(ds, sched, args.output_dir)
    for r in reports:
        counts = ", ".join(f"{c}={n}" for c, n in r.counts.items())
        print(f"step {r.step}: {counts}  ({r.wall_time:.2f}s)")
    return 0


def cmd_augment(args) -> int:
    ds = load_annotations(args.annotations, args.num_keypoints)
    lookup = ds.lookup()
    ids = list(lookup)
    if args.manifest:
        mem = read_manifest(args.manifest)
        ids = [i for v in mem.per_class.values() for i in v]
    out = Path(args.output_dir)
    records = []
    for i in ids:
        if i not in lookup:
            raise IntegrityError(f"manifest id {i!r} is not in the annotations")
        inst = lookup[i]
        img = None
        if args.image_dir and inst.image_ref and (Path(args.image_dir) / inst.image_ref).exists():
            img = read_image(Path(args.image_dir) / inst.image_ref)
        for c in range(args.copies):
            res = warp_augment(inst, img, seed=_stable_seed(args.seed, i, c),
                               max_angle=args.max_angle, radius=args.radius)
            if not res.applied:
                continue
            new_id = f"{i}_aug{c}"
            ref = f"{new_id}.png"
            if res.image is not None:
                write_image(res.image, out / "images" / ref)
            records.append(res.pose.with_keypoints(res.pose.keypoints, id=new_id, image_ref=ref))
    save_annotations(records, out / "augmented.json", ds.keypoint_names, ds.categories)
    print(f"{len(records)} augmented records -> {out / 'augmented.json'}")
    return 0


def cmd_score(args) -> int:
    ds = load_annotations(args.annotations, args.num_keypoints)
    preds = load_predictions(args.predictions)
    res = pck_score(preds, ds.instances, args.tau)
    rows = [(c, res.per_class[c]) for c in res.per_class] + [("overall", res.overall)]
    for c, v in rows:
        print(f"{c}\t{v:.4f}")
    if res.missing:
        log.warning("%d instances had no prediction", res.missing)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "pck.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["class", f"pck@{args.tau}"])
            w.writerows(rows)
    return 0


def cmd_report(args) -> int:
    ds = load_annotations(args.annotations, args.num_keypoints)
    lookup = ds.lookup()
    if not args.manifest:
        raise ConfigError("report needs --manifest")
    mem = read_manifest(args.manifest)
    gamma = args.gamma if args.gamma is not None else (mem.strategy.gamma if mem.strategy else 50.0)
    rows = []
    for label, ids in mem.per_class.items():
        if not ids:
            continue
        try:
            insts = [lookup[i] for i in ids]
        except KeyError as exc:
            raise IntegrityError(f"manifest id {exc} is not in the annotations") from exc
        d = diversity_report(flatten_poses(insts), range(len(ids)), args.kernel, gamma)
        rows.append([label, d.size, d.log_det, d.mean_pairwise, d.min_pairwise, int(d.degenerate)])
    header = ["class", "size", "log_det", "mean_pairwise", "min_pairwise", "degenerate"]
    w = csv.writer(sys.stdout)
    w.writerow(header)
    w.writerows(rows)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "diversity.csv", "w", newline="") as fh:
            cw = csv.writer(fh)
            cw.writerow(header)
            cw.writerows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--config", help="schedule file (YAML or JSON)")
    common.add_argument("--output-dir", "-o", default="out", help="output directory")
    common.add_argument("--annotations", "-a", required=True, help="COCO keypoint annotation file")
    common.add_argument("--num-keypoints", type=int, default=17)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="posedpp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("select", parents=[common], help="one-shot exemplar selection")
    s.add_argument("--classes", nargs="*")
    s.add_argument("-n", type=int, default=100, help="exemplars per class")
    s.add_argument("--budget", type=int, default=0, help="memory size (default n x classes)")
    s.add_argument("--strategy", choices=STRATEGIES, default="rbf_kdpp")
    s.add_argument("--gamma", type=float, default=50.0)
    s.set_defaults(func=cmd_select)

    r = sub.add_parser("run", parents=[common], help="run an incremental schedule")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("augment", parents=[common], help="limb-warp augmentation of exemplars")
    a.add_argument("--manifest")
    a.add_argument("--image-dir")
    a.add_argument("--copies", type=int, default=1)
    a.add_argument("--max-angle", type=float, default=15.0)
    a.add_argument("--radius", type=int, default=3)
    a.set_defaults(func=cmd_augment)

    sc = sub.add_parser("score", parents=[common], help="PCK of predictions")
    sc.add_argument("--predictions", "-p", required=True)
    sc.add_argument("--tau", type=float, default=0.05)
    sc.set_defaults(func=cmd_score)

    rp = sub.add_parser("report", parents=[common], help="diversity metrics of a manifest")
    rp.add_argument("--manifest")
    rp.add_argument("--kernel", choices=("rbf", "linear"), default="rbf")
    rp.add_argument("--gamma", type=float, default=None)
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command != "run" and args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except PoseDPPError as exc:
        log.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
