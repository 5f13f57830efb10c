"""Command-line interface.

Subcommands cover the full workflow: synthesize a dataset, train the
per-component nets, build exemplar patch databases, hallucinate single
images, and run the leave-one-out benchmark (CSV + figures).
"""

import argparse
import sys
from pathlib import Path

from .cnn import load_net, save_net
from .config import make_config
from .dataset import generate_dataset, load_manifest
from .errors import FaceHallError
from .image import ColorImage, load_image, save_image
from .patchdb import load_db, save_db
from .pipeline import (
    build_pairs,
    enhanced_categories,
    evaluate_loo,
    hallucinate,
    load_subjects,
    make_databases,
    train_models,
)
from .regions import CATEGORIES, load_landmarks
from .report import format_table, render_figures, write_csv

_CONFIG_FLOATS = ("alpha", "lam", "gf_eps", "learning_rate")
_CONFIG_INTS = (
    "scale",
    "patch_size",
    "k",
    "stride",
    "region_pad",
    "gf_radius",
    "window_radius",
    "seed",
    "workers",
    "epochs",
    "batch_size",
    "sample_size",
)
_CONFIG_BOOLS = ("enhance_remainder", "strict_folds")


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="key = value config file")
    group = parser.add_argument_group("config overrides")
    for name in _CONFIG_INTS:
        group.add_argument(f"--{name.replace('_', '-')}", type=int, default=None)
    for name in _CONFIG_FLOATS:
        group.add_argument(f"--{name.replace('_', '-')}", type=float, default=None)
    for name in _CONFIG_BOOLS:
        group.add_argument(
            f"--{name.replace('_', '-')}",
            action=argparse.BooleanOptionalAction,
            default=None,
        )
    group.add_argument("--init", choices=("identity", "gaussian"), default=None)


def _config_from_args(args: argparse.Namespace):
    overrides = {}
    for name in _CONFIG_INTS + _CONFIG_FLOATS + _CONFIG_BOOLS + ("init",):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return make_config(getattr(args, "config", None), overrides)


def _split_subjects(entries, keep):
    return [e for e in entries if keep(e.split)]


def _load_nets(model_dir: Path):
    return {cat: load_net(model_dir / f"{cat}.net", expected_category=cat) for cat in CATEGORIES}


def _cmd_make_dataset(args) -> int:
    manifest = generate_dataset(
        args.out_dir,
        subjects=args.subjects,
        width=args.width,
        height=args.height,
        seed=args.seed,
    )
    print(f"wrote {args.subjects} subjects; manifest at {manifest}")
    return 0


def _cmd_train(args) -> int:
    cfg = _config_from_args(args)
    entries = _split_subjects(load_manifest(args.manifest), lambda s: s != "test")
    if not entries:
        raise FaceHallError("manifest has no training entries")
    subjects = load_subjects(entries)
    print(f"training on {len(subjects)} subjects (scale {cfg.scale})")
    nets = train_models(subjects, cfg)
    args.model_dir.mkdir(parents=True, exist_ok=True)
    for cat, net in nets.items():
        path = args.model_dir / f"{cat}.net"
        save_net(net, path)
        print(f"saved {path}")
    return 0


def _cmd_build_db(args) -> int:
    cfg = _config_from_args(args)
    entries = _split_subjects(load_manifest(args.manifest), lambda s: s != "test")
    if not entries:
        raise FaceHallError("manifest has no training entries")
    subjects = load_subjects(entries)
    nets = _load_nets(args.model_dir)
    cats = enhanced_categories(cfg)
    dbs = make_databases(build_pairs(subjects, nets, cfg, cats), cfg)
    args.db_dir.mkdir(parents=True, exist_ok=True)
    for cat, db in dbs.items():
        path = args.db_dir / f"{cat}.pdb"
        save_db(db, path)
        print(f"saved {path} ({len(db)} patches)")
    return 0


def _cmd_hallucinate(args) -> int:
    cfg = _config_from_args(args)
    lr = load_image(args.input)
    hr_w, hr_h = lr.width * cfg.scale, lr.height * cfg.scale
    landmarks = load_landmarks(args.landmarks, hr_w, hr_h)
    nets = dbs = None
    if args.method != "bicubic":
        nets = _load_nets(args.model_dir)
    if args.method == "lcge":
        dbs = {
            cat: load_db(args.db_dir / f"{cat}.pdb", expected_category=cat)
            for cat in enhanced_categories(cfg)
        }
    out = hallucinate(lr, landmarks, nets, dbs, cfg, method=args.method)
    save_image(out, args.output)
    print(f"wrote {args.output} ({hr_w}x{hr_h}, method {args.method})")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = _config_from_args(args)
    entries = load_manifest(args.manifest)
    subjects = load_subjects(entries)
    split = {Path(e.image_path).stem: e.split for e in entries}
    train_ids = [s.subject_id for s in subjects if split[s.subject_id] != "test"]
    eval_ids = [s.subject_id for s in subjects if split[s.subject_id] != "train"]
    if not train_ids or not eval_ids:
        raise FaceHallError("manifest needs at least one training and one evaluation entry")
    report = evaluate_loo(subjects, cfg, train_ids, eval_ids, log=print)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = args.out_dir / "report.csv"
    write_csv(report, csv_path)
    print(f"wrote {csv_path}")
    if not args.no_figures:
        for fig in render_figures(report, args.out_dir):
            print(f"wrote {fig}")
    print(format_table(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facehall", description="two-stage exemplar face hallucination"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-dataset", help="render a synthetic face dataset")
    p.add_argument("out_dir", type=Path)
    p.add_argument("--subjects", type=int, default=20)
    p.add_argument("--width", type=int, default=160)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_make_dataset)

    p = sub.add_parser("train", help="train per-component nets")
    p.add_argument("manifest", type=Path)
    p.add_argument("model_dir", type=Path)
    _add_config_args(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("build-db", help="build exemplar patch databases")
    p.add_argument("manifest", type=Path)
    p.add_argument("model_dir", type=Path)
    p.add_argument("db_dir", type=Path)
    _add_config_args(p)
    p.set_defaults(func=_cmd_build_db)

    p = sub.add_parser("hallucinate", help="upscale a single image")
    p.add_argument("input", type=Path)
    p.add_argument("landmarks", type=Path, help="landmark file in output pixel space")
    p.add_argument("output", type=Path)
    p.add_argument("--model-dir", type=Path, default=Path("models"))
    p.add_argument("--db-dir", type=Path, default=Path("db"))
    p.add_argument("--method", choices=("bicubic", "cnn_only", "lcge"), default="lcge")
    _add_config_args(p)
    p.set_defaults(func=_cmd_hallucinate)

    p = sub.add_parser("evaluate", help="leave-one-out benchmark (CSV + figures)")
    p.add_argument("manifest", type=Path)
    p.add_argument("out_dir", type=Path)
    p.add_argument("--no-figures", action="store_true")
    _add_config_args(p)
    p.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FaceHallError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
