"""End-to-end hallucination and leave-one-out evaluation.

The two-stage flow upsamples luma with bicubic interpolation, refines
each facial component with its category net, then (for the full
method) replaces structure via exemplar patch regression and fuses it
back with guided detail transfer.  Chroma planes are upsampled with
plain bicubic and recombined at the end.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .cnn import ConvNet, net_forward, standard_net, train
from .config import HallucinationConfig
from .dataset import ManifestEntry
from .errors import PipelineError
from .image import ColorImage, bicubic_resize, clamp01, downsample, load_image, psnr, ssim
from .guided import transfer_details
from .patchdb import PatchDatabase, build_db, db_from_blocks, patch_blocks
from .regions import (
    CATEGORIES,
    COMPONENT_CATEGORIES,
    LandmarkSet,
    build_regions,
    crop,
    load_landmarks,
    stitch,
)
from .regression import extract_structure
from .report import METHODS, EvaluationReport, ReportRow, build_report


@dataclass
class Subject:
    subject_id: str
    hr: ColorImage
    landmarks: LandmarkSet


def load_subjects(entries: Sequence[ManifestEntry]) -> List[Subject]:
    subjects = []
    for entry in entries:
        img = load_image(entry.image_path)
        landmarks = load_landmarks(entry.landmark_path, img.width, img.height)
        subjects.append(
            Subject(
                subject_id=Path(entry.image_path).stem,
                hr=img,
                landmarks=landmarks,
            )
        )
    ids = [s.subject_id for s in subjects]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate image stems in manifest; ids must be unique")
    return subjects


def enhanced_categories(cfg: HallucinationConfig):
    return CATEGORIES if cfg.enhance_remainder else COMPONENT_CATEGORIES


def component_crops(hr_y, landmarks: LandmarkSet, cfg: HallucinationConfig):
    """Per category: (region, upsampled-LR crop, HR crop) at HR geometry."""
    h, w = hr_y.shape
    lr_y = downsample(hr_y, cfg.scale)
    up = bicubic_resize(lr_y, (h, w))
    regions = build_regions(landmarks, w, h, cfg.region_pad)
    return {cat: (reg, crop(up, reg), crop(hr_y, reg)) for cat, reg in regions.items()}


def train_models(
    subjects: Sequence[Subject], cfg: HallucinationConfig, seed_tag: int = 0
) -> Dict[str, ConvNet]:
    """One net per category, trained on all given subjects' components."""
    if not subjects:
        raise ValueError("no training subjects")
    crops = {s.subject_id: component_crops(s.hr.y, s.landmarks, cfg) for s in subjects}
    nets = {}
    for idx, cat in enumerate(CATEGORIES):
        pairs = [
            (crops[s.subject_id][cat][1], crops[s.subject_id][cat][2]) for s in subjects
        ]
        seeds = np.random.SeedSequence([cfg.seed, seed_tag, idx]).generate_state(2)
        net = standard_net(cat, seed=int(seeds[0]), init=cfg.init)
        net, _ = train(net, pairs, cfg.train_config(seed=int(seeds[1])))
        nets[cat] = net
    return nets


def build_pairs(
    subjects: Sequence[Subject],
    nets: Dict[str, ConvNet],
    cfg: HallucinationConfig,
    categories: Optional[Sequence[str]] = None,
):
    """(source_id, deep component, HR component) triples per category.

    The deep component is the category net applied to the upsampled LR
    crop, clamped to [0, 1] to keep database patches on the pixel scale.
    """
    categories = tuple(categories) if categories is not None else CATEGORIES
    out = {cat: [] for cat in categories}
    for s in subjects:
        crops = component_crops(s.hr.y, s.landmarks, cfg)
        for cat in categories:
            net = nets.get(cat)
            if net is None:
                raise PipelineError(f"no model for category '{cat}'")
            reg, low, hr = crops[cat]
            deep = clamp01(net_forward(net, low))
            out[cat].append((s.subject_id, deep, hr))
    return out


def make_databases(pairs_by_category, cfg: HallucinationConfig, exclude: Optional[str] = None):
    dbs = {}
    for cat, pairs in pairs_by_category.items():
        kept = [p for p in pairs if p[0] != exclude]
        if not kept:
            raise PipelineError(f"no sources left for '{cat}' database")
        dbs[cat] = build_db(kept, cat, cfg.patch_size)
    return dbs


def hallucinate(
    lr: ColorImage,
    landmarks: LandmarkSet,
    nets: Optional[Dict[str, ConvNet]],
    dbs: Optional[Dict[str, PatchDatabase]],
    cfg: HallucinationConfig,
    method: str = "lcge",
) -> ColorImage:
    """Upscale an LR image by cfg.scale; landmarks are in HR pixel space.

    method: "bicubic" (interpolation only), "cnn_only" (component nets,
    no exemplar stage), or "lcge" (the full two-stage method).
    """
    if method not in METHODS:
        raise ValueError(f"unknown method '{method}' (use one of {METHODS})")
    hr_h, hr_w = lr.height * cfg.scale, lr.width * cfg.scale
    y_up = bicubic_resize(lr.y, (hr_h, hr_w))
    cb = cr = None
    if not lr.is_gray:
        cb = bicubic_resize(lr.cb, (hr_h, hr_w))
        cr = bicubic_resize(lr.cr, (hr_h, hr_w))
    if method == "bicubic":
        return ColorImage(y=y_up, cb=cb, cr=cr)
    regions = build_regions(landmarks, hr_w, hr_h, cfg.region_pad)
    pieces = []
    for cat, region in regions.items():
        net = (nets or {}).get(cat)
        if net is None:
            raise PipelineError(f"no model for category '{cat}'")
        deep = clamp01(net_forward(net, crop(y_up, region)))
        if method == "lcge" and cat in enhanced_categories(cfg):
            db = (dbs or {}).get(cat)
            if db is None:
                raise PipelineError(f"no patch database for category '{cat}'")
            structure = extract_structure(deep, db, cfg)
            piece = transfer_details(deep, structure, cfg.gf_radius, cfg.gf_eps)
        else:
            piece = deep
        pieces.append((region, piece))
    y_out = clamp01(stitch(pieces, hr_w, hr_h))
    return ColorImage(y=y_out, cb=cb, cr=cr)


def _downscale_subject(s: Subject, cfg: HallucinationConfig) -> ColorImage:
    y = downsample(s.hr.y, cfg.scale)
    if s.hr.is_gray:
        return ColorImage(y=y)
    return ColorImage(
        y=y, cb=downsample(s.hr.cb, cfg.scale), cr=downsample(s.hr.cr, cfg.scale)
    )


def evaluate_loo(
    subjects: Sequence[Subject],
    cfg: HallucinationConfig,
    train_ids: Optional[Sequence[str]] = None,
    eval_ids: Optional[Sequence[str]] = None,
    log=None,
) -> EvaluationReport:
    """Leave-one-out evaluation of bicubic / cnn_only / lcge on luma.

    LR inputs are derived by downsampling the HR images by cfg.scale.
    Nets are trained once on the training subjects; each fold's patch
    databases exclude the evaluated subject.  With cfg.strict_folds the
    nets are retrained per fold as well.  Outputs larger than the HR
    ground truth (non-divisible dims) are scored on the HR-sized
    top-left region.
    """
    by_id = {s.subject_id: s for s in subjects}
    if len(by_id) != len(subjects):
        raise ValueError("duplicate subject ids")
    train_ids = list(train_ids) if train_ids is not None else [s.subject_id for s in subjects]
    eval_ids = list(eval_ids) if eval_ids is not None else [s.subject_id for s in subjects]
    train_subjects = [by_id[i] for i in train_ids]
    cats = enhanced_categories(cfg)

    nets = pair_blocks = None
    if not cfg.strict_folds:
        if log:
            log(f"training {len(CATEGORIES)} nets on {len(train_subjects)} subjects")
        nets = train_models(train_subjects, cfg)
        pairs = build_pairs(train_subjects, nets, cfg, cats)
        pair_blocks = {
            cat: [(sid, *patch_blocks(deep, hr, cfg.patch_size)) for sid, deep, hr in pairs[cat]]
            for cat in cats
        }

    def run_fold(args):
        fold_idx, sid = args
        subject = by_id[sid]
        if cfg.strict_folds:
            others = [s for s in train_subjects if s.subject_id != sid]
            if not others:
                raise PipelineError(f"fold '{sid}': no other training subjects")
            fold_nets = train_models(others, cfg, seed_tag=fold_idx + 1)
            fold_dbs = make_databases(build_pairs(others, fold_nets, cfg, cats), cfg)
        else:
            fold_nets = nets
            fold_dbs = {}
            for cat in cats:
                blocks = [b for b in pair_blocks[cat] if b[0] != sid]
                if not blocks:
                    raise PipelineError(f"fold '{sid}': no sources left for '{cat}' database")
                fold_dbs[cat] = db_from_blocks(cat, cfg.patch_size, blocks)
        lr = _downscale_subject(subject, cfg)
        gt = subject.hr.y
        h, w = gt.shape
        rows = []
        for method in METHODS:
            out = hallucinate(lr, subject.landmarks, fold_nets, fold_dbs, cfg, method)
            pred = out.y[:h, :w]
            rows.append(ReportRow(sid, method, psnr(pred, gt), ssim(pred, gt)))
        if log:
            scores = ", ".join(f"{r.method} {r.psnr:.2f} dB" for r in rows)
            log(f"[{fold_idx + 1}/{len(eval_ids)}] {sid}: {scores}")
        return rows

    tasks = list(enumerate(eval_ids))
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            per_fold = list(pool.map(run_fold, tasks))
    else:
        per_fold = [run_fold(t) for t in tasks]
    return build_report([row for rows in per_fold for row in rows])
