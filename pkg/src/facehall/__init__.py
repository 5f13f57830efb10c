"""Two-stage exemplar-based face hallucination toolkit."""

from .config import HallucinationConfig, make_config, parse_config_text
from .errors import (
    CategoryMismatchError,
    CoverageError,
    FaceHallError,
    FormatError,
    LandmarkError,
    PipelineError,
    SingularSystemError,
)
from .image import (
    ColorImage,
    bicubic_resize,
    downsample,
    load_image,
    mse,
    psnr,
    rgb_to_ycbcr,
    save_image,
    ssim,
    ycbcr_to_rgb,
)
from .cnn import ConvLayer, ConvNet, TrainConfig, load_net, save_net, standard_net, train
from .dataset import generate_dataset, load_manifest
from .guided import guided_filter, transfer_details
from .patchdb import PatchDatabase, build_db, knn, load_db, save_db, similarity
from .pipeline import Subject, evaluate_loo, hallucinate, load_subjects, train_models
from .regions import CATEGORIES, LandmarkSet, build_regions, parse_landmarks, stitch
from .regression import extract_structure, solve, synthesize
from .report import EvaluationReport, ReportRow, build_report, render_figures, write_csv

__version__ = "0.1.0"

__all__ = [
    "CATEGORIES",
    "CategoryMismatchError",
    "ColorImage",
    "ConvLayer",
    "ConvNet",
    "CoverageError",
    "EvaluationReport",
    "FaceHallError",
    "FormatError",
    "HallucinationConfig",
    "LandmarkError",
    "LandmarkSet",
    "PatchDatabase",
    "PipelineError",
    "ReportRow",
    "SingularSystemError",
    "Subject",
    "TrainConfig",
    "bicubic_resize",
    "build_db",
    "build_regions",
    "build_report",
    "downsample",
    "evaluate_loo",
    "extract_structure",
    "generate_dataset",
    "guided_filter",
    "hallucinate",
    "knn",
    "load_db",
    "load_image",
    "load_manifest",
    "load_net",
    "load_subjects",
    "make_config",
    "mse",
    "parse_config_text",
    "parse_landmarks",
    "psnr",
    "render_figures",
    "rgb_to_ycbcr",
    "save_db",
    "save_image",
    "save_net",
    "similarity",
    "solve",
    "ssim",
    "standard_net",
    "stitch",
    "synthesize",
    "train",
    "train_models",
    "transfer_details",
    "write_csv",
    "ycbcr_to_rgb",
]
