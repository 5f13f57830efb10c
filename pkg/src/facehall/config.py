"""Run configuration: defaults, config-file parsing, CLI overrides.

Config files are plain "key = value" lines ('#' starts a comment).
Values given on the command line override the file, which overrides
the defaults below.
"""

import dataclasses
from dataclasses import dataclass
from typing import Dict, Optional

from .cnn import TrainConfig


@dataclass
class HallucinationConfig:
    scale: int = 4
    patch_size: int = 7
    k: int = 5
    alpha: float = 0.2
    lam: Optional[float] = None  # None: patch_size squared
    stride: int = 1
    region_pad: int = 8
    gf_radius: int = 8
    gf_eps: float = 1e-3
    enhance_remainder: bool = False
    window_radius: Optional[int] = None  # None: search the whole category
    seed: int = 0
    workers: int = 1
    # training
    epochs: int = 100
    learning_rate: float = 1e-3
    batch_size: int = 8
    sample_size: int = 33
    init: str = "identity"
    strict_folds: bool = False

    def __post_init__(self):
        if self.scale < 2:
            raise ValueError(f"scale must be >= 2, got {self.scale}")
        if self.patch_size < 1 or self.patch_size % 2 == 0:
            raise ValueError(f"patch_size must be odd, got {self.patch_size}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.lam is not None and self.lam < 0.0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.region_pad < 0:
            raise ValueError(f"region_pad must be >= 0, got {self.region_pad}")
        if self.gf_radius < 1:
            raise ValueError(f"gf_radius must be >= 1, got {self.gf_radius}")
        if self.gf_eps < 0.0:
            raise ValueError(f"gf_eps must be >= 0, got {self.gf_eps}")
        if self.window_radius is not None and self.window_radius < 1:
            raise ValueError(f"window_radius must be >= 1, got {self.window_radius}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.init not in ("identity", "gaussian"):
            raise ValueError(f"init must be 'identity' or 'gaussian', got '{self.init}'")

    @property
    def lambda_value(self) -> float:
        if self.lam is None:
            return float(self.patch_size * self.patch_size)
        return float(self.lam)

    def train_config(self, seed=None) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            sample_size=self.sample_size,
            seed=self.seed if seed is None else seed,
        )


_FIELDS = {f.name: f for f in dataclasses.fields(HallucinationConfig)}

_BOOL_WORDS = {
    "true": True,
    "false": False,
    "yes": True,
    "no": False,
    "1": True,
    "0": False,
    "on": True,
    "off": False,
}


def _coerce(name: str, raw: str):
    raw = raw.strip()
    if name in ("lam", "window_radius"):
        if raw.lower() in ("none", ""):
            return None
        return float(raw) if name == "lam" else int(raw)
    if name in ("enhance_remainder", "strict_folds"):
        try:
            return _BOOL_WORDS[raw.lower()]
        except KeyError:
            raise ValueError(f"config key '{name}': expected a boolean, got '{raw}'")
    target = _FIELDS[name].type
    if target in (int, "int"):
        return int(raw)
    if target in (float, "float"):
        return float(raw)
    return raw


def parse_config_text(text: str) -> Dict[str, object]:
    """Parse "key = value" lines into typed config values."""
    values: Dict[str, object] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {line_no}: expected 'key = value'")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ValueError(f"config line {line_no}: unknown key '{key}'")
        try:
            values[key] = _coerce(key, val)
        except ValueError as exc:
            raise ValueError(f"config line {line_no}: {exc}")
    return values


def make_config(path=None, overrides: Optional[Dict[str, object]] = None) -> HallucinationConfig:
    """Defaults, then config file values, then explicit overrides."""
    values: Dict[str, object] = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read()))
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _FIELDS:
            raise ValueError(f"unknown config key '{key}'")
        values[key] = val
    return HallucinationConfig(**values)
