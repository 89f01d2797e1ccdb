"""Turn a raw ``Signature`` into the feature matrix compared by DTW.

Steps, in order: drop low-pressure stylus samples, min-max scale every
selected channel to ``scale_range``, subtract the channel mean, stack the
channels in ``feature_combination`` order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyAfterFilter
from .sigdata import Modality, Signature

CHANNELS = ("x", "y", "p", "azimuth", "altitude")


@dataclass(frozen=True)
class ScalingParams:
    new_min: float
    new_max: float
    old_min: float
    old_max: float

    def __post_init__(self):
        if not self.new_min < self.new_max:
            raise ValueError(f"scale range must satisfy new_min < new_max, got "
                             f"({self.new_min}, {self.new_max})")

    @classmethod
    def observed(cls, channel, new_range=(0.0, 1.0)) -> "ScalingParams":
        channel = np.asarray(channel, dtype=np.float64)
        return cls(float(new_range[0]), float(new_range[1]),
                   float(channel.min()), float(channel.max()))


@dataclass(frozen=True)
class ChannelStats:
    mean: float

    @classmethod
    def of(cls, channel) -> "ChannelStats":
        return cls(float(np.mean(channel)))


@dataclass(frozen=True)
class PreprocessConfig:
    pressure_floor: float = 0.0
    feature_combination: tuple[str, ...] = ("x", "y", "p")
    scale_range: tuple[float, float] = (0.0, 1.0)
    center_after_scale: bool = True

    def __post_init__(self):
        combo = tuple(self.feature_combination)
        object.__setattr__(self, "feature_combination", combo)
        object.__setattr__(self, "scale_range", tuple(float(v) for v in self.scale_range))
        if not combo:
            raise ValueError("feature_combination must not be empty")
        if len(set(combo)) != len(combo):
            raise ValueError(f"duplicate channels in feature_combination: {combo}")
        unknown = [c for c in combo if c not in CHANNELS]
        if unknown:
            raise ValueError(f"unknown channels {unknown}; choose from {CHANNELS}")
        if self.pressure_floor < 0:
            raise ValueError("pressure_floor must be >= 0")
        lo, hi = self.scale_range
        if not lo < hi:
            raise ValueError(f"scale_range must satisfy min < max, got {self.scale_range}")

    def to_dict(self) -> dict:
        return {
            "pressure_floor": self.pressure_floor,
            "feature_combination": list(self.feature_combination),
            "scale_range": list(self.scale_range),
            "center_after_scale": self.center_after_scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessConfig":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class FeatureSeries:
    """Preprocessed sequence: ``points`` has shape (n, len(channels))."""

    points: np.ndarray
    channels: tuple[str, ...] = field(default=("x", "y", "p"))

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError(f"FeatureSeries needs shape (n>=1, d), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("FeatureSeries values must be finite")
        channels = tuple(self.channels)
        if len(channels) != pts.shape[1]:
            channels = tuple(f"c{i}" for i in range(pts.shape[1]))
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "channels", channels)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def filter_low_pressure(sig: Signature, cfg: PreprocessConfig) -> Signature:
    if sig.modality is Modality.FINGER:
        return sig
    keep = sig.p > cfg.pressure_floor
    if not keep.any():
        raise EmptyAfterFilter(
            f"signature {sig.signature_id!r}: every sample has pressure <= {cfg.pressure_floor}"
        )
    if keep.all():
        return sig
    return sig.select(keep)


def minmax_scale(channel, params: ScalingParams) -> np.ndarray:
    channel = np.asarray(channel, dtype=np.float64)
    span = params.old_max - params.old_min
    if span == 0:
        return np.full(channel.shape, (params.new_min + params.new_max) / 2)
    return params.new_min + (channel - params.old_min) / span * (params.new_max - params.new_min)


def center_translate(channel) -> np.ndarray:
    channel = np.asarray(channel, dtype=np.float64)
    return channel - ChannelStats.of(channel).mean


def preprocess_pipeline(sig: Signature, cfg: PreprocessConfig | None = None) -> FeatureSeries:
    cfg = cfg or PreprocessConfig()
    sig = filter_low_pressure(sig, cfg)
    columns = []
    for name in cfg.feature_combination:
        raw = sig.channel(name)
        col = minmax_scale(raw, ScalingParams.observed(raw, cfg.scale_range))
        if cfg.center_after_scale:
            col = center_translate(col)
        columns.append(col)
    return FeatureSeries(np.column_stack(columns), cfg.feature_combination)
