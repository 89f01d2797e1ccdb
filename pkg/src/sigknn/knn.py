"""Reference sets, k-NN thresholds and the forgery score.

A questioned signature S is compared against a signer's enrolled
references. With d_s the DTW distance from S to its nearest reference
S_nn, the genuine and forgery thresholds are derived from the mean distance
between S_nn and its K nearest fellow references::

    base  = mean_{k<=K} d(S_nn, S_knn)
    G_th  = base
    F_th  = theta * base
    P_q   = (s*F_th - d_s) / (s*F_th - G_th)
    score = 1 - P_q = (d_s - G_th) / (s*F_th - G_th), clamped to [0, 1]

A score of 0 means genuine-like and 1 forged-like. Single-reference sets
have no fellow references, so ``base`` comes from a writer-independent
``GlobalCalibration`` instead.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dtw import DtwConfig, dtw_distance
from .errors import (
    DegenerateThresholds,
    EmptyReferenceSet,
    InsufficientData,
    InsufficientReferences,
    NoFallbackAvailable,
)
from .preprocess import FeatureSeries, PreprocessConfig, preprocess_pipeline
from .sigdata import DatasetManifest, Label


class Decision(str, enum.Enum):
    GENUINE = "genuine"
    FORGED = "forged"


class ThresholdSource(str, enum.Enum):
    WRITER_LOCAL = "writer_local"
    GLOBAL_FALLBACK = "global_fallback"


@dataclass(frozen=True)
class KnnConfig:
    K: int = 3
    theta: float = 1.5
    s: float = 1.0
    decision_tau: float = 0.5

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")
        if not self.theta > 0:
            raise ValueError(f"theta must be > 0, got {self.theta}")
        if not self.s > 0:
            raise ValueError(f"s must be > 0, got {self.s}")
        if not 0 <= self.decision_tau <= 1:
            raise ValueError(f"decision_tau must lie in [0, 1], got {self.decision_tau}")

    def to_dict(self) -> dict:
        return {"K": self.K, "theta": self.theta, "s": self.s, "decision_tau": self.decision_tau}

    @classmethod
    def from_dict(cls, d: dict) -> "KnnConfig":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class ReferenceSet:
    signer_id: str
    references: tuple[FeatureSeries, ...]
    pairwise: np.ndarray
    dtw_cfg: DtwConfig = DtwConfig()

    def __len__(self):
        return len(self.references)


@dataclass(frozen=True)
class Thresholds:
    g_th: float
    f_th: float
    base: float
    source: ThresholdSource


@dataclass(frozen=True)
class ComparisonResult:
    d_s: float
    nn_index: int
    p_q: float
    forgery_score: float
    raw_forgery_score: float
    decision: Decision
    thresholds: Thresholds

    def to_dict(self) -> dict:
        return {
            "d_s": self.d_s,
            "nn_index": self.nn_index,
            "p_q": self.p_q,
            "forgery_score": self.forgery_score,
            "decision": self.decision.value,
            "g_th": self.thresholds.g_th,
            "f_th": self.thresholds.f_th,
            "threshold_source": self.thresholds.source.value,
        }


@dataclass(frozen=True)
class GlobalCalibration:
    global_base: float
    n_values: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.global_base) and self.global_base > 0):
            raise ValueError(f"global_base must be finite and > 0, got {self.global_base}")

    def to_json(self) -> str:
        return json.dumps({"global_base": self.global_base, "n_values": self.n_values},
                          indent=2, sort_keys=True) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json(), encoding="utf-8", newline="\n")
        return path

    @classmethod
    def load(cls, path) -> "GlobalCalibration":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(float(doc["global_base"]), int(doc.get("n_values", 0)))


def pairwise_distances(series: Sequence[FeatureSeries], dtw_cfg: DtwConfig | None = None) -> np.ndarray:
    """Symmetric matrix of DTW distances with a zero diagonal."""
    n = len(series)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = dtw_distance(series[i], series[j], dtw_cfg).distance
    return out


def build_reference_set(signer_id: str, refs: Sequence[FeatureSeries],
                        dtw_cfg: DtwConfig | None = None) -> ReferenceSet:
    refs = tuple(refs)
    if not refs:
        raise EmptyReferenceSet(f"signer {signer_id!r} has no references")
    dtw_cfg = dtw_cfg or DtwConfig()
    pairwise = pairwise_distances(refs, dtw_cfg)
    pairwise.setflags(write=False)
    return ReferenceSet(signer_id, refs, pairwise, dtw_cfg)


def knn_mean_distance(rs: ReferenceSet, nn_index: int, K: int) -> float:
    """Mean distance from reference ``nn_index`` to its K nearest fellow references.

    K is clamped to the number of other references.
    """
    if len(rs) < 2:
        raise InsufficientReferences(f"need >= 2 references, signer {rs.signer_id!r} has {len(rs)}")
    others = np.delete(rs.pairwise[nn_index], nn_index)
    k = min(K, others.size)
    return float(np.mean(np.sort(others)[:k]))


def compute_thresholds(rs: ReferenceSet, cfg: KnnConfig, question_nn_index: int,
                       fallback: GlobalCalibration | None = None) -> Thresholds:
    if len(rs) >= 2:
        base = knn_mean_distance(rs, question_nn_index, cfg.K)
        source = ThresholdSource.WRITER_LOCAL
    elif fallback is not None:
        base = fallback.global_base
        source = ThresholdSource.GLOBAL_FALLBACK
    else:
        raise NoFallbackAvailable(
            f"signer {rs.signer_id!r} has a single reference and no global calibration was given"
        )
    th = Thresholds(g_th=base, f_th=cfg.theta * base, base=base, source=source)
    if not cfg.s * th.f_th > th.g_th:
        raise DegenerateThresholds(
            f"s*F_th ({cfg.s * th.f_th}) must exceed G_th ({th.g_th}); "
            f"k-NN base distance is {base} for signer {rs.signer_id!r}"
        )
    return th


def classify(forgery_score: float, tau: float) -> Decision:
    return Decision.GENUINE if forgery_score < tau else Decision.FORGED


def score_distance(d_s: float, thresholds: Thresholds, cfg: KnnConfig, nn_index: int = 0) -> ComparisonResult:
    """Score a questioned signature already reduced to its nearest-reference distance."""
    upper = cfg.s * thresholds.f_th
    denom = upper - thresholds.g_th
    if not denom > 0:
        raise DegenerateThresholds(f"s*F_th ({upper}) must exceed G_th ({thresholds.g_th})")
    p_q = (upper - d_s) / denom
    raw = (d_s - thresholds.g_th) / denom
    clamped = min(1.0, max(0.0, raw))
    return ComparisonResult(
        d_s=float(d_s), nn_index=int(nn_index), p_q=float(p_q),
        forgery_score=float(clamped), raw_forgery_score=float(raw),
        decision=classify(clamped, cfg.decision_tau), thresholds=thresholds,
    )


def nearest_reference(question: FeatureSeries, rs: ReferenceSet) -> tuple[float, int]:
    best, best_i = math.inf, -1
    for i, ref in enumerate(rs.references):
        d = dtw_distance(question, ref, rs.dtw_cfg).distance
        if d < best:  # strict: lowest index wins ties
            best, best_i = d, i
    return best, best_i


def score(question: FeatureSeries, rs: ReferenceSet, cfg: KnnConfig | None = None,
          fallback: GlobalCalibration | None = None) -> ComparisonResult:
    cfg = cfg or KnnConfig()
    d_s, nn_index = nearest_reference(question, rs)
    thresholds = compute_thresholds(rs, cfg, nn_index, fallback)
    return score_distance(d_s, thresholds, cfg, nn_index)


def calibrate_from_series(genuine_by_signer: Mapping[str, Sequence[FeatureSeries]],
                          dtw_cfg: DtwConfig | None = None) -> GlobalCalibration:
    """Mean nearest-neighbour distance of each genuine to its signer's other genuines."""
    values = []
    for signer in sorted(genuine_by_signer):
        series = list(genuine_by_signer[signer])
        if len(series) < 2:
            continue
        d = pairwise_distances(series, dtw_cfg)
        np.fill_diagonal(d, np.inf)
        values.extend(d.min(axis=1).tolist())
    if not values:
        raise InsufficientData("no signer has at least 2 genuine signatures")
    mean = float(np.mean(values))
    if not mean > 0:
        raise InsufficientData("genuine nearest-neighbour distances are all zero")
    return GlobalCalibration(mean, len(values))


def calibrate_global(dev: DatasetManifest, pre_cfg: PreprocessConfig | None = None,
                     dtw_cfg: DtwConfig | None = None) -> GlobalCalibration:
    genuine: dict[str, list[FeatureSeries]] = {}
    for signer, entries in dev.by_signer().items():
        for e in entries:
            if e.label is Label.GENUINE:
                genuine.setdefault(signer, []).append(preprocess_pipeline(e.load(), pre_cfg))
    return calibrate_from_series(genuine, dtw_cfg)
