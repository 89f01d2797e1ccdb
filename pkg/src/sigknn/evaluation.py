"""1vs1 / 4vs1 protocols, FAR/FRR sweeps, equal error rate and report files."""

from __future__ import annotations

import bisect
import csv
import enum
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .dtw import DtwConfig
from .errors import ExportError, NoCrossing, NoEligibleSigners, SingleClassOnly
from .knn import GlobalCalibration, KnnConfig, build_reference_set, score
from .preprocess import PreprocessConfig, preprocess_pipeline
from .sigdata import DatasetManifest, Label, ManifestEntry

log = logging.getLogger(__name__)


class ProtocolMode(str, enum.Enum):
    ONE_VS_ONE = "1vs1"
    FOUR_VS_ONE = "4vs1"

    @property
    def n_references(self) -> int:
        return 1 if self is ProtocolMode.ONE_VS_ONE else 4


@dataclass(frozen=True)
class ProtocolSpec:
    mode: ProtocolMode = ProtocolMode.FOUR_VS_ONE
    random_forgeries: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", ProtocolMode(self.mode))

    @property
    def n_references(self) -> int:
        return self.mode.n_references

    def to_dict(self) -> dict:
        return {"mode": self.mode.value, "random_forgeries": self.random_forgeries}

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolSpec":
        return cls(**d)


@dataclass(frozen=True)
class ScoredTrial:
    signer_id: str
    signature_id: str
    true_label: Label
    forgery_score: float


@dataclass(frozen=True)
class ProtocolRun:
    """Trials produced by :func:`run_protocol`, plus the signers it had to skip."""

    trials: tuple[ScoredTrial, ...]
    skipped: tuple[tuple[str, str], ...] = ()

    def __len__(self):
        return len(self.trials)

    def __iter__(self):
        return iter(self.trials)


@dataclass(frozen=True)
class ErrorCurve:
    tau: tuple[float, ...]
    far: tuple[float, ...]
    frr: tuple[float, ...]

    def __len__(self):
        return len(self.tau)

    def points(self):
        return list(zip(self.tau, self.far, self.frr))

    def at(self, tau: float) -> tuple[float, float]:
        """(FAR, FRR) at an arbitrary threshold inside [0, 1].

        Both rates are left-continuous step functions that only change at
        observed scores, so the value at tau equals the value at the first
        sweep point >= tau.
        """
        i = bisect.bisect_left(self.tau, tau)
        if i == len(self.tau):
            raise ValueError(f"tau {tau} lies beyond the sweep range")
        return self.far[i], self.frr[i]


@dataclass(frozen=True)
class EerResult:
    eer: float
    tau_star: float
    method: str  # "exact_crossing" | "linear_interpolation"


# -- protocol ----------------------------------------------------------------

@dataclass(frozen=True)
class _SignerJob:
    signer_id: str
    references: tuple[ManifestEntry, ...]
    questioned: tuple[ManifestEntry, ...]
    pre_cfg: PreprocessConfig
    dtw_cfg: DtwConfig
    knn_cfg: KnnConfig
    fallback: GlobalCalibration | None


def _run_signer(job: _SignerJob) -> list[ScoredTrial]:
    refs = [preprocess_pipeline(e.load(), job.pre_cfg) for e in job.references]
    rs = build_reference_set(job.signer_id, refs, job.dtw_cfg)
    trials = []
    for e in job.questioned:
        result = score(preprocess_pipeline(e.load(), job.pre_cfg), rs, job.knn_cfg, job.fallback)
        trials.append(ScoredTrial(job.signer_id, e.signature_id, e.label, result.forgery_score))
    return trials


def plan_protocol(dataset: DatasetManifest, spec: ProtocolSpec):
    """Split each signer's entries into references and questioned signatures.

    Returns ``(plans, skipped)``: plans maps signer -> (references, questioned),
    skipped lists (signer, reason).
    """
    groups = dataset.by_signer()
    n_ref = spec.n_references
    plans: dict[str, tuple[tuple[ManifestEntry, ...], tuple[ManifestEntry, ...]]] = {}
    skipped = []
    first_genuine: dict[str, ManifestEntry] = {}
    for signer, entries in groups.items():
        genuine = [e for e in entries if e.label is Label.GENUINE]
        forged = [e for e in entries if e.label is Label.FORGED]
        if genuine:
            first_genuine[signer] = genuine[0]
        if len(genuine) < n_ref:
            skipped.append((signer, f"{len(genuine)} genuine signature(s), {n_ref} needed as references"))
            continue
        plans[signer] = (tuple(genuine[:n_ref]), tuple(genuine[n_ref:] + forged))

    if spec.random_forgeries:
        for signer, (refs, questioned) in plans.items():
            impostors = tuple(
                ManifestEntry(signer, f"random:{other}/{e.signature_id}", Label.FORGED,
                              e.modality, e.path, e.split)
                for other, e in first_genuine.items() if other != signer
            )
            plans[signer] = (refs, questioned + impostors)
    return plans, skipped


def run_protocol(dataset: DatasetManifest, spec: ProtocolSpec | None = None,
                 pre_cfg: PreprocessConfig | None = None, dtw_cfg: DtwConfig | None = None,
                 knn_cfg: KnnConfig | None = None, fallback: GlobalCalibration | None = None,
                 jobs: int = 1) -> ProtocolRun:
    spec = spec or ProtocolSpec()
    plans, skipped = plan_protocol(dataset, spec)
    for signer, reason in skipped:
        log.warning("skipping signer %s: %s", signer, reason)
    if not plans:
        raise NoEligibleSigners(f"no signer has enough genuine signatures for {spec.mode.value}")

    work = [
        _SignerJob(signer, refs, questioned, pre_cfg or PreprocessConfig(),
                   dtw_cfg or DtwConfig(), knn_cfg or KnnConfig(), fallback)
        for signer, (refs, questioned) in plans.items()
    ]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_signer = list(pool.map(_run_signer, work))
    else:
        per_signer = [_run_signer(job) for job in work]
    trials = tuple(t for batch in per_signer for t in batch)
    return ProtocolRun(trials, tuple(skipped))


# -- error rates -------------------------------------------------------------

def _split_scores(trials: Sequence[ScoredTrial]):
    genuine = [t.forgery_score for t in trials if t.true_label is Label.GENUINE]
    forged = [t.forgery_score for t in trials if t.true_label is Label.FORGED]
    if not genuine or not forged:
        raise SingleClassOnly(
            f"need both classes, got {len(genuine)} genuine and {len(forged)} forged trials"
        )
    return sorted(genuine), sorted(forged)


def far_frr_curve(trials: Sequence[ScoredTrial]) -> ErrorCurve:
    """Sweep tau over the observed scores plus {0, 1}; accept iff score < tau."""
    genuine, forged = _split_scores(trials)
    taus = sorted(set(genuine) | set(forged) | {0.0, 1.0})
    far, frr = [], []
    for tau in taus:
        far.append(bisect.bisect_left(forged, tau) / len(forged))
        frr.append((len(genuine) - bisect.bisect_left(genuine, tau)) / len(genuine))
    return ErrorCurve(tuple(taus), tuple(far), tuple(frr))


def compute_eer(curve: ErrorCurve) -> EerResult:
    if len(curve) < 2:
        raise NoCrossing("curve has fewer than two sweep points")
    for tau, far, frr in curve.points():
        if far == frr:
            return EerResult(far, tau, "exact_crossing")
    diff = [a - r for a, r in zip(curve.far, curve.frr)]
    for k in range(len(diff) - 1):
        if diff[k] < 0 < diff[k + 1]:
            t = diff[k] / (diff[k] - diff[k + 1])
            eer = curve.far[k] + t * (curve.far[k + 1] - curve.far[k])
            tau = curve.tau[k] + t * (curve.tau[k + 1] - curve.tau[k])
            return EerResult(eer, tau, "linear_interpolation")
    raise NoCrossing("FAR and FRR never cross over the sweep")


# -- reports -----------------------------------------------------------------

def _fmt(value: float) -> str:
    return repr(float(value))


def trials_csv(trials: Sequence[ScoredTrial]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["signer_id", "signature_id", "true_label", "forgery_score"])
    for t in trials:
        w.writerow([t.signer_id, t.signature_id, t.true_label.value, _fmt(t.forgery_score)])
    return buf.getvalue()


def curve_csv(curve: ErrorCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "far", "frr"])
    for tau, far, frr in curve.points():
        w.writerow([_fmt(tau), _fmt(far), _fmt(frr)])
    return buf.getvalue()


REPORT_FILES = ("trials.csv", "curve.csv", "summary.json")


def export_results(trials: Sequence[ScoredTrial], curve: ErrorCurve, eer: EerResult, path,
                   config: dict | None = None, extra: dict | None = None) -> list[Path]:
    """Write trials.csv, curve.csv and summary.json into directory ``path``."""
    out = Path(path)
    summary = {
        "eer": eer.eer,
        "eer_percent": round(100 * eer.eer, 2),
        "tau_star": eer.tau_star,
        "method": eer.method,
        "n_trials": len(trials),
        "n_genuine": sum(t.true_label is Label.GENUINE for t in trials),
        "n_forged": sum(t.true_label is Label.FORGED for t in trials),
        "config": config or {},
    }
    if extra:
        summary.update(extra)
    contents = {
        "trials.csv": trials_csv(trials),
        "curve.csv": curve_csv(curve),
        "summary.json": json.dumps(summary, indent=2, sort_keys=True) + "\n",
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name in REPORT_FILES:
            target = out / name
            target.write_text(contents[name], encoding="utf-8", newline="\n")
            written.append(target)
    except OSError as exc:
        raise ExportError(f"cannot write reports to {out}: {exc}") from exc
    return written
