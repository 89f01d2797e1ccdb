"""Seeded synthetic signatures for running the full protocol without real data.

A writer is a pair of harmonic sums x(u), y(u) over u in [0, 1] plus a smooth
pressure profile. Genuine samples perturb the writer's trajectory with a
monotone time warp, Gaussian jitter and a random scale/offset. Skilled
forgeries additionally distort the harmonic amplitudes and phases before
the same perturbations are applied.

Randomness: every draw comes from numpy's PCG64 bit generator seeded through
``SeedSequence`` with an integer entropy tuple::

    writer base        (seed, writer_index, 0)
    genuine instance j (seed, writer_index, 1, j)
    forgery instance j (seed, writer_index, 2, j)

so any single signature can be regenerated without replaying the others.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ExportError
from .sigdata import (
    CANONICAL_SUFFIX,
    DatasetManifest,
    Label,
    ManifestEntry,
    Modality,
    Signature,
    dump_manifest,
    write_signature,
)

BASE_POINTS = 150
SAMPLE_PERIOD_MS = 10
SPAN_UNITS = 2000.0      # rough trajectory extent in device units
PRESSURE_MEAN = 500.0
PRESSURE_SWING = 250.0
PRESSURE_MAX = 1023.0

_BASE, _GENUINE, _FORGERY = 0, 1, 2


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(e) for e in entropy])))


@dataclass(frozen=True)
class SynthParams:
    seed: int = 42
    n_writers: int = 10
    genuine_per_writer: int = 10
    skilled_forgeries_per_writer: int = 10
    base_harmonics: int = 4
    jitter_sigma: float = 0.01
    warp_strength: float = 0.1
    forgery_distortion: float = 0.35
    modality: Modality = Modality.STYLUS
    scale_jitter: float = 0.1
    offset_range: float = 500.0

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality(self.modality))
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.n_writers < 1:
            raise ValueError("n_writers must be >= 1")
        if self.genuine_per_writer < 1:
            raise ValueError("genuine_per_writer must be >= 1")
        if self.skilled_forgeries_per_writer < 0:
            raise ValueError("skilled_forgeries_per_writer must be >= 0")
        if self.base_harmonics < 1:
            raise ValueError("base_harmonics must be >= 1")
        for name in ("jitter_sigma", "warp_strength", "forgery_distortion",
                     "scale_jitter", "offset_range"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.warp_strength >= 1:
            raise ValueError("warp_strength must be < 1 to keep the time warp monotone")
        if self.scale_jitter >= 1:
            raise ValueError("scale_jitter must be < 1")
        if self.forgery_distortion > 0 and not self.jitter_sigma < self.forgery_distortion:
            raise ValueError("jitter_sigma must be smaller than forgery_distortion")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["modality"] = self.modality.value
        return d


@dataclass(frozen=True, eq=False)
class WriterBase:
    """Harmonic description of one writer plus its sampled trajectory."""

    writer_index: int
    amp: np.ndarray        # (2, H) x/y amplitudes
    phase: np.ndarray      # (2, H) x/y phases
    p_amp: np.ndarray      # (2,) pressure harmonic amplitudes
    p_phase: np.ndarray    # (2,)
    modality: Modality
    trajectory: np.ndarray  # (BASE_POINTS, 3) columns x, y, p


def _trajectory(amp, phase, p_amp, p_phase, modality, u) -> np.ndarray:
    h = np.arange(1, amp.shape[1] + 1)
    arg = 2 * np.pi * h[None, :] * u[:, None]
    x = (amp[0] * np.sin(arg + phase[0])).sum(axis=1)
    y = (amp[1] * np.sin(arg + phase[1])).sum(axis=1)
    xy = np.column_stack([x, y]) * (SPAN_UNITS / 2) + SPAN_UNITS
    if modality is Modality.FINGER:
        p = np.zeros_like(u)
    else:
        parg = 2 * np.pi * np.arange(1, 3)[None, :] * u[:, None]
        p = PRESSURE_MEAN + PRESSURE_SWING * (p_amp * np.sin(parg + p_phase)).sum(axis=1)
    return np.column_stack([xy, p])


def generate_writer_base(seed: int, writer_index: int, params: SynthParams) -> WriterBase:
    rng = _rng(seed, writer_index, _BASE)
    H = params.base_harmonics
    k = np.arange(1, H + 1)
    amp = rng.uniform(0.4, 1.0, size=(2, H)) / k
    amp /= amp.sum(axis=1, keepdims=True)
    phase = rng.uniform(0, 2 * np.pi, size=(2, H))
    p_amp = rng.uniform(0.2, 0.5, size=2)
    p_phase = rng.uniform(0, 2 * np.pi, size=2)
    u = np.linspace(0.0, 1.0, BASE_POINTS)
    traj = np.round(_trajectory(amp, phase, p_amp, p_phase, params.modality, u), 3)
    for arr in (amp, phase, p_amp, p_phase, traj):
        arr.setflags(write=False)
    return WriterBase(writer_index, amp, phase, p_amp, p_phase, params.modality, traj)


def _perturb(traj_fn, rng: np.random.Generator, params: SynthParams, modality: Modality) -> np.ndarray:
    """Warp, resample, jitter and place a trajectory; returns (n, 3) x, y, p."""
    ws = params.warp_strength
    n = BASE_POINTS
    if ws > 0:
        n = int(round(BASE_POINTS * (1 + rng.uniform(-ws, ws))))
        c = rng.uniform(-1, 1, size=2)
        v = np.linspace(0.0, 1.0, n)
        # derivative is 1 + ws*(c1 cos + c2 cos) / 2 >= 1 - ws > 0, endpoints fixed
        u = v + ws * (c[0] * np.sin(2 * np.pi * v) / (2 * np.pi)
                      + c[1] * np.sin(4 * np.pi * v) / (4 * np.pi)) / 2
    else:
        u = np.linspace(0.0, 1.0, n)
    pts = traj_fn(u)

    if params.jitter_sigma > 0:
        xy_span = float(np.ptp(pts[:, :2], axis=0).max())
        pts[:, :2] += rng.normal(0.0, params.jitter_sigma * xy_span, size=(n, 2))
        if modality is Modality.STYLUS:
            p_span = max(float(np.ptp(pts[:, 2])), 1.0)
            pts[:, 2] += rng.normal(0.0, params.jitter_sigma * p_span, size=n)

    if params.scale_jitter > 0:
        scale = rng.uniform(1 - params.scale_jitter, 1 + params.scale_jitter)
        pts[:, :2] *= scale
    if params.offset_range > 0:
        pts[:, :2] += rng.uniform(-params.offset_range, params.offset_range, size=2)

    if modality is Modality.STYLUS:
        pts[:, 2] = np.clip(pts[:, 2], 1.0, PRESSURE_MAX)
    return pts


def _to_signature(pts: np.ndarray, writer: str, sig_id: str, label: Label,
                  modality: Modality) -> Signature:
    t = np.arange(len(pts)) * SAMPLE_PERIOD_MS
    # sub-0.001 device units are not meaningful; keep files compact
    pts = np.round(pts, 3)
    return Signature(t=t, x=pts[:, 0], y=pts[:, 1], p=pts[:, 2] + 0.0,
                     modality=modality, signer_id=writer, signature_id=sig_id, label=label)


def writer_id(index: int) -> str:
    return f"w{index:03d}"


def sample_genuine(base: WriterBase, instance_seed, params: SynthParams,
                   signature_id: str = "") -> Signature:
    rng = _rng(*np.atleast_1d(instance_seed))

    def traj(u):
        return _trajectory(base.amp, base.phase, base.p_amp, base.p_phase, base.modality, u)

    if params.warp_strength == 0 and params.jitter_sigma == 0 \
            and params.scale_jitter == 0 and params.offset_range == 0:
        pts = base.trajectory.copy()
    else:
        pts = _perturb(traj, rng, params, base.modality)
    return _to_signature(pts, writer_id(base.writer_index), signature_id,
                         Label.GENUINE, base.modality)


def sample_forgery(base: WriterBase, instance_seed, params: SynthParams,
                   signature_id: str = "") -> Signature:
    rng = _rng(*np.atleast_1d(instance_seed))
    fd = params.forgery_distortion
    amp = base.amp * np.exp(fd * rng.normal(size=base.amp.shape))
    phase = base.phase + fd * rng.normal(size=base.phase.shape)
    p_amp = base.p_amp * np.exp(fd * rng.normal(size=2))
    p_phase = base.p_phase + fd * rng.normal(size=2)

    def traj(u):
        return _trajectory(amp, phase, p_amp, p_phase, base.modality, u)

    pts = _perturb(traj, rng, params, base.modality)
    return _to_signature(pts, writer_id(base.writer_index), signature_id,
                         Label.FORGED, base.modality)


def generate_signatures(params: SynthParams):
    """Yield every signature of the dataset in a fixed order."""
    for w in range(params.n_writers):
        base = generate_writer_base(params.seed, w, params)
        for j in range(params.genuine_per_writer):
            yield sample_genuine(base, (params.seed, w, _GENUINE, j), params, f"g{j:03d}")
        for j in range(params.skilled_forgeries_per_writer):
            yield sample_forgery(base, (params.seed, w, _FORGERY, j), params, f"f{j:03d}")


def generate_dataset(params: SynthParams, out_dir, manifest_name: str = "manifest.json",
                     split=None) -> DatasetManifest:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        entries = []
        for sig in generate_signatures(params):
            path = out_dir / sig.signer_id / f"{sig.signature_id}{CANONICAL_SUFFIX}"
            path.parent.mkdir(exist_ok=True)
            write_signature(sig, path)
            entries.append(ManifestEntry(sig.signer_id, sig.signature_id, sig.label,
                                         sig.modality, path, split))
        manifest = DatasetManifest(tuple(entries))
        dump_manifest(manifest, out_dir / manifest_name)
    except OSError as exc:
        raise ExportError(f"cannot write synthetic dataset to {out_dir}: {exc}") from exc
    return manifest
