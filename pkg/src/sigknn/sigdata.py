"""Signature containers, the canonical ``.sig.tsv`` format, importers and manifests.

Canonical file layout::

    #signer_id	U01
    #signature_id	g01
    #modality	stylus
    #label	genuine
    t	x	y	p	azimuth	altitude
    0	1012.5	733	512	45	60
    ...

The azimuth/altitude columns are optional but all-or-nothing per file.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .errors import (
    CountMismatch,
    DuplicateEntry,
    EmptySignature,
    InvalidSample,
    MalformedHeader,
    MalformedManifest,
    MalformedRow,
    MissingFile,
    NonMonotoneTimestamps,
)

CANONICAL_SUFFIX = ".sig.tsv"
HEADER_KEYS = ("signer_id", "signature_id", "modality", "label")
BASE_COLUMNS = ("t", "x", "y", "p")
ANGLE_COLUMNS = ("azimuth", "altitude")


class Modality(str, enum.Enum):
    STYLUS = "stylus"
    FINGER = "finger"


class Label(str, enum.Enum):
    GENUINE = "genuine"
    FORGED = "forged"
    UNKNOWN = "unknown"


class Split(str, enum.Enum):
    DEVELOPMENT = "development"
    EVALUATION = "evaluation"


class SignatureSample(NamedTuple):
    t: float
    x: float
    y: float
    p: float
    azimuth: float | None = None
    altitude: float | None = None


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Signature:
    """An online signature: per-sample channels stored column-wise.

    Channel arrays are read-only float64 vectors of equal length. ``azimuth``
    and ``altitude`` are either both present or both ``None``.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    modality: Modality = Modality.STYLUS
    signer_id: str = ""
    signature_id: str = ""
    label: Label = Label.UNKNOWN
    azimuth: np.ndarray | None = None
    altitude: np.ndarray | None = None

    def __post_init__(self):
        for name in ("t", "x", "y", "p"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if (self.azimuth is None) != (self.altitude is None):
            raise InvalidSample("azimuth and altitude must be given together")
        if self.azimuth is not None:
            object.__setattr__(self, "azimuth", _frozen(self.azimuth))
            object.__setattr__(self, "altitude", _frozen(self.altitude))
        object.__setattr__(self, "modality", Modality(self.modality))
        object.__setattr__(self, "label", Label(self.label))

        n = len(self.t)
        if n == 0:
            raise EmptySignature(f"signature {self.signature_id!r} has no samples")
        channels = [self.x, self.y, self.p]
        if self.azimuth is not None:
            channels += [self.azimuth, self.altitude]
        if any(c.ndim != 1 or len(c) != n for c in [self.t, *channels]):
            raise InvalidSample("all channels must be 1-D and of equal length")
        if not all(np.all(np.isfinite(c)) for c in [self.t, *channels]):
            raise InvalidSample("non-finite sample value")
        if np.any(self.t < 0):
            raise InvalidSample("negative timestamp")
        if np.any(np.diff(self.t) < 0):
            bad = int(np.argmax(np.diff(self.t) < 0)) + 1
            raise NonMonotoneTimestamps(
                f"timestamp decreases at sample {bad}: {self.t[bad - 1]} -> {self.t[bad]}"
            )
        if np.any(self.p < 0):
            raise InvalidSample("negative pressure")
        if self.azimuth is not None:
            if np.any((self.azimuth < 0) | (self.azimuth >= 360)):
                raise InvalidSample("azimuth outside [0, 360)")
            if np.any((self.altitude < 0) | (self.altitude > 90)):
                raise InvalidSample("altitude outside [0, 90]")

    def __len__(self):
        return len(self.t)

    @property
    def has_angles(self) -> bool:
        return self.azimuth is not None

    @property
    def samples(self) -> list[SignatureSample]:
        if self.has_angles:
            rows = zip(self.t, self.x, self.y, self.p, self.azimuth, self.altitude)
        else:
            rows = zip(self.t, self.x, self.y, self.p)
        return [SignatureSample(*map(float, r)) for r in rows]

    def channel(self, name: str) -> np.ndarray:
        arr = getattr(self, name, None)
        if not isinstance(arr, np.ndarray):
            raise KeyError(f"signature has no channel {name!r}")
        return arr

    def select(self, mask: np.ndarray) -> "Signature":
        """Return a copy keeping only the samples where ``mask`` is true."""
        angles = {}
        if self.has_angles:
            angles = dict(azimuth=self.azimuth[mask], altitude=self.altitude[mask])
        return Signature(
            t=self.t[mask], x=self.x[mask], y=self.y[mask], p=self.p[mask],
            modality=self.modality, signer_id=self.signer_id,
            signature_id=self.signature_id, label=self.label, **angles,
        )

    @classmethod
    def from_samples(cls, samples: Iterable[SignatureSample], **meta) -> "Signature":
        samples = [SignatureSample(*s) for s in samples]
        if not samples:
            raise EmptySignature("no samples")
        cols = list(zip(*samples))
        has_az = [s.azimuth is not None for s in samples]
        if any(has_az) and not all(has_az):
            raise InvalidSample("azimuth/altitude present on only some samples")
        angles = {}
        if all(has_az):
            angles = dict(azimuth=cols[4], altitude=cols[5])
        return cls(t=cols[0], x=cols[1], y=cols[2], p=cols[3], **angles, **meta)


# -- canonical format ---------------------------------------------------------

def format_number(value: float) -> str:
    """Shortest round-tripping decimal; integral values drop the fraction."""
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    text = repr(value)
    if "e" in text or "E" in text:
        # canonical files use plain decimal notation only
        text = np.format_float_positional(value, unique=True, trim="-")
    return text


def _parse_number(token: str, line: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MalformedRow(line, f"not a number: {token!r}") from None
    if not math.isfinite(value):
        raise MalformedRow(line, f"non-finite value: {token!r}")
    return value


def parse_canonical(text: str) -> Signature:
    meta: dict[str, str] = {}
    columns: tuple[str, ...] | None = None
    rows: list[list[float]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if columns is None and line.startswith("#"):
            key, sep, value = line[1:].partition("\t")
            key, value = key.strip(), value.strip()
            if not sep or key not in HEADER_KEYS:
                raise MalformedHeader(f"line {lineno}: bad header line {raw!r}")
            if key in meta:
                raise MalformedHeader(f"line {lineno}: duplicate header key {key!r}")
            meta[key] = value
            continue
        if columns is None:
            columns = tuple(c.strip() for c in line.split("\t"))
            if columns not in (BASE_COLUMNS, BASE_COLUMNS + ANGLE_COLUMNS):
                raise MalformedHeader(f"line {lineno}: bad column header {raw!r}")
            continue
        fields = line.split("\t")
        if len(fields) != len(columns):
            raise MalformedRow(lineno, f"expected {len(columns)} fields, got {len(fields)}")
        rows.append([_parse_number(f.strip(), lineno) for f in fields])

    missing = [k for k in HEADER_KEYS if k not in meta]
    if missing:
        raise MalformedHeader(f"missing header keys: {', '.join(missing)}")
    if columns is None:
        raise MalformedHeader("missing column header line")
    try:
        modality = Modality(meta["modality"])
        label = Label(meta["label"])
    except ValueError as exc:
        raise MalformedHeader(str(exc)) from None
    if not rows:
        raise EmptySignature(f"signature {meta['signature_id']!r} has no data rows")

    data = np.array(rows, dtype=np.float64)
    angles = {}
    if len(columns) == 6:
        angles = dict(azimuth=data[:, 4], altitude=data[:, 5])
    return Signature(
        t=data[:, 0], x=data[:, 1], y=data[:, 2], p=data[:, 3],
        modality=modality, label=label,
        signer_id=meta["signer_id"], signature_id=meta["signature_id"],
        **angles,
    )


def serialize_canonical(sig: Signature) -> str:
    lines = [
        f"#signer_id\t{sig.signer_id}",
        f"#signature_id\t{sig.signature_id}",
        f"#modality\t{sig.modality.value}",
        f"#label\t{sig.label.value}",
    ]
    columns = BASE_COLUMNS + (ANGLE_COLUMNS if sig.has_angles else ())
    lines.append("\t".join(columns))
    arrays = [sig.channel(c) for c in columns]
    for i in range(len(sig)):
        lines.append("\t".join(format_number(a[i]) for a in arrays))
    return "\n".join(lines) + "\n"


def read_signature(path) -> Signature:
    return parse_canonical(Path(path).read_text(encoding="utf-8"))


def write_signature(sig: Signature, path) -> Path:
    path = Path(path)
    path.write_text(serialize_canonical(sig), encoding="utf-8", newline="\n")
    return path


# -- SVC2004 -----------------------------------------------------------------

def parse_svc2004(text: str, signer_id: str = "", signature_id: str = "",
                  label: Label = Label.UNKNOWN,
                  modality: Modality = Modality.STYLUS) -> Signature:
    """Parse the SVC2004 column layout.

    First line holds the point count N; each of the N rows is
    ``X Y TStamp ButtonStatus Azimuth Altitude Pressure``. The button
    status is discarded.
    """
    lines = [(i, ln.strip()) for i, ln in enumerate(text.splitlines(), start=1)]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines:
        raise MalformedRow(1, "missing point count")
    head_no, head = lines[0]
    try:
        count = int(head)
    except ValueError:
        raise MalformedRow(head_no, f"point count is not an integer: {head!r}") from None
    if count < 0:
        raise MalformedRow(head_no, f"negative point count {count}")
    body = lines[1:]
    if len(body) != count:
        raise CountMismatch(f"header declares {count} points, found {len(body)} rows")
    if count == 0:
        raise EmptySignature("SVC2004 file declares zero points")

    samples = []
    for lineno, line in body:
        fields = line.split()
        if len(fields) != 7:
            raise MalformedRow(lineno, f"expected 7 fields, got {len(fields)}")
        x, y, t, _button, az, alt, p = (_parse_number(f, lineno) for f in fields)
        samples.append(SignatureSample(t=t, x=x, y=y, p=p, azimuth=az, altitude=alt))
    return Signature.from_samples(
        samples, signer_id=signer_id, signature_id=signature_id,
        label=label, modality=modality,
    )


# -- manifests ---------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    signer_id: str
    signature_id: str
    label: Label
    modality: Modality
    path: Path
    split: Split | None = None

    def load(self) -> Signature:
        return read_signature(self.path)

    def to_json(self, root: Path | None = None) -> dict:
        path = self.path
        if root is not None:
            try:
                path = path.relative_to(root)
            except ValueError:
                pass
        return {
            "signer_id": self.signer_id,
            "signature_id": self.signature_id,
            "label": self.label.value,
            "modality": self.modality.value,
            "path": path.as_posix(),
            "split": self.split.value if self.split else None,
        }


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            key = (e.signer_id, e.signature_id)
            if key in seen:
                raise DuplicateEntry(f"duplicate entry {key}")
            seen.add(key)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def signers(self) -> list[str]:
        return sorted({e.signer_id for e in self.entries})

    def by_signer(self) -> dict[str, list[ManifestEntry]]:
        groups: dict[str, list[ManifestEntry]] = {}
        for e in self.entries:
            groups.setdefault(e.signer_id, []).append(e)
        return {k: sorted(v, key=lambda e: e.signature_id) for k, v in sorted(groups.items())}

    def filter(self, split: Split | None = None, modality: Modality | None = None) -> "DatasetManifest":
        return DatasetManifest(tuple(
            e for e in self.entries
            if (split is None or e.split == split)
            and (modality is None or e.modality == modality)
        ))


_ENTRY_FIELDS = ("signer_id", "signature_id", "label", "modality", "path")


def _entry_from_json(obj, index: int, root: Path) -> ManifestEntry:
    if not isinstance(obj, dict):
        raise MalformedManifest(f"entry {index} is not an object")
    missing = [f for f in _ENTRY_FIELDS if f not in obj]
    if missing:
        raise MalformedManifest(f"entry {index} lacks fields: {', '.join(missing)}")
    try:
        split = obj.get("split")
        return ManifestEntry(
            signer_id=str(obj["signer_id"]),
            signature_id=str(obj["signature_id"]),
            label=Label(obj["label"]),
            modality=Modality(obj["modality"]),
            path=(root / obj["path"]),
            split=Split(split) if split is not None else None,
        )
    except ValueError as exc:
        raise MalformedManifest(f"entry {index}: {exc}") from None


def load_manifest(path, validate: bool = True) -> DatasetManifest:
    """Read a JSON manifest; entry paths are relative to the manifest's directory.

    With ``validate`` every referenced file is parsed and its header checked
    against the manifest entry.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedManifest(f"{path}: {exc}") from None
    if not isinstance(doc, list):
        raise MalformedManifest(f"{path}: top level must be a JSON array")
    root = path.parent
    manifest = DatasetManifest(tuple(_entry_from_json(o, i, root) for i, o in enumerate(doc)))
    if validate:
        for e in manifest:
            if not e.path.is_file():
                raise MissingFile(f"{e.path} (signer {e.signer_id}, signature {e.signature_id})")
            sig = e.load()
            if (sig.signer_id, sig.signature_id) != (e.signer_id, e.signature_id):
                raise MalformedManifest(
                    f"{e.path}: header ids ({sig.signer_id}, {sig.signature_id}) "
                    f"disagree with manifest ({e.signer_id}, {e.signature_id})"
                )
    return manifest


def dump_manifest(manifest: DatasetManifest, path) -> Path:
    path = Path(path)
    root = path.parent.resolve()
    doc = [e.to_json(root) for e in manifest]
    for obj, e in zip(doc, manifest):
        # keep relative paths when entries live under the manifest directory
        try:
            obj["path"] = Path(e.path).resolve().relative_to(root).as_posix()
        except ValueError:
            obj["path"] = Path(e.path).as_posix()
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8", newline="\n")
    return path
