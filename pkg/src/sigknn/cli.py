"""Command-line entry point: ``sigknn {import,calibrate,verify,evaluate,synth}``.

Machine-readable output goes to stdout, diagnostics to stderr. Exit codes:
0 success (``verify``: genuine), 1 ``verify`` judged the signature forged,
2 or more on any error.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dtw import DtwConfig
from .errors import SigError
from .evaluation import (
    ProtocolSpec,
    compute_eer,
    export_results,
    far_frr_curve,
    run_protocol,
)
from .knn import Decision, GlobalCalibration, KnnConfig, build_reference_set, calibrate_global, score
from .preprocess import PreprocessConfig, preprocess_pipeline
from .sigdata import (
    CANONICAL_SUFFIX,
    DatasetManifest,
    Label,
    ManifestEntry,
    Modality,
    dump_manifest,
    load_manifest,
    parse_canonical,
    parse_svc2004,
    read_signature,
    write_signature,
)
from .synth import SynthParams, generate_dataset

log = logging.getLogger("sigknn")

EXIT_GENUINE, EXIT_FORGED, EXIT_ERROR = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    dtw: DtwConfig = field(default_factory=DtwConfig)
    knn: KnnConfig = field(default_factory=KnnConfig)
    protocol: ProtocolSpec = field(default_factory=ProtocolSpec)
    paths: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - {"preprocess", "dtw", "knn", "protocol", "paths"}
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        return cls(
            preprocess=PreprocessConfig.from_dict(d.get("preprocess", {})),
            dtw=DtwConfig.from_dict(d.get("dtw", {})),
            knn=KnnConfig.from_dict(d.get("knn", {})),
            protocol=ProtocolSpec.from_dict(d.get("protocol", {})),
            paths=dict(d.get("paths", {})),
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "preprocess": self.preprocess.to_dict(),
            "dtw": self.dtw.to_dict(),
            "knn": self.knn.to_dict(),
            "protocol": self.protocol.to_dict(),
            "paths": dict(sorted(self.paths.items())),
        }


def _run_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    knn = {k: v for k, v in (("K", getattr(args, "K", None)),
                             ("theta", getattr(args, "theta", None)),
                             ("s", getattr(args, "s", None)),
                             ("decision_tau", getattr(args, "tau", None))) if v is not None}
    if knn:
        cfg = replace(cfg, knn=replace(cfg.knn, **knn))
    if getattr(args, "band_radius", None) is not None:
        cfg = replace(cfg, dtw=replace(cfg.dtw, band_radius=args.band_radius))
    if getattr(args, "pressure_floor", None) is not None:
        cfg = replace(cfg, preprocess=replace(cfg.preprocess, pressure_floor=args.pressure_floor))
    if getattr(args, "mode", None) is not None:
        cfg = replace(cfg, protocol=replace(cfg.protocol, mode=args.mode))
    if getattr(args, "random_forgeries", False):
        cfg = replace(cfg, protocol=replace(cfg.protocol, random_forgeries=True))
    if getattr(args, "calibration", None) is not None:
        cfg = replace(cfg, paths={**cfg.paths, "calibration": str(args.calibration)})
    return cfg


def _load_calibration(cfg: RunConfig) -> GlobalCalibration | None:
    path = cfg.paths.get("calibration")
    return GlobalCalibration.load(path) if path else None


# -- import ------------------------------------------------------------------

_SVC_NAME = re.compile(r"^U(\d+)S(\d+)$", re.IGNORECASE)
SVC_GENUINE_PER_USER = 20


def _svc_identity(stem: str, args) -> tuple[str, str, Label]:
    """SVC2004 files are named U<user>S<n>; n <= 20 are genuine, the rest skilled forgeries."""
    match = _SVC_NAME.match(stem)
    if match and args.signer_id is None:
        user, n = int(match.group(1)), int(match.group(2))
        label = Label.GENUINE if n <= SVC_GENUINE_PER_USER else Label.FORGED
        return f"U{user}", f"S{n:02d}", label
    return args.signer_id or stem, stem, Label(args.label)


def cmd_import(args) -> int:
    src = Path(args.in_path)
    if src.is_dir():
        pattern = f"*{CANONICAL_SUFFIX}" if args.format == "canonical" else "*"
        files = sorted(p for p in src.glob(pattern) if p.is_file())
    else:
        files = [src]
    if not files:
        raise SigError(f"no input files found under {src}")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for path in files:
        text = path.read_text(encoding="utf-8", errors="replace")
        stem = path.name[: -len(CANONICAL_SUFFIX)] if path.name.endswith(CANONICAL_SUFFIX) else path.stem
        try:
            if args.format == "canonical":
                sig = parse_canonical(text)
            else:
                signer, sig_id, label = _svc_identity(stem, args)
                sig = parse_svc2004(text, signer_id=signer, signature_id=sig_id, label=label,
                                    modality=Modality(args.modality))
        except SigError as exc:
            raise SigError(f"{path}: {exc}") from exc
        target = out_dir / sig.signer_id / f"{sig.signature_id}{CANONICAL_SUFFIX}"
        target.parent.mkdir(parents=True, exist_ok=True)
        write_signature(sig, target)
        entries.append(ManifestEntry(sig.signer_id, sig.signature_id, sig.label, sig.modality, target))
    manifest_path = dump_manifest(DatasetManifest(tuple(entries)), out_dir / "manifest.json")
    print(json.dumps({"manifest": str(manifest_path), "n_signatures": len(entries)}))
    return 0


# -- calibrate ---------------------------------------------------------------

def cmd_calibrate(args) -> int:
    cfg = _run_config(args)
    dev = load_manifest(args.dev_manifest)
    cal = calibrate_global(dev, cfg.preprocess, cfg.dtw)
    cal.save(args.out)
    print(cal.to_json(), end="")
    return 0


# -- verify ------------------------------------------------------------------

def cmd_verify(args) -> int:
    cfg = _run_config(args)
    refs = [preprocess_pipeline(read_signature(p), cfg.preprocess) for p in args.ref]
    question = preprocess_pipeline(read_signature(args.questioned), cfg.preprocess)
    rs = build_reference_set("cli", refs, cfg.dtw)
    result = score(question, rs, cfg.knn, _load_calibration(cfg))
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return EXIT_GENUINE if result.decision is Decision.GENUINE else EXIT_FORGED


# -- evaluate ----------------------------------------------------------------

def cmd_evaluate(args) -> int:
    cfg = _run_config(args)
    manifest = load_manifest(args.manifest)
    run = run_protocol(manifest, cfg.protocol, cfg.preprocess, cfg.dtw, cfg.knn,
                       _load_calibration(cfg), jobs=args.jobs)
    curve = far_frr_curve(run.trials)
    eer = compute_eer(curve)
    out = Path(args.out or cfg.paths.get("out_dir", "reports"))
    extra = {"skipped_signers": [{"signer_id": s, "reason": r} for s, r in run.skipped]}
    export_results(run.trials, curve, eer, out, config=cfg.to_dict(), extra=extra)
    print(f"EER: {100 * eer.eer:.2f}%")
    return 0


# -- synth -------------------------------------------------------------------

def cmd_synth(args) -> int:
    params = SynthParams(
        seed=args.seed if args.seed is not None else 42,
        n_writers=args.writers,
        genuine_per_writer=args.genuine,
        skilled_forgeries_per_writer=args.forged,
        base_harmonics=args.harmonics,
        jitter_sigma=args.jitter,
        warp_strength=args.warp,
        forgery_distortion=args.distortion,
        modality=Modality(args.modality),
    )
    manifest = generate_dataset(params, args.out)
    print(json.dumps({"manifest": str(Path(args.out) / "manifest.json"),
                      "n_signatures": len(manifest)}))
    return 0


# -- parser ------------------------------------------------------------------

def _global_flags(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON run-config file")
    parser.add_argument("--seed", type=int, default=default, help="random seed (synth)")
    parser.add_argument("--jobs", type=int, default=argparse.SUPPRESS if suppress else 1,
                        help="parallel worker processes")
    parser.add_argument("-v", "--verbose", action="store_true",
                        default=argparse.SUPPRESS if suppress else False)


def _knn_flags(parser):
    parser.add_argument("--K", type=int, help="neighbours averaged for the threshold base")
    parser.add_argument("--theta", type=float, help="forgery threshold multiplier")
    parser.add_argument("--s", type=float, help="prediction scale")
    parser.add_argument("--tau", type=float, help="decision threshold on the forgery score")
    parser.add_argument("--band-radius", type=int, help="Sakoe-Chiba band radius")
    parser.add_argument("--pressure-floor", type=float, help="drop stylus samples with p <= floor")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sigknn", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="convert signature files to the canonical format")
    _global_flags(p, suppress=True)
    p.add_argument("in_path", help="file or directory")
    p.add_argument("--format", choices=("canonical", "svc2004"), required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--signer-id", help="signer id when file names carry none")
    p.add_argument("--label", choices=[l.value for l in Label], default="unknown")
    p.add_argument("--modality", choices=[m.value for m in Modality], default="stylus")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("calibrate", help="estimate the writer-independent threshold base")
    _global_flags(p, suppress=True)
    _knn_flags(p)
    p.add_argument("dev_manifest")
    p.add_argument("--out", required=True, help="calibration JSON to write")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("verify", help="score one questioned signature")
    _global_flags(p, suppress=True)
    _knn_flags(p)
    p.add_argument("questioned")
    p.add_argument("--ref", action="append", required=True, help="reference file (repeatable)")
    p.add_argument("--calibration", help="calibration JSON for single-reference sets")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("evaluate", help="run a protocol and report the EER")
    _global_flags(p, suppress=True)
    _knn_flags(p)
    p.add_argument("manifest")
    p.add_argument("--mode", choices=("1vs1", "4vs1"))
    p.add_argument("--random-forgeries", action="store_true",
                   help="add other signers' genuines as impostor trials")
    p.add_argument("--calibration", help="calibration JSON (needed for 1vs1)")
    p.add_argument("--out", help="report directory (default: paths.out_dir or ./reports)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    _global_flags(p, suppress=True)
    p.add_argument("out")
    p.add_argument("--writers", type=int, default=10)
    p.add_argument("--genuine", type=int, default=10)
    p.add_argument("--forged", type=int, default=10)
    p.add_argument("--harmonics", type=int, default=4)
    p.add_argument("--jitter", type=float, default=0.01)
    p.add_argument("--warp", type=float, default=0.1)
    p.add_argument("--distortion", type=float, default=0.35)
    p.add_argument("--modality", choices=[m.value for m in Modality], default="stylus")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (SigError, ValueError, OSError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
