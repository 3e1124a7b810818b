"""Command-line interface.

One subcommand per pipeline stage: ingest, dmd, dmdsp-sweep, tim, sample,
spectrum, temporal, gamma-curve, lbptop, evaluate. Every run resolves its
configuration from defaults, then an optional --config JSON file, then
explicit flags (the MODESIFT_THREADS environment variable beats --threads),
writes the resolved configuration to run_config.json next to its outputs,
and exits 0 on success, 1 on a domain error, 2 on a usage error. Outputs
are deterministic: the same configuration and inputs give byte-identical
files. Diagnostics go to stderr; data goes to files under --output.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, dmd, dmdsp, features, sampling, tim
from .errors import ModesiftError
from .evaluation import (
    read_manifest,
    read_predictions,
    report_to_json,
    report_to_markdown,
    run_experiment,
    score_predictions,
    write_predictions,
)
from .seqio import load_sequence, resize, to_snapshots, write_sequence

logger = logging.getLogger(__name__)

COMMANDS = (
    "ingest", "dmd", "dmdsp-sweep", "tim", "sample",
    "spectrum", "temporal", "gamma-curve", "lbptop", "evaluate",
)


@dataclass(frozen=True)
class RunConfig:
    """Flat, JSON-serializable record of one CLI run."""

    command: str = ""
    input: tuple[str, ...] = ()
    output: str = ""
    seed: int = 0
    threads: int = 0  # 0 = automatic
    fmt: str = "auto"
    resize: str = ""  # "ROWSxCOLS", empty = no resize
    frames: int = 0  # tim target length
    rank_tol: float = dmd.DEFAULT_RANK_TOL
    gamma_min: float = dmdsp.DEFAULT_GAMMA_MIN
    gamma_max: float = dmdsp.DEFAULT_GAMMA_MAX
    gamma_count: int = dmdsp.DEFAULT_GAMMA_COUNT
    zero_tol: float = dmdsp.DEFAULT_ZERO_TOL
    rho: float = 1.0
    max_iter: int = 10000
    eps_abs: float = 1e-6
    eps_rel: float = 1e-4
    strategy: str = "bl"
    percent: float = 100.0
    fixed_length: int = 0
    keep_original_frames: bool = False
    bin_width: float = analysis.DEFAULT_BIN_WIDTH
    mapping: str = "sparse-mask"
    original_frames: int = 0
    blocks: int = 5
    radii: str = "1,1,3"
    normalize: bool = False
    feature_format: str = "csv"
    manifest: str = ""
    protocol: str = "loso"
    classifier: str = "reference"
    predictions: str = ""

    def to_json(self) -> str:
        data = dataclasses.asdict(self)
        data["input"] = list(self.input)
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        if "input" in data:
            data["input"] = tuple(data["input"])
        return cls(**data)


def _merge_config(args: argparse.Namespace) -> RunConfig:
    overrides = {k: v for k, v in vars(args).items() if k != "config"}
    base: dict = dataclasses.asdict(RunConfig())
    config_path = getattr(args, "config", None)
    if config_path:
        loaded = json.loads(Path(config_path).read_text())
        unknown = set(loaded) - set(base)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        base.update(loaded)
    base.update(overrides)
    base["input"] = tuple(base.get("input") or ())
    cfg = RunConfig(**base)
    env_threads = os.environ.get("MODESIFT_THREADS")
    if env_threads:
        cfg = dataclasses.replace(cfg, threads=int(env_threads))
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    if not cfg.output:
        raise ValueError("--output is required")
    path = Path(cfg.output)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_run_config(cfg: RunConfig, out: Path) -> None:
    (out / "run_config.json").write_text(cfg.to_json())


def _single_input(cfg: RunConfig) -> str:
    if len(cfg.input) != 1:
        raise ValueError(f"{cfg.command} takes exactly one --input, got {len(cfg.input)}")
    return cfg.input[0]


def _parse_resize(text: str) -> tuple[int, int] | None:
    if not text:
        return None
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"--resize must look like ROWSxCOLS, got {text!r}")
    return int(parts[0]), int(parts[1])


def _parse_radii(text: str) -> tuple[int, int, int]:
    parts = [int(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"--radii must be RX,RY,RT, got {text!r}")
    return parts[0], parts[1], parts[2]


def _load_single(cfg: RunConfig):
    fmt = None if cfg.fmt in ("", "auto") else cfg.fmt
    return load_sequence(_single_input(cfg), fmt=fmt)


def _admm_params(cfg: RunConfig) -> dmdsp.AdmmParams:
    return dmdsp.AdmmParams(
        rho=cfg.rho, max_iter=cfg.max_iter, eps_abs=cfg.eps_abs, eps_rel=cfg.eps_rel
    )


def _sampling_config(cfg: RunConfig) -> sampling.SamplingConfig:
    return sampling.SamplingConfig(
        strategy=cfg.strategy,
        percent=cfg.percent,
        fixed_length=cfg.fixed_length,
        seed=cfg.seed,
        keep_original_frames=cfg.keep_original_frames,
        gamma_min=cfg.gamma_min,
        gamma_max=cfg.gamma_max,
        gamma_count=cfg.gamma_count,
        zero_tol=cfg.zero_tol,
        rank_tol=cfg.rank_tol,
        admm=_admm_params(cfg),
    )


def _lbptop_config(cfg: RunConfig) -> features.LbptopConfig:
    return features.LbptopConfig(
        blocks=cfg.blocks, radii=_parse_radii(cfg.radii), normalize=cfg.normalize
    )


def _sweep(cfg: RunConfig, seq):
    snap = to_snapshots(seq)
    decomp = dmd.decompose(snap, rank_tol=cfg.rank_tol)
    grid = dmdsp.default_gamma_grid(cfg.gamma_min, cfg.gamma_max, cfg.gamma_count)
    records = dmdsp.gamma_sweep(decomp, snap, gammas=grid, params=_admm_params(cfg), zero_tol=cfg.zero_tol)
    return decomp, records


def _cmd_ingest(cfg: RunConfig, out: Path) -> None:
    seq = _load_single(cfg)
    target = _parse_resize(cfg.resize)
    if target:
        seq = resize(seq, *target)
    write_sequence(seq, out / "sequence.msq")
    logger.info("ingested %d frames at %g fps", seq.n_f, seq.fps)


def _cmd_dmd(cfg: RunConfig, out: Path) -> None:
    seq = _load_single(cfg)
    snap = to_snapshots(seq)
    decomp = dmd.decompose(snap, rank_tol=cfg.rank_tol)
    manifest = dmd.decomposition_manifest(decomp)
    mags = np.abs(decomp.modes)  # (M, r)
    scales = mags.max(axis=0)
    scales[scales == 0] = 1.0
    mode_frames = (mags / scales[None, :]).T.reshape(decomp.rank, seq.n_r, seq.n_c)
    manifest["mode_image_scales"] = [float(s) for s in scales]
    (out / "decomposition.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    from .seqio import FrameSequence

    write_sequence(
        FrameSequence(frames=np.clip(mode_frames, 0.0, 1.0), fps=seq.fps),
        out / "modes.msq",
    )


def _cmd_dmdsp_sweep(cfg: RunConfig, out: Path) -> None:
    seq = _load_single(cfg)
    _, records = _sweep(cfg, seq)
    dmdsp.sweep_to_csv(records, out / "sweep.csv")


def _cmd_tim(cfg: RunConfig, out: Path) -> None:
    seq = _load_single(cfg)
    if cfg.frames < 2:
        raise ValueError("--frames must be >= 2")
    model = tim.fit(seq)
    write_sequence(tim.synthesize(model, cfg.frames), out / "resampled.msq")


def _cmd_sample(cfg: RunConfig, out: Path) -> None:
    seq = _load_single(cfg)
    sampled, info = sampling.apply_strategy(_sampling_config(cfg), seq)
    write_sequence(sampled, out / "sampled.msq")
    (out / "sample_info.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")


def _cmd_spectrum(cfg: RunConfig, out: Path) -> None:
    if not cfg.input:
        raise ValueError("spectrum needs at least one --input")
    decomps = []
    for path in cfg.input:
        seq = load_sequence(path)
        decomps.append(dmd.decompose(to_snapshots(seq), rank_tol=cfg.rank_tol))
    hist = analysis.spectral_histogram(decomps, bin_width=cfg.bin_width)
    analysis.histogram_to_csv(hist, out / "spectrum.csv")


def _cmd_temporal(cfg: RunConfig, out: Path) -> None:
    seq = _load_single(cfg)
    if cfg.mapping == "sparse-mask":
        decomp, records = _sweep(cfg, seq)
        record = dmdsp.select_percentage(records, cfg.percent)
        profile = analysis.temporal_profile(
            decomp, seq.n_f, "sparse_mask", structure=record.structure
        )
    elif cfg.mapping == "uniform-grid":
        if cfg.original_frames < 2:
            raise ValueError("uniform-grid mapping needs --original-frames")
        decomp = dmd.decompose(to_snapshots(seq), rank_tol=cfg.rank_tol)
        profile = analysis.temporal_profile(decomp, cfg.original_frames, "uniform_grid")
    else:
        raise ValueError(f"unknown mapping {cfg.mapping!r}")
    analysis.profile_to_csv(profile, out / "temporal_profile.csv")


def _cmd_gamma_curve(cfg: RunConfig, out: Path) -> None:
    seq = _load_single(cfg)
    _, records = _sweep(cfg, seq)
    curve = analysis.gamma_percentage_curve(records)
    analysis.curve_to_csv(curve, out / "gamma_curve.csv")


def _cmd_lbptop(cfg: RunConfig, out: Path) -> None:
    lcfg = _lbptop_config(cfg)
    rows = []
    if cfg.manifest:
        manifest = read_manifest(cfg.manifest)
        for entry in manifest.entries:
            seq = load_sequence(entry.path, source_id=entry.sample_id)
            rows.append((entry.sample_id, entry.label, entry.subject_id, features.lbptop(seq, lcfg)))
    else:
        seq = _load_single(cfg)
        rows.append((seq.source_id, "", "", features.lbptop(seq, lcfg)))
    if cfg.feature_format == "csv":
        features.features_to_csv(rows, out / "features.csv")
    elif cfg.feature_format == "f32":
        features.features_to_binary(rows, out / "features.bin")
    else:
        raise ValueError(f"unknown feature format {cfg.feature_format!r}")


def _cmd_evaluate(cfg: RunConfig, out: Path) -> None:
    if not cfg.manifest:
        raise ValueError("evaluate needs --manifest")
    manifest = read_manifest(cfg.manifest)
    if cfg.classifier == "import":
        if not cfg.predictions:
            raise ValueError("--classifier import needs --predictions")
        predicted = read_predictions(cfg.predictions)
        pooled = score_predictions(manifest, predicted)
        payload = {
            "classifier": "import",
            "pooled": pooled.to_dict(),
            "predictions_file": cfg.predictions,
        }
        (out / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        md = ["# Evaluation report (imported predictions)", ""]
        for label, m in pooled.per_class:
            md.append(f"- {label}: recall {m.recall:.4f}, precision {m.precision:.4f}, f1 {m.f1:.4f}")
        md += ["", f"- accuracy: {pooled.accuracy:.4f}", f"- macro f1: {pooled.macro_f1:.4f}", ""]
        (out / "report.md").write_text("\n".join(md))
        return
    if cfg.classifier != "reference":
        raise ValueError(f"unknown classifier {cfg.classifier!r}")
    report = run_experiment(
        manifest,
        _sampling_config(cfg),
        _lbptop_config(cfg),
        protocol=cfg.protocol,
        resize_to=_parse_resize(cfg.resize),
        seed=cfg.seed,
        threads=cfg.threads or None,
    )
    (out / "report.json").write_text(report_to_json(report))
    (out / "report.md").write_text(report_to_markdown(report))
    write_predictions(report.predictions, out / "predictions.csv")


_HANDLERS = {
    "ingest": _cmd_ingest,
    "dmd": _cmd_dmd,
    "dmdsp-sweep": _cmd_dmdsp_sweep,
    "tim": _cmd_tim,
    "sample": _cmd_sample,
    "spectrum": _cmd_spectrum,
    "temporal": _cmd_temporal,
    "gamma-curve": _cmd_gamma_curve,
    "lbptop": _cmd_lbptop,
    "evaluate": _cmd_evaluate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modesift",
        description="Temporal redundancy analysis and removal for grayscale frame sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    s = argparse.SUPPRESS

    def add_common(p, inputs="single"):
        if inputs == "multi":
            p.add_argument("--input", nargs="+", default=s, help="input sequence path(s)")
        elif inputs == "single":
            p.add_argument("--input", nargs=1, default=s, help="input sequence path")
        p.add_argument("--output", default=s, help="output directory (created if missing)")
        p.add_argument("--config", default=None, help="JSON file with defaults for any flag")
        p.add_argument("--seed", type=int, default=s, help="integer seed for randomized steps")
        p.add_argument("--threads", type=int, default=s, help="worker threads (0 = auto)")

    def add_gamma(p):
        p.add_argument("--gamma-min", dest="gamma_min", type=float, default=s)
        p.add_argument("--gamma-max", dest="gamma_max", type=float, default=s)
        p.add_argument("--gamma-count", dest="gamma_count", type=int, default=s)
        p.add_argument("--zero-tol", dest="zero_tol", type=float, default=s)
        p.add_argument("--rho", type=float, default=s)
        p.add_argument("--max-iter", dest="max_iter", type=int, default=s)
        p.add_argument("--eps-abs", dest="eps_abs", type=float, default=s)
        p.add_argument("--eps-rel", dest="eps_rel", type=float, default=s)

    def add_rank(p):
        p.add_argument("--rank-tol", dest="rank_tol", type=float, default=s)

    def add_lbp(p):
        p.add_argument("--blocks", type=int, default=s, help="blocks per spatial axis")
        p.add_argument("--radii", default=s, help="RX,RY,RT (default 1,1,3)")
        p.add_argument("--normalize", action="store_true", default=s,
                       help="L1-normalize each block-plane histogram")

    p = sub.add_parser("ingest", help="read a sequence, optionally resize, store as raw tensor")
    add_common(p)
    p.add_argument("--format", dest="fmt", choices=["auto", "raw", "images"], default=s)
    p.add_argument("--resize", default=s, help="ROWSxCOLS bilinear resize")

    p = sub.add_parser("dmd", help="decompose a sequence; write spectrum manifest and mode images")
    add_common(p)
    add_rank(p)

    p = sub.add_parser("dmdsp-sweep", help="sparsity path over a gamma grid; write sweep.csv")
    add_common(p)
    add_rank(p)
    add_gamma(p)

    p = sub.add_parser("tim", help="rescale a sequence to --frames via curve interpolation")
    add_common(p)
    p.add_argument("--frames", type=int, default=s, help="output frame count (>= 2)")

    p = sub.add_parser("sample", help="shorten a sequence with one of the sampling strategies")
    add_common(p)
    add_rank(p)
    add_gamma(p)
    p.add_argument("--strategy", choices=list(sampling.STRATEGIES), default=s)
    p.add_argument("--percent", type=float, default=s, help="target retained percentage")
    p.add_argument("--fixed-length", dest="fixed_length", type=int, default=s,
                   help="output length for us-star")
    p.add_argument("--keep-original-frames", dest="keep_original_frames",
                   action="store_true", default=s,
                   help="ss only: keep source frames at surviving mode positions")

    p = sub.add_parser("spectrum", help="amplitude-weighted frequency histogram of sequences")
    add_common(p, inputs="multi")
    add_rank(p)
    p.add_argument("--bin-width", dest="bin_width", type=float, default=s, help="bin width in Hz")

    p = sub.add_parser("temporal", help="amplitude magnitude per original frame position")
    add_common(p)
    add_rank(p)
    add_gamma(p)
    p.add_argument("--mapping", choices=["sparse-mask", "uniform-grid"], default=s)
    p.add_argument("--percent", type=float, default=s, help="sparse-mask: target percentage")
    p.add_argument("--original-frames", dest="original_frames", type=int, default=s,
                   help="uniform-grid: original sequence length")

    p = sub.add_parser("gamma-curve", help="retained percentage vs gamma; write gamma_curve.csv")
    add_common(p)
    add_rank(p)
    add_gamma(p)

    p = sub.add_parser("lbptop", help="three-plane pattern features for one sequence or a manifest")
    add_common(p)
    add_lbp(p)
    p.add_argument("--manifest", default=s, help="corpus manifest CSV")
    p.add_argument("--feature-format", dest="feature_format", choices=["csv", "f32"], default=s)

    p = sub.add_parser("evaluate", help="cross-validated classification over a corpus manifest")
    add_common(p, inputs=None)
    add_rank(p)
    add_gamma(p)
    add_lbp(p)
    p.add_argument("--manifest", default=s, help="corpus manifest CSV")
    p.add_argument("--protocol", choices=["loso", "lovo"], default=s)
    p.add_argument("--strategy", choices=list(sampling.STRATEGIES), default=s)
    p.add_argument("--percent", type=float, default=s)
    p.add_argument("--fixed-length", dest="fixed_length", type=int, default=s)
    p.add_argument("--keep-original-frames", dest="keep_original_frames",
                   action="store_true", default=s)
    p.add_argument("--resize", default=s, help="ROWSxCOLS resize after sampling")
    p.add_argument("--classifier", choices=["reference", "import"], default=s)
    p.add_argument("--predictions", default=s, help="CSV of imported predictions")

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        out = _out_dir(cfg)
        _write_run_config(cfg, out)
        _HANDLERS[cfg.command](cfg, out)
    except ModesiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
