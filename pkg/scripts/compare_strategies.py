"""Compare frame-sampling strategies on a corpus at one retention level.

Runs the full sample -> describe -> cross-validate pipeline once per strategy
and prints a score table. Mode-based selection (ss) is expected to keep more
of the class signal than uniform (us) or random (ra) sampling at the same
retained percentage; the full-sequence baseline (bl) bounds all of them.
"""

import argparse
import json
import logging
from pathlib import Path

from modesift.evaluation import read_manifest, report_to_json, run_experiment
from modesift.features import LbptopConfig
from modesift.sampling import SamplingConfig

log = logging.getLogger("compare_strategies")


def get_args():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("manifest", type=Path, help="corpus manifest CSV")
    parser.add_argument("out_dir", type=Path, help="directory for per-strategy reports")
    parser.add_argument("--percent", type=float, default=45.0,
                        help="retained percentage for ss/us/ra")
    parser.add_argument("--strategies", nargs="+", default=["bl", "us", "ra", "ss"],
                        help="subset of: bl us ra ss")
    parser.add_argument("--protocol", choices=["loso", "lovo"], default="loso")
    parser.add_argument("--gamma-min", type=float, default=0.02)
    parser.add_argument("--gamma-max", type=float, default=3.0)
    parser.add_argument("--gamma-count", type=int, default=80)
    parser.add_argument("--blocks", type=int, default=4, help="descriptor blocks per axis")
    parser.add_argument("--seed", type=int, default=123)
    parser.add_argument("--threads", type=int, default=0, help="0 = one per cpu")
    return parser.parse_args()


def build_config(strategy: str, args) -> SamplingConfig:
    if strategy == "bl":
        return SamplingConfig(strategy="bl")
    if strategy == "ss":
        return SamplingConfig(
            strategy="ss", percent=args.percent,
            gamma_min=args.gamma_min, gamma_max=args.gamma_max,
            gamma_count=args.gamma_count,
        )
    return SamplingConfig(strategy=strategy, percent=args.percent)


def main():
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = get_args()
    manifest = read_manifest(args.manifest)
    log.info("corpus: %d samples, %d subjects, classes %s",
             len(manifest), len(manifest.subjects), ", ".join(manifest.class_set))
    lbp_cfg = LbptopConfig(blocks=args.blocks, radii=(1, 1, 3), normalize=True)
    args.out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for strategy in args.strategies:
        cfg = build_config(strategy, args)
        log.info("running %s at %.0f%% ...", strategy, cfg.percent)
        report = run_experiment(
            manifest, cfg, lbp_cfg,
            protocol=args.protocol, seed=args.seed,
            threads=args.threads or None,
        )
        out = args.out_dir / f"report_{strategy}.json"
        out.write_text(report_to_json(report))
        if report.failures:
            log.warning("%s: %d samples failed, e.g. %s",
                        strategy, len(report.failures), report.failures[0])
        rows.append((strategy, report.pooled))

    print(f"\n{args.protocol} results at {args.percent:.0f}% retention "
          f"({len(manifest)} samples)")
    print(f"{'strategy':<10}{'accuracy':>10}{'macro-F1':>10}{'macro-rec':>11}{'macro-prec':>12}")
    for strategy, pooled in rows:
        print(f"{strategy:<10}{pooled.accuracy:>10.4f}{pooled.macro_f1:>10.4f}"
              f"{pooled.macro_recall:>11.4f}{pooled.macro_precision:>12.4f}")
    summary = {s: {"accuracy": p.accuracy, "macro_f1": p.macro_f1} for s, p in rows}
    (args.out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


if __name__ == "__main__":
    main()
