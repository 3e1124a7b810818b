"""Generate the procedural face-patch corpus used by the evaluation harness.

Writes one .msq file per clip plus a manifest.csv into the output directory.
"""

import argparse
import logging
from pathlib import Path

from modesift.synth import CorpusSpec, generate_corpus

log = logging.getLogger("make_synthetic_corpus")


def get_args():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", type=Path, help="directory for clips and manifest.csv")
    parser.add_argument("--subjects", type=int, default=6, help="number of synthetic subjects")
    parser.add_argument("--clips", type=int, default=10, help="clips per subject")
    parser.add_argument("--fps", type=float, default=100.0, help="capture rate")
    parser.add_argument("--rows", type=int, default=40, help="frame height")
    parser.add_argument("--cols", type=int, default=40, help="frame width")
    parser.add_argument("--seed", type=int, default=7, help="corpus seed")
    parser.add_argument("--noise", type=float, default=0.004, help="sensor noise level")
    return parser.parse_args()


def main():
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = get_args()
    spec = CorpusSpec(
        n_subjects=args.subjects,
        clips_per_subject=args.clips,
        fps=args.fps,
        size=(args.rows, args.cols),
        seed=args.seed,
        noise=args.noise,
    )
    manifest = generate_corpus(args.out_dir, spec)
    by_label: dict[str, int] = {}
    for entry in manifest.entries:
        by_label[entry.label] = by_label.get(entry.label, 0) + 1
    log.info("wrote %d clips to %s", len(manifest), args.out_dir)
    for label in sorted(by_label):
        log.info("  %-8s %d clips", label, by_label[label])
    print(args.out_dir / "manifest.csv")


if __name__ == "__main__":
    main()
