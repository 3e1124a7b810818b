"""Temporal redundancy analysis and removal for grayscale frame sequences.

Pipeline: ingest frames (seqio), decompose their dynamics into spatial modes
with per-step eigenvalues and amplitudes (dmd), prune amplitudes with a
sparsity penalty (dmdsp), shorten sequences by several strategies (sampling,
tim), inspect spectra and per-frame amplitude layouts (analysis), describe
the result with three-plane pattern histograms (features), and compare
strategies under cross-validated classification (evaluation).
"""

from .dmd import DmdDecomposition, decompose, optimal_amplitudes, reconstruct
from .dmdsp import AdmmParams, SparsityRecord, gamma_sweep, select_percentage
from .errors import ModesiftError
from .evaluation import CorpusManifest, KernelRidgeClassifier, run_experiment, score
from .features import LbptopConfig, lbptop
from .sampling import SamplingConfig, apply_strategy
from .seqio import FrameSequence, SnapshotPair, load_sequence, to_snapshots, write_sequence

__version__ = "0.1.0"

__all__ = [
    "AdmmParams",
    "CorpusManifest",
    "DmdDecomposition",
    "FrameSequence",
    "KernelRidgeClassifier",
    "LbptopConfig",
    "ModesiftError",
    "SamplingConfig",
    "SnapshotPair",
    "SparsityRecord",
    "apply_strategy",
    "decompose",
    "gamma_sweep",
    "lbptop",
    "load_sequence",
    "optimal_amplitudes",
    "reconstruct",
    "run_experiment",
    "score",
    "select_percentage",
    "to_snapshots",
    "write_sequence",
    "__version__",
]
