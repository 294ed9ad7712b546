"""Detection of imagined-word segments (IWS) in continuous multichannel EEG.

Pipeline: common-average-reference cleaning, sliding-window segmentation,
wavelet/EMD decomposition, energy + fractal + Hurst features, per-subject
classification, majority-vote smoothing and first-neighbor correction,
precision/recall/F1 scoring.
"""

from .data import (
    SignalInstance,
    SubjectDataset,
    SynthConfig,
    Trial,
    generate_synthetic_dataset,
    read_dataset,
    read_trial_file,
    write_dataset,
    write_trial_file,
)
from .experiment import RunConfig, run_experiment

__all__ = [
    "RunConfig",
    "SignalInstance",
    "SubjectDataset",
    "SynthConfig",
    "Trial",
    "generate_synthetic_dataset",
    "read_dataset",
    "read_trial_file",
    "run_experiment",
    "write_dataset",
    "write_trial_file",
]

__version__ = "0.1.0"
