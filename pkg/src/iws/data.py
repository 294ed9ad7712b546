"""Trial data model, on-disk trial format, and the synthetic dataset generator."""

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, InvariantViolation, MalformedFile

log = logging.getLogger(__name__)

SAMPLING_RATE = 128
CHANNEL_COUNT = 14
WINDOW_SAMPLES = 64  # 0.5 s at 128 Hz

PROTOCOL_TAGS = ("dataset1", "dataset2", "dataset3", "synthetic")

_SCHEMA_VERSION = 1


def _channel_names():
    return [f"ch{i:02d}" for i in range(CHANNEL_COUNT)]


@dataclass(frozen=True)
class Trial:
    """One recording: ISS, then IWS, then ISS, with known ground-truth markers.

    ``onset_sample`` is the first IWS sample; ``ending_sample`` is the first
    post-IWS ISS sample (exclusive end), so the IWS length is ``ending - onset``.
    """

    subject_id: str
    samples: np.ndarray  # n_samples x CHANNEL_COUNT, microvolts
    onset_sample: int
    ending_sample: int
    sampling_rate: int = SAMPLING_RATE
    channel_count: int = CHANNEL_COUNT

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", arr)
        self.validate()
        arr.setflags(write=False)  # shared across threads; must not mutate

    @property
    def n_samples(self):
        return self.samples.shape[0]

    def validate(self):
        if self.samples.ndim != 2 or self.samples.shape[1] != self.channel_count:
            raise InvariantViolation(
                f"trial {self.subject_id}: samples must be n x {self.channel_count}, "
                f"got shape {self.samples.shape}"
            )
        if not np.all(np.isfinite(self.samples)):
            raise InvariantViolation(f"trial {self.subject_id}: non-finite sample values")
        n = self.samples.shape[0]
        if n < 3 * WINDOW_SAMPLES:
            raise InvariantViolation(
                f"trial {self.subject_id}: {n} samples < {3 * WINDOW_SAMPLES} minimum"
            )
        if not (0 < self.onset_sample < self.ending_sample < n):
            raise InvariantViolation(
                f"trial {self.subject_id}: markers must satisfy "
                f"0 < onset ({self.onset_sample}) < ending ({self.ending_sample}) < n ({n})"
            )

    def with_samples(self, samples):
        """Copy of this trial with new sample data (markers unchanged)."""
        return Trial(
            subject_id=self.subject_id,
            samples=samples,
            onset_sample=self.onset_sample,
            ending_sample=self.ending_sample,
            sampling_rate=self.sampling_rate,
            channel_count=self.channel_count,
        )

    def equals(self, other):
        return (
            self.subject_id == other.subject_id
            and self.sampling_rate == other.sampling_rate
            and self.channel_count == other.channel_count
            and self.onset_sample == other.onset_sample
            and self.ending_sample == other.ending_sample
            and self.samples.shape == other.samples.shape
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True)
class SubjectDataset:
    """All trials of one subject, sharing sampling rate and channel layout."""

    subject_id: str
    trials: tuple
    protocol_tag: str = "synthetic"

    def __post_init__(self):
        object.__setattr__(self, "trials", tuple(self.trials))
        self.validate()

    def validate(self):
        if self.protocol_tag not in PROTOCOL_TAGS:
            raise InvariantViolation(
                f"subject {self.subject_id}: unknown protocol_tag {self.protocol_tag!r}"
            )
        if len(self.trials) < 8:
            raise InvariantViolation(
                f"subject {self.subject_id}: {len(self.trials)} trials < 8 "
                "(75/25 split needs at least 2 test trials)"
            )
        rates = {t.sampling_rate for t in self.trials}
        chans = {t.channel_count for t in self.trials}
        if len(rates) > 1 or len(chans) > 1:
            raise InvariantViolation(
                f"subject {self.subject_id}: trials disagree on sampling rate/channels"
            )


@dataclass(frozen=True)
class SignalInstance:
    """One 0.5 s analysis window (64 samples x 14 channels) cut from a trial.

    ``label`` is 0 (ISS) / 1 (IWS) for training instances, None for test
    instances extracted continuously.
    """

    samples: np.ndarray
    trial_offset: int
    label: Optional[int] = None

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.shape != (WINDOW_SAMPLES, CHANNEL_COUNT):
            raise InvariantViolation(
                f"signal instance must be {WINDOW_SAMPLES} x {CHANNEL_COUNT}, got {arr.shape}"
            )
        if self.label not in (None, 0, 1):
            raise InvariantViolation(f"label must be 0, 1 or None, got {self.label!r}")
        object.__setattr__(self, "samples", arr)
        arr.setflags(write=False)


@dataclass(frozen=True)
class SynthConfig:
    """Geometry and signal parameters for the synthetic trial generator.

    Inside [onset, ending) a band-limited oscillation is added on all channels
    at ``snr`` times the background standard deviation; snr=0 yields trials
    whose IWS is statistically indistinguishable from the ISS.
    """

    n_subjects: int
    trials_per_subject: int
    trial_length_samples: int
    iws_length_range: tuple
    carrier_band_hz: tuple = (8.0, 12.0)
    snr: float = 5.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "iws_length_range", tuple(int(v) for v in self.iws_length_range))
        object.__setattr__(self, "carrier_band_hz", tuple(float(v) for v in self.carrier_band_hz))
        self.validate()

    def validate(self):
        if self.n_subjects < 1:
            raise ConfigError("n_subjects must be >= 1")
        if self.trials_per_subject < 8:
            raise ConfigError("trials_per_subject must be >= 8 (SubjectDataset minimum)")
        lo, hi = self.iws_length_range
        if not (0 < lo <= hi):
            raise ConfigError("iws_length_range must satisfy 0 < min <= max")
        if lo < WINDOW_SAMPLES:
            raise ConfigError(
                f"iws_length_range minimum {lo} < window size {WINDOW_SAMPLES}; "
                "the IWS could not host one full window"
            )
        if self.trial_length_samples < hi + 2 * WINDOW_SAMPLES:
            raise ConfigError(
                "trial_length_samples too small: iws_length_range must fit with "
                f">= {WINDOW_SAMPLES} ISS samples on each side"
            )
        f_lo, f_hi = self.carrier_band_hz
        if not (0 < f_lo <= f_hi < SAMPLING_RATE / 2):
            raise ConfigError("carrier_band_hz must lie inside (0, Nyquist)")
        # snr = 0 is allowed: it produces featureless control datasets.
        if self.snr < 0:
            raise ConfigError("snr must be >= 0")


# ---------------------------------------------------------------------------
# Trial file I/O.  Format: one JSON object per trial; numbers use full double
# precision (repr round-trip), so read(write(t)) is bit-for-bit equal.
# ---------------------------------------------------------------------------

def write_trial_file(trial: Trial, path) -> None:
    trial.validate()
    doc = {
        "subject_id": trial.subject_id,
        "sampling_rate": trial.sampling_rate,
        "channels": _channel_names(),
        "onset_sample": int(trial.onset_sample),
        "ending_sample": int(trial.ending_sample),
        "samples": trial.samples.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def _require(doc, key, kind, where):
    if key not in doc:
        raise MalformedFile(f"{where}: missing field '{key}'")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise MalformedFile(f"{where}: field '{key}' has wrong type {type(value).__name__}")
    return value


def read_trial_file(path) -> Trial:
    where = str(path)
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedFile(f"{where}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise MalformedFile(f"{where}: top-level value must be an object")
    subject_id = _require(doc, "subject_id", str, where)
    rate = _require(doc, "sampling_rate", int, where)
    channels = _require(doc, "channels", list, where)
    if len(channels) != CHANNEL_COUNT:
        raise MalformedFile(f"{where}: field 'channels' must list {CHANNEL_COUNT} names")
    onset = _require(doc, "onset_sample", int, where)
    ending = _require(doc, "ending_sample", int, where)
    rows = _require(doc, "samples", list, where)
    if not rows:
        raise MalformedFile(f"{where}: field 'samples' is empty")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != CHANNEL_COUNT:
            raise MalformedFile(f"{where}: field 'samples[{i}]' must be a {CHANNEL_COUNT}-number row")
    samples = np.asarray(rows, dtype=np.float64)
    return Trial(
        subject_id=subject_id,
        samples=samples,
        onset_sample=onset,
        ending_sample=ending,
        sampling_rate=rate,
    )


def trial_filename(subject_id, trial_index):
    return f"{subject_id}_{trial_index:03d}.json"


def write_dataset(datasets, out_dir) -> None:
    """Write each trial as <subject>_<index>.json plus a manifest.json index."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"schema_version": _SCHEMA_VERSION, "subjects": []}
    for ds in datasets:
        files = []
        for i, trial in enumerate(ds.trials):
            name = trial_filename(ds.subject_id, i)
            write_trial_file(trial, out_dir / name)
            files.append(name)
        manifest["subjects"].append(
            {"subject_id": ds.subject_id, "protocol_tag": ds.protocol_tag, "files": files}
        )
    tmp = out_dir / "manifest.json.tmp"
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2)
    os.replace(tmp, out_dir / "manifest.json")


def read_dataset(in_dir):
    """Load a dataset directory back into a list of SubjectDataset."""
    in_dir = Path(in_dir)
    manifest_path = in_dir / "manifest.json"
    with open(manifest_path) as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedFile(f"{manifest_path}: not valid JSON ({exc})") from exc
    subjects = _require(manifest, "subjects", list, str(manifest_path))
    datasets = []
    for entry in subjects:
        sid = _require(entry, "subject_id", str, str(manifest_path))
        tag = entry.get("protocol_tag", "synthetic")
        files = _require(entry, "files", list, str(manifest_path))
        trials = [read_trial_file(in_dir / name) for name in files]
        datasets.append(SubjectDataset(subject_id=sid, trials=trials, protocol_tag=tag))
    return datasets


# ---------------------------------------------------------------------------
# Synthetic generator: background noise with a band-limited oscillation added
# inside the IWS.  Fully deterministic for a given SynthConfig.
# ---------------------------------------------------------------------------

def _background(rng, n_samples):
    """White noise plus first-order low-passed noise, roughly unit variance."""
    white = rng.standard_normal((n_samples, CHANNEL_COUNT))
    driven = rng.standard_normal((n_samples, CHANNEL_COUNT))
    lowpassed = lfilter([1.0], [1.0, -0.9], driven, axis=0)
    lowpassed = lowpassed / np.sqrt(1.0 / (1.0 - 0.9 ** 2))
    return 0.7 * white + 0.7 * lowpassed


def _generate_trial(rng, config, subject_id):
    n = config.trial_length_samples
    lo, hi = config.iws_length_range
    iws_len = int(rng.integers(lo, hi + 1))
    onset = int(rng.integers(WINDOW_SAMPLES, n - WINDOW_SAMPLES - iws_len + 1))
    ending = onset + iws_len

    samples = _background(rng, n)
    f_lo, f_hi = config.carrier_band_hz
    freq = rng.uniform(f_lo, f_hi)
    phases = rng.uniform(0.0, 2.0 * np.pi, CHANNEL_COUNT)
    if config.snr > 0:
        amp = config.snr * samples.std(axis=0)
        t = np.arange(onset, ending) / SAMPLING_RATE
        carrier = np.sin(2.0 * np.pi * freq * t[:, None] + phases[None, :])
        samples[onset:ending, :] += amp[None, :] * carrier

    return Trial(
        subject_id=subject_id,
        samples=samples,
        onset_sample=onset,
        ending_sample=ending,
    )


def generate_synthetic_dataset(config: SynthConfig):
    """Deterministically generate ``n_subjects`` SubjectDatasets from a seed."""
    config.validate()
    root = np.random.SeedSequence(config.seed)
    subject_seqs = root.spawn(config.n_subjects)
    datasets = []
    for s, seq in enumerate(subject_seqs):
        subject_id = f"s{s + 1:02d}"
        trial_seqs = seq.spawn(config.trials_per_subject)
        trials = [
            _generate_trial(np.random.default_rng(ts), config, subject_id)
            for ts in trial_seqs
        ]
        datasets.append(
            SubjectDataset(subject_id=subject_id, trials=trials, protocol_tag="synthetic")
        )
    log.info("generated %d subjects x %d trials (seed=%d)",
             config.n_subjects, config.trials_per_subject, config.seed)
    return datasets
