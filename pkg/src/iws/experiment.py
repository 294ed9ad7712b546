"""End-to-end experiment driver: segment, featurize, train, predict, smooth,
score, per subject and fold, with all randomness derived from one root seed."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import evaluate, features, learn, postprocess, preprocess
from .errors import ConfigError, SegmentTooShort
from .learn import CLASSIFIER_KINDS, ClassifierSpec

log = logging.getLogger(__name__)

_BASE_SETS = (1, 2, 3)


@dataclass(frozen=True)
class RunConfig:
    dataset_path: str
    feature_set_ids: tuple = (1,)
    classifiers: tuple = ("random_forest",)
    folds: int = 4
    train_ratio: float = 0.75
    window_samples: int = 64
    step_samples: int = 13
    pca_target_ratio: float = 0.90
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "feature_set_ids", tuple(int(i) for i in self.feature_set_ids))
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        self.validate()

    def validate(self):
        bad = [i for i in self.feature_set_ids if i not in (1, 2, 3, 4, 5)]
        if bad or not self.feature_set_ids:
            raise ConfigError(f"feature_set_ids must be a non-empty subset of 1..5, got {bad or '[]'}")
        bad = [c for c in self.classifiers if c not in CLASSIFIER_KINDS]
        if bad or not self.classifiers:
            raise ConfigError(f"classifiers must be a non-empty subset of {CLASSIFIER_KINDS}")
        if self.folds < 1:
            raise ConfigError("folds must be >= 1")
        if not (0.0 < self.train_ratio < 1.0):
            raise ConfigError("train_ratio must be in (0, 1)")
        if not (0.0 < self.pca_target_ratio <= 1.0):
            raise ConfigError("pca_target_ratio must be in (0, 1]")

    def needed_base_sets(self):
        need = set()
        for fs in self.feature_set_ids:
            need.update(_BASE_SETS if fs >= 4 else (fs,))
        return tuple(sorted(need))


def _stable_seed(*parts):
    """Deterministic 63-bit seed from a tuple of integers."""
    seq = np.random.SeedSequence(entropy=tuple(int(p) for p in parts))
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> 1)


def _base_vectors(instance, base_sets):
    return {fs: features.extract_features(instance, fs) for fs in base_sets}


def _vector_for_set(base, fs_id):
    if fs_id in _BASE_SETS:
        return base[fs_id]
    return features.assemble_fs4(base[1], base[2], base[3])


def _featurize_trial(trial, mode, base_sets, params):
    if mode == "train":
        instances = preprocess.segment_training_trial(trial, params)
    else:
        instances = preprocess.segment_test_trial(trial, params)
    return [_base_vectors(inst, base_sets) for inst in instances]


def run_subject(dataset, config: RunConfig, subject_index: int):
    """All folds, feature sets and classifiers for one subject.

    Returns {(feature_set_id, classifier): subject_result_block}.
    """
    t0 = time.perf_counter()
    params = preprocess.WindowingParams(config.window_samples, config.step_samples)
    trials = [preprocess.car_filter_trial(t) for t in dataset.trials]
    log.info("subject %s: CAR filter done (%.2fs)", dataset.subject_id, time.perf_counter() - t0)

    base_sets = config.needed_base_sets()
    train_cache, test_cache, usable = {}, {}, []
    for idx, trial in enumerate(trials):
        try:
            train_cache[idx] = _featurize_trial(trial, "train", base_sets, params)
        except SegmentTooShort as exc:
            log.warning("subject %s trial %d rejected: %s", dataset.subject_id, idx, exc)
            continue
        test_cache[idx] = _featurize_trial(trial, "test", base_sets, params)
        usable.append(idx)
    log.info("subject %s: feature extraction done (%.2fs, %d/%d trials usable)",
             dataset.subject_id, time.perf_counter() - t0, len(usable), len(trials))

    plan = learn.make_fold_plan(len(usable), _stable_seed(config.seed, subject_index),
                                n_folds=config.folds, train_ratio=config.train_ratio)
    out = {
        (fs, clf): {"subject_id": dataset.subject_id, "fold_scores": [],
                    **({"pca_dims": []} if fs == 5 else {})}
        for fs in config.feature_set_ids for clf in config.classifiers
    }

    for fold_idx, (train_pos, test_pos) in enumerate(plan.folds):
        train_ids = [usable[i] for i in train_pos]
        test_ids = [usable[i] for i in test_pos]
        for fs in config.feature_set_ids:
            train_vecs = [_vector_for_set(base, fs)
                          for t in train_ids for base in train_cache[t]]
            test_per_trial = {
                t: [_vector_for_set(base, fs) for base in test_cache[t]]
                for t in test_ids
            }
            scaler = features.scaler_fit(train_vecs)
            train_scaled = [features.scaler_apply(scaler, v) for v in train_vecs]
            test_scaled = {t: [features.scaler_apply(scaler, v) for v in vs]
                           for t, vs in test_per_trial.items()}
            pca = None
            if fs == 5:
                pca = features.pca_fit(np.stack([v.values for v in train_scaled]),
                                       config.pca_target_ratio)
                train_scaled = [features.pca_apply(pca, v) for v in train_scaled]
                test_scaled = {t: [features.pca_apply(pca, v) for v in vs]
                               for t, vs in test_scaled.items()}
            X_train = np.stack([v.values for v in train_scaled])
            y_train = np.array([v.label for v in train_scaled], dtype=np.int64)
            for clf_idx, clf in enumerate(config.classifiers):
                spec = ClassifierSpec(
                    kind=clf,
                    seed=_stable_seed(config.seed, subject_index, fold_idx, clf_idx, fs),
                )
                model = learn.train(spec, X_train, y_train)
                fold_scores = []
                for t in test_ids:
                    X_test = np.stack([v.values for v in test_scaled[t]])
                    raw = learn.predict(model, X_test)
                    pred = postprocess.postprocess_trial(
                        raw, trials[t], window=config.window_samples,
                        step=config.step_samples)
                    fold_scores.append(evaluate.score_trial(
                        pred.corrected_labels, pred.truth_labels, trial_id=t))
                out[(fs, clf)]["fold_scores"].append(fold_scores)
            if fs == 5:
                for clf in config.classifiers:
                    out[(fs, clf)]["pca_dims"].append(int(pca.components.shape[0]))
        log.info("subject %s: fold %d scored (%.2fs)",
                 dataset.subject_id, fold_idx, time.perf_counter() - t0)
    log.info("subject %s: done in %.2fs", dataset.subject_id, time.perf_counter() - t0)
    return out


def _run_subject_payload(payload):
    dataset, config, subject_index = payload
    return run_subject(dataset, config, subject_index)


def run_experiment(datasets, config: RunConfig, jobs: int = 1) -> dict:
    """Run every subject and assemble the report document.

    Per-(subject, fold, classifier) seeds derive deterministically from the
    root seed, so serial and parallel schedules produce identical reports.
    """
    payloads = [(ds, config, i) for i, ds in enumerate(datasets)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            subject_outputs = list(pool.map(_run_subject_payload, payloads))
    else:
        subject_outputs = [_run_subject_payload(p) for p in payloads]

    merged = {}
    for out in subject_outputs:
        for key, block in out.items():
            merged.setdefault(key, []).append(block)
    config_echo = asdict(config)
    config_echo["feature_set_ids"] = list(config.feature_set_ids)
    config_echo["classifiers"] = list(config.classifiers)
    return evaluate.build_report(merged, config_echo, config.seed)
