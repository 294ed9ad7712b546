"""Per-window scalar features and the five feature-set layouts.

Feature sets:
  1: band energy (IE) of the 4 wavelet detail sets + approximation, per channel (70)
  2: TE, IE, HFD, KFD, GHE(q=1), GHE(q=2) of the two selected IMFs, per channel (168)
  3: GHE(q=1), GHE(q=2) of the cleaned window itself, per channel (28)
  4: concatenation 1 || 2 || 3 (266)
  5: PCA of z-scored set 4 keeping >= 90% of the variance (<= 266)
"""

import csv
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import CHANNEL_COUNT, SignalInstance
from .decompose import CoefficientSet, EmdParams, dwt_bior22, emd, select_imfs_minkowski
from .errors import (
    DecompositionFailure,
    DegenerateScaling,
    EmptyInput,
    InputTooShort,
    InvariantViolation,
    IwsError,
    LayoutMismatch,
    NumericalFailure,
)

log = logging.getLogger(__name__)

LOG_CLAMP = 1e-12  # floor for log10 arguments; keeps -inf out of classifiers

FEATURE_SET_WIDTHS = {1: 70, 2: 168, 3: 28, 4: 266}

_BAND_TAGS = ("w1", "w2", "w3", "w4", "a5")
_FS2_FEATURES = ("TE", "IE", "HFD", "KFD", "GHE_q1", "GHE_q2")


@dataclass(frozen=True)
class GheParams:
    """Lag range for the scaling-of-increments fit; one-sample resolution."""

    tau_min: int = 1
    tau_max: int = 19

    def __post_init__(self):
        if not (0 < self.tau_min < self.tau_max):
            raise InvariantViolation("need 0 < tau_min < tau_max")


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    feature_set_id: int
    layout: tuple  # one (channel, band, feature) descriptor per value
    label: Optional[int] = None
    source_offset: Optional[int] = None

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "layout", tuple(tuple(e) for e in self.layout))
        if arr.ndim != 1 or arr.size != len(self.layout):
            raise InvariantViolation(
                f"feature vector length {arr.size} does not match layout length {len(self.layout)}"
            )
        expected = FEATURE_SET_WIDTHS.get(self.feature_set_id)
        if expected is not None and arr.size != expected:
            raise InvariantViolation(
                f"feature set {self.feature_set_id} must have width {expected}, got {arr.size}"
            )
        if self.feature_set_id == 5 and arr.size > FEATURE_SET_WIDTHS[4]:
            raise InvariantViolation(f"feature set 5 width {arr.size} exceeds {FEATURE_SET_WIDTHS[4]}")


def _values_of(w):
    return np.asarray(getattr(w, "values", w), dtype=np.float64)


def instantaneous_energy(w) -> float:
    """log10 of the mean squared coefficient value."""
    x = _values_of(w)
    if x.size == 0:
        raise EmptyInput("instantaneous_energy of empty set")
    ms = float(np.mean(x ** 2))
    return float(np.log10(max(ms, LOG_CLAMP)))


def teager_energy(w) -> float:
    """log10 of the mean absolute energy-operator output x(r)^2 - x(r-1)x(r+1).

    The operator is defined on interior points only; the normalization stays
    1/m over the full set length.
    """
    x = _values_of(w)
    if x.size < 3:
        raise InputTooShort(f"teager_energy needs >= 3 samples, got {x.size}")
    terms = np.abs(x[1:-1] ** 2 - x[:-2] * x[2:])
    val = float(np.sum(terms)) / x.size
    return float(np.log10(max(val, LOG_CLAMP)))


def higuchi_fd(x, k_max: int = 10) -> float:
    """Curve-length scaling dimension: slope of ln L(k) against ln(1/k).

    L(k) averages, over the k subsampled series starting at offsets
    m = 0..k-1, the absolute increments normalized by (N-1)/(n_seg*k).
    Constants have zero curve length and return 0 by convention.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < k_max + 1:
        raise InputTooShort(f"higuchi_fd needs >= {k_max + 1} samples, got {n}")
    log_inv_k, log_l = [], []
    for k in range(1, k_max + 1):
        lengths = []
        for m in range(k):
            n_seg = (n - 1 - m) // k
            if n_seg < 1:
                continue
            idx = m + np.arange(n_seg + 1) * k
            total = np.sum(np.abs(np.diff(x[idx])))
            lengths.append(total * (n - 1) / (n_seg * k) / k)
        mean_len = float(np.mean(lengths))
        if mean_len <= 0.0:
            log.warning("higuchi_fd: zero curve length (constant signal); returning 0")
            return 0.0
        log_inv_k.append(np.log(1.0 / k))
        log_l.append(np.log(mean_len))
    slope = np.polyfit(log_inv_k, log_l, 1)[0]
    return float(slope)


def katz_fd(x) -> float:
    """Waveform dimension log(m) / (log(m) + log(d/L)).

    L is the path length with unit abscissa steps; d the farthest planar
    distance from the first point.  Straight lines give exactly 1.
    """
    x = np.asarray(x, dtype=np.float64)
    m = x.size
    if m < 2:
        raise InputTooShort(f"katz_fd needs >= 2 samples, got {m}")
    path = float(np.sum(np.sqrt(1.0 + np.diff(x) ** 2)))
    t = np.arange(m, dtype=np.float64)
    d = float(np.max(np.sqrt(t ** 2 + (x - x[0]) ** 2)))
    ratio = max(d / path, LOG_CLAMP)
    denom = np.log(m) + np.log(ratio)
    if denom == 0.0:
        return 1.0
    return float(np.log(m) / denom)


def ghe(x, q, params: GheParams = GheParams()) -> float:
    """Scaling exponent H(q) of the q-th moment of increments versus lag.

    K_q(tau) = mean|x(t+tau) - x(t)|^q / mean|x(t)|^q; H(q) is the
    least-squares slope of ln K_q against ln tau, divided by q.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2 * params.tau_max:
        raise InputTooShort(f"ghe needs >= {2 * params.tau_max} samples, got {x.size}")
    denom = float(np.mean(np.abs(x) ** q))
    log_tau, log_k = [], []
    for tau in range(params.tau_min, params.tau_max + 1):
        num = float(np.mean(np.abs(x[tau:] - x[:-tau]) ** q))
        if denom <= 0.0:
            continue
        k_val = num / denom
        if not np.isfinite(k_val) or k_val <= 0.0:
            continue
        log_tau.append(np.log(tau))
        log_k.append(np.log(k_val))
    if len(log_tau) < 3:
        raise DegenerateScaling(
            f"only {len(log_tau)} valid lag points (need >= 3) for q={q}"
        )
    slope = np.polyfit(log_tau, log_k, 1)[0]
    return float(slope) / q


# ---------------------------------------------------------------------------
# Feature-set assembly
# ---------------------------------------------------------------------------

def _fs1_channel(x, ch):
    sets = dwt_bior22(x, source_channel=ch)
    values = [instantaneous_energy(s) for s in sets]
    layout = [(ch, tag, "IE") for tag in _BAND_TAGS]
    return values, layout


def _fs2_channel(x, ch, emd_params, ghe_params):
    try:
        imfs, _residual = emd(x, emd_params, source_channel=ch)
        selected = select_imfs_minkowski(x, imfs)
    except DecompositionFailure:
        # no oscillatory component: fill both slots from the raw window
        log.warning("emd produced no IMF on channel %d; using the window itself", ch)
        pseudo = CoefficientSet(values=x, kind="imf", source_channel=ch)
        selected = [pseudo, pseudo]
    values, layout = [], []
    for slot, imf in enumerate(selected, start=1):
        v = imf.values
        values.extend([
            teager_energy(v),
            instantaneous_energy(v),
            higuchi_fd(v),
            katz_fd(v),
            ghe(v, 1, ghe_params),
            ghe(v, 2, ghe_params),
        ])
        layout.extend([(ch, f"imf{slot}", name) for name in _FS2_FEATURES])
    return values, layout


def _fs3_channel(x, ch, ghe_params):
    values = [ghe(x, 1, ghe_params), ghe(x, 2, ghe_params)]
    layout = [(ch, "signal", "GHE_q1"), (ch, "signal", "GHE_q2")]
    return values, layout


def extract_features(instance: SignalInstance, feature_set_id: int,
                     emd_params: EmdParams = EmdParams(),
                     ghe_params: GheParams = GheParams()) -> FeatureVector:
    """Compute feature set 1, 2 or 3 for one instance, channel-major order."""
    if feature_set_id not in (1, 2, 3):
        raise InvariantViolation(f"extract_features handles sets 1-3, got {feature_set_id}")
    values, layout = [], []
    for ch in range(CHANNEL_COUNT):
        x = instance.samples[:, ch]
        try:
            if feature_set_id == 1:
                v, l = _fs1_channel(x, ch)
            elif feature_set_id == 2:
                v, l = _fs2_channel(x, ch, emd_params, ghe_params)
            else:
                v, l = _fs3_channel(x, ch, ghe_params)
        except IwsError as exc:
            raise type(exc)(
                f"channel {ch}, instance offset {instance.trial_offset}: {exc}"
            ) from exc
        values.extend(v)
        layout.extend(l)
    return FeatureVector(
        values=np.asarray(values),
        feature_set_id=feature_set_id,
        layout=layout,
        label=instance.label,
        source_offset=instance.trial_offset,
    )


def assemble_fs4(v1: FeatureVector, v2: FeatureVector, v3: FeatureVector) -> FeatureVector:
    """Concatenate sets 1, 2, 3 (in that order) for one instance."""
    for v, want in ((v1, 1), (v2, 2), (v3, 3)):
        if v.feature_set_id != want:
            raise LayoutMismatch(f"expected feature set {want}, got {v.feature_set_id}")
    if not (v1.label == v2.label == v3.label):
        raise LayoutMismatch("labels disagree across the three vectors")
    offsets = {v.source_offset for v in (v1, v2, v3) if v.source_offset is not None}
    if len(offsets) > 1:
        raise LayoutMismatch(f"vectors come from different instances: offsets {sorted(offsets)}")
    return FeatureVector(
        values=np.concatenate([v1.values, v2.values, v3.values]),
        feature_set_id=4,
        layout=v1.layout + v2.layout + v3.layout,
        label=v1.label,
        source_offset=v1.source_offset,
    )


# ---------------------------------------------------------------------------
# Standard-score normalization and PCA, fitted on training vectors only
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalerModel:
    mean: np.ndarray
    std: np.ndarray  # population std; zero-variance dims stored as 1.0


def scaler_fit(train) -> ScalerModel:
    if not train:
        raise EmptyInput("scaler_fit on empty training set")
    matrix = np.stack([v.values for v in train])
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)  # population (divide by n)
    std = np.where(std > 0.0, std, 1.0)
    return ScalerModel(mean=mean, std=std)


def scaler_apply(model: ScalerModel, v: FeatureVector) -> FeatureVector:
    if v.values.size != model.mean.size:
        raise LayoutMismatch(
            f"vector width {v.values.size} does not match scaler width {model.mean.size}"
        )
    return FeatureVector(
        values=(v.values - model.mean) / model.std,
        feature_set_id=v.feature_set_id,
        layout=v.layout,
        label=v.label,
        source_offset=v.source_offset,
    )


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # n_components x input_dim, orthonormal rows
    retained_variance_ratio: float
    eigenvalues: np.ndarray  # full spectrum, descending


def pca_fit(train_matrix, target_ratio: float = 0.90) -> PcaModel:
    """Eigendecompose the covariance of the (centered) training matrix and keep
    the minimal leading component count reaching ``target_ratio`` of variance."""
    matrix = np.asarray(train_matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise EmptyInput("pca_fit needs a matrix with >= 2 rows")
    mean = matrix.mean(axis=0)
    centered = matrix - mean
    cov = centered.T @ centered / matrix.shape[0]
    try:
        eigvals, eigvecs = np.linalg.eigh(cov)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalFailure(f"covariance eigensolve failed: {exc}") from exc
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]
    total = float(eigvals.sum())
    if total <= 0.0:
        log.warning("pca_fit: zero total variance in training data; keeping 1 component")
        n_keep, ratio = 1, 1.0
    else:
        cum = np.cumsum(eigvals) / total
        n_keep = int(np.searchsorted(cum, target_ratio) + 1)
        ratio = float(cum[n_keep - 1])
    components = eigvecs[:, :n_keep].T
    # deterministic sign: largest-magnitude entry of each component positive
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return PcaModel(
        mean=mean,
        components=components,
        retained_variance_ratio=ratio,
        eigenvalues=eigvals,
    )


def pca_apply(model: PcaModel, v: FeatureVector) -> FeatureVector:
    if v.values.size != model.mean.size:
        raise LayoutMismatch(
            f"vector width {v.values.size} does not match PCA input width {model.mean.size}"
        )
    projected = model.components @ (v.values - model.mean)
    layout = [("pca", f"pc{i:03d}", "proj") for i in range(projected.size)]
    return FeatureVector(
        values=projected,
        feature_set_id=5,
        layout=layout,
        label=v.label,
        source_offset=v.source_offset,
    )


def export_features_csv(vectors, path) -> None:
    """Dump feature vectors as CSV with layout descriptors as the header."""
    if not vectors:
        raise EmptyInput("no feature vectors to export")
    layout = vectors[0].layout
    header = ["label"] + [":".join(str(p) for p in entry) for entry in layout]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for v in vectors:
            if v.layout != layout:
                raise LayoutMismatch("vectors with differing layouts in one export")
            writer.writerow([("" if v.label is None else v.label)]
                            + [repr(float(x)) for x in v.values])
