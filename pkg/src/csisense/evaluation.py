"""ROC/AUC computation, error measurement, timing, and experiment drivers.

The drivers consume a flat config object (see :mod:`csisense.cli` for the
concrete dataclass; anything with the same attributes works) and emit
`SweepRecord` rows matching the CSV schema
``n,p,snr_db,detector,error_rate,auc,train_s,infer_s,seed``.

Seeding policy: the per-record seed column follows
``config.seed XOR mix(n, p, snr, detector)`` so grid points are
order-independent, while the dataset draws for one (n, snr) cell derive
from ``mix(config.seed, "train"/"test", n, snr)`` alone. Every detector at
that cell therefore trains and scores on identical data, which keeps the
comparison fair; record-specific randomness (parameter perturbations) uses
the per-record seed.

Naive-mode detectors return non-finite scores at large dimension on
purpose. `roc_auc` refuses non-finite input, so the drivers replace
non-finite scores from a naive detector with a constant 0.0 (yielding the
chance-level ROC) and let `decide` map them to the null hypothesis.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass

import numpy as np

from ._validation import check_labels
from .channel import (
    ComplexGaussianVector,
    HypothesisPair,
    LinkFading,
    cascaded_distribution,
    dft_of_distribution,
    hypothesis_models,
    rician_time_distribution,
)
from .dataset import (
    CsiDataset,
    NoiseConfig,
    build_dataset,
    estimate_gaussian_params,
    perturb_params,
    noisy_pair,
    reference_power,
)
from .detectors import (
    NAIVE,
    STABLE,
    decide_all,
    featurize,
    fit_feature_scaler,
    lrt_build,
    lrt_score,
    pca_lrt_build,
    svm_score,
    svm_train,
)
from .subspace import (
    bhattacharyya_distance,
    error_bound,
    pca_fit,
    pca_project,
    truncate_basis,
)

FULL_LRT = "full-lrt"
FULL_LRT_NAIVE = "full-lrt-naive"
PCA_LRT = "pca-lrt"
PCA_SVM_LINEAR = "pca-svm-linear"
PCA_SVM_RBF = "pca-svm-rbf"
BOUND = "bound"
DETECTOR_IDS = (FULL_LRT, FULL_LRT_NAIVE, PCA_LRT, PCA_SVM_LINEAR, PCA_SVM_RBF)

RECORDS_HEADER = "n,p,snr_db,detector,error_rate,auc,train_s,infer_s,seed"
ROC_HEADER = "detector,snr_db,fpr,tpr,threshold"


def stable_mix(*parts) -> int:
    """Deterministic 64-bit mix of hashable parts.

    Built on sha256 of the repr tuple; the builtin hash() is salted per
    process and would break cross-run reproducibility.
    """
    digest = hashlib.sha256(repr(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def record_seed(config_seed: int, n: int, p: int, snr_db: float, detector: str) -> int:
    return int(config_seed) ^ stable_mix(int(n), int(p), float(snr_db), detector)


# --------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class RocResult:
    """Empirical ROC curve with its trapezoidal area.

    ``points[k]`` is (false-positive rate, true-positive rate) at
    ``thresholds[k]``, rates taken with score >= threshold; the listed
    threshold is the infimum of the strict-excess thresholds achieving the
    same point. Endpoints (0,0) and (1,1) are always present.
    """

    points: np.ndarray
    thresholds: np.ndarray
    auc: float

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        thr = np.asarray(self.thresholds, dtype=np.float64)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "thresholds", thr)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] != thr.shape[0]:
            raise ValueError("points must be K x 2 with matching thresholds")
        if np.any(np.diff(pts[:, 0]) < 0):
            raise ValueError("points must be sorted by false-positive rate")
        if not (pts[0] == [0.0, 0.0]).all() or not (pts[-1] == [1.0, 1.0]).all():
            raise ValueError("curve must span (0,0) to (1,1)")
        area = float(np.sum(np.diff(pts[:, 0]) * (pts[1:, 1] + pts[:-1, 1]) / 2.0))
        if not np.isclose(self.auc, area, rtol=0, atol=1e-12):
            raise ValueError("auc does not match the trapezoidal integral")
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"auc out of range: {self.auc}")


def roc_auc(scores, labels) -> RocResult:
    """Threshold sweep over the distinct score values.

    Tied scores collapse into one curve point, which makes the trapezoidal
    area equal the tie-corrected rank statistic. Requires finite scores
    and both classes present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = check_labels(labels)
    if scores.ndim != 1 or scores.shape[0] != labels.shape[0]:
        raise ValueError("scores and labels must be equal-length 1-D")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite; sanitize non-finite values first")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present")
    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    l_sorted = labels[order]
    cum_tp = np.cumsum(l_sorted)
    cum_fp = np.cumsum(1 - l_sorted)
    # last index of each tie group
    ends = np.r_[np.nonzero(np.diff(s_sorted))[0], s_sorted.shape[0] - 1]
    fpr = np.r_[0.0, cum_fp[ends] / n_neg]
    tpr = np.r_[0.0, cum_tp[ends] / n_pos]
    thresholds = np.r_[np.inf, s_sorted[ends]]
    points = np.column_stack([fpr, tpr])
    area = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocResult(points=points, thresholds=thresholds, auc=area)


def error_rate(decisions, labels) -> float:
    """Fraction of mismatched decisions; balanced error on balanced labels."""
    dec = np.asarray(
        [d.label if hasattr(d, "label") else d for d in np.atleast_1d(decisions)],
        dtype=np.int64,
    )
    labels = check_labels(labels)
    if dec.shape[0] != labels.shape[0]:
        raise ValueError(
            f"{dec.shape[0]} decisions vs {labels.shape[0]} labels"
        )
    return float(np.mean(dec != labels))


@dataclass(frozen=True)
class TimingStats:
    median_s: float
    p10_s: float
    p90_s: float
    repetitions: int

    def __post_init__(self) -> None:
        if self.repetitions < 3:
            raise ValueError("timing needs at least 3 repetitions")
        if not self.p10_s <= self.median_s <= self.p90_s:
            raise ValueError("timing quantiles out of order")


def bench_inference(infer_fn, data, repetitions: int = 5) -> TimingStats:
    """Median wall-clock time of a full scoring pass over ``data``.

    One untimed warm-up pass runs first and fixes the reference output;
    every timed pass must reproduce it exactly (scoring is pure), with NaN
    treated as equal to NaN so deliberately broken naive detectors can be
    benchmarked too.
    """
    if repetitions < 3:
        raise ValueError(f"repetitions must be >= 3, got {repetitions}")
    reference = np.asarray(infer_fn(data))
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        out = np.asarray(infer_fn(data))
        times.append(time.perf_counter() - t0)
        if not np.array_equal(out, reference, equal_nan=True):
            raise RuntimeError("scoring outputs changed between timed passes")
    arr = np.asarray(times)
    return TimingStats(
        median_s=float(np.median(arr)),
        p10_s=float(np.percentile(arr, 10)),
        p90_s=float(np.percentile(arr, 90)),
        repetitions=repetitions,
    )


# --------------------------------------------------------------------------
# experiment plumbing


@dataclass(frozen=True)
class SweepRecord:
    """One grid point of an experiment, one CSV row."""

    n_dim: int
    p_dim: int
    snr_db: float
    detector: str
    error_rate: float
    auc: float
    train_time_s: float
    infer_time_s: float
    seed: int

    def __post_init__(self) -> None:
        if not (np.isnan(self.error_rate) or 0.0 <= self.error_rate <= 1.0):
            raise ValueError(f"error_rate out of range: {self.error_rate}")
        if self.train_time_s < 0 or self.infer_time_s < 0:
            raise ValueError("times must be >= 0")


def build_hypothesis_pair(config) -> HypothesisPair:
    """Assemble the frequency-domain hypothesis pair from config fields."""
    n = int(config.n_dim)

    def link(k_factor: float, doppler: float) -> ComplexGaussianVector:
        fading = LinkFading(
            k_factor=k_factor,
            doppler=doppler,
            los_delay=config.tau0,
            phase_offset=config.theta_offset,
            sample_period=config.sample_period,
        )
        return dft_of_distribution(
            rician_time_distribution(fading, config.carrier_freq, n)
        )

    tr = link(config.k_tr, config.doppler_tr)
    if getattr(config, "scatterer_present", True):
        cascaded = cascaded_distribution(
            link(config.k_ts, config.doppler_ts),
            link(config.k_sr, config.doppler_sr),
        )
    else:
        cascaded = ComplexGaussianVector(np.zeros(n, dtype=complex), 0.0)
    return hypothesis_models(tr, cascaded)


def _noise_for(pair: HypothesisPair, snr_db: float) -> NoiseConfig:
    return NoiseConfig(snr_db=float(snr_db), ref_power=reference_power(pair))


def _datasets_for(config, pair: HypothesisPair, snr_db: float):
    noise = _noise_for(pair, snr_db)
    n = pair.dim
    train = build_dataset(
        pair, config.per_class, noise,
        stable_mix(config.seed, "train", n, float(snr_db)),
    )
    test = build_dataset(
        pair, config.per_class, noise,
        stable_mix(config.seed, "test", n, float(snr_db)),
    )
    return train, test, noise


class _Scorer:
    """A trained detector reduced to a pure scoring closure."""

    def __init__(self, score_fn, mode: str, train_time_s: float):
        self.score_fn = score_fn
        self.mode = mode
        self.train_time_s = train_time_s

    def scores(self, data: np.ndarray) -> np.ndarray:
        return np.asarray(self.score_fn(data), dtype=np.float64)


def _train_scorers(
    detector_ids, model_pair: HypothesisPair, train: CsiDataset, p: int, config
) -> dict[str, _Scorer]:
    """Build every requested detector against one (data, model) cell.

    The PCA basis is fitted once and shared by all projected detectors;
    its fitting time is charged to each of them, since each would need
    that work when trained standalone.
    """
    scorers: dict[str, _Scorer] = {}
    basis = None
    basis_time = 0.0
    needs_basis = any(d.startswith("pca-") for d in detector_ids)
    if needs_basis:
        t0 = time.perf_counter()
        basis = pca_fit(train, p)
        basis_time = time.perf_counter() - t0

    for det_id in detector_ids:
        if det_id == FULL_LRT or det_id == FULL_LRT_NAIVE:
            mode = STABLE if det_id == FULL_LRT else NAIVE
            t0 = time.perf_counter()
            det = lrt_build(model_pair, mode=mode)
            dt = time.perf_counter() - t0
            scorers[det_id] = _Scorer(
                lambda x, _d=det: lrt_score(_d, x), mode, dt
            )
        elif det_id == PCA_LRT:
            t0 = time.perf_counter()
            det = pca_lrt_build(model_pair, basis)
            dt = time.perf_counter() - t0
            scorers[det_id] = _Scorer(
                lambda x, _d=det, _b=basis: lrt_score(_d, pca_project(_b, x)),
                STABLE,
                basis_time + dt,
            )
        elif det_id in (PCA_SVM_LINEAR, PCA_SVM_RBF):
            kernel = "linear" if det_id == PCA_SVM_LINEAR else "rbf"
            t0 = time.perf_counter()
            raw = featurize(pca_project(basis, train.data))
            scaler = fit_feature_scaler(raw)
            model = svm_train(
                (raw - scaler.mean) / scaler.scale,
                train.labels,
                kernel=kernel,
                c=config.svm_c,
                gamma=config.svm_gamma,
                tol=config.svm_tol,
                scaler=scaler,
            )
            dt = time.perf_counter() - t0
            scorers[det_id] = _Scorer(
                lambda x, _m=model, _b=basis: svm_score(
                    _m, featurize(pca_project(_b, x), _m.feature_scaler)
                ),
                STABLE,
                basis_time + dt,
            )
        else:
            raise ValueError(f"unknown detector id {det_id!r}")
    return scorers


def _evaluate(scorer: _Scorer, test: CsiDataset):
    """Score a test set, returning (error, auc, infer_seconds)."""
    t0 = time.perf_counter()
    scores = scorer.scores(test.data)
    infer_s = time.perf_counter() - t0
    preds = decide_all(scores, 0.0, scorer.mode)
    err = error_rate(preds, test.labels)
    roc_scores = scores
    if scorer.mode == NAIVE and not np.all(np.isfinite(scores)):
        roc_scores = np.where(np.isfinite(scores), scores, 0.0)
    roc = roc_auc(roc_scores, test.labels)
    return err, roc, infer_s


# --------------------------------------------------------------------------
# experiment drivers


def run_roc_vs_snr(config):
    """Full ROC and AUC per detector per SNR at fixed subspace dimension.

    Uses the first entry of ``p_grid`` as the projection dimension.
    Returns (records, rocs) with rocs keyed by (detector, snr_db).
    """
    p = int(config.p_grid[0])
    pair = build_hypothesis_pair(config)
    records: list[SweepRecord] = []
    rocs: dict[tuple[str, float], RocResult] = {}
    for snr_db in config.snr_grid:
        train, test, noise = _datasets_for(config, pair, snr_db)
        model_pair = noisy_pair(pair, noise)
        scorers = _train_scorers(config.detectors, model_pair, train, p, config)
        for det_id in config.detectors:
            err, roc, infer_s = _evaluate(scorers[det_id], test)
            rocs[(det_id, float(snr_db))] = roc
            records.append(
                SweepRecord(
                    n_dim=pair.dim, p_dim=p, snr_db=float(snr_db),
                    detector=det_id, error_rate=err, auc=roc.auc,
                    train_time_s=scorers[det_id].train_time_s,
                    infer_time_s=infer_s,
                    seed=record_seed(config.seed, pair.dim, p, snr_db, det_id),
                )
            )
    return records, rocs


def run_error_vs_p(config):
    """Error rate against subspace dimension, with the analytic bound.

    For every p the detectors are retrained on the training split and
    evaluated on the disjoint test split; one extra `bound` row per p
    carries the projected-domain error bound in the error_rate column
    (auc is NaN there; the schema has no dedicated column).
    """
    pair = build_hypothesis_pair(config)
    records: list[SweepRecord] = []
    p_max = max(int(p) for p in config.p_grid)
    for snr_db in config.snr_grid:
        train, test, noise = _datasets_for(config, pair, snr_db)
        model_pair = noisy_pair(pair, noise)
        basis_full = pca_fit(train, p_max)
        for p in sorted(int(v) for v in config.p_grid):
            scorers = _train_scorers(config.detectors, model_pair, train, p, config)
            for det_id in config.detectors:
                err, roc, infer_s = _evaluate(scorers[det_id], test)
                records.append(
                    SweepRecord(
                        n_dim=pair.dim, p_dim=p, snr_db=float(snr_db),
                        detector=det_id, error_rate=err, auc=roc.auc,
                        train_time_s=scorers[det_id].train_time_s,
                        infer_time_s=infer_s,
                        seed=record_seed(config.seed, pair.dim, p, snr_db, det_id),
                    )
                )
            basis_p = truncate_basis(basis_full, p)
            m0 = basis_p.basis.conj().T @ (model_pair.h0.mean - basis_p.centering_mean)
            m1 = basis_p.basis.conj().T @ (model_pair.h1.mean - basis_p.centering_mean)
            d_b = bhattacharyya_distance(
                m0, m1, model_pair.h0.iso_var, model_pair.h1.iso_var
            )
            records.append(
                SweepRecord(
                    n_dim=pair.dim, p_dim=p, snr_db=float(snr_db),
                    detector=BOUND, error_rate=error_bound(d_b), auc=float("nan"),
                    train_time_s=0.0, infer_time_s=0.0,
                    seed=record_seed(config.seed, pair.dim, p, snr_db, BOUND),
                )
            )
    return records


def run_perturbation(config):
    """Detector error under relative perturbation of the estimated laws.

    Gaussian parameters are estimated from the training split, perturbed
    at each eps, and the likelihood detectors are rebuilt from the
    perturbed values. The perturbation direction is drawn once per grid
    point and scaled by eps, so eps = 0 is bitwise the unperturbed
    baseline. SVM detectors never consume the estimated laws: they train
    once on the split and their rows repeat identically across eps.
    Detector ids carry an ``;eps=`` suffix; the seed column holds the
    grid-point seed shared by all eps rows of that detector.
    """
    for eps in config.eps_grid:
        if not 0.0 <= eps <= 0.3:
            raise ValueError(f"eps grid values must lie in [0, 0.3], got {eps}")
    pair = build_hypothesis_pair(config)
    records: list[SweepRecord] = []
    for snr_db in config.snr_grid:
        train, test, noise = _datasets_for(config, pair, snr_db)
        est0 = estimate_gaussian_params(train.data[:, train.labels == 0])
        est1 = estimate_gaussian_params(train.data[:, train.labels == 1])
        for p in sorted(int(v) for v in config.p_grid):
            svm_cache: dict[str, tuple[float, float, float]] = {}
            svm_ids = [d for d in config.detectors if d.startswith("pca-svm")]
            lrt_ids = [d for d in config.detectors if not d.startswith("pca-svm")]
            if svm_ids:
                scorers = _train_scorers(svm_ids, noisy_pair(pair, noise), train, p, config)
                for det_id in svm_ids:
                    err, roc, infer_s = _evaluate(scorers[det_id], test)
                    svm_cache[det_id] = (err, roc.auc, scorers[det_id].train_time_s, infer_s)
            basis = pca_fit(train, p) if any(
                d.startswith("pca-") for d in lrt_ids
            ) else None
            for eps in config.eps_grid:
                for det_id in lrt_ids:
                    base_seed = record_seed(config.seed, pair.dim, p, snr_db, det_id)
                    p0 = perturb_params(est0, eps, stable_mix(base_seed, 0))
                    p1 = perturb_params(est1, eps, stable_mix(base_seed, 1))
                    t0 = time.perf_counter()
                    if det_id == PCA_LRT:
                        det = pca_lrt_build((p0, p1), basis)
                        score_fn = lambda x, _d=det, _b=basis: lrt_score(
                            _d, pca_project(_b, x)
                        )
                    elif det_id in (FULL_LRT, FULL_LRT_NAIVE):
                        mode = STABLE if det_id == FULL_LRT else NAIVE
                        det = lrt_build((p0, p1), mode=mode)
                        score_fn = lambda x, _d=det: lrt_score(_d, x)
                    else:
                        raise ValueError(f"unknown detector id {det_id!r}")
                    train_s = time.perf_counter() - t0
                    scorer = _Scorer(
                        score_fn,
                        NAIVE if det_id == FULL_LRT_NAIVE else STABLE,
                        train_s,
                    )
                    err, roc, infer_s = _evaluate(scorer, test)
                    records.append(
                        SweepRecord(
                            n_dim=pair.dim, p_dim=p, snr_db=float(snr_db),
                            detector=f"{det_id};eps={eps:g}",
                            error_rate=err, auc=roc.auc,
                            train_time_s=train_s, infer_time_s=infer_s,
                            seed=base_seed,
                        )
                    )
                for det_id in svm_ids:
                    err, auc, train_s, infer_s = svm_cache[det_id]
                    records.append(
                        SweepRecord(
                            n_dim=pair.dim, p_dim=p, snr_db=float(snr_db),
                            detector=f"{det_id};eps={eps:g}",
                            error_rate=err, auc=auc,
                            train_time_s=train_s, infer_time_s=infer_s,
                            seed=record_seed(config.seed, pair.dim, p, snr_db, det_id),
                        )
                    )
    return records


def run_timing_vs_p(config, repetitions: int = 5):
    """Post-training inference time per detector per subspace dimension.

    The full-space detectors do not depend on p but are re-benchmarked at
    every grid point, which is exactly what exposes their flat timing
    profile. infer_time_s carries the median of the timed passes.
    """
    pair = build_hypothesis_pair(config)
    records: list[SweepRecord] = []
    for snr_db in config.snr_grid:
        train, test, noise = _datasets_for(config, pair, snr_db)
        model_pair = noisy_pair(pair, noise)
        for p in sorted(int(v) for v in config.p_grid):
            scorers = _train_scorers(config.detectors, model_pair, train, p, config)
            for det_id in config.detectors:
                stats = bench_inference(
                    scorers[det_id].scores, test.data, repetitions
                )
                scores = scorers[det_id].scores(test.data)
                preds = decide_all(scores, 0.0, scorers[det_id].mode)
                err = error_rate(preds, test.labels)
                if scorers[det_id].mode == NAIVE and not np.all(np.isfinite(scores)):
                    scores = np.where(np.isfinite(scores), scores, 0.0)
                records.append(
                    SweepRecord(
                        n_dim=pair.dim, p_dim=p, snr_db=float(snr_db),
                        detector=det_id, error_rate=err,
                        auc=roc_auc(scores, test.labels).auc,
                        train_time_s=scorers[det_id].train_time_s,
                        infer_time_s=stats.median_s,
                        seed=record_seed(config.seed, pair.dim, p, snr_db, det_id),
                    )
                )
    return records


# --------------------------------------------------------------------------
# CSV export


def _fmt(value: float) -> str:
    return repr(float(value))


def save_records_csv(records, path) -> None:
    lines = [RECORDS_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    str(r.n_dim), str(r.p_dim), _fmt(r.snr_db), r.detector,
                    _fmt(r.error_rate), _fmt(r.auc),
                    _fmt(r.train_time_s), _fmt(r.infer_time_s), str(r.seed),
                ]
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def save_roc_csv(rocs: dict, path) -> None:
    """Rows ``detector,snr_db,fpr,tpr,threshold``, grouped per curve."""
    lines = [ROC_HEADER]
    for (det_id, snr_db), roc in rocs.items():
        for (fpr, tpr), thr in zip(roc.points, roc.thresholds):
            lines.append(
                f"{det_id},{_fmt(snr_db)},{_fmt(fpr)},{_fmt(tpr)},{_fmt(thr)}"
            )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
