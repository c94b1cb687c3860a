"""LOSO cross-validation, metrics, statistics, and the experiment runner."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .dataset import Dataset, TrialRecord
from .embedding import DeterministicProjectionBackend
from .errors import ConfigError, DataError, UndefinedMetricError
from .extract import check_modalities, collect_feature_matrix
from .learn import (
    ElmModel,
    LstmConfig,
    PcaModel,
    Scaler,
    elm_scores,
    elm_train,
    lstm_predict_batch,
    lstm_train,
    pca_fit,
    pca_transform,
    scaler_apply,
    scaler_fit,
)
from .trends import (
    DEFAULT_INCIDENT_INTERVAL_S,
    TREND_WIDTH,
    face_interval_features,
    slice_feature_matrix,
)


# ---------------------------------------------------------------------------
# splits and metrics
# ---------------------------------------------------------------------------

def loso_split(dataset_or_trials) -> list[tuple[list[TrialRecord], list[TrialRecord]]]:
    """One fold per subject (ordered by subject id): that subject is the test
    set, everyone else trains.
    """
    trials = list(
        dataset_or_trials.trials if isinstance(dataset_or_trials, Dataset) else dataset_or_trials
    )
    subjects = sorted({t.subject_id for t in trials})
    if len(subjects) < 2:
        raise DataError("LOSO needs at least 2 subjects")
    folds = []
    for subject in subjects:
        test = [t for t in trials if t.subject_id == subject]
        train = [t for t in trials if t.subject_id != subject]
        folds.append((train, test))
    return folds


def accuracy(labels, predictions) -> float:
    labels = np.asarray(labels)
    predictions = np.asarray(predictions)
    if labels.shape != predictions.shape or labels.size == 0:
        raise DataError("labels and predictions must be equal-length and non-empty")
    return float(np.mean(labels == predictions))


def auc(labels, scores) -> float:
    """Mann-Whitney AUC with midranks for tied scores."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape:
        raise DataError("labels and scores must have equal length")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    r_pos = float(np.sum(ranks[labels == 1]))
    return (r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    degenerate: bool = False


def student_t_sf2(t: float, df: int) -> float:
    """Two-sided tail probability P(|T| >= t) via the regularised
    incomplete beta function."""
    t2 = t * t
    return float(special.betainc(df / 2.0, 0.5, df / (df + t2)))


def paired_ttest(a, b) -> TTestResult:
    """Two-sided paired t-test on a - b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise DataError("paired t-test needs two equal-length vectors, n >= 2")
    d = a - b
    sd = d.std(ddof=1)
    if sd == 0.0:
        if d.mean() == 0.0:
            return TTestResult(0.0, 1.0, degenerate=True)
        return TTestResult(np.inf if d.mean() > 0 else -np.inf, 0.0, degenerate=True)
    t = d.mean() / (sd / np.sqrt(d.size))
    return TTestResult(float(t), student_t_sf2(abs(t), d.size - 1))


@dataclass(frozen=True)
class AnovaResult:
    f: float
    degenerate: bool = False


def anova_f(groups) -> AnovaResult:
    """One-way ANOVA F statistic: between-group MS over within-group MS."""
    groups = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(groups) < 2 or any(g.size < 2 for g in groups):
        raise DataError("ANOVA needs >= 2 groups with >= 2 values each")
    grand = np.concatenate(groups).mean()
    n_total = sum(g.size for g in groups)
    ssb = sum(g.size * (g.mean() - grand) ** 2 for g in groups)
    ssw = sum(float(np.sum((g - g.mean()) ** 2)) for g in groups)
    df_b = len(groups) - 1
    df_w = n_total - len(groups)
    if ssw == 0.0:
        return AnovaResult(np.inf if ssb > 0 else 0.0, degenerate=True)
    return AnovaResult(float((ssb / df_b) / (ssw / df_w)))


# ---------------------------------------------------------------------------
# experiment runner
# ---------------------------------------------------------------------------

TASKS = ("attention", "incident")
CLASSIFIERS = ("elm", "lstm")


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "attention"
    modalities: tuple[str, ...] = ("eeg",)
    classifier: str = "elm"
    pca_dim: int = 30
    n_hidden: int = 170
    seed: int = 0
    trend_interval_s: float = DEFAULT_INCIDENT_INTERVAL_S
    lstm_epochs: int = 60
    lstm_learning_rate: float = 0.02
    lstm_momentum: float = 0.9
    lstm_widths: tuple[int, int] = (200, 100)

    def validate(self) -> "ExperimentConfig":
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.classifier not in CLASSIFIERS:
            raise ConfigError(f"unknown classifier {self.classifier!r}")
        check_modalities(self.modalities)
        if self.classifier == "lstm" and self.task != "incident":
            raise ConfigError(
                "the LSTM classifier needs fixed-duration trials and is "
                "only available for the incident task"
            )
        if self.task == "incident":
            bad = [m for m in self.modalities if m not in ("eeg", "face")]
            if bad:
                raise ConfigError(
                    "2 s incidents are too short for ppg/gsr features; "
                    f"incident analysis supports eeg/face only, not {bad}"
                )
        return self


def task_trials(dataset: Dataset, task: str) -> list[TrialRecord]:
    """Attention uses the long video trials; incidents are the 2 s trials."""
    if task == "attention":
        keep = [t for t in dataset.trials if not t.is_incident]
    else:
        keep = [t for t in dataset.trials if t.is_incident]
    return sorted(keep, key=lambda t: t.trial_id)


def task_labels(trials, task: str) -> np.ndarray:
    if task == "attention":
        return np.array([1 if t.attention_label == "high" else 0 for t in trials])
    return np.array([1 if t.incident_label == "hazardous" else 0 for t in trials])


@dataclass(frozen=True)
class FoldModels:
    scaler: Scaler
    pca: PcaModel
    post_scaler: Scaler
    elm: ElmModel


def fit_fold(x_train: np.ndarray, y_train: np.ndarray, cfg: ExperimentConfig) -> FoldModels:
    """Scaler -> PCA -> scaler -> ELM, all fitted strictly on training rows.

    The second scaler puts PCA scores back in [-1, 1] so the triangular-basis
    hidden layer operates in its active range.
    """
    scaler = scaler_fit(x_train)
    z = scaler_apply(scaler, x_train)
    k = min(cfg.pca_dim, x_train.shape[0] - 1, x_train.shape[1])
    pca = pca_fit(z, k)
    p = pca_transform(pca, z)
    post = scaler_fit(p)
    model = elm_train(scaler_apply(post, p), y_train, cfg.n_hidden, cfg.seed)
    return FoldModels(scaler, pca, post, model)


def score_fold(models: FoldModels, x: np.ndarray) -> np.ndarray:
    p = pca_transform(models.pca, scaler_apply(models.scaler, x))
    return elm_scores(models.elm, scaler_apply(models.post_scaler, p))


def _elm_experiment(dataset, trials, labels, cfg):
    backend = DeterministicProjectionBackend(seed=cfg.seed)
    x, ids = collect_feature_matrix(dataset, trials, cfg.modalities, backend)
    index = {tid: i for i, tid in enumerate(ids)}
    y = labels
    folds = []
    for train, test in loso_split(trials):
        tr = np.array([index[t.trial_id] for t in train])
        te = np.array([index[t.trial_id] for t in test])
        models = fit_fold(x[tr], y[tr], cfg)
        scores = score_fold(models, x[te])
        predictions = (scores > 0).astype(int)
        folds.append({
            "subject": test[0].subject_id,
            "n_test": len(te),
            "accuracy": accuracy(y[te], predictions),
            "auc": auc(y[te], scores),
        })
    return folds


def _trend_matrices(dataset, trials, cfg, backend):
    """Per-trial (T, D) pre-PCA sequence features for the configured modalities."""
    from .extract import load_eeg_trial
    from .face import read_landmarks_csv

    per_trial = []
    for trial in trials:
        parts = []
        n_steps = None
        if "eeg" in cfg.modalities:
            eeg = load_eeg_trial(dataset, trial)
            m = slice_feature_matrix(eeg, backend, cfg.trend_interval_s)
            parts.append(m)
            n_steps = m.shape[0]
        if "face" in cfg.modalities:
            face = read_landmarks_csv(dataset.path(trial, "landmarks"))
            if n_steps is None:
                n_steps = int(np.floor(trial.duration_s / cfg.trend_interval_s + 1e-9))
            parts.append(face_interval_features(face, n_steps))
        per_trial.append(np.concatenate(parts, axis=1))
    steps = {m.shape[0] for m in per_trial}
    if len(steps) != 1:
        raise ConfigError(
            "LSTM needs equal-length sequences; trial durations differ "
            f"(observed step counts {sorted(steps)})"
        )
    return per_trial


def _lstm_experiment(dataset, trials, labels, cfg):
    backend = DeterministicProjectionBackend(seed=cfg.seed)
    per_trial = _trend_matrices(dataset, trials, cfg, backend)
    index = {t.trial_id: i for i, t in enumerate(trials)}
    y = labels
    lstm_cfg = LstmConfig(
        widths=cfg.lstm_widths,
        learning_rate=cfg.lstm_learning_rate,
        momentum=cfg.lstm_momentum,
        epochs=cfg.lstm_epochs,
        seed=cfg.seed,
    )
    folds = []
    for train, test in loso_split(trials):
        tr = [index[t.trial_id] for t in train]
        te = [index[t.trial_id] for t in test]
        pooled = np.concatenate([per_trial[i] for i in tr], axis=0)
        scaler = scaler_fit(pooled)
        k = min(TREND_WIDTH, pooled.shape[0] - 1, pooled.shape[1])
        pca = pca_fit(scaler_apply(scaler, pooled), k)
        post = scaler_fit(pca_transform(pca, scaler_apply(scaler, pooled)))
        seqs = [
            scaler_apply(post, pca_transform(pca, scaler_apply(scaler, per_trial[i])))
            for i in range(len(trials))
        ]
        model = lstm_train([seqs[i] for i in tr], y[tr], lstm_cfg)
        probs = lstm_predict_batch(model, [seqs[i] for i in te])
        scores = probs[:, 1]
        predictions = np.argmax(probs, axis=1)
        folds.append({
            "subject": test[0].subject_id,
            "n_test": len(te),
            "accuracy": accuracy(y[te], predictions),
            "auc": auc(y[te], scores),
        })
    return folds


def format_percent(mean: float, std: float) -> str:
    return f"{100 * mean:.2f} ± {100 * std:.2f}%"


def format_auc(mean: float, std: float) -> str:
    return f"{mean:.2f} ± {std:.2f}"


def run_experiment(dataset: Dataset, cfg: ExperimentConfig) -> dict:
    """LOSO evaluation; returns a JSON-ready report."""
    cfg = cfg.validate()
    trials = task_trials(dataset, cfg.task)
    if not trials:
        raise DataError(f"dataset has no trials for task {cfg.task!r}")
    labels = task_labels(trials, cfg.task)
    if cfg.classifier == "elm":
        folds = _elm_experiment(dataset, trials, labels, cfg)
    else:
        folds = _lstm_experiment(dataset, trials, labels, cfg)

    accs = np.array([f["accuracy"] for f in folds])
    aucs = np.array([f["auc"] for f in folds])
    chance = paired_ttest(accs, np.full(accs.size, 0.5))
    report = {
        "version": 1,
        "config": {
            "task": cfg.task,
            "modalities": list(cfg.modalities),
            "classifier": cfg.classifier,
            "pca_dim": cfg.pca_dim,
            "n_hidden": cfg.n_hidden,
            "seed": cfg.seed,
            "trend_interval_s": cfg.trend_interval_s,
        },
        "folds": folds,
        "n_trials": len(trials),
        "mean_accuracy": float(accs.mean()),
        "std_accuracy": float(accs.std(ddof=1)) if accs.size > 1 else 0.0,
        "mean_auc": float(aucs.mean()),
        "std_auc": float(aucs.std(ddof=1)) if aucs.size > 1 else 0.0,
        "error_rate": 1.0 - float(accs.mean()),
        "chance_ttest": {"t": chance.t, "p": chance.p, "degenerate": chance.degenerate},
    }
    report["accuracy_formatted"] = format_percent(report["mean_accuracy"], report["std_accuracy"])
    report["auc_formatted"] = format_auc(report["mean_auc"], report["std_auc"])
    return report


def report_table(report: dict) -> str:
    """Human-readable summary table for one report."""
    cfg = report["config"]
    lines = [
        f"task: {cfg['task']}   modalities: {'+'.join(cfg['modalities'])}   "
        f"classifier: {cfg['classifier']}",
        f"{'subject':<10}{'n':>4}{'accuracy':>12}{'auc':>8}",
    ]
    for fold in report["folds"]:
        lines.append(
            f"{fold['subject']:<10}{fold['n_test']:>4}"
            f"{100 * fold['accuracy']:>11.2f}%{fold['auc']:>8.3f}"
        )
    lines.append(
        f"{'mean':<10}{report['n_trials']:>4}"
        f"{report['accuracy_formatted']:>16}{report['auc_formatted']:>14}"
    )
    t = report["chance_ttest"]
    lines.append(f"accuracy vs chance: t = {t['t']:.3f}, p = {t['p']:.2e}")
    return "\n".join(lines)


def save_report(path, report: dict) -> None:
    with open(path, "w") as f:
        json.dump(report, f, sort_keys=True, indent=1)
        f.write("\n")


def compare_fold_metrics(reports: list[dict], metric: str = "accuracy") -> dict:
    """Pairwise paired t-tests and a one-way ANOVA across experiment reports.

    Reports must cover the same subjects in the same fold order.
    """
    if len(reports) < 2:
        raise ConfigError("need at least two reports to compare")
    series = [np.array([f[metric] for f in r["folds"]]) for r in reports]
    names = ["+".join(r["config"]["modalities"]) for r in reports]
    pairwise = []
    for i in range(len(reports)):
        for j in range(i + 1, len(reports)):
            res = paired_ttest(series[i], series[j])
            pairwise.append({
                "a": names[i], "b": names[j],
                "t": res.t, "p": res.p, "degenerate": res.degenerate,
            })
    f_res = anova_f(series)
    return {
        "metric": metric,
        "pairwise_ttests": pairwise,
        "anova_f": f_res.f,
        "anova_degenerate": f_res.degenerate,
    }
