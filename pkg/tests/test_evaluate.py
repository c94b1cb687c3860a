import json

import numpy as np
import pytest

from neurodrive.dataset import Dataset, TrialRecord, load_manifest, write_manifest
from neurodrive.embedding import DeterministicProjectionBackend
from neurodrive.errors import ConfigError, DataError, UndefinedMetricError
from neurodrive.evaluate import (
    AnovaResult,
    ExperimentConfig,
    anova_f,
    accuracy,
    auc,
    compare_fold_metrics,
    fit_fold,
    loso_split,
    paired_ttest,
    report_table,
    run_experiment,
    save_report,
    student_t_sf2,
    task_labels,
    task_trials,
)
from neurodrive.extract import collect_feature_matrix
from neurodrive.learn import model_to_dict
from neurodrive.synth import SynthConfig, synth_dataset


def brute_force_auc(labels, scores):
    pos = [s for l, s in zip(labels, scores) if l == 1]
    neg = [s for l, s in zip(labels, scores) if l == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


def fake_trials(n_subjects, per_subject, duration=12.0):
    trials = []
    for s in range(n_subjects):
        for t in range(per_subject):
            trials.append(
                TrialRecord(
                    trial_id=f"S{s:02d}T{t:03d}",
                    subject_id=f"S{s:02d}",
                    attention_label="high" if t % 2 else "low",
                    incident_label="none",
                    duration_s=duration,
                    files={},
                )
            )
    return trials


class TestLosoSplit:
    def test_published_scale_fold_sizes(self):
        trials = fake_trials(12, 35)
        folds = loso_split(trials)
        assert len(folds) == 12
        for train, test in folds:
            assert len(train) == 385
            assert len(test) == 35

    def test_two_subjects(self):
        assert len(loso_split(fake_trials(2, 3))) == 2

    def test_partition_property(self):
        trials = fake_trials(5, 7)
        folds = loso_split(trials)
        seen = []
        for train, test in folds:
            ids = {t.trial_id for t in test}
            assert ids.isdisjoint({t.trial_id for t in train})
            seen.extend(ids)
        assert sorted(seen) == sorted(t.trial_id for t in trials)

    def test_fold_order_is_by_subject(self):
        folds = loso_split(fake_trials(4, 2))
        assert [test[0].subject_id for _, test in folds] == [
            "S00", "S01", "S02", "S03"
        ]

    def test_single_subject_rejected(self):
        with pytest.raises(DataError):
            loso_split(fake_trials(1, 5))


class TestAccuracyAndAuc:
    def test_accuracy_and_error_rate_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(1, 40))
            labels = rng.integers(0, 2, n)
            preds = rng.integers(0, 2, n)
            acc = accuracy(labels, preds)
            assert acc + (1.0 - acc) == 1.0

    def test_perfect_and_inverted_ordering(self):
        labels = np.array([0, 0, 1, 1])
        assert auc(labels, np.array([0.1, 0.2, 0.8, 0.9])) == 1.0
        assert auc(labels, np.array([0.9, 0.8, 0.2, 0.1])) == 0.0

    def test_known_example(self):
        assert auc(np.array([1, 0, 1, 0]), np.array([0.9, 0.8, 0.7, 0.1])) == 0.75

    def test_matches_brute_force_exactly(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(2, 200))
            labels = rng.integers(0, 2, n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            # rounded scores force plenty of ties
            scores = np.round(rng.standard_normal(n), 1)
            assert auc(labels, scores) == brute_force_auc(labels, scores)

    def test_single_class_rejected(self):
        with pytest.raises(UndefinedMetricError):
            auc(np.ones(4, dtype=int), np.arange(4.0))


class TestPairedTtest:
    def test_identical_inputs(self):
        res = paired_ttest(np.arange(5.0), np.arange(5.0))
        assert res.t == 0.0 and res.p == 1.0 and res.degenerate

    def test_known_differences(self):
        b = np.zeros(4)
        a = np.array([1.0, 2.0, 3.0, 4.0])
        res = paired_ttest(a, b)
        assert abs(res.t - 3.873) < 1e-3
        assert abs(res.p - 0.0305) < 1e-3

    def test_p_against_mpmath_oracle(self):
        mp = pytest.importorskip("mpmath")
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(3, 15))
            a = rng.standard_normal(n)
            b = rng.standard_normal(n)
            res = paired_ttest(a, b)
            df = n - 1
            x = mp.mpf(df) / (df + mp.mpf(res.t) ** 2)
            expected = float(mp.betainc(mp.mpf(df) / 2, mp.mpf(1) / 2, 0, x, regularized=True))
            assert abs(res.p - expected) / expected < 1e-10

    def test_swap_negates_t(self):
        rng = np.random.default_rng(3)
        a, b = rng.standard_normal(8), rng.standard_normal(8)
        r1, r2 = paired_ttest(a, b), paired_ttest(b, a)
        assert r1.t == -r2.t
        assert r1.p == r2.p

    def test_zero_variance_nonzero_mean(self):
        res = paired_ttest(np.full(4, 2.0), np.zeros(4))
        assert np.isinf(res.t) and res.p == 0.0 and res.degenerate

    def test_tail_function_basics(self):
        assert student_t_sf2(0.0, 5) == 1.0


class TestAnova:
    def test_identical_groups(self):
        assert anova_f([np.array([1.0, 2, 3]), np.array([1.0, 2, 3])]).f == 0.0

    def test_known_f(self):
        res = anova_f([np.array([1.0, 2.0]), np.array([3.0, 4.0])])
        assert res.f == 8.0
        assert not res.degenerate

    def test_zero_within_group_variance(self):
        res = anova_f([np.array([1.0, 1.0]), np.array([2.0, 2.0])])
        assert res.degenerate and np.isinf(res.f)
        same = anova_f([np.array([1.0, 1.0]), np.array([1.0, 1.0])])
        assert same.degenerate and same.f == 0.0

    def test_bad_inputs(self):
        with pytest.raises(DataError):
            anova_f([np.array([1.0, 2.0])])
        with pytest.raises(DataError):
            anova_f([np.array([1.0]), np.array([2.0, 3.0])])


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth_small")
    return synth_dataset(SynthConfig(n_subjects=3, trials_per_subject=6, effect_size=1.5, seed=21), root)


class TestSynthDataset:
    def test_counts_and_labels(self, small_dataset):
        ds = small_dataset
        assert len(ds.trials) == 18
        assert len(ds.subjects) == 3
        per_subject = {s: [t for t in ds.trials if t.subject_id == s] for s in ds.subjects}
        for subject, trials in per_subject.items():
            assert len(trials) == 6
            assert any(t.attention_label == "high" for t in trials)
            assert any(t.attention_label == "low" for t in trials)
            incidents = [t for t in trials if t.is_incident]
            assert incidents
            for t in incidents:
                assert t.duration_s == 2.0

    def test_files_exist(self, small_dataset):
        ds = small_dataset
        for t in ds.trials:
            for key in ("eeg", "ppg", "gsr", "landmarks"):
                assert ds.path(t, key).exists()

    def test_seed_reproducibility(self, tmp_path):
        cfg = SynthConfig(n_subjects=2, trials_per_subject=4, effect_size=1.0, seed=99)
        a = synth_dataset(cfg, tmp_path / "a")
        synth_dataset(cfg, tmp_path / "b")
        for t in a.trials:
            for key in ("eeg", "ppg", "gsr", "landmarks"):
                rel = t.files[key]
                assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
        assert (tmp_path / "a" / "manifest.json").read_bytes() == (
            tmp_path / "b" / "manifest.json"
        ).read_bytes()

    def test_zero_effect_class_independence(self):
        from neurodrive.synth import _synth_eeg, _synth_gsr, _synth_landmarks, _synth_ppg

        for fn, args in (
            (_synth_eeg, ("none", 1.0)),
            (_synth_ppg, ()),
            (_synth_gsr, ()),
        ):
            out = []
            for flag in (True, False):
                rng = np.random.default_rng(17)
                out.append(fn(rng, 4.0, 0.0, flag, *args).data)
            np.testing.assert_array_equal(out[0], out[1])
        frames = []
        for flag in (True, False):
            rng = np.random.default_rng(17)
            frames.append(_synth_landmarks(rng, 2.0, 10.0, 0.0, flag).frames[0].points)
        np.testing.assert_array_equal(frames[0], frames[1])

    def test_single_subject_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            synth_dataset(SynthConfig(n_subjects=1, seed=0), tmp_path / "x")


class TestManifest:
    def test_round_trip(self, small_dataset, tmp_path):
        path = tmp_path / "manifest.json"
        write_manifest(path, small_dataset)
        back = load_manifest(path)
        assert back.subjects == small_dataset.subjects
        assert back.trials == small_dataset.trials
        assert back.seed == small_dataset.seed

    def test_incident_duration_enforced(self, tmp_path):
        with pytest.raises(DataError):
            Dataset(
                root=tmp_path,
                subjects=("S01", "S02"),
                trials=(
                    TrialRecord("t1", "S01", "low", "hazardous", 3.0, {}),
                    TrialRecord("t2", "S02", "low", "none", 3.0, {}),
                ),
            )

    def test_duplicate_ids_rejected(self, tmp_path):
        with pytest.raises(DataError):
            Dataset(
                root=tmp_path,
                subjects=("S01",),
                trials=(
                    TrialRecord("t1", "S01", "low", "none", 3.0, {}),
                    TrialRecord("t1", "S01", "high", "none", 3.0, {}),
                ),
            )


class TestRunExperiment:
    def test_report_structure(self, small_dataset, tmp_path):
        report = run_experiment(
            small_dataset,
            ExperimentConfig(task="attention", modalities=("eeg",), seed=5),
        )
        assert len(report["folds"]) == 3
        assert 0.0 <= report["mean_auc"] <= 1.0
        assert report["error_rate"] + report["mean_accuracy"] == 1.0
        assert report["accuracy_formatted"].endswith("%")
        assert "±" in report["accuracy_formatted"]
        table = report_table(report)
        assert "accuracy vs chance" in table
        out = tmp_path / "report.json"
        save_report(out, report)
        assert json.loads(out.read_text())["config"]["task"] == "attention"

    def test_gsr_and_face_modalities_run(self, small_dataset):
        report = run_experiment(
            small_dataset,
            ExperimentConfig(task="attention", modalities=("gsr", "face"), seed=5, pca_dim=8),
        )
        assert len(report["folds"]) == 3

    def test_lstm_attention_rejected(self, small_dataset):
        with pytest.raises(ConfigError):
            run_experiment(
                small_dataset,
                ExperimentConfig(task="attention", modalities=("eeg",), classifier="lstm"),
            )

    def test_unknown_modality_rejected(self, small_dataset):
        with pytest.raises(ConfigError):
            run_experiment(
                small_dataset,
                ExperimentConfig(task="attention", modalities=("emg",)),
            )

    def test_compare_fold_metrics(self, small_dataset):
        cfg = ExperimentConfig(task="attention", modalities=("eeg",), seed=5)
        r1 = run_experiment(small_dataset, cfg)
        r2 = run_experiment(
            small_dataset, ExperimentConfig(task="attention", modalities=("face",), seed=5)
        )
        comp = compare_fold_metrics([r1, r2])
        assert len(comp["pairwise_ttests"]) == 1
        assert np.isfinite(comp["anova_f"]) or comp["anova_degenerate"]


class TestLeakageIsolation:
    def test_test_fold_files_cannot_influence_fit(self, tmp_path):
        ds = synth_dataset(SynthConfig(n_subjects=2, trials_per_subject=4, seed=3), tmp_path)
        trials = task_trials(ds, "attention")
        labels = task_labels(trials, "attention")
        folds = loso_split(trials)
        train, test = folds[0]
        idx = {t.trial_id: i for i, t in enumerate(trials)}
        y_train = labels[[idx[t.trial_id] for t in train]]
        backend = DeterministicProjectionBackend(seed=1)
        cfg = ExperimentConfig(task="attention", modalities=("eeg",), seed=1, pca_dim=3)

        x_train, _ = collect_feature_matrix(ds, train, ("eeg",), backend)
        before = fit_fold(x_train, y_train, cfg)

        # corrupt every test-subject payload, then refit
        for t in test:
            p = ds.path(t, "eeg")
            p.write_text(p.read_text().replace("0.", "9."))
        x_train2, _ = collect_feature_matrix(ds, train, ("eeg",), backend)
        after = fit_fold(x_train2, y_train, cfg)

        np.testing.assert_array_equal(x_train, x_train2)
        for attr in ("scaler", "pca", "post_scaler", "elm"):
            assert model_to_dict(getattr(before, attr)) == model_to_dict(getattr(after, attr))
