import json
import subprocess
import sys

import pytest

SYNTH_CFG = {
    "n_subjects": 2,
    "trials_per_subject": 8,
    "trial_length_samples": 320,
    "iws_length_range": [96, 160],
    "carrier_band_hz": [8, 12],
    "snr": 5.0,
    "seed": 21,
}


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "iws.cli", *args],
                          capture_output=True, text=True)


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg_path = root / "synth.json"
    cfg_path.write_text(json.dumps(SYNTH_CFG))
    out = root / "ds"
    proc = run_cli("generate", "--config", str(cfg_path), "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    return out


class TestGenerate:
    def test_writes_expected_files(self, dataset_dir):
        files = sorted(p.name for p in dataset_dir.glob("*.json"))
        assert "manifest.json" in files
        assert len([f for f in files if f != "manifest.json"]) == 16

    def test_negative_snr_exits_2_naming_field(self, tmp_path):
        bad = dict(SYNTH_CFG, snr=-2.0)
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps(bad))
        proc = run_cli("generate", "--config", str(cfg), "--out", str(tmp_path / "x"))
        assert proc.returncode == 2
        assert "snr" in proc.stderr

    def test_unknown_field_exits_2(self, tmp_path):
        bad = dict(SYNTH_CFG, wavelength=3)
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps(bad))
        proc = run_cli("generate", "--config", str(cfg), "--out", str(tmp_path / "x"))
        assert proc.returncode == 2
        assert "wavelength" in proc.stderr

    def test_rerun_identical_content(self, dataset_dir, tmp_path):
        cfg = tmp_path / "synth.json"
        cfg.write_text(json.dumps(SYNTH_CFG))
        out2 = tmp_path / "ds2"
        proc = run_cli("generate", "--config", str(cfg), "--out", str(out2))
        assert proc.returncode == 0
        for p in sorted(dataset_dir.glob("*.json")):
            assert (out2 / p.name).read_bytes() == p.read_bytes(), p.name


class TestRun:
    def run_config(self, dataset_dir, seed=5):
        return {
            "dataset_path": str(dataset_dir),
            "feature_set_ids": [1],
            "classifiers": ["random_forest"],
            "folds": 2,
            "seed": seed,
        }

    def test_report_written_with_sane_scores(self, dataset_dir, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps(self.run_config(dataset_dir)))
        out = tmp_path / "report.json"
        proc = run_cli("run", "--config", str(cfg), "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        report = json.loads(out.read_text())
        assert len(report["results"]) == 1
        block = report["results"][0]
        assert len(block["subjects"]) == 2
        for sub in block["subjects"]:
            for fold in sub["folds"]:
                for t in fold["trial_scores"]:
                    for metric in ("precision", "recall", "f1"):
                        assert 0.0 <= t[metric] <= 1.0
        assert out.with_suffix(".csv").exists()
        assert "mean F1" in proc.stdout

    def test_deterministic_reports(self, dataset_dir, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps(self.run_config(dataset_dir)))
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        assert run_cli("run", "--config", str(cfg), "--out", str(out1)).returncode == 0
        assert run_cli("run", "--config", str(cfg), "--out", str(out2)).returncode == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_bad_feature_set_exits_2(self, dataset_dir, tmp_path):
        doc = self.run_config(dataset_dir)
        doc["feature_set_ids"] = [9]
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps(doc))
        proc = run_cli("run", "--config", str(cfg), "--out", str(tmp_path / "r.json"))
        assert proc.returncode == 2
        assert "feature_set_ids" in proc.stderr

    def test_missing_dataset_exits_3(self, tmp_path):
        doc = self.run_config(tmp_path / "nowhere")
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps(doc))
        proc = run_cli("run", "--config", str(cfg), "--out", str(tmp_path / "r.json"))
        assert proc.returncode == 3


class TestScore:
    def make_predictions(self, dataset_dir, perfect=True):
        from iws.data import read_dataset
        from iws.postprocess import truth_bins

        entries = []
        for ds in read_dataset(dataset_dir):
            for i, trial in enumerate(ds.trials):
                bins = truth_bins(trial)
                if not perfect:
                    bins = [0] * len(bins)
                entries.append({"subject_id": ds.subject_id, "trial_index": i,
                                "bins": bins})
        return {"trials": entries}

    def test_perfect_predictions_score_one(self, dataset_dir, tmp_path):
        pred = tmp_path / "pred.json"
        pred.write_text(json.dumps(self.make_predictions(dataset_dir)))
        proc = run_cli("score", "--pred", str(pred), "--dataset", str(dataset_dir))
        assert proc.returncode == 0, proc.stderr
        assert "aggregate: P=1.0000 R=1.0000 F1=1.0000" in proc.stdout

    def test_all_zero_predictions_score_zero(self, dataset_dir, tmp_path):
        pred = tmp_path / "pred.json"
        pred.write_text(json.dumps(self.make_predictions(dataset_dir, perfect=False)))
        proc = run_cli("score", "--pred", str(pred), "--dataset", str(dataset_dir))
        assert proc.returncode == 0
        assert "F1=0.0000" in proc.stdout

    def test_hand_counted_vector_prints_06(self, dataset_dir, tmp_path, monkeypatch):
        # exercise the same 0.6/0.6/0.6 oracle as score_trial via the CLI
        from iws.data import read_dataset

        ds = read_dataset(dataset_dir)[0]
        trial = ds.trials[0]
        from iws.postprocess import truth_bins

        truth = truth_bins(trial)
        ones = [b for b, v in enumerate(truth) if v == 1]
        # shift the predicted cluster so TP/FP/FN give 0.6 exactly: move 40%
        k = len(ones)
        shift = max(1, int(round(0.4 * k)))
        pred_bins = [0] * len(truth)
        for b in ones:
            pred_bins[b - shift] = 1
        tp = sum(1 for a, c in zip(pred_bins, truth) if a == c == 1)
        expected = tp / k
        doc = {"trials": [{"subject_id": ds.subject_id, "trial_index": 0,
                           "bins": pred_bins}]}
        pred = tmp_path / "pred.json"
        pred.write_text(json.dumps(doc))
        proc = run_cli("score", "--pred", str(pred), "--dataset", str(dataset_dir))
        assert proc.returncode == 0
        assert f"F1={expected:.4f}" in proc.stdout

    def test_length_mismatch_exits_3(self, dataset_dir, tmp_path):
        doc = self.make_predictions(dataset_dir)
        doc["trials"][0]["bins"] = doc["trials"][0]["bins"][:-2]
        pred = tmp_path / "pred.json"
        pred.write_text(json.dumps(doc))
        proc = run_cli("score", "--pred", str(pred), "--dataset", str(dataset_dir))
        assert proc.returncode == 3
