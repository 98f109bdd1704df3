"""End-to-end tests of the command-line harness.

These drive the real subcommands through click's test runner against small
datasets: the two-class timing-coded synthetic generator (no network needed)
and a tiny two-class image directory in IDX format (full train -> record ->
evaluate pipeline). Oracle notes:

- reports must be reproducible byte-for-byte: every output is a pure function
  of the configuration, so a rerun into a fresh directory must produce
  identical report.csv / ad_terms.csv / confusion.csv;
- a single-member "ensemble" (or duplicated seeds) leaves the geometric
  combiner equal to its member, so ensemble accuracy matches the member's and
  the measured diversity term is zero;
- a population map with an empty class must fail only the cells that need it
  (rate decoders), leave the count-likelihood and vote decoders running, and
  flip the exit code.
"""

import hashlib
import json
import os
import shutil

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from snnens.cli import main
from snnens.core import PopulationMap
from snnens.io import config_digest, load_config, save_model, write_idx

from _datasets import make_standin_arrays

RUNNER = CliRunner()

REPORT_COLUMNS = [
    "decoder", "combiner", "status", "member_accuracies",
    "avg_member_accuracy", "ensemble_accuracy", "ensemble_error",
    "avg_member_error", "ambiguity", "residual_max", "error",
]

# (decoder, combiner) cells that are undefined by construction: the geometric
# probability combiner needs probability decoders, the rate-product combiner
# needs per-window rate estimates.
NA_CELLS = {
    ("hmfr", "ngm"), ("pv", "ngm"), ("cfr", "ngm"),
    ("hmfr", "gm"), ("norm_hmfr", "gm"), ("bayes", "gm"), ("pv", "gm"),
}


def _write_cfg(path, mapping):
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(mapping, fh)
    return str(path)


def _read_csv(path):
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _sha(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _invoke(args):
    return RUNNER.invoke(main, args, catch_exceptions=False)


# ---------------------------------------------------------------------------
# synthetic-dataset pipeline (no trained networks involved)


def _synth_cfg_mapping(out_dir, seeds):
    return {
        "dataset": {"kind": "synthetic", "n_per_class": 25, "n_neurons": 12,
                    "duration_ms": 350.0},
        "training": {"seeds": list(seeds)},
        "decode": {"window_ms_default": 350.0, "window_ms_bayes": 10.0},
        "output": {"dir": str(out_dir)},
    }


@pytest.fixture(scope="module")
def synth_eval(tmp_path_factory):
    """One full `evaluate` run on the synthetic dataset with three members."""
    root = tmp_path_factory.mktemp("synth")
    out_dir = root / "run"
    cfg_path = _write_cfg(root / "cfg.yaml", _synth_cfg_mapping(out_dir, [0, 1, 2]))
    result = _invoke(["evaluate", "--config", cfg_path])
    assert result.exit_code == 0, result.output
    return {"root": root, "cfg": cfg_path, "out": out_dir, "result": result,
            "rows": _read_csv(out_dir / "report.csv")}


class TestEvaluateSynthetic:
    def test_report_shape_and_statuses(self, synth_eval):
        rows = synth_eval["rows"]
        assert list(rows[0].keys()) == REPORT_COLUMNS
        assert len(rows) == 25  # 5 decoders x 5 combiners
        for row in rows:
            cell = (row["decoder"], row["combiner"])
            assert row["status"] == ("n/a" if cell in NA_CELLS else "ok"), cell
            assert row["error"] == ""
            if row["status"] == "ok":
                acc = float(row["ensemble_accuracy"])
                assert 0.0 <= acc <= 1.0
                members = [float(a) for a in row["member_accuracies"].split("|")]
                assert len(members) == 3
                assert float(row["avg_member_accuracy"]) == pytest.approx(
                    np.mean(members))

    def test_decomposition_rows_only_for_guarantee_cells(self, synth_eval):
        ad = _read_csv(synth_eval["out"] / "ad_terms.csv")
        cells = {(r["decoder"], r["combiner"]) for r in ad}
        assert cells == {("norm_hmfr", "ngm"), ("bayes", "ngm"), ("cfr", "gm")}
        for cell in cells:
            per_cell = [r for r in ad if (r["decoder"], r["combiner"]) == cell]
            assert len(per_cell) == 50  # 25 per class x 2 classes
            for r in per_cell:
                ens = float(r["ensemble_error"])
                avg = float(r["avg_member_error"])
                amb = float(r["ambiguity"])
                assert abs(ens - (avg - amb)) <= 1e-9
                assert ens <= avg + 1e-9

    def test_confusion_counts_cover_every_example(self, synth_eval):
        conf = _read_csv(synth_eval["out"] / "confusion.csv")
        ok_cells = {(r["decoder"], r["combiner"]) for r in synth_eval["rows"]
                    if r["status"] == "ok"}
        for cell in ok_cells:
            total = sum(int(r["count"]) for r in conf
                        if (r["decoder"], r["combiner"]) == cell)
            assert total == 50

    def test_run_meta(self, synth_eval):
        meta = json.loads((synth_eval["out"] / "run_meta.json").read_text())
        assert meta["config_digest"] == config_digest(
            load_config(synth_eval["cfg"]))
        assert meta["seeds"] == [0, 1, 2]
        assert meta["n_test_examples"] == 50
        assert meta["n_classes"] == 2
        assert meta["member_weights"] == pytest.approx([1 / 3] * 3)
        report_txt = (synth_eval["out"] / "report.txt").read_text()
        assert meta["config_digest"] in report_txt
        assert result_quiet_tail(synth_eval["result"].output) in report_txt

    def test_rerun_is_byte_identical(self, synth_eval):
        out2 = synth_eval["root"] / "rerun"
        result = _invoke(["evaluate", "--config", synth_eval["cfg"],
                          "--out", str(out2)])
        assert result.exit_code == 0, result.output
        for name in ("report.csv", "ad_terms.csv", "confusion.csv"):
            assert _sha(out2 / name) == _sha(synth_eval["out"] / name), name

    def test_limit_caps_test_examples(self, synth_eval, tmp_path):
        out = tmp_path / "limited"
        result = _invoke(["evaluate", "--config", synth_eval["cfg"],
                          "--out", str(out), "--limit", "7"])
        assert result.exit_code == 0, result.output
        meta = json.loads((out / "run_meta.json").read_text())
        assert meta["n_test_examples"] == 7

    def test_single_member_ensemble_equals_member(self, synth_eval, tmp_path):
        out = tmp_path / "solo"
        result = _invoke(["evaluate", "--config", synth_eval["cfg"],
                          "--out", str(out), "--members", "1"])
        assert result.exit_code == 0, result.output
        for row in _read_csv(out / "report.csv"):
            if row["combiner"] == "ngm" and row["status"] == "ok":
                assert row["ensemble_accuracy"] == row["avg_member_accuracy"]
                assert abs(float(row["ambiguity"])) <= 1e-9

    def test_duplicated_seeds_have_zero_diversity(self, tmp_path):
        out = tmp_path / "dup"
        cfg = _write_cfg(tmp_path / "dup.yaml", _synth_cfg_mapping(out, [0, 0]))
        result = _invoke(["evaluate", "--config", cfg])
        assert result.exit_code == 0, result.output
        saw_guarantee_cell = False
        for row in _read_csv(out / "report.csv"):
            if row["status"] != "ok":
                continue
            a, b = row["member_accuracies"].split("|")
            assert a == b
            if row["ambiguity"]:
                saw_guarantee_cell = True
                assert abs(float(row["ambiguity"])) <= 1e-9
                assert row["ensemble_accuracy"] == row["avg_member_accuracy"]
        assert saw_guarantee_cell

    def test_members_over_configured_seeds_rejected(self, synth_eval, tmp_path):
        result = RUNNER.invoke(main, ["evaluate", "--config", synth_eval["cfg"],
                                      "--out", str(tmp_path / "x"),
                                      "--members", "5"])
        assert result.exit_code != 0
        assert "exceeds" in result.output

    def test_unknown_decoder_rejected(self, tmp_path):
        mapping = _synth_cfg_mapping(tmp_path / "out", [0])
        mapping["decode"]["decoders"] = ["hmfr", "nope"]
        cfg = _write_cfg(tmp_path / "bad.yaml", mapping)
        result = RUNNER.invoke(main, ["evaluate", "--config", cfg])
        assert result.exit_code != 0
        assert "nope" in result.output

    def test_ad_report_summarizes_guarantee_cells(self, synth_eval):
        result = _invoke(["ad-report", "--out", str(synth_eval["out"])])
        assert result.exit_code == 0, result.output
        for needle in ("bayes", "norm_hmfr", "cfr", "ok"):
            assert needle in result.output


def result_quiet_tail(output):
    """Last line of the echoed table (stable between echo and report.txt)."""
    return output.strip().splitlines()[-1]


class TestSynthAndValidate:
    def test_synth_then_validate(self, tmp_path):
        path = tmp_path / "records.jsonl"
        result = _invoke(["synth", "--out", str(path), "--n-per-class", "5",
                          "--n-neurons", "8"])
        assert result.exit_code == 0
        assert "wrote 10 records" in result.output

        check = _invoke(["validate", str(path)])
        assert check.exit_code == 0
        assert "10 records ok" in check.output

    def test_validate_flags_corrupt_file(self, tmp_path):
        good = tmp_path / "good.jsonl"
        _invoke(["synth", "--out", str(good), "--n-per-class", "2",
                 "--n-neurons", "4"])
        bad = tmp_path / "bad.jsonl"
        bad.write_text(good.read_text() + "{not json\n")
        result = RUNNER.invoke(main, ["validate", str(good), str(bad)])
        assert result.exit_code == 1
        assert "INVALID" in result.output
        assert "good.jsonl: 4 records ok" in result.output


# ---------------------------------------------------------------------------
# IDX-dataset pipeline (train -> record -> evaluate on two digit classes)


def _two_class_idx_dir(directory):
    """Write a tiny two-class IDX dataset (digits 0 and 1 only)."""
    x_train, y_train, x_test, y_test = make_standin_arrays(220, 80, seed=7)
    keep_train = np.flatnonzero(y_train <= 1)[:24]
    keep_test = np.flatnonzero(y_test <= 1)[:8]
    x_train, y_train = x_train[keep_train], y_train[keep_train]
    x_test, y_test = x_test[keep_test], y_test[keep_test]
    assert set(y_train) == {0, 1} and set(y_test) == {0, 1}
    os.makedirs(directory, exist_ok=True)
    write_idx(os.path.join(directory, "train-images-idx3-ubyte"),
              os.path.join(directory, "train-labels-idx1-ubyte"),
              x_train, y_train)
    write_idx(os.path.join(directory, "t10k-images-idx3-ubyte"),
              os.path.join(directory, "t10k-labels-idx1-ubyte"),
              x_test, y_test)
    return directory


def _idx_cfg_mapping(idx_dir, out_dir):
    return {
        "dataset": {"kind": "idx", "dir": str(idx_dir)},
        "network": {"n_exc": 16, "w_inh_exc": 70.0},
        "stdp": {"theta_plus_mv": 0.1},
        "encode": {"duration_ms": 150.0},
        "training": {"seeds": [0, 1]},
        "record": {"trials": 2},
        "decode": {"window_ms_default": 150.0, "window_ms_bayes": 10.0},
        "output": {"dir": str(out_dir)},
    }


@pytest.fixture(scope="module")
def idx_run(tmp_path_factory):
    """Trained-and-recorded two-member run on the two-class IDX dataset."""
    root = tmp_path_factory.mktemp("idx")
    idx_dir = _two_class_idx_dir(str(root / "data"))
    out_dir = root / "run"
    cfg_path = _write_cfg(root / "cfg.yaml", _idx_cfg_mapping(idx_dir, out_dir))

    trained = _invoke(["train", "--config", cfg_path])
    assert trained.exit_code == 0, trained.output
    recorded = _invoke(["record", "--config", cfg_path, "--split", "test"])
    assert recorded.exit_code == 0, recorded.output
    return {"root": root, "idx_dir": idx_dir, "cfg": cfg_path, "out": out_dir,
            "train_output": trained.output}


class TestIdxPipeline:
    def test_train_writes_member_artifacts(self, idx_run):
        assert "trained on 24 images" in idx_run["train_output"]
        for seed in (0, 1):
            mdir = idx_run["out"] / f"member-{seed:05d}"
            for name in ("network.npz", "population.npz",
                         "records_train.jsonl"):
                assert (mdir / name).exists(), name

    def test_record_writes_test_split(self, idx_run):
        for seed in (0, 1):
            path = idx_run["out"] / f"member-{seed:05d}" / "records_test.jsonl"
            assert path.exists()
            check = _invoke(["validate", str(path)])
            assert check.exit_code == 0
            # 8 examples x 2 trials
            assert "16 records ok" in check.output

    def test_retraining_is_deterministic(self, idx_run):
        out2 = idx_run["root"] / "retrain"
        result = _invoke(["train", "--config", idx_run["cfg"],
                          "--out", str(out2), "--threads", "2"])
        assert result.exit_code == 0, result.output
        for seed in (0, 1):
            for name in ("network.npz", "population.npz"):
                assert _sha(out2 / f"member-{seed:05d}" / name) == _sha(
                    idx_run["out"] / f"member-{seed:05d}" / name), (seed, name)

    def test_single_seed_override_trains_one_member(self, idx_run):
        out2 = idx_run["root"] / "solo-train"
        result = _invoke(["train", "--config", idx_run["cfg"],
                          "--out", str(out2), "--seed", "1"])
        assert result.exit_code == 0, result.output
        assert (out2 / "member-00001" / "network.npz").exists()
        assert not (out2 / "member-00000").exists()

    def test_evaluate_full_grid(self, idx_run):
        result = _invoke(["evaluate", "--config", idx_run["cfg"]])
        assert result.exit_code == 0, result.output
        rows = _read_csv(idx_run["out"] / "report.csv")
        assert len(rows) == 25
        for row in rows:
            cell = (row["decoder"], row["combiner"])
            assert row["status"] == ("n/a" if cell in NA_CELLS else "ok"), cell
        meta = json.loads((idx_run["out"] / "run_meta.json").read_text())
        assert meta["n_classes"] == 2
        assert meta["n_test_examples"] == 8

    def test_empty_class_fails_only_population_decoders(self, idx_run):
        out_bad = idx_run["root"] / "bad-population"
        for seed in (0, 1):
            src = idx_run["out"] / f"member-{seed:05d}"
            dst = out_bad / f"member-{seed:05d}"
            shutil.copytree(src, dst)
            # All neurons parked on class 0: class 1 has no members.
            save_model(dst / "population.npz",
                       PopulationMap(np.zeros(16, dtype=np.int64), n_classes=2))
        result = RUNNER.invoke(main, ["evaluate", "--config", idx_run["cfg"],
                                      "--out", str(out_bad)])
        assert result.exit_code == 1
        rows = _read_csv(out_bad / "report.csv")
        by_status = {}
        for row in rows:
            by_status.setdefault(row["status"], set()).add(row["decoder"])
            if row["status"] == "failed":
                assert "without member neurons" in row["error"]
            else:
                assert row["error"] == ""
        assert by_status["failed"] == {"hmfr", "norm_hmfr", "cfr"}
        assert by_status["ok"] == {"bayes", "pv"}

    def test_record_without_trained_member_fails(self, idx_run, tmp_path):
        result = RUNNER.invoke(main, ["record", "--config", idx_run["cfg"],
                                      "--split", "test",
                                      "--out", str(tmp_path / "none")])
        assert result.exit_code == 1
        assert "FAILED" in result.output

    def test_evaluate_without_records_fails(self, idx_run, tmp_path):
        result = RUNNER.invoke(main, ["evaluate", "--config", idx_run["cfg"],
                                      "--out", str(tmp_path / "none")])
        assert result.exit_code != 0
        assert "missing" in result.output
