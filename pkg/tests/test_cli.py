"""Command-line interface: outputs, exit codes, and determinism."""

import csv
import json

import numpy as np
import pytest

from forestclust import load_checkpoint
from forestclust.cli import (
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFICATION,
    load_run_config,
    main,
)

THREE_POINTS = "x0,label\n0.0,\n1.0,\n10.0,\n"


@pytest.fixture
def three_point_csv(tmp_path):
    path = tmp_path / "points.csv"
    path.write_text(THREE_POINTS)
    return path


def run_config_json(out_dir, **train_overrides):
    """A small four-Gaussian run that finishes in well under a second."""
    train = dict(
        k=4,
        batch_size=12,
        learning_rate=0.05,
        max_steps=4,
        eval_every=2,
        seed=0,
    )
    train.update(train_overrides)
    return {
        "dataset": {"kind": "four_gaussians", "seed": 0, "points_per_class": 6},
        "validation": {"kind": "four_gaussians", "seed": 1, "points_per_class": 6},
        "model": {"kind": "linear", "d_out": 2},
        "train": train,
        "perturbation": {"epsilon": 0.1, "samples": 25, "seed": 0},
        "out_dir": str(out_dir),
    }


def write_config(tmp_path, blob, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(blob))
    return path


# ---------------------------------------------------------------------------
# cluster
# ---------------------------------------------------------------------------


def test_cluster_writes_membership_and_edges(three_point_csv, tmp_path, capsys):
    prefix = tmp_path / "hard"
    code = main(
        ["cluster", "--input", str(three_point_csv), "--k", "2",
         "--out-prefix", str(prefix)]
    )
    assert code == EXIT_OK
    assert capsys.readouterr().out == "value -1.0\n"
    assert (tmp_path / "hard_membership.csv").read_text() == "1,1,0\n1,1,0\n0,0,1\n"
    assert (tmp_path / "hard_edges.csv").read_bytes() == b"i,j\r\n0,1\r\n"


def test_cluster_with_k_equal_to_n_yields_singletons(three_point_csv, tmp_path, capsys):
    prefix = tmp_path / "solo"
    code = main(
        ["cluster", "--input", str(three_point_csv), "--k", "3",
         "--out-prefix", str(prefix)]
    )
    assert code == EXIT_OK
    assert capsys.readouterr().out == "value 0.0\n"
    assert (tmp_path / "solo_membership.csv").read_text() == "1,0,0\n0,1,0\n0,0,1\n"
    assert (tmp_path / "solo_edges.csv").read_bytes() == b"i,j\r\n"


def test_cluster_honors_forcing_constraints(three_point_csv, tmp_path, capsys):
    constraints = tmp_path / "same.csv"
    constraints.write_text("1,*,1\n*,1,*\n1,*,1\n")
    prefix = tmp_path / "forced"
    code = main(
        ["cluster", "--input", str(three_point_csv), "--k", "2",
         "--constraints", str(constraints), "--out-prefix", str(prefix)]
    )
    assert code == EXIT_OK
    # the two far-apart points are forced together, the near pair is split
    assert capsys.readouterr().out == "value -100.0\n"
    assert (tmp_path / "forced_membership.csv").read_text() == "1,0,1\n0,1,0\n1,0,1\n"


def test_cluster_exits_2_on_contradictory_constraints(three_point_csv, tmp_path, capsys):
    constraints = tmp_path / "contra.csv"
    constraints.write_text("1,1,0\n1,1,1\n0,1,1\n")
    code = main(
        ["cluster", "--input", str(three_point_csv), "--k", "2",
         "--constraints", str(constraints),
         "--out-prefix", str(tmp_path / "x")]
    )
    assert code == EXIT_INFEASIBLE
    assert "infeasible" in capsys.readouterr().err


def test_cluster_usage_errors_exit_1(three_point_csv, tmp_path, capsys):
    assert main(["cluster", "--input", str(tmp_path / "no.csv"), "--k", "2"]) == EXIT_USAGE
    assert main(["cluster", "--input", str(three_point_csv), "--k", "0",
                 "--out-prefix", str(tmp_path / "y")]) == EXIT_USAGE
    assert main(["cluster", "--input", str(three_point_csv), "--k", "4",
                 "--out-prefix", str(tmp_path / "z")]) == EXIT_USAGE
    wrong_size = tmp_path / "two.csv"
    wrong_size.write_text("1,*\n*,1\n")
    assert main(["cluster", "--input", str(three_point_csv), "--k", "2",
                 "--constraints", str(wrong_size),
                 "--out-prefix", str(tmp_path / "w")]) == EXIT_USAGE
    capsys.readouterr()


def test_cluster_rejects_unknown_subcommand_and_flags(capsys):
    assert main(["explode"]) == EXIT_USAGE
    assert main(["cluster", "--nope"]) == EXIT_USAGE
    capsys.readouterr()


def test_perturbed_cluster_is_deterministic_and_thread_invariant(
    three_point_csv, tmp_path, capsys
):
    outputs = []
    for run, threads in (("a", "1"), ("b", "1"), ("c", "3")):
        prefix = tmp_path / run
        code = main(
            ["cluster", "--input", str(three_point_csv), "--k", "2",
             "--perturbed", "--epsilon", "0.5", "--samples", "64",
             "--seed", "7", "--threads", threads, "--out-prefix", str(prefix)]
        )
        assert code == EXIT_OK
        outputs.append(
            (
                capsys.readouterr().out,
                (tmp_path / f"{run}_membership.csv").read_text(),
                (tmp_path / f"{run}_edges.csv").read_text(),
            )
        )
    assert outputs[0] == outputs[1] == outputs[2]
    membership = np.array(
        [[float(v) for v in line.split(",")]
         for line in outputs[0][1].strip().splitlines()]
    )
    assert membership.shape == (3, 3)
    assert np.all(membership >= 0.0) and np.all(membership <= 1.0)
    assert np.array_equal(np.diag(membership), np.ones(3))


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def read_trace(out_dir):
    with open(out_dir / "trace.csv", newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_train_writes_trace_report_and_checkpoint(tmp_path, capsys):
    out_dir = tmp_path / "run"
    config = write_config(tmp_path, run_config_json(out_dir))
    code = main(["train", "--config", str(config)])
    assert code == EXIT_OK
    printed = capsys.readouterr().out
    assert printed.startswith("steps 4 ")

    rows = read_trace(out_dir)
    assert rows[0] == ["step", "loss", "train_error", "val_error"]
    assert len(rows) == 5
    steps = [row[0] for row in rows[1:]]
    assert steps == ["1", "2", "3", "4"]
    for step, row in zip(steps, rows[1:]):
        assert float(row[1]) >= 0.0  # loss column always present
        if int(step) % 2 == 0:  # eval_every=2
            assert row[2] != "" and row[3] != ""
        else:
            assert row[2] == "" and row[3] == ""

    report = json.loads((out_dir / "report.json").read_text())
    assert report["steps_run"] == 4
    assert set(report) == {
        "steps_run", "skipped_batches", "final_val_error", "evals",
        "wall_clock_seconds",
    }
    assert [e["step"] for e in report["evals"]] == [2, 4]

    model, _, _, step = load_checkpoint(out_dir / "checkpoint.json")
    assert step == 4
    assert model.arch == ["linear", 2, 2]


def test_train_reruns_are_byte_identical_across_threads(tmp_path, capsys):
    traces = []
    for name, threads in (("r1", "1"), ("r2", "1"), ("r8", "8")):
        out_dir = tmp_path / name
        config = write_config(tmp_path, run_config_json(out_dir), f"{name}.json")
        assert main(["train", "--config", str(config), "--threads", threads]) == EXIT_OK
        traces.append((out_dir / "trace.csv").read_bytes())
    capsys.readouterr()
    assert traces[0] == traces[1] == traces[2]


def test_train_with_zero_steps_checkpoints_initial_weights(tmp_path, capsys):
    out_dir = tmp_path / "zero"
    config = write_config(tmp_path, run_config_json(out_dir, max_steps=0))
    assert main(["train", "--config", str(config)]) == EXIT_OK
    capsys.readouterr()
    rows = read_trace(out_dir)
    assert rows[0] == ["step", "loss", "train_error", "val_error"]
    assert len(rows) == 2
    assert rows[1][0] == "0"
    assert rows[1][1] == ""  # no loss before the first step
    assert rows[1][2] != "" and rows[1][3] != ""
    _, _, _, step = load_checkpoint(out_dir / "checkpoint.json")
    assert step == 0


def test_train_out_dir_flag_overrides_config(tmp_path, capsys):
    configured = tmp_path / "configured"
    actual = tmp_path / "actual"
    config = write_config(tmp_path, run_config_json(configured))
    assert main(["train", "--config", str(config), "--out-dir", str(actual)]) == EXIT_OK
    capsys.readouterr()
    assert (actual / "trace.csv").exists()
    assert not configured.exists()


def test_train_rejects_unknown_config_keys(tmp_path, capsys):
    blob = run_config_json(tmp_path / "o1")
    blob["momentum"] = 0.9
    assert main(["train", "--config", str(write_config(tmp_path, blob, "a.json"))]) == EXIT_USAGE
    assert "unknown keys" in capsys.readouterr().err

    blob = run_config_json(tmp_path / "o2")
    blob["train"]["n_epochs"] = 5
    assert main(["train", "--config", str(write_config(tmp_path, blob, "b.json"))]) == EXIT_USAGE
    assert "n_epochs" in capsys.readouterr().err


def test_train_rejects_bad_config_values(tmp_path, capsys):
    cases = []
    blob = run_config_json(tmp_path / "o3", learning_rate=-0.5)
    cases.append(write_config(tmp_path, blob, "neg_lr.json"))
    blob = run_config_json(tmp_path / "o4", k="four")
    cases.append(write_config(tmp_path, blob, "string_k.json"))
    blob = run_config_json(tmp_path / "o5")
    del blob["train"]["k"]
    cases.append(write_config(tmp_path, blob, "missing_k.json"))
    blob = run_config_json(tmp_path / "o6")
    blob["dataset"] = {"kind": "mystery", "seed": 0}
    cases.append(write_config(tmp_path, blob, "bad_dataset.json"))
    for path in cases:
        assert main(["train", "--config", str(path)]) == EXIT_USAGE
    capsys.readouterr()


def test_train_rejects_unreadable_or_invalid_config_files(tmp_path, capsys):
    assert main(["train", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["train", "--config", str(broken)]) == EXIT_USAGE
    assert main(["train", "--config", "bundled:no_such_config.json"]) == EXIT_USAGE
    capsys.readouterr()


def test_train_requires_labeled_dataset(tmp_path, capsys):
    raw = tmp_path / "points.csv"
    raw.write_text(THREE_POINTS)
    blob = run_config_json(tmp_path / "o7", k=2, batch_size=3, max_steps=1)
    blob["dataset"] = {"kind": "csv", "path": str(raw)}
    del blob["validation"]
    assert main(["train", "--config", str(write_config(tmp_path, blob))]) == EXIT_USAGE
    assert "labels" in capsys.readouterr().err


def test_bundled_denoise_config_parses_with_documented_settings():
    dataset, val_dataset, model, config, _ = load_run_config(
        "bundled:linear_denoise.json"
    )
    assert dataset.n == 60 and dataset.d == 4  # 2 signal + 2 noise dims
    assert val_dataset is not None and val_dataset.n == 60
    assert model.arch == ["linear", 4, 2]
    assert config.k == 4
    assert config.batch_size == 32
    assert config.learning_rate == 0.01
    assert config.max_steps == 500
    assert config.stop_on_zero_val_error is True
    assert config.perturbation.epsilon == 0.1
    assert config.perturbation.samples == 1000


# ---------------------------------------------------------------------------
# gradcheck
# ---------------------------------------------------------------------------


def test_gradcheck_passes_on_random_instances(capsys):
    code = main(
        ["gradcheck", "--instances", "4", "--samples", "100", "--seed", "0"]
    )
    assert code == EXIT_OK
    assert "PASS" in capsys.readouterr().out


def test_gradcheck_rejects_zero_epsilon(capsys):
    code = main(["gradcheck", "--epsilon", "0", "--instances", "1"])
    assert code == EXIT_USAGE
    capsys.readouterr()


def test_gradcheck_detects_a_corrupted_gradient(capsys):
    code = main(
        ["gradcheck", "--instances", "2", "--samples", "50", "--corrupt", "1e-3"]
    )
    assert code == EXIT_VERIFICATION
    assert "FAIL" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# oracle-check
# ---------------------------------------------------------------------------


def test_oracle_check_matches_brute_force(capsys):
    code = main(
        ["oracle-check", "--trials", "30", "--constrained-trials", "30",
         "--gap-trials", "5", "--max-n", "5"]
    )
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "unconstrained: 30/30 exact matches" in out
    assert "constrained" in out and "30/30" in out
    assert "PASS" in out


def test_oracle_check_with_zero_trials_exits_cleanly(capsys):
    code = main(
        ["oracle-check", "--trials", "0", "--constrained-trials", "0",
         "--gap-trials", "0"]
    )
    assert code == EXIT_OK
    assert "0/0" in capsys.readouterr().out


def test_oracle_check_caps_brute_force_size(capsys):
    assert main(["oracle-check", "--max-n", "10"]) == EXIT_USAGE
    assert main(["oracle-check", "--max-n", "1"]) == EXIT_USAGE
    capsys.readouterr()


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def test_bench_emits_one_row_per_size_and_thread_count(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    code = main(
        ["bench", "--n-list", "5,7", "--threads-list", "1,2",
         "--samples", "20", "--out", str(out)]
    )
    assert code == EXIT_OK
    capsys.readouterr()
    with open(out, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n", "threads", "solve_seconds", "mc_seconds"]
    assert [(r[0], r[1]) for r in rows[1:]] == [
        ("5", "1"), ("5", "2"), ("7", "1"), ("7", "2")
    ]
    for row in rows[1:]:
        assert float(row[2]) >= 0.0 and float(row[3]) >= 0.0


def test_bench_validates_its_flag_lists(capsys):
    assert main(["bench", "--n-list", "a,b"]) == EXIT_USAGE
    assert main(["bench", "--n-list", "4", "--k", "9"]) == EXIT_USAGE
    assert main(["bench", "--threads-list", "0"]) == EXIT_USAGE
    capsys.readouterr()


# ---------------------------------------------------------------------------
# threads environment variable
# ---------------------------------------------------------------------------


def test_threads_env_var_supplies_default_without_changing_output(
    three_point_csv, tmp_path, capsys, monkeypatch
):
    prefix_a = tmp_path / "env"
    monkeypatch.setenv("FORESTCLUST_THREADS", "2")
    code = main(
        ["cluster", "--input", str(three_point_csv), "--k", "2",
         "--perturbed", "--samples", "32", "--out-prefix", str(prefix_a)]
    )
    assert code == EXIT_OK
    out_env = capsys.readouterr().out

    monkeypatch.delenv("FORESTCLUST_THREADS")
    prefix_b = tmp_path / "plain"
    code = main(
        ["cluster", "--input", str(three_point_csv), "--k", "2",
         "--perturbed", "--samples", "32", "--out-prefix", str(prefix_b)]
    )
    assert code == EXIT_OK
    assert capsys.readouterr().out == out_env
    assert (tmp_path / "env_membership.csv").read_text() == (
        tmp_path / "plain_membership.csv"
    ).read_text()


def test_threads_env_var_is_validated(three_point_csv, tmp_path, capsys, monkeypatch):
    for bad in ("zero?", "0"):
        monkeypatch.setenv("FORESTCLUST_THREADS", bad)
        code = main(
            ["cluster", "--input", str(three_point_csv), "--k", "2",
             "--out-prefix", str(tmp_path / "t")]
        )
        assert code == EXIT_USAGE
    capsys.readouterr()
