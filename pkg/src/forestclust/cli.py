"""Command-line interface.

Subcommands: cluster (hard or smoothed clustering of a feature CSV), train
(config-driven experiment with trace/report/checkpoint outputs), gradcheck
(finite-difference verification of the loss gradient), oracle-check (greedy
versus brute force), bench (timings).

Exit codes: 0 success, 1 usage or I/O or validation error, 2 infeasible
constraints, 3 verification failure.  Every command is deterministic given
its seed arguments except wall-clock fields in bench output and report
JSON.  --threads controls Monte-Carlo parallelism and never changes any
output byte (the FORESTCLUST_THREADS environment variable supplies the
default).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from importlib import resources

import numpy as np

from .core import (
    InfeasibleConstraints,
    SimilarityMatrix,
    membership_to_csv,
    partial_from_csv,
    partial_from_labeled_subset,
)
from .datasets import (
    Dataset,
    append_noise_dims,
    dataset_from_csv,
    gen_circles,
    gen_four_gaussians,
    gen_two_moons,
)
from .losses import fd_gradient_check
from .models import init_linear, init_mlp, pairwise_similarity
from .perturb import (
    PerturbationConfig,
    perturbed_constrained_forest,
    perturbed_forest,
    perturbed_membership,
)
from .solver import (
    brute_force_forest,
    constrained_max_spanning_forest,
    max_spanning_forest,
)
from .training import TrainConfig, save_checkpoint, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_VERIFICATION = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the exit-code contract
    # reserves 2 for infeasible constraints, so route usage errors through
    # our own exception instead.
    def error(self, message):
        raise UsageError(message)


def _default_threads() -> int:
    raw = os.environ.get("FORESTCLUST_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"FORESTCLUST_THREADS must be an integer, got {raw!r}")
    if value < 1:
        raise UsageError(f"FORESTCLUST_THREADS must be >= 1, got {value}")
    return value


def _add_threads_flag(sub):
    sub.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Monte-Carlo worker threads (default: FORESTCLUST_THREADS or 1); "
        "outputs are identical for any value",
    )


def _threads(args) -> int:
    threads = args.threads if args.threads is not None else _default_threads()
    if threads < 1:
        raise UsageError(f"--threads must be >= 1, got {threads}")
    return threads


def _fmt(value) -> str:
    """Canonical text form for trace/report numbers: shortest roundtrip."""
    return repr(float(value))


# ---------------------------------------------------------------- cluster


def cmd_cluster(args) -> int:
    dataset = dataset_from_csv(args.input)
    k = args.k
    partial = None
    if args.constraints:
        with open(args.constraints, "r", encoding="utf-8") as fh:
            partial = partial_from_csv(fh.read())
        if partial.n != dataset.n:
            raise UsageError(
                f"constraints are {partial.n}x{partial.n} but input has "
                f"{dataset.n} rows"
            )
    sigma = pairwise_similarity(dataset.X)
    prefix = args.out_prefix
    threads = _threads(args)

    if args.perturbed:
        config = PerturbationConfig(
            epsilon=args.epsilon, samples=args.samples, seed=args.seed
        )
        soft_membership = perturbed_membership(
            sigma, k, config, partial, use_bias=not args.no_bias, threads=threads
        )
        if partial is None:
            soft_forest, value = perturbed_forest(sigma, k, config, threads=threads)
        else:
            soft_forest, value = perturbed_constrained_forest(
                sigma, k, partial, config, use_bias=not args.no_bias, threads=threads
            )
        _write_float_grid(f"{prefix}_membership.csv", soft_membership.values)
        with open(f"{prefix}_edges.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "frequency"])
            vals = soft_forest.values
            for i in range(dataset.n):
                for j in range(i + 1, dataset.n):
                    if vals[i, j] > 0:
                        writer.writerow([i, j, _fmt(vals[i, j])])
    else:
        if partial is None:
            solution = max_spanning_forest(sigma, k)
        else:
            solution = constrained_max_spanning_forest(
                sigma, k, partial, use_bias=not args.no_bias
            )
        value = solution.value
        with open(f"{prefix}_membership.csv", "w", encoding="utf-8") as fh:
            fh.write(membership_to_csv(solution.membership))
        with open(f"{prefix}_edges.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j"])
            for i, j in solution.forest.edges:
                writer.writerow([i, j])
    print(f"value {_fmt(value)}")
    return EXIT_OK


def _write_float_grid(path, values: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row in values:
            writer.writerow([_fmt(v) for v in row])


# ------------------------------------------------------------------ train


class ConfigError(Exception):
    pass


def _expect_mapping(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    return obj


def _take(obj: dict, where: str, required: dict, optional: dict) -> dict:
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    out = {}
    for key, kind in required.items():
        if key not in obj:
            raise ConfigError(f"{where}: missing required key {key!r}")
        out[key] = _coerce(obj[key], kind, f"{where}.{key}")
    for key, (kind, default) in optional.items():
        out[key] = _coerce(obj[key], kind, f"{where}.{key}") if key in obj else default
    return out


def _coerce(value, kind, where: str):
    if kind == "mapping":
        return _expect_mapping(value, where)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if kind == "real":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false")
        return value
    if kind == "int_list":
        if not isinstance(value, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(f"{where}: expected a list of integers")
        return list(value)
    raise AssertionError(f"unhandled kind {kind}")


def _dataset_from_config(spec, where: str) -> Dataset:
    spec = _expect_mapping(spec, where)
    kind = spec.get("kind")
    if kind == "four_gaussians":
        fields = _take(
            spec,
            where,
            {"kind": "str", "seed": "int"},
            {
                "points_per_class": ("int", 15),
                "std": ("real", 0.2),
                "noise_dims": ("int", 0),
                "noise_seed": ("int", None),
            },
        )
        dataset = gen_four_gaussians(
            fields["seed"], fields["points_per_class"], fields["std"]
        )
        if fields["noise_dims"]:
            if fields["noise_seed"] is None:
                raise ConfigError(f"{where}: noise_dims needs noise_seed")
            dataset = append_noise_dims(
                dataset, fields["noise_dims"], fields["noise_seed"]
            )
        return dataset
    if kind == "two_moons":
        fields = _take(
            spec,
            where,
            {"kind": "str", "seed": "int", "n": "int"},
            {"noise_std": ("real", 0.0)},
        )
        return gen_two_moons(fields["n"], fields["noise_std"], fields["seed"])
    if kind == "circles":
        fields = _take(
            spec,
            where,
            {"kind": "str", "seed": "int", "n": "int", "gap": "real"},
            {"noise_std": ("real", 0.0)},
        )
        return gen_circles(
            fields["n"], fields["gap"], fields["seed"], fields["noise_std"]
        )
    if kind == "csv":
        fields = _take(spec, where, {"kind": "str", "path": "str"}, {})
        return dataset_from_csv(fields["path"])
    raise ConfigError(
        f"{where}.kind: expected four_gaussians | two_moons | circles | csv, "
        f"got {kind!r}"
    )


def _model_from_config(spec, d_in: int, default_seed: int, where: str):
    spec = _expect_mapping(spec, where)
    kind = spec.get("kind")
    if kind == "linear":
        fields = _take(
            spec,
            where,
            {"kind": "str", "d_out": "int"},
            {"init_seed": ("int", None)},
        )
        seed = fields["init_seed"] if fields["init_seed"] is not None else default_seed
        return init_linear(d_in, fields["d_out"], np.random.default_rng(seed))
    if kind == "mlp":
        fields = _take(
            spec,
            where,
            {"kind": "str", "d_out": "int", "hidden": "int_list"},
            {"init_seed": ("int", None)},
        )
        seed = fields["init_seed"] if fields["init_seed"] is not None else default_seed
        sizes = [d_in] + fields["hidden"] + [fields["d_out"]]
        return init_mlp(sizes, np.random.default_rng(seed))
    raise ConfigError(f"{where}.kind: expected linear | mlp, got {kind!r}")


def _perturbation_from_config(spec, where: str) -> PerturbationConfig:
    spec = _expect_mapping(spec, where)
    fields = _take(
        spec,
        where,
        {"epsilon": "real", "samples": "int"},
        {
            "seed": ("int", 0),
            "noise": ("str", "gaussian"),
            "coupled": ("bool", True),
        },
    )
    return PerturbationConfig(**fields)


def _train_config_from_config(spec, perturbation, where: str) -> TrainConfig:
    spec = _expect_mapping(spec, where)
    fields = _take(
        spec,
        where,
        {
            "k": "int",
            "batch_size": "int",
            "learning_rate": "real",
            "max_steps": "int",
        },
        {
            "optimizer": ("str", "sgd"),
            "beta1": ("real", 0.9),
            "beta2": ("real", 0.999),
            "weight_decay": ("real", 0.0),
            "eval_every": ("int", 25),
            "seed": ("int", 0),
            "labeled_fraction": ("real", 1.0),
            "use_bias": ("bool", True),
            "stop_on_zero_val_error": ("bool", False),
        },
    )
    try:
        return TrainConfig(perturbation=perturbation, **fields)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_run_config(path):
    """Parse and validate a train-command config file; unknown keys anywhere
    are rejected."""
    if path.startswith("bundled:"):
        name = path.split(":", 1)[1]
        ref = resources.files("forestclust").joinpath("configs", name)
        if not ref.is_file():
            raise ConfigError(f"no bundled config named {name!r}")
        text = ref.read_text(encoding="utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    raw = _expect_mapping(raw, "config")
    top = _take(
        raw,
        "config",
        {"dataset": "mapping", "model": "mapping", "train": "mapping",
         "perturbation": "mapping"},
        {"validation": ("mapping", None), "out_dir": ("str", ".")},
    )
    dataset = _dataset_from_config(top["dataset"], "dataset")
    val_dataset = None
    if top["validation"] is not None:
        val_dataset = _dataset_from_config(top["validation"], "validation")
    perturbation = _perturbation_from_config(top["perturbation"], "perturbation")
    train_config = _train_config_from_config(top["train"], perturbation, "train")
    model = _model_from_config(
        top["model"], dataset.d, train_config.seed, "model"
    )
    if dataset.labels is None:
        raise ConfigError("dataset: training requires labels")
    if val_dataset is not None and val_dataset.labels is None:
        raise ConfigError("validation: needs labels for error evaluation")
    return dataset, val_dataset, model, train_config, top["out_dir"]


def cmd_train(args) -> int:
    dataset, val_dataset, model, config, out_dir = load_run_config(args.config)
    if args.out_dir:
        out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    threads = _threads(args)
    report = train(
        model,
        dataset.X,
        dataset.labels,
        config,
        X_val=None if val_dataset is None else val_dataset.X,
        val_labels=None if val_dataset is None else val_dataset.labels,
        threads=threads,
    )

    trace_path = os.path.join(out_dir, "trace.csv")
    evals = {point.step: point for point in report.evals}
    with open(trace_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss", "train_error", "val_error"])
        if 0 in evals:
            point = evals[0]
            writer.writerow(["0", "", _fmt_or_empty(point.train_error),
                             _fmt_or_empty(point.val_error)])
        for idx, loss in enumerate(report.losses, start=1):
            point = evals.get(idx)
            writer.writerow(
                [
                    str(idx),
                    _fmt(loss),
                    _fmt_or_empty(point.train_error if point else None),
                    _fmt_or_empty(point.val_error if point else None),
                ]
            )

    report_path = os.path.join(out_dir, "report.json")
    blob = {
        "steps_run": report.steps_run,
        "skipped_batches": report.skipped_batches,
        "final_val_error": report.final_val_error(),
        "evals": [
            {
                "step": point.step,
                "train_error": _nan_to_none(point.train_error),
                "val_error": point.val_error,
            }
            for point in report.evals
        ],
        "wall_clock_seconds": report.wall_clock_seconds,
    }
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(blob, fh, indent=1)
        fh.write("\n")

    save_checkpoint(
        os.path.join(out_dir, "checkpoint.json"),
        model,
        report.optimizer,
        report.rng,
        report.steps_run,
    )
    final_val = report.final_val_error()
    print(
        f"steps {report.steps_run} skipped {report.skipped_batches} "
        f"final_val_error {'none' if final_val is None else _fmt(final_val)}"
    )
    return EXIT_OK


def _fmt_or_empty(value) -> str:
    if value is None:
        return ""
    value = float(value)
    if np.isnan(value):
        return ""
    return _fmt(value)


def _nan_to_none(value):
    if value is None:
        return None
    value = float(value)
    return None if np.isnan(value) else value


# -------------------------------------------------------------- gradcheck


def _random_instance(n: int, rng: np.random.Generator):
    a = rng.standard_normal((n, n))
    sigma = SimilarityMatrix(np.triu(a, 1) + np.triu(a, 1).T)
    # Random labeled subset: roughly half the points carry one of two or
    # three class ids; the rest stay unlabeled.
    labels = []
    classes = int(rng.integers(2, 4))
    for _ in range(n):
        labels.append(int(rng.integers(0, classes)) if rng.random() < 0.5 else None)
    return sigma, partial_from_labeled_subset(labels)


def cmd_gradcheck(args) -> int:
    threads = _threads(args)
    config = PerturbationConfig(
        epsilon=args.epsilon, samples=args.samples, seed=args.seed
    )
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for instance in range(args.instances):
        sigma, partial = _random_instance(args.n, rng)
        deviation = fd_gradient_check(
            sigma,
            args.k,
            partial,
            config,
            h=args.h,
            corrupt=args.corrupt,
            threads=threads,
        )
        worst = max(worst, deviation)
        print(f"instance {instance}: max deviation {deviation:.3e}")
    print(f"overall max deviation {worst:.3e} over {args.instances} instances")
    if worst >= args.threshold:
        print(f"FAIL: deviation {worst:.3e} >= threshold {args.threshold:.3e}",
              file=sys.stderr)
        return EXIT_VERIFICATION
    print("PASS")
    return EXIT_OK


# ----------------------------------------------------------- oracle-check


def cmd_oracle_check(args) -> int:
    if args.max_n > 9:
        raise UsageError(f"--max-n is capped at 9 (exhaustive oracle), got {args.max_n}")
    if args.max_n < 2:
        raise UsageError(f"--max-n must be >= 2, got {args.max_n}")
    rng = np.random.default_rng(args.seed)
    failures = 0

    matched = 0
    for _ in range(args.trials):
        n = int(rng.integers(2, args.max_n + 1))
        a = rng.standard_normal((n, n))
        sigma = SimilarityMatrix(np.triu(a, 1) + np.triu(a, 1).T)
        k = int(rng.integers(1, n + 1))
        fast = max_spanning_forest(sigma, k)
        slow = brute_force_forest(sigma, k)
        if (
            fast.forest.edges != slow.forest.edges
            or abs(fast.value - slow.value) > 1e-9
        ):
            failures += 1
        else:
            matched += 1
    print(f"unconstrained: {matched}/{args.trials} exact matches")

    con_matched = 0
    for _ in range(args.constrained_trials):
        n = int(rng.integers(3, args.max_n + 1))
        a = rng.standard_normal((n, n))
        sigma = SimilarityMatrix(np.triu(a, 1) + np.triu(a, 1).T)
        labels, k = _matroid_case(n, rng)
        partial = partial_from_labeled_subset(labels)
        fast_error = slow_error = None
        fast = slow = None
        try:
            fast = constrained_max_spanning_forest(sigma, k, partial)
        except InfeasibleConstraints:
            fast_error = True
        try:
            slow = brute_force_forest(sigma, k, partial)
        except InfeasibleConstraints:
            slow_error = True
        if fast_error or slow_error:
            if fast_error == slow_error:
                con_matched += 1
            else:
                failures += 1
            continue
        if fast.forest.edges == slow.forest.edges and abs(fast.value - slow.value) <= 1e-9:
            con_matched += 1
        else:
            failures += 1
    print(
        f"constrained (cluster-budget-tight labeled subsets): "
        f"{con_matched}/{args.constrained_trials} exact matches"
    )

    gaps = []
    for _ in range(args.gap_trials):
        n = int(rng.integers(3, args.max_n + 1))
        a = rng.standard_normal((n, n))
        sigma = SimilarityMatrix(np.triu(a, 1) + np.triu(a, 1).T)
        labels = [
            int(rng.integers(0, 3)) if rng.random() < 0.5 else None for _ in range(n)
        ]
        partial = partial_from_labeled_subset(labels)
        k = int(rng.integers(1, n + 1))
        try:
            slow = brute_force_forest(sigma, k, partial)
        except InfeasibleConstraints:
            continue
        try:
            fast = constrained_max_spanning_forest(sigma, k, partial)
        except InfeasibleConstraints:
            # The greedy's upfront budget check never misses on labeled
            # subsets, so reaching here means the oracle disagreed.
            failures += 1
            continue
        gaps.append(slow.value - fast.value)
    if gaps:
        gaps_arr = np.asarray(gaps)
        print(
            "free-cluster-count diagnostic (not asserted): "
            f"{int((gaps_arr > 1e-9).sum())}/{len(gaps)} instances below the "
            f"optimum, max gap {gaps_arr.max():.6f}, mean {gaps_arr.mean():.6f}"
        )
    if failures:
        print(f"FAIL: {failures} exact-match failures", file=sys.stderr)
        return EXIT_VERIFICATION
    print("PASS")
    return EXIT_OK


def _matroid_case(n: int, rng: np.random.Generator):
    """Sample a labeled subset plus a cluster count in one of the regimes
    where the constrained greedy is provably exact: either every label is
    distinct (any k, sometimes an infeasible k below the class count so the
    matching-error path gets exercised), or k equals the number of label
    groups plus unlabeled points (so every component merge is forced)."""
    if rng.random() < 0.5:
        count = int(rng.integers(0, n + 1))
        nodes = rng.permutation(n)[:count]
        labels = [None] * n
        for idx, node in enumerate(nodes):
            labels[int(node)] = idx
        k = int(rng.integers(1, n + 1))
        return labels, k
    classes = int(rng.integers(1, 4))
    labels = [
        int(rng.integers(0, classes)) if rng.random() < 0.6 else None
        for _ in range(n)
    ]
    groups = len(set(lbl for lbl in labels if lbl is not None))
    groups += sum(1 for lbl in labels if lbl is None)
    k = groups
    return labels, k


# ------------------------------------------------------------------ bench


def cmd_bench(args) -> int:
    threads_list = _parse_int_list(args.threads_list, "--threads-list")
    n_list = _parse_int_list(args.n_list, "--n-list")
    config = PerturbationConfig(epsilon=0.1, samples=args.samples, seed=args.seed)
    rows = [["n", "threads", "solve_seconds", "mc_seconds"]]
    rng = np.random.default_rng(args.seed)
    for n in n_list:
        if args.k > n:
            raise UsageError(f"--k {args.k} exceeds n={n}")
        a = rng.standard_normal((n, n))
        sigma = SimilarityMatrix(np.triu(a, 1) + np.triu(a, 1).T)
        start = time.perf_counter()
        reps = 5
        for _ in range(reps):
            max_spanning_forest(sigma, args.k)
        solve_seconds = (time.perf_counter() - start) / reps
        for threads in threads_list:
            start = time.perf_counter()
            perturbed_forest(sigma, args.k, config, threads=threads)
            mc_seconds = time.perf_counter() - start
            rows.append([str(n), str(threads), f"{solve_seconds:.6f}",
                         f"{mc_seconds:.6f}"])
    out = sys.stdout if args.out is None else open(args.out, "w", encoding="utf-8")
    try:
        writer = csv.writer(out)
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _parse_int_list(raw: str, flag: str) -> list:
    try:
        values = [int(part) for part in raw.split(",") if part != ""]
    except ValueError:
        raise UsageError(f"{flag} must be comma-separated integers, got {raw!r}")
    if not values or any(v < 1 for v in values):
        raise UsageError(f"{flag} must list positive integers, got {raw!r}")
    return values


# ------------------------------------------------------------------ main


def build_parser() -> _Parser:
    parser = _Parser(prog="forestclust", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    cluster = subs.add_parser("cluster", help="cluster a feature CSV")
    cluster.add_argument("--input", required=True, help="dataset CSV (x0..x{d-1},label)")
    cluster.add_argument("--k", type=int, required=True, help="number of clusters")
    cluster.add_argument("--constraints", help="partial membership CSV (1/0/*)")
    cluster.add_argument("--perturbed", action="store_true",
                         help="smoothed clustering instead of hard")
    cluster.add_argument("--epsilon", type=float, default=0.1)
    cluster.add_argument("--samples", type=int, default=100)
    cluster.add_argument("--seed", type=int, default=0)
    cluster.add_argument("--no-bias", action="store_true",
                         help="disable the constraint-ordering search bias")
    cluster.add_argument("--out-prefix", default="cluster",
                         help="output path prefix (default: cluster)")
    _add_threads_flag(cluster)
    cluster.set_defaults(func=cmd_cluster)

    train_cmd = subs.add_parser("train", help="run a training config")
    train_cmd.add_argument("--config", required=True,
                           help="config JSON path, or bundled:<name> for a "
                           "packaged config (e.g. bundled:linear_denoise.json)")
    train_cmd.add_argument("--out-dir", default=None,
                           help="override the config's output directory")
    _add_threads_flag(train_cmd)
    train_cmd.set_defaults(func=cmd_train)

    gradcheck = subs.add_parser("gradcheck",
                                help="finite-difference check of loss gradients")
    gradcheck.add_argument("--n", type=int, default=6)
    gradcheck.add_argument("--k", type=int, default=2)
    gradcheck.add_argument("--instances", type=int, default=20)
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--epsilon", type=float, default=0.1)
    gradcheck.add_argument("--samples", type=int, default=200)
    gradcheck.add_argument("--h", type=float, default=1e-6)
    gradcheck.add_argument("--threshold", type=float, default=1e-4)
    gradcheck.add_argument("--corrupt", type=float, default=0.0,
                           help=argparse.SUPPRESS)
    _add_threads_flag(gradcheck)
    gradcheck.set_defaults(func=cmd_gradcheck)

    oracle = subs.add_parser("oracle-check",
                             help="compare greedy against brute force")
    oracle.add_argument("--trials", type=int, default=1000)
    oracle.add_argument("--constrained-trials", type=int, default=500)
    oracle.add_argument("--gap-trials", type=int, default=100)
    oracle.add_argument("--max-n", type=int, default=7)
    oracle.add_argument("--seed", type=int, default=0)
    oracle.set_defaults(func=cmd_oracle_check)

    bench = subs.add_parser("bench", help="timing table for solver and MC ops")
    bench.add_argument("--n-list", default="8,16,32")
    bench.add_argument("--k", type=int, default=2)
    bench.add_argument("--samples", type=int, default=100)
    bench.add_argument("--threads-list", default="1,2")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", default=None, help="CSV path (default: stdout)")
    bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleConstraints as exc:
        print(f"infeasible constraints: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
