"""Command-line pipeline: gen -> cluster -> estimate -> plan -> labels -> train -> report.

Every stage reads and writes plain files (CSV/JSON), so expensive stages can
be reused across sweeps and any stage can be rerun in isolation. The
``pipeline`` subcommand drives all stages from one flat key=value config file
and produces byte-identical artifacts to running the stages by hand.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import datagen, divergence, smoothing, trainer
from .clustering import fit_gmm, gmm_assign, kmeans, preprocess_features
from .data import (
    Clustering,
    Dataset,
    DomainError,
    NumericalError,
    load_clustering_json,
    load_dataset_csv,
    load_estimate_json,
    load_plan_json,
    load_soft_labels_csv,
    save_clustering_json,
    save_dataset_csv,
    save_estimate_json,
    save_plan_json,
    save_soft_labels_csv,
    validate_dataset,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4

MODE_CHOICES = ("none", "uniform", "structural", "reversed-structural")


# ---------------------------------------------------------------------------
# Stage implementations (shared by subcommands and the pipeline driver)
# ---------------------------------------------------------------------------


def stage_gen(spec_path, n: int, seed: int, out_dir: Path) -> dict:
    spec = datagen.load_spec_json(spec_path) if spec_path else datagen.default_spec()
    train, test = datagen.generate(spec, n, seed=seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    extra = {"spec_hash": datagen.spec_hash(spec), "split_seed": seed}
    save_dataset_csv(train, out_dir / "train.csv", seed=seed, extra_meta=extra)
    save_dataset_csv(test, out_dir / "test.csv", seed=seed, extra_meta=extra)
    datagen.save_spec_json(spec, out_dir / "spec_used.json")
    return {"train": out_dir / "train.csv", "test": out_dir / "test.csv"}


def stage_cluster(
    dataset_path, algo: str, num_clusters: int, pca_dim, seed: int, out_path: Path
) -> None:
    ds = load_dataset_csv(dataset_path)
    problems = validate_dataset(ds)
    if problems:
        raise DomainError(f"{dataset_path}: " + "; ".join(problems[:5]))
    points, preprocessing = preprocess_features(
        ds.features, do_standardize=True, pca_dim=pca_dim
    )
    if algo == "kmeans":
        clustering = kmeans(points, num_clusters, seed=seed)
    elif algo == "pca+gmm":
        if pca_dim is None:
            raise DomainError("algo pca+gmm requires --pca-dim")
        model = fit_gmm(points, num_clusters, seed=seed)
        clustering = gmm_assign(model, points)
    else:
        raise DomainError(f"unknown clustering algo {algo!r}")
    clustering = Clustering(
        assignments=clustering.assignments,
        num_clusters=clustering.num_clusters,
        weights=clustering.weights,
        algorithm=algo,
        seed=seed,
        preprocessing=preprocessing,
    )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_clustering_json(clustering, out_path)


def _rebuild_feature_space(ds: Dataset, preprocessing: dict) -> tuple[np.ndarray, str]:
    points, _ = preprocess_features(
        ds.features,
        do_standardize=preprocessing.get("standardize", False),
        pca_dim=preprocessing.get("pca_dim"),
    )
    tag_parts = []
    if preprocessing.get("standardize"):
        tag_parts.append("standardize")
    if preprocessing.get("pca_dim") is not None:
        tag_parts.append(f"pca{preprocessing['pca_dim']}")
    return points, "+".join(tag_parts) or "raw"


def stage_estimate(
    dataset_path, clustering_path, delta_estimator: str, out_path: Path
) -> None:
    ds = load_dataset_csv(dataset_path)
    clustering = load_clustering_json(clustering_path)
    points, tag = _rebuild_feature_space(ds, clustering.preprocessing)
    estimate = divergence.cluster_ber(
        ds,
        clustering,
        points=points,
        delta_estimator=delta_estimator,
        feature_space=tag,
    )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_estimate_json(estimate, out_path)


def stage_plan(
    estimate_path,
    clustering_path,
    alpha: float,
    betas: list[float],
    mode: str,
    out_dir: Path,
) -> list[Path]:
    clustering = load_clustering_json(clustering_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if mode == "none":
        plan = smoothing.none_plan(clustering.num_clusters, _plan_classes(estimate_path))
        path = out_dir / "none.json"
        save_plan_json(plan, path)
        return [path]
    if mode == "uniform":
        plan = smoothing.uniform_plan(
            alpha, clustering.num_clusters, _plan_classes(estimate_path)
        )
        path = out_dir / f"uniform_a{alpha:g}.json"
        save_plan_json(plan, path)
        return [path]
    estimate = load_estimate_json(estimate_path)
    for beta in betas:
        config = smoothing.SmoothingConfig(
            alpha=alpha, beta=beta, num_classes=estimate.num_classes
        )
        plan = smoothing.solve_strengths(estimate, clustering.weights, config)
        if mode == "reversed-structural":
            plan = smoothing.reverse_plan(plan, clustering.weights)
            path = out_dir / f"reversed_a{alpha:g}_b{beta:g}.json"
        else:
            path = out_dir / f"structural_a{alpha:g}_b{beta:g}.json"
        save_plan_json(plan, path)
        written.append(path)
    return written


def _plan_classes(estimate_path) -> int:
    return load_estimate_json(estimate_path).num_classes


def stage_labels(dataset_path, clustering_path, plan_path, out_path: Path) -> None:
    ds = load_dataset_csv(dataset_path)
    plan = load_plan_json(plan_path)
    clustering = load_clustering_json(clustering_path) if clustering_path else None
    matrix = smoothing.soft_labels(ds, clustering, plan)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_soft_labels_csv(
        matrix,
        out_path,
        meta={
            "mode": plan.mode,
            "alpha": plan.alpha,
            "beta": plan.beta,
            "weighted_mean_after": plan.weighted_mean_after,
        },
    )


def stage_train(
    train_path,
    test_path,
    labels_path,
    plan_path,
    clustering_path,
    hidden: int,
    config: trainer.TrainConfig,
    out_dir: Path,
) -> dict:
    train_ds = load_dataset_csv(train_path)
    test_ds = load_dataset_csv(test_path)
    if labels_path:
        matrix, meta = load_soft_labels_csv(labels_path)
        mode = meta.get("mode", "unknown")
        alpha = meta.get("alpha")
        beta = meta.get("beta")
    elif plan_path:
        plan = load_plan_json(plan_path)
        clustering = load_clustering_json(clustering_path) if clustering_path else None
        matrix = smoothing.soft_labels(train_ds, clustering, plan)
        mode, alpha, beta = plan.mode, plan.alpha, plan.beta
    else:
        plan = smoothing.none_plan(1, train_ds.num_classes)
        matrix = smoothing.soft_labels(train_ds, None, plan)
        mode, alpha, beta = "none", 0.0, 0.0
    if matrix.num_samples != train_ds.num_samples:
        raise DomainError("soft labels row count does not match the training set")
    model = trainer.init_mlp(
        [train_ds.num_features, hidden, train_ds.num_classes], seed=config.seed
    )
    metrics = trainer.train(model, train_ds.features, matrix, config, eval_dataset=test_ds)
    out_dir.mkdir(parents=True, exist_ok=True)
    trainer.write_metrics_jsonl(metrics, out_dir / "metrics.jsonl")
    trainer.save_model(model, out_dir / "model.bin")
    final = metrics[-1]
    summary = {
        "mode": mode,
        "alpha": alpha,
        "beta": beta,
        "seed": config.seed,
        "epochs": config.epochs,
        "batch_size": config.batch_size,
        "learning_rate": config.learning_rate,
        "momentum": config.momentum,
        "hidden_units": hidden,
        "final_train_loss": final["train_loss"],
        "final_test_error": final["test_error"],
        "final_test_ce": final["test_ce"],
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n"
    )
    return summary


def stage_report(runs_dir: Path, out_path: Path) -> list[dict]:
    summaries = []
    for path in sorted(runs_dir.rglob("summary.json")):
        summaries.append(json.loads(path.read_text()))
    if not summaries:
        raise DomainError(f"no summary.json files found under {runs_dir}")
    groups: dict[tuple, list[dict]] = {}
    for s in summaries:
        groups.setdefault((s["mode"], s["alpha"], s["beta"]), []).append(s)
    rows = []
    for (mode, alpha, beta), members in sorted(groups.items()):
        errors = np.array([m["final_test_error"] for m in members])
        ces = np.array([m["final_test_ce"] for m in members])
        rows.append(
            {
                "mode": mode,
                "alpha": alpha,
                "beta": beta,
                "runs": len(members),
                "mean_test_error": float(errors.mean()),
                "std_test_error": float(errors.std(ddof=1)) if len(members) > 1 else 0.0,
                "lowest_test_error": float(errors.min()),
                "mean_test_ce": float(ces.mean()),
            }
        )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(rows, sort_keys=True, indent=2) + "\n")
    csv_path = out_path.with_suffix(".csv")
    header = (
        "mode,alpha,beta,runs,mean_test_error,std_test_error,"
        "lowest_test_error,mean_test_ce"
    )
    lines = [header]
    for r in rows:
        lines.append(
            f"{r['mode']},{r['alpha']},{r['beta']},{r['runs']},"
            f"{r['mean_test_error']!r},{r['std_test_error']!r},"
            f"{r['lowest_test_error']!r},{r['mean_test_ce']!r}"
        )
    csv_path.write_text("\n".join(lines) + "\n")
    print(f"{'mode':<22}{'alpha':>7}{'beta':>6}{'runs':>6}{'mean err':>10}"
          f"{'std':>8}{'lowest':>8}{'mean ce':>9}")
    for r in rows:
        print(
            f"{r['mode']:<22}{r['alpha']:>7.3g}{r['beta']:>6.3g}{r['runs']:>6d}"
            f"{100 * r['mean_test_error']:>9.2f}%{100 * r['std_test_error']:>7.2f}%"
            f"{100 * r['lowest_test_error']:>7.2f}%{r['mean_test_ce']:>9.4f}"
        )
    return rows


# ---------------------------------------------------------------------------
# Pipeline config
# ---------------------------------------------------------------------------

PIPELINE_DEFAULTS = {
    "spec": "",
    "n_per_split": "2000",
    "seed": "0",
    "algo": "pca+gmm",
    "clusters": "32",
    "pca_dim": "2",
    "delta_estimator": "halved",
    "alpha": "0.2",
    "betas": "0.4",
    "modes": "none,uniform,structural,reversed-structural",
    "train_seeds": "0,1,2,3,4",
    "epochs": "300",
    "batch_size": "128",
    "learning_rate": "0.01",
    "momentum": "0.0",
    "hidden_units": "256",
}


def parse_config(path: Path) -> dict:
    """Parse a flat ``key = value`` config file (# starts a comment)."""
    values = dict(PIPELINE_DEFAULTS)
    seen = set()
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise DomainError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in PIPELINE_DEFAULTS and key != "out_dir":
            raise DomainError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value
        seen.add(key)
    if "out_dir" not in seen:
        raise DomainError(f"{path}: config must set out_dir")
    return values


def run_pipeline(config_path: Path, out_dir_override: Path | None = None) -> Path:
    cfg = parse_config(config_path)
    out_dir = Path(out_dir_override or cfg["out_dir"])
    seed = int(cfg["seed"])
    alpha = float(cfg["alpha"])
    betas = [float(b) for b in cfg["betas"].split(",") if b.strip()]
    modes = [m.strip() for m in cfg["modes"].split(",") if m.strip()]
    for mode in modes:
        if mode not in MODE_CHOICES:
            raise DomainError(f"unknown mode {mode!r} in config")
    train_seeds = [int(x) for x in cfg["train_seeds"].split(",") if x.strip()]
    pca_dim = int(cfg["pca_dim"]) if cfg["pca_dim"] else None

    paths = stage_gen(cfg["spec"] or None, int(cfg["n_per_split"]), seed, out_dir)
    clustering_path = out_dir / "clustering.json"
    stage_cluster(
        paths["train"], cfg["algo"], int(cfg["clusters"]), pca_dim, seed, clustering_path
    )
    estimate_path = out_dir / "estimate.json"
    stage_estimate(paths["train"], clustering_path, cfg["delta_estimator"], estimate_path)

    plan_paths: list[Path] = []
    for mode in modes:
        plan_paths.extend(
            stage_plan(estimate_path, clustering_path, alpha, betas, mode, out_dir / "plans")
        )
    label_paths = {}
    for plan_path in plan_paths:
        label_path = out_dir / "labels" / (plan_path.stem + ".csv")
        stage_labels(paths["train"], clustering_path, plan_path, label_path)
        label_paths[plan_path] = label_path

    for plan_path in plan_paths:
        for train_seed in train_seeds:
            config = trainer.TrainConfig(
                epochs=int(cfg["epochs"]),
                batch_size=int(cfg["batch_size"]),
                learning_rate=float(cfg["learning_rate"]),
                momentum=float(cfg["momentum"]),
                seed=train_seed,
            )
            stage_train(
                paths["train"],
                paths["test"],
                label_paths[plan_path],
                None,
                None,
                int(cfg["hidden_units"]),
                config,
                out_dir / "runs" / plan_path.stem / f"seed{train_seed}",
            )
    stage_report(out_dir / "runs", out_dir / "report.json")
    return out_dir


# ---------------------------------------------------------------------------
# argparse wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slsmooth",
        description="structural label smoothing pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic train/test datasets")
    p.add_argument("--spec", default=None, help="GMM spec JSON (default: shipped spec)")
    p.add_argument("--n", type=int, default=12000, help="samples per split")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("cluster", help="partition a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--algo", choices=("kmeans", "pca+gmm"), default="pca+gmm")
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--pca-dim", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("estimate", help="per-cluster BER bounds from MST statistics")
    p.add_argument("--dataset", required=True)
    p.add_argument("--clustering", required=True)
    p.add_argument(
        "--delta-estimator", choices=divergence.DELTA_ESTIMATORS, default="halved"
    )
    p.add_argument("--out", required=True)

    p = sub.add_parser("plan", help="solve smoothing strengths (one plan per beta)")
    p.add_argument("--estimate", required=True)
    p.add_argument("--clustering", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--betas", default="0.4", help="comma-separated beta values")
    p.add_argument("--mode", choices=MODE_CHOICES, default="structural")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("labels", help="materialize soft labels for a plan")
    p.add_argument("--dataset", required=True)
    p.add_argument("--clustering", default=None)
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train the MLP on soft labels")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--labels", default=None, help="soft-label CSV")
    p.add_argument("--plan", default=None, help="plan JSON (alternative to --labels)")
    p.add_argument("--clustering", default=None)
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="run output directory")

    p = sub.add_parser("report", help="aggregate run summaries into a table")
    p.add_argument("--runs-dir", required=True)
    p.add_argument("--out", required=True, help="report JSON path (CSV written beside)")

    p = sub.add_parser("pipeline", help="run every stage from one config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None, help="override the config's out_dir")
    return parser


def _dispatch(args: argparse.Namespace) -> None:
    if args.command == "gen":
        stage_gen(args.spec, args.n, args.seed, Path(args.out))
    elif args.command == "cluster":
        stage_cluster(
            args.dataset, args.algo, args.clusters, args.pca_dim, args.seed, Path(args.out)
        )
    elif args.command == "estimate":
        stage_estimate(args.dataset, args.clustering, args.delta_estimator, Path(args.out))
    elif args.command == "plan":
        betas = [float(b) for b in args.betas.split(",") if b.strip()]
        stage_plan(args.estimate, args.clustering, args.alpha, betas, args.mode, Path(args.out))
    elif args.command == "labels":
        stage_labels(args.dataset, args.clustering, args.plan, Path(args.out))
    elif args.command == "train":
        config = trainer.TrainConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            momentum=args.momentum,
            seed=args.seed,
        )
        stage_train(
            args.train,
            args.test,
            args.labels,
            args.plan,
            args.clustering,
            args.hidden,
            config,
            Path(args.out),
        )
    elif args.command == "report":
        stage_report(Path(args.runs_dir), Path(args.out))
    elif args.command == "pipeline":
        run_pipeline(Path(args.config), Path(args.out_dir) if args.out_dir else None)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _dispatch(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
