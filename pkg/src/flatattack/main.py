"""Command-line entry point for FLATATTACK.

Usage:
    flatattack --config configs/toy.yaml report
    flatattack --config configs/toy.yaml dataset-gen
    flatattack --config configs/toy.yaml train
    flatattack --config configs/toy.yaml attack --algo afa --surrogate m0
    flatattack --config configs/toy.yaml eval
    flatattack --config configs/toy.yaml analyze vicinity --surrogate m0

Every subcommand is a pure function of the config file and the global flags
(--threads changes wall time only). Exit codes: 0 success, 1 runtime
failure, 2 usage or configuration error.
"""

import argparse
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
from rich.console import Console
from rich.table import Table

from flatattack.attacks import ALGORITHMS, AttackConfig, FiniteDifferenceScheme, export_trace_csv, run_attack
from flatattack.config import OutputSettings, RunConfigFile, load_run_config
from flatattack.errors import ConfigError, ExperimentError, exit_code_for
from flatattack.errors.exceptions import EXIT_OK
from flatattack.flatness import check_vicinity_bound, estimate_flatness, export_surface, loss_surface_grid
from flatattack.harness import (
    ExampleSet,
    TransferExperiment,
    TransferReport,
    attack_examples,
    build_zoo,
    compare_algorithms,
    diversity_comparison,
    emit_report,
    ensemble_transfer,
    eps_monotonicity,
    evaluate_asr,
    load_adversarial_set,
    make_synthetic_dataset,
    run_transfer_experiment,
    save_adversarial_set,
    score_adversarial,
    select_examples,
    sign_flip_counts,
    write_comparison_csv,
    write_diversity_csv,
)
from flatattack.harness.reporting import write_json
from flatattack.models import Dataset, load_dataset, model_hash, save_dataset, save_model
from flatattack.models.base import Classifier
from flatattack.models.mlp import MlpClassifier
from flatattack.models.serialization import MODEL_SUFFIX, load_zoo_dir
from flatattack.models.training import accuracy
from flatattack.numerics import SeededRng
from flatattack.observability import LoggingObserver, configure_logging

logger = logging.getLogger(__name__)

# Sub-stream for analysis draws (surface directions, flatness samples),
# far above any per-iteration index.
ANALYSIS_STREAM = 1_000_000

# argparse dest -> AttackConfig field
ATTACK_FLAGS = (
    "eps",
    "steps",
    "alpha",
    "eta",
    "n_samples",
    "xi",
    "gamma_mcas",
    "eta_mcas",
    "beta_f",
    "lambda_f",
    "scheme",
    "neighbor_ascent",
    "mcas_enabled",
    "mcas_reset_per_iteration",
    "sample_around_clean",
)


@dataclass
class CliContext:
    config: RunConfigFile
    threads: int
    console: Console

    @property
    def output_dir(self) -> Path:
        return Path(self.config.output_dir)

    def dataset_path(self, args: argparse.Namespace) -> Path:
        return Path(args.dataset) if getattr(args, "dataset", None) else self.output_dir / "dataset.csv"

    def models_dir(self, args: argparse.Namespace) -> Path:
        return Path(args.models) if getattr(args, "models", None) else self.output_dir / "models"

    def examples(self, dataset: Dataset, limit: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
        test = dataset.test_split()
        limit = limit if limit is not None else self.config.experiment.max_examples
        n = len(test) if limit is None else min(limit, len(test))
        return test.inputs[:n], test.labels[:n]

    def attack_examples(self, dataset: Dataset, models: dict[str, MlpClassifier]) -> ExampleSet:
        exp = self.config.experiment
        return select_examples(
            dataset, models, self.config.attack.eps, exp.selection, exp.reach_fraction, exp.max_examples
        )


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_attack_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("attack hyperparameters (override the config file)")
    g.add_argument("--eps", type=float, help="L-inf budget (default 16/255)")
    g.add_argument("--steps", type=int, help="outer iterations T (default 10)")
    g.add_argument("--alpha", type=float, help="step size (default eps/steps)")
    g.add_argument("--eta", type=float, help="momentum decay (default 1.0)")
    g.add_argument("--n", dest="n_samples", type=int, help="inner samples N (default 20)")
    g.add_argument("--xi", type=float, help="sampling radius (default 3*eps)")
    g.add_argument("--gamma-mcas", type=float, help="sampling-momentum radius (default 0.15*eps)")
    g.add_argument("--eta-mcas", type=float, help="sampling-momentum decay (default 0.9)")
    g.add_argument("--beta-f", type=float, help="zeroth/first-order flatness balance in [0, 1] (default 0.5)")
    g.add_argument("--lambda-f", type=float, help="flatness coefficient (default alpha*beta_f)")
    g.add_argument("--scheme", choices=[s.value for s in FiniteDifferenceScheme], help="gradient-difference scheme")
    g.add_argument(
        "--no-neighbor-ascent",
        dest="neighbor_ascent",
        action="store_const",
        const=False,
        help="drop the g1+g2+g3 term from the objective gradient",
    )
    g.add_argument("--no-mcas", dest="mcas_enabled", action="store_const", const=False, help="plain uniform sampling")
    g.add_argument(
        "--mcas-keep-momentum",
        dest="mcas_reset_per_iteration",
        action="store_const",
        const=False,
        help="carry the sampling momentum across outer iterations",
    )
    g.add_argument(
        "--sample-around-clean",
        dest="sample_around_clean",
        action="store_const",
        const=True,
        help="draw neighbourhood samples around the clean input instead of the iterate",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flatattack",
        description="Flatness-regularized transferable adversarial attacks on small classifiers",
    )
    parser.add_argument("--config", type=Path, help="YAML run configuration (defaults when omitted)")
    parser.add_argument("--seed", type=int, help="master seed; overrides the config file")
    parser.add_argument("--output-dir", help="output directory; overrides the config file")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset-gen", help="generate the synthetic dataset")
    p.add_argument("--out", type=Path, help="dataset CSV path (default <output_dir>/dataset.csv)")

    p = sub.add_parser("train", help="train the model zoo")
    p.add_argument("--dataset", type=Path)
    p.add_argument("--out", type=Path, help="model directory (default <output_dir>/models)")
    p.add_argument("--epochs", type=int, help="override train.epochs")

    p = sub.add_parser("attack", help="attack the test split from one surrogate")
    p.add_argument("--algo", choices=ALGORITHMS, default="afa")
    p.add_argument("--surrogate", help="surrogate model id (default: first model)")
    p.add_argument("--models", type=Path)
    p.add_argument("--dataset", type=Path)
    p.add_argument("--out", type=Path, help="adversarial-set CSV path")
    p.add_argument("--max-examples", type=int)
    _add_attack_flags(p)

    p = sub.add_parser("eval", help="fooling-rate matrices for saved adversarial sets")
    p.add_argument("--adversarial", type=Path, nargs="+", help="adversarial-set CSVs (default: <output_dir>/attack/*.csv)")
    p.add_argument("--models", type=Path)
    p.add_argument("--dataset", type=Path, help="enables the pre-attack-correct filtered rates")
    p.add_argument("--out", type=Path, help="report directory (default <output_dir>/eval)")

    p = sub.add_parser("analyze", help="loss surfaces, sampling diversity, flatness, vicinity bound")
    p.add_argument("kind", choices=["surface", "diversity", "flatness", "vicinity"])
    p.add_argument("--algo", choices=ALGORITHMS, default="afa", help="attack producing the analyzed point")
    p.add_argument("--surrogate")
    p.add_argument("--models", type=Path)
    p.add_argument("--dataset", type=Path)
    p.add_argument("--out", type=Path, help="output directory (default <output_dir>/analyze)")
    p.add_argument("--index", type=int, default=0, help="test example to analyze (surface, vicinity)")
    p.add_argument("--examples", type=int, help="number of test examples (diversity, flatness, vicinity)")
    p.add_argument("--range", dest="surface_range", type=float, default=0.25, help="surface half-width")
    p.add_argument("--resolution", type=int, default=21, help="surface grid points per axis (odd)")
    p.add_argument("--samples", type=int, default=2000, help="flatness estimator sample count")
    p.add_argument("--n-grid", type=int, default=101, help="vicinity grid points per axis")
    _add_attack_flags(p)

    p = sub.add_parser("report", help="full pipeline: dataset, zoo, every configured algorithm, summaries")
    p.add_argument("--max-examples", type=int)
    p.add_argument("--no-traces", action="store_true", help="skip per-example trace CSVs")
    _add_attack_flags(p)
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    attack = {name: getattr(args, name) for name in ATTACK_FLAGS if getattr(args, name, None) is not None}
    if attack:
        overrides["attack"] = attack
    if getattr(args, "epochs", None) is not None:
        overrides["train"] = {"epochs": args.epochs}
    if getattr(args, "max_examples", None) is not None:
        overrides["experiment"] = {"max_examples": args.max_examples}
    return overrides


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _select_surrogate(models: dict[str, MlpClassifier], surrogate: Optional[str]) -> MlpClassifier:
    if not models:
        raise ExperimentError("no models found; run `train` first", reason="empty_zoo")
    sid = surrogate or next(iter(models))
    if sid not in models:
        raise ConfigError(f"surrogate {sid!r} is not in the zoo; available: {', '.join(models)}", key="surrogate")
    return models[sid]


def _fmt(value: float) -> str:
    return "nan" if np.isnan(value) else f"{value:.3f}"


def _matrix_table(title: str, report: TransferReport, matrix: np.ndarray) -> Table:
    table = Table(title=title)
    table.add_column("surrogate \\ target")
    for tid in report.target_ids:
        table.add_column(tid, justify="right")
    for sid, row in zip(report.surrogate_ids, matrix):
        table.add_row(sid, *[_fmt(v) for v in row])
    return table


def _comparison_table(reports: dict[str, TransferReport]) -> Table:
    table = Table(title="Algorithm comparison")
    for col in ("algorithm", "white-box ASR", "transfer ASR", "min", "max", "rank agreement"):
        table.add_column(col, justify="right" if col != "algorithm" else "left")
    for row in compare_algorithms(reports):
        table.add_row(
            row.algorithm,
            _fmt(row.mean_whitebox_asr),
            _fmt(row.mean_transfer_asr),
            _fmt(row.min_transfer_asr),
            _fmt(row.max_transfer_asr),
            _fmt(row.rank_agreement),
        )
    return table


def _adversarial_point(
    ctx: CliContext, algo: str, model: Classifier, x: np.ndarray, y: int, index: int
) -> np.ndarray:
    cfg = ctx.config.attack
    x_adv, _ = run_attack(algo, model, x, y, cfg, SeededRng(cfg.seed, stream_id=index))
    return x_adv


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_dataset_gen(ctx: CliContext, args: argparse.Namespace) -> int:
    spec = ctx.config.dataset
    dataset = make_synthetic_dataset(spec)
    out = Path(args.out) if args.out else ctx.output_dir / "dataset.csv"
    save_dataset(dataset, out, metadata={"spec": spec.model_dump(mode="json"), "seed": spec.seed})

    table = Table(title=f"Dataset {out}")
    table.add_column("field")
    table.add_column("value", justify="right")
    table.add_row("d", str(dataset.input_dim))
    table.add_row("C", str(dataset.num_classes))
    table.add_row("train rows", str(len(dataset.train_split())))
    table.add_row("test rows", str(len(dataset.test_split())))
    table.add_row("class counts", " ".join(str(c) for c in dataset.class_counts()))
    table.add_row("seed", str(spec.seed))
    ctx.console.print(table)
    return EXIT_OK


def cmd_train(ctx: CliContext, args: argparse.Namespace) -> int:
    dataset = load_dataset(ctx.dataset_path(args))
    models = build_zoo(ctx.config.zoo, dataset, ctx.config.train, threads=ctx.threads)
    out_dir = Path(args.out) if args.out else ctx.output_dir / "models"
    test = dataset.test_split()

    table = Table(title=f"Model zoo ({ctx.config.train.epochs} epochs)")
    for col in ("id", "activation", "hidden", "train acc", "test acc"):
        table.add_column(col, justify="left" if col in ("id", "activation", "hidden") else "right")
    for mid, model in models.items():
        save_model(model, out_dir / f"{mid}{MODEL_SUFFIX}")
        table.add_row(
            mid,
            model.activation.value,
            str(list(model.hidden_sizes)),
            _fmt(model.train_accuracy if model.train_accuracy is not None else float("nan")),
            _fmt(accuracy(model, test)),
        )
    ctx.console.print(table)
    logger.info("Wrote %d models to %s", len(models), out_dir)
    return EXIT_OK


def cmd_attack(ctx: CliContext, args: argparse.Namespace) -> int:
    models = load_zoo_dir(ctx.models_dir(args))
    model = _select_surrogate(models, args.surrogate)
    dataset = load_dataset(ctx.dataset_path(args))
    chosen = ctx.attack_examples(dataset, models)
    inputs, labels = chosen.inputs, chosen.labels
    cfg = ctx.config.attack

    observer = LoggingObserver()
    adv, traces = attack_examples(args.algo, model, inputs, labels, cfg, ctx.threads, observer)
    out = Path(args.out) if args.out else ctx.output_dir / "attack" / f"{args.algo}_{model.model_id}.csv"
    save_adversarial_set(
        out,
        adv,
        labels,
        metadata={
            "algorithm": args.algo,
            "surrogate": model.model_id,
            "surrogate_hash": model_hash(model),
            "attack": cfg.effective(),
            "seeds": {"master": ctx.config.seed, "attack": cfg.seed},
            "n_examples": int(labels.shape[0]),
            "selection": ctx.config.experiment.selection,
            "test_indices": chosen.indices.tolist(),
            "config": ctx.config.effective(),
        },
    )
    trace_dir = out.parent / f"{out.stem}_traces"
    for i, trace in enumerate(traces):
        export_trace_csv(trace, trace_dir / f"{i:05d}.csv")

    whitebox = evaluate_asr(model, adv, labels) if labels.size else float("nan")
    linf = float(np.max(np.abs(adv - inputs))) if labels.size else 0.0
    ctx.console.print(
        f"{args.algo} from {model.model_id}: {labels.size} examples, white-box ASR {_fmt(whitebox)}, "
        f"max |x_adv - x|_inf {linf:.6f} (eps {cfg.eps:.6f})"
    )
    if observer.iterations:
        ctx.console.print(f"iterations: {observer.summary()}")
    ctx.console.print(f"wrote {out}")
    return EXIT_OK


def cmd_eval(ctx: CliContext, args: argparse.Namespace) -> int:
    models = load_zoo_dir(ctx.models_dir(args))
    paths = list(args.adversarial) if args.adversarial else sorted((ctx.output_dir / "attack").glob("*.csv"))
    if not paths:
        raise ExperimentError("no adversarial sets given or found; run `attack` first", reason="no_adversarial")

    groups: dict[str, dict[str, np.ndarray]] = {}
    group_labels: dict[str, np.ndarray] = {}
    group_cfg: dict[str, AttackConfig] = {}
    group_rows: dict[str, np.ndarray] = {}
    for path in paths:
        examples, labels, meta = load_adversarial_set(path)
        algo = str(meta.get("algorithm", path.stem))
        sid = str(meta.get("surrogate", path.stem))
        if algo in group_labels and not np.array_equal(group_labels[algo], labels):
            raise ExperimentError(f"{path} holds different examples than the other {algo} sets", reason="mismatch")
        groups.setdefault(algo, {})[sid] = examples
        group_labels[algo] = labels
        group_cfg.setdefault(algo, AttackConfig(**meta.get("attack", {})))
        group_rows.setdefault(algo, np.asarray(meta.get("test_indices", range(labels.shape[0])), dtype=int))

    clean_test = load_dataset(args.dataset).test_split() if args.dataset else None

    out_dir = Path(args.out) if args.out else ctx.output_dir / "eval"
    reports: dict[str, TransferReport] = {}
    for algo, adversarial in groups.items():
        labels = group_labels[algo]
        algo_clean = None
        if clean_test is not None:
            rows = group_rows[algo]
            in_range = rows.shape == labels.shape and (rows.size == 0 or rows.max() < len(clean_test))
            if not in_range or not np.array_equal(clean_test.labels[rows], labels):
                raise ExperimentError(f"{algo} examples do not match the test split of {args.dataset}", reason="mismatch")
            algo_clean = clean_test.inputs[rows]
        report = score_adversarial(algo, models, adversarial, labels, group_cfg[algo], algo_clean)
        emit_report(report, out_dir / algo, run_config=ctx.config.effective(), with_traces=False)
        ctx.console.print(_matrix_table(f"{algo}: fooling rate", report, report.asr))
        agreement = report.rank_agreement
        ctx.console.print(
            f"rank agreement (Spearman over {agreement.n_targets} targets): "
            f"{'degenerate' if agreement.degenerate else f'{agreement.value:.3f}'}"
        )
        reports[algo] = report
    if len(reports) > 1:
        write_comparison_csv(out_dir / "comparison.csv", compare_algorithms(reports))
        ctx.console.print(_comparison_table(reports))
    return EXIT_OK


def cmd_analyze(ctx: CliContext, args: argparse.Namespace) -> int:
    models = load_zoo_dir(ctx.models_dir(args))
    model = _select_surrogate(models, args.surrogate)
    dataset = load_dataset(ctx.dataset_path(args))
    cfg = ctx.config.attack
    out_dir = Path(args.out) if args.out else ctx.output_dir / "analyze"

    if args.kind == "surface":
        inputs, labels = ctx.examples(dataset)
        if not 0 <= args.index < len(labels):
            raise ConfigError(f"--index {args.index} outside the {len(labels)} test examples", key="index")
        x, y = inputs[args.index], int(labels[args.index])
        x_adv = _adversarial_point(ctx, args.algo, model, x, y, args.index)
        rng = SeededRng(cfg.seed, stream_id=args.index).spawn(ANALYSIS_STREAM)
        grid = loss_surface_grid(model, x_adv, y, rng, args.surface_range, args.resolution, threads=ctx.threads)
        csv_path, _ = export_surface(grid, out_dir, stem=f"surface_{args.algo}_{model.model_id}_{args.index}")
        ctx.console.print(
            f"{args.resolution}x{args.resolution} surface around {args.algo} example {args.index}: "
            f"center loss {grid.center_loss:.6f} -> {csv_path}"
        )
        return EXIT_OK

    if args.kind == "diversity":
        limit = args.examples if args.examples is not None else ctx.config.experiment.diversity_examples
        inputs, labels = ctx.examples(dataset, limit=limit)
        curves = diversity_comparison(model, inputs, labels, cfg, threads=ctx.threads)
        flips = sign_flip_counts(model, inputs, labels, cfg, threads=ctx.threads)
        write_diversity_csv(out_dir / "diversity.csv", curves)
        write_json(
            out_dir / "diversity.json",
            {
                "surrogate": model.model_id,
                "n_examples": int(labels.shape[0]),
                "curves": {c.strategy: list(c.loss_std) for c in curves},
                "negative_alignment_iterations": flips,
            },
        )
        table = Table(title=f"Inner-sample loss std on {model.model_id} ({labels.shape[0]} examples)")
        table.add_column("t", justify="right")
        for c in curves:
            table.add_column(c.strategy, justify="right")
        for t in range(cfg.steps):
            table.add_row(str(t), *[f"{c.loss_std[t]:.5f}" for c in curves])
        ctx.console.print(table)
        ctx.console.print(
            f"negative-alignment iterations: {flips['neighbor_ascent']} with neighbor ascent, "
            f"{flips['no_neighbor_ascent']} without"
        )
        return EXIT_OK

    if args.examples is not None:
        inputs, labels = ctx.examples(dataset, limit=args.examples)
        indices = list(range(len(labels)))
    else:
        inputs, labels = ctx.examples(dataset)
        if not 0 <= args.index < len(labels):
            raise ConfigError(f"--index {args.index} outside the {len(labels)} test examples", key="index")
        indices = [args.index]

    rows = []
    for index in indices:
        x, y = inputs[index], int(labels[index])
        x_adv = _adversarial_point(ctx, args.algo, model, x, y, index)
        if args.kind == "flatness":
            rng = SeededRng(cfg.seed, stream_id=index).spawn(ANALYSIS_STREAM)
            est = estimate_flatness(model, x_adv, y, cfg.xi, args.samples, cfg.beta_f, rng)
            rows.append({"index": index, "psi0": est.psi0, "psi1": est.psi1, "psi_af": est.psi_af})
        else:
            report = check_vicinity_bound(model, x_adv, y, cfg.xi, args.n_grid, cfg.beta_f)
            rows.append(
                {
                    "index": index,
                    "violations": report.violations,
                    "total": report.total,
                    "max_excess": report.max_excess,
                    "psi_af": report.psi_af,
                }
            )
            ctx.console.print(f"example {index}: violations={report.violations} of {report.total} grid points")

    write_json(
        out_dir / f"{args.kind}_{args.algo}_{model.model_id}.json",
        {"surrogate": model.model_id, "algorithm": args.algo, "xi": cfg.xi, "beta_f": cfg.beta_f, "rows": rows},
    )
    if args.kind == "flatness" and rows:
        ctx.console.print(
            f"{args.algo} on {model.model_id}: mean psi0 {np.mean([r['psi0'] for r in rows]):.5f}, "
            f"mean psi1 {np.mean([r['psi1'] for r in rows]):.5f}, "
            f"mean psi_af {np.mean([r['psi_af'] for r in rows]):.5f} over {len(rows)} examples"
        )
    return EXIT_OK


def cmd_report(ctx: CliContext, args: argparse.Namespace) -> int:
    """Dataset, zoo, one transfer report per configured algorithm, and the
    qualitative summaries, all under ``output_dir``."""
    config = ctx.config
    out = ctx.output_dir
    dataset = make_synthetic_dataset(config.dataset)
    save_dataset(dataset, out / "dataset.csv", metadata={"spec": config.dataset.model_dump(mode="json")})
    models = build_zoo(config.zoo, dataset, config.train, threads=ctx.threads)
    for mid, model in models.items():
        save_model(model, out / "models" / f"{mid}{MODEL_SUFFIX}")

    exp = TransferExperiment(
        models=dict(models),
        dataset=dataset,
        attack=config.attack,
        surrogates=config.experiment.surrogates,
        max_examples=config.experiment.max_examples,
        threads=ctx.threads,
        selection=config.experiment.selection,
        reach_fraction=config.experiment.reach_fraction,
    )
    reports: dict[str, TransferReport] = {}
    for algo in config.experiment.algorithms:
        report = run_transfer_experiment(replace(exp, algorithm=algo))
        emit_report(report, out / algo, run_config=config.effective(), with_traces=not args.no_traces)
        ctx.console.print(_matrix_table(f"{algo}: fooling rate", report, report.asr))
        reports[algo] = report
    rows = compare_algorithms(reports)
    write_comparison_csv(out / "comparison.csv", rows)
    ctx.console.print(_comparison_table(reports))

    summary: dict[str, Any] = {
        "schema_version": 1,
        "seed": config.seed,
        "test_accuracy": {mid: accuracy(m, dataset.test_split()) for mid, m in models.items()},
        "examples": {"selection": config.experiment.selection, "count": len(exp.example_set())},
        "algorithms": {
            r.algorithm: {
                "mean_whitebox_asr": r.mean_whitebox_asr,
                "mean_transfer_asr": r.mean_transfer_asr,
                "rank_agreement": r.rank_agreement,
                "whitebox_dominance": list(reports[r.algorithm].whitebox_dominance()),
            }
            for r in rows
        },
    }
    if "afa" in reports and "mi" in reports:
        summary["afa_minus_mi_transfer_asr"] = reports["afa"].mean_transfer_asr - reports["mi"].mean_transfer_asr

    if config.experiment.eps_values:
        sweep_algo = "afa" if "afa" in reports else config.experiment.algorithms[0]
        sweep = eps_monotonicity(replace(exp, algorithm=sweep_algo), config.experiment.eps_values)
        summary["eps_sweep_whitebox_asr"] = {f"{e:.17g}": v for e, v in sweep.items()}

    surrogate = models[(config.experiment.surrogates or list(models))[0]]
    if config.experiment.diversity_examples and config.attack.n_samples >= 2:
        inputs, labels = ctx.examples(dataset, limit=config.experiment.diversity_examples)
        curves = diversity_comparison(surrogate, inputs, labels, config.attack, threads=ctx.threads)
        write_diversity_csv(out / "diversity.csv", curves)
        summary["diversity"] = {c.strategy: list(c.loss_std) for c in curves}
        summary["sign_flips"] = sign_flip_counts(surrogate, inputs, labels, config.attack, threads=ctx.threads)

    if config.experiment.ensemble:
        summary["ensemble"] = ensemble_transfer(replace(exp, algorithm="afa"), config.experiment.ensemble)

    write_json(out / "summary.json", summary)
    ctx.console.print(f"wrote report to {out}")
    return EXIT_OK


COMMANDS = {
    "dataset-gen": cmd_dataset_gen,
    "train": cmd_train,
    "attack": cmd_attack,
    "eval": cmd_eval,
    "analyze": cmd_analyze,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = OutputSettings()
    configure_logging(settings, verbose=args.verbose)
    console = Console(no_color=not settings.color, highlight=False)
    try:
        if args.threads < 1:
            raise ConfigError(f"--threads must be at least 1, got {args.threads}", key="threads")
        config = load_run_config(args.config, _overrides(args))
        ctx = CliContext(config=config, threads=args.threads, console=console)
        return COMMANDS[args.command](ctx, args)
    except Exception as e:
        return exit_code_for(e)


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
