#!/usr/bin/env python3
"""Qualitative benchmark on the toy harness: AFA vs MI transfer over several
dataset seeds, white-box dominance, sampling diversity, the neighbor-ascent
sign fix and the finite-difference scheme ablation.

Every check prints its verdict; the script exits 1 when any of them fails.
The slow tests in tests/test_harness.py assert the same orderings on fewer
seeds.

Usage:
    python scripts/run_benchmark.py [--config configs/toy.yaml] [--seeds 5] [--threads 4] [--out bench.json]
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

import numpy as np

from flatattack.attacks import FiniteDifferenceScheme
from flatattack.config import RunConfigFile, load_run_config
from flatattack.errors import FlatAttackError, exit_code_for
from flatattack.harness import (
    TransferExperiment,
    build_zoo,
    diversity_comparison,
    ensemble_transfer,
    make_synthetic_dataset,
    run_ablation,
    run_transfer_experiment,
    sign_flip_sweep,
)
from flatattack.harness.reporting import write_json
from flatattack.models.training import accuracy
from flatattack.observability import OutputSettings, configure_logging

logger = logging.getLogger("flatattack.benchmark")

MIN_TEST_ACCURACY = 0.9
MIN_WHITEBOX_ASR = 0.95
MIN_TRANSFER_GAP = 0.03
MIN_DIVERSITY_WINS = 8
# no_ascent may beat afa on transfer by at most this much
ASCENT_TRANSFER_SLACK = 0.01
# FDM transfer within this much of the best scheme
SCHEME_SLACK = 0.02


def _print_section(title: str) -> None:
    print(f"\n{'=' * 60}")
    print(f"  {title}")
    print(f"{'=' * 60}")


def _verdict(ok: bool) -> str:
    return "yes" if ok else "NO"


def _experiment(config: RunConfigFile, dataset, models, threads: int) -> TransferExperiment:
    exp = config.experiment
    return TransferExperiment(
        models=dict(models),
        dataset=dataset,
        attack=config.attack,
        surrogates=exp.surrogates,
        max_examples=exp.max_examples,
        selection=exp.selection,
        reach_fraction=exp.reach_fraction,
        threads=threads,
    )


def run_seed(config: RunConfigFile, threads: int) -> dict[str, Any]:
    """One dataset seed: zoo, MI, AFA and no-ascent transfer, ensemble."""
    dataset = make_synthetic_dataset(config.dataset)
    models = build_zoo(config.zoo, dataset, config.train, threads=threads)
    test = dataset.test_split()
    exp = _experiment(config, dataset, models, threads)
    out: dict[str, Any] = {
        "seed": config.seed,
        "test_accuracy": {mid: accuracy(m, test) for mid, m in models.items()},
        "n_examples": len(exp.example_set()),
    }
    for algo, report in run_ablation(exp, ("mi", "afa", "no_ascent")).items():
        out[algo] = {
            "mean_whitebox_asr": report.mean_whitebox_asr,
            "min_whitebox_asr": float(np.min(report.diagonal())),
            "mean_transfer_asr": report.mean_transfer_asr,
            "whitebox_dominance": list(report.whitebox_dominance()),
        }
    if config.experiment.ensemble:
        exp.algorithm = "afa"
        rates = ensemble_transfer(exp, config.experiment.ensemble)
        single = [np.mean(list(r.values())) for name, r in rates.items() if name != "ensemble"]
        out["ensemble"] = {
            "ensemble_asr": float(np.mean(list(rates["ensemble"].values()))),
            "mean_single_asr": float(np.mean(single)),
        }
    return out


def run(config: RunConfigFile, n_seeds: int, threads: int, flip_seeds: int, flip_examples: int) -> dict[str, Any]:
    """Run every qualitative check and print a section per check."""
    seeds = [config.seed + k for k in range(n_seeds)]
    per_seed = []
    checks: dict[str, bool] = {}

    _print_section(f"Transfer: AFA vs MI over {n_seeds} dataset seeds ({config.experiment.selection} rows)")
    for seed in seeds:
        result = run_seed(config.with_seed(seed), threads)
        per_seed.append(result)
        accs = " ".join(f"{mid}={acc:.3f}" for mid, acc in result["test_accuracy"].items())
        print(f"  seed {seed}: {result['n_examples']} examples, test acc {accs}")
        for algo in ("mi", "afa", "no_ascent"):
            r = result[algo]
            print(f"    {algo:<9} white-box {r['mean_whitebox_asr']:.3f}  transfer {r['mean_transfer_asr']:.3f}")

    gap = float(np.mean([r["afa"]["mean_transfer_asr"] - r["mi"]["mean_transfer_asr"] for r in per_seed]))
    ascent_gap = float(
        np.mean([r["afa"]["mean_transfer_asr"] - r["no_ascent"]["mean_transfer_asr"] for r in per_seed])
    )
    min_acc = min(min(r["test_accuracy"].values()) for r in per_seed)
    min_whitebox = min(min(r["mi"]["min_whitebox_asr"], r["afa"]["min_whitebox_asr"]) for r in per_seed)
    checks["transfer_gap"] = gap >= MIN_TRANSFER_GAP
    checks["test_accuracy"] = min_acc >= MIN_TEST_ACCURACY
    checks["whitebox_asr"] = min_whitebox >= MIN_WHITEBOX_ASR
    checks["ascent_transfer"] = ascent_gap >= -ASCENT_TRANSFER_SLACK
    print(f"\n  Mean AFA - MI transfer gap: {gap:+.4f}  (>= {MIN_TRANSFER_GAP}: {_verdict(checks['transfer_gap'])})")
    print(f"  Lowest test accuracy:       {min_acc:.3f}  (>= {MIN_TEST_ACCURACY}: {_verdict(checks['test_accuracy'])})")
    print(f"  Lowest white-box ASR:       {min_whitebox:.3f}  (>= {MIN_WHITEBOX_ASR}: {_verdict(checks['whitebox_asr'])})")
    print(
        f"  Mean AFA - no_ascent gap:   {ascent_gap:+.4f}  "
        f"(>= {-ASCENT_TRANSFER_SLACK}: {_verdict(checks['ascent_transfer'])})"
    )
    dominance = [tuple(r["afa"]["whitebox_dominance"]) for r in per_seed]
    print(f"  AFA white-box >= transfer (cells held / total) per seed: {dominance}")
    if all("ensemble" in r for r in per_seed):
        wins = sum(r["ensemble"]["ensemble_asr"] >= r["ensemble"]["mean_single_asr"] for r in per_seed)
        print(f"  Ensemble >= mean single surrogate on held-out models: {wins} of {n_seeds} seeds")

    base = config.with_seed(config.seed)
    dataset = make_synthetic_dataset(base.dataset)
    models = build_zoo(base.zoo, dataset, base.train, threads=threads)
    surrogate_ids = base.experiment.surrogates or list(models)
    surrogate = models[surrogate_ids[0]]
    test = dataset.test_split()
    n_div = min(max(base.experiment.diversity_examples, 1), len(test))
    inputs, labels = test.inputs[:n_div], test.labels[:n_div]

    _print_section(f"Sampling diversity on {surrogate.model_id} ({n_div} examples)")
    comparison = diversity_comparison(surrogate, inputs, labels, base.attack, threads=threads)
    curves = {c.strategy: np.array(c.loss_std) for c in comparison}
    mcas_wins = int(np.sum(curves["mcas"] >= curves["uniform"]))
    for t, (u, m) in enumerate(zip(curves["uniform"], curves["mcas"])):
        print(f"  t={t:2d}  uniform {u:.5f}  mcas {m:.5f}")
    checks["diversity"] = mcas_wins >= MIN_DIVERSITY_WINS
    print(
        f"  MCAS >= uniform in {mcas_wins} of {base.attack.steps} iterations "
        f"(>= {MIN_DIVERSITY_WINS}: {_verdict(checks['diversity'])})"
    )

    _print_section(f"Neighbor-ascent sign fix ({flip_seeds} attack seeds x {len(surrogate_ids)} surrogates)")
    n_flip = min(flip_examples, len(test))
    flip_inputs, flip_labels = test.inputs[:n_flip], test.labels[:n_flip]
    flips = {"neighbor_ascent": 0, "no_neighbor_ascent": 0}
    by_lambda: dict[float, list[int]] = {}
    for sid in surrogate_ids:
        for k in range(flip_seeds):
            cfg = base.attack.updated(seed=base.seed + k)
            sweep = sign_flip_sweep(models[sid], flip_inputs, flip_labels, cfg, threads=threads)
            for key, value in sweep.totals.items():
                flips[key] += value
            for lam, a, p in zip(sweep.lambda_f, sweep.neighbor_ascent, sweep.no_neighbor_ascent):
                row = by_lambda.setdefault(lam, [0, 0])
                row[0] += a
                row[1] += p
    for lam, (a, p) in by_lambda.items():
        print(f"  lambda_f={lam:.3e}  with ascent {a:5d}  without {p:5d}")
    checks["sign_fix"] = flips["neighbor_ascent"] < flips["no_neighbor_ascent"]
    print(f"  Negative-alignment iterations with ascent:    {flips['neighbor_ascent']}")
    print(f"  Negative-alignment iterations without ascent: {flips['no_neighbor_ascent']}")
    print(f"  Fewer with ascent: {_verdict(checks['sign_fix'])}")

    _print_section("Finite-difference scheme ablation (AFA)")
    schemes: dict[str, float] = {}
    exp = _experiment(base, dataset, models, threads)
    for scheme in FiniteDifferenceScheme:
        exp.attack = base.attack.updated(scheme=scheme)
        schemes[scheme.value] = run_transfer_experiment(exp).mean_transfer_asr
        print(f"  {scheme.value}: mean transfer ASR {schemes[scheme.value]:.4f}")
    checks["fdm_near_best"] = schemes[FiniteDifferenceScheme.FDM.value] >= max(schemes.values()) - SCHEME_SLACK
    print(f"  FDM within {SCHEME_SLACK} of the best scheme: {_verdict(checks['fdm_near_best'])}")

    failed = [name for name, ok in checks.items() if not ok]
    print(f"\n{'=' * 60}")
    print(f"  Benchmark complete: {len(checks) - len(failed)} of {len(checks)} checks hold.")
    if failed:
        print(f"  Failed: {', '.join(failed)}")
    print(f"{'=' * 60}\n")
    return {
        "seeds": seeds,
        "per_seed": per_seed,
        "afa_minus_mi_transfer_asr": gap,
        "afa_minus_no_ascent_transfer_asr": ascent_gap,
        "min_test_accuracy": min_acc,
        "min_whitebox_asr": min_whitebox,
        "diversity": {k: list(v) for k, v in curves.items()},
        "diversity_mcas_wins": mcas_wins,
        "sign_flips": flips,
        "sign_flips_by_lambda_f": {f"{lam:.6e}": v for lam, v in by_lambda.items()},
        "scheme_transfer_asr": schemes,
        "checks": checks,
        "config": base.effective(),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description="Run the FLATATTACK qualitative benchmark")
    parser.add_argument("--config", type=Path, default=Path("configs/toy.yaml"), help="run configuration")
    parser.add_argument("--seeds", type=int, default=5, help="number of dataset seeds (default: 5)")
    parser.add_argument("--flip-seeds", type=int, default=10, help="attack seeds for the sign-flip sweep (default: 10)")
    parser.add_argument("--flip-examples", type=int, default=5, help="test rows for the sign-flip sweep (default: 5)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (default: 1)")
    parser.add_argument("--out", type=Path, help="write a JSON summary here")
    parser.add_argument("--verbose", "-v", action="count", default=0, help="more logging")
    args = parser.parse_args()

    configure_logging(OutputSettings(), verbose=args.verbose)
    try:
        config = load_run_config(args.config)
        summary = run(config, args.seeds, args.threads, args.flip_seeds, args.flip_examples)
        if args.out:
            write_json(args.out, summary)
            logger.info("Wrote benchmark summary to %s", args.out)
    except FlatAttackError as e:
        sys.exit(exit_code_for(e))
    if not all(summary["checks"].values()):
        sys.exit(1)


if __name__ == "__main__":
    main()
