"""Tests for the synthetic data, the model zoo, transfer experiments and reports."""

import json
import math
from dataclasses import replace
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from flatattack.attacks import AttackConfig, FiniteDifferenceScheme
from flatattack.config import RunConfigFile, load_run_config
from flatattack.errors import ConfigError, DomainError, ExperimentError
from flatattack.harness import (
    SIGN_FLIP_SCALES,
    DatasetSpec,
    ModelSpec,
    TransferExperiment,
    bisector_reach,
    build_zoo,
    class_means,
    compare_algorithms,
    diversity_comparison,
    emit_report,
    ensemble_transfer,
    eps_monotonicity,
    load_adversarial_set,
    make_synthetic_dataset,
    read_matrix_csv,
    run_ablation,
    run_transfer_experiment,
    save_adversarial_set,
    select_examples,
    sign_flip_counts,
    sign_flip_sweep,
    write_comparison_csv,
    write_diversity_csv,
)
from flatattack.harness.reporting import _json_ready, report_manifest
from flatattack.models import Activation, Dataset, MlpClassifier, TrainConfig, accuracy, save_dataset
from flatattack.models.serialization import encode_model
from flatattack.numerics import SeededRng


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

SMALL_SPEC = DatasetSpec(d=2, num_classes=4, n_per_class=20, min_separation=4.0, seed=3)
SMALL_TRAIN = TrainConfig(epochs=40, init_seed=3)
SMALL_ZOO = (
    ModelSpec(id="a", hidden=(8,), activation=Activation.TANH),
    ModelSpec(id="b", hidden=(6, 6), activation=Activation.SOFTPLUS),
    ModelSpec(id="c", hidden=(), activation=Activation.TANH),
)
SMALL_ATTACK = AttackConfig(steps=3, n_samples=2, seed=5)


@lru_cache(maxsize=None)
def _small_setup():
    dataset = make_synthetic_dataset(SMALL_SPEC)
    return dataset, build_zoo(SMALL_ZOO, dataset, SMALL_TRAIN)


def _experiment(**overrides) -> TransferExperiment:
    dataset, models = _small_setup()
    exp = TransferExperiment(models=dict(models), dataset=dataset, attack=SMALL_ATTACK, max_examples=6)
    return replace(exp, **overrides)


def _clone(model: MlpClassifier, model_id: str) -> MlpClassifier:
    return MlpClassifier(model.layers, model.activation, model_id, model.train_accuracy)


# ===================================================================
# Synthetic data
# ===================================================================


class TestSyntheticDataset:
    def test_layout(self):
        data = make_synthetic_dataset(DatasetSpec(n_per_class=50, seed=1))
        assert len(data) == 8 * 50
        assert data.labels.tolist() == np.repeat(np.arange(8), 50).tolist()
        assert len(data.test_split()) == 8 * 10
        assert data.test_split().class_counts() == [10] * 8
        assert data.inputs.min() >= 0.0 and data.inputs.max() <= 1.0

    def test_same_seed_same_bytes(self, tmp_path):
        for name in ("a", "b"):
            save_dataset(make_synthetic_dataset(DatasetSpec(seed=4)), tmp_path / f"{name}.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_seeds_differ(self):
        a = make_synthetic_dataset(DatasetSpec(seed=1))
        b = make_synthetic_dataset(DatasetSpec(seed=2))
        assert not np.array_equal(a.inputs, b.inputs)

    def test_tight_clusters_are_learnable(self):
        spec = DatasetSpec(num_classes=3, n_per_class=50, cluster_spread=0.001, min_separation=200.0, seed=0)
        data = make_synthetic_dataset(spec)
        models = build_zoo([ModelSpec(id="t", hidden=(16,))], data, TrainConfig(epochs=500))
        assert accuracy(models["t"], data.test_split()) >= 0.99


# ===================================================================
# Model zoo
# ===================================================================


class TestZoo:
    def test_ids_and_training(self):
        _, models = _small_setup()
        assert list(models) == ["a", "b", "c"]
        assert all(m.train_accuracy is not None for m in models.values())
        assert models["b"].hidden_sizes == (6, 6)

    def test_initial_weights_from_model_stream(self):
        dataset, _ = _small_setup()
        models = build_zoo(SMALL_ZOO, dataset, TrainConfig(epochs=0, init_seed=9))
        expected = MlpClassifier.initialize(2, 4, (6, 6), Activation.SOFTPLUS, "b", SeededRng(9, stream_id=1).spawn(0))
        for got, want in zip(models["b"].layers, expected.layers):
            assert np.array_equal(got.weight, want.weight)

    def test_thread_independent(self):
        dataset, models = _small_setup()
        parallel = build_zoo(SMALL_ZOO, dataset, SMALL_TRAIN, threads=3)
        for mid in models:
            assert encode_model(parallel[mid]) == encode_model(models[mid])

    def test_duplicate_ids(self):
        dataset, _ = _small_setup()
        with pytest.raises(ConfigError):
            build_zoo([ModelSpec(id="x"), ModelSpec(id="x")], dataset, SMALL_TRAIN)


# ===================================================================
# Example selection
# ===================================================================


def _two_means(test_rows, test_labels, mu0=(0.2, 0.5), mu1=(0.8, 0.5)) -> Dataset:
    """Training rows sit exactly on the two class means."""
    inputs = np.vstack([np.array([mu0, mu1]), np.asarray(test_rows, dtype=float)])
    labels = np.concatenate([[0, 1], test_labels]).astype(np.int64)
    is_test = np.array([False, False] + [True] * len(test_labels))
    return Dataset(inputs=inputs, labels=labels, num_classes=2, is_test=is_test)


class TestSelection:
    def test_class_means_use_training_rows(self):
        data = _two_means([[0.45, 0.1]], [0])
        assert np.array_equal(class_means(data), np.array([[0.2, 0.5], [0.8, 0.5]]))

    def test_class_without_training_rows(self):
        data = Dataset(
            inputs=np.array([[0.1, 0.1], [0.9, 0.9]]),
            labels=np.array([0, 1]),
            num_classes=2,
            is_test=np.array([False, True]),
        )
        with pytest.raises(DomainError) as info:
            class_means(data)
        assert info.value.reason == "empty_class"

    def test_reach_to_vertical_bisector(self):
        means = np.array([[0.2, 0.5], [0.8, 0.5]])
        reach = bisector_reach(means, np.array([[0.4, 0.5], [0.6, 0.9], [0.5, 0.3]]), np.array([0, 0, 1]))
        assert reach == pytest.approx([0.1, -0.1, 0.0])

    def test_reach_to_diagonal_bisector(self):
        """x + y = 1 is 0.1 away in L-inf from (0.4, 0.4): both coordinates move."""
        means = np.array([[0.2, 0.2], [0.8, 0.8]])
        reach = bisector_reach(means, np.array([[0.4, 0.4]]), np.array([0]))
        assert reach == pytest.approx([0.1])

    def test_nearest_of_several_classes(self):
        means = np.array([[0.5, 0.5], [0.9, 0.5], [0.5, 0.6]])
        reach = bisector_reach(means, np.array([[0.5, 0.5]]), np.array([0]))
        assert reach == pytest.approx([0.05])

    def test_leading_rows(self):
        dataset, models = _small_setup()
        chosen = select_examples(dataset, models, SMALL_ATTACK.eps, max_examples=6)
        test = dataset.test_split()
        assert chosen.indices.tolist() == list(range(6))
        assert np.array_equal(chosen.inputs, test.inputs[:6])
        assert len(chosen) == 6

    def test_boundary_rows_are_exactly_the_band(self):
        dataset, models = _small_setup()
        eps, fraction = 0.1, 2.0
        chosen = select_examples(dataset, models, eps, selection="boundary", reach_fraction=fraction)
        test = dataset.test_split()
        reach = bisector_reach(class_means(dataset), test.inputs, test.labels)
        correct = np.all([m.predict_batch(test.inputs) == test.labels for m in models.values()], axis=0)
        expected = np.flatnonzero((reach > 0) & (reach <= fraction * eps) & correct)
        assert chosen.indices.tolist() == expected.tolist()
        assert np.all(np.diff(chosen.indices) > 0)
        assert np.array_equal(chosen.labels, test.labels[expected])

    def test_cap_applies_after_the_band(self):
        dataset, models = _small_setup()
        full = select_examples(dataset, models, 0.1, selection="boundary", reach_fraction=100.0)
        capped = select_examples(dataset, models, 0.1, selection="boundary", reach_fraction=100.0, max_examples=2)
        assert capped.indices.tolist() == full.indices[:2].tolist()

    def test_unknown_selection(self):
        dataset, models = _small_setup()
        with pytest.raises(DomainError) as info:
            select_examples(dataset, models, 0.1, selection="random")
        assert info.value.reason == "selection"

    def test_non_positive_fraction(self):
        dataset, models = _small_setup()
        with pytest.raises(DomainError):
            select_examples(dataset, models, 0.1, selection="boundary", reach_fraction=0.0)

    def test_experiment_attacks_the_selected_rows(self):
        exp = _experiment(algorithm="mi", selection="boundary", reach_fraction=100.0)
        chosen = exp.example_set()
        report = run_transfer_experiment(exp)
        assert report.n_examples == len(chosen) <= 6
        assert np.array_equal(report.labels, chosen.labels)

    def test_empty_band(self):
        with pytest.raises(ExperimentError) as info:
            run_transfer_experiment(_experiment(selection="boundary", reach_fraction=1e-12))
        assert info.value.reason == "no_examples"


# ===================================================================
# Transfer experiments
# ===================================================================


class TestTransferExperiment:
    def test_report_shape(self):
        report = run_transfer_experiment(_experiment(algorithm="mi"))
        assert report.asr.shape == (3, 3)
        assert report.adv_loss.shape == (3, 3)
        assert np.all((report.asr >= 0.0) & (report.asr <= 1.0))
        assert np.all(report.adv_loss <= 0.0)
        assert report.n_examples == 6
        assert len(report.traces["a"]) == 6
        assert report.rank_agreement.n_targets <= 3
        assert set(report.model_hashes) == {"a", "b", "c"}

    def test_budget_respected(self):
        report = run_transfer_experiment(_experiment())
        inputs, _ = _experiment().examples()
        for adv in report.adversarial.values():
            assert np.max(np.abs(adv - inputs)) <= SMALL_ATTACK.eps + 1e-12

    def test_thread_independent(self):
        serial = run_transfer_experiment(_experiment())
        parallel = run_transfer_experiment(_experiment(threads=4))
        assert np.array_equal(serial.asr, parallel.asr)
        for sid in serial.adversarial:
            assert np.array_equal(serial.adversarial[sid], parallel.adversarial[sid])

    def test_identical_models_are_symmetric(self):
        _, models = _small_setup()
        same = {mid: _clone(models["a"], mid) for mid in ("p", "q", "r")}
        report = run_transfer_experiment(_experiment(models=same, algorithm="ifgsm"))
        assert np.all(report.asr == report.asr[0, 0])
        assert report.rank_agreement.degenerate
        assert np.isnan(report.rank_agreement.value)

    def test_permutation_equivariant(self):
        _, models = _small_setup()
        base = run_transfer_experiment(_experiment(algorithm="mi"))
        order = ["c", "a", "b"]
        permuted = run_transfer_experiment(_experiment(algorithm="mi", models={m: models[m] for m in order}))
        idx = [base.target_ids.index(m) for m in order]
        assert np.array_equal(permuted.asr, base.asr[np.ix_(idx, idx)])

    def test_surrogate_subset(self):
        report = run_transfer_experiment(_experiment(algorithm="fgsm", surrogates=["b"]))
        assert report.asr.shape == (1, 3)
        assert report.surrogate_ids == ["b"]

    def test_unknown_surrogate(self):
        with pytest.raises(ConfigError) as info:
            run_transfer_experiment(_experiment(surrogates=["zz"]))
        assert "available" in str(info.value)

    def test_zoo_too_small(self):
        _, models = _small_setup()
        with pytest.raises(ExperimentError):
            run_transfer_experiment(_experiment(models={"a": models["a"], "b": models["b"]}))

    def test_untrained_model(self):
        _, models = _small_setup()
        zoo = dict(models)
        zoo["u"] = MlpClassifier.initialize(2, 4, (4,), Activation.TANH, "u", SeededRng(0))
        with pytest.raises(ExperimentError) as info:
            run_transfer_experiment(_experiment(models=zoo))
        assert info.value.reason == "untrained_model"

    def test_whitebox_dominance_counts(self):
        holds, total = run_transfer_experiment(_experiment(algorithm="mi")).whitebox_dominance()
        assert total == 6
        assert 0 <= holds <= total


class TestAblationAndSummaries:
    def test_ablation_shares_examples(self):
        reports = run_ablation(_experiment(), ["mi", "mi_sampling", "no_ascent"])
        assert list(reports) == ["mi", "mi_sampling", "no_ascent"]
        labels = [r.labels for r in reports.values()]
        assert all(np.array_equal(labels[0], other) for other in labels[1:])

    def test_compare_algorithms(self, tmp_path):
        reports = run_ablation(_experiment(), ["fgsm", "mi"])
        rows = compare_algorithms(reports)
        assert [r.algorithm for r in rows] == ["fgsm", "mi"]
        assert rows[1].min_transfer_asr <= rows[1].mean_transfer_asr <= rows[1].max_transfer_asr
        path = write_comparison_csv(tmp_path / "comparison.csv", rows)
        assert path.read_text().splitlines()[0].startswith("algorithm,mean_whitebox_asr")

    def test_eps_sweep(self):
        sweep = eps_monotonicity(_experiment(algorithm="ifgsm"), [0.01, 0.2])
        assert set(sweep) == {0.01, 0.2}
        assert all(0.0 <= v <= 1.0 for v in sweep.values())

    def test_ensemble_transfer(self):
        out = ensemble_transfer(_experiment(), ["a", "b"])
        assert list(out) == ["ensemble", "a", "b"]
        assert all(list(rates) == ["c"] for rates in out.values())

    def test_ensemble_without_held_out_model(self):
        with pytest.raises(ExperimentError):
            ensemble_transfer(_experiment(), ["a", "b", "c"])


class TestDiversity:
    def test_curves(self):
        dataset, models = _small_setup()
        inputs, labels = _experiment().examples()
        curves = diversity_comparison(models["a"], inputs, labels, SMALL_ATTACK)
        assert [c.strategy for c in curves] == ["uniform", "mcas"]
        assert all(len(c.loss_std) == 3 for c in curves)
        assert all(v >= 0.0 for c in curves for v in c.loss_std)

    def test_identical_samples(self):
        _, models = _small_setup()
        inputs, labels = _experiment().examples()
        cfg = SMALL_ATTACK.updated(xi=0.0, gamma_mcas=0.0)
        for curve in diversity_comparison(models["a"], inputs, labels, cfg):
            assert curve.loss_std == pytest.approx((0.0,) * 3, abs=1e-12)

    def test_needs_two_samples(self):
        _, models = _small_setup()
        inputs, labels = _experiment().examples()
        with pytest.raises(DomainError):
            diversity_comparison(models["a"], inputs, labels, SMALL_ATTACK.updated(n_samples=1))

    def test_sign_flip_counts(self):
        _, models = _small_setup()
        inputs, labels = _experiment().examples()
        counts = sign_flip_counts(models["b"], inputs, labels, SMALL_ATTACK)
        assert set(counts) == {"neighbor_ascent", "no_neighbor_ascent"}
        assert all(0 <= v <= 6 * 3 for v in counts.values())

    def test_sign_flip_sweep(self):
        _, models = _small_setup()
        inputs, labels = _experiment().examples()
        sweep = sign_flip_sweep(models["b"], inputs, labels, SMALL_ATTACK, scales=(1.0, 10.0))
        assert sweep.lambda_f == pytest.approx((SMALL_ATTACK.lambda_f, 10.0 * SMALL_ATTACK.lambda_f))
        first = sign_flip_counts(models["b"], inputs, labels, SMALL_ATTACK)
        assert (sweep.neighbor_ascent[0], sweep.no_neighbor_ascent[0]) == (
            first["neighbor_ascent"],
            first["no_neighbor_ascent"],
        )
        assert sweep.totals["neighbor_ascent"] == sum(sweep.neighbor_ascent)

    def test_sweep_scales_positive(self):
        _, models = _small_setup()
        inputs, labels = _experiment().examples()
        with pytest.raises(DomainError):
            sign_flip_sweep(models["b"], inputs, labels, SMALL_ATTACK, scales=(1.0, 0.0))

    def test_default_scales_step_by_three(self):
        ratios = np.array(SIGN_FLIP_SCALES[1:]) / np.array(SIGN_FLIP_SCALES[:-1])
        assert ratios == pytest.approx(3.0)
        assert len(SIGN_FLIP_SCALES) == 10


# ===================================================================
# Reports
# ===================================================================


class TestReporting:
    def test_matrix_round_trip(self, tmp_path):
        report = run_transfer_experiment(_experiment(algorithm="mi"))
        emit_report(report, tmp_path)
        rows, cols, matrix = read_matrix_csv(tmp_path / "asr.csv")
        assert rows == report.surrogate_ids and cols == report.target_ids
        assert np.array_equal(matrix, report.asr)
        _, _, loss = read_matrix_csv(tmp_path / "adv_loss.csv")
        assert np.array_equal(loss, report.adv_loss)

    def test_files_written(self, tmp_path):
        report = run_transfer_experiment(_experiment(algorithm="mi"))
        emit_report(report, tmp_path, run_config={"seed": 7})
        for name in ("asr.csv", "asr_filtered.csv", "adv_loss.csv", "manifest.json"):
            assert (tmp_path / name).exists()
        assert len(list((tmp_path / "traces" / "a").glob("*.csv"))) == 6
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["seeds"] == {"attack": 5, "master": 7}
        assert manifest["attack"]["steps"] == 3
        assert "spearman" in manifest["rank_agreement"]

    def test_two_runs_identical_bytes(self, tmp_path):
        for name in ("one", "two"):
            emit_report(run_transfer_experiment(_experiment()), tmp_path / name)
        for name in ("asr.csv", "adv_loss.csv", "manifest.json", "traces/b/00003.csv"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()

    def test_nan_becomes_null(self):
        _, models = _small_setup()
        same = {mid: _clone(models["a"], mid) for mid in ("p", "q", "r")}
        report = run_transfer_experiment(_experiment(models=same, algorithm="fgsm"))
        manifest = report_manifest(report)
        assert math.isnan(manifest["rank_agreement"]["spearman"])
        assert _json_ready(manifest)["rank_agreement"]["spearman"] is None
        assert "NaN" not in json.dumps(_json_ready(manifest))

    def test_adversarial_set_round_trip(self, tmp_path):
        adv = np.array([[0.1, 0.2], [0.3, 1.0 / 3.0]])
        labels = np.array([1, 0])
        save_adversarial_set(tmp_path / "adv.csv", adv, labels, {"algorithm": "afa", "surrogate": "a"})
        back, back_labels, meta = load_adversarial_set(tmp_path / "adv.csv")
        assert np.array_equal(back, adv)
        assert back_labels.tolist() == [1, 0]
        assert meta["surrogate"] == "a"
        assert "algorithm" not in (tmp_path / "adv.csv").read_text()

    def test_diversity_csv(self, tmp_path):
        _, models = _small_setup()
        inputs, labels = _experiment().examples()
        curves = diversity_comparison(models["a"], inputs, labels, SMALL_ATTACK)
        lines = write_diversity_csv(tmp_path / "d.csv", curves).read_text().splitlines()
        assert lines[0] == "t,uniform,mcas"
        assert len(lines) == 4


# ===================================================================
# Qualitative orderings on the toy harness
# ===================================================================

TOY_CONFIG = Path(__file__).resolve().parent.parent / "configs" / "toy.yaml"
TOY_SEEDS = range(5)


@lru_cache(maxsize=None)
def _toy_config(seed: int) -> RunConfigFile:
    return load_run_config(TOY_CONFIG).with_seed(seed)


@lru_cache(maxsize=None)
def _toy_setup(seed: int):
    config = _toy_config(seed)
    dataset = make_synthetic_dataset(config.dataset)
    return dataset, build_zoo(config.zoo, dataset, config.train)


def _toy_experiment(seed: int) -> TransferExperiment:
    config = _toy_config(seed)
    dataset, models = _toy_setup(seed)
    return TransferExperiment(
        models=dict(models),
        dataset=dataset,
        attack=config.attack,
        max_examples=config.experiment.max_examples,
        selection=config.experiment.selection,
        reach_fraction=config.experiment.reach_fraction,
    )


@lru_cache(maxsize=None)
def _toy_reports(seed: int):
    return run_ablation(_toy_experiment(seed), ("mi", "afa", "no_ascent"))


@pytest.mark.slow
class TestToyOrderings:
    def test_afa_transfers_better_than_mi(self):
        reports = [_toy_reports(seed) for seed in TOY_SEEDS]
        gaps = [r["afa"].mean_transfer_asr - r["mi"].mean_transfer_asr for r in reports]
        assert np.mean(gaps) >= 0.03, gaps

    def test_whitebox_attacks_succeed(self):
        for seed in TOY_SEEDS:
            for algo in ("mi", "afa"):
                diagonal = _toy_reports(seed)[algo].diagonal()
                assert np.min(diagonal) >= 0.95, (seed, algo, diagonal)

    def test_neighbor_ascent_does_not_hurt_transfer(self):
        reports = [_toy_reports(seed) for seed in TOY_SEEDS]
        afa = np.mean([r["afa"].mean_transfer_asr for r in reports])
        no_ascent = np.mean([r["no_ascent"].mean_transfer_asr for r in reports])
        assert no_ascent <= afa + 0.01

    def test_mcas_keeps_samples_diverse(self):
        curves = {"uniform": [], "mcas": []}
        for seed in range(3):
            config = _toy_config(seed)
            dataset, models = _toy_setup(seed)
            test = dataset.test_split()
            for curve in diversity_comparison(models["m0"], test.inputs[:50], test.labels[:50], config.attack):
                curves[curve.strategy].append(curve.loss_std)
        uniform, mcas = np.mean(curves["uniform"], axis=0), np.mean(curves["mcas"], axis=0)
        assert int(np.sum(mcas >= uniform)) >= 8, (uniform, mcas)

    def test_neighbor_ascent_fixes_sign_flips(self):
        """Summed over a lambda_f sweep, attack seeds and two surrogates, the
        update turns against g0 strictly less often with the ascent term."""
        config = _toy_config(0)
        dataset, models = _toy_setup(0)
        test = dataset.test_split()
        inputs, labels = test.inputs[:5], test.labels[:5]
        totals = {"neighbor_ascent": 0, "no_neighbor_ascent": 0}
        for surrogate in ("m0", "m3"):
            for seed in range(10):
                sweep = sign_flip_sweep(models[surrogate], inputs, labels, config.attack.updated(seed=seed))
                for key, value in sweep.totals.items():
                    totals[key] += value
        assert totals["no_neighbor_ascent"] > 0
        assert totals["neighbor_ascent"] < totals["no_neighbor_ascent"], totals

    def test_forward_scheme_close_to_best(self):
        exp = _toy_experiment(0)
        rates = {}
        for scheme in FiniteDifferenceScheme:
            report = run_transfer_experiment(replace(exp, attack=exp.attack.updated(scheme=scheme)))
            rates[scheme] = report.mean_transfer_asr
        assert rates[FiniteDifferenceScheme.FDM] >= max(rates.values()) - 0.02, rates
