"""Tests for the flatness estimators, the vicinity bound, curvature and surfaces."""

import json

import numpy as np
import pytest

from flatattack.errors import DomainError
from flatattack.flatness import (
    adversarial_flatness,
    check_vicinity_bound,
    estimate_flatness,
    estimate_psi0,
    estimate_psi1,
    export_surface,
    grid_flatness,
    hvp_oracle,
    loss_surface_grid,
)
from flatattack.models import Activation, Layer, LossSurface, MlpClassifier, relative_error
from flatattack.numerics import SeededRng


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


class _Linear(LossSurface):
    """L(x) = w . x, so L^adv has constant gradient -w."""

    def __init__(self, w):
        self.w = np.asarray(w, dtype=np.float64)

    @property
    def input_dim(self) -> int:
        return self.w.shape[0]

    def loss_batch(self, X, y):
        return X @ self.w

    def gradient_batch(self, X, y):
        return np.tile(self.w, (X.shape[0], 1))


class _Square(LossSurface):
    """L(z) = sign * z^2 in one dimension."""

    def __init__(self, sign: float = 1.0):
        self.sign = sign

    @property
    def input_dim(self) -> int:
        return 1

    def loss_batch(self, X, y):
        return self.sign * X[:, 0] ** 2

    def gradient_batch(self, X, y):
        return self.sign * 2.0 * X


def _tanh_model(seed: int, d: int = 2, c: int = 4, hidden=(16,)) -> MlpClassifier:
    model = MlpClassifier.initialize(d, c, hidden, Activation.TANH, f"t{seed}", SeededRng(seed))
    gen = np.random.default_rng(seed)
    # larger weights than the init so the landscape is curved inside the ball
    return model.with_layers([Layer(3.0 * l.weight, gen.normal(0, 0.5, l.out_dim)) for l in model.layers])


XI = 3 * 16 / 255


# ===================================================================
# Sampled estimators
# ===================================================================


class TestZerothOrder:
    def test_zero_radius(self):
        assert estimate_psi0(_tanh_model(0), np.array([0.5, 0.5]), 1, 0.0, 100, SeededRng(0)) == 0.0

    def test_quadratic_bowl(self):
        """L^adv(z) = z^2 at 0 with xi = 0.5: the worst increase is 0.25."""
        psi0 = estimate_psi0(_Square(-1.0), np.array([0.0]), 0, 0.5, 20_000, SeededRng(1))
        assert psi0 == pytest.approx(0.25, abs=1e-3)

    def test_centre_included(self):
        """At a strict maximum of L^adv nothing increases, so psi0 is exactly 0."""
        psi0 = estimate_psi0(_Square(1.0), np.array([0.0]), 0, 0.5, 500, SeededRng(1))
        assert psi0 == 0.0

    def test_nested_samples_never_decrease(self):
        model, x = _tanh_model(2), np.array([0.4, 0.6])
        small = estimate_psi0(model, x, 0, XI, 100, SeededRng(5))
        large = estimate_psi0(model, x, 0, XI, 1000, SeededRng(5))
        assert 0.0 <= small <= large

    def test_negative_radius(self):
        with pytest.raises(DomainError):
            estimate_psi0(_Square(), np.array([0.0]), 0, -0.1, 10, SeededRng(0))


class TestFirstOrder:
    def test_linear_any_n(self):
        for n in (1, 7, 300):
            psi1 = estimate_psi1(_Linear([-2.0]), np.array([0.3]), 0, 0.2, n, SeededRng(n))
            assert psi1 == pytest.approx(0.4)

    def test_quadratic(self):
        psi1 = estimate_psi1(_Square(-1.0), np.array([0.0]), 0, 0.5, 20_000, SeededRng(2))
        assert psi1 == pytest.approx(0.5, abs=1e-3)

    def test_linear_scales_with_radius(self):
        """psi1 = xi * ||w||_2 for L = w . x, whatever the radius."""
        w = np.array([3.0, -4.0])
        for xi in (0.01, 0.05, 0.2, 0.8):
            psi1 = estimate_psi1(_Linear(w), np.array([0.5, 0.5]), 0, xi, 50, SeededRng(6))
            assert psi1 == pytest.approx(5.0 * xi, rel=1e-12)

    def test_needs_a_sample(self):
        with pytest.raises(DomainError):
            estimate_psi1(_Square(), np.array([0.0]), 0, 0.5, 0, SeededRng(0))


class TestAdversarialFlatness:
    def test_endpoints(self):
        assert adversarial_flatness(0.25, 0.5, 1.0) == 0.25
        assert adversarial_flatness(0.25, 0.5, 0.0) == 0.5

    def test_midpoint(self):
        assert adversarial_flatness(0.25, 0.5, 0.5) == pytest.approx(0.375)

    def test_beta_out_of_range(self):
        with pytest.raises(DomainError):
            adversarial_flatness(0.1, 0.1, 1.5)

    def test_combined_estimate_shares_samples(self):
        model, x = _tanh_model(3), np.array([0.5, 0.5])
        est = estimate_flatness(model, x, 2, XI, 500, 0.5, SeededRng(4))
        assert est.psi0 == estimate_psi0(model, x, 2, XI, 500, SeededRng(4))
        assert est.psi1 == estimate_psi1(model, x, 2, XI, 500, SeededRng(4))
        assert est.psi_af == pytest.approx(0.5 * est.psi0 + 0.5 * est.psi1)
        assert est.seed == 4


class TestEstimatorFidelity:
    """n = 2000 samples against 401 x 401 grid brute force on 2-D models.

    A sampled maximum falls short of the grid maximum by a random amount, so
    psi0 is held to 5% in the median with a bounded tail; the gradient norm
    varies slowly and psi1 is held to 5% everywhere.
    """

    N_SAMPLES = 2000
    SEEDS = range(20)

    @staticmethod
    def _errors(seed: int) -> tuple[float, float]:
        model = _tanh_model(10 + seed)
        gen = np.random.default_rng(seed)
        x = gen.uniform(0.2, 0.8, 2)
        y = int(gen.integers(0, 4))
        est = estimate_flatness(model, x, y, XI, TestEstimatorFidelity.N_SAMPLES, 0.5, SeededRng(seed))
        grid_psi0, grid_psi1 = grid_flatness(model, x, y, XI, 401)
        assert est.psi0 >= 0.0 and est.psi1 >= 0.0
        err0 = abs(est.psi0 - grid_psi0) / grid_psi0 if grid_psi0 > 1e-9 else abs(est.psi0 - grid_psi0)
        return err0, abs(est.psi1 - grid_psi1) / grid_psi1

    def test_against_grid(self):
        errors = np.array([self._errors(seed) for seed in self.SEEDS])
        psi0_err, psi1_err = errors[:, 0], errors[:, 1]
        assert np.median(psi0_err) <= 0.05
        assert np.max(psi0_err) <= 0.15
        assert np.max(psi1_err) <= 0.05


# ===================================================================
# Vicinity bound
# ===================================================================


class TestVicinityBound:
    """L^adv(x_adv + v) <= L^adv(x_adv) + psi_af over the ball."""

    @pytest.mark.parametrize("beta_f", [0.0, 0.5, 1.0])
    def test_no_violations_on_tanh_models(self, beta_f):
        gen = np.random.default_rng(42)
        for seed in range(20):
            model = _tanh_model(100 + seed)
            x = gen.uniform(0.2, 0.8, 2)
            y = int(gen.integers(0, 4))
            report = check_vicinity_bound(model, x, y, XI, n_grid=101, beta_f=beta_f, tol=1e-9)
            assert report.violations == 0
            assert report.total > 0
            assert report.psi_af >= 0.0

    def test_refuses_high_dimension(self):
        model = _tanh_model(0, d=4)
        with pytest.raises(DomainError) as info:
            check_vicinity_bound(model, np.full(4, 0.5), 0, XI)
        assert info.value.reason == "dimension_too_large"

    def test_refuses_coarse_grid(self):
        with pytest.raises(DomainError):
            check_vicinity_bound(_tanh_model(0), np.full(2, 0.5), 0, XI, n_grid=5)

    def test_linear_loss_is_tight(self):
        report = check_vicinity_bound(_Linear([1.0, -1.0]), np.array([0.5, 0.5]), 0, 0.1, n_grid=21, beta_f=0.0)
        assert report.violations == 0
        assert report.psi1 == pytest.approx(0.1 * np.sqrt(2.0))


# ===================================================================
# Curvature oracle
# ===================================================================


class TestHvpOracle:
    def test_linear_loss(self):
        out = hvp_oracle(_Linear([1.0, 2.0]), np.array([0.1, 0.2]), 0, np.array([1.0, 0.0]))
        assert np.array_equal(out, np.zeros(2))

    @pytest.mark.parametrize("h", [1e-5, 1e-3, 0.1])
    def test_quadratic(self, h):
        out = hvp_oracle(_Square(), np.array([0.7]), 0, np.array([1.0]), h=h)
        assert out[0] == pytest.approx(2.0, rel=1e-8)

    def test_linear_in_direction(self):
        """H(u + v) = Hu + Hv on smooth models."""
        gen = np.random.default_rng(13)
        for seed in range(10):
            model = _tanh_model(200 + seed)
            x = gen.uniform(0.2, 0.8, 2)
            u, v = gen.normal(size=2), gen.normal(size=2)
            joint = hvp_oracle(model, x, 1, u + v)
            split = hvp_oracle(model, x, 1, u) + hvp_oracle(model, x, 1, v)
            assert relative_error(joint, split) <= 1e-6

    def test_relu_refused(self):
        model = MlpClassifier.initialize(2, 3, (4,), Activation.RELU, "r", SeededRng(0))
        with pytest.raises(DomainError) as info:
            hvp_oracle(model, np.array([0.5, 0.5]), 0, np.array([1.0, 0.0]))
        assert info.value.reason == "not_smooth"


# ===================================================================
# Loss surfaces
# ===================================================================


class TestLossSurface:
    def test_constant_model(self):
        model = MlpClassifier(layers=(Layer(np.zeros((3, 2)), np.array([0.1, 0.2, 0.3])),))
        grid = loss_surface_grid(model, np.array([0.5, 0.5]), 0, SeededRng(0), 0.1, 3)
        assert grid.losses.shape == (3, 3)
        assert np.all(grid.losses == grid.losses[0, 0])

    def test_centre_is_the_point_loss(self):
        model, x = _tanh_model(1), np.array([0.3, 0.6])
        grid = loss_surface_grid(model, x, 1, SeededRng(2), 0.25, 21)
        assert grid.losses[10, 10] == model.loss(x, 1)
        assert grid.center_loss == model.loss(x, 1)

    def test_directions_orthonormal(self):
        grid = loss_surface_grid(_tanh_model(1, d=5), np.full(5, 0.5), 0, SeededRng(3), 0.1, 5)
        assert np.dot(grid.direction_a, grid.direction_b) == pytest.approx(0.0, abs=1e-12)
        assert np.linalg.norm(grid.direction_a) == pytest.approx(1.0)

    def test_deterministic_and_thread_independent(self):
        model, x = _tanh_model(4), np.array([0.5, 0.4])
        a = loss_surface_grid(model, x, 0, SeededRng(7), 0.2, 11)
        b = loss_surface_grid(model, x, 0, SeededRng(7), 0.2, 11, threads=4)
        assert np.array_equal(a.losses, b.losses)

    def test_even_resolution(self):
        with pytest.raises(DomainError):
            loss_surface_grid(_tanh_model(0), np.full(2, 0.5), 0, SeededRng(0), 0.1, 4)

    def test_export(self, tmp_path):
        grid = loss_surface_grid(_tanh_model(0), np.full(2, 0.5), 0, SeededRng(0), 0.1, 5)
        csv_path, json_path = export_surface(grid, tmp_path, stem="s")
        lines = csv_path.read_text().splitlines()
        assert lines[0].startswith("# range=")
        assert len(lines) == 2 + 5
        assert json.loads(json_path.read_text())["resolution"] == 5
