import numpy as np
import pytest

from robustsvm import AttackConfig, InputError, cw_l2, fgsm, pgd, run_attack, zoo_adam
from robustsvm.attacks import attack_records, central_difference, write_attack_dump

EPS = 8.0 / 255.0


class LinearScorer:
    """Duck-typed scorer f(x) = w.x + b for analytic attack fixtures."""

    def __init__(self, w, b=0.0):
        self.w = np.asarray(w, dtype=np.float64)
        self.b = b
        self.gradient_calls = 0

    def decision_function(self, X):
        return np.atleast_2d(X) @ self.w + self.b

    def input_gradient(self, X):
        self.gradient_calls += 1
        return np.tile(self.w, (np.atleast_2d(X).shape[0], 1))


class TestAttackConfig:
    def test_defaults_match_reported_setup(self):
        cfg = AttackConfig()
        assert cfg.epsilon == pytest.approx(8.0 / 255.0)
        assert cfg.pgd_steps == 10
        assert cfg.pgd_step == pytest.approx(cfg.epsilon / 4.0)
        assert cfg.zoo_eta == 0.01
        assert cfg.zoo_beta1 == 0.9
        assert cfg.zoo_beta2 == 0.999
        assert cfg.zoo_h == 1e-4
        assert (cfg.clip_min, cfg.clip_max) == (0.0, 1.0)

    def test_validation(self):
        with pytest.raises(InputError):
            AttackConfig(family="jsma")
        with pytest.raises(InputError):
            AttackConfig(epsilon=-0.1)
        with pytest.raises(InputError):
            AttackConfig(pgd_steps=0)
        with pytest.raises(InputError):
            AttackConfig(clip_min=1.0, clip_max=0.0)

    def test_explicit_step_size(self):
        assert AttackConfig(pgd_step_size=0.5).pgd_step == 0.5


class TestFGSM:
    def test_zero_budget_is_identity(self):
        scorer = LinearScorer([1.0, -2.0])
        x = np.array([0.3, 0.6])
        assert np.array_equal(fgsm(scorer, x, 1, AttackConfig(epsilon=0.0)), x)

    def test_one_dimensional_direction(self):
        # positive gradient, y = +1: move against the gradient
        scorer = LinearScorer([2.5])
        got = fgsm(scorer, np.array([0.5]), 1, AttackConfig(epsilon=0.1))
        assert got == pytest.approx([0.4])
        got = fgsm(scorer, np.array([0.5]), -1, AttackConfig(epsilon=0.1))
        assert got == pytest.approx([0.6])

    def test_budget_and_box(self, toy_model, blobs_small):
        X = blobs_small.features[:25]
        y = blobs_small.labels[:25]
        X_adv = fgsm(toy_model, X, y, AttackConfig(epsilon=EPS))
        assert np.abs(X_adv - X).max() <= EPS + 1e-12
        assert X_adv.min() >= 0.0 and X_adv.max() <= 1.0

    def test_label_batch_mismatch(self, toy_model):
        with pytest.raises(InputError):
            fgsm(toy_model, np.zeros((3, toy_model.d)), np.ones(2), AttackConfig())


class TestPGD:
    def test_single_full_step_equals_fgsm(self, toy_model, blobs_small):
        X = blobs_small.features[:25]
        y = blobs_small.labels[:25]
        cfg = AttackConfig(epsilon=EPS, pgd_steps=1, pgd_step_size=EPS)
        assert np.array_equal(pgd(toy_model, X, y, cfg), fgsm(toy_model, X, y, AttackConfig(epsilon=EPS)))

    def test_ball_and_box_contract(self, toy_model, blobs_small):
        X = blobs_small.features[:25]
        y = blobs_small.labels[:25]
        cfg = AttackConfig(epsilon=EPS, pgd_steps=10)
        X_adv = pgd(toy_model, X, y, cfg)
        assert np.abs(X_adv - X).max() <= EPS + 1e-12
        assert X_adv.min() >= 0.0 and X_adv.max() <= 1.0

    def test_multi_step_dominates_fgsm(self, toy_model, blobs_small):
        X = blobs_small.features[:40]
        y = blobs_small.labels[:40]
        cfg = AttackConfig(epsilon=EPS, pgd_steps=10)
        loss_pgd = 1.0 - y * toy_model.decision_function(pgd(toy_model, X, y, cfg))
        loss_fgsm = 1.0 - y * toy_model.decision_function(fgsm(toy_model, X, y, AttackConfig(epsilon=EPS)))
        assert (loss_pgd >= loss_fgsm - 1e-12).all()

    def test_deterministic(self, toy_model, blobs_small):
        X = blobs_small.features[:10]
        y = blobs_small.labels[:10]
        cfg = AttackConfig(epsilon=EPS, pgd_steps=5)
        assert np.array_equal(pgd(toy_model, X, y, cfg), pgd(toy_model, X, y, cfg))


class TestCWL2:
    def test_already_misclassified_returns_clean(self):
        scorer = LinearScorer([1.0, 0.0])
        x = np.array([0.4, 0.5])  # score 0.4 > 0, label -1: already wrong
        got = cw_l2(scorer, x, -1, AttackConfig(family="cw"))
        assert np.array_equal(got, x)

    def test_zero_trade_off_stays_clean(self):
        scorer = LinearScorer([1.0, 0.0], b=-0.2)
        x = np.array([0.4, 0.5])
        got = cw_l2(scorer, x, 1, AttackConfig(family="cw", cw_c=0.0))
        assert np.array_equal(got, x)

    def test_hyperplane_minimal_distortion_direction(self):
        # for f(x) = w.x the minimal L2 crossing moves along -y w / ||w||
        w = np.array([2.0, 1.0])
        scorer = LinearScorer(w, b=-1.0)
        x = np.array([0.6, 0.5])  # score 0.7, y=+1
        cfg = AttackConfig(family="cw", cw_c=10.0, cw_iters=200, cw_lr=0.02)
        x_adv = cw_l2(scorer, x, 1, cfg)
        delta = x_adv - x
        direction = -w / np.linalg.norm(w)
        cos_angle = float(delta @ direction) / np.linalg.norm(delta)
        assert np.degrees(np.arccos(np.clip(cos_angle, -1, 1))) <= 5.0
        assert scorer.decision_function(x_adv[None, :])[0] < 0  # actually crossed

    def test_smallest_successful_iterate_returned(self, toy_model, blobs_small):
        X = blobs_small.features[:15]
        y = blobs_small.labels[:15]
        cfg = AttackConfig(family="cw", cw_c=20.0, cw_iters=40, cw_lr=0.05)
        X_adv = cw_l2(toy_model, X, y, cfg)
        scores = toy_model.decision_function(X_adv)
        clean_scores = toy_model.decision_function(X)
        for i in range(15):
            if y[i] * clean_scores[i] < 0:
                assert np.array_equal(X_adv[i], X[i])

    def test_box_respected(self, toy_model, blobs_small):
        X = blobs_small.features[:15]
        y = blobs_small.labels[:15]
        X_adv = cw_l2(toy_model, X, y, AttackConfig(family="cw", cw_iters=30))
        assert X_adv.min() >= 0.0 and X_adv.max() <= 1.0


class TestZOO:
    def test_central_difference_exact_on_quadratic(self):
        got = central_difference(lambda v: float(v[0] ** 2), np.array([1.0]), 0, 0.1)
        assert got == pytest.approx(2.0, abs=1e-12)

    def test_zero_step_is_identity(self, toy_model, blobs_small):
        X = blobs_small.features[:5]
        y = blobs_small.labels[:5]
        cfg = AttackConfig(family="zoo", zoo_eta=0.0, zoo_iters=20)
        assert np.array_equal(zoo_adam(toy_model, X, y, cfg, seed=3), X)

    def test_black_box_contract(self, toy_model, blobs_small):
        class CountingScorer:
            def __init__(self, inner):
                self.inner = inner
                self.gradient_calls = 0

            def decision_function(self, X):
                return self.inner.decision_function(X)

            def input_gradient(self, X):
                self.gradient_calls += 1
                return self.inner.input_gradient(X)

        counted = CountingScorer(toy_model)
        cfg = AttackConfig(family="zoo", zoo_iters=10)
        zoo_adam(counted, blobs_small.features[:4], blobs_small.labels[:4], cfg, seed=1)
        assert counted.gradient_calls == 0

    def test_deterministic_given_seed(self, toy_model, blobs_small):
        X = blobs_small.features[:4]
        y = blobs_small.labels[:4]
        cfg = AttackConfig(family="zoo", zoo_iters=15)
        a = zoo_adam(toy_model, X, y, cfg, seed=9)
        b = zoo_adam(toy_model, X, y, cfg, seed=9)
        assert np.array_equal(a, b)
        c = zoo_adam(toy_model, X, y, cfg, seed=10)
        assert not np.array_equal(a, c)

    def test_box_respected(self, toy_model, blobs_small):
        X = blobs_small.features[:4]
        y = blobs_small.labels[:4]
        out = zoo_adam(toy_model, X, y, AttackConfig(family="zoo", zoo_iters=30), seed=2)
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_reduces_margin_loss(self, toy_model, blobs_small):
        X = blobs_small.features[:8]
        y = blobs_small.labels[:8]
        cfg = AttackConfig(family="zoo", zoo_iters=150, zoo_eta=0.02)
        X_adv = zoo_adam(toy_model, X, y, cfg, seed=5)
        before = (y * toy_model.decision_function(X)).sum()
        after = (y * toy_model.decision_function(X_adv)).sum()
        assert after < before


def test_run_attack_dispatch(toy_model, blobs_small):
    X = blobs_small.features[:3]
    y = blobs_small.labels[:3]
    for family in ("fgsm", "pgd", "cw", "zoo"):
        cfg = AttackConfig(family=family, pgd_steps=2, cw_iters=3, zoo_iters=3)
        out = run_attack(toy_model, X, y, cfg, seed=0)
        assert out.shape == X.shape


def test_attack_dump(tmp_path, toy_model, blobs_small):
    X = blobs_small.features[:6]
    y = blobs_small.labels[:6]
    X_adv = fgsm(toy_model, X, y, AttackConfig(epsilon=EPS))
    records = attack_records(toy_model, X, y, X_adv)
    assert len(records) == 6
    for r in records:
        assert set(r) == {"sample_id", "clean_label", "clean_score", "adv_score", "l2_distortion", "linf_distortion", "success"}
        assert r["linf_distortion"] <= EPS + 1e-12
    path = tmp_path / "dump.csv"
    write_attack_dump(path, records)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "sample_id,clean_label,clean_score,adv_score,l2_distortion,linf_distortion,success"
    assert len(lines) == 7
