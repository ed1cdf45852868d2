"""Inference contracts: sharpening, soft labels, blending, evaluation.

The soft-label matrix is cross-checked against the scalar KL routine with
explicitly constructed smoothed one-hots (independent of the vectorized
closed form used in production).
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semobridge import inference, synthetic
from semobridge.bridge import BridgeModel, estimate_eos_norm
from semobridge.errors import EmptyClass, EmptyInput, InvalidSpec, LabelOutOfRange
from semobridge.inference import BlendConfig
from semobridge.linalg import ProjectionPair, cosine_matrix, kl_divergence, normalize_rows


def small_task(seed=0, **kw):
    base = dict(
        n_classes=5, shots=6, queries_per_class=8, val_per_class=4,
        prompts_per_class=2, dim=16, eos_dim=24, seed=seed,
    )
    base.update(kw)
    return synthetic.generate(synthetic.SynthSpec(**base))


def state_for(task, blend=None, model=None):
    proj = ProjectionPair.from_forward(task.w_txt)
    return inference.build_state(
        task.train_x, task.train_y, task.prompt_eos, task.text_txt, proj,
        model=model, blend=blend, temperature=task.temperature,
    )


class TestSharpen:
    def test_perfect_similarity_is_fixed_point(self):
        for s in (0.0, 1.0, 17.5):
            assert inference.sharpen(np.array([[1.0]]), s) == 1.0

    def test_zero_similarity_strength_two(self):
        np.testing.assert_allclose(
            inference.sharpen(np.array([[0.0]]), 2.0), [[0.1353352832366127]], rtol=1e-15
        )

    def test_zero_strength_is_constant_one(self):
        z = np.array([[-1.0, -0.3, 0.4, 1.0]])
        np.testing.assert_array_equal(inference.sharpen(z, 0.0), np.ones((1, 4)))

    def test_out_of_range_clamped(self):
        got = inference.sharpen(np.array([[1.0 + 1e-9, -1.0 - 1e-9]]), 3.0)
        np.testing.assert_allclose(got, [[1.0, np.exp(-6.0)]], rtol=1e-12)

    @given(
        z1=st.floats(-1, 1), z2=st.floats(-1, 1),
        s=st.floats(0, 30),
    )
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_similarity(self, z1, z2, s):
        lo, hi = sorted([z1, z2])
        f = inference.sharpen(np.array([[lo, hi]]), s)
        assert f[0, 0] <= f[0, 1]


class TestSoftLabelMatrix:
    def test_theta_zero_all_ones(self):
        rng = np.random.default_rng(0)
        cents = normalize_rows(rng.normal(size=(4, 8)))
        text = normalize_rows(rng.normal(size=(4, 8)))
        got = inference.soft_label_matrix(cents, text, theta=0.0, temperature=50.0)
        np.testing.assert_array_equal(got, np.ones((4, 4)))

    def test_matches_scalar_kl_oracle(self):
        rng = np.random.default_rng(1)
        cents = normalize_rows(rng.normal(size=(3, 6)))
        text = normalize_rows(rng.normal(size=(3, 6)))
        theta, temp, eps = -0.7, 25.0, 1e-6
        got = inference.soft_label_matrix(cents, text, theta, temp, eps)
        from semobridge.linalg import softmax_rows

        p = softmax_rows(cents @ text.T, temp)
        for i in range(3):
            for j in range(3):
                expected = np.exp(theta * kl_divergence(p[i], np.eye(3)[j], eps))
                np.testing.assert_allclose(got[i, j], expected, rtol=1e-10)

    def test_negative_theta_diagonally_dominant_when_aligned(self):
        cents = np.eye(4)
        got = inference.soft_label_matrix(cents, cents, theta=-1.0, temperature=30.0)
        assert np.all(np.diag(got) > got[~np.eye(4, dtype=bool)].max())
        assert np.all(got > 0) and np.all(np.isfinite(got))


class TestBlendConfig:
    def test_defaults_valid(self):
        BlendConfig().validate()

    @pytest.mark.parametrize(
        "kw",
        [
            dict(lambda1=-0.1),
            dict(lambda1=0.0, lambda2=0.0, lambda3=0.0),
            dict(alpha=-1.0),
            dict(kl_epsilon=-1e-9),
            dict(temperature=0.0),
        ],
    )
    def test_invalid_rejected(self, kw):
        with pytest.raises(InvalidSpec):
            BlendConfig(**kw).validate()


class TestPredict:
    def test_lambda1_only_reduces_to_zero_shot(self):
        task = small_task(seed=2)
        state = state_for(task, BlendConfig(lambda1=1, lambda2=0, lambda3=0))
        preds = inference.predict(task.test_x, state)
        zero_shot = np.argmax(cosine_matrix(task.test_x, task.text_txt), axis=1)
        np.testing.assert_array_equal(preds, zero_shot)

    def test_lambda2_only_matches_nearest_centroid_oracle(self):
        task = small_task(seed=3)
        state = state_for(task, BlendConfig(lambda1=0, lambda2=1, lambda3=0, theta=0.0))
        preds = inference.predict(task.test_x, state)
        cents = np.stack(
            [task.train_x[task.train_y == k].mean(axis=0) for k in range(task.n_classes)]
        )
        oracle = synthetic.oracle_nearest_centroid(task.test_x, cents)
        np.testing.assert_array_equal(preds, oracle)

    def test_blend_is_exact_linear_combination(self):
        task = small_task(seed=4)
        blend = BlendConfig(lambda1=0.3, lambda2=1.7, lambda3=0.9, theta=-2.0)
        state = state_for(task, blend)
        blended, z1, z2, z3 = inference.predict_logits(task.test_x, state)
        np.testing.assert_array_equal(
            blended, blend.lambda1 * z1 + blend.lambda2 * z2 + blend.lambda3 * z3
        )

    def test_uniform_lambda_scaling_keeps_predictions(self):
        task = small_task(seed=5)
        a = state_for(task, BlendConfig(lambda1=1, lambda2=1, lambda3=1, theta=-1.0))
        b = state_for(task, BlendConfig(lambda1=4, lambda2=4, lambda3=4, theta=-1.0))
        np.testing.assert_array_equal(
            inference.predict(task.test_x, a), inference.predict(task.test_x, b)
        )

    def test_theta_zero_leaves_components_unmixed(self):
        task = small_task(seed=6)
        state = state_for(task, BlendConfig(theta=0.0, gamma=2.0, beta=0.5))
        comp = inference.components(task.test_x, state)
        _, _, z2, z3 = inference.blend_components(comp, state.blend, state.kl_matrix)
        np.testing.assert_array_equal(z2, inference.sharpen(comp.cos_bridged_query, 2.0))
        np.testing.assert_array_equal(z3, inference.sharpen(comp.cos_bridged_shots, 0.5))

    def test_negative_theta_mixes_but_stays_positive(self):
        task = small_task(seed=6)
        state = state_for(task, BlendConfig(theta=-3.0))
        comp = inference.components(task.test_x, state)
        _, _, z2, _ = inference.blend_components(comp, state.blend, state.kl_matrix)
        unmixed = inference.sharpen(comp.cos_bridged_query, state.blend.gamma)
        assert not np.array_equal(z2, unmixed)
        assert np.all(z2 > 0) and np.all(np.isfinite(z2))

    def test_state_is_deterministic(self):
        task = small_task(seed=7)
        a, b = state_for(task), state_for(task)
        assert a.centroids_img.tobytes() == b.centroids_img.tobytes()
        assert a.bridged_centroids_txt.tobytes() == b.bridged_centroids_txt.tobytes()


class TestEvaluate:
    def test_separable_task_is_perfect(self):
        task = small_task(seed=8, image_noise=0.0, text_noise=0.0)
        state = state_for(task)
        result = inference.evaluate(task.test_x, task.test_y, state)
        assert result.accuracy == 1.0
        assert np.trace(result.confusion) == len(task.test_y)

    def test_confusion_counts_and_rates(self):
        task = small_task(seed=9)
        state = state_for(task)
        result = inference.evaluate(task.test_x, task.test_y, state)
        np.testing.assert_array_equal(
            result.confusion.sum(axis=1), np.bincount(task.test_y)
        )
        rates = inference.confusion_rates(result.confusion)
        np.testing.assert_allclose(rates.sum(axis=1), 1.0, atol=1e-12)

    def test_null_labels_hit_chance_rate(self):
        task = small_task(
            seed=10, n_classes=10, dim=16, queries_per_class=1000, shots=4
        )
        state = state_for(task)
        shuffled = np.random.default_rng(0).integers(0, 10, size=len(task.test_y))
        result = inference.evaluate(task.test_x, shuffled, state)
        assert abs(result.accuracy - 0.1) < 0.03

    def test_empty_input_rejected(self):
        task = small_task(seed=11)
        state = state_for(task)
        with pytest.raises(EmptyInput):
            inference.evaluate(np.zeros((0, task.dim)), np.zeros(0, dtype=int), state)

    def test_label_out_of_range(self):
        task = small_task(seed=12)
        state = state_for(task)
        bad = task.test_y.copy()
        bad[0] = 99
        with pytest.raises(LabelOutOfRange):
            inference.evaluate(task.test_x, bad, state)


class TestClassMeans:
    def test_empty_class_rejected(self):
        with pytest.raises(EmptyClass):
            inference.class_means(np.ones((2, 3)), np.array([0, 0]), n_classes=2)

    def test_means_match_loop(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(10, 4))
        y = rng.integers(0, 3, size=10)
        y[:3] = [0, 1, 2]
        got = inference.class_means(x, y, 3)
        for k in range(3):
            np.testing.assert_allclose(got[k], x[y == k].mean(axis=0))
