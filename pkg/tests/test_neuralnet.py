import math

import numpy as np
import pytest

from radtag.errors import (
    DimensionMismatch,
    EmptySequence,
    EmptySet,
    InvalidConfig,
    LabelSpaceMismatch,
    TooFewSamples,
)
from radtag.neuralnet import (
    TOPOLOGIES,
    Adam,
    EncodedSet,
    ModelConfig,
    RMSprop,
    TrainerConfig,
    attention_head,
    build_model,
    cross_validate,
    decide,
    forward,
    grad_check,
    kfold_indices,
    load_checkpoint,
    loss,
    predict_labels,
    save_checkpoint,
    train,
)
from radtag.neuralnet.autograd import Tensor
from radtag.neuralnet.checkpoint import CheckpointError
from radtag.neuralnet.gradcheck import analytic_gradients, kink_distance, toy_problem
from radtag.neuralnet.reference import reference_logits
from radtag.neuralnet.train import batch_loss


def small_config(topology, **kw):
    base = dict(topology=topology, embed_dim=10, max_len=12, conv1_filters=12, conv2_filters=12,
                lstm_hidden=12, lstm_layers=2, label_count=8, dropout_p=0.0)
    base.update(kw)
    return ModelConfig(**base)


def random_sequences(rng, count, embed_dim=10, max_len=12):
    return [rng.normal(size=(int(n), embed_dim)) for n in rng.integers(1, max_len + 1, size=count)]


class TestModelConfig:
    def test_rnn_feature_width(self):
        cfg = ModelConfig(topology="rnn-att")
        assert cfg.feature_dim == 256

    def test_cnn_second_layer(self):
        cfg = ModelConfig(topology="cnn-att")
        assert cfg.feature_dim == cfg.conv2_filters == 128

    def test_cnn_rows(self):
        assert ModelConfig(topology="cnn").cnn_rows == 56 - 2 - 1 - 2
        assert ModelConfig(topology="cnn", pool_stride=2).cnn_rows == 25

    @pytest.mark.parametrize("kw", [
        {"topology": "transformer"},
        {"embed_dim": 0},
        {"dropout_p": 1.0},
        {"topology": "cnn", "max_len": 4},
    ])
    def test_invalid(self, kw):
        with pytest.raises(InvalidConfig):
            ModelConfig(**kw)

    def test_parameter_counts(self):
        L, E = 193, 100
        conv = (3 * E * 64 + 64) + (3 * 64 * 128 + 128)
        lstm0 = 2 * (E * 512 + 128 * 512 + 512)
        lstm1 = 2 * (256 * 512 + 128 * 512 + 512)
        expected = {
            "cnn": conv + 51 * 128 * L + L,
            "cnn-att": conv + 2 * L * 128 + L,
            "rnn": lstm0 + lstm1 + 256 * L + L,
            "rnn-att": lstm0 + lstm1 + 2 * L * 256 + L,
        }
        for topology, count in expected.items():
            assert build_model(ModelConfig(topology=topology)).num_parameters() == count


class TestBuildModel:
    @pytest.mark.parametrize("topology", TOPOLOGIES)
    def test_same_seed_same_parameters(self, topology):
        a = build_model(small_config(topology), seed=3)
        b = build_model(small_config(topology), seed=3)
        for name in a.params:
            np.testing.assert_array_equal(a.params[name].data, b.params[name].data)

    def test_forget_gate_bias(self):
        model = build_model(small_config("rnn"))
        b = model.params["lstm0.fw.b"].data
        np.testing.assert_array_equal(b[12:24], 1.0)
        np.testing.assert_array_equal(np.delete(b, np.s_[12:24]), 0.0)

    def test_glorot_bounds(self):
        model = build_model(small_config("cnn"))
        w = model.params["conv1.W"].data
        limit = math.sqrt(6.0 / sum(w.shape))
        assert np.abs(w).max() <= limit

    def test_initial_values_are_float32(self):
        model = build_model(small_config("rnn-att"))
        for p in model.parameters():
            np.testing.assert_array_equal(p.data, p.data.astype(np.float32))

    def test_labels_override_count(self):
        model = build_model(small_config("cnn"), labels=["a", "b", "c"])
        assert model.config.label_count == 3


class TestForward:
    @pytest.mark.parametrize("topology", TOPOLOGIES)
    def test_full_label_space(self, topology, rng):
        model = build_model(ModelConfig(topology=topology), seed=0)
        probs = forward(model, rng.normal(size=(7, 100)))
        assert probs.shape == (193,)
        assert np.all((probs > 0) & (probs < 1))

    @pytest.mark.parametrize("topology", TOPOLOGIES)
    def test_zero_parameters_give_half(self, topology, rng):
        model = build_model(small_config(topology))
        for p in model.parameters():
            p.data = np.zeros_like(p.data)
        np.testing.assert_array_equal(forward(model, rng.normal(size=(5, 10))), 0.5)

    @pytest.mark.parametrize("topology", TOPOLOGIES)
    def test_bit_identical_reruns(self, topology):
        x = np.random.default_rng(5).normal(size=(6, 10))
        a = forward(build_model(small_config(topology), seed=1), x)
        b = forward(build_model(small_config(topology), seed=1), x)
        assert a.tobytes() == b.tobytes()

    def test_rnn_representation_width(self, rng):
        model = build_model(ModelConfig(topology="rnn-att"))
        x, mask = model.prepare_batch([rng.normal(size=(4, 100))])
        h, _, _ = model.base_representation(x, mask)
        assert h.shape == (1, 4, 256)

    def test_cnn_representation_shape(self, rng):
        model = build_model(ModelConfig(topology="cnn-att"))
        x, mask = model.prepare_batch([rng.normal(size=(4, 100))])
        h, _, _ = model.base_representation(x, mask)
        assert h.shape == (1, 51, 128)

    def test_cnn_truncates_long_sentences(self, rng):
        model = build_model(small_config("cnn"))
        long = rng.normal(size=(20, 10))
        np.testing.assert_array_equal(forward(model, long), forward(model, long[:12]))

    def test_rnn_padding_does_not_change_output(self, rng):
        model = build_model(small_config("rnn-att"))
        short = rng.normal(size=(3, 10))
        alone = model.predict_proba([short])[0]
        padded = model.predict_proba([short, rng.normal(size=(9, 10))])[0]
        np.testing.assert_allclose(alone, padded, rtol=0, atol=1e-14)

    def test_empty_sequence(self):
        model = build_model(small_config("rnn"))
        with pytest.raises(EmptySequence):
            forward(model, np.zeros((0, 10)))

    def test_wrong_width(self):
        model = build_model(small_config("rnn"))
        with pytest.raises(DimensionMismatch):
            forward(model, np.zeros((3, 11)))

    @pytest.mark.parametrize("topology", ["cnn-att", "rnn-att"])
    def test_attention_weights_are_distributions(self, topology, rng):
        model = build_model(small_config(topology))
        alpha = model.attention_weights(rng.normal(size=(5, 10)))
        assert alpha.shape[0] == 8
        np.testing.assert_allclose(alpha.sum(axis=1), 1.0, atol=1e-12)
        if topology == "rnn-att":
            assert alpha.shape[1] == 5


class TestAttentionHead:
    def test_zero_query_is_uniform(self, rng):
        H = rng.normal(size=(4, 3))
        U = np.zeros((2, 3))
        B = rng.normal(size=(2, 3))
        alpha, probs = attention_head(H, U, B, np.zeros(2))
        np.testing.assert_allclose(alpha, 0.25, atol=1e-15)
        v = H.mean(axis=0)
        expected = 1.0 / (1.0 + np.exp(-(B @ v)))
        np.testing.assert_allclose(probs, expected, rtol=1e-12)

    def test_single_row(self, rng):
        H = rng.normal(size=(1, 3))
        U = rng.normal(size=(2, 3))
        B = rng.normal(size=(2, 3))
        alpha, probs = attention_head(H, U, B, np.zeros(2))
        np.testing.assert_array_equal(alpha, 1.0)
        np.testing.assert_allclose(probs, 1.0 / (1.0 + np.exp(-(B @ H[0]))), rtol=1e-12)

    def test_hand_softmax(self):
        H = np.eye(2)
        U = np.array([[math.log(3.0), 0.0]])
        B = np.array([[1.0, 0.0]])
        alpha, probs = attention_head(H, U, B, np.zeros(1))
        np.testing.assert_allclose(alpha, [[0.75, 0.25]], atol=1e-15)
        # v = H^T alpha = [0.75, 0.25], so the logit is 0.75
        np.testing.assert_allclose(probs, [1.0 / (1.0 + math.exp(-0.75))], rtol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            attention_head(np.zeros((3, 2)), np.zeros((4, 3)), np.zeros((4, 3)), np.zeros(4))


class TestLoss:
    def test_perfect(self):
        assert loss([1.0, 0.0], [1.0, 0.0]) == pytest.approx(0.0, abs=1e-11)

    def test_half(self):
        assert loss([0.5, 0.5], [1.0, 0.0]) == pytest.approx(2 * math.log(2), abs=1e-15)

    def test_l2_penalty(self):
        base = loss([0.5, 0.5], [1.0, 0.0])
        assert loss([0.5, 0.5], [1.0, 0.0], [np.array([1.0, 1.0])], l2=1.0) - base == pytest.approx(2.0, abs=1e-14)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            loss([0.5], [1.0, 0.0])

    def test_batch_loss_excludes_biases_from_penalty(self, rng):
        model = build_model(small_config("cnn"))
        x, mask = model.prepare_batch(random_sequences(rng, 2))
        y = np.zeros((2, 8))
        plain = float(batch_loss(model, x, mask, y).data)
        penalized = float(batch_loss(model, x, mask, y, l2=0.1).data)
        weights = sum(np.sum(model.params[n].data ** 2) for n in ("conv1.W", "conv2.W", "fc.W"))
        assert penalized - plain == pytest.approx(0.1 * weights, rel=1e-12)


class TestPredictLabels:
    def test_threshold(self):
        assert predict_labels([0.9, 0.2, 0.8]) == {0, 2}

    def test_argmax_fallback(self):
        assert predict_labels([0.1, 0.3, 0.2]) == {1}

    def test_boundary_is_inclusive(self):
        model = build_model(small_config("rnn", label_count=3), labels=["a", "b", "c"])
        for p in model.parameters():
            p.data = np.zeros_like(p.data)
        assert predict_labels(model, np.ones((2, 10))) == ["a", "b", "c"]

    def test_decide_rows(self):
        probs = np.array([[0.9, 0.2], [0.1, 0.3]])
        np.testing.assert_array_equal(decide(probs), [[1, 0], [0, 1]])

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            predict_labels([0.5], threshold=1.0)


class TestGradients:
    def test_toy_rnn_att(self):
        model, sequences, targets = toy_problem("rnn-att")
        result = grad_check(model, sequences, targets, eps=1e-5)
        assert result.checked == model.num_parameters()
        assert result.passed(1e-4), result

    def test_toy_cnn_with_l2(self):
        model, sequences, targets = toy_problem("cnn", seed=2)
        assert kink_distance(model, model.prepare_batch(sequences)[0]) >= 1e-3
        assert grad_check(model, sequences, targets, l2=0.01).passed(1e-4)

    def test_unused_input_channel_has_zero_gradient(self, rng):
        model = build_model(small_config("cnn"))
        sequences = random_sequences(rng, 3)
        for s in sequences:
            s[:, 4] = 0.0
        x, mask = model.prepare_batch(sequences)
        grads = analytic_gradients(model, x, mask, np.ones((3, 8)))
        rows = [k * 10 + 4 for k in range(3)]
        assert np.all(grads["conv1.W"][rows] == 0.0)
        assert np.any(grads["conv1.W"] != 0.0)

    @pytest.mark.parametrize("topology", TOPOLOGIES)
    def test_reference_forward_agrees(self, topology, rng):
        model = build_model(small_config(topology), seed=4)
        x, mask = model.prepare_batch(random_sequences(rng, 4))
        ours = model.logits(x, mask).data
        params = {n: p.data[None] for n, p in model.params.items()}
        np.testing.assert_allclose(reference_logits(model.config, params, x, mask)[0], ours,
                                   rtol=1e-12, atol=1e-12)

    def test_eps_must_be_positive(self):
        model, sequences, targets = toy_problem("rnn")
        with pytest.raises(ValueError):
            grad_check(model, sequences, targets, eps=0.0)


class TestOptimizers:
    def test_adam_first_step(self):
        p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
        p.grad = np.array([0.5, -3.0])
        Adam([p], lr=0.1).step()
        # bias-corrected first step moves each coordinate by lr * g / (|g| + eps)
        np.testing.assert_allclose(p.data, [1.0 - 0.1 * 0.5 / (0.5 + 1e-8), -2.0 + 0.1 * 3.0 / (3.0 + 1e-8)],
                                   rtol=1e-12)

    def test_rmsprop_first_step(self):
        p = Tensor(np.array([1.0]), requires_grad=True)
        p.grad = np.array([2.0])
        RMSprop([p], lr=0.01).step()
        np.testing.assert_allclose(p.data, [1.0 - 0.01 * 2.0 / (math.sqrt(0.01 * 4.0) + 1e-8)], rtol=1e-12)

    def test_skips_parameters_without_gradient(self):
        p = Tensor(np.array([1.0]), requires_grad=True)
        RMSprop([p]).step()
        np.testing.assert_array_equal(p.data, [1.0])


def encoded(rng, count, labels=8):
    sequences = random_sequences(rng, count)
    targets = (rng.random((count, labels)) < 0.3).astype(float)
    return EncodedSet(sequences, targets, [str(i) for i in range(labels)])


class TestTraining:
    def test_memorizes_one_sample(self, rng):
        data = encoded(rng, 1)
        model = build_model(small_config("rnn-att"))
        cfg = TrainerConfig(batch_size=1, max_epochs=300, lr=1e-2, track_train_f1=False)
        _, curves = train(model, data, data, cfg, early_stopping=False)
        assert curves["train_loss"][-1] < 1e-3

    @pytest.mark.parametrize("topology", ["cnn", "cnn-att"])
    def test_cnn_loss_non_increasing_early(self, topology):
        curves = []
        for seed in range(5):
            rng = np.random.default_rng(seed)
            model = build_model(small_config(topology), seed=seed)
            data = encoded(rng, 16)
            x, mask = model.prepare_batch(data.sequences)
            opt = Adam(model.parameters(), lr=1e-4)
            values = []
            for _ in range(20):
                opt.zero_grad()
                value = batch_loss(model, x, mask, data.targets)
                value.backward()
                opt.step()
                values.append(float(value.data))
            curves.append(values)
        mean = np.mean(curves, axis=0)
        assert np.all(np.diff(mean) <= 0)

    def test_curves_and_best_state(self, rng):
        data = encoded(rng, 24)
        val = encoded(rng, 8)
        model = build_model(small_config("cnn-att"))
        cfg = TrainerConfig(batch_size=8, max_epochs=6, patience=2, lr=1e-2)
        best, curves = train(model, data, val, cfg)
        n = len(curves["epoch"])
        for key in ("train_loss", "val_accuracy", "val_micro_f1", "val_macro_f1", "val_weighted_f1",
                    "train_micro_f1"):
            assert len(curves[key]) == n
        assert curves["best_score"] == max(curves["val_micro_f1"])
        assert curves["val_micro_f1"][curves["best_epoch"] - 1] == curves["best_score"]
        for p in best.parameters():
            np.testing.assert_array_equal(p.data, p.data.astype(np.float32))

    def test_training_is_deterministic(self, rng):
        data = encoded(rng, 12)
        cfg = TrainerConfig(batch_size=4, max_epochs=3, lr=1e-2)
        a, ca = train(build_model(small_config("rnn-att", dropout_p=0.4)), data, data, cfg)
        b, cb = train(build_model(small_config("rnn-att", dropout_p=0.4)), data, data, cfg)
        assert ca["train_loss"] == cb["train_loss"]
        for name in a.params:
            assert a.params[name].data.tobytes() == b.params[name].data.tobytes()

    def test_empty_set(self, rng):
        data = encoded(rng, 4)
        empty = data.subset([])
        with pytest.raises(EmptySet):
            train(build_model(small_config("rnn")), empty, data, TrainerConfig())

    def test_label_space_mismatch(self, rng):
        data = encoded(rng, 4, labels=5)
        with pytest.raises(LabelSpaceMismatch):
            train(build_model(small_config("rnn")), data, data, TrainerConfig())

    def test_invalid_trainer_config(self):
        with pytest.raises(InvalidConfig):
            TrainerConfig(batch_size=0)

    def test_default_optimizers(self):
        cfg = TrainerConfig()
        assert cfg.resolved(ModelConfig(topology="cnn")) == ("adam", 1e-4)
        assert cfg.resolved(ModelConfig(topology="rnn-att")) == ("rmsprop", 1e-2)


class TestCrossValidation:
    def test_leave_one_out(self):
        folds = kfold_indices(5, 5)
        assert sorted(int(f[0]) for f in folds) == list(range(5))
        assert all(len(f) == 1 for f in folds)

    def test_folds_partition(self):
        folds = kfold_indices(23, 4, seed=1)
        assert sorted(np.concatenate(folds).tolist()) == list(range(23))

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            kfold_indices(3, 4)

    def test_repeatable(self, rng):
        data = encoded(rng, 9)
        cfg = TrainerConfig(batch_size=4, lr=1e-2, seed=2)
        a = cross_validate(data, small_config("cnn-att"), cfg, k=3, epochs=2)
        b = cross_validate(data, small_config("cnn-att"), cfg, k=3, epochs=2)
        assert a["folds"].shape == (3, 2)
        np.testing.assert_array_equal(a["val_mean"], b["val_mean"])
        np.testing.assert_array_equal(a["folds"].std(axis=0), a["val_std"])


class TestCheckpoint:
    @pytest.mark.parametrize("topology", TOPOLOGIES)
    def test_round_trip_bit_identical(self, topology, tmp_path, rng):
        model = build_model(small_config(topology), seed=2, labels=list("abcdefgh"))
        x = rng.normal(size=(6, 10))
        before = forward(model, x)
        path = tmp_path / "m.ckpt"
        save_checkpoint(model, path, {"note": "x"})
        loaded, meta = load_checkpoint(path)
        assert meta["note"] == "x"
        assert loaded.labels == model.labels
        assert loaded.config == model.config
        assert forward(loaded, x).tobytes() == before.tobytes()

    def test_rewrite_is_byte_identical(self, tmp_path):
        model = build_model(small_config("rnn"), seed=2)
        save_checkpoint(model, tmp_path / "a.ckpt")
        loaded, _ = load_checkpoint(tmp_path / "a.ckpt")
        save_checkpoint(loaded, tmp_path / "b.ckpt")
        assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"NOPE" + b"\0" * 16)
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_truncated(self, tmp_path):
        model = build_model(small_config("rnn"))
        path = tmp_path / "m.ckpt"
        save_checkpoint(model, path)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)
