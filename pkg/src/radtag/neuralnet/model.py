"""Sentence classifiers: CNN, RNN (bidirectional LSTM) and their per-label
attention variants, all sharing one parameter store and forward pass."""

import copy
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import DimensionMismatch, EmptySequence, InvalidConfig
from . import autograd as ag
from .autograd import Tensor

TOPOLOGIES = ("cnn", "rnn", "cnn-att", "rnn-att")
MASK_NEG = -1e30


@dataclass
class ModelConfig:
    topology: str = "rnn-att"
    embed_dim: int = 100
    max_len: int = 56
    conv1_filters: int = 64
    conv_kernel: int = 3
    pool_kernel: int = 2
    pool_stride: int = 1
    conv2_filters: int = 128
    lstm_hidden: int = 128
    lstm_layers: int = 2
    bidirectional: bool = True
    dropout_p: float = 0.4
    label_count: int = 193

    def __post_init__(self):
        self.topology = self.topology.lower()
        if self.topology not in TOPOLOGIES:
            raise InvalidConfig(f"unknown topology {self.topology!r}")
        for name in ("embed_dim", "max_len", "conv1_filters", "conv_kernel", "pool_kernel",
                     "pool_stride", "conv2_filters", "lstm_hidden", "lstm_layers", "label_count"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be positive")
        if not 0.0 <= self.dropout_p < 1.0:
            raise InvalidConfig("dropout_p must lie in [0, 1)")
        if self.is_cnn and self.cnn_rows < 1:
            raise InvalidConfig("max_len too short for the convolution stack")

    @property
    def is_cnn(self):
        return self.topology.startswith("cnn")

    @property
    def attention(self):
        return self.topology.endswith("-att")

    @property
    def cnn_rows(self):
        """Rows of the CNN base representation for a ``max_len`` input."""
        t = self.max_len - self.conv_kernel + 1
        t = (t - self.pool_kernel) // self.pool_stride + 1
        return t - self.conv_kernel + 1

    @property
    def feature_dim(self):
        if self.is_cnn:
            return self.conv2_filters
        return self.lstm_hidden * (2 if self.bidirectional else 1)

    def as_dict(self):
        return asdict(self)


def _glorot(rng, shape):
    fan_in, fan_out = shape[0], shape[-1]
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def _f32(a):
    return np.asarray(a, dtype=np.float32).astype(np.float64)


class SequenceClassifier:
    """Maps embedded token sequences to per-label probabilities."""

    def __init__(self, config, params, labels=None):
        self.config = config
        self.params = params
        self.labels = list(labels) if labels is not None else [str(i) for i in range(config.label_count)]
        if len(self.labels) != config.label_count:
            raise InvalidConfig("label list length differs from label_count")

    # parameters ---------------------------------------------------------
    def parameters(self):
        return list(self.params.values())

    def named_parameters(self):
        return list(self.params.items())

    def weight_names(self):
        return [n for n in self.params if not n.endswith(".b")]

    def num_parameters(self):
        return sum(p.data.size for p in self.params.values())

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def state(self):
        return {n: p.data.copy() for n, p in self.params.items()}

    def load_state(self, state):
        for n, p in self.params.items():
            p.data = np.array(state[n], dtype=np.float64)

    def quantize(self):
        """Round every parameter to the nearest float32 value."""
        for p in self.params.values():
            p.data = _f32(p.data)

    def copy(self):
        return SequenceClassifier(copy.deepcopy(self.config),
                                  {n: Tensor(p.data.copy(), True, n) for n, p in self.params.items()},
                                  self.labels)

    # forward ------------------------------------------------------------
    def prepare_batch(self, sequences):
        """Pad a list of ``(n_i, embed_dim)`` arrays into ``(X, mask)``."""
        cfg = self.config
        for s in sequences:
            s = np.asarray(s)
            if s.ndim != 2 or s.shape[0] == 0:
                raise EmptySequence("every sentence needs at least one token")
            if s.shape[1] != cfg.embed_dim:
                raise DimensionMismatch(f"embedding width {s.shape[1]} != {cfg.embed_dim}")
        if cfg.is_cnn:
            t = cfg.max_len
        else:
            t = max(len(s) for s in sequences)
        x = np.zeros((len(sequences), t, cfg.embed_dim))
        mask = np.zeros((len(sequences), t))
        for i, s in enumerate(sequences):
            n = min(len(s), t)
            x[i, :n] = np.asarray(s)[:n]
            mask[i, :n] = 1.0
        return x, mask

    def base_representation(self, x, mask, train=False, rng=None):
        """Return ``(H, row_mask, final_state)``; ``final_state`` is only set
        for the RNN family."""
        if self.config.is_cnn:
            return self._cnn(x, train, rng), None, None
        return self._rnn(x, mask, train, rng)

    def logits(self, x, mask, train=False, rng=None):
        cfg = self.config
        h, row_mask, final = self.base_representation(x, mask, train, rng)
        if cfg.attention:
            logits, _ = attention_tensor(h, self.params["att.U"], self.params["att.B"],
                                         self.params["att.b"], row_mask)
            return logits
        if cfg.is_cnn:
            b, r, f = h.shape
            feats = h.reshape(b, r * f)
        else:
            feats = final
        return feats @ self.params["fc.W"] + self.params["fc.b"]

    def attention_weights(self, sequence):
        """Per-label attention over base-representation rows, ``(L, rows)``."""
        if not self.config.attention:
            raise InvalidConfig("topology has no attention head")
        x, mask = self.prepare_batch([sequence])
        h, row_mask, _ = self.base_representation(x, mask)
        _, alpha = attention_tensor(h, self.params["att.U"], self.params["att.B"],
                                    self.params["att.b"], row_mask)
        a = alpha.data[0].T
        if row_mask is not None:
            a = a[:, row_mask[0] > 0]
        return a

    def predict_proba(self, sequences, batch_size=256):
        out = []
        for i in range(0, len(sequences), batch_size):
            x, mask = self.prepare_batch(sequences[i:i + batch_size])
            out.append(np.clip(ag.sigmoid_np(self.logits(x, mask).data), 1e-12, 1 - 1e-12))
        if not out:
            return np.zeros((0, self.config.label_count))
        return np.concatenate(out, axis=0)

    # topologies -----------------------------------------------------------
    def _dropout(self, h, train, rng):
        p = self.config.dropout_p
        if not train or p == 0.0:
            return h
        keep = (rng.random(h.shape) >= p) / (1.0 - p)
        return h * keep

    def _conv(self, x, name):
        u = ag.unfold1d(x, self.config.conv_kernel)
        return ag.relu(u @ self.params[name + ".W"] + self.params[name + ".b"])

    def _cnn(self, x, train, rng):
        cfg = self.config
        h = self._conv(Tensor(x), "conv1")
        h = ag.maxpool1d(h, cfg.pool_kernel, cfg.pool_stride)
        h = self._conv(h, "conv2")
        return self._dropout(h, train, rng)

    def _lstm_pass(self, xw, wh, mask, reverse):
        b, t, _ = xw.shape
        hd = wh.shape[0]
        h = Tensor(np.zeros((b, hd)))
        c = Tensor(np.zeros((b, hd)))
        outs = [None] * t
        steps = range(t - 1, -1, -1) if reverse else range(t)
        for step in steps:
            gates = xw[:, step, :] + h @ wh
            s = ag.sigmoid(gates)
            i, f, o = s[:, :hd], s[:, hd:2 * hd], s[:, 3 * hd:]
            g = ag.tanh(gates[:, 2 * hd:3 * hd])
            c_new = f * c + i * g
            h_new = o * ag.tanh(c_new)
            m = mask[:, step:step + 1]
            if m.all():
                c, h = c_new, h_new
            else:
                c = c_new * m + c * (1.0 - m)
                h = h_new * m + h * (1.0 - m)
            outs[step] = h
        return ag.stack(outs, axis=1), h

    def _rnn(self, x, mask, train, rng):
        cfg = self.config
        layer_in = Tensor(x)
        finals = None
        for layer in range(cfg.lstm_layers):
            if layer > 0:
                layer_in = self._dropout(layer_in, train, rng)
            outs = []
            finals = []
            dirs = ("fw", "bw") if cfg.bidirectional else ("fw",)
            for d in dirs:
                pre = f"lstm{layer}.{d}"
                xw = layer_in @ self.params[pre + ".Wx"] + self.params[pre + ".b"]
                seq, last = self._lstm_pass(xw, self.params[pre + ".Wh"], mask, d == "bw")
                outs.append(seq)
                finals.append(last)
            layer_in = ag.concat(outs, axis=-1) if len(outs) > 1 else outs[0]
        final = ag.concat(finals, axis=-1) if len(finals) > 1 else finals[0]
        return layer_in, mask, final


def attention_tensor(h, u, beta, bias, row_mask=None):
    """Per-label attention on a batch ``h`` of shape ``(B, rows, F)``.

    Returns ``(logits (B, L), alpha (B, rows, L))`` with
    ``alpha[:, :, l] = softmax(h @ u[l])`` over valid rows,
    ``v_l = h^T alpha_l`` and ``logit_l = beta[l] . v_l + bias[l]``.
    """
    scores = h @ u.transpose()
    if row_mask is not None and not np.all(row_mask):
        scores = scores + ((1.0 - row_mask) * MASK_NEG)[:, :, None]
    alpha = ag.softmax(scores, axis=1)
    v = alpha.transpose(0, 2, 1) @ h
    logits = (v * beta).sum(axis=-1) + bias
    return logits, alpha


def attention_head(H, U, B, b):
    """Attention weights and label probabilities for one base representation.

    ``H`` is ``(rows, F)``; ``U`` and ``B`` are ``(L, F)``; ``b`` is ``(L,)``.
    Returns ``(alpha (L, rows), probabilities (L,))``.
    """
    H = np.asarray(H, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if H.ndim != 2 or U.ndim != 2 or B.shape != U.shape or H.shape[1] != U.shape[1] or b.shape != (U.shape[0],):
        raise DimensionMismatch(f"H {H.shape}, U {U.shape}, B {B.shape}, b {b.shape}")
    logits, alpha = attention_tensor(Tensor(H[None]), Tensor(U), Tensor(B), Tensor(b))
    return alpha.data[0].T, ag.sigmoid_np(logits.data[0])


def build_model(cfg, seed=0, labels=None):
    """Initialize a classifier with seeded Glorot-uniform weights.

    Biases start at zero except the LSTM forget gates, which start at one.
    Initial values are rounded to float32 so checkpoints round-trip exactly.
    """
    if labels is not None and len(labels) != cfg.label_count:
        cfg = copy.deepcopy(cfg)
        cfg.label_count = len(labels)
    rng = np.random.default_rng(seed)
    p = {}
    if cfg.is_cnn:
        k = cfg.conv_kernel
        p["conv1.W"] = _glorot(rng, (k * cfg.embed_dim, cfg.conv1_filters))
        p["conv1.b"] = np.zeros(cfg.conv1_filters)
        p["conv2.W"] = _glorot(rng, (k * cfg.conv1_filters, cfg.conv2_filters))
        p["conv2.b"] = np.zeros(cfg.conv2_filters)
    else:
        hd = cfg.lstm_hidden
        in_dim = cfg.embed_dim
        for layer in range(cfg.lstm_layers):
            for d in (("fw", "bw") if cfg.bidirectional else ("fw",)):
                pre = f"lstm{layer}.{d}"
                p[pre + ".Wx"] = _glorot(rng, (in_dim, 4 * hd))
                p[pre + ".Wh"] = _glorot(rng, (hd, 4 * hd))
                bias = np.zeros(4 * hd)
                bias[hd:2 * hd] = 1.0
                p[pre + ".b"] = bias
            in_dim = cfg.feature_dim
    L = cfg.label_count
    if cfg.attention:
        p["att.U"] = _glorot(rng, (L, cfg.feature_dim))
        p["att.B"] = _glorot(rng, (L, cfg.feature_dim))
        p["att.b"] = np.zeros(L)
    else:
        fan = cfg.cnn_rows * cfg.conv2_filters if cfg.is_cnn else cfg.feature_dim
        p["fc.W"] = _glorot(rng, (fan, L))
        p["fc.b"] = np.zeros(L)
    params = {n: Tensor(_f32(v), True, n) for n, v in p.items()}
    return SequenceClassifier(cfg, params, labels)


def forward(model, sentence):
    """Label probabilities for one embedded sentence ``(n, embed_dim)``."""
    return model.predict_proba([np.asarray(sentence, dtype=np.float64)])[0]


def bce(probabilities, targets, clamp=1e-12):
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if p.shape != y.shape:
        raise DimensionMismatch(f"{p.shape} vs {y.shape}")
    return float(-np.sum(y * np.log(np.maximum(p, clamp)) + (1 - y) * np.log(np.maximum(1 - p, clamp))))


def l2_term(model):
    if model is None:
        return 0.0
    if isinstance(model, SequenceClassifier):
        arrays = [model.params[n].data for n in model.weight_names()]
    else:
        arrays = [np.asarray(a, dtype=np.float64) for a in model]
    return float(sum(np.sum(a * a) for a in arrays))


def loss(probabilities, targets, model=None, l2=0.0):
    """Binary cross entropy summed over labels plus ``l2 * ||weights||^2``.

    Log arguments are clamped at 1e-12. ``model`` may be a classifier
    (biases are not penalized) or an iterable of weight arrays.
    """
    value = bce(probabilities, targets)
    if l2:
        value += l2 * l2_term(model)
    return value


def predict_labels(model_or_probs, sentence=None, threshold=0.5, labels=None):
    """Labels whose probability is ``>= threshold``; the argmax label when
    none qualifies. Accepts a model plus sentence or a probability vector."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    if isinstance(model_or_probs, SequenceClassifier):
        probs = forward(model_or_probs, sentence)
        labels = labels or model_or_probs.labels
    else:
        probs = np.asarray(model_or_probs, dtype=np.float64)
    idx = np.flatnonzero(probs >= threshold)
    if idx.size == 0:
        idx = np.array([int(np.argmax(probs))])
    if labels is None:
        return set(int(i) for i in idx)
    return [labels[i] for i in idx]
