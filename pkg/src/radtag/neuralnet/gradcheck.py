"""Finite-difference verification of classifier gradients."""

from dataclasses import dataclass

import numpy as np

from .reference import _bias, _maxpool, _mm, _unfold, reference_loss
from .train import batch_loss


@dataclass
class GradCheckResult:
    max_rel_error: float
    worst_parameter: str
    worst_index: tuple
    checked: int

    def passed(self, tol=1e-4):
        return self.max_rel_error <= tol


def relative_error(analytic, numeric, floor=1e-5):
    """``|a - n| / max(|a|, |n|, floor)`` elementwise. The floor keeps
    gradients near zero from turning roundoff into large ratios."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def numeric_gradients(model, x, mask, y, eps=1e-5, l2=0.0, names=None, chunk=512):
    """Central differences for every scalar of the named parameters.

    Perturbed copies are evaluated ``chunk`` at a time through the
    vectorized reference forward.
    """
    base = {n: p.data[None] for n, p in model.params.items()}
    weights = model.weight_names()
    out = {}
    for name in names if names is not None else list(model.params):
        flat = model.params[name].data.ravel()
        grad = np.empty(flat.size)
        for start in range(0, flat.size, chunk):
            idx = np.arange(start, min(start + chunk, flat.size))
            sides = []
            for sign in (1.0, -1.0):
                stacked = np.repeat(flat[None], idx.size, axis=0)
                stacked[np.arange(idx.size), idx] += sign * eps
                params = dict(base)
                params[name] = stacked.reshape((idx.size,) + model.params[name].shape)
                sides.append(reference_loss(model.config, params, x, mask, y, l2, weights))
            grad[idx] = (sides[0] - sides[1]) / (2 * eps)
        out[name] = grad.reshape(model.params[name].shape)
    return out


def analytic_gradients(model, x, mask, y, l2=0.0):
    model.zero_grad()
    batch_loss(model, x, mask, y, l2).backward()
    grads = {n: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
             for n, p in model.params.items()}
    model.zero_grad()
    return grads


def grad_check(model, sequences, targets, eps=1e-5, l2=0.0, floor=1e-5, params=None):
    """Compare backpropagated gradients with central differences.

    Every scalar of every parameter (or of the names in ``params``) is
    perturbed by ``+-eps`` with dropout disabled. Returns a
    :class:`GradCheckResult` holding the largest :func:`relative_error`.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x, mask = model.prepare_batch(sequences)
    y = np.asarray(targets, dtype=np.float64)
    analytic = analytic_gradients(model, x, mask, y, l2)
    numeric = numeric_gradients(model, x, mask, y, eps, l2, params)
    worst = (0.0, "", (0,))
    checked = 0
    for name, n in numeric.items():
        err = relative_error(analytic[name], n, floor)
        checked += err.size
        if err.size and err.max() > worst[0]:
            worst = (float(err.max()), name, np.unravel_index(err.argmax(), err.shape))
    return GradCheckResult(worst[0], worst[1], tuple(int(i) for i in worst[2]), checked)


def kink_distance(model, x):
    """Smallest distance of any ReLU input from zero, or of two distinct
    competing max-pool inputs from each other, for the CNN family.

    Central differences are only meaningful when this exceeds the step.
    Returns infinity for the RNN family, which is smooth.
    """
    cfg = model.config
    if not cfg.is_cnn:
        return np.inf
    p = {n: t.data[None] for n, t in model.params.items()}
    pre1 = _mm(_unfold(x[None], cfg.conv_kernel), p["conv1.W"])
    pre1 = pre1 + _bias(p["conv1.b"], pre1.ndim)
    h = np.maximum(pre1, 0.0)
    n = (h.shape[-2] - cfg.pool_kernel) // cfg.pool_stride + 1
    starts = np.arange(n) * cfg.pool_stride
    win = np.stack([h[..., starts + i, :] for i in range(cfg.pool_kernel)], axis=0)
    top = win.max(axis=0)
    gaps = top[None] - win
    gaps = gaps[(gaps > 0) & (top[None] > 0)]
    pre2 = _mm(_unfold(_maxpool(h, cfg.pool_kernel, cfg.pool_stride), cfg.conv_kernel), p["conv2.W"])
    pre2 = pre2 + _bias(p["conv2.b"], pre2.ndim)
    parts = [np.abs(pre1).min(), np.abs(pre2).min()]
    if gaps.size:
        parts.append(gaps.min())
    return float(min(parts))


def toy_problem(topology, seed=0, label_count=8, embed_dim=10, hidden=12, max_len=12, batch=3,
                margin=1e-3):
    """A downsized classifier plus a small random batch for gradient checks.

    Biases are drawn at random and the batch is redrawn until every ReLU
    input and max-pool comparison lies at least ``margin`` from its kink,
    so central differences never straddle a corner.
    """
    from .model import ModelConfig, build_model

    cfg = ModelConfig(topology=topology, embed_dim=embed_dim, max_len=max_len, conv1_filters=hidden,
                      conv2_filters=hidden, lstm_hidden=hidden, lstm_layers=2,
                      label_count=label_count)
    model = build_model(cfg, seed)
    rng = np.random.default_rng(seed + 1)
    for name, p in model.params.items():
        if name.endswith(".b"):
            p.data = p.data + rng.uniform(-0.1, 0.1, size=p.shape)
    for _ in range(1000):
        lengths = rng.integers(2, max_len + 1, size=batch)
        sequences = [rng.normal(size=(int(n), embed_dim)) for n in lengths]
        if kink_distance(model, model.prepare_batch(sequences)[0]) >= margin:
            break
    targets = (rng.random((batch, label_count)) < 0.3).astype(np.float64)
    return model, sequences, targets
