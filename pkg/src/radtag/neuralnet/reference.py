"""Plain numpy forward pass evaluated for many parameter copies at once.

Every parameter carries a leading copy axis ``P`` (size 1 broadcasts), so a
single call returns ``P`` losses. Finite-difference gradient checks use it
to evaluate hundreds of perturbed models per call; it shares no code with
the autodiff forward and therefore also serves as an independent check of
that forward.
"""

import numpy as np

from .model import MASK_NEG


def _mm(a, w):
    """``a (P, ..., n) @ w (P, n, m) -> (P, ..., m)`` with copy broadcasting."""
    p = max(a.shape[0], w.shape[0])
    a = np.broadcast_to(a, (p,) + a.shape[1:])
    w = np.broadcast_to(w, (p,) + w.shape[1:])
    out = np.matmul(a.reshape(p, -1, a.shape[-1]), w)
    return out.reshape(a.shape[:-1] + (w.shape[-1],))


def _bias(b, ndim):
    return b.reshape((b.shape[0],) + (1,) * (ndim - 2) + (b.shape[-1],))


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _unfold(x, k):
    n = x.shape[-2] - k + 1
    return np.concatenate([x[..., i:i + n, :] for i in range(k)], axis=-1)


def _maxpool(x, k, stride):
    n = (x.shape[-2] - k) // stride + 1
    starts = np.arange(n) * stride
    return np.max(np.stack([x[..., starts + i, :] for i in range(k)], axis=0), axis=0)


def _conv(x, w, b):
    out = _mm(x, w)
    return np.maximum(out + _bias(b, out.ndim), 0.0)


def _lstm(inp, wx, wh, b, mask, reverse):
    xw = _mm(inp, wx)
    xw = xw + _bias(b, xw.ndim)
    p, batch, t, four = xw.shape
    hd = four // 4
    h = np.zeros((p, batch, hd))
    c = np.zeros((p, batch, hd))
    outs = [None] * t
    for step in (range(t - 1, -1, -1) if reverse else range(t)):
        gates = xw[:, :, step] + _mm(h, wh)
        i = _sigmoid(gates[..., :hd])
        f = _sigmoid(gates[..., hd:2 * hd])
        g = np.tanh(gates[..., 2 * hd:3 * hd])
        o = _sigmoid(gates[..., 3 * hd:])
        c_new = f * c + i * g
        h_new = o * np.tanh(c_new)
        m = mask[None, :, step:step + 1]
        c = m * c_new + (1 - m) * c
        h = m * h_new + (1 - m) * h
        outs[step] = h
    return np.stack(outs, axis=2), h


def reference_logits(cfg, params, x, mask):
    """Logits ``(P, B, L)``; ``params`` maps names to ``(P, *shape)`` arrays."""
    x = np.asarray(x, dtype=np.float64)[None]
    row_mask = None
    if cfg.is_cnn:
        h = _conv(_unfold(x, cfg.conv_kernel), params["conv1.W"], params["conv1.b"])
        h = _maxpool(h, cfg.pool_kernel, cfg.pool_stride)
        h = _conv(_unfold(h, cfg.conv_kernel), params["conv2.W"], params["conv2.b"])
    else:
        h = x
        for layer in range(cfg.lstm_layers):
            outs, finals = [], []
            for d in (("fw", "bw") if cfg.bidirectional else ("fw",)):
                pre = f"lstm{layer}.{d}"
                seq, last = _lstm(h, params[pre + ".Wx"], params[pre + ".Wh"], params[pre + ".b"],
                                  mask, d == "bw")
                outs.append(seq)
                finals.append(last)
            p = max(o.shape[0] for o in outs)
            h = np.concatenate([np.broadcast_to(o, (p,) + o.shape[1:]) for o in outs], axis=-1)
        p = max(f.shape[0] for f in finals)
        final = np.concatenate([np.broadcast_to(f, (p,) + f.shape[1:]) for f in finals], axis=-1)
        row_mask = mask
    if cfg.attention:
        u, beta, b = params["att.U"], params["att.B"], params["att.b"]
        scores = _mm(h, np.swapaxes(u, -1, -2))  # (P, B, R, L)
        if row_mask is not None:
            scores = scores + ((1.0 - row_mask) * MASK_NEG)[None, :, :, None]
        scores = scores - scores.max(axis=2, keepdims=True)
        e = np.exp(scores)
        alpha = e / e.sum(axis=2, keepdims=True)
        v = np.einsum("pbrl,pbrf->pblf", alpha, np.broadcast_to(h, (alpha.shape[0],) + h.shape[1:]))
        return (v * beta[:, None]).sum(axis=-1) + b[:, None]
    if cfg.is_cnn:
        feats = h.reshape(h.shape[0], h.shape[1], -1)
    else:
        feats = final
    out = _mm(feats, params["fc.W"])
    return out + _bias(params["fc.b"], out.ndim)


def reference_loss(cfg, params, x, mask, y, l2=0.0, weight_names=()):
    """Per-copy loss ``(P,)``: batch-mean label-summed BCE plus L2."""
    z = reference_logits(cfg, params, x, mask)
    y = np.asarray(y, dtype=np.float64)[None]
    loss = (np.logaddexp(0.0, z) - z * y).sum(axis=(1, 2)) / y.shape[1]
    if l2:
        for name in weight_names:
            w = params[name]
            loss = loss + l2 * (w * w).reshape(w.shape[0], -1).sum(axis=1)
    return loss
