"""Mini-batch training with early stopping, plus k-fold cross-validation."""

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import EmptySet, InvalidConfig, LabelSpaceMismatch, TooFewSamples
from ..metrics import evaluate
from . import autograd as ag
from .model import build_model
from .optim import make_optimizer


@dataclass
class TrainerConfig:
    batch_size: int = 1024
    lr: float = None
    l2_penalty: float = 0.0
    optimizer: str = None
    max_epochs: int = 500
    early_stop_metric: str = "micro_f1"
    patience: int = 10
    seed: int = 0
    threshold: float = 0.5
    track_train_f1: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise InvalidConfig("max_epochs must be >= 1")
        if self.patience < 1:
            raise InvalidConfig("patience must be >= 1")
        if self.early_stop_metric not in ("accuracy", "micro_f1", "macro_f1", "weighted_f1"):
            raise InvalidConfig(f"unknown early_stop_metric {self.early_stop_metric!r}")

    def resolved(self, model_cfg):
        """Fill topology-dependent defaults: Adam at 1e-4 for the CNN
        family, RMSprop at 1e-2 for the RNN family."""
        opt = self.optimizer or ("adam" if model_cfg.is_cnn else "rmsprop")
        lr = self.lr if self.lr is not None else (1e-4 if model_cfg.is_cnn else 1e-2)
        return opt, float(lr)

    def as_dict(self):
        return asdict(self)


@dataclass
class EncodedSet:
    """Embedded sentences with multi-hot targets over ``labels``."""
    sequences: list
    targets: np.ndarray
    labels: list

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=np.float64).reshape(len(self.sequences), len(self.labels))

    def __len__(self):
        return len(self.sequences)

    def subset(self, idx):
        return EncodedSet([self.sequences[i] for i in idx], self.targets[list(idx)], self.labels)


def batch_loss(model, x, mask, y, l2=0.0, train=False, rng=None):
    """Mean over the batch of label-summed BCE, plus ``l2 * ||weights||^2``."""
    z = model.logits(x, mask, train=train, rng=rng)
    total = ag.bce_with_logits(z, y) * (1.0 / len(y))
    if l2:
        for name in model.weight_names():
            w = model.params[name]
            total = total + (w * w).sum() * l2
    return total


def _batches(data, batch_size, rng, bucketed):
    order = rng.permutation(len(data))
    if bucketed and len(data) > batch_size:
        # sort by length inside large shuffled pools to limit padding
        pool = batch_size * 50
        chunks = []
        for s in range(0, len(order), pool):
            part = order[s:s + pool]
            part = part[np.argsort([len(data.sequences[i]) for i in part], kind="stable")]
            chunks.extend(part[i:i + batch_size] for i in range(0, len(part), batch_size))
        return [chunks[i] for i in rng.permutation(len(chunks))]
    return [order[i:i + batch_size] for i in range(0, len(order), batch_size)]


def _indicator_sets(matrix):
    return [set(np.flatnonzero(row).tolist()) for row in matrix]


def decide(probs, threshold=0.5):
    """Multi-hot decisions with the argmax fallback applied row-wise."""
    out = (probs >= threshold).astype(np.float64)
    empty = out.sum(axis=1) == 0
    out[np.flatnonzero(empty), probs[empty].argmax(axis=1)] = 1.0
    return out


def score(model, data, threshold=0.5):
    probs = model.predict_proba(data.sequences)
    pred = decide(probs, threshold)
    return evaluate(_indicator_sets(data.targets), _indicator_sets(pred), range(len(data.labels)))


def _check_sets(model, train_set, val_set):
    if len(train_set) == 0 or (val_set is not None and len(val_set) == 0):
        raise EmptySet("training and validation sets must be non-empty")
    if list(train_set.labels) != list(model.labels) or (
            val_set is not None and list(val_set.labels) != list(model.labels)):
        raise LabelSpaceMismatch("data label space differs from the model's")


def train(model, train_set, val_set, cfg, epochs=None, early_stopping=True, log=None):
    """Fit ``model`` and return ``(best_model, curves)``.

    ``curves`` maps ``epoch``, ``train_loss``, ``val_accuracy``,
    ``val_micro_f1``, ``val_macro_f1``, ``val_weighted_f1`` (and
    ``train_micro_f1`` when tracked) to per-epoch lists; ``best_epoch``
    holds the 1-based epoch of the retained model. The retained model is
    the one with the highest validation score, rounded to float32.
    """
    _check_sets(model, train_set, val_set)
    opt_name, lr = cfg.resolved(model.config)
    opt = make_optimizer(opt_name, model.parameters(), lr)
    rng = np.random.default_rng(cfg.seed)
    max_epochs = epochs or cfg.max_epochs
    keys = ["epoch", "train_loss", "val_accuracy", "val_micro_f1", "val_macro_f1", "val_weighted_f1"]
    if cfg.track_train_f1:
        keys.append("train_micro_f1")
    curves = {k: [] for k in keys}
    best_score, best_state, best_epoch, stale = -np.inf, model.state(), 0, 0
    bucketed = not model.config.is_cnn
    for epoch in range(1, max_epochs + 1):
        total, seen = 0.0, 0
        for idx in _batches(train_set, cfg.batch_size, rng, bucketed):
            x, mask = model.prepare_batch([train_set.sequences[i] for i in idx])
            y = train_set.targets[idx]
            opt.zero_grad()
            value = batch_loss(model, x, mask, y, cfg.l2_penalty, train=True, rng=rng)
            value.backward()
            opt.step()
            total += float(value.data) * len(idx)
            seen += len(idx)
        curves["epoch"].append(epoch)
        curves["train_loss"].append(total / seen)
        report = score(model, val_set, cfg.threshold)
        for k in ("accuracy", "micro_f1", "macro_f1", "weighted_f1"):
            curves["val_" + k].append(getattr(report, k))
        if cfg.track_train_f1:
            curves["train_micro_f1"].append(score(model, train_set, cfg.threshold).micro_f1)
        current = getattr(report, cfg.early_stop_metric)
        if log is not None:
            log(epoch, curves)
        if current > best_score:
            best_score, best_state, best_epoch, stale = current, model.state(), epoch, 0
        else:
            stale += 1
            if early_stopping and stale >= cfg.patience:
                break
    best = model.copy()
    best.load_state(best_state)
    best.quantize()
    curves["best_epoch"] = best_epoch
    curves["best_score"] = float(best_score)
    return best, curves


def kfold_indices(n, k, seed=0):
    if k < 2:
        raise TooFewSamples("k must be at least 2")
    if n < k:
        raise TooFewSamples(f"{n} samples cannot form {k} folds")
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(order, k)]


def cross_validate(corpus, model_cfg, trainer_cfg, k=11, epochs=150, labels=None):
    """Train one fresh model per fold for a fixed number of epochs.

    Returns ``{"epoch", "val_mean", "val_std", "train_mean", "train_std",
    "folds"}`` where the means and standard deviations are per-epoch
    validation (and training) MicroF1 across folds.
    """
    folds = kfold_indices(len(corpus), k, trainer_cfg.seed)
    val_curves, train_curves = [], []
    for i, held in enumerate(folds):
        held_set = set(held.tolist())
        train_idx = [j for j in range(len(corpus)) if j not in held_set]
        if not train_idx:
            train_idx = list(held)
        model = build_model(model_cfg, seed=trainer_cfg.seed + i, labels=corpus.labels)
        _, curves = train(model, corpus.subset(train_idx), corpus.subset(held), trainer_cfg,
                          epochs=epochs, early_stopping=False)
        val_curves.append(curves["val_micro_f1"])
        train_curves.append(curves.get("train_micro_f1", curves["val_micro_f1"]))
    v = np.array(val_curves)
    t = np.array(train_curves)
    return {
        "epoch": np.arange(1, v.shape[1] + 1),
        "val_mean": v.mean(axis=0), "val_std": v.std(axis=0),
        "train_mean": t.mean(axis=0), "train_std": t.std(axis=0),
        "folds": v,
    }
