"""Training loop, adaptive-moment optimizer, and checkpointed inference."""

import numpy as np

from . import loss as loss_mod
from . import metrics as metrics_mod
from .checkpoint import Checkpoint
from .data import pad_batch
from .errors import NumericError
from .model import Model
from .tensor import Tape, backward, softmax

np.seterr(over="ignore", under="ignore")


class Adam:
    """Adaptive moment estimation over a name -> Tensor parameter map."""

    def __init__(self, params, cfg):
        self.params = params
        self.cfg = cfg
        self.m = {n: np.zeros_like(p.data) for n, p in params.items()}
        self.v = {n: np.zeros_like(p.data) for n, p in params.items()}
        self.step_count = 0

    def step(self):
        c = self.cfg
        self.step_count += 1
        t = self.step_count
        bias1 = 1.0 - c.beta1 ** t
        bias2 = 1.0 - c.beta2 ** t
        for name, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad
            m = self.m[name]
            v = self.v[name]
            m += (1.0 - c.beta1) * (g - m)
            v += (1.0 - c.beta2) * (g * g - v)
            p.data -= (c.lr * (m / bias1)
                       / (np.sqrt(v / bias2) + c.eps)).astype(p.data.dtype)

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None


def _batches(indices, batch_size):
    for start in range(0, len(indices), batch_size):
        yield indices[start:start + batch_size]


def _forward_scores(model, records, embeddings, batch_size):
    """Positive-class probabilities in input order (inference, no tape)."""
    from .tensor import Tensor
    scores = []
    for chunk in _batches(list(range(len(records))), batch_size):
        batch = pad_batch([records[i] for i in chunk], embeddings)
        feats = Tensor(batch.features, dtype=model.dtype)
        scores.extend(model.scores(batch.tokens, feats, batch.lengths, batch.mask))
    return np.asarray(scores, dtype=np.float64)


def _batch_loss(model, batch):
    from .tensor import Tensor
    feats = Tensor(batch.features, dtype=model.dtype)
    logits = model.forward(batch.tokens, feats, batch.lengths, batch.mask)
    probs = softmax(logits, axis=-1)
    onehot = loss_mod.one_hot(batch.labels, k=model.cfg.loss.k, dtype=model.dtype)
    if model.cfg.plain_ce:
        return loss_mod.plain_ce_loss(probs, onehot)
    return loss_mod.tim_loss(probs, onehot, model.cfg.loss)


def train(cfg, train_records, val_records, embeddings, log_fn=None):
    """Train a model; returns the best-validation-MCC checkpoint and epoch log.

    Fully deterministic for a fixed (config, seed, data) triple: one
    seeded generator drives initialization and per-epoch shuffling.
    """
    rng = np.random.default_rng(cfg.seed)
    model = Model(cfg, rng=rng)
    params = model.parameters()
    opt = Adam(params, cfg.optim)
    log = []
    best = None
    best_mcc = -np.inf
    since_best = 0
    step_counter = 0
    for epoch in range(1, cfg.optim.epochs + 1):
        order = rng.permutation(len(train_records))
        epoch_losses = []
        for chunk in _batches(list(order), cfg.optim.batch_size):
            batch = pad_batch([train_records[i] for i in chunk], embeddings)
            opt.zero_grad()
            with Tape() as tape:
                loss = _batch_loss(model, batch)
            value = float(loss.data)
            step_counter += 1
            if not np.isfinite(value):
                raise NumericError(f"loss diverged at optimizer step {step_counter}")
            backward(tape, loss)
            opt.step()
            epoch_losses.append(value)
        entry = {"epoch": epoch, "train_loss": float(np.mean(epoch_losses))}
        if val_records:
            scores = _forward_scores(model, val_records, embeddings,
                                     cfg.optim.batch_size)
            labels = np.array([r.label for r in val_records])
            counts = metrics_mod.confusion_at_threshold(scores, labels, cfg.threshold)
            m = metrics_mod.threshold_metrics(counts)
            entry.update({"val_acc": m["acc"], "val_bacc": m["bacc"],
                          "val_mcc": m["mcc"]})
            current = m["mcc"]
        else:
            current = -float(entry["train_loss"])
        log.append(entry)
        if log_fn is not None:
            log_fn(entry)
        if current > best_mcc:
            best_mcc = current
            since_best = 0
            best = Checkpoint(
                config=cfg,
                params={n: p.data.copy() for n, p in params.items()},
                adam_m={n: a.copy() for n, a in opt.m.items()},
                adam_v={n: a.copy() for n, a in opt.v.items()},
                step=opt.step_count, epoch=epoch,
                rng_state=rng.bit_generator.state)
        else:
            since_best += 1
            patience = cfg.optim.early_stop_patience
            if patience and since_best >= patience:
                break
    return best, log


def model_from_checkpoint(ckpt):
    model = Model(ckpt.config, rng=np.random.default_rng(ckpt.config.seed))
    params = model.parameters()
    if set(params) != set(ckpt.params):
        missing = set(params) ^ set(ckpt.params)
        raise NumericError(f"checkpoint/parameter name mismatch: {sorted(missing)}")
    for name, p in params.items():
        p.data = ckpt.params[name].astype(p.data.dtype)
    return model


def predict(ckpt, records, embeddings):
    """Per-id positive-class probabilities in input order."""
    model = model_from_checkpoint(ckpt)
    scores = _forward_scores(model, records, embeddings,
                             ckpt.config.optim.batch_size)
    return list(zip([r.id for r in records], scores.tolist()))


def evaluate(ckpt, records, embeddings, threshold=None):
    """Score a labeled set and compute the full metric report."""
    if threshold is None:
        threshold = ckpt.config.threshold
    model = model_from_checkpoint(ckpt)
    scores = _forward_scores(model, records, embeddings,
                             ckpt.config.optim.batch_size)
    labels = np.array([r.label for r in records])
    report = metrics_mod.full_report(scores, labels, threshold)
    dist = metrics_mod.prediction_distribution(scores, labels, threshold)
    return scores, labels, report, dist
