"""Training objectives and their exact gradients.

Classification objectives: softmax cross-entropy and the center loss
(squared distance of each latent feature to its running class centroid).
Alongside them, the feed-backward reconstruction loss: each label's one-hot
row is mapped back through the transposed decision weight into latent space,
and the KL divergence between the softmax distribution of the true latent
and that of the reconstruction is penalized. Driving it to zero pushes the
transposed weight to act as an inverse of the forward map, which tightens
the orthonormality of the decision columns.

All batch losses reduce by the mean, so loss weights keep the same meaning
at any batch size. Gradients are returned analytically next to each value.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, ShapeError


def softmax(v, axis=-1):
    """Stabilized softmax along ``axis``; rows sum to one."""
    v = np.asarray(v, dtype=np.float64)
    shifted = v - v.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(v, axis=-1):
    """log(softmax(v)) computed via log-sum-exp, safe for large magnitudes."""
    v = np.asarray(v, dtype=np.float64)
    shifted = v - v.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def one_hot(labels, n_classes):
    """One-hot rows for integer labels in [0, n_classes)."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise DataError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def _check_labels(labels, n_classes):
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ShapeError(f"labels must be 1-D, got ndim={labels.ndim}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise DataError(
            f"label out of range for {n_classes} classes: "
            f"[{labels.min()}, {labels.max()}]"
        )
    return labels


def softmax_cross_entropy(logits, labels):
    """Mean negative log-likelihood under softmax.

    Returns (loss, dloss/dlogits). The gradient is the classic
    (softmax - one_hot) / batch.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2:
        raise ShapeError(f"logits must be 2-D, got ndim={logits.ndim}")
    b, n = logits.shape
    labels = _check_labels(labels, n)
    logp = log_softmax(logits, axis=1)
    loss = float(-logp[np.arange(b), labels].mean())
    grad = (np.exp(logp) - one_hot(labels, n)) / b
    return loss, grad


@dataclass(frozen=True)
class CenterState:
    """Running per-class centroids in latent space.

    Centers move toward each batch's class means at ``update_rate``; no
    gradient flows through them.
    """

    centers: np.ndarray
    update_rate: float = 0.5

    @classmethod
    def zeros(cls, n_classes, latent_dim, update_rate=0.5):
        return cls(centers=np.zeros((n_classes, latent_dim)),
                   update_rate=update_rate)


def center_loss(latent, labels, state):
    """Half mean squared distance of each latent row to its class center.

    Returns (loss, dloss/dlatent, updated_state).
    """
    latent = np.asarray(latent, dtype=np.float64)
    if latent.ndim != 2:
        raise ShapeError(f"latent must be 2-D, got ndim={latent.ndim}")
    n_classes, dim = state.centers.shape
    if latent.shape[1] != dim:
        raise ShapeError(
            f"latent width {latent.shape[1]} != center width {dim}"
        )
    labels = _check_labels(labels, n_classes)
    b = latent.shape[0]

    diff = latent - state.centers[labels]
    loss = float(0.5 * np.sum(diff * diff) / b)
    grad = diff / b

    new_centers = state.centers.copy()
    for c in np.unique(labels):
        batch_mean = latent[labels == c].mean(axis=0)
        new_centers[c] += state.update_rate * (batch_mean - new_centers[c])
    return loss, grad, replace(state, centers=new_centers)


def _check_one_hot(rows):
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ShapeError(f"one-hot labels must be 2-D, got ndim={rows.ndim}")
    is_unit = np.all((rows == 0.0) | (rows == 1.0))
    if not is_unit or not np.all(rows.sum(axis=1) == 1.0):
        bad = int(np.argmax((rows.sum(axis=1) != 1.0)
                            | np.any((rows != 0.0) & (rows != 1.0), axis=1)))
        raise DataError(f"row {bad} is not a one-hot vector")
    return rows


def reconstruction_loss(latent, onehot_labels, w):
    """Feed-backward reconstruction loss with exact gradients.

    Each one-hot row is mapped back through the transposed decision weight,
    giving a reconstruction of the latent feature; the loss is the mean KL
    divergence between softmax(latent) and softmax(reconstruction), taken
    over the latent components. Returns (loss, dloss/dlatent, dloss/dw);
    the weight gradient is the direct term through the reconstruction path.
    """
    latent = np.asarray(latent, dtype=np.float64)
    onehot_labels = _check_one_hot(onehot_labels)
    w = np.asarray(w, dtype=np.float64)
    if latent.ndim != 2 or w.ndim != 2:
        raise ShapeError("latent and w must be 2-D")
    b, m = latent.shape
    if w.shape[0] != m:
        raise ShapeError(f"w rows {w.shape[0]} != latent width {m}")
    if onehot_labels.shape != (b, w.shape[1]):
        raise ShapeError(
            f"one-hot shape {onehot_labels.shape} != ({b}, {w.shape[1]})"
        )

    recon = onehot_labels @ w.T
    logp = log_softmax(latent, axis=1)
    logq = log_softmax(recon, axis=1)
    p = np.exp(logp)
    q = np.exp(logq)

    log_ratio = logp - logq
    kl = (p * log_ratio).sum(axis=1)
    loss = float(kl.mean())

    latent_grad = p * (log_ratio - kl[:, None]) / b
    recon_grad = (q - p) / b
    w_grad = recon_grad.T @ onehot_labels
    return loss, latent_grad, w_grad


@dataclass(frozen=True)
class LossValue:
    """Classification and reconstruction parts of one training step's loss."""

    cls: float
    re: float
    total: float
    lam: float


@dataclass(frozen=True)
class GradSeeds:
    """Gradient seeds feeding the backward pass: dloss/dlogits, the extra
    dloss/dlatent injected at the decision-layer input, and the direct
    dloss/dfinal_weight term. Any field may be None (treated as zero)."""

    logit_grad: np.ndarray = None
    latent_grad: np.ndarray = None
    w_grad: np.ndarray = None


def _merge(a, b, scale):
    if a is None and b is None:
        return None
    if a is None:
        return scale * b
    if b is None:
        return a
    return a + scale * b


def total_loss(cls_value, cls_seeds, re_value, re_seeds, lam):
    """Combine classification and reconstruction objectives.

    total = cls + lam * re; the merged seeds add the reconstruction seeds
    scaled by ``lam`` onto the classification seeds.
    """
    if lam < 0:
        raise DataError(f"loss weight must be non-negative, got {lam}")
    value = LossValue(
        cls=float(cls_value),
        re=float(re_value),
        total=float(cls_value) + lam * float(re_value),
        lam=float(lam),
    )
    merged = GradSeeds(
        logit_grad=_merge(cls_seeds.logit_grad, re_seeds.logit_grad, lam),
        latent_grad=_merge(cls_seeds.latent_grad, re_seeds.latent_grad, lam),
        w_grad=_merge(cls_seeds.w_grad, re_seeds.w_grad, lam),
    )
    return value, merged
