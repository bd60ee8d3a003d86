"""Training-objective math over externally supplied model outputs.

Operates on token log-probabilities and representation vectors produced by
any sequence model harness; nothing here touches a model. The contrastive
term returns analytic gradients with respect to every input vector so the
numbers can be verified against finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MM_CONVENTIONAL = "conventional-hinge"
MM_REVERSED = "reversed-hinge"
MM_MODES = (MM_CONVENTIONAL, MM_REVERSED)


class EmptySequenceError(ValueError):
    """An operation received an empty token sequence."""


class ZeroVectorError(ValueError):
    """Cosine similarity is undefined for zero vectors."""


class NonPositiveTemperatureError(ValueError):
    """Softmax temperature must be strictly positive."""


def _check_logprobs(values: Sequence[float], name: str) -> None:
    if len(values) == 0:
        raise EmptySequenceError(f"{name} is empty")
    for v in values:
        if v > 0.0:
            raise ValueError(f"{name} contains a positive log-probability: {v}")


def cross_entropy(gold_logprobs: Sequence[float]) -> float:
    """Sum of negated token log-probabilities; always >= 0."""
    _check_logprobs(gold_logprobs, "gold_logprobs")
    return -float(sum(gold_logprobs))


def max_margin(
    gold_logprobs: Sequence[float],
    neg_logprobs: Sequence[float],
    beta: float = 1.0,
    mode: str = MM_CONVENTIONAL,
) -> float:
    """Per-position hinge between gold and negative token log-probabilities.

    Positions are aligned 1..min(k, l); the longer tail is ignored. The
    default mode penalizes positions where the gold token does not beat the
    negative token by at least ``beta``:

        sum_i max(0, beta - (lg_i - ln_i))

    The reversed mode applies the hinge with the gap sign flipped,
    sum_i max(0, lg_i - ln_i + beta), penalizing the gold sequence for
    outscoring the negative; it exists for compatibility with formulations
    written that way and is not the recommended default.
    """
    _check_logprobs(gold_logprobs, "gold_logprobs")
    _check_logprobs(neg_logprobs, "neg_logprobs")
    if mode not in MM_MODES:
        raise ValueError(f"unknown max-margin mode {mode!r}")
    total = 0.0
    for lg, ln in zip(gold_logprobs, neg_logprobs):
        gap = lg - ln
        if mode == MM_CONVENTIONAL:
            total += max(0.0, beta - gap)
        else:
            total += max(0.0, gap + beta)
    return total


def pool_representation(token_vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Arithmetic mean of the constituent token vectors."""
    if len(token_vectors) == 0:
        raise EmptySequenceError("no token vectors to pool")
    stacked = np.asarray(token_vectors, dtype=float)
    if stacked.ndim != 2:
        raise ValueError("token vectors must share one dimension")
    return stacked.mean(axis=0)


@dataclass(frozen=True)
class ContrastiveBatch:
    """One contrastive instance: gold and positive representations plus M >= 1
    negatives, all nonzero vectors of equal dimension."""

    gold: np.ndarray
    positive: np.ndarray
    negatives: np.ndarray  # shape (M, d)
    temperature: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "gold", np.asarray(self.gold, dtype=float))
        object.__setattr__(self, "positive", np.asarray(self.positive, dtype=float))
        object.__setattr__(self, "negatives", np.atleast_2d(np.asarray(self.negatives, dtype=float)))
        if self.temperature <= 0.0:
            raise NonPositiveTemperatureError(f"temperature {self.temperature} <= 0")
        if self.negatives.shape[0] < 1:
            raise ValueError("need at least one negative")
        dim = self.gold.shape[-1]
        if self.gold.ndim != 1 or self.positive.shape != (dim,) or self.negatives.shape[1] != dim:
            raise ValueError("all vectors must share one dimension")
        for vec in (self.gold, self.positive, *self.negatives):
            if not np.any(vec):
                raise ZeroVectorError("zero vector in contrastive batch")


@dataclass(frozen=True)
class InfoNceGradients:
    gold: np.ndarray
    positive: np.ndarray
    negatives: np.ndarray  # shape (M, d)


def _cosine_with_grads(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    sim = float(np.dot(a, b)) / (norm_a * norm_b)
    grad_a = b / (norm_a * norm_b) - sim * a / (norm_a * norm_a)
    grad_b = a / (norm_a * norm_b) - sim * b / (norm_b * norm_b)
    return sim, grad_a, grad_b


def info_nce(batch: ContrastiveBatch) -> tuple[float, InfoNceGradients]:
    """InfoNCE loss over cosine similarities, with analytic gradients.

        L = -log( exp(cos(g, p)/tau) / sum_h exp(cos(g, h)/tau) )

    where h ranges over the positive and all negatives. The value is always
    >= 0 and invariant to positive rescaling of any single vector.
    """
    others = np.vstack([batch.positive[None, :], batch.negatives])
    count = others.shape[0]
    sims = np.empty(count)
    grads_gold = np.empty_like(others)
    grads_other = np.empty_like(others)
    for i in range(count):
        sims[i], grads_gold[i], grads_other[i] = _cosine_with_grads(batch.gold, others[i])

    z = sims / batch.temperature
    z_max = float(z.max())
    exp_z = np.exp(z - z_max)
    log_denominator = z_max + math.log(float(exp_z.sum()))
    value = -(z[0] - log_denominator)

    weights = exp_z / exp_z.sum()
    dl_dsim = weights / batch.temperature
    dl_dsim[0] -= 1.0 / batch.temperature

    grad_gold = (dl_dsim[:, None] * grads_gold).sum(axis=0)
    grad_others = dl_dsim[:, None] * grads_other
    gradients = InfoNceGradients(
        gold=grad_gold,
        positive=grad_others[0],
        negatives=grad_others[1:],
    )
    return float(value), gradients


def combined_loss(ce: float, aux: float, alpha: float) -> float:
    """Linear combination ce + alpha * aux."""
    return ce + alpha * aux


@dataclass(frozen=True)
class LossConfig:
    """Hyperparameters for the combined objectives."""

    alpha: float = 1.0
    beta: float = 1.0
    mm_mode: str = MM_CONVENTIONAL
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha < 0.0:
            raise ValueError(f"alpha {self.alpha} < 0")
        if self.beta < 0.0:
            raise ValueError(f"beta {self.beta} < 0")
        if self.mm_mode not in MM_MODES:
            raise ValueError(f"unknown max-margin mode {self.mm_mode!r}")
        if self.temperature <= 0.0:
            raise NonPositiveTemperatureError(f"temperature {self.temperature} <= 0")
