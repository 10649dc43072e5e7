"""Answer classifier: feature fusion, a 3-hidden-layer MLP, loss, and AMSGrad.

The network is plain numpy with hand-written backpropagation so gradients can
be validated against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import DimensionMismatch

LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class FusedFeature:
    """Concatenation of image, knowledge, and question vectors, in that order."""

    vector: np.ndarray
    image_dim: int
    knowledge_dim: int
    question_dim: int

    @property
    def image(self) -> np.ndarray:
        return self.vector[: self.image_dim]

    @property
    def knowledge(self) -> np.ndarray:
        return self.vector[self.image_dim : self.image_dim + self.knowledge_dim]

    @property
    def question(self) -> np.ndarray:
        return self.vector[self.image_dim + self.knowledge_dim :]


def fuse(
    image_vec: np.ndarray,
    knowledge_vec: np.ndarray,
    question_vec: np.ndarray,
    expected_dims: tuple[int, int, int] | None = None,
) -> FusedFeature:
    image_vec = np.asarray(image_vec, dtype=float)
    knowledge_vec = np.asarray(knowledge_vec, dtype=float)
    question_vec = np.asarray(question_vec, dtype=float)
    for name, vec in (("image", image_vec), ("knowledge", knowledge_vec), ("question", question_vec)):
        if vec.ndim != 1:
            raise DimensionMismatch(f"{name} vector must be 1-D, got shape {vec.shape}")
    if expected_dims is not None:
        actual = (image_vec.shape[0], knowledge_vec.shape[0], question_vec.shape[0])
        if actual != tuple(expected_dims):
            raise DimensionMismatch(f"segment lengths {actual} != configured {expected_dims}")
    return FusedFeature(
        vector=np.concatenate([image_vec, knowledge_vec, question_vec]),
        image_dim=image_vec.shape[0],
        knowledge_dim=knowledge_vec.shape[0],
        question_dim=question_vec.shape[0],
    )


@dataclass
class MlpParams:
    """Three hidden layers (tanh, relu, relu) and a softmax output layer."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    w4: np.ndarray
    b4: np.ndarray
    dropout: float = 0.5

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def n_classes(self) -> int:
        return self.w4.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "dropout"}

    @classmethod
    def init(
        cls,
        input_dim: int,
        hidden_dim: int,
        n_classes: int,
        rng: np.random.Generator,
        dropout: float = 0.5,
    ) -> "MlpParams":
        if not 0.0 <= dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {dropout}")

        def layer(fan_in: int, fan_out: int) -> tuple[np.ndarray, np.ndarray]:
            scale = 1.0 / np.sqrt(fan_in)
            return (
                rng.uniform(-scale, scale, size=(fan_out, fan_in)),
                rng.uniform(-scale, scale, size=fan_out),
            )

        w1, b1 = layer(input_dim, hidden_dim)
        w2, b2 = layer(hidden_dim, hidden_dim)
        w3, b3 = layer(hidden_dim, hidden_dim)
        w4, b4 = layer(hidden_dim, n_classes)
        return cls(w1=w1, b1=b1, w2=w2, b2=b2, w3=w3, b3=b3, w4=w4, b4=b4, dropout=dropout)


@dataclass(frozen=True)
class AnswerDistribution:
    probabilities: np.ndarray

    def argmax(self) -> int:
        return int(np.argmax(self.probabilities))


@dataclass
class MlpCache:
    z: np.ndarray
    a1: np.ndarray
    h1: np.ndarray
    d1: np.ndarray
    a2: np.ndarray
    h2: np.ndarray
    d2: np.ndarray
    a3: np.ndarray
    h3: np.ndarray
    d3: np.ndarray
    probs: np.ndarray
    masks: tuple[np.ndarray, np.ndarray, np.ndarray] | None


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    exp = np.exp(shifted)
    return exp / exp.sum()


def one_hot(index: int, n_classes: int) -> np.ndarray:
    target = np.zeros(n_classes)
    target[index] = 1.0
    return target


def forward_with_cache(
    z: np.ndarray | FusedFeature,
    params: MlpParams,
    train_mode: bool = False,
    seed: int = 0,
) -> tuple[AnswerDistribution, MlpCache]:
    vector = z.vector if isinstance(z, FusedFeature) else np.asarray(z, dtype=float)
    if vector.shape != (params.input_dim,):
        raise DimensionMismatch(
            f"input length {vector.shape} does not match the model's {params.input_dim}"
        )
    masks = None
    if train_mode and params.dropout > 0.0:
        rng = np.random.default_rng(seed)
        keep = 1.0 - params.dropout
        masks = tuple(
            (rng.random(w.shape[0]) < keep).astype(float) / keep
            for w in (params.w1, params.w2, params.w3)
        )

    def drop(h: np.ndarray, layer: int) -> np.ndarray:
        return h * masks[layer] if masks is not None else h

    a1 = params.w1 @ vector + params.b1
    h1 = np.tanh(a1)
    d1 = drop(h1, 0)
    a2 = params.w2 @ d1 + params.b2
    h2 = np.maximum(a2, 0.0)
    d2 = drop(h2, 1)
    a3 = params.w3 @ d2 + params.b3
    h3 = np.maximum(a3, 0.0)
    d3 = drop(h3, 2)
    logits = params.w4 @ d3 + params.b4
    probs = softmax(logits)
    cache = MlpCache(
        z=vector, a1=a1, h1=h1, d1=d1, a2=a2, h2=h2, d2=d2, a3=a3, h3=h3, d3=d3,
        probs=probs, masks=masks,
    )
    return AnswerDistribution(probabilities=probs), cache


def forward(
    z: np.ndarray | FusedFeature,
    params: MlpParams,
    train_mode: bool = False,
    seed: int = 0,
) -> AnswerDistribution:
    dist, _ = forward_with_cache(z, params, train_mode=train_mode, seed=seed)
    return dist


def loss(target: np.ndarray, predicted: AnswerDistribution | np.ndarray) -> float:
    """Categorical cross-entropy, -sum(y * log(y')), with the log floored at 1e-12."""
    probs = predicted.probabilities if isinstance(predicted, AnswerDistribution) else predicted
    target = np.asarray(target, dtype=float)
    if target.shape != probs.shape:
        raise DimensionMismatch(f"target shape {target.shape} != prediction {probs.shape}")
    return float(-np.sum(target * np.log(np.maximum(probs, LOG_FLOOR))))


def backward(
    cache: MlpCache, target: np.ndarray, params: MlpParams
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Gradients of the cross-entropy loss for all layers, plus d(loss)/d(input)."""
    target = np.asarray(target, dtype=float)
    d_logits = cache.probs - target  # softmax + cross-entropy identity
    grads: dict[str, np.ndarray] = {}
    grads["w4"] = np.outer(d_logits, cache.d3)
    grads["b4"] = d_logits
    dd3 = params.w4.T @ d_logits
    dh3 = dd3 * cache.masks[2] if cache.masks is not None else dd3
    da3 = dh3 * (cache.a3 > 0.0)
    grads["w3"] = np.outer(da3, cache.d2)
    grads["b3"] = da3
    dd2 = params.w3.T @ da3
    dh2 = dd2 * cache.masks[1] if cache.masks is not None else dd2
    da2 = dh2 * (cache.a2 > 0.0)
    grads["w2"] = np.outer(da2, cache.d1)
    grads["b2"] = da2
    dd1 = params.w2.T @ da2
    dh1 = dd1 * cache.masks[0] if cache.masks is not None else dd1
    da1 = dh1 * (1.0 - cache.h1**2)
    grads["w1"] = np.outer(da1, cache.z)
    grads["b1"] = da1
    d_input = params.w1.T @ da1
    return grads, d_input


@dataclass
class OptimizerState:
    """AMSGrad state in its original form (no bias correction)."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] | None = None
    v: dict[str, np.ndarray] | None = None
    v_hat: dict[str, np.ndarray] | None = None

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], learning_rate: float) -> "OptimizerState":
        return cls(
            learning_rate=learning_rate,
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            v_hat={k: np.zeros_like(p) for k, p in params.items()},
        )


def amsgrad_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
) -> OptimizerState:
    """One in-place update: v_hat keeps the running elementwise max of v."""
    state.step += 1
    for name, param in params.items():
        g = grads[name]
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * g**2
        state.v_hat[name] = np.maximum(state.v_hat[name], state.v[name])
        param -= state.learning_rate * state.m[name] / (np.sqrt(state.v_hat[name]) + state.eps)
    return state


def accumulate_grads(
    total: dict[str, np.ndarray] | None, grads: dict[str, np.ndarray]
) -> dict[str, np.ndarray]:
    if total is None:
        return {k: g.copy() for k, g in grads.items()}
    for k, g in grads.items():
        total[k] += g
    return total


def scale_grads(grads: dict[str, np.ndarray], factor: float) -> dict[str, np.ndarray]:
    return {k: g * factor for k, g in grads.items()}
