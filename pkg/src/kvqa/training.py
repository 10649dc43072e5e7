"""Joint training of the question encoder and answer classifier.

Training is deliberately single-threaded and fully seeded: two runs with the
same inputs, config, and seed produce bit-identical parameters, metrics, and
checkpoints.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptyDataset, IoFailure, VersionMismatch
from .ingest import AnswerVocab
from .model import (
    MlpParams,
    OptimizerState,
    accumulate_grads,
    amsgrad_step,
    backward,
    forward_with_cache,
    fuse,
    loss,
    one_hot,
    scale_grads,
)
from .text_encoder import LstmParams, lstm_backward, lstm_forward

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    image_dim: int = 2048
    embedding_dim: int = 300
    lstm_hidden: int = 1024
    mlp_hidden: int = 1024
    n_classes: int = 2000
    dropout: float = 0.5
    freeze_encoder: bool = False

    @property
    def fused_dim(self) -> int:
        # knowledge vectors share the word-embedding dimension
        return self.image_dim + self.embedding_dim + self.lstm_hidden


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 100
    learning_rate: float = 0.001
    seed: int = 0


@dataclass(frozen=True)
class TrainingExample:
    question_id: int
    image_id: int
    image_vec: np.ndarray
    knowledge_vec: np.ndarray
    token_vecs: np.ndarray  # (n_tokens, embedding_dim)
    target: int


@dataclass
class VqaModel:
    config: ModelConfig
    lstm: LstmParams
    mlp: MlpParams

    def parameters(self) -> dict[str, np.ndarray]:
        params = {f"lstm.{k}": v for k, v in self.lstm.arrays().items()}
        params.update({f"mlp.{k}": v for k, v in self.mlp.arrays().items()})
        return params

    def trainable_parameters(self) -> dict[str, np.ndarray]:
        params = self.parameters()
        if self.config.freeze_encoder:
            params = {k: v for k, v in params.items() if not k.startswith("lstm.")}
        return params


def init_model(cfg: ModelConfig, seed: int) -> VqaModel:
    rng = np.random.default_rng(seed)
    lstm = LstmParams.init(cfg.embedding_dim, cfg.lstm_hidden, rng)
    mlp = MlpParams.init(cfg.fused_dim, cfg.mlp_hidden, cfg.n_classes, rng, dropout=cfg.dropout)
    return VqaModel(config=cfg, lstm=lstm, mlp=mlp)


def example_forward(
    example: TrainingExample, model: VqaModel, train_mode: bool = False, seed: int = 0
):
    question_vec, lstm_steps = lstm_forward(example.token_vecs, model.lstm)
    fused = fuse(
        example.image_vec,
        example.knowledge_vec,
        question_vec,
        expected_dims=(
            model.config.image_dim,
            model.config.embedding_dim,
            model.config.lstm_hidden,
        ),
    )
    dist, mlp_cache = forward_with_cache(fused, model.mlp, train_mode=train_mode, seed=seed)
    return dist, (lstm_steps, mlp_cache)


def example_backward(
    model: VqaModel, caches, target_vec: np.ndarray
) -> dict[str, np.ndarray]:
    """Gradients for the full parameter set, backpropagated through the fusion."""
    lstm_steps, mlp_cache = caches
    mlp_grads, d_input = backward(mlp_cache, target_vec, model.mlp)
    grads = {f"mlp.{k}": v for k, v in mlp_grads.items()}
    if not model.config.freeze_encoder:
        d_question = d_input[model.config.image_dim + model.config.embedding_dim :]
        lstm_grads = lstm_backward(lstm_steps, model.lstm, d_question)
        grads.update({f"lstm.{k}": v for k, v in lstm_grads.items()})
    return grads


def _mask_seed(seed: int, epoch: int, step: int, index: int) -> int:
    value = seed & 0x7FFFFFFF
    for part in (epoch, step, index):
        value = (value * 1_000_003 + part + 1) % (2**63)
    return value


def evaluate_examples(examples: Sequence[TrainingExample], model: VqaModel) -> tuple[float, float]:
    """Mean cross-entropy and accuracy in inference mode; (nan, nan) when empty."""
    if not examples:
        return math.nan, math.nan
    total, correct = 0.0, 0
    for example in examples:
        dist, _ = example_forward(example, model, train_mode=False)
        total += loss(one_hot(example.target, model.config.n_classes), dist)
        if dist.argmax() == example.target:
            correct += 1
    return total / len(examples), correct / len(examples)


def train(
    train_examples: Sequence[TrainingExample],
    val_examples: Sequence[TrainingExample],
    model: VqaModel,
    cfg: TrainConfig,
) -> tuple[list[dict], OptimizerState]:
    """Mini-batch AMSGrad training; returns per-epoch metrics (epoch 0 = untrained)."""
    if not train_examples:
        raise EmptyDataset("cannot train on an empty split")
    params = model.trainable_parameters()
    state = OptimizerState.for_params(params, cfg.learning_rate)
    shuffler = random.Random(cfg.seed)

    def epoch_row(epoch: int) -> dict:
        train_loss, train_acc = evaluate_examples(train_examples, model)
        val_loss, val_acc = evaluate_examples(val_examples, model)
        return {
            "epoch": epoch,
            "train_loss": train_loss,
            "train_acc": train_acc,
            "val_loss": val_loss,
            "val_acc": val_acc,
        }

    metrics = [epoch_row(0)]
    n_classes = model.config.n_classes
    for epoch in range(1, cfg.epochs + 1):
        order = list(range(len(train_examples)))
        shuffler.shuffle(order)
        for step, start in enumerate(range(0, len(order), cfg.batch_size)):
            batch = order[start : start + cfg.batch_size]
            total = None
            for j, idx in enumerate(batch):
                example = train_examples[idx]
                dist, caches = example_forward(
                    example,
                    model,
                    train_mode=True,
                    seed=_mask_seed(cfg.seed, epoch, step, j),
                )
                grads = example_backward(model, caches, one_hot(example.target, n_classes))
                total = accumulate_grads(total, grads)
            amsgrad_step(params, scale_grads(total, 1.0 / len(batch)), state)
        metrics.append(epoch_row(epoch))
    return metrics, state


@dataclass(frozen=True)
class Prediction:
    answer: str
    probability: float
    confident: bool


def predict_example(example: TrainingExample, model: VqaModel, vocab: AnswerVocab) -> Prediction:
    """Most probable answer; flagged confident only above 50% probability."""
    dist, _ = example_forward(example, model, train_mode=False)
    index = dist.argmax()
    probability = float(dist.probabilities[index])
    return Prediction(
        answer=vocab.answer_at(index),
        probability=probability,
        confident=probability > 0.5,
    )


def write_metrics_csv(metrics: Sequence[dict], cfg: TrainConfig, path: str | Path) -> None:
    lines = [
        f"# epochs={cfg.epochs},batch_size={cfg.batch_size},"
        f"learning_rate={cfg.learning_rate!r},seed={cfg.seed}",
        "epoch,train_loss,train_acc,val_loss,val_acc",
    ]
    for row in metrics:
        lines.append(
            f"{row['epoch']},{row['train_loss']!r},{row['train_acc']!r},"
            f"{row['val_loss']!r},{row['val_acc']!r}"
        )
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def save_checkpoint(
    model: VqaModel,
    state: OptimizerState | None,
    cfg: TrainConfig,
    path: str | Path,
) -> None:
    """Single canonical-JSON file holding config, seed, tensors, and optimizer state."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "model_config": asdict(model.config),
        "train_config": asdict(cfg),
        "tensors": {name: arr.tolist() for name, arr in model.parameters().items()},
        "optimizer": None
        if state is None
        else {
            "learning_rate": state.learning_rate,
            "beta1": state.beta1,
            "beta2": state.beta2,
            "eps": state.eps,
            "step": state.step,
            "m": {k: v.tolist() for k, v in state.m.items()},
            "v": {k: v.tolist() for k, v in state.v.items()},
            "v_hat": {k: v.tolist() for k, v in state.v_hat.items()},
        },
    }
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    tmp = Path(path).with_suffix(".tmp")
    try:
        tmp.write_text(text + "\n", encoding="utf-8")
        tmp.replace(path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_checkpoint(path: str | Path) -> tuple[VqaModel, OptimizerState | None, TrainConfig]:
    """Inverse of save_checkpoint; never returns partially loaded state."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoFailure(f"{path} is truncated or corrupt: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("version") != CHECKPOINT_VERSION:
        raise VersionMismatch(
            f"{path}: expected checkpoint version {CHECKPOINT_VERSION}, "
            f"got {payload.get('version') if isinstance(payload, dict) else type(payload)}"
        )
    try:
        model_cfg = ModelConfig(**payload["model_config"])
        train_cfg = TrainConfig(**payload["train_config"])
        tensors = {name: np.array(values) for name, values in payload["tensors"].items()}
        lstm = LstmParams(**{k.split(".", 1)[1]: v for k, v in tensors.items() if k.startswith("lstm.")})
        mlp_arrays = {k.split(".", 1)[1]: v for k, v in tensors.items() if k.startswith("mlp.")}
        mlp = MlpParams(**mlp_arrays, dropout=model_cfg.dropout)
        raw_state = payload["optimizer"]
        state = None
        if raw_state is not None:
            state = OptimizerState(
                learning_rate=raw_state["learning_rate"],
                beta1=raw_state["beta1"],
                beta2=raw_state["beta2"],
                eps=raw_state["eps"],
                step=raw_state["step"],
                m={k: np.array(v) for k, v in raw_state["m"].items()},
                v={k: np.array(v) for k, v in raw_state["v"].items()},
                v_hat={k: np.array(v) for k, v in raw_state["v_hat"].items()},
            )
    except (KeyError, TypeError) as exc:
        raise VersionMismatch(f"{path}: checkpoint structure is invalid: {exc}") from exc
    return VqaModel(config=model_cfg, lstm=lstm, mlp=mlp), state, train_cfg
