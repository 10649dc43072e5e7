"""Question tokenization, GloVe-format embeddings, and an LSTM question encoder.

The encoder is written directly in numpy so that its gradients can be checked
against finite differences and trained jointly with the answer classifier.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, IoFailure

MAX_TOKEN_CHARS = 20


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation, cap at 20 chars."""
    tokens = []
    for raw in text.lower().split():
        word = raw.strip(string.punctuation)
        if word:
            tokens.append(word[:MAX_TOKEN_CHARS])
    return tokens


class EmbeddingTable:
    """Word -> fixed-length vector lookup; unknown words map to the zero vector."""

    def __init__(self, dim: int, vectors: dict[str, np.ndarray] | None = None):
        self.dim = dim
        self._vectors = vectors or {}
        self.unk = np.zeros(dim)

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, word: str) -> bool:
        return word in self._vectors

    def add(self, word: str, vector: np.ndarray) -> None:
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (self.dim,):
            raise DimensionMismatch(
                f"vector for '{word}' has length {vector.shape}, expected ({self.dim},)"
            )
        self._vectors.setdefault(word, vector)

    def lookup(self, word: str) -> np.ndarray:
        return self._vectors.get(word, self.unk)


def load_embeddings(path: str | Path, dim: int) -> EmbeddingTable:
    """Parse a text embedding file of "word v1 ... v_dim" lines; first entry wins."""
    table = EmbeddingTable(dim)
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    with handle:
        for line_no, line in enumerate(handle, start=1):
            parts = line.split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise DimensionMismatch(
                    f"{path}:{line_no}: expected {dim} floats for '{word}', got {len(values)}"
                )
            try:
                vector = np.array([float(v) for v in values])
            except ValueError as exc:
                raise DimensionMismatch(f"{path}:{line_no}: non-numeric value") from exc
            table.add(word, vector)
    return table


def embed_tokens(tokens: list[str], table: EmbeddingTable) -> np.ndarray:
    """Stack per-token vectors into a (len(tokens), dim) array; OOV rows are zero."""
    if not tokens:
        return np.zeros((0, table.dim))
    return np.stack([table.lookup(t) for t in tokens])


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class LstmParams:
    """Gate parameters: w_* act on the input, u_* on the previous hidden state."""

    w_i: np.ndarray
    u_i: np.ndarray
    b_i: np.ndarray
    w_f: np.ndarray
    u_f: np.ndarray
    b_f: np.ndarray
    w_o: np.ndarray
    u_o: np.ndarray
    b_o: np.ndarray
    w_g: np.ndarray
    u_g: np.ndarray
    b_g: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.w_i.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_i.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> "LstmParams":
        scale = 1.0 / np.sqrt(hidden_dim)

        def matrix(rows: int, cols: int) -> np.ndarray:
            return rng.uniform(-scale, scale, size=(rows, cols))

        kwargs = {}
        for gate in ("i", "f", "o", "g"):
            kwargs[f"w_{gate}"] = matrix(hidden_dim, input_dim)
            kwargs[f"u_{gate}"] = matrix(hidden_dim, hidden_dim)
            kwargs[f"b_{gate}"] = rng.uniform(-scale, scale, size=hidden_dim)
        return cls(**kwargs)

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int) -> "LstmParams":
        kwargs = {}
        for gate in ("i", "f", "o", "g"):
            kwargs[f"w_{gate}"] = np.zeros((hidden_dim, input_dim))
            kwargs[f"u_{gate}"] = np.zeros((hidden_dim, hidden_dim))
            kwargs[f"b_{gate}"] = np.zeros(hidden_dim)
        return cls(**kwargs)


@dataclass(frozen=True)
class QuestionEncoding:
    vector: np.ndarray
    tokens: tuple[str, ...]


@dataclass
class _StepCache:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray


def lstm_forward(inputs: np.ndarray, params: LstmParams) -> tuple[np.ndarray, list[_StepCache]]:
    """Run the gated recurrence from a zero initial state, keeping per-step caches."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 and inputs.size > 0:
        raise DimensionMismatch(f"expected a (steps, input_dim) array, got shape {inputs.shape}")
    hidden = params.hidden_dim
    h = np.zeros(hidden)
    c = np.zeros(hidden)
    steps: list[_StepCache] = []
    for t in range(inputs.shape[0] if inputs.size else 0):
        x = inputs[t]
        if x.shape != (params.input_dim,):
            raise DimensionMismatch(
                f"step {t} has length {x.shape[0]}, expected {params.input_dim}"
            )
        i = _sigmoid(params.w_i @ x + params.u_i @ h + params.b_i)
        f = _sigmoid(params.w_f @ x + params.u_f @ h + params.b_f)
        o = _sigmoid(params.w_o @ x + params.u_o @ h + params.b_o)
        g = np.tanh(params.w_g @ x + params.u_g @ h + params.b_g)
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        steps.append(_StepCache(x=x, h_prev=h, c_prev=c, i=i, f=f, o=o, g=g, c=c_new, tanh_c=tanh_c))
        h, c = h_new, c_new
    return h, steps


def lstm_encode(inputs: np.ndarray, params: LstmParams) -> np.ndarray:
    """Final hidden state of the recurrence; an empty sequence encodes to zeros."""
    h, _ = lstm_forward(inputs, params)
    return h


def lstm_backward(
    steps: list[_StepCache], params: LstmParams, d_final: np.ndarray
) -> dict[str, np.ndarray]:
    """Backpropagate a gradient on the final hidden state through all steps."""
    grads = {name: np.zeros_like(arr) for name, arr in params.arrays().items()}
    dh = np.asarray(d_final, dtype=float)
    dc = np.zeros(params.hidden_dim)
    for step in reversed(steps):
        do = dh * step.tanh_c
        dc = dc + dh * step.o * (1.0 - step.tanh_c**2)
        di = dc * step.g
        dg = dc * step.i
        df = dc * step.c_prev
        da_i = di * step.i * (1.0 - step.i)
        da_f = df * step.f * (1.0 - step.f)
        da_o = do * step.o * (1.0 - step.o)
        da_g = dg * (1.0 - step.g**2)
        for gate, da in (("i", da_i), ("f", da_f), ("o", da_o), ("g", da_g)):
            grads[f"w_{gate}"] += np.outer(da, step.x)
            grads[f"u_{gate}"] += np.outer(da, step.h_prev)
            grads[f"b_{gate}"] += da
        dh = params.u_i.T @ da_i + params.u_f.T @ da_f + params.u_o.T @ da_o + params.u_g.T @ da_g
        dc = dc * step.f
    return grads


def encode_question(
    tokens: list[str], table: EmbeddingTable, params: LstmParams
) -> QuestionEncoding:
    vectors = embed_tokens(tokens, table)
    return QuestionEncoding(vector=lstm_encode(vectors, params), tokens=tuple(tokens))
