"""Native statement scorer: logistic regression over hashed n-gram features.

Feature space: casefolded word 1-2 grams and character 3-5 grams, hashed with
64-bit FNV-1a into 2**feature_space_bits buckets, counted (a multiset, not a
set). FNV-1a is fixed so serialized models score identically everywhere.

Training is epoch-wise stochastic gradient descent on the logistic loss with
L2 regularization. The per-step update is exactly

    w <- w - lr * ((sigmoid(w.x + b) - y) * x + l2 * w)

implemented with a scale factor so the full-vector decay costs O(nnz) per
step. Example order is reshuffled each epoch from a seeded rng; retraining
with the same config and data is bit-identical. Mean training loss is
monitored per epoch and an increase is logged as a warning, never an error.

logistic_loss and logistic_grad are module-level so tests can check the
analytic gradient against central finite differences.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import FormatVersionMismatch, SingleClassData, StatementKitError
from .seeding import derive_seed

log = logging.getLogger(__name__)

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

MODEL_MAGIC = b"STMK"
MODEL_VERSION = 1

_Z_CLIP = 30.0  # keeps sigmoid strictly inside (0, 1) in float64


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a. The model format depends on this exact function."""
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


@lru_cache(maxsize=1 << 20)
def _feature_hash(feature: str) -> int:
    return fnv1a64(feature.encode("utf-8"))


@dataclass(frozen=True)
class ScorerConfig:
    feature_space_bits: int = 18
    word_ngrams: tuple[int, int] = (1, 2)
    char_ngrams: tuple[int, int] = (3, 5)
    epochs: int = 5
    learning_rate: float = 0.1
    l2: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        problems = []
        if not 8 <= self.feature_space_bits <= 30:
            problems.append("feature_space_bits must be in [8, 30]")
        if self.epochs < 1:
            problems.append("epochs must be at least 1")
        if self.learning_rate <= 0:
            problems.append("learning_rate must be positive")
        if self.l2 < 0:
            problems.append("l2 must be nonnegative")
        for name, (lo, hi) in (("word_ngrams", self.word_ngrams), ("char_ngrams", self.char_ngrams)):
            if not (1 <= lo <= hi):
                problems.append(f"{name} range ({lo}, {hi}) is not a valid inclusive range")
        if problems:
            raise StatementKitError("invalid scorer config: " + "; ".join(problems))


@dataclass(frozen=True)
class ScorerModel:
    config: ScorerConfig
    weights: np.ndarray  # float64, length 2**feature_space_bits
    bias: float
    train_digest: str
    epoch_losses: tuple[float, ...] = ()


def featurize(text: str, config: ScorerConfig) -> tuple[np.ndarray, np.ndarray]:
    """(indices, counts) for one statement. Duplicated n-grams accumulate."""
    mask = (1 << config.feature_space_bits) - 1
    counts: dict[int, float] = {}
    folded = text.casefold()

    words = folded.split()
    lo, hi = config.word_ngrams
    for n in range(lo, hi + 1):
        for i in range(len(words) - n + 1):
            h = _feature_hash(f"w{n}\x1f" + " ".join(words[i:i + n])) & mask
            counts[h] = counts.get(h, 0.0) + 1.0
    lo, hi = config.char_ngrams
    for n in range(lo, hi + 1):
        for i in range(len(folded) - n + 1):
            h = _feature_hash(f"c{n}\x1f" + folded[i:i + n]) & mask
            counts[h] = counts.get(h, 0.0) + 1.0

    idx = np.fromiter(sorted(counts), dtype=np.int64, count=len(counts))
    val = np.array([counts[i] for i in idx], dtype=np.float64)
    return idx, val


def _sigmoid(z: float) -> float:
    z = min(max(z, -_Z_CLIP), _Z_CLIP)
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


# --- analytic loss and gradient on dense vectors (oracle-checkable) ---

def logistic_loss(w: np.ndarray, b: float, x: np.ndarray, y: float, l2: float) -> float:
    """Single-example regularized logistic loss."""
    z = float(w @ x) + b
    # log(1 + exp(-z)) for y=1, log(1 + exp(z)) for y=0, stable at both ends
    loss = float(np.logaddexp(0.0, -z)) if y == 1.0 else float(np.logaddexp(0.0, z))
    return loss + 0.5 * l2 * float(w @ w)


def logistic_grad(w: np.ndarray, b: float, x: np.ndarray, y: float, l2: float) -> tuple[np.ndarray, float]:
    """Gradient of logistic_loss with respect to (w, b)."""
    z = float(w @ x) + b
    p = _sigmoid(z)
    return (p - y) * x + l2 * w, p - y


# --- training ---

def _prepare(data) -> tuple[list, np.ndarray]:
    statements = list(data)
    if not statements:
        raise StatementKitError("training data is empty")
    y = np.array([1.0 if s.truth else 0.0 for s in statements])
    if len(set(y.tolist())) < 2:
        raise SingleClassData("training data holds a single truth class")
    return statements, y


def data_digest(data) -> str:
    h = hashlib.sha256()
    for s in data:
        h.update(s.text.encode("utf-8"))
        h.update(b"\x1f1" if s.truth else b"\x1f0")
        h.update(b"\n")
    return h.hexdigest()[:16]


def _run_epochs(weights: np.ndarray, bias: float, feats, y: np.ndarray,
                config: ScorerConfig, epochs: int, seed: int) -> tuple[np.ndarray, float, list[float]]:
    lr, l2 = config.learning_rate, config.l2
    rng = np.random.default_rng(seed)
    scale = 1.0
    v = weights.copy()
    losses: list[float] = []
    n = len(y)
    for epoch in range(epochs):
        order = rng.permutation(n)
        for i in order:
            idx, val = feats[i]
            z = scale * float(v[idx] @ val) + bias
            p = _sigmoid(z)
            g = p - y[i]
            scale *= 1.0 - lr * l2
            if scale < 1e-100:
                v *= scale
                scale = 1.0
            v[idx] -= (lr * g / scale) * val
            bias -= lr * g
        w_now = scale * v
        losses.append(_mean_loss(w_now, bias, feats, y, l2))
        if epoch and losses[-1] > losses[-2] + 1e-12:
            log.warning("training loss rose at epoch %d: %.6f -> %.6f", epoch, losses[-2], losses[-1])
    return scale * v, bias, losses


def _mean_loss(w: np.ndarray, b: float, feats, y: np.ndarray, l2: float) -> float:
    total = 0.0
    for i in range(len(y)):
        idx, val = feats[i]
        z = float(w[idx] @ val) + b
        total += float(np.logaddexp(0.0, -z)) if y[i] == 1.0 else float(np.logaddexp(0.0, z))
    return total / len(y) + 0.5 * l2 * float(w @ w)


def train(config: ScorerConfig, data) -> ScorerModel:
    """Fit a fresh model on a statement set (anything iterating Statements)."""
    statements, y = _prepare(data)
    feats = [featurize(s.text, config) for s in statements]
    weights = np.zeros(1 << config.feature_space_bits)
    w, b, losses = _run_epochs(weights, 0.0, feats, y, config, config.epochs,
                               derive_seed(config.seed, "train"))
    return ScorerModel(config, w, b, data_digest(statements), tuple(losses))


def continue_train(model: ScorerModel, data, epochs: int, seed: int | None = None) -> ScorerModel:
    """More epochs on new data; the input model is never mutated."""
    if epochs < 0:
        raise StatementKitError("epochs must be nonnegative")
    statements, y = _prepare(data)
    digest = hashlib.sha256((model.train_digest + data_digest(statements)).encode()).hexdigest()[:16]
    if epochs == 0:
        return replace(model, weights=model.weights.copy())
    if seed is None:
        seed = derive_seed(model.config.seed, "continue", digest)
    feats = [featurize(s.text, model.config) for s in statements]
    w, b, losses = _run_epochs(model.weights.copy(), model.bias, feats, y,
                               model.config, epochs, seed)
    return ScorerModel(model.config, w, b, digest, tuple(losses))


def score(model: ScorerModel, text: str) -> float:
    """P(statement is true), strictly inside (0, 1)."""
    idx, val = featurize(text, model.config)
    z = float(model.weights[idx] @ val) + model.bias
    return float(_sigmoid(z))


def score_many(model: ScorerModel, texts: Sequence[str]) -> list[float]:
    return [score(model, t) for t in texts]


# --- model files ---

def dumps_model(model: ScorerModel) -> bytes:
    meta = json.dumps({
        "config": {
            "feature_space_bits": model.config.feature_space_bits,
            "word_ngrams": list(model.config.word_ngrams),
            "char_ngrams": list(model.config.char_ngrams),
            "epochs": model.config.epochs,
            "learning_rate": model.config.learning_rate,
            "l2": model.config.l2,
            "seed": model.config.seed,
        },
        "train_digest": model.train_digest,
        "epoch_losses": list(model.epoch_losses),
    }, sort_keys=True).encode("utf-8")
    weights = np.ascontiguousarray(model.weights, dtype="<f8")
    return b"".join((
        MODEL_MAGIC,
        struct.pack("<I", MODEL_VERSION),
        struct.pack("<I", len(meta)),
        meta,
        struct.pack("<d", model.bias),
        struct.pack("<Q", len(weights)),
        weights.tobytes(),
    ))


def save_model(path, model: ScorerModel) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_model(model))


def loads_model(blob: bytes, path: str = "<bytes>") -> ScorerModel:
    if blob[:4] != MODEL_MAGIC:
        raise FormatVersionMismatch(f"{path}: not a scorer model file")
    try:
        (version,) = struct.unpack_from("<I", blob, 4)
        if version != MODEL_VERSION:
            raise FormatVersionMismatch(f"{path}: unsupported model version {version}")
        (meta_len,) = struct.unpack_from("<I", blob, 8)
        meta = json.loads(blob[12:12 + meta_len])
        off = 12 + meta_len
        (bias,) = struct.unpack_from("<d", blob, off)
        (n,) = struct.unpack_from("<Q", blob, off + 8)
        start = off + 16
        end = start + 8 * n
        if end > len(blob):
            raise FormatVersionMismatch(f"{path}: truncated model file")
        weights = np.frombuffer(blob[start:end], dtype="<f8").astype(np.float64)
    except struct.error as exc:
        raise FormatVersionMismatch(f"{path}: truncated model file") from exc
    cfg = meta["config"]
    config = ScorerConfig(
        feature_space_bits=cfg["feature_space_bits"],
        word_ngrams=tuple(cfg["word_ngrams"]),
        char_ngrams=tuple(cfg["char_ngrams"]),
        epochs=cfg["epochs"],
        learning_rate=cfg["learning_rate"],
        l2=cfg["l2"],
        seed=cfg["seed"],
    )
    if len(weights) != 1 << config.feature_space_bits:
        raise FormatVersionMismatch(f"{path}: weight count does not match feature_space_bits")
    return ScorerModel(config, weights, bias, meta["train_digest"], tuple(meta["epoch_losses"]))


def load_model(path) -> ScorerModel:
    with open(path, "rb") as fh:
        return loads_model(fh.read(), path=str(path))
