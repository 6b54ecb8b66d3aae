"""Toy multimodal regression model with manual gradients.

Language is a mean of token embeddings fed through an affine encoder;
audio/visual get affine encoders; the three hidden vectors are fused by
either a linear projection of their concatenation or an element-wise
sigmoid-gated sum; an affine head emits one sentiment score. Training is
mini-batch SGD on mean absolute error with subgradient 0 at zero residual.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import MASK_TOKEN, UNK_TOKEN
from .errors import (CheckpointError, DimMismatch, SchemaError, TrainingDiverged,
                     UnknownToken)
from .numerics import sgd_step

# Probability that a training token is replaced by [MASK] so the mask row is
# in-distribution at inference time.
MASK_DROPOUT = 0.05

FUSION_STRATEGIES = ("concat", "gated")


@dataclass
class TrainConfig:
    epochs: int = 60
    learning_rate: float = 0.05
    batch_size: int = 32
    seed: int = 0
    loss: str = "mae"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.loss != "mae":
            raise ValueError(f"unsupported loss {self.loss!r}")


class ModelParams:
    """Flat container for every trainable array plus the token index."""

    def __init__(self, tokens, arrays, fusion, dims, final_train_mae=None):
        if fusion not in FUSION_STRATEGIES:
            raise SchemaError(f"unknown fusion strategy {fusion!r}")
        self.tokens = list(tokens)
        self.token_index = {t: i for i, t in enumerate(self.tokens)}
        self.arrays = {k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()}
        self.fusion = fusion
        self.dims = dict(dims)  # embed, hidden, audio, visual
        self.final_train_mae = final_train_mae
        for name in self.array_names(fusion):
            if name not in self.arrays:
                raise SchemaError(f"missing parameter array {name!r}")
        if self.arrays["emb"].shape != (len(self.tokens), self.dims["embed"]):
            raise SchemaError("embedding table shape does not match tokens/dims")

    @staticmethod
    def array_names(fusion):
        names = ["emb", "W_l", "b_l", "W_a", "b_a", "W_v", "b_v",
                 "head_w", "head_b"]
        if fusion == "concat":
            names += ["W_f", "b_f"]
        else:
            names += ["u_l", "u_a", "u_v"]
        return names

    @property
    def mask_id(self):
        return self.token_index[MASK_TOKEN]

    def token_ids(self, tokens):
        unk = self.token_index.get(UNK_TOKEN)
        ids = []
        for t in tokens:
            i = self.token_index.get(t, unk)
            if i is None:
                raise UnknownToken(f"token {t!r} not in embedding table")
            ids.append(i)
        return ids

    def copy(self):
        return ModelParams(self.tokens, {k: v.copy() for k, v in self.arrays.items()},
                           self.fusion, self.dims, self.final_train_mae)


def init_params(vocab_tokens, audio_dim, visual_dim, embed_dim=16, hidden_dim=16,
                fusion="concat", seed=0):
    """Seeded uniform [-0.1, 0.1] initialization."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    tokens = list(vocab_tokens) + [MASK_TOKEN, UNK_TOKEN]
    dims = {"embed": embed_dim, "hidden": hidden_dim,
            "audio": audio_dim, "visual": visual_dim}

    def u(*shape):
        return rng.uniform(-0.1, 0.1, shape)

    arrays = {
        "emb": u(len(tokens), embed_dim),
        "W_l": u(hidden_dim, embed_dim), "b_l": u(hidden_dim),
        "W_a": u(hidden_dim, audio_dim), "b_a": u(hidden_dim),
        "W_v": u(hidden_dim, visual_dim), "b_v": u(hidden_dim),
        "head_w": u(hidden_dim), "head_b": u(1),
    }
    if fusion == "concat":
        arrays["W_f"] = u(hidden_dim, 3 * hidden_dim)
        arrays["b_f"] = u(hidden_dim)
    else:
        arrays["u_l"] = u(hidden_dim)
        arrays["u_a"] = u(hidden_dim)
        arrays["u_v"] = u(hidden_dim)
    return ModelParams(tokens, arrays, fusion, dims)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _forward(params, pooled, audio, visual, want_cache=False):
    a = params.arrays
    hl = pooled @ a["W_l"].T + a["b_l"]
    ha = audio @ a["W_a"].T + a["b_a"]
    hv = visual @ a["W_v"].T + a["b_v"]
    if params.fusion == "concat":
        cat = np.concatenate([hl, ha, hv], axis=1)
        fused = cat @ a["W_f"].T + a["b_f"]
        cache = (hl, ha, hv, cat)
    else:
        gates = (_sigmoid(a["u_l"]), _sigmoid(a["u_a"]), _sigmoid(a["u_v"]))
        fused = gates[0] * hl + gates[1] * ha + gates[2] * hv
        cache = (hl, ha, hv, gates)
    scores = fused @ a["head_w"] + a["head_b"][0]
    if want_cache:
        return scores, (pooled, audio, visual, fused, cache)
    return scores


def _backward(params, cache, dscores, token_ids, offsets):
    a = params.arrays
    pooled, audio, visual, fused, inner = cache
    grads = {}
    grads["head_w"] = fused.T @ dscores
    grads["head_b"] = np.array([dscores.sum()])
    dfused = np.outer(dscores, a["head_w"])
    if params.fusion == "concat":
        hl, ha, hv, cat = inner
        grads["W_f"] = dfused.T @ cat
        grads["b_f"] = dfused.sum(axis=0)
        dcat = dfused @ a["W_f"]
        dh = params.dims["hidden"]
        dhl, dha, dhv = dcat[:, :dh], dcat[:, dh:2 * dh], dcat[:, 2 * dh:]
    else:
        hl, ha, hv, gates = inner
        sl, sa, sv = gates
        dhl = dfused * sl
        dha = dfused * sa
        dhv = dfused * sv
        grads["u_l"] = (dfused * hl).sum(axis=0) * sl * (1.0 - sl)
        grads["u_a"] = (dfused * ha).sum(axis=0) * sa * (1.0 - sa)
        grads["u_v"] = (dfused * hv).sum(axis=0) * sv * (1.0 - sv)
    grads["W_l"] = dhl.T @ pooled
    grads["b_l"] = dhl.sum(axis=0)
    grads["W_a"] = dha.T @ audio
    grads["b_a"] = dha.sum(axis=0)
    grads["W_v"] = dhv.T @ visual
    grads["b_v"] = dhv.sum(axis=0)
    dpooled = dhl @ a["W_l"]
    grads["emb"] = kernels.scatter_mean_grad(
        np.ascontiguousarray(dpooled), token_ids, offsets, a["emb"].shape[0])
    return grads


def loss_and_grads(params, token_ids, offsets, audio, visual, labels):
    """MAE loss over one batch and its analytic gradients."""
    pooled = kernels.mean_pool(params.arrays["emb"], token_ids, offsets)
    scores, cache = _forward(params, pooled, audio, visual, want_cache=True)
    residual = scores - labels
    loss = float(np.abs(residual).mean())
    dscores = np.sign(residual) / len(labels)
    grads = _backward(params, cache, dscores, token_ids, offsets)
    return loss, grads


def encode_language(params, tokens, content_flags, mode="full"):
    """Mean token embedding (content tokens masked in masked mode) through
    the language encoder."""
    if not tokens:
        raise DimMismatch("encode_language needs at least one token")
    ids = _resolve_ids(params, tokens, content_flags, mode)
    pooled = params.arrays["emb"][ids].sum(axis=0) / len(ids)
    return params.arrays["W_l"] @ pooled + params.arrays["b_l"]


def _resolve_ids(params, tokens, content_flags, mode):
    ids = params.token_ids(tokens)
    if mode == "masked":
        mask_id = params.mask_id
        ids = [mask_id if f else i for i, f in zip(ids, content_flags)]
    elif mode != "full":
        raise ValueError(f"unknown language mode {mode!r}")
    return ids


def fuse(params, l_vec, a_vec, v_vec):
    """One fused hidden vector from three modality encodings."""
    dh = params.dims["hidden"]
    for v in (l_vec, a_vec, v_vec):
        if np.asarray(v).shape != (dh,):
            raise DimMismatch(f"fuse expects dim {dh}, got {np.asarray(v).shape}")
    a = params.arrays
    if params.fusion == "concat":
        cat = np.concatenate([l_vec, a_vec, v_vec])
        return a["W_f"] @ cat + a["b_f"]
    return (_sigmoid(a["u_l"]) * l_vec + _sigmoid(a["u_a"]) * a_vec
            + _sigmoid(a["u_v"]) * v_vec)


def predict(params, utterance, lang_mode="full", audio_override=None,
            visual_override=None):
    """Single factual/counterfactual score; overrides replace raw features."""
    audio = utterance.audio if audio_override is None else np.asarray(audio_override, float)
    visual = utterance.visual if visual_override is None else np.asarray(visual_override, float)
    if audio.shape != (params.dims["audio"],) or visual.shape != (params.dims["visual"],):
        raise DimMismatch("override dims do not match model dims")
    l_vec = encode_language(params, utterance.tokens, utterance.content_flags, lang_mode)
    a = params.arrays
    ha = a["W_a"] @ audio + a["b_a"]
    hv = a["W_v"] @ visual + a["b_v"]
    fused = fuse(params, l_vec, ha, hv)
    return float(fused @ a["head_w"] + a["head_b"][0])


def predict_from_pooled(params, pooled_lang, audio, visual):
    """Score from an already-pooled raw language feature (used by the
    train-average counterfactual, whose language input predates the encoder)."""
    scores = _forward(params, np.asarray(pooled_lang, float)[None, :],
                      np.asarray(audio, float)[None, :],
                      np.asarray(visual, float)[None, :])
    return float(scores[0])


def corpus_token_arrays(params, utterances, mode="full"):
    """Flattened token ids + offsets for a list of utterances."""
    ids, offsets = [], [0]
    for u in utterances:
        ids.extend(_resolve_ids(params, u.tokens, u.content_flags, mode))
        offsets.append(len(ids))
    return np.asarray(ids, dtype=np.int64), np.asarray(offsets, dtype=np.int64)


def train(corpus, config, embed_dim=16, hidden_dim=16, fusion="concat"):
    """Mini-batch SGD on MAE over the train split; deterministic by seed."""
    if not corpus.train:
        raise TrainingDiverged("empty train split")
    params = init_params(corpus.vocabulary.all_tokens(), corpus.dims[0],
                         corpus.dims[1], embed_dim, hidden_dim, fusion,
                         seed=config.seed)
    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed), 1]))
    utts = corpus.train
    n = len(utts)
    all_ids, all_offsets = corpus_token_arrays(params, utts)
    audio = np.stack([u.audio for u in utts])
    visual = np.stack([u.visual for u in utts])
    labels = np.array([u.label for u in utts])
    mask_id = params.mask_id

    final_mae = None
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_abs = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            ids, offsets = _gather_segments(all_ids, all_offsets, idx)
            drop = rng.random(len(ids)) < MASK_DROPOUT
            if drop.any():
                ids = np.where(drop, mask_id, ids)
            loss, grads = loss_and_grads(params, ids, offsets, audio[idx],
                                         visual[idx], labels[idx])
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss {loss}")
            epoch_abs += loss * len(idx)
            for name, g in grads.items():
                params.arrays[name] = sgd_step(params.arrays[name], g,
                                               config.learning_rate)
        final_mae = epoch_abs / n
    params.final_train_mae = final_mae
    return params


def _gather_segments(all_ids, all_offsets, idx):
    lengths = all_offsets[idx + 1] - all_offsets[idx]
    offsets = np.zeros(len(idx) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    ids = np.empty(offsets[-1], dtype=np.int64)
    for k, i in enumerate(idx):
        ids[offsets[k]:offsets[k + 1]] = all_ids[all_offsets[i]:all_offsets[i + 1]]
    return ids, offsets


CHECKPOINT_FORMAT = "mcis-checkpoint-v1"


def save_checkpoint(params, path):
    doc = {
        "format": CHECKPOINT_FORMAT,
        "fusion": params.fusion,
        "dims": params.dims,
        "tokens": params.tokens,
        "arrays": {k: v.tolist() for k, v in params.arrays.items()},
        "final_train_mae": params.final_train_mae,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_checkpoint(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
        fusion = doc["fusion"]
        params = ModelParams(doc["tokens"], doc["arrays"], fusion, doc["dims"],
                             doc.get("final_train_mae"))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"cannot load checkpoint {path}: {exc}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unknown checkpoint format {doc.get('format')!r}")
    return params


def check_compatible(params, corpus):
    """SchemaError if a checkpoint cannot serve a corpus."""
    if (params.dims["audio"], params.dims["visual"]) != tuple(corpus.dims):
        raise SchemaError(
            f"checkpoint modality dims {params.dims} vs corpus {corpus.dims}")
    missing = [t for t in corpus.vocabulary.all_tokens()
               if t not in params.token_index]
    if missing:
        raise SchemaError(f"checkpoint vocabulary missing tokens {missing[:5]}")
