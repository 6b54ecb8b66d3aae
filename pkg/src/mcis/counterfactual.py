"""Counterfactual inputs and the two purified bias outcomes.

The label-bias outcome feeds train-set average features (raw audio, raw
visual, and mean-pooled token embeddings) through the trained model; it is
one scalar per (model, corpus) pair. The context-bias outcome masks the
content words of each utterance and (by default) zeroes the audio/visual
features, isolating what the model infers from context words alone.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import model as model_mod
from .dataset import MASK_TOKEN
from .errors import EmptyAggregate, ParseError
from .numerics import vec_mean

MASK_POLICIES = ("content_mask", "no_mask", "all_mask", "random_mask")
AV_POLICIES = ("zero", "keep", "random")


@dataclass
class CounterfactualEmbeddings:
    lang: np.ndarray   # mean pooled-token-embedding over train (raw, pre-encoder)
    audio: np.ndarray  # mean raw audio over train
    visual: np.ndarray  # mean raw visual over train


@dataclass
class ContextTreatment:
    mask_policy: str = "content_mask"
    audio_policy: str = "zero"
    visual_policy: str = "zero"
    random_mask_p: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.mask_policy not in MASK_POLICIES:
            raise ValueError(f"unknown mask policy {self.mask_policy!r}")
        for p in (self.audio_policy, self.visual_policy):
            if p not in AV_POLICIES:
                raise ValueError(f"unknown audio/visual policy {p!r}")
        if not 0.0 <= self.random_mask_p <= 1.0:
            raise ValueError("random_mask_p must lie in [0, 1]")


def compute_label_counterfactual(corpus, params):
    """Train-set average features (the no-treatment stand-in input)."""
    if not corpus.train:
        raise EmptyAggregate("label counterfactual needs a nonempty train split")
    emb = params.arrays["emb"]
    pooled = []
    for u in corpus.train:
        ids = params.token_ids(u.tokens)
        pooled.append(emb[ids].sum(axis=0) / len(ids))
    return CounterfactualEmbeddings(
        lang=vec_mean(pooled),
        audio=vec_mean([u.audio for u in corpus.train]),
        visual=vec_mean([u.visual for u in corpus.train]))


def random_counterfactual_embeddings(embed_dim, audio_dim, visual_dim, seed):
    """Standard-normal stand-in embeddings for the random-embedding ablation."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    return CounterfactualEmbeddings(
        lang=rng.standard_normal(embed_dim),
        audio=rng.standard_normal(audio_dim),
        visual=rng.standard_normal(visual_dim))


def predict_label_bias(params, cfe, utterance=None, use_lang=True, use_audio=True,
                       use_visual=True):
    """Score on the average-feature input.

    With all three ``use_*`` flags set (the default) this is sample
    independent. Dropping a flag substitutes the utterance's own feature for
    that modality (the partial-embedding ablations), which requires
    ``utterance``.
    """
    if not (use_lang and use_audio and use_visual) and utterance is None:
        raise ValueError("partial counterfactuals need the utterance's features")
    if use_lang:
        lang = cfe.lang
    else:
        ids = params.token_ids(utterance.tokens)
        lang = params.arrays["emb"][ids].sum(axis=0) / len(ids)
    audio = cfe.audio if use_audio else utterance.audio
    visual = cfe.visual if use_visual else utterance.visual
    return model_mod.predict_from_pooled(params, lang, audio, visual)


def masked_tokens(tokens, content_flags, treatment, rng=None):
    """Token list after applying the mask policy (idempotent)."""
    if treatment.mask_policy == "no_mask":
        return list(tokens)
    if treatment.mask_policy == "all_mask":
        return [MASK_TOKEN] * len(tokens)
    if treatment.mask_policy == "content_mask":
        return [MASK_TOKEN if f else t for t, f in zip(tokens, content_flags)]
    draws = rng.random(len(tokens)) < treatment.random_mask_p
    return [MASK_TOKEN if d else t for t, d in zip(tokens, draws)]


def _treated_av(feature, policy, rng):
    if policy == "zero":
        return np.zeros_like(feature)
    if policy == "keep":
        return feature
    return rng.standard_normal(feature.shape)


def predict_context_bias(params, utterance, treatment=None, rng=None):
    """Score when the model sees only context words (default treatment)."""
    treatment = treatment or ContextTreatment()
    needs_rng = (treatment.mask_policy == "random_mask"
                 or "random" in (treatment.audio_policy, treatment.visual_policy))
    if needs_rng and rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(int(treatment.seed)))
    tokens = masked_tokens(utterance.tokens, utterance.content_flags, treatment, rng)
    audio = _treated_av(utterance.audio, treatment.audio_policy, rng)
    visual = _treated_av(utterance.visual, treatment.visual_policy, rng)
    masked_utt = type(utterance)(tokens, list(utterance.content_flags),
                                 utterance.audio, utterance.visual,
                                 utterance.label, utterance.clean_signal,
                                 utterance.clamped)
    return model_mod.predict(params, masked_utt, lang_mode="full",
                             audio_override=audio, visual_override=visual)


def infer_split(corpus, params, split="test", treatment=None, cfe=None,
                label_cf_kwargs=None):
    """Factual, label-counterfactual, and context-counterfactual scores for
    one split. Returns (header dict, list of record dicts)."""
    model_mod.check_compatible(params, corpus)
    treatment = treatment or ContextTreatment()
    if cfe is None:
        cfe = compute_label_counterfactual(corpus, params)
    kw = label_cf_kwargs or {}
    full_cfe = all(kw.get(k, True) for k in ("use_lang", "use_audio", "use_visual"))
    shared_label_cf = (predict_label_bias(params, cfe) if full_cfe else None)

    needs_rng = (treatment.mask_policy == "random_mask"
                 or "random" in (treatment.audio_policy, treatment.visual_policy))
    rng = (np.random.default_rng(np.random.SeedSequence(int(treatment.seed)))
           if needs_rng else None)
    records = []
    for i, u in enumerate(corpus.split(split)):
        label_cf = (shared_label_cf if full_cfe
                    else predict_label_bias(params, cfe, utterance=u, **kw))
        records.append({
            "id": i,
            "factual": model_mod.predict(params, u),
            "label_cf": label_cf,
            "context_cf": predict_context_bias(params, u, treatment, rng),
            "gold": u.label,
        })
    header = {
        "split": split,
        "label_bias_score": shared_label_cf,
        "treatment": {
            "mask_policy": treatment.mask_policy,
            "audio_policy": treatment.audio_policy,
            "visual_policy": treatment.visual_policy,
        },
        "n": len(records),
    }
    return header, records


def save_predictions(header, records, path):
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_predictions(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty predictions file", 1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad header: {exc}", 1) from exc
    records = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc), i) from exc
        for key in ("factual", "label_cf", "context_cf", "gold"):
            if key not in rec:
                raise ParseError(f"missing field {key!r}", i)
        records.append(rec)
    return header, records
