"""Synthetic multimodal corpora with planted label and context biases.

Each utterance carries a *clean signal*: a fixed random linear function of
(mean content-word sentiment weight, audio, visual) drawn once per corpus
from the seed. Train-split gold labels additionally receive the planted
bias terms

    label = clean + label_offset + context_strength * mean(context skews)

clamped to [-3, 3]; validation and test labels equal the clean signal, so
they act as unbiased evaluation data while the train distribution is the
one the confounder poisons. Context-word co-occurrence with the sample's
polarity is skewed in every split (the spurious correlation survives into
test inputs), but only train labels absorb the additive shift.
"""

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import DimMismatch, ParseError, SchemaError, SpecInfeasible

MASK_TOKEN = "[MASK]"
UNK_TOKEN = "[UNK]"

# Weight of the content-word channel in the clean signal and the per-modality
# standard deviation of the audio/visual channels.
_CONTENT_GAIN = 1.6
_MODALITY_STD = 0.5

_DEFAULT_CONTENT = [
    ("good", 0.7), ("great", 0.9), ("excellent", 1.0), ("enjoyable", 0.6),
    ("fun", 0.5), ("love", 0.8), ("amazing", 0.95), ("pleasant", 0.45),
    ("solid", 0.3), ("decent", 0.2), ("fine", 0.1), ("okay", 0.05),
    ("bad", -0.7), ("terrible", -0.95), ("awful", -1.0), ("boring", -0.5),
    ("hate", -0.85), ("dull", -0.4), ("poor", -0.6), ("weak", -0.3),
    ("mediocre", -0.2), ("annoying", -0.55), ("bland", -0.35), ("flawed", -0.25),
]

_DEFAULT_CONTEXT = [
    ("very", 0.6), ("really", 0.5), ("also", 0.4), ("quite", 0.3),
    ("just", -0.3), ("though", -0.4), ("still", -0.5), ("maybe", -0.6),
    ("the", 0.1), ("a", -0.1), ("it", 0.2), ("so", -0.2),
]


@dataclass(frozen=True)
class Vocabulary:
    """Content words carry sentiment weights; context words carry a
    co-occurrence skew toward the positive (+) or negative (-) category."""

    content_words: tuple  # ((token, sentiment_weight), ...)
    context_words: tuple  # ((token, category_skew), ...)

    def __post_init__(self):
        tokens = [t for t, _ in self.content_words] + [t for t, _ in self.context_words]
        if len(set(tokens)) != len(tokens):
            raise SchemaError("vocabulary tokens must be unique across both lists")
        if MASK_TOKEN in tokens:
            raise SchemaError(f"{MASK_TOKEN} may not appear in the vocabulary")
        if not self.content_words or not self.context_words:
            raise SchemaError("need at least one content and one context word")
        for _, w in self.content_words + self.context_words:
            if not -1.0 <= w <= 1.0:
                raise SchemaError("word weights must lie in [-1, 1]")

    @property
    def content_set(self):
        return frozenset(t for t, _ in self.content_words)

    def all_tokens(self):
        return [t for t, _ in self.content_words] + [t for t, _ in self.context_words]

    def to_dict(self):
        return {"content_words": [list(p) for p in self.content_words],
                "context_words": [list(p) for p in self.context_words]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(tuple(p) for p in d["content_words"]),
                   tuple(tuple(p) for p in d["context_words"]))


def default_vocabulary():
    return Vocabulary(tuple(_DEFAULT_CONTENT), tuple(_DEFAULT_CONTEXT))


@dataclass
class BiasSpec:
    label_skew: float = 0.5
    label_offset: float = 0.0
    context_strength: float = 0.0
    content_mask_ratio_target: float = 0.6896

    def __post_init__(self):
        if not 0.0 <= self.label_skew <= 1.0:
            raise SpecInfeasible("label_skew must lie in [0, 1]")
        if self.context_strength < 0.0:
            raise SpecInfeasible("context_strength must be >= 0")
        if not 0.0 < self.content_mask_ratio_target < 1.0:
            raise SpecInfeasible("content_mask_ratio_target must lie in (0, 1)")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class Utterance:
    tokens: list
    content_flags: list
    audio: np.ndarray
    visual: np.ndarray
    label: float
    clean_signal: float = None
    clamped: bool = False

    def __post_init__(self):
        if len(self.tokens) != len(self.content_flags):
            raise SchemaError("content_flags length must match tokens")
        if not math.isfinite(self.label) or not -3.0 <= self.label <= 3.0:
            raise SchemaError(f"label {self.label} outside [-3, 3]")
        self.audio = np.asarray(self.audio, dtype=np.float64)
        self.visual = np.asarray(self.visual, dtype=np.float64)


@dataclass
class Corpus:
    train: list
    valid: list
    test: list
    vocabulary: Vocabulary
    dims: tuple  # (audio_dim, visual_dim)
    seed: int
    bias_spec: BiasSpec = None

    def split(self, name):
        try:
            return {"train": self.train, "valid": self.valid, "test": self.test}[name]
        except KeyError:
            raise ValueError(f"unknown split {name!r}") from None

    def all_utterances(self):
        for name in ("train", "valid", "test"):
            for u in self.split(name):
                yield name, u


def tag_content_words(tokens, vocabulary):
    """True iff the token is a known content word; unknowns count as context
    so masking never deletes unmodeled semantics."""
    content = vocabulary.content_set
    return [t in content for t in tokens]


def generate_corpus(spec, sizes, dims, seed, vocabulary=None):
    """Deterministically generate a biased corpus; see the module docstring
    for the planted label decomposition."""
    n_train, n_valid, n_test = sizes
    audio_dim, visual_dim = dims
    if n_train < 8 or n_valid < 4 or n_test < 4:
        raise SpecInfeasible(f"sizes {sizes} below minimum (8, 4, 4)")
    if audio_dim < 1 or visual_dim < 1:
        raise SpecInfeasible(f"dims {dims} must be >= 1")
    vocab = vocabulary or default_vocabulary()

    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    w_audio = rng.normal(0.0, _MODALITY_STD / math.sqrt(audio_dim), audio_dim)
    w_visual = rng.normal(0.0, _MODALITY_STD / math.sqrt(visual_dim), visual_dim)

    content = list(vocab.content_words)
    context = list(vocab.context_words)
    pos_content = [p for p in content if p[1] > 0] or content
    neg_content = [p for p in content if p[1] < 0] or content
    ctx_tokens = np.array([t for t, _ in context])
    ctx_skews = np.array([s for _, s in context])
    # Co-occurrence tilt in [0, 1): how strongly context-word choice follows
    # the sample's polarity.
    tilt = spec.context_strength / (1.0 + spec.context_strength)

    def sample_utterance(polarity, biased):
        length = int(rng.integers(8, 15))
        n_content = int(rng.binomial(length, spec.content_mask_ratio_target))
        pool = pos_content if polarity > 0 else neg_content
        words, flags = [], []
        for _ in range(n_content):
            src = pool if rng.random() < 0.85 else content
            words.append(src[rng.integers(len(src))])
            flags.append(True)
        probs = 1.0 + tilt * polarity * ctx_skews
        probs = probs / probs.sum()
        ctx_idx = rng.choice(len(ctx_tokens), size=length - n_content, p=probs)
        for j in ctx_idx:
            words.append((ctx_tokens[j], None))
            flags.append(False)
        order = rng.permutation(length)
        tokens = [words[k][0] for k in order]
        content_flags = [flags[k] for k in order]

        audio = rng.standard_normal(audio_dim)
        visual = rng.standard_normal(visual_dim)
        cweights = [w for (_, w), f in zip(words, flags) if f]
        s_mean = float(np.mean(cweights)) if cweights else 0.0
        clean = _CONTENT_GAIN * s_mean + float(w_audio @ audio + w_visual @ visual)
        if biased:
            ctx_mean = float(np.mean(ctx_skews[ctx_idx])) if len(ctx_idx) else 0.0
            raw = clean + spec.label_offset + spec.context_strength * ctx_mean
        else:
            raw = clean
        label = min(3.0, max(-3.0, raw))
        return Utterance(tokens, content_flags, audio, visual, label,
                         clean_signal=clean, clamped=(label != raw)), label

    def fill_split(n, biased):
        n_pos = int(round(spec.label_skew * n))
        utts = []
        for i in range(n):
            want_pos = i < n_pos
            polarity = 1 if want_pos else -1
            for attempt in range(500):
                u, label = sample_utterance(polarity, biased)
                if (label > 0) == want_pos:
                    utts.append(u)
                    break
            else:
                raise SpecInfeasible(
                    f"could not reach label_skew={spec.label_skew} with "
                    f"label_offset={spec.label_offset}")
        order = rng.permutation(n)
        return [utts[k] for k in order]

    corpus = Corpus(
        train=fill_split(n_train, biased=True),
        valid=fill_split(n_valid, biased=False),
        test=fill_split(n_test, biased=False),
        vocabulary=vocab, dims=(audio_dim, visual_dim), seed=int(seed),
        bias_spec=spec)
    return corpus


def save_corpus(corpus, path):
    header = {
        "vocab": corpus.vocabulary.to_dict(),
        "dims": list(corpus.dims),
        "seed": corpus.seed,
        "bias_spec": corpus.bias_spec.to_dict() if corpus.bias_spec else None,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for split, u in corpus.all_utterances():
            rec = {
                "tokens": u.tokens,
                "content_flags": u.content_flags,
                "audio": u.audio.tolist(),
                "visual": u.visual.tolist(),
                "label": u.label,
                "clean_signal": u.clean_signal,
                "clamped": u.clamped,
                "split": split,
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


_REQUIRED_KEYS = ("tokens", "content_flags", "audio", "visual", "label", "split")


def load_corpus(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty corpus file", 1)
    try:
        header = json.loads(lines[0])
        vocab = Vocabulary.from_dict(header["vocab"])
        dims = tuple(header["dims"])
        seed = header["seed"]
        bias = header.get("bias_spec")
        bias_spec = BiasSpec.from_dict(bias) if bias else None
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"bad header: {exc}", 1) from exc

    splits = {"train": [], "valid": [], "test": []}
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc), i) from exc
        missing = [k for k in _REQUIRED_KEYS if k not in rec]
        if missing:
            raise ParseError(f"missing fields {missing}", i)
        if rec["split"] not in splits:
            raise ParseError(f"unknown split {rec['split']!r}", i)
        if len(rec["audio"]) != dims[0] or len(rec["visual"]) != dims[1]:
            raise SchemaError(
                f"line {i}: modality dims {(len(rec['audio']), len(rec['visual']))} "
                f"do not match header {dims}")
        try:
            u = Utterance(rec["tokens"], rec["content_flags"],
                          np.array(rec["audio"]), np.array(rec["visual"]),
                          rec["label"], rec.get("clean_signal"),
                          rec.get("clamped", False))
        except SchemaError:
            raise
        except Exception as exc:
            raise ParseError(str(exc), i) from exc
        splits[rec["split"]].append(u)
    if not splits["train"] or not splits["valid"]:
        raise SchemaError("corpus needs nonempty train and valid splits")
    return Corpus(splits["train"], splits["valid"], splits["test"],
                  vocab, dims, seed, bias_spec)


def seven_class(x):
    """Round half away from zero, then clamp to the 7 classes [-3, 3]."""
    c = math.floor(abs(x) + 0.5) * (1 if x >= 0 else -1)
    return int(min(3, max(-3, c)))


def corpus_stats(corpus):
    """Label histograms per split plus context-word polarity co-occurrence."""
    report = {"splits": {}, "context_words": {}}
    ctx_counts = {t: [0, 0] for t, _ in corpus.vocabulary.context_words}
    for name in ("train", "valid", "test"):
        utts = corpus.split(name)
        if not utts:
            continue
        hist = {str(k): 0 for k in range(-3, 4)}
        n_pos = 0
        for u in utts:
            hist[str(seven_class(u.label))] += 1
            pos = u.label > 0
            n_pos += pos
            for tok, flag in zip(u.tokens, u.content_flags):
                if not flag and tok in ctx_counts:
                    ctx_counts[tok][0 if pos else 1] += 1
        content_tokens = sum(sum(u.content_flags) for u in utts)
        total_tokens = sum(len(u.tokens) for u in utts)
        report["splits"][name] = {
            "n": len(utts),
            "label_histogram": hist,
            "positive_fraction": n_pos / len(utts),
            "content_token_ratio": content_tokens / total_tokens,
        }
    report["context_words"] = {
        t: {"positive": c[0], "negative": c[1]} for t, c in ctx_counts.items()}
    return report
