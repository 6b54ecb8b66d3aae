import numpy as np
import pytest

from mcis import counterfactual as cf
from mcis import dataset, model
from mcis.dataset import MASK_TOKEN
from mcis.errors import EmptyAggregate


def test_label_cfe_degenerate_identical_train():
    vocab = dataset.default_vocabulary()
    u = dataset.Utterance(["good", "very"], [True, False],
                          np.array([1.0, 2.0]), np.array([3.0]), 1.0)
    corpus = dataset.Corpus([u] * 5, [u], [u], vocab, (2, 1), 0)
    p = model.init_params(vocab.all_tokens(), 2, 1, 4, 4, seed=0)
    cfe = cf.compute_label_counterfactual(corpus, p)
    assert np.allclose(cfe.audio, u.audio, atol=1e-12)
    assert np.allclose(cfe.visual, u.visual, atol=1e-12)
    # the average of identical pooled embeddings is that embedding
    ids = p.token_ids(u.tokens)
    pooled = p.arrays["emb"][ids].mean(axis=0)
    assert np.allclose(cfe.lang, pooled, atol=1e-12)
    # degenerate corpus: label-bias outcome equals the factual prediction
    assert cf.predict_label_bias(p, cfe) == pytest.approx(model.predict(p, u), abs=1e-12)


def test_label_cfe_two_sample_mean():
    vocab = dataset.default_vocabulary()
    u1 = dataset.Utterance(["good"], [True], np.array([1.0, 1.0]), np.array([0.0]), 1.0)
    u2 = dataset.Utterance(["bad"], [True], np.array([3.0, 3.0]), np.array([2.0]), -1.0)
    corpus = dataset.Corpus([u1, u2], [u1], [], vocab, (2, 1), 0)
    p = model.init_params(vocab.all_tokens(), 2, 1, 4, 4, seed=1)
    cfe = cf.compute_label_counterfactual(corpus, p)
    assert np.allclose(cfe.audio, [2.0, 2.0], atol=1e-15)
    assert np.allclose(cfe.visual, [1.0], atol=1e-15)


def test_label_cfe_matches_two_pass_oracle(small_corpus, small_params):
    cfe = cf.compute_label_counterfactual(small_corpus, small_params)
    n = len(small_corpus.train)
    audio_sum = np.zeros(small_corpus.dims[0])
    for u in small_corpus.train:
        audio_sum = audio_sum + u.audio
    assert np.allclose(cfe.audio, audio_sum / n, atol=1e-12)


def test_label_cfe_empty_train():
    vocab = dataset.default_vocabulary()
    u = dataset.Utterance(["good"], [True], np.zeros(2), np.zeros(1), 0.5)
    corpus = dataset.Corpus([], [u], [], vocab, (2, 1), 0)
    p = model.init_params(vocab.all_tokens(), 2, 1, 4, 4, seed=0)
    with pytest.raises(EmptyAggregate):
        cf.compute_label_counterfactual(corpus, p)


def test_label_bias_zero_head(small_corpus, small_params):
    p = small_params.copy()
    p.arrays["head_w"] = np.zeros_like(p.arrays["head_w"])
    p.arrays["head_b"] = np.zeros(1)
    cfe = cf.compute_label_counterfactual(small_corpus, p)
    assert cf.predict_label_bias(p, cfe) == 0.0


def test_label_bias_constant_across_utterances(small_corpus, small_params):
    cfe = cf.compute_label_counterfactual(small_corpus, small_params)
    score = cf.predict_label_bias(small_params, cfe)
    assert isinstance(score, float)
    again = cf.predict_label_bias(small_params, cfe)
    assert score == again


def test_positive_offset_corpus_gives_positive_label_bias():
    spec = dataset.BiasSpec(label_offset=1.2, context_strength=0.0)
    corpus = dataset.generate_corpus(spec, (400, 40, 40), (4, 3), seed=21)
    cfg = model.TrainConfig(epochs=30, seed=2)
    params = model.train(corpus, cfg, embed_dim=8, hidden_dim=8)
    cfe = cf.compute_label_counterfactual(corpus, params)
    assert cf.predict_label_bias(params, cfe) > 0


def test_context_bias_no_content_words(small_params):
    u = dataset.Utterance(["very", "the", "so"], [False, False, False],
                          np.zeros(4), np.zeros(3), 0.1)
    score = cf.predict_context_bias(small_params, u)
    oracle = model.predict(small_params, u,
                           audio_override=np.zeros(4), visual_override=np.zeros(3))
    assert score == oracle


def test_all_mask_ignores_tokens(small_params):
    u1 = dataset.Utterance(["good", "very"], [True, False], np.zeros(4), np.zeros(3), 0.5)
    u2 = dataset.Utterance(["bad", "the"], [True, False], np.zeros(4), np.zeros(3), -0.5)
    t = cf.ContextTreatment(mask_policy="all_mask")
    assert cf.predict_context_bias(small_params, u1, t) == \
        cf.predict_context_bias(small_params, u2, t)


def test_content_mask_matches_substitution_oracle(small_corpus, small_params):
    rng = np.random.default_rng(17)
    vocab_tokens = small_corpus.vocabulary.all_tokens()
    vocab = small_corpus.vocabulary
    for _ in range(50):
        n = int(rng.integers(2, 11))
        tokens = [vocab_tokens[i] for i in rng.integers(0, len(vocab_tokens), n)]
        flags = dataset.tag_content_words(tokens, vocab)
        u = dataset.Utterance(tokens, flags, rng.standard_normal(4),
                              rng.standard_normal(3), 0.0)
        score = cf.predict_context_bias(small_params, u)
        substituted = [MASK_TOKEN if f else t for t, f in zip(tokens, flags)]
        u_sub = dataset.Utterance(substituted, flags, u.audio, u.visual, 0.0)
        oracle = model.predict(small_params, u_sub,
                               audio_override=np.zeros(4),
                               visual_override=np.zeros(3))
        assert score == oracle


def test_no_mask_keep_equals_factual(small_corpus, small_params):
    t = cf.ContextTreatment(mask_policy="no_mask", audio_policy="keep",
                            visual_policy="keep")
    for u in small_corpus.test[:10]:
        assert cf.predict_context_bias(small_params, u, t) == \
            model.predict(small_params, u)


def test_masking_idempotent():
    t = cf.ContextTreatment()
    tokens = ["good", "very", "bad"]
    flags = [True, False, True]
    once = cf.masked_tokens(tokens, flags, t)
    twice = cf.masked_tokens(once, flags, t)
    assert once == twice


def test_partial_cfe_differs_from_full(small_corpus, small_params):
    cfe = cf.compute_label_counterfactual(small_corpus, small_params)
    u = small_corpus.test[0]
    full = cf.predict_label_bias(small_params, cfe)
    for drop in ("use_lang", "use_audio", "use_visual"):
        partial = cf.predict_label_bias(small_params, cfe, utterance=u,
                                        **{drop: False})
        assert partial != full


def test_rce_determinism_and_mean():
    a = cf.random_counterfactual_embeddings(4, 3, 2, seed=99)
    b = cf.random_counterfactual_embeddings(4, 3, 2, seed=99)
    assert np.array_equal(a.lang, b.lang)
    assert np.array_equal(a.audio, b.audio)
    c = cf.random_counterfactual_embeddings(4, 3, 2, seed=100)
    assert not np.array_equal(a.lang, c.lang)
    draws = np.stack([cf.random_counterfactual_embeddings(1, 1, 1, seed=s).lang[0]
                      for s in range(10000)])
    assert abs(draws.mean()) < 0.05


def test_infer_split_and_prediction_round_trip(tmp_path, small_corpus, small_params):
    header, records = cf.infer_split(small_corpus, small_params, "valid")
    assert header["n"] == len(small_corpus.valid)
    assert all(r["label_cf"] == header["label_bias_score"] for r in records)
    path = tmp_path / "preds.jsonl"
    cf.save_predictions(header, records, path)
    h2, r2 = cf.load_predictions(path)
    assert h2 == header
    assert r2 == records
