import pytest

from mcis import dataset, model


@pytest.fixture(scope="session")
def small_corpus():
    spec = dataset.BiasSpec(label_skew=0.5, label_offset=0.3, context_strength=0.5)
    return dataset.generate_corpus(spec, (64, 16, 16), (4, 3), seed=11)


@pytest.fixture(scope="session")
def small_params(small_corpus):
    config = model.TrainConfig(epochs=5, learning_rate=0.05, batch_size=16, seed=3)
    return model.train(small_corpus, config, embed_dim=8, hidden_dim=8)
