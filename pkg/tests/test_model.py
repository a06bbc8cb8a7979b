import numpy as np
import pytest

from conftest import fake_embeddings, motif_dataset, toy_config
from pdeeppp import config as config_mod
from pdeeppp.data import SampleRecord, pad_batch
from pdeeppp.errors import ContractError
from pdeeppp.model import Model, positional_encoding
from pdeeppp.tensor import Tape, Tensor, backward, tmean


def _forward(model, records, embeddings):
    batch = pad_batch(records, embeddings)
    feats = Tensor(batch.features, dtype=model.dtype)
    return model.forward(batch.tokens, feats, batch.lengths, batch.mask)


@pytest.fixture(scope="module")
def records():
    return motif_dataset(8, seed=3)


@pytest.fixture(scope="module")
def embeddings(records):
    return fake_embeddings(records)


class TestPositionalEncoding:
    def test_first_row(self):
        pe = positional_encoding(5, 6)
        np.testing.assert_allclose(pe[0, 0::2], 0.0)   # sin(0)
        np.testing.assert_allclose(pe[0, 1::2], 1.0)   # cos(0)

    def test_known_entry(self):
        pe = positional_encoding(3, 4)
        np.testing.assert_allclose(pe[1, 0], np.sin(1.0), rtol=1e-6)
        np.testing.assert_allclose(pe[1, 1], np.cos(1.0), rtol=1e-6)
        np.testing.assert_allclose(pe[2, 2], np.sin(2.0 / 100.0), rtol=1e-5)

    def test_bounded(self):
        pe = positional_encoding(100, 16)
        assert np.abs(pe).max() <= 1.0 + 1e-6


class TestForward:
    def test_logit_shape(self, records, embeddings):
        model = Model(toy_config())
        logits = _forward(model, records, embeddings)
        assert logits.shape == (len(records), 2)

    def test_scores_are_probabilities(self, records, embeddings):
        model = Model(toy_config())
        batch = pad_batch(records, embeddings)
        s = model.scores(batch.tokens, Tensor(batch.features),
                         batch.lengths, batch.mask)
        assert s.shape == (len(records),)
        assert ((s >= 0) & (s <= 1)).all()

    def test_every_parameter_gets_gradient(self, records, embeddings):
        model = Model(toy_config())
        with Tape() as tape:
            loss = tmean(_forward(model, records, embeddings)
                         * _forward(model, records, embeddings))
        backward(tape, loss)
        dead = [n for n, p in model.parameters().items()
                if p.grad is None or np.abs(p.grad).max() == 0]
        assert dead == []

    def test_padding_does_not_change_scores(self):
        """A short sequence scores the same alone and padded next to a long one."""
        short = SampleRecord(id="short", sequence="ACDKLMNPQ", label=1)
        long = SampleRecord(id="long", sequence="ACDEFGHIKLMNPQRSTVWY", label=0)
        embs = fake_embeddings([short, long])
        model = Model(toy_config(poscnn=config_mod.PosCNNConfig(pool_len=4),
                                 head=config_mod.ClassifierHeadConfig(pooled_len=8)))
        alone = pad_batch([short], embs)
        mixed = pad_batch([short, long], embs)
        s_alone = model.scores(alone.tokens, Tensor(alone.features),
                               alone.lengths, alone.mask)[0]
        s_mixed = model.scores(mixed.tokens, Tensor(mixed.features),
                               mixed.lengths, mixed.mask)[0]
        assert abs(s_alone - s_mixed) < 1e-5

    def test_batch_order_irrelevant(self, records, embeddings):
        model = Model(toy_config())
        batch = pad_batch(records, embeddings)
        fwd = model.scores(batch.tokens, Tensor(batch.features),
                           batch.lengths, batch.mask)
        rev_records = list(reversed(records))
        rbatch = pad_batch(rev_records, embeddings)
        rev = model.scores(rbatch.tokens, Tensor(rbatch.features),
                           rbatch.lengths, rbatch.mask)
        np.testing.assert_allclose(fwd, rev[::-1], atol=1e-5)


class TestAblationToggles:
    def test_no_translinear_drops_parameters(self):
        full = Model(toy_config())
        cut = Model(config_mod.with_ablations(toy_config(), ["no_translinear"]))
        assert cut.parameter_count() < full.parameter_count()
        assert not any(n.startswith("translinear") for n in cut.parameters())

    def test_no_poscnn_drops_parameters(self):
        full = Model(toy_config())
        cut = Model(config_mod.with_ablations(toy_config(), ["no_poscnn"]))
        assert cut.parameter_count() < full.parameter_count()
        assert not any(n.startswith("poscnn") for n in cut.parameters())

    def test_no_pre_attention_drops_pre_block(self):
        full = Model(toy_config())
        cut = Model(config_mod.with_ablations(toy_config(), ["no_pre_attention"]))
        assert cut.parameter_count() < full.parameter_count()
        assert not any(".pre." in n for n in cut.parameters())

    def test_no_base_embedding_drops_learned_table(self):
        cut = Model(config_mod.with_ablations(toy_config(), ["no_base_embedding"]))
        assert not any(n.startswith("base_embed") for n in cut.parameters())
        assert cut.cfg.effective_alpha == 1.0

    def test_no_pos_encoding_keeps_parameter_count(self):
        full = Model(toy_config())
        cut = Model(config_mod.with_ablations(toy_config(), ["no_pos_encoding"]))
        assert cut.parameter_count() == full.parameter_count()

    def test_no_pos_encoding_changes_output(self, records, embeddings):
        full = Model(toy_config())
        cut = Model(config_mod.with_ablations(toy_config(), ["no_pos_encoding"]))
        a = _forward(full, records, embeddings).data
        b = _forward(cut, records, embeddings).data
        assert np.abs(a - b).max() > 1e-6

    def test_still_forward_with_both_branches_cut(self, records, embeddings):
        cfg = config_mod.with_ablations(toy_config(), ["no_translinear"])
        model = Model(cfg)
        assert _forward(model, records, embeddings).shape == (len(records), 2)


class TestConstruction:
    def test_full_scale_projection_is_identity(self):
        cfg = toy_config(model=config_mod.TransLinearConfig(
            d_model=1280, n_heads=8, n_layers=1, d_ff=64))
        model = Model(cfg)
        np.testing.assert_array_equal(model.proj_w.data, np.eye(1280, dtype=np.float32))

    def test_head_pool_wider_than_features_rejected(self):
        with pytest.raises(ContractError):
            Model(toy_config(head=config_mod.ClassifierHeadConfig(pooled_len=4096)))

    def test_deterministic_init(self):
        a = Model(toy_config()).parameters()
        b = Model(toy_config()).parameters()
        for name in a:
            np.testing.assert_array_equal(a[name].data, b[name].data)
