import numpy as np
import pytest

from pdeeppp import loss as loss_mod
from pdeeppp.config import LossConfig
from pdeeppp.errors import EmptyInputError
from pdeeppp.tensor import Tape, Tensor, backward

LN2 = np.log(2.0)


def _probs(rows):
    return Tensor(np.asarray(rows), dtype=np.float64)


class TestCrossEntropy:
    def test_certain_correct_prediction(self):
        ce = loss_mod.cross_entropy(_probs([[1.0, 0.0]]), np.array([[1.0, 0.0]]))
        assert abs(ce.item()) < 1e-9

    def test_uniform_prediction(self):
        ce = loss_mod.cross_entropy(_probs([[0.5, 0.5]]), np.array([[1.0, 0.0]]))
        np.testing.assert_allclose(ce.item(), LN2, rtol=1e-9)

    def test_mean_over_batch(self):
        probs = _probs([[0.5, 0.5], [1.0, 0.0]])
        onehot = np.array([[1.0, 0.0], [1.0, 0.0]])
        np.testing.assert_allclose(loss_mod.cross_entropy(probs, onehot).item(),
                                   LN2 / 2, rtol=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            loss_mod.cross_entropy(_probs(np.zeros((0, 2))), np.zeros((0, 2)))


class TestEntropies:
    def test_marginal_of_uniform(self):
        h = loss_mod.marginal_entropy(_probs([[0.5, 0.5], [0.5, 0.5]]))
        np.testing.assert_allclose(h.item(), LN2, rtol=1e-9)

    def test_marginal_of_opposed_confident_rows(self):
        # average distribution is uniform even though each row is sharp
        h = loss_mod.marginal_entropy(_probs([[1.0, 0.0], [0.0, 1.0]]))
        np.testing.assert_allclose(h.item(), LN2, rtol=1e-6)

    def test_conditional_of_sharp_rows_is_zero(self):
        h = loss_mod.conditional_entropy(_probs([[1.0, 0.0], [0.0, 1.0]]))
        assert abs(h.item()) < 1e-9

    def test_conditional_of_uniform_rows(self):
        h = loss_mod.conditional_entropy(_probs([[0.5, 0.5]]))
        np.testing.assert_allclose(h.item(), LN2, rtol=1e-9)

    def test_both_non_negative(self, rng):
        for _ in range(50):
            p = rng.dirichlet(np.ones(2), size=8)
            assert loss_mod.marginal_entropy(_probs(p)).item() >= -1e-9
            assert loss_mod.conditional_entropy(_probs(p)).item() >= -1e-9


class TestCompositeLoss:
    def test_single_uniform_sample(self):
        # lambda*CE - H(Y) + beta*H(Y|X) = 0.95*ln2 - ln2 + ln2
        loss = loss_mod.tim_loss(_probs([[0.5, 0.5]]), np.array([[1.0, 0.0]]),
                                 LossConfig())
        np.testing.assert_allclose(loss.item(), 0.95 * LN2, atol=1e-4)

    def test_two_confident_correct_samples(self):
        probs = _probs([[0.99, 0.01], [0.01, 0.99]])
        onehot = np.array([[1.0, 0.0], [0.0, 1.0]])
        loss = loss_mod.tim_loss(probs, onehot, LossConfig())
        np.testing.assert_allclose(loss.item(), -0.6276, atol=1e-4)

    def test_decomposition_identity(self, rng):
        cfg = LossConfig(lambda_=0.7, beta=0.4)
        for _ in range(20):
            p = _probs(rng.dirichlet(np.ones(2), size=6))
            labels = rng.integers(0, 2, size=6)
            onehot = loss_mod.one_hot(labels, dtype=np.float64)
            expect = (cfg.lambda_ * loss_mod.cross_entropy(p, onehot).item()
                      - loss_mod.marginal_entropy(p).item()
                      + cfg.beta * loss_mod.conditional_entropy(p).item())
            np.testing.assert_allclose(loss_mod.tim_loss(p, onehot, cfg).item(),
                                       expect, atol=1e-9)

    def test_plain_ce_matches_cross_entropy(self, rng):
        p = _probs(rng.dirichlet(np.ones(2), size=5))
        onehot = loss_mod.one_hot(rng.integers(0, 2, size=5), dtype=np.float64)
        np.testing.assert_allclose(loss_mod.plain_ce_loss(p, onehot).item(),
                                   loss_mod.cross_entropy(p, onehot).item())

    def test_gradient_flows_to_probs(self, rng):
        p = Tensor(rng.dirichlet(np.ones(2), size=4), requires_grad=True,
                   dtype=np.float64)
        onehot = loss_mod.one_hot(rng.integers(0, 2, size=4), dtype=np.float64)
        with Tape() as tape:
            loss = loss_mod.tim_loss(p, onehot, LossConfig())
        backward(tape, loss)
        assert p.grad is not None and np.abs(p.grad).max() > 0

    def test_zero_probability_is_finite(self):
        # the log clamp keeps an exactly-zero probability from producing inf
        loss = loss_mod.tim_loss(_probs([[1.0, 0.0]]), np.array([[0.0, 1.0]]),
                                 LossConfig())
        assert np.isfinite(loss.item())


class TestOneHot:
    def test_encoding(self):
        np.testing.assert_array_equal(loss_mod.one_hot([0, 1, 1]),
                                      [[1, 0], [0, 1], [0, 1]])
