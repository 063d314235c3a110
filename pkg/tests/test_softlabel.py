import math

import numpy as np
import pytest

from src.corpus import Agreement
from src.errors import DimensionMismatchError
from src.softlabel import (
    Divergence,
    PredictionDistribution,
    divergence,
    entropy,
    kl_inverse,
    kl_standard,
    log_normalize,
    make_soft_label,
    soft_loss_bce,
    soft_loss_ce,
)


def _kl(p, q):
    return math.fsum(pi * (math.log(pi) - math.log(qi)) for pi, qi in zip(p, q) if pi > 0)


def _bce(p, q):
    return -math.fsum(pi * math.log(qi) + (1 - pi) * math.log(1 - qi) for pi, qi in zip(p, q)) / len(p)


def _random_pairs(n=1000):
    rng = np.random.default_rng(42)
    for _ in range(n):
        k = int(rng.integers(2, 21))
        label = make_soft_label(int(rng.integers(k)), Agreement(rng.choice(["HIGH", "MEDIUM", "LOW"])), k)
        q = PredictionDistribution.from_logits(rng.normal(scale=3.0, size=k))
        yield label, q


class TestSoftLabelVectors:
    @pytest.mark.parametrize(
        "agreement,expected",
        [
            (Agreement.HIGH, [0.9, 0.025, 0.025, 0.025, 0.025]),
            (Agreement.MEDIUM, [0.8, 0.05, 0.05, 0.05, 0.05]),
            (Agreement.LOW, [0.6, 0.1, 0.1, 0.1, 0.1]),
        ],
    )
    def test_five_class_reference(self, agreement, expected):
        label = make_soft_label(0, agreement, 5)
        np.testing.assert_allclose(label.as_array(), expected, atol=1e-12)

    @pytest.mark.parametrize("k", range(2, 21))
    def test_distribution_with_target_mode(self, k):
        for agreement in Agreement:
            label = make_soft_label(k - 1, agreement, k)
            assert math.isclose(sum(label.probs), 1.0, abs_tol=1e-12)
            assert int(np.argmax(label.as_array())) == k - 1
            assert all(p > 0 for p in label.probs)

    def test_agreement_orders_target_mass(self):
        mass = {a: make_soft_label(1, a, 3).probs[1] for a in Agreement}
        assert mass[Agreement.HIGH] > mass[Agreement.MEDIUM] > mass[Agreement.LOW]

    @pytest.mark.parametrize("target,k", [(0, 1), (3, 3), (-1, 4)])
    def test_invalid(self, target, k):
        with pytest.raises(ValueError):
            make_soft_label(target, Agreement.HIGH, k)


class TestDivergences:
    def test_against_term_by_term_oracle(self):
        for label, q in _random_pairs():
            p, qs = label.probs, q.probs
            assert math.isclose(kl_standard(label, q), _kl(p, qs), abs_tol=1e-10)
            assert math.isclose(kl_inverse(label, q), _kl(qs, p), abs_tol=1e-10)
            ce = -math.fsum(pi * math.log(qi) for pi, qi in zip(p, qs))
            assert math.isclose(soft_loss_ce(label, q), ce, abs_tol=1e-10)

    def test_bce_against_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            k = int(rng.integers(2, 10))
            label = make_soft_label(0, Agreement.MEDIUM, k)
            q = 1.0 / (1.0 + np.exp(-rng.normal(size=k)))
            assert math.isclose(soft_loss_bce(label, q), _bce(label.probs, q), abs_tol=1e-10)

    def test_self_divergence_is_zero(self):
        label = make_soft_label(2, Agreement.LOW, 6)
        assert kl_standard(label, label.as_array()) == pytest.approx(0.0, abs=1e-15)
        assert kl_inverse(label, label.as_array()) == pytest.approx(0.0, abs=1e-15)

    def test_cross_entropy_is_kl_plus_entropy(self):
        for label, q in _random_pairs(200):
            assert soft_loss_ce(label, q) - kl_standard(label, q) == pytest.approx(entropy(label), abs=1e-10)

    def test_non_negative(self):
        for label, q in _random_pairs(200):
            assert kl_standard(label, q) >= -1e-12
            assert kl_inverse(label, q) >= -1e-12

    def test_dispatch(self):
        label = make_soft_label(0, Agreement.HIGH, 3)
        q = [0.5, 0.3, 0.2]
        assert divergence(Divergence.KL_STANDARD, label, q) == kl_standard(label, q)
        assert divergence("CE", label, q) == soft_loss_ce(label, q)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            kl_standard(make_soft_label(0, Agreement.HIGH, 3), [0.5, 0.5])

    def test_prediction_from_logits_is_stable(self):
        q = PredictionDistribution.from_logits([1000.0, 0.0])
        np.testing.assert_allclose(q.as_array(), [1.0, 0.0], atol=1e-12)

    def test_zero_in_prediction_stays_finite(self):
        p = make_soft_label(0, Agreement.HIGH, 5)
        q = [0.0, 0.25, 0.25, 0.25, 0.25]
        value = kl_standard(p, q)
        assert math.isfinite(value)
        assert value == pytest.approx(_kl(p.probs, [1e-12, 0.25, 0.25, 0.25, 0.25]), rel=1e-12)


class TestLogNormalize:
    def test_exp_recovers_the_label(self):
        for label, _ in _random_pairs(200):
            logp = log_normalize(label)
            np.testing.assert_allclose(np.exp(logp), label.as_array(), rtol=1e-12)
            assert math.fsum(np.exp(logp)) == pytest.approx(1.0, abs=1e-12)

    def test_five_class_reference(self):
        logp = log_normalize(make_soft_label(2, Agreement.HIGH, 5))
        np.testing.assert_allclose(logp, np.log([0.025, 0.025, 0.9, 0.025, 0.025]), rtol=1e-12)
        assert int(np.argmax(logp)) == 2

    @pytest.mark.parametrize("shift", [-50.0, 0.0, 3.5, 700.0])
    def test_renormalizing_shifted_logs_is_a_no_op(self, shift):
        logp = log_normalize(make_soft_label(1, Agreement.MEDIUM, 4))
        shifted = logp + shift
        renormalized = shifted - np.logaddexp.reduce(shifted)
        np.testing.assert_allclose(renormalized, logp, atol=1e-12)

    def test_zero_entries_are_minus_infinity(self):
        logp = log_normalize([0.5, 0.5, 0.0])
        assert logp[2] == -math.inf
        np.testing.assert_allclose(logp[:2], np.log([0.5, 0.5]))
