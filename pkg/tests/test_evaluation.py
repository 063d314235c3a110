import pytest

from src.corpus import Direction, EntityMention, Perspective, RelationMention, Span
from src.evaluation import (
    EvalResult,
    Task,
    average_over_seeds,
    average_sets,
    prf,
    relabel,
    score_ner,
    score_re,
    score_scirex_cross,
)


def _e(eid, s, e, t="Method"):
    return EntityMention(eid, Span(s, e), t, Perspective.SCI)


def _r(h, t, label="Used-for"):
    return RelationMention(h, t, label, Perspective.SCI)


GOLD_ENTITIES = [[_e("T1", 0, 1), _e("T2", 2, 4, "Task")], [_e("T3", 1, 2, "Metric")]]


class TestPrf:
    def test_counts(self):
        assert prf(2, 1, 1) == pytest.approx((2 / 3, 2 / 3, 2 / 3))

    def test_zero_division(self):
        assert prf(0, 0, 0) == (0.0, 0.0, 0.0)
        assert prf(0, 3, 0) == (0.0, 0.0, 0.0)


class TestNer:
    def test_hand_counted(self):
        pred = [[_e("P0", 0, 1), _e("P1", 2, 4, "Method")], [_e("P2", 1, 2, "Metric"), _e("P3", 3, 4)]]
        result = score_ner(pred, GOLD_ENTITIES)
        assert (result.tp, result.fp, result.fn) == (2, 2, 1)
        assert result.precision == pytest.approx(0.5)
        assert result.recall == pytest.approx(2 / 3)
        assert result.per_label["Task"].fn == 1

    def test_untyped_ignores_labels(self):
        pred = [[_e("P0", 0, 1, "Task"), _e("P1", 2, 4)], [_e("P2", 1, 2)]]
        assert score_ner(pred, GOLD_ENTITIES, typed=False).f1 == 1.0
        assert score_ner(pred, GOLD_ENTITIES, typed=True).tp == 0

    def test_duplicates_match_once(self):
        pred = [[_e("P0", 0, 1), _e("P1", 0, 1)], []]
        result = score_ner(pred, GOLD_ENTITIES)
        assert (result.tp, result.fp) == (1, 1)

    def test_adding_a_true_positive_never_lowers_f1(self):
        pred = [[_e("P0", 0, 1), _e("P9", 5, 6)], []]
        before = score_ner(pred, GOLD_ENTITIES).f1
        pred[1].append(_e("P2", 1, 2, "Metric"))
        assert score_ner(pred, GOLD_ENTITIES).f1 >= before

    def test_sentence_grids_must_agree(self):
        with pytest.raises(ValueError):
            score_ner([[]], GOLD_ENTITIES)


class TestRe:
    GOLD = [([_e("T1", 0, 1), _e("T2", 2, 4, "Task")], [_r("T1", "T2")])]

    def test_boundaries_only(self):
        pred = [([_e("P0", 0, 1, "Task"), _e("P1", 2, 4)], [_r("P0", "P1")])]
        assert score_re(pred, self.GOLD).f1 == 1.0
        assert score_re(pred, self.GOLD, boundaries_only=False).f1 == 0.0

    def test_direction_and_label_count(self):
        pred = [([_e("P0", 0, 1), _e("P1", 2, 4, "Task")], [_r("P1", "P0"), _r("P0", "P1", "Part-of")])]
        result = score_re(pred, self.GOLD)
        assert (result.tp, result.fp, result.fn) == (0, 2, 1)


class TestAveraging:
    def test_sets_average_f1(self):
        sem = EvalResult(Task.RE, 0.2, 0.25, 0.2237, 1, 1, 1)
        sci = EvalResult(Task.RE, 0.4, 0.39, 0.3966, 1, 1, 1)
        assert 100 * average_sets(sem, sci).f1 == pytest.approx(31.02, abs=0.005)

    def test_seeds(self):
        results = [EvalResult.from_counts(Task.NER, tp, 10 - tp, 10 - tp) for tp in (4, 6, 8)]
        mean = average_over_seeds(results)
        assert mean.f1 == pytest.approx(0.6)
        assert mean.tp == 18
        assert mean.to_record()["per_seed_f1"] == pytest.approx([0.4, 0.6, 0.8])

    def test_single_seed_keeps_the_averaged_shape(self):
        only = EvalResult.from_counts(Task.RE, 3, 1, 2)
        mean = average_over_seeds([only])
        assert (mean.precision, mean.recall, mean.f1) == (only.precision, only.recall, only.f1)
        assert (mean.tp, mean.fp, mean.fn) == (3, 1, 2)
        assert mean.per_seed == (only,)
        assert mean.to_record()["per_seed_f1"] == [only.f1]
        assert set(mean.to_record()) == set(average_over_seeds([only, only]).to_record())

    def test_mixed_tasks(self):
        with pytest.raises(ValueError):
            average_over_seeds([EvalResult.from_counts(Task.RE, 1, 0, 0), EvalResult.from_counts(Task.NER, 1, 0, 0)])
        with pytest.raises(ValueError):
            average_over_seeds([])


class TestScirexAndRelabel:
    def test_cross_scores_only_shared_types(self):
        pred = [[_e("P0", 0, 1), _e("P1", 2, 3, "Generic")]]
        gold = [[_e("G0", 0, 1), _e("G1", 4, 5, "OtherScientificTerm")]]
        result = score_scirex_cross(pred, gold)
        assert (result.tp, result.fp, result.fn) == (1, 0, 0)

    def test_relabel_drops_unmapped(self):
        entities = [_e("T1", 0, 1), _e("T2", 2, 3)]
        moved_entities, moved = relabel((entities, [_r("T1", "T2"), _r("T1", "T2", "Conjunction")]), Direction.SCI_TO_SEM)
        assert moved_entities == entities
        assert [r.relation_type for r in moved] == ["Usage"]
