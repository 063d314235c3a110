import json

import pytest

from conftest import parse_generated
from src.corpus import COMMON_SCI_RELATIONS, Agreement, Direction, Head, Perspective, map_relation_label
from src.dataset_builder import (
    ConflictPolicy,
    HeldOutSet,
    LabelSpace,
    SplitSpec,
    Strategy,
    build_scierc_standard_split,
    build_test_set,
    build_training_set,
    cap_data_quantity,
    read_built_set,
    write_built_set,
)
from src.errors import ConfigError, MissingDataError
from src.format_io import parse_scierc
from src.synthetic import generate


def _span_relations(annotation):
    spans = {e.id: (e.span.start, e.span.end) for e in annotation.entities}
    return {(spans[r.head], spans[r.tail], r.relation_type) for r in annotation.relations}


def _sci_side(sentence):
    spans = {e.id: (e.span.start, e.span.end) for e in sentence.entities}
    return {(spans[r.head], spans[r.tail], r.relation_type) for r in sentence.relations
            if r.relation_type in COMMON_SCI_RELATIONS}


def _sem_side(sentence):
    spans = {e.id: (e.span.start, e.span.end) for e in sentence.entities}
    out = set()
    for r in sentence.relations:
        label = map_relation_label(r.relation_type, Direction.SEM_TO_SCI)
        if label is not None:
            out.add((spans[r.head], spans[r.tail], label))
    return out


def _conflicting(mine, theirs):
    """Relations of `mine` sharing an argument pair with a differently labeled or directed one in `theirs`."""
    return {
        r for r in mine
        if any({r[0], r[1]} == {o[0], o[1]} and o != r for o in theirs) and r not in theirs
    }


def _mixed_oracle(pair, si, policy):
    sci = _sci_side(pair.sci_doc.sentences[si])
    sem = _sem_side(pair.sem_doc.sentences[si])
    if policy is ConflictPolicy.KEEP_SCI:
        return sci | (sem - _conflicting(sem, sci))
    if policy is ConflictPolicy.KEEP_SEM:
        return sem | (sci - _conflicting(sci, sem))
    return sci | sem


class TestMixedAndConcat:
    @pytest.mark.parametrize(
        "strategy,policy",
        [
            (Strategy.MIXED, ConflictPolicy.KEEP_BOTH),
            (Strategy.MIXED_SCI, ConflictPolicy.KEEP_SCI),
            (Strategy.MIXED_SEM, ConflictPolicy.KEEP_SEM),
        ],
    )
    def test_mixed_matches_brute_force(self, synthetic_overlap, strategy, policy):
        examples = build_training_set(synthetic_overlap.aligned, None, SplitSpec(strategy=strategy))
        by_key = {e.key: e for e in examples}
        for pair in synthetic_overlap.aligned:
            for si in range(len(pair.sci_doc.sentences)):
                example = by_key[f"{pair.sci_doc.doc_id}#{si}"]
                assert set(example.annotations) == {Head.HEAD_1}
                assert _span_relations(example.annotations[Head.HEAD_1]) == _mixed_oracle(pair, si, policy)

    def test_mixed_keeps_both_sides_of_a_conflict(self, agreement_pair):
        (example,) = [e for e in build_training_set([agreement_pair], None, SplitSpec(strategy=Strategy.MIXED))
                      if e.sentence_index == 2]
        labels = sorted(r.relation_type for r in example.annotations[Head.HEAD_1].relations)
        assert labels == ["Feature-of", "Used-for"]

    def test_mixed_policy_override(self, agreement_pair):
        spec = SplitSpec(strategy=Strategy.MIXED, conflict_policy=ConflictPolicy.KEEP_SEM)
        (example,) = [e for e in build_training_set([agreement_pair], None, spec) if e.sentence_index == 2]
        assert [r.relation_type for r in example.annotations[Head.HEAD_1].relations] == ["Feature-of"]

    def test_concat_is_both_views_per_sentence(self, synthetic_overlap):
        aligned = synthetic_overlap.aligned
        examples = build_training_set(aligned, None, SplitSpec(strategy=Strategy.CONCAT))
        assert len(examples) == 2 * sum(len(p.sci_doc.sentences) for p in aligned)
        for pair in aligned:
            for si in range(len(pair.sci_doc.sentences)):
                views = [e for e in examples if e.sentence_index == si
                         and e.doc_id in (pair.sci_doc.doc_id, pair.sem_doc.doc_id)]
                assert len(views) == 2
                got = [_span_relations(v.annotations[Head.HEAD_1]) for v in views]
                assert got == [_sci_side(pair.sci_doc.sentences[si]), _sem_side(pair.sem_doc.sentences[si])]

    def test_concat_plus_appends_the_extras(self, synthetic_overlap):
        base = build_training_set(synthetic_overlap.aligned, None, SplitSpec(strategy=Strategy.CONCAT))
        plus = build_training_set(
            synthetic_overlap.aligned, synthetic_overlap.sci_only, SplitSpec(strategy=Strategy.CONCAT_PLUS_SCI)
        )
        extra = sum(len(d.sentences) for d in synthetic_overlap.sci_only)
        assert len(plus) == len(base) + extra

    def test_concat_plus_needs_extras(self, synthetic_overlap):
        with pytest.raises(MissingDataError):
            build_training_set(synthetic_overlap.aligned, None, SplitSpec(strategy=Strategy.CONCAT_PLUS_SEM))

    def test_merged_strategies_are_untyped_only(self, synthetic_overlap):
        with pytest.raises(ConfigError):
            build_training_set(
                synthetic_overlap.aligned, None, SplitSpec(strategy=Strategy.MIXED, label_space=LabelSpace.FULL_TYPED)
            )

    def test_standard_split_has_its_own_builder(self, synthetic_overlap):
        with pytest.raises(ConfigError):
            build_training_set(synthetic_overlap.aligned, None, SplitSpec(strategy=Strategy.SCIERC_STANDARD))


class TestForbiddenSets:
    @pytest.mark.parametrize(
        "strategy,forbidden",
        [
            (Strategy.CONCAT_PLUS_SCI, {HeldOutSet.SCI}),
            (Strategy.CONCAT_PLUS_SEM, {HeldOutSet.SEM}),
            (Strategy.CONCAT, set()),
            (Strategy.MTL_SOFT, set()),
        ],
    )
    def test_forbidden(self, strategy, forbidden):
        assert SplitSpec(strategy=strategy).forbidden_test_sets() == forbidden


class TestIndependentAndMultiTask:
    def test_independent_heads(self, synthetic_overlap):
        sci = build_training_set(synthetic_overlap.aligned, None, SplitSpec(strategy=Strategy.INDEPENDENT_SCI))
        sem = build_training_set(synthetic_overlap.aligned, None, SplitSpec(strategy=Strategy.INDEPENDENT_SEM))
        assert all(set(e.annotations) == {Head.HEAD_1} for e in sci)
        assert all(set(e.annotations) == {Head.HEAD_2} for e in sem)
        assert len(sci) == len(sem)

    def test_untyped_space_erases_types(self, agreement_pair):
        examples = build_training_set([agreement_pair], None, SplitSpec(strategy=Strategy.MTL))
        for example in examples:
            for annotation in example.annotations.values():
                assert {e.entity_type for e in annotation.entities} <= {"ENTITY"}

    def test_full_typed_second_head_uses_transferred_types(self, agreement_pair):
        spec = SplitSpec(strategy=Strategy.MTL, label_space=LabelSpace.FULL_TYPED)
        (example,) = [e for e in build_training_set([agreement_pair], None, spec) if e.sentence_index == 3]
        assert {e.entity_type for e in example.annotations[Head.HEAD_2].entities} == {
            "Material", "OtherScientificTerm_2",
        }

    def test_soft_labels_follow_agreement(self, agreement_pair):
        examples = build_training_set([agreement_pair], None, SplitSpec(strategy=Strategy.MTL_SOFT))
        levels = {
            (e.sentence_index, t.head): t.label.agreement
            for e in examples
            for t in e.soft_labels
        }
        assert levels == {
            (1, Head.HEAD_1): Agreement.HIGH,
            (1, Head.HEAD_2): Agreement.HIGH,
            (2, Head.HEAD_1): Agreement.LOW,
            (2, Head.HEAD_2): Agreement.LOW,
            (3, Head.HEAD_1): Agreement.MEDIUM,
            (4, Head.HEAD_2): Agreement.MEDIUM,
        }
        high = next(t for e in examples for t in e.soft_labels if t.label.agreement is Agreement.HIGH)
        assert high.label.k == 5
        assert max(high.label.probs) == pytest.approx(0.9)

    def test_soft_entities(self, agreement_pair):
        spec = SplitSpec(strategy=Strategy.MTL_SOFT, soft_entities=True)
        (example,) = [e for e in build_training_set([agreement_pair], None, spec) if e.sentence_index == 3]
        entity_levels = sorted(t.label.agreement.value for t in example.soft_targets(Head.HEAD_1, "entity"))
        assert entity_levels == ["HIGH", "LOW"]

    def test_plain_mtl_has_no_soft_labels(self, agreement_pair):
        assert all(not e.soft_labels for e in build_training_set([agreement_pair], None, SplitSpec(strategy=Strategy.MTL)))

    def test_test_set_heads_follow_perspective(self, synthetic_overlap):
        examples = build_test_set(synthetic_overlap.sem_only + synthetic_overlap.sci_only, LabelSpace.COMMON_UNTYPED)
        sem_ids = {d.doc_id for d in synthetic_overlap.sem_only}
        for example in examples:
            expected = Head.HEAD_2 if example.doc_id in sem_ids else Head.HEAD_1
            assert set(example.annotations) == {expected}


class TestDataCap:
    def test_smaller_caps_are_subsets(self, synthetic_overlap):
        examples = build_training_set(synthetic_overlap.aligned, None, SplitSpec(strategy=Strategy.MTL))
        small = {e.key for e in cap_data_quantity(examples, 5, seed=3)}
        large = {e.key for e in cap_data_quantity(examples, 12, seed=3)}
        assert len(small) == 5 and small <= large

    def test_cap_is_seeded(self, synthetic_overlap):
        examples = build_training_set(synthetic_overlap.aligned, None, SplitSpec(strategy=Strategy.MTL))
        assert cap_data_quantity(examples, 6, 1) == cap_data_quantity(examples, 6, 1)

    def test_cap_above_size(self, synthetic_overlap):
        examples = build_training_set(synthetic_overlap.aligned, None, SplitSpec(strategy=Strategy.MTL))
        with pytest.raises(ValueError):
            cap_data_quantity(examples, len(examples) + 1, 0)

    @pytest.mark.parametrize("n", [-1, -5])
    def test_negative_cap(self, synthetic_overlap, n):
        examples = build_training_set(synthetic_overlap.aligned, None, SplitSpec(strategy=Strategy.MTL))
        with pytest.raises(ValueError, match="non-negative"):
            cap_data_quantity(examples, n, 0)

    def test_zero_cap_is_empty(self, synthetic_overlap):
        examples = build_training_set(synthetic_overlap.aligned, None, SplitSpec(strategy=Strategy.MTL))
        assert cap_data_quantity(examples, 0, 0) == []

    def test_spec_cap(self, synthetic_overlap):
        spec = SplitSpec(strategy=Strategy.INDEPENDENT_SCI, data_cap=4, seed=2)
        assert len(build_training_set(synthetic_overlap.aligned, None, spec)) == 4


class TestStandardSplit:
    def _corpora(self):
        corpus = generate(n_overlap=8, n_sem_only=2, n_sci_only=6, seed=11)
        sem, sci = parse_generated(corpus)
        partition = {split: {d.doc_id for d in parse_scierc(content)}
                     for split, content in corpus.scierc_splits().items()}
        return sem, sci, partition

    def test_partition_is_respected(self):
        sem, sci, partition = self._corpora()
        train, test = build_scierc_standard_split(sci, sem, None, partition)
        assert {e.doc_id for e in train} <= partition["train"] | partition["dev"]
        assert {e.doc_id for e in test} == partition["test"]
        assert all(set(e.annotations) == {Head.HEAD_1} for e in test)

    def test_single_perspective_abstracts_are_medium(self):
        sem, sci, partition = self._corpora()
        train, _ = build_scierc_standard_split(sci, sem, None, partition)
        single = [e for e in train if e.doc_id.startswith("SYN-CO")]
        dual = [e for e in train if e.doc_id.startswith("SYN-C0")]
        assert single and dual
        assert all(set(e.annotations) == {Head.HEAD_1} for e in single)
        assert all(t.label.agreement is Agreement.MEDIUM for e in single for t in e.soft_labels)
        assert all(set(e.annotations) == {Head.HEAD_1, Head.HEAD_2} for e in dual)

    def test_needs_partition(self):
        sem, sci, _ = self._corpora()
        with pytest.raises(MissingDataError):
            build_scierc_standard_split(sci, sem, None, None)


class TestPersistence:
    def test_round_trip_and_manifest(self, agreement_pair, tmp_path):
        spec = SplitSpec(strategy=Strategy.MTL_SOFT, soft_entities=True)
        examples = build_training_set([agreement_pair], None, spec)
        manifest = write_built_set(tmp_path / "built", examples, spec)
        assert read_built_set(tmp_path / "built") == examples
        on_disk = json.loads((tmp_path / "built" / "manifest.json").read_text())
        assert on_disk["strategy"] == "MTL_SOFT"
        assert on_disk["examples"] == manifest.examples == len(examples)
        assert on_disk["heads"]["HEAD_1"]["relations"] == 3
        assert on_disk["soft_labels"] is True

    def test_missing_set(self, tmp_path):
        with pytest.raises(MissingDataError):
            read_built_set(tmp_path / "nothing")

    def test_mixed_manifest_records_policy(self, agreement_pair, tmp_path):
        spec = SplitSpec(strategy=Strategy.MIXED_SCI)
        manifest = write_built_set(tmp_path, build_training_set([agreement_pair], None, spec), spec)
        assert manifest.conflict_policy is ConflictPolicy.KEEP_SCI
        assert manifest.agreements == {}
