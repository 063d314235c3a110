from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from conftest import AGREEMENT_EXPECTED, make_document, make_sentence, parse_generated
from src.alignment import (
    AlignedDocument,
    CooccurrenceTable,
    MatchKind,
    align_entities,
    argmax_cell,
    assign_agreements,
    build_cooccurrence_table,
    cooccurrence_matrix,
    cooccurrence_score,
    entity_agreement,
    find_overlaps,
    normalize_text,
    overlap_statistics,
    relation_distribution,
    transfer_entity_types,
)
from src.corpus import Agreement, Direction, Perspective, Source, map_relation_label
from src.errors import AmbiguousOverlapError, UndefinedScoreError
from src.synthetic import generate


def _pair(sci_sentence, sem_sentence) -> AlignedDocument:
    sci = make_document("C", [sci_sentence])
    sem = make_document("S", [sem_sentence], source=Source.SEMEVAL)
    return assign_agreements(align_entities(AlignedDocument(sem, sci, ((0, 0),))))


WORDS = ["a", "b", "c", "d", "e", "f"]


class TestNormalization:
    def test_tokenization_and_escapes_do_not_matter(self):
        assert normalize_text("The -LRB-parser-RRB- works.") == normalize_text("The ( parser ) works .")

    def test_case_is_ignored(self):
        assert normalize_text("Machine Translation") == normalize_text("machine translation")


class TestFindOverlaps:
    def test_partition(self, synthetic_overlap):
        aligned, sem_only, sci_only = synthetic_overlap
        assert (len(aligned), len(sem_only), len(sci_only)) == (8, 3, 3)
        for pair in aligned:
            assert len(pair.sem_doc.sentences) == len(pair.sci_doc.sentences)
            assert pair.sem_doc.raw_text == pair.sci_doc.raw_text

    def test_no_overlap(self):
        sem, _ = parse_generated(generate(n_overlap=0, n_sem_only=2, n_sci_only=0))
        _, sci = parse_generated(generate(n_overlap=0, n_sem_only=0, n_sci_only=2))
        result = find_overlaps(sem, sci)
        assert result.aligned == [] and len(result.sem_only) == 2 and len(result.sci_only) == 2

    def test_two_partners_is_ambiguous(self, agreement_corpus):
        sem, sci = parse_generated(agreement_corpus)
        duplicate = type(sci[0])("DUP", sci[0].source, sci[0].raw_text, sci[0].sentences)
        with pytest.raises(AmbiguousOverlapError) as err:
            find_overlaps(sem, sci + [duplicate])
        assert "DUP" in err.value.doc_ids

    def test_regridded_entities_cover_the_same_words(self, agreement_corpus, agreement_pair):
        sem_raw, _ = parse_generated(agreement_corpus)
        originals = {e.id: sem_raw[0].sentences[si].words[e.span.start:e.span.end] for si, e in sem_raw[0].iter_entities()}
        for si, e in agreement_pair.sem_doc.iter_entities():
            assert agreement_pair.sem_doc.sentences[si].words[e.span.start:e.span.end] == originals[e.id]


class TestEntityMatching:
    def test_exact_before_partial(self):
        pair = _pair(
            make_sentence(WORDS, [("T1", 0, 2, "Method"), ("T2", 3, 6, "Task")]),
            make_sentence(WORDS, [("S1", 0, 2, "ENTITY"), ("S2", 3, 4, "ENTITY")], perspective=Perspective.SEM),
        )
        kinds = {(m.sem_id, m.sci_id): m.kind for m in pair.entity_matches}
        assert kinds == {("S1", "T1"): MatchKind.EXACT, ("S2", "T2"): MatchKind.PARTIAL}

    def test_greedy_partial_prefers_larger_overlap(self):
        pair = _pair(
            make_sentence(WORDS, [("T1", 0, 4, "Method")]),
            make_sentence(WORDS, [("S1", 0, 1, "ENTITY"), ("S2", 1, 4, "ENTITY")], perspective=Perspective.SEM),
        )
        assert [(m.sem_id, m.kind) for m in pair.entity_matches] == [("S2", MatchKind.PARTIAL)]

    def test_entity_agreement(self, agreement_pair):
        sci_sentence = agreement_pair.sci_doc.sentences[3]
        phrase = next(e for e in sci_sentence.entities if e.span.width == 5)
        corpus = next(e for e in sci_sentence.entities if e.span.width == 1)
        assert entity_agreement(agreement_pair, 3, phrase) is Agreement.LOW
        assert entity_agreement(agreement_pair, 3, corpus) is Agreement.HIGH
        unmatched = agreement_pair.sem_doc.sentences[4].entities[0]
        assert entity_agreement(agreement_pair, 4, unmatched) is Agreement.MEDIUM


class TestAgreements:
    def test_four_reference_cases(self, agreement_pair):
        for si, expected in AGREEMENT_EXPECTED.items():
            assert [v.agreement for v in agreement_pair.verdicts_in(si)] == expected, si
        assert agreement_pair.verdicts_in(0) == []

    def test_every_relation_has_one_verdict(self, synthetic_overlap):
        for pair in synthetic_overlap.aligned:
            seen = Counter()
            for v in pair.relation_verdicts:
                for r in (v.sci_relation, v.sem_relation):
                    if r is not None:
                        seen[(v.sentence_index, r)] += 1
            expected = pair.sci_doc.relation_count() + pair.sem_doc.relation_count()
            assert sum(seen.values()) == expected
            assert set(seen.values()) <= {1}

    def test_perspective_order_does_not_change_levels(self, synthetic_overlap):
        for pair in synthetic_overlap.aligned:
            sci_first = Counter(v.agreement for v in assign_agreements(pair, Perspective.SCI).relation_verdicts)
            sem_first = Counter(v.agreement for v in assign_agreements(pair, Perspective.SEM).relation_verdicts)
            assert sci_first == sem_first

    def test_reversed_direction_with_the_same_label_stays_medium(self):
        pair = _pair(
            make_sentence(WORDS, [("T1", 0, 1, "Method"), ("T2", 2, 3, "Task")], [("T1", "T2", "Used-for")]),
            make_sentence(WORDS, [("S1", 0, 1, "ENTITY"), ("S2", 2, 3, "ENTITY")], [("S2", "S1", "Usage")],
                          perspective=Perspective.SEM),
        )
        assert [v.agreement for v in pair.relation_verdicts] == [Agreement.MEDIUM, Agreement.MEDIUM]

    @pytest.mark.parametrize("first", list(Perspective))
    def test_two_relations_on_one_pair_prefer_the_agreeing_partner(self, first):
        pair = _pair(
            make_sentence(WORDS, [("T1", 0, 1, "Method"), ("T2", 2, 3, "Task")],
                          [("T1", "T2", "Used-for"), ("T1", "T2", "Feature-of")]),
            make_sentence(WORDS, [("S1", 0, 1, "ENTITY"), ("S2", 2, 3, "ENTITY")], [("S1", "S2", "Model")],
                          perspective=Perspective.SEM),
        )
        verdicts = assign_agreements(pair, first).relation_verdicts
        assert Counter(v.agreement for v in verdicts) == Counter({Agreement.HIGH: 1, Agreement.MEDIUM: 1})
        (high,) = [v for v in verdicts if v.agreement is Agreement.HIGH]
        assert high.sci_relation.relation_type == "Feature-of"

    @pytest.mark.parametrize("first", list(Perspective))
    def test_low_pairs_fill_in_after_high(self, first):
        pair = _pair(
            make_sentence(WORDS, [("T1", 0, 1, "Method"), ("T2", 2, 3, "Task")],
                          [("T1", "T2", "Used-for"), ("T1", "T2", "Part-of")]),
            make_sentence(WORDS, [("S1", 0, 1, "ENTITY"), ("S2", 2, 3, "ENTITY")],
                          [("S1", "S2", "Usage"), ("S1", "S2", "Result")], perspective=Perspective.SEM),
        )
        levels = Counter(v.agreement for v in assign_agreements(pair, first).relation_verdicts)
        assert levels == Counter({Agreement.HIGH: 1, Agreement.LOW: 1})

    def test_low_means_the_mapped_labels_differ(self, synthetic_overlap):
        for pair in synthetic_overlap.aligned:
            for v in pair.relation_verdicts:
                if v.agreement is Agreement.LOW:
                    mapped = map_relation_label(v.sem_relation.relation_type, Direction.SEM_TO_SCI)
                    assert mapped != v.sci_relation.relation_type

    def test_compare_ignores_direction(self):
        pair = _pair(
            make_sentence(WORDS, [("T1", 0, 1, "Method"), ("T2", 2, 3, "Method")], [("T1", "T2", "Compare")]),
            make_sentence(WORDS, [("S1", 0, 1, "ENTITY"), ("S2", 2, 3, "ENTITY")], [("S2", "S1", "Comparison")],
                          perspective=Perspective.SEM),
        )
        assert [v.agreement for v in pair.relation_verdicts] == [Agreement.HIGH]

    def test_unmapped_label_on_shared_pair_is_low(self):
        pair = _pair(
            make_sentence(WORDS, [("T1", 0, 1, "Method"), ("T2", 2, 3, "Method")], [("T1", "T2", "Conjunction")]),
            make_sentence(WORDS, [("S1", 0, 1, "ENTITY"), ("S2", 2, 3, "ENTITY")], [("S1", "S2", "Usage")],
                          perspective=Perspective.SEM),
        )
        assert [v.agreement for v in pair.relation_verdicts] == [Agreement.LOW]


class TestTypeTransfer:
    def test_exact_matches_take_scierc_types(self, agreement_pair):
        doc = transfer_entity_types(agreement_pair)
        sentence = doc.sentences[1]
        assert sorted(e.entity_type for e in sentence.entities) == ["Method", "Task"]
        assert {e.entity_type for e in doc.sentences[3].entities} == {"Material", "OtherScientificTerm_2"}


class TestCooccurrence:
    def test_score_by_hand(self):
        table = CooccurrenceTable(
            Perspective.SCI,
            a={("Method", "Task", "Used-for"): 3, ("Method", "Method", "Compare"): 1},
            n1={"Method": 4},
            n2={"Task": 3, "Method": 1},
            total_relations=4,
        )
        assert cooccurrence_score(table, "Method", "Task", "Used-for") == Fraction(3, 7)
        assert cooccurrence_score(table, "Method", "Method", "Used-for") == 0
        assert argmax_cell(table, "Used-for") == ("Method", "Task")

    def test_undefined_cell(self):
        table = CooccurrenceTable(Perspective.SCI, a={}, n1={"Method": 1}, n2={"Task": 1}, total_relations=1)
        with pytest.raises(UndefinedScoreError):
            cooccurrence_score(table, "Task", "Method", "Used-for")

    def test_table_from_alignment(self, agreement_pair):
        sci = build_cooccurrence_table([agreement_pair], Perspective.SCI)
        assert sci.total_relations == 3
        assert sci.a[("Method", "Task", "Used-for")] == 1
        sem = build_cooccurrence_table([agreement_pair], Perspective.SEM)
        assert sem.total_relations == 3
        assert sem.a[("Method", "Task", "Usage")] == 1

    def test_matrix_shape(self, agreement_pair):
        table = build_cooccurrence_table([agreement_pair], Perspective.SCI)
        types, matrix = cooccurrence_matrix(table, "Used-for")
        assert matrix.shape == (len(types), len(types))
        assert np.all((matrix >= 0) & (matrix <= 1))


class TestStatistics:
    def test_report(self, agreement_pair):
        report = overlap_statistics([agreement_pair])
        assert report.aligned_documents == 1
        assert report.relations == {"SCI": 3, "SEM": 3}
        assert report.agreements == {"HIGH": 1, "MEDIUM": 2, "LOW": 1}
        assert report.entities == {"SCI": 7, "SEM": 8}
        assert report.reproducing_definition is None

    def test_distribution(self, agreement_pair):
        dist = relation_distribution([agreement_pair])
        assert set(dist) == {"SCI", "SEM"}
        assert len(dist["SCI"]) == 5
        assert dist["SCI"]["Used-for/Usage"] == 3
        assert dist["SEM"]["Used-for/Usage"] == 1
        assert dist["SEM"]["Feature-of/Model"] == 1
        assert dist["SEM"]["Evaluate-for/Result"] == 1

    def test_align_corpora_assigns_verdicts(self, synthetic_overlap):
        assert all(p.relation_verdicts or not (p.sci_doc.relation_count() + p.sem_doc.relation_count())
                   for p in synthetic_overlap.aligned)
