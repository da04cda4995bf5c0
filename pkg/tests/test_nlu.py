import math

import pytest
from hypothesis import given, strategies as st

from symcall.errors import ContractViolation
from symcall.nlu import (
    IntentClass,
    LabeledExample,
    LabelSource,
    Lexicon,
    classify,
    tokenize,
    train_update,
    uncertainty,
)


def make_weight_lexicon(weights: dict[IntentClass, dict[str, float]]) -> Lexicon:
    full = {c: dict(weights.get(c, {})) for c in IntentClass}
    return Lexicon(weights=full)


class TestTokenize:
    def test_lowercase_punctuation_whitespace(self):
        assert tokenize("No. I don't") == ["no", "i", "dont"]
        assert tokenize("  Hello?  HELLO. ") == ["hello", "hello"]
        assert tokenize("") == []
        assert tokenize("...") == []


class TestClassify:
    def test_empty_lexicon_empty_text_is_uniform_other(self):
        result = classify(Lexicon(), "")
        for score in result.scores.values():
            assert score == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert result.top1 is IntentClass.OTHER  # tie-break
        assert result.p_top1 == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert result.margin == pytest.approx(0.0, abs=1e-12)

    def test_single_weight_matches_direct_softmax(self):
        # Oracle: softmax of the known logit vector (2, 0, 0).
        lex = make_weight_lexicon({IntentClass.YES: {"yes": 2.0}})
        result = classify(lex, "yes")
        expected_yes = math.exp(2.0) / (math.exp(2.0) + 2.0)
        expected_rest = 1.0 / (math.exp(2.0) + 2.0)
        assert result.top1 is IntentClass.YES
        assert result.p_top1 == pytest.approx(expected_yes, abs=1e-12)
        assert result.p_top1 == pytest.approx(0.787, abs=5e-4)
        assert result.scores[IntentClass.NO] == pytest.approx(expected_rest, abs=1e-12)
        assert result.scores[IntentClass.OTHER] == pytest.approx(0.107, abs=5e-4)

    def test_seed_lexicon_accepts_polite_no(self, seed_lexicon):
        result = classify(seed_lexicon, "No. I don't")
        assert result.top1 is IntentClass.NO
        assert result.p_top1 >= 0.7

    def test_unknown_tokens_are_skipped(self, seed_lexicon):
        known = classify(seed_lexicon, "no")
        padded = classify(seed_lexicon, "no xylophone zugzwang")
        assert padded.scores == known.scores

    def test_scores_normalized(self, seed_lexicon):
        for text in ("yes", "no thanks", "what?", "totally unrelated words"):
            result = classify(seed_lexicon, text)
            assert sum(result.scores.values()) == pytest.approx(1.0, abs=1e-12)
            assert all(0.0 < s < 1.0 for s in result.scores.values())

    @given(st.lists(st.sampled_from(["yes", "no", "hello", "what", "maybe"]), max_size=8))
    def test_permutation_invariance(self, words):
        lex = Lexicon.from_counts(
            {
                IntentClass.YES: {"yes": 3},
                IntentClass.NO: {"no": 3},
                IntentClass.OTHER: {"hello": 2, "what": 2},
            }
        )
        forward = classify(lex, " ".join(words))
        backward = classify(lex, " ".join(reversed(words)))
        assert forward.scores == backward.scores

    def test_weight_monotonicity(self):
        base = make_weight_lexicon(
            {IntentClass.YES: {"yes": 0.5}, IntentClass.NO: {"yes": 0.2}}
        )
        bumped = make_weight_lexicon(
            {IntentClass.YES: {"yes": 1.5}, IntentClass.NO: {"yes": 0.2}}
        )
        assert (
            classify(bumped, "yes sure").scores[IntentClass.YES]
            >= classify(base, "yes sure").scores[IntentClass.YES]
        )


class TestTrainUpdate:
    def test_learning_monotonicity(self, seed_lexicon):
        before = classify(seed_lexicon, "yep").scores[IntentClass.YES]
        updated = train_update(seed_lexicon, [LabeledExample("yep", IntentClass.YES)])
        after = classify(updated, "yep").scores[IntentClass.YES]
        assert after > before
        assert updated.version == seed_lexicon.version + 1

    def test_empty_batch_rejected(self, seed_lexicon):
        with pytest.raises(ContractViolation):
            train_update(seed_lexicon, [])

    def test_input_lexicon_untouched(self, seed_lexicon):
        counts_before = {c: dict(t) for c, t in seed_lexicon.counts.items()}
        train_update(seed_lexicon, [LabeledExample("brand new words", IntentClass.NO)])
        assert seed_lexicon.counts == counts_before

    def test_batch_order_insensitive(self, seed_lexicon):
        batch = [
            LabeledExample("same as always", IntentClass.NO),
            LabeledExample("yeah nothing like that", IntentClass.NO),
            LabeledExample("speak up please", IntentClass.OTHER),
        ]
        forward = train_update(seed_lexicon, batch)
        backward = train_update(seed_lexicon, list(reversed(batch)))
        assert forward.weights == backward.weights
        assert forward.counts == backward.counts

    def test_operator_labels_reduce_eval_misreads(self, seed_lexicon, pool):
        """Labeling verbose clear-answer texts lowers flagged misreads on a
        fixed evaluation set (threshold 0.7, flag = wrong YES or low confidence)."""
        from symcall.popsim import PersonaStyle

        eval_set = [
            (text, IntentClass.NO)
            for text in pool.templates(PersonaStyle.VERBOSE, "FEVER_Q", "NO")
            + pool.templates(PersonaStyle.VERBOSE, "RESP_Q", "NO")
        ]

        def flagged_count(lexicon):
            count = 0
            for text, truth in eval_set:
                result = classify(lexicon, text)
                wrong_yes = truth is IntentClass.NO and result.top1 is IntentClass.YES
                if wrong_yes or result.p_top1 < 0.7:
                    count += 1
            return count

        before = flagged_count(seed_lexicon)
        assert before > 0
        labels = [
            LabeledExample(text, truth, LabelSource.OPERATOR) for text, truth in eval_set
        ] * 10  # 50 labeled utterances, as an operator batch would supply
        assert len(labels) >= 50
        updated = train_update(seed_lexicon, labels[:50])
        after = flagged_count(updated)
        assert after < before


class TestUncertainty:
    def test_certain_is_zero(self):
        result = classify(make_weight_lexicon({IntentClass.YES: {"yes": 50.0}}), "yes")
        assert uncertainty(result) == pytest.approx(0.0, abs=1e-9)

    def test_uniform_is_two_thirds(self):
        result = classify(Lexicon(), "anything unknown")
        assert uncertainty(result) == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_complement_of_top1(self):
        lex = make_weight_lexicon({IntentClass.YES: {"yes": 2.0}})
        result = classify(lex, "yes")
        assert uncertainty(result) == pytest.approx(1.0 - result.p_top1, abs=1e-12)
        assert uncertainty(result) == pytest.approx(0.213, abs=5e-4)

    def test_margin_scorer(self):
        lex = make_weight_lexicon({IntentClass.YES: {"yes": 2.0}})
        result = classify(lex, "yes")
        assert uncertainty(result, method="margin") == pytest.approx(
            1.0 - result.margin, abs=1e-12
        )
        with pytest.raises(ContractViolation):
            uncertainty(result, method="entropy")
