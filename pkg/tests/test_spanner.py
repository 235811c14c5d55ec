import itertools
import random
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kbqa import surface_index as si
from kbqa.data import tokenize
from kbqa.spanner import (
    NerConfig,
    NerModel,
    SpanError,
    find_span,
    label_tokens,
    levenshtein,
    merge_io,
    predict_mention,
    snap_to_index,
    train_ner,
)

from .test_kb_index import sample_index


def _lev_oracle(a, b):
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


class TestLevenshtein:
    def test_identity(self):
        assert levenshtein("mildred", "mildred") == 0

    def test_empty(self):
        assert levenshtein("", "abc") == 3

    def test_kitten(self):
        assert levenshtein("kitten", "sitting") == _lev_oracle("kitten", "sitting") == 3

    @settings(max_examples=200)
    @given(st.text(max_size=8), st.text(max_size=8), st.text(max_size=8))
    def test_metric(self, a, b, c):
        assert levenshtein(a, b) == levenshtein(b, a) == _lev_oracle(a, b)
        assert (levenshtein(a, b) == 0) == (a == b)
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


class TestFindSpan:
    def test_worked_question(self):
        assert find_span("who wrote mildred pierced?", "m.04t1ftb", sample_index(), 5) == "mildred pierced"

    def test_absent(self):
        assert find_span("who wrote mildred pierced?", "m.nothere", sample_index(), 5) is None

    def test_longest_first(self):
        idx = si.SurfaceFormIndex({("pierced", "u"): 3, ("mildred pierced", "u"): 1, ("who", "u"): 1})
        q = "who wrote mildred pierced"
        matches = [g for g in si.extract_ngrams(q, 4) if any(x == "u" for x, _ in idx.lookup(g))]
        # brute-force ordering rule: maximal length first, leftmost among equals
        expected = sorted(matches, key=lambda g: (-len(g.split()), q.split().index(g.split()[0])))[0]
        assert find_span(q, "u", idx, 4) == expected == "mildred pierced"

    def test_result_always_retrieves_gold(self):
        rng = random.Random(0)
        words = ["aa", "bb", "cc", "dd"]
        for _ in range(200):
            counts = {(" ".join(rng.sample(words, rng.randint(1, 2))), f"u{rng.randrange(3)}"): 1 for _ in range(5)}
            idx = si.SurfaceFormIndex(counts)
            q = " ".join(rng.choice(words) for _ in range(5))
            span = find_span(q, "u1", idx, 3)
            if span is not None:
                assert "u1" in [u for u, _ in idx.lookup(span)]
                assert label_tokens(q, span).labels.count("I") == len(span.split())


class TestLabels:
    def test_worked_figure(self):
        ann = label_tokens("who wrote mildred pierced", "mildred pierced")
        assert ann.tokens == ["who", "wrote", "mildred", "pierced"]
        assert ann.labels == ["O", "O", "I", "I"]
        assert ann.span == (2, 3)

    def test_whole_question(self):
        assert label_tokens("Inferno", "inferno").labels == ["I"]

    def test_not_contiguous(self):
        with pytest.raises(SpanError):
            label_tokens("who wrote mildred pierced", "who pierced")

    def test_first_run_kept(self):
        assert merge_io(["O", "I", "I", "O", "I"]) == (1, 2)
        assert merge_io(["O", "O"]) is None
        assert merge_io(["I"]) == (0, 0)


class TestSnap:
    def test_closest(self):
        idx = si.SurfaceFormIndex({("mildred pierced", "a"): 1, ("pierced", "b"): 1})
        assert levenshtein("mildred pierce", "mildred pierced") == 1
        assert levenshtein("mildred pierce", "pierced") == _lev_oracle("mildred pierce", "pierced") == 9
        assert snap_to_index("mildred pierce", "who wrote mildred pierced", idx) == "mildred pierced"

    def test_tie_prefers_longer(self):
        idx = si.SurfaceFormIndex({("a b", "x"): 1, ("ac", "y"): 1})
        assert levenshtein("ab", "a b") == levenshtein("ab", "ac") == 1
        assert snap_to_index("ab", "a b ac", idx) == "a b"

    def test_tie_prefers_leftmost(self):
        idx2 = si.SurfaceFormIndex({("xy", "a"): 1, ("zw", "b"): 1})
        assert snap_to_index("xw", "xy zw", idx2) == "xy"

    def test_nothing_indexed(self):
        assert snap_to_index("foo", "who wrote it", sample_index()) is None


class _FixedTagger:
    def __init__(self, labels):
        self._labels = labels

    def tag(self, question):
        from kbqa.spanner import SpanAnnotation
        toks = si.normalize_surface(question).split()
        return SpanAnnotation(toks, self._labels, merge_io(self._labels))


class TestPredictMention:
    def test_worked_example(self):
        tagger = _FixedTagger(["O", "O", "I", "I"])
        assert predict_mention(tagger, "who wrote Mildred Pierced?", sample_index()) == "mildred pierced"

    def test_no_inside_tokens(self):
        assert predict_mention(_FixedTagger(["O"] * 4), "who wrote mildred pierced", sample_index()) is None

    def test_output_always_indexed(self):
        idx = sample_index()
        rng = random.Random(4)
        for _ in range(50):
            labels = [rng.choice("IO") for _ in range(4)]
            out = predict_mention(_FixedTagger(labels), "who wrote mildred pierced", idx)
            assert out is None or idx.lookup(out)


def test_tokenize_alignment():
    pairs = tokenize("Who wrote Dan_Brown's 'Inferno'?")
    assert [n for _, n in pairs] == si.normalize_surface("Who wrote Dan_Brown's 'Inferno'?").split()
    assert pairs[0] == ("Who", "who")


@settings(max_examples=300)
@given(st.text())
def test_tokenize_matches_normalization(text):
    assert " ".join(n for _, n in tokenize(text)) == si.normalize_surface(text)


SMALL = dict(epochs=6, word_dim=16, char_dim=12, lstm_size=16, lr=0.01, case_dim=3)


class TestTraining:
    def test_empty_dataset(self):
        with pytest.raises(ValueError):
            train_ner([], sample_index(), NerConfig(**SMALL))

    def test_all_skipped(self):
        from kbqa.data import QuestionRecord
        recs = [QuestionRecord("who wrote it", "m.none", "p")]
        with pytest.raises(ValueError):
            train_ner(recs, sample_index(), NerConfig(**SMALL))

    def test_deterministic_and_roundtrip(self, synth_data, tmp_path):
        train = synth_data.splits["train"][:40]
        a = train_ner(train, synth_data.index, NerConfig(**SMALL))
        b = train_ner(train, synth_data.index, NerConfig(**SMALL))
        a.model.save(tmp_path / "a.ckpt")
        b.model.save(tmp_path / "b.ckpt")
        assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()
        back = NerModel.load(tmp_path / "a.ckpt")
        q = train[0].question
        np.testing.assert_array_equal(back.probabilities(q)[1], a.model.probabilities(q)[1])
        assert a.skipped == sum(1 for r in train if find_span(r.question, r.subject, synth_data.index) is None)
