import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kbqa import predicate_models as pm
from kbqa.graphembed import EmbeddingTable, relation_predicates
from kbqa.predicate_models.ngram_classifier import fnv1a
from kbqa.surface_index import normalize_surface


class TestMaskEntity:
    def test_worked_example(self):
        assert pm.mask_entity("who wrote mildred pierced", "mildred pierced") == ("who wrote e", True)

    def test_whole_question(self):
        assert pm.mask_entity("mildred pierced", "mildred pierced") == ("e", True)

    def test_absent_mention_unchanged(self):
        assert pm.mask_entity("who wrote it", "mildred pierced") == ("who wrote it", False)

    def test_empty_mention(self):
        assert pm.mask_entity("who wrote it", "") == ("who wrote it", False)

    @given(st.lists(st.sampled_from("ab cd ef gh ij".split()), min_size=1, max_size=8), st.data())
    def test_tokens_outside_span_preserved(self, words, data):
        i = data.draw(st.integers(0, len(words) - 1))
        j = data.draw(st.integers(i + 1, len(words)))
        text, found = pm.mask_entity(" ".join(words), " ".join(words[i:j]))
        assert found
        out = text.split()
        # the first occurrence is masked, which may be earlier than i
        assert len(out) == len(words) - (j - i) + 1
        k = out.index("e") if "e" in out else None
        assert k is not None and k <= i
        assert out[:k] == words[:k]
        assert out[k + 1:] == words[k + j - i:]


class TestPredicateUri:
    @pytest.mark.parametrize("uri, toks", [
        ("book.written_work.author", ["book", "written", "work", "author"]),
        ("p", ["p"]),
        ("a..b__c", ["a", "b", "c"]),
        ("People.Person.Nationality", ["people", "person", "nationality"]),
    ])
    def test_examples(self, uri, toks):
        assert pm.tokenize_predicate_uri(uri) == toks


class TestVocabularyAndDistribution:
    def test_vocabulary_dense_no_duplicates(self):
        v = pm.PredicateVocabulary(["b", "a", "b", "c"])
        assert v.items == ["b", "a", "c"]
        assert sorted(v.index.values()) == list(range(3))

    def test_distribution_helpers(self):
        d = pm.PredicateDistribution.from_scores(["a", "b"], [0.25, 0.75])
        assert d.is_valid()
        assert d.top(1) == [("b", 0.75)]
        assert d.prob("zzz") == 0.0
        assert not pm.PredicateDistribution.from_scores(["a"], [0.5]).is_valid()
        assert not pm.PredicateDistribution().is_valid()


class TestModel2Mapping:
    def test_identity_gets_maximum(self):
        m = np.eye(4)
        d = pm.cosine_distribution(m[2].copy(), m, ["a", "b", "c", "d"])
        assert d.top(1)[0][0] == "c"
        # cos = 1 -> 1, cos = 0 -> 0.5, then L1-normalized
        assert d["c"] == pytest.approx(1.0 / 2.5)
        assert d["a"] == pytest.approx(0.5 / 2.5)

    def test_opposite_vector_gets_zero(self):
        m = np.array([[1.0, 0.0], [-1.0, 0.0]])
        d = pm.cosine_distribution(np.array([1.0, 0.0]), m, ["x", "y"])
        assert d == {"x": 1.0, "y": 0.0}

    def test_missing_embedding_is_an_error(self, synth_data):
        table = EmbeddingTable(4, {"foo#s": np.ones(4)})
        with pytest.raises(KeyError):
            pm.ProjectionModel(pm.M2Config(output_dim=4), None, table, ["foo", "bar"])

    def test_dim_mismatch_is_an_error(self):
        table = EmbeddingTable(4, {"foo#s": np.ones(4)})
        with pytest.raises(ValueError, match="dim"):
            pm.ProjectionModel(pm.M2Config(output_dim=8), None, table, ["foo"])

    def test_support_exceeds_training_vocabulary(self, synth_data, tiny_models):
        train_preds = {r.predicate for r in synth_data.splits["train"]}
        support = set(tiny_models.m2.predict("who directed e"))
        assert support == set(relation_predicates(synth_data.graph))
        assert train_preds < support
        assert set(synth_data.manifest["kb_only_predicates"]) <= support - train_preds


class TestModel3:
    def test_negative_sampling(self):
        vocab = pm.PredicateVocabulary([f"p{i}" for i in range(20)])
        rng = np.random.default_rng(0)
        negs = pm.sample_negatives("p0", ["p0", "p1", "p2"], vocab, 10, rng)
        assert len(negs) == 10 and len(set(negs)) == 10 and "p0" not in negs
        assert {"p1", "p2"} <= set(negs)

    def test_negative_sampling_small_vocab(self):
        vocab = pm.PredicateVocabulary(["a", "b", "c"])
        negs = pm.sample_negatives("a", [], vocab, 10, np.random.default_rng(0))
        assert sorted(negs) == ["b", "c"]

    def test_hard_negatives_capped_at_half(self):
        vocab = pm.PredicateVocabulary([f"p{i}" for i in range(30)])
        subj = [f"p{i}" for i in range(12)]
        negs = pm.sample_negatives("p0", subj, vocab, 10, np.random.default_rng(1))
        assert len(negs) == 10
        assert len(set(negs[:5]) & set(subj)) == 5

    def test_scores_in_unit_interval(self, synth_data, tiny_models):
        m3 = tiny_models.m3
        for p in synth_data.graph.predicates:
            assert 0.0 <= pm.m3_score(m3, "who wrote e", p) <= 1.0

    def test_normalized_over_candidates(self, tiny_models):
        cands = ["film.film.genre", "book.book.genre", "film.film.genre", "unseen.predicate.x"]
        d = tiny_models.m3.predicate_probabilities("what genre is e", cands)
        assert set(d) == set(cands)
        assert d.is_valid()

    def test_empty_candidates(self, tiny_models):
        assert tiny_models.m3.predicate_probabilities("what genre is e", []) == {}


class TestModel4Features:
    def test_fnv1a_reference_vectors(self):
        assert fnv1a("") == 0x811C9DC5
        assert fnv1a("a") == 0xE40C292C
        assert fnv1a("foobar") == 0xBF9CF968

    @staticmethod
    def oracle(text):
        words = normalize_surface(text).split()
        feats = {("w", w) for w in words}
        feats |= {("n", a + " " + b) for a, b in zip(words, words[1:])}
        for w in words:
            s = "<" + w + ">"
            feats |= {("c", s[i:i + 5]) for i in range(len(s) - 4)}
        return feats

    def test_extraction_matches_oracle(self):
        for text in ["who wrote mildred pierced", "Who is E?", "ab", ""]:
            got = {tuple(f.split(":", 1)) for f in pm.extract_features(text)}
            assert got == self.oracle(text)

    def test_oov_word_still_shares_char_ngrams(self):
        a = self.oracle("who directed heldracal")
        b = self.oracle("who directed heldracel")
        jac = len(a & b) / len(a | b)
        assert jac > 0
        assert ("c", "<held") in a & b
        fa, fb = set(pm.extract_features("who directed heldracal")), set(pm.extract_features("who directed heldracel"))
        assert len(fa & fb) / len(fa | fb) == pytest.approx(jac)

    def test_unknown_features_give_uniform(self, tiny_models):
        m4 = tiny_models.m4
        d = pm.m4_predict(m4, "")
        assert d.is_valid()
        assert len(set(np.round(list(d.values()), 12))) == 1


class TestDistributionValidity:
    @settings(max_examples=25, deadline=None)
    @given(st.text(alphabet="abcdefghij xyzé?'", max_size=30))
    def test_all_models_valid(self, tiny_models, text):
        models = tiny_models
        assert pm.m1_predict(models.m1, text).is_valid()
        assert pm.m2_predict(models.m2, text).is_valid()
        assert pm.m4_predict(models.m4, text).is_valid()
        assert models.m3.predicate_probabilities(text, models.m3.predicates.items).is_valid()

    def test_supports(self, synth_data, tiny_models):
        train_preds = {r.predicate for r in synth_data.splits["train"]}
        assert set(pm.m1_predict(tiny_models.m1, "who directed e")) == train_preds
        assert set(pm.m4_predict(tiny_models.m4, "who directed e")) == train_preds

    def test_unseen_words_full_distribution(self, tiny_models):
        d = pm.m1_predict(tiny_models.m1, "zzqx qwv e")
        assert len(d) == len(tiny_models.m1.predicates) and d.is_valid()


@pytest.mark.parametrize("kind", ["m1", "m2", "m3", "m4"])
def test_save_load_roundtrip(tmp_path, tiny_models, kind):
    model = tiny_models.predicate_models()[kind]
    path = tmp_path / f"{kind}.ckpt"
    model.save(path)
    if kind == "m2":
        loaded = pm.MODELS[kind].load(path, table=tiny_models.table)
    else:
        loaded = pm.MODELS[kind].load(path)
    cands = sorted(tiny_models.m1.predicates.items)
    for q in ["who directed e", "what genre is e", "zz e qq"]:
        assert loaded.predicate_probabilities(q, cands) == model.predicate_probabilities(q, cands)


def test_wrong_kind_rejected(tmp_path, tiny_models):
    path = tmp_path / "m1.ckpt"
    tiny_models.m1.save(path)
    with pytest.raises(ValueError):
        pm.NgramClassifier.load(path)


@pytest.mark.parametrize("kind", ["m1", "m2", "m3", "m4"])
def test_determinism(synth_data, kind):
    from .desk import TINY

    g, idx = synth_data.graph, synth_data.index
    train = synth_data.splits["train"][:40]
    table = EmbeddingTable(8, {f"{p}#s": np.random.default_rng(i).normal(size=8)
                               for i, p in enumerate(relation_predicates(g))})

    def run():
        if kind == "m1":
            return pm.m1_train(train, idx, TINY["m1"])
        if kind == "m2":
            return pm.m2_train(train, idx, table, relation_predicates(g), TINY["m2"])
        if kind == "m3":
            return pm.m3_train(train, idx, g, TINY["m3"])
        return pm.m4_train(train, idx, TINY["m4"])

    (a, log_a), (b, log_b) = run(), run()
    assert log_a == log_b
    cands = sorted(g.predicates)
    for q in ["who directed e", "what genre is e"]:
        assert a.predicate_probabilities(q, cands) == b.predicate_probabilities(q, cands)


def test_empty_training_sets_rejected(synth_data):
    with pytest.raises(ValueError):
        pm.train_m1([])
    with pytest.raises(ValueError):
        pm.train_m4([])
    with pytest.raises(ValueError):
        pm.train_m3([], synth_data.graph)
