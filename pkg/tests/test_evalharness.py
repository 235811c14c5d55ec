import json

from hypothesis import given, settings
from hypothesis import strategies as st

from kbqa import evalharness as ev
from kbqa import surface_index as si
from kbqa.data import QuestionRecord
from kbqa.kbstore import KnowledgeGraph, Triple

from .stubs import FixedModel, FixedTagger, UniformModel

TOY = [
    ("alpha one", "m.a", "p.x"),
    ("beta two", "m.b", "p.y"),
    ("gamma three", "m.c", "p.x"),
    ("delta four", "m.d", "p.y"),
]


def toy_kb():
    triples = []
    for name, uri, pred in TOY:
        triples += [Triple(uri, "type.object.name", name), Triple(uri, pred, "m.o")]
    return KnowledgeGraph(triples)


def toy_records():
    return [QuestionRecord(f"tell me about {name}", uri, pred) for name, uri, pred in TOY]


def toy_tagger():
    return FixedTagger(*(name for name, _, _ in TOY))


class TestNerAccuracy:
    def test_perfect(self):
        g = toy_kb()
        r = ev.ner_accuracy(toy_tagger(), toy_records(), si.build_from_kb(g))
        assert (r.value, r.numerator, r.denominator) == (1.0, 4, 4)

    def test_never_tagged(self):
        g = toy_kb()
        assert ev.ner_accuracy(FixedTagger(), toy_records(), si.build_from_kb(g)).value == 0.0

    def test_one_corrupted_entry(self):
        counts = si.build_from_kb(toy_kb()).counts()
        # point "beta two" at the wrong entity
        del counts[("beta two", "m.b")]
        counts[("beta two", "m.zzz")] = 1
        r = ev.ner_accuracy(toy_tagger(), toy_records(), si.SurfaceFormIndex(counts))
        assert (r.numerator, r.denominator) == (3, 4)


class TestLinkingRecall:
    def test_k1_gold_on_top(self):
        idx = si.build_from_kb(toy_kb())
        rec = ev.linking_recall_at_k(toy_records(), idx, (1, 5))
        assert rec[1].value == 1.0 and rec[5].value == 1.0

    def test_saturation_equals_retrievable_fraction(self):
        counts = {("alpha one", "m.other"): 5, ("alpha one", "m.a"): 1, ("beta two", "m.b"): 2}
        idx = si.SurfaceFormIndex(counts)
        records = toy_records()
        mentions = ["alpha one", "beta two", None, "gamma three"]
        rec = ev.linking_recall_at_k(records, idx, (1, 2, 400), mentions)
        assert rec[1].numerator == 1
        assert rec[400].value == rec[2].value == 2 / 4
        assert all(r.denominator == 4 for r in rec.reports.values())

    def test_gold_mention_mode(self):
        idx = si.build_from_kb(toy_kb())
        assert ev.gold_mentions(toy_records(), idx) == [n for n, _, _ in TOY]

    @settings(max_examples=50)
    @given(st.lists(st.tuples(st.sampled_from(["m1", "m2", "m3"]),
                              st.dictionaries(st.sampled_from(["m1", "m2", "m3", "m4"]),
                                              st.integers(1, 9), max_size=4)),
                    min_size=1, max_size=15))
    def test_monotone_in_k(self, rows):
        counts = {}
        records, mentions = [], []
        for i, (gold, entries) in enumerate(rows):
            for uri, f in entries.items():
                counts[(f"s{i}", uri)] = f
            records.append(QuestionRecord(f"q s{i}", gold, "p"))
            mentions.append(f"s{i}")
        rec = ev.linking_recall_at_k(records, si.SurfaceFormIndex(counts), (1, 2, 3, 4, 5), mentions)
        vals = [rec[k].value for k in (1, 2, 3, 4, 5)]
        assert vals == sorted(vals)


def pred(gold_s, gold_p, *ranked):
    return ev.Prediction(gold_s, gold_p, tuple(ranked))


class TestPipelineMetrics:
    def test_perfect_model(self):
        g = toy_kb()
        idx = si.build_from_kb(g)
        preds = ev.predict_all(toy_tagger(), FixedModel({"p.x": 0.5, "p.y": 0.5, "type.object.name": 0.0}),
                               toy_records(), idx, g)
        # every subject carries only its gold predicate besides the name predicate
        assert ev.answer_accuracy(preds).value == 1.0
        assert ev.predicate_accuracy(preds).value == 1.0

    def test_uniform_model_matches_tie_break_oracle(self):
        g = toy_kb()
        idx = si.build_from_kb(g)
        preds = ev.predict_all(toy_tagger(), UniformModel(), toy_records(), idx, g)
        # each subject has {name predicate, gold predicate}; uniform probs tie and the
        # lexicographically smaller predicate wins
        expected = sum(1 for _, _, p in TOY if p < "type.object.name")
        assert ev.predicate_accuracy(preds).numerator == expected

    def test_golden_path(self):
        g = toy_kb()
        idx = si.build_from_kb(g)
        for name, uri, p in TOY:
            model = FixedModel({p: 1.0})
            preds = ev.predict_all(toy_tagger(), model, [QuestionRecord(f"about {name}", uri, p)], idx, g)
            assert ev.answer_accuracy(preds).value == 1.0

    def test_empty_predictions_count_wrong(self):
        preds = [pred("s", "p"), pred("s", "p", ("s", "p"))]
        acc = ev.answer_accuracy(preds)
        assert (acc.numerator, acc.denominator) == (1, 2)
        assert ev.predicate_accuracy(preds).denominator == 2


class TestTaxonomy:
    def test_categories(self):
        assert ev.classify(pred("s", "p", ("s", "q"))) == "only_wrong_predicate"
        assert ev.classify(pred("s", "p", ("t", "p"))) == "only_wrong_subject"
        assert ev.classify(pred("s", "p", ("t", "q"))) == "wrong_subject_and_predicate"
        assert ev.classify(pred("s", "p")) == "empty_prediction"
        assert ev.classify(pred("s", "p", ("s", "p"))) == "correct"

    def test_reference_totals(self):
        tax = ev.REFERENCE_BASELINES["error_taxonomy_m1"]
        assert sum(v for k, v in tax.items() if k != "total_wrong") == tax["total_wrong"] == 7206


ranked_lists = st.lists(st.tuples(st.sampled_from("abc"), st.sampled_from("pqr")), max_size=8, unique=True)
predictions = st.lists(st.builds(lambda s, p, r: ev.Prediction(s, p, tuple(r)),
                                 st.sampled_from("abc"), st.sampled_from("pqr"), ranked_lists),
                       min_size=1, max_size=30)


class TestProperties:
    @settings(max_examples=80)
    @given(predictions)
    def test_pair_recall_properties(self, preds):
        rec = ev.pair_recall_at_k(preds, (1, 2, 3, 5, 8))
        assert rec["pair"][1].numerator == ev.answer_accuracy(preds).numerator
        for name in ("pair", "subject", "predicate"):
            vals = [rec[name][k].value for k in (1, 2, 3, 5, 8)]
            assert vals == sorted(vals)
        for k in (1, 2, 3, 5, 8):
            assert rec["subject"][k].numerator >= rec["pair"][k].numerator
            assert rec["predicate"][k].numerator >= rec["pair"][k].numerator

    @settings(max_examples=80)
    @given(predictions)
    def test_taxonomy_partitions_wrong_set(self, preds):
        tax = ev.error_taxonomy(preds)
        wrong = sum(1 for p in preds if p.best != (p.gold_subject, p.gold_predicate))
        assert tax.total_wrong == wrong
        assert tax.total == len(preds)
        assert tax.correct == ev.answer_accuracy(preds).numerator


class TestReports:
    def test_config_hash_ignores_locations(self):
        a = {"seed": 1, "m2": {"output_dim": 16, "embedding_path": "/x"}, "out": "a"}
        b = {"seed": 1, "m2": {"output_dim": 16, "embedding_path": "/y"}, "out": "b"}
        c = {"seed": 1, "m2": {"output_dim": 8, "embedding_path": "/x"}, "out": "a"}
        assert ev.config_hash(a) == ev.config_hash(b) != ev.config_hash(c)

    def test_report_and_tables(self, tmp_path):
        preds = [pred("s", "p", ("s", "p")), pred("s", "p", ("s", "q"), ("s", "p")), pred("s", "p")]
        metrics = ev.model_metrics(preds, (1, 2))
        report = ev.build_report(ner=ev.EvalReport("ner_accuracy", 2, 3), models={"m1": metrics},
                                 linking={"gold_mention": ev.RecallAtK("x", {1: ev.EvalReport("l", 1, 3)})},
                                 config={"seed": 0}, fingerprint="abc", n_test=3)
        path = tmp_path / "r.json"
        ev.write_report(report, path)
        loaded = json.loads(path.read_text())
        assert loaded["models"]["m1"]["answer_accuracy"]["value"] == 1 / 3
        assert loaded["models"]["m1"]["pair_recall"]["pair"]["2"]["numerator"] == 2
        assert loaded["reference_baselines"]["predicate_accuracy"]["m4"] == 0.79
        names = {p.stem for p in ev.write_tables(report, tmp_path)}
        assert names == {"ner_accuracy", "linking_recall", "predicate_accuracy", "answer_accuracy",
                         "pair_recall_m1", "error_taxonomy_m1"}
        tax = (tmp_path / "error_taxonomy_m1.tsv").read_text().splitlines()
        assert tax[1] == "only_wrong_predicate\t1\t0.5000"
        assert tax[-1] == "total\t2\t1.0000"
