import numpy as np
import pytest

from kbqa.graphembed import (
    EmbedConfig,
    EmbeddingTable,
    NegativeSamplingTrainer,
    RoleToken,
    generate_samples,
    kb_samples,
    predicate_embedding,
    train_embeddings,
)
from kbqa.kbstore import KnowledgeGraph, Triple


def test_worked_example_samples():
    a, b = generate_samples(Triple("Inferno", "hasAuthor", "Dan_Brown"))
    assert a.fasttext_line() == "__label__Inferno#s hasAuthor#s Dan_Brown#o"
    assert b.fasttext_line() == "__label__Dan_Brown#o hasAuthor#o Inferno#s"


def test_reflexive_roles_distinct():
    a, b = generate_samples(Triple("x", "p", "x"))
    assert a.target != b.target
    assert str(a.target) == "x#s" and str(b.target) == "x#o"


def test_two_samples_per_triple():
    kg = KnowledgeGraph([Triple(f"e{i}", "p", f"e{i + 1}") for i in range(7)])
    samples = kb_samples(kg)
    assert len(samples) == 14
    assert all(len(s.inputs) == 2 for s in samples)
    assert kb_samples(kg) == samples


def test_role_token_parse():
    assert RoleToken.parse("m.01#o") == RoleToken("m.01", "o")
    with pytest.raises(ValueError):
        RoleToken("x", "z")


def toy_graph():
    triples = []
    for i in range(6):
        triples.append(Triple(f"A{i}", "p", f"B{i % 3}"))
        triples.append(Triple(f"C{i}", "q", f"D{i % 3}"))
    return KnowledgeGraph(triples)


SMALL = EmbedConfig(dim=16, epochs=60, negatives=5, lr=0.1, seed=3)


class TestTraining:
    def test_predicate_separates_clusters(self):
        table, trainer = train_embeddings(toy_graph(), SMALL, return_trainer=True)
        ps = trainer.v[trainer.inputs.index["p#s"]]
        qs = trainer.v[trainer.inputs.index["q#s"]]
        for i in range(6):
            u_a = trainer.u[trainer.labels.index[f"A{i}#s"]]
            assert u_a @ ps > u_a @ qs
            u_c = trainer.u[trainer.labels.index[f"C{i}#s"]]
            assert u_c @ qs > u_c @ ps
        np.testing.assert_array_equal(table["p#s"], ps)

    def test_every_predicate_has_both_roles(self):
        table = train_embeddings(toy_graph(), SMALL)
        for p in ("p", "q"):
            assert table[f"{p}#s"].shape == (16,)
            assert f"{p}#o" in table

    def test_zero_epochs_is_init(self):
        cfg = EmbedConfig(dim=8, epochs=0, seed=5)
        table = train_embeddings(toy_graph(), cfg)
        fresh = NegativeSamplingTrainer(kb_samples(toy_graph()), cfg).table()
        assert table == fresh

    def test_deterministic(self):
        assert train_embeddings(toy_graph(), SMALL) == train_embeddings(toy_graph(), SMALL)

    def test_bad_config(self):
        with pytest.raises(ValueError):
            train_embeddings(toy_graph(), EmbedConfig(dim=0))
        with pytest.raises(ValueError):
            train_embeddings(toy_graph(), EmbedConfig(epochs=-1))

    def test_loss_decreases_on_fixed_sample(self):
        cfg = EmbedConfig(dim=16, epochs=1, seed=1, lr=0.1)
        trainer = NegativeSamplingTrainer(kb_samples(toy_graph()), cfg)
        target, inputs = trainer.data[0]
        negs = [j for j in range(len(trainer.labels.items)) if j != target][:5]
        before = trainer.sample_loss(target, inputs, negs)
        trainer.train()
        assert trainer.sample_loss(target, inputs, negs) < before


class TestLookup:
    def test_predicate_embedding(self):
        table = train_embeddings(toy_graph(), SMALL)
        v = predicate_embedding(table, "p")
        assert v.shape == (16,)
        assert float(v @ v / (np.linalg.norm(v) ** 2)) == pytest.approx(1.0, abs=1e-12)

    def test_unknown_lists_nearest(self):
        table = train_embeddings(toy_graph(), SMALL)
        with pytest.raises(KeyError, match="nearest known"):
            predicate_embedding(table, "pp")

    def test_file_roundtrip(self, tmp_path):
        table = train_embeddings(toy_graph(), SMALL)
        table.save(tmp_path / "e.txt")
        first = (tmp_path / "e.txt").read_text().splitlines()[0]
        assert first == f"{len(table)} 16"
        assert EmbeddingTable.load(tmp_path / "e.txt") == table
