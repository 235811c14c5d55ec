from dataclasses import dataclass

import pytest

from kbqa import surface_index as si
from kbqa.kbstore import KnowledgeGraph
from kbqa.synth import SynthConfig, generate


@dataclass
class SynthData:
    graph: KnowledgeGraph
    index: si.SurfaceFormIndex
    splits: dict
    manifest: dict


@pytest.fixture(scope="session")
def synth_data():
    triples, splits, manifest = generate(SynthConfig(seed=0))
    graph = KnowledgeGraph(triples)
    return SynthData(graph, si.build_from_kb(graph), splits, manifest)


@dataclass
class TinyModels:
    ner: object
    table: object
    m1: object
    m2: object
    m3: object
    m4: object

    def predicate_models(self):
        return {"m1": self.m1, "m2": self.m2, "m3": self.m3, "m4": self.m4}


@pytest.fixture(scope="session")
def tiny_models(synth_data):
    """All models trained briefly on the fixture's train split."""
    from kbqa import predicate_models as pm
    from kbqa.graphembed import relation_predicates, train_embeddings
    from kbqa.spanner import train_ner

    from .desk import TINY

    g, idx, train = synth_data.graph, synth_data.index, synth_data.splits["train"]
    ner = train_ner(train, idx, TINY["ner"]).model
    table = train_embeddings(g, TINY["embed"])
    m1, _ = pm.m1_train(train, idx, TINY["m1"])
    m2, _ = pm.m2_train(train, idx, table, relation_predicates(g), TINY["m2"])
    m3, _ = pm.m3_train(train, idx, g, TINY["m3"])
    m4, _ = pm.m4_train(train, idx, TINY["m4"])
    return TinyModels(ner, table, m1, m2, m3, m4)


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)
