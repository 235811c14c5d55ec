"""In-memory triple store with Pred(s) and object lookups."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass

log = logging.getLogger(__name__)

MAX_MALFORMED_FRACTION = 0.10


class DataError(ValueError):
    """Input data could not be parsed."""


@dataclass(frozen=True, order=True)
class Triple:
    subject: str
    predicate: str
    object: str

    def __post_init__(self):
        if not self.subject or not self.predicate:
            raise ValueError("triple subject and predicate must be non-empty")


class KnowledgeGraph:
    def __init__(self, triples=()):
        self._objects = defaultdict(set)
        self._preds = defaultdict(set)
        self._triples = set()
        for t in triples:
            self.add(t)

    def add(self, triple):
        if triple in self._triples:
            return
        self._triples.add(triple)
        self._preds[triple.subject].add(triple.predicate)
        self._objects[(triple.subject, triple.predicate)].add(triple.object)

    @property
    def triples(self):
        """Triples in sorted order, independent of load order."""
        return sorted(self._triples)

    def __len__(self):
        return len(self._triples)

    def __eq__(self, other):
        return isinstance(other, KnowledgeGraph) and self._triples == other._triples

    def predicates_of(self, subject):
        return frozenset(self._preds.get(subject, ()))

    def objects_of(self, subject, predicate):
        return frozenset(self._objects.get((subject, predicate), ()))

    @property
    def subjects(self):
        return sorted(self._preds)

    @property
    def predicates(self):
        """Sorted predicate vocabulary: the union of Pred(s) over all subjects."""
        out = set()
        for ps in self._preds.values():
            out |= ps
        return sorted(out)

    def with_predicates(self, predicates):
        keep = set(predicates)
        return [t for t in self.triples if t.predicate in keep]


def load_triples(lines, source="<stream>"):
    """Parse tab-separated ``subject predicate object`` lines into a graph.

    Malformed lines are skipped with a warning; more than 10% malformed is fatal.
    Extra columns beyond the third are ignored.
    """
    kg = KnowledgeGraph()
    n_lines = 0
    bad = 0
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        n_lines += 1
        fields = line.split("\t")
        if len(fields) < 3 or not fields[0] or not fields[1]:
            bad += 1
            log.warning("%s:%d: malformed triple line skipped", source, lineno)
            continue
        kg.add(Triple(fields[0], fields[1], fields[2]))
    if n_lines and bad / n_lines > MAX_MALFORMED_FRACTION:
        raise DataError(f"{source}: {bad} of {n_lines} lines malformed (limit 10%)")
    log.info("%s: %d lines, %d unique triples, %d skipped", source, n_lines, len(kg), bad)
    return kg


def load_triple_file(path):
    with open(path, encoding="utf-8") as fh:
        return load_triples(fh, source=str(path))


def write_triples(triples, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in triples:
            fh.write(f"{t.subject}\t{t.predicate}\t{t.object}\n")
