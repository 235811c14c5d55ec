"""Inverted index from normalized surface forms to ``(uri, frequency)`` entries."""

from __future__ import annotations

import logging
import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass

from .kbstore import DataError

log = logging.getLogger(__name__)

NAME_PREDICATES = frozenset({"type.object.name", "common.topic.alias"})
DEFAULT_MAX_NGRAM = 5
HEADER = "surface\turi\tfrequency"


def _is_alnum(ch):
    return unicodedata.category(ch)[0] in "LN"


def normalize_surface(raw):
    """Lowercase, turn every non-alphanumeric character into a space, squeeze spaces."""
    lowered = raw.lower()
    return " ".join("".join(ch if _is_alnum(ch) else " " for ch in lowered).split())


@dataclass(frozen=True)
class SurfaceEntry:
    surface: str
    uri: str
    frequency: int

    def __post_init__(self):
        if normalize_surface(self.surface) != self.surface:
            raise ValueError(f"surface {self.surface!r} is not normalized")
        if self.frequency < 1:
            raise ValueError(f"frequency must be >= 1, got {self.frequency}")


def _sort_key(entry):
    uri, freq = entry
    return (-freq, uri)


class SurfaceFormIndex:
    """Mapping ``surface -> [(uri, frequency), ...]``, most frequent first, ties by URI."""

    def __init__(self, counts=None):
        self._entries = {}
        if counts:
            grouped = defaultdict(dict)
            for (surface, uri), freq in counts.items():
                grouped[surface][uri] = grouped[surface].get(uri, 0) + freq
            for surface, uris in grouped.items():
                self._entries[surface] = sorted(uris.items(), key=_sort_key)

    @classmethod
    def from_entries(cls, entries):
        counts = Counter()
        for e in entries:
            counts[(e.surface, e.uri)] += e.frequency
        return cls(counts)

    def counts(self):
        return {(s, u): f for s, lst in self._entries.items() for u, f in lst}

    def entries(self):
        """All entries sorted by surface, then frequency descending."""
        return [SurfaceEntry(s, u, f) for s in sorted(self._entries) for u, f in self._entries[s]]

    def lookup(self, mention):
        return list(self._entries.get(normalize_surface(mention), ()))

    def __contains__(self, mention):
        return normalize_surface(mention) in self._entries

    def __len__(self):
        return sum(len(v) for v in self._entries.values())

    @property
    def n_surfaces(self):
        return len(self._entries)

    def __eq__(self, other):
        return isinstance(other, SurfaceFormIndex) and self._entries == other._entries

    def __repr__(self):
        return f"SurfaceFormIndex({self.n_surfaces} surfaces, {len(self)} entries)"


def build_from_kb(graph, name_predicates=NAME_PREDICATES):
    """Index every name/alias label of every subject; frequency is label multiplicity."""
    counts = Counter()
    for t in graph.triples:
        if t.predicate not in name_predicates:
            continue
        surface = normalize_surface(t.object)
        if not surface:
            log.warning("label %r of %s normalizes to empty; skipped", t.object, t.subject)
            continue
        counts[(surface, t.subject)] += 1
    return SurfaceFormIndex(counts)


def merge(a, b):
    counts = Counter(a.counts())
    counts.update(b.counts())
    return SurfaceFormIndex(counts)


def extract_ngrams(sentence, m=DEFAULT_MAX_NGRAM):
    """Contiguous token n-grams of the normalized sentence, longest first then left to right."""
    if m < 1:
        raise ValueError("max n-gram size must be >= 1")
    tokens = normalize_surface(sentence).split()
    out = []
    for n in range(min(m, len(tokens)), 0, -1):
        for i in range(len(tokens) - n + 1):
            out.append(" ".join(tokens[i:i + n]))
    return out


def save(index, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEADER + "\n")
        for e in index.entries():
            fh.write(f"{e.surface}\t{e.uri}\t{e.frequency}\n")


def load(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != HEADER:
            raise DataError(f"{path}: unsupported index header {header!r}")
        entries = []
        for rowno, line in enumerate(fh, 2):
            fields = line.rstrip("\n").split("\t")
            try:
                surface, uri, freq = fields
                entries.append(SurfaceEntry(surface, uri, int(freq)))
            except ValueError as exc:
                raise DataError(f"{path}: malformed row {rowno}: {exc}") from None
    counts = Counter()
    for e in entries:
        if (e.surface, e.uri) in counts:
            raise DataError(f"{path}: duplicate entry {e.surface!r} {e.uri!r}")
        counts[(e.surface, e.uri)] = e.frequency
    return SurfaceFormIndex(counts)
