"""Dataset records, tokenization and pre-trained word vectors."""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass

import numpy as np

from .kbstore import DataError
from .surface_index import normalize_surface

log = logging.getLogger(__name__)

_PIECE = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class QuestionRecord:
    question: str
    subject: str
    predicate: str
    object: str | None = None

    def __post_init__(self):
        if not self.question.strip():
            raise ValueError("question must be non-empty")


def read_dataset(path):
    """Read ``subject \\t predicate \\t object \\t question`` lines."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 4 or not fields[3].strip():
                raise DataError(f"{path}:{lineno}: expected 4 tab-separated fields")
            s, p, o, q = fields
            records.append(QuestionRecord(q, s, p, o or None))
    return records


def write_dataset(records, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(f"{r.subject}\t{r.predicate}\t{r.object or ''}\t{r.question}\n")


def fingerprint(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def tokenize(text):
    """Split text into ``(raw, normalized)`` token pairs.

    Joining the normalized tokens with spaces reproduces
    ``normalize_surface(text)``; the raw tokens keep the original casing.
    """
    pairs = []
    for raw in _PIECE.findall(text):
        parts = normalize_surface(raw).split()
        if len(parts) == 1:
            pairs.append((raw, parts[0]))
        else:
            pairs.extend((p, p) for p in parts)
    if " ".join(n for _, n in pairs) != normalize_surface(text):
        # unusual casing rules (e.g. lowercasing that emits combining marks)
        return [(n, n) for n in normalize_surface(text).split()]
    return pairs


def case_feature(raw):
    """0 = no uppercase letters, 1 = all letters uppercase, 2 = mixed."""
    letters = [c for c in raw if c.isalpha()]
    if not any(c.isupper() for c in letters):
        return 0
    if all(c.isupper() for c in letters):
        return 1
    return 2


def load_word_vectors(path, dim=None):
    """Read a text embedding file: ``token f1 ... fd`` per line.

    A leading ``count dim`` header line is accepted and skipped.
    """
    vectors = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ")
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            if len(parts) < 2:
                continue
            try:
                vec = np.array([float(x) for x in parts[1:]])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric vector component") from None
            if dim is None:
                dim = len(vec)
            if len(vec) != dim:
                raise DataError(f"{path}:{lineno}: expected {dim} components, got {len(vec)}")
            vectors[parts[0]] = vec
    log.info("loaded %d word vectors of dim %s from %s", len(vectors), dim, path)
    return vectors
