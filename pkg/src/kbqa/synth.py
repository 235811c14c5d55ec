"""Desk-scale synthetic knowledge base and templated simple-question splits.

Entities get pseudo-word names built from one syllable pool; questions whose
gold subject must stay unreachable use names from a disjoint pool, so no
n-gram of such a question can retrieve the gold subject from the index.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path

from .data import QuestionRecord, write_dataset
from .kbstore import Triple, write_triples

NAME = "type.object.name"
ALIAS = "common.topic.alias"

# predicate, subject type, object type, question templates
QUESTION_PREDICATES = [
    ("book.written_work.author", "book", "person",
     ["who wrote {}", "who is the author of {}", "which writer created {}"]),
    ("film.film.directed_by", "film", "person",
     ["who directed {}", "who was the director of {}", "{} was directed by whom"]),
    ("people.person.place_of_birth", "person", "location",
     ["where was {} born", "what is the birthplace of {}", "in which place was {} born"]),
    ("people.person.nationality", "person", "country",
     ["what nationality is {}", "which country is {} a citizen of", "what is the nationality of {}"]),
    ("location.location.containedby", "location", "country",
     ["where is {} located", "which country contains {}", "{} is part of which country"]),
    ("music.release_track.release", "track", "album",
     ["which release features {}", "on what release does {} appear", "{} appears on which album"]),
    ("music.release_track.recording", "track", "recording",
     ["what recording is {} a track of", "which recording corresponds to {}", "name the recording of {}"]),
    ("film.film.genre", "film", "genre",
     ["what genre is the film {}", "what kind of movie is {}", "which film genre does {} belong to"]),
    ("book.book.genre", "book", "genre",
     ["what is the genre of the book {}", "what type of book is {}", "which literary genre is {}"]),
    ("people.person.profession", "person", "profession",
     ["what does {} do for a living", "what is the profession of {}", "what job does {} have"]),
]

KB_ONLY_PREDICATES = [
    ("people.person.gender", "person", "gender"),
    ("film.film.country", "film", "country"),
    ("book.written_work.language", "book", "language"),
    ("location.location.time_zone", "location", "timezone"),
]

TYPE_SHARES = {
    "person": 22, "book": 14, "film": 14, "location": 12, "country": 6, "track": 10,
    "album": 5, "recording": 5, "genre": 4, "profession": 3, "gender": 2, "language": 2,
    "timezone": 1,
}

SYLLABLES = ["ka", "lo", "mi", "ren", "dus", "vor", "tha", "bel", "qui", "zan", "fe", "gor",
             "nix", "pra", "sul", "tem", "vi", "wex", "yor", "bri", "cal", "dra", "hel", "jun"]
FRESH_SYLLABLES = ["oxu", "ipa", "ume", "eko", "axi", "oru", "ubo", "ija"]


@dataclass
class SynthConfig:
    seed: int = 0
    entities: int = 100
    predicates: int = 10
    extra_predicates: int = 2
    train: int = 200
    valid: int = 50
    test: int = 100
    unreachable: float = 0.1
    ambiguity: float = 0.15


def _word(rng, pool, lo=2, hi=3):
    return "".join(rng.choice(pool) for _ in range(rng.randint(lo, hi)))


def _fresh_name(rng, used):
    while True:
        name = " ".join(_word(rng, FRESH_SYLLABLES).capitalize() for _ in range(rng.randint(1, 2)))
        if name not in used:
            return name


def generate(config):
    """Return ``(triples, splits, manifest)`` for the given configuration."""
    if min(config.entities, config.predicates) <= 0 or config.train <= 0:
        raise ValueError("synthetic sizes must be positive")
    if config.predicates > len(QUESTION_PREDICATES):
        raise ValueError(f"at most {len(QUESTION_PREDICATES)} question predicates available")
    rng = random.Random(config.seed)
    qpreds = QUESTION_PREDICATES[:config.predicates]
    extras = KB_ONLY_PREDICATES[:config.extra_predicates]
    needed = {t for _, s, o, *_ in qpreds + extras for t in (s, o)}

    total_share = sum(v for k, v in TYPE_SHARES.items() if k in needed)
    entities = {}
    counter = 0
    for etype in sorted(needed):
        n = max(1, round(config.entities * TYPE_SHARES[etype] / total_share))
        entities[etype] = [f"m.{etype[:2]}{counter + i:04d}" for i in range(n)]
        counter += n

    names = {}
    used_names = set()
    all_ids = [e for t in sorted(entities) for e in entities[t]]
    for e in all_ids:
        if names and rng.random() < config.ambiguity:
            names[e] = rng.choice(sorted(used_names))
            continue
        while True:
            name = " ".join(_word(rng, SYLLABLES).capitalize() for _ in range(rng.randint(1, 2)))
            if name not in used_names:
                break
        names[e] = name
        used_names.add(name)

    triples = set()
    for e in all_ids:
        triples.add(Triple(e, NAME, names[e]))
        if rng.random() < 0.5:
            triples.add(Triple(e, ALIAS, names[e].upper() if rng.random() < 0.5 else names[e] + "!"))
    facts = {}
    for pred, stype, otype, *_ in qpreds + extras:
        for s in entities[stype]:
            objs = [o for o in entities[otype] if o != s]
            if not objs:
                continue
            o = rng.choice(objs)
            triples.add(Triple(s, pred, o))
            facts.setdefault(pred, []).append((s, o))

    splits = {}
    manifest = {"config": asdict(config), "question_predicates": [p for p, *_ in qpreds],
                "kb_only_predicates": [p for p, *_ in extras], "unreachable": {}}
    for split in ("train", "valid", "test"):
        n = getattr(config, split)
        n_bad = round(n * config.unreachable)
        bad = set(rng.sample(range(n), n_bad)) if n_bad else set()
        records = []
        for i in range(n):
            pred, _, _, templates = qpreds[rng.randrange(len(qpreds))]
            s, o = rng.choice(facts[pred])
            surface = _fresh_name(rng, used_names) if i in bad else names[s]
            records.append(QuestionRecord(rng.choice(templates).format(surface), s, pred, o))
        splits[split] = records
        manifest["unreachable"][split] = sorted(bad)
    return sorted(triples), splits, manifest


def write(config, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    triples, splits, manifest = generate(config)
    write_triples(triples, out / "kb.tsv")
    for split, records in splits.items():
        write_dataset(records, out / f"{split}.tsv")
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return out
