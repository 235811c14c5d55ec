"""Component-wise evaluation: NER, linking, predicate, answer and pair metrics.

Every metric's denominator is the full test-set size; empty predictions and
questions without a usable mention count as wrong.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

from .ranker import RankerConfig, answer_question
from .spanner import find_span, predict_mention
from .surface_index import DEFAULT_MAX_NGRAM

LINKING_KS = (1, 2, 5, 10, 25, 100, 400)
PAIR_KS = (1, 2, 3, 4, 5, 10, 20)
MODEL_NAMES = {"m1": "BiLSTM-Softmax", "m2": "BiLSTM-KBEmbedding", "m3": "BiLSTM-Binary",
               "m4": "FastText"}

REFERENCE_BASELINES = {
    "ner_accuracy": 0.82,
    "linking_recall": {1: 0.68, 2: 0.74, 5: 0.79, 10: 0.81, 25: 0.82, 100: 0.82, 400: 0.82},
    "predicate_accuracy": {"m1": 0.74, "m2": 0.68, "m3": 0.73, "m4": 0.79},
    "answer_accuracy": {"m1": 0.67, "m2": 0.61, "m3": 0.66, "m4": 0.68},
    "pair_recall_m1": {
        1: (0.67, 0.74, 0.74), 2: (0.74, 0.78, 0.80), 3: (0.77, 0.80, 0.81),
        4: (0.78, 0.80, 0.82), 5: (0.79, 0.81, 0.83), 10: (0.80, 0.81, 0.83),
        20: (0.80, 0.82, 0.84),
    },
    "error_taxonomy_m1": {"only_wrong_predicate": 1642, "only_wrong_subject": 1591,
                          "wrong_subject_and_predicate": 1911, "empty_prediction": 2062,
                          "total_wrong": 7206},
    "test_instances": 21687,
}


@dataclass
class EvalReport:
    metric: str
    numerator: int
    denominator: int

    @property
    def value(self):
        return self.numerator / self.denominator if self.denominator else 0.0

    def to_dict(self):
        return {"metric": self.metric, "value": self.value,
                "numerator": self.numerator, "denominator": self.denominator}


@dataclass
class ErrorBreakdown:
    only_wrong_predicate: int = 0
    only_wrong_subject: int = 0
    wrong_subject_and_predicate: int = 0
    empty_prediction: int = 0
    correct: int = 0

    @property
    def total_wrong(self):
        return (self.only_wrong_predicate + self.only_wrong_subject
                + self.wrong_subject_and_predicate + self.empty_prediction)

    @property
    def total(self):
        return self.total_wrong + self.correct

    def to_dict(self):
        d = asdict(self)
        d.update(total_wrong=self.total_wrong, total=self.total)
        return d


@dataclass(frozen=True)
class Prediction:
    """Gold pair and the ranked ``(subject, predicate)`` list for one question."""

    gold_subject: str
    gold_predicate: str
    ranked: tuple = ()
    mention: str | None = None

    @property
    def best(self):
        return self.ranked[0] if self.ranked else None


@dataclass
class RecallAtK:
    metric: str
    reports: dict = field(default_factory=dict)

    def __getitem__(self, k):
        return self.reports[k]

    def values(self):
        return {k: r.value for k, r in self.reports.items()}

    def to_dict(self):
        return {str(k): r.to_dict() for k, r in self.reports.items()}


def ner_accuracy(model, records, index, m=DEFAULT_MAX_NGRAM):
    """Correct when looking up the predicted mention retrieves the gold subject."""
    hits = 0
    for r in records:
        mention = predict_mention(model, r.question, index, m)
        if mention is not None and any(u == r.subject for u, _ in index.lookup(mention)):
            hits += 1
    return EvalReport("ner_accuracy", hits, len(records))


def gold_mentions(records, index, m=DEFAULT_MAX_NGRAM):
    return [find_span(r.question, r.subject, index, m) for r in records]


def predicted_mentions(model, records, index, m=DEFAULT_MAX_NGRAM):
    return [predict_mention(model, r.question, index, m) for r in records]


def linking_recall_at_k(records, index, ks=LINKING_KS, mentions=None):
    """Gold subject among the top-K lookup results of each question's mention."""
    mentions = mentions if mentions is not None else gold_mentions(records, index)
    if len(mentions) != len(records):
        raise ValueError("need one mention (or None) per record")
    ranks = []
    for r, mention in zip(records, mentions):
        uris = [u for u, _ in index.lookup(mention)] if mention else []
        ranks.append(uris.index(r.subject) + 1 if r.subject in uris else None)
    out = RecallAtK("linking_recall")
    for k in sorted(ks):
        hits = sum(1 for rank in ranks if rank is not None and rank <= k)
        out.reports[k] = EvalReport(f"linking_recall@{k}", hits, len(records))
    return out


def predict_all(ner_model, predicate_model, records, index, graph, config=None, keep=max(PAIR_KS)):
    config = config or RankerConfig()
    preds = []
    for r in records:
        ans = answer_question(r.question, ner_model, predicate_model, index, graph, config)
        ranked = tuple((p.subject, p.predicate) for p in ans.pairs[:keep])
        preds.append(Prediction(r.subject, r.predicate, ranked, ans.mention))
    return preds


def predicate_accuracy(predictions):
    hits = sum(1 for p in predictions if p.best and p.best[1] == p.gold_predicate)
    return EvalReport("predicate_accuracy", hits, len(predictions))


def answer_accuracy(predictions):
    hits = sum(1 for p in predictions if p.best == (p.gold_subject, p.gold_predicate))
    return EvalReport("answer_accuracy", hits, len(predictions))


def pair_recall_at_k(predictions, ks=PAIR_KS):
    """Pair, subject and predicate Recall@K over the ranked candidate lists."""
    out = {name: RecallAtK(f"{name}_recall") for name in ("pair", "subject", "predicate")}
    n = len(predictions)
    for k in sorted(ks):
        pair = subj = pred = 0
        for p in predictions:
            top = p.ranked[:k]
            pair += (p.gold_subject, p.gold_predicate) in top
            subj += any(s == p.gold_subject for s, _ in top)
            pred += any(q == p.gold_predicate for _, q in top)
        out["pair"].reports[k] = EvalReport(f"pair_recall@{k}", pair, n)
        out["subject"].reports[k] = EvalReport(f"subject_recall@{k}", subj, n)
        out["predicate"].reports[k] = EvalReport(f"predicate_recall@{k}", pred, n)
    return out


def classify(prediction):
    """One of ``correct``, ``empty_prediction``, ``only_wrong_predicate``,
    ``only_wrong_subject`` or ``wrong_subject_and_predicate``."""
    if prediction.best is None:
        return "empty_prediction"
    s_ok = prediction.best[0] == prediction.gold_subject
    p_ok = prediction.best[1] == prediction.gold_predicate
    if s_ok and p_ok:
        return "correct"
    if s_ok:
        return "only_wrong_predicate"
    if p_ok:
        return "only_wrong_subject"
    return "wrong_subject_and_predicate"


def error_taxonomy(predictions):
    out = ErrorBreakdown()
    for p in predictions:
        name = classify(p)
        setattr(out, name, getattr(out, name) + 1)
    return out


_LOCATION_KEYS = {"out", "output", "path", "paths", "dir", "file", "checkpoint"}


def config_hash(config):
    """SHA-256 of the canonical JSON config, ignoring filesystem locations."""
    def is_location(key):
        key = key.lower()
        return key in _LOCATION_KEYS or key.endswith(("_path", "_dir", "_file"))

    def strip(obj):
        if isinstance(obj, dict):
            return {k: strip(v) for k, v in obj.items() if not is_location(k)}
        if isinstance(obj, (list, tuple)):
            return [strip(v) for v in obj]
        return obj

    blob = json.dumps(strip(config), sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def model_metrics(predictions, ks=PAIR_KS):
    recall = pair_recall_at_k(predictions, ks)
    return {
        "predicate_accuracy": predicate_accuracy(predictions).to_dict(),
        "answer_accuracy": answer_accuracy(predictions).to_dict(),
        "pair_recall": {name: r.to_dict() for name, r in recall.items()},
        "error_taxonomy": error_taxonomy(predictions).to_dict(),
    }


def build_report(*, ner=None, linking=None, models=None, config=None, fingerprint=None, n_test=0):
    """Assemble the JSON-serializable report dict."""
    return {
        "config_hash": config_hash(config or {}),
        "dataset_fingerprint": fingerprint,
        "test_instances": n_test,
        "ner_accuracy": ner.to_dict() if ner else None,
        "linking_recall": {mode: r.to_dict() for mode, r in (linking or {}).items()},
        "models": models or {},
        "reference_baselines": _jsonable(REFERENCE_BASELINES),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, tuple):
        return list(obj)
    return obj


def write_report(report, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(x):
    return f"{x:.4f}"


def report_tables(report):
    """Human-readable TSV tables laid out like the published ones, keyed by file stem."""
    tables = {}
    ner = report.get("ner_accuracy")
    if ner:
        tables["ner_accuracy"] = ["metric\tvalue\tcorrect\ttotal\treference",
                                  f"ner_accuracy\t{_fmt(ner['value'])}\t{ner['numerator']}\t"
                                  f"{ner['denominator']}\t{_fmt(REFERENCE_BASELINES['ner_accuracy'])}"]
    linking = report.get("linking_recall") or {}
    if linking:
        modes = sorted(linking)
        ks = sorted({int(k) for m in modes for k in linking[m]})
        rows = ["K\t" + "\t".join(f"recall_{m}" for m in modes) + "\treference"]
        ref = REFERENCE_BASELINES["linking_recall"]
        for k in ks:
            cells = [_fmt(linking[m][str(k)]["value"]) if str(k) in linking[m] else "" for m in modes]
            rows.append(f"{k}\t" + "\t".join(cells) + f"\t{_fmt(ref[k]) if k in ref else ''}")
        tables["linking_recall"] = rows
    models = report.get("models") or {}
    if models:
        for metric in ("predicate_accuracy", "answer_accuracy"):
            rows = ["model\tname\taccuracy\treference"]
            for kind in sorted(models):
                ref = REFERENCE_BASELINES[metric].get(kind)
                rows.append(f"{kind}\t{MODEL_NAMES.get(kind, kind)}\t"
                            f"{_fmt(models[kind][metric]['value'])}\t{_fmt(ref) if ref is not None else ''}")
            tables[metric] = rows
        for kind in sorted(models):
            rec = models[kind]["pair_recall"]
            rows = ["K\tpair\tsubject\tpredicate"]
            for k in sorted(int(k) for k in rec["pair"]):
                rows.append(f"{k}\t" + "\t".join(_fmt(rec[n][str(k)]["value"])
                                                 for n in ("pair", "subject", "predicate")))
            tables[f"pair_recall_{kind}"] = rows
            tax = models[kind]["error_taxonomy"]
            wrong = tax["total_wrong"]
            rows = ["error_type\tcount\tpercentage"]
            for name in ("only_wrong_predicate", "only_wrong_subject",
                         "wrong_subject_and_predicate", "empty_prediction"):
                rows.append(f"{name}\t{tax[name]}\t{_fmt(tax[name] / wrong) if wrong else _fmt(0.0)}")
            rows.append(f"total\t{wrong}\t{_fmt(1.0) if wrong else _fmt(0.0)}")
            tables[f"error_taxonomy_{kind}"] = rows
    return tables


def write_tables(report, out_dir):
    paths = []
    for stem, rows in report_tables(report).items():
        path = out_dir / f"{stem}.tsv"
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        paths.append(path)
    return paths
