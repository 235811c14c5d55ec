"""Command-line entry point: ``kbqa <verb> ...``.

Verbs: ``synth``, ``build-index``, ``train``, ``answer``, ``evaluate``.
Most settings come from a TOML run config (``--config``); flags override it.
Relative paths in the config resolve against the config file's directory.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 training
divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from multiprocessing import get_context
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import evalharness as ev
from . import predicate_models as pm
from . import surface_index as si
from .data import fingerprint, load_word_vectors, read_dataset
from .graphembed import EmbedConfig, EmbeddingTable, relation_predicates, train_embeddings
from .kbstore import DataError, load_triple_file
from .modelio import write_training_log
from .numcore.checkpoint import CheckpointError
from .predicate_models.common import config_from_dict
from .ranker import RankerConfig, answer_question
from .spanner import NerConfig, NerModel, train_ner
from .synth import SynthConfig
from .synth import write as write_synth

log = logging.getLogger("kbqa")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3
MODEL_KINDS = ("m1", "m2", "m3", "m4")
TRAIN_KINDS = ("ner",) + MODEL_KINDS + ("kb-embed",)
PATH_KEYS = ("kb", "train", "valid", "test", "index", "word_vectors", "embeddings",
             "ner", "m1", "m2", "m3", "m4")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


@dataclass
class RunConfig:
    seed: int = 0
    out: Path = Path("runs")
    models_dir: Path = Path("runs")
    workers: int = 1
    paths: dict = field(default_factory=dict)
    extra_indexes: list = field(default_factory=list)
    sections: dict = field(default_factory=dict)
    ranker: RankerConfig = field(default_factory=RankerConfig)
    linking_ks: tuple = ev.LINKING_KS
    pair_ks: tuple = ev.PAIR_KS
    models: tuple = None  # None: every kind whose checkpoint exists

    def path(self, key, required=True, must_exist=True):
        p = self.paths.get(key)
        if p is None:
            if required:
                raise ConfigError(f"missing required path '{key}' (set [paths] {key} in the config)")
            return None
        if must_exist and not p.exists():
            raise DataError(f"{key}: file not found: {p}")
        return p

    def checkpoint(self, kind):
        default = self.models_dir / ("kb-embed.txt" if kind == "kb-embed" else f"{kind}.ckpt")
        return self.paths.get("embeddings" if kind == "kb-embed" else kind, default)

    def hashable(self):
        """Everything that affects results, minus filesystem locations."""
        return {"seed": self.seed, "sections": self.sections, "ranker": asdict(self.ranker),
                "linking_ks": list(self.linking_ks), "pair_ks": list(self.pair_ks),
                "models": list(self.models or ())}


def load_run_config(args):
    raw, base = {}, Path.cwd()
    if getattr(args, "config", None):
        cfg_path = Path(args.config)
        try:
            with open(cfg_path, "rb") as fh:
                raw = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {cfg_path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{cfg_path}: {exc}") from exc
        base = cfg_path.resolve().parent

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    raw_paths = dict(raw.get("paths", {}))
    unknown = set(raw_paths) - set(PATH_KEYS) - {"extra_indexes"}
    if unknown:
        raise ConfigError(f"unknown [paths] keys: {sorted(unknown)}")
    extra = [resolve(p) for p in raw_paths.pop("extra_indexes", [])]
    paths = {k: resolve(v) for k, v in raw_paths.items() if v != ""}
    for key in PATH_KEYS:
        val = getattr(args, key.replace("-", "_"), None)
        if val:
            paths[key] = Path(val)
    # --out redirects outputs only; trained models are still read from the config's location
    models_dir = resolve(raw.get("models_dir", raw.get("out", "runs")))
    out = Path(args.out) if getattr(args, "out", None) else resolve(raw.get("out", "runs"))
    seed = args.seed if getattr(args, "seed", None) is not None else int(raw.get("seed", 0))
    workers = args.workers if getattr(args, "workers", None) else int(raw.get("workers", 1))
    if workers < 1:
        raise ConfigError("--workers must be >= 1")
    sections = {k: dict(raw.get(k, {})) for k in TRAIN_KINDS if k in raw}
    try:
        ranker = RankerConfig(**raw.get("ranker", {}))
    except TypeError as exc:
        raise ConfigError(f"[ranker]: {exc}") from exc
    if ranker.k_subjects < 1 or ranker.max_ngram < 1:
        raise ConfigError("[ranker] sizes must be positive")
    evald = raw.get("evaluate", {})
    models = tuple(evald["models"]) if "models" in evald else None
    bad = [m for m in models or () if m not in MODEL_KINDS]
    if bad:
        raise ConfigError(f"[evaluate] models: unknown kinds {bad}")
    return RunConfig(seed=seed, out=out, models_dir=models_dir, workers=workers, paths=paths,
                     extra_indexes=extra, sections=sections, ranker=ranker,
                     linking_ks=tuple(evald.get("linking_ks", ev.LINKING_KS)),
                     pair_ks=tuple(evald.get("pair_ks", ev.PAIR_KS)), models=models)


def model_config(kind, run):
    section = dict(run.sections.get(kind, {}))
    section["seed"] = run.seed
    cls = {"ner": NerConfig, "kb-embed": EmbedConfig, **pm.CONFIGS}[kind]
    try:
        cfg = config_from_dict(cls, section)
    except TypeError as exc:
        raise ConfigError(f"[{kind}]: {exc}") from exc
    unknown = set(section) - set(asdict(cls()))
    if unknown:
        raise ConfigError(f"[{kind}]: unknown keys {sorted(unknown)}")
    for name, value in asdict(cfg).items():
        if isinstance(value, (int, float)) and not isinstance(value, bool) and name != "seed":
            if value < 0 or (value == 0 and name not in ("epochs",)):
                raise ConfigError(f"[{kind}] {name} must be positive, got {value}")
    return cfg


# ---- verbs ---------------------------------------------------------------

def cmd_synth(args):
    cfg = SynthConfig(seed=args.seed or 0)
    for name in ("entities", "train", "valid", "test", "unreachable"):
        val = getattr(args, name)
        if val is not None:
            setattr(cfg, name, val)
    if min(cfg.entities, cfg.train, cfg.valid, cfg.test) <= 0 or not 0 <= cfg.unreachable < 1:
        raise ConfigError("synth sizes must be positive and unreachable in [0, 1)")
    out = write_synth(cfg, Path(args.out or "synth"))
    print(f"wrote synthetic KB and splits to {out}")
    return EXIT_OK


def cmd_build_index(args):
    run = load_run_config(args)
    graph = load_triple_file(run.path("kb"))
    index = si.build_from_kb(graph)
    for extra in run.extra_indexes + [Path(p) for p in args.extra or []]:
        if not extra.exists():
            raise DataError(f"extra index not found: {extra}")
        index = si.merge(index, si.load(extra))
    target = run.paths.get("index") if not args.out else Path(args.out)
    target = target or run.out / "index.tsv"
    target.parent.mkdir(parents=True, exist_ok=True)
    si.save(index, target)
    print(f"index: {len(index)} entries, {index.n_surfaces} surfaces -> {target}")
    return EXIT_OK


def _vectors(run):
    p = run.path("word_vectors", required=False)
    return load_word_vectors(p) if p else None


def cmd_train(args):
    run = load_run_config(args)
    kind = args.kind
    cfg = model_config(kind, run)
    # dependency checks come before any data is read
    needs = {"ner": ("train", "index"), "m1": ("train", "index"), "m4": ("train", "index"),
             "m2": ("train", "index", "kb", "embeddings"), "m3": ("train", "index", "kb"),
             "kb-embed": ("kb",)}[kind]
    for key in needs:
        run.path(key, must_exist=False)
    for key in needs:
        run.path(key)
    if kind == "m2":
        table = EmbeddingTable.load(run.path("embeddings"))
        cfg.embedding_path = str(run.path("embeddings"))
        if table.dim != cfg.output_dim:
            raise ConfigError(f"[m2] output_dim {cfg.output_dim} != embedding dim {table.dim}")
    run.out.mkdir(parents=True, exist_ok=True)
    target = Path(args.checkpoint) if args.checkpoint else run.out / (
        "kb-embed.txt" if kind == "kb-embed" else f"{kind}.ckpt")

    if kind == "kb-embed":
        table = train_embeddings(load_triple_file(run.path("kb")), cfg)
        table.save(target)
        meta = {"kind": kind, "seed": cfg.seed, "config": {
            **asdict(cfg), "skip_predicates": sorted(cfg.skip_predicates)}}
        Path(str(target) + ".json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
        history = table.history
    else:
        records = read_dataset(run.path("train"))
        index = si.load(run.path("index"))
        vectors = _vectors(run)
        if kind == "ner":
            result = train_ner(records, index, cfg, vectors)
            model, history = result.model, result.log
        elif kind == "m1":
            model, history = pm.m1_train(records, index, cfg, vectors)
        elif kind == "m2":
            graph = load_triple_file(run.path("kb"))
            model, history = pm.m2_train(records, index, table, relation_predicates(graph), cfg, vectors)
        elif kind == "m3":
            graph = load_triple_file(run.path("kb"))
            model, history = pm.m3_train(records, index, graph, cfg, vectors)
        else:
            model, history = pm.m4_train(records, index, cfg)
        model.save(target)
    log_path = target.with_name(target.name + ".log.tsv")
    write_training_log(history, log_path)
    last = history[-1] if history else {}
    print(f"trained {kind} (seed {cfg.seed}) -> {target}; final loss {last.get('loss', float('nan')):.6f}")
    return EXIT_OK


def _load_predicate_model(kind, run):
    path = run.checkpoint(kind)
    if not Path(path).exists():
        raise DataError(f"{kind} checkpoint not found: {path}")
    if kind == "m2":
        table_path = run.checkpoint("kb-embed")
        if not Path(table_path).exists():
            raise DataError(f"embedding table not found: {table_path}")
        return pm.ProjectionModel.load(path, table=EmbeddingTable.load(table_path))
    return pm.MODELS[kind].load(path)


def _load_pipeline(run, kinds):
    graph = load_triple_file(run.path("kb"))
    index = si.load(run.path("index"))
    ner_path = run.checkpoint("ner")
    if not Path(ner_path).exists():
        raise DataError(f"ner checkpoint not found: {ner_path}")
    ner = NerModel.load(ner_path)
    models = {k: _load_predicate_model(k, run) for k in kinds}
    return graph, index, ner, models


def _format_answer(ans, top_n=5):
    lines = [f"question: {ans.question}", f"mention: {ans.mention or '-'}"]
    if ans.best is None:
        lines.append("no prediction")
        return "\n".join(lines)
    b = ans.best
    lines.append(f"answer: ({b.subject}, {b.predicate}) score {b.score:.6f}")
    lines.append("objects: " + (", ".join(ans.objects) or "-"))
    lines.append("top candidates:")
    for p in ans.pairs[:top_n]:
        lines.append(f"  {p.score:.6f}  {p.subject}  {p.predicate}  "
                     f"(P(s)={p.subject_prior:.4f}, P(p)={p.predicate_prob:.4f})")
    return "\n".join(lines)


def cmd_answer(args):
    run = load_run_config(args)
    if bool(args.question) == bool(args.questions):
        raise ConfigError("give exactly one of --question or --questions")
    graph, index, ner, models = _load_pipeline(run, [args.model])
    model = models[args.model]
    if args.question:
        ans = answer_question(args.question, ner, model, index, graph, run.ranker)
        print(ans.to_json(run.ranker.top_n) if args.jsonl else _format_answer(ans))
        return EXIT_OK
    qpath = Path(args.questions)
    if not qpath.exists():
        raise DataError(f"questions file not found: {qpath}")
    questions = qpath.read_text(encoding="utf-8").splitlines()
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        for q in questions:
            ans = answer_question(q, ner, model, index, graph, run.ranker)
            out.write(ans.to_json(run.ranker.top_n) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


_WORKER = {}


def _init_worker(ner, model, index, graph, ranker):
    _WORKER.update(ner=ner, model=model, index=index, graph=graph, ranker=ranker)


def _predict_chunk(records):
    w = _WORKER
    return ev.predict_all(w["ner"], w["model"], records, w["index"], w["graph"], w["ranker"])


def _predict(run, ner, model, records, index, graph):
    if run.workers == 1 or len(records) < 2:
        return ev.predict_all(ner, model, records, index, graph, run.ranker)
    n = run.workers
    chunks = [records[i::n] for i in range(n)]
    with ProcessPoolExecutor(n, mp_context=get_context("fork"), initializer=_init_worker,
                             initargs=(ner, model, index, graph, run.ranker)) as pool:
        parts = list(pool.map(_predict_chunk, chunks))
    # undo the round-robin split so output order matches the input
    out = [None] * len(records)
    for i, part in enumerate(parts):
        out[i::n] = part
    return out


def cmd_evaluate(args):
    run = load_run_config(args)
    test_path = run.path("test")
    records = read_dataset(test_path)
    if run.models is None:
        found = tuple(k for k in MODEL_KINDS if run.checkpoint(k).exists())
        if not found:
            raise DataError(f"no predicate-model checkpoints found in {run.models_dir}")
        run = replace(run, models=found)
    graph, index, ner, models = _load_pipeline(run, run.models)
    m = run.ranker.max_ngram
    linking = {
        "gold_mention": ev.linking_recall_at_k(records, index, run.linking_ks, ev.gold_mentions(records, index, m)),
        "predicted_mention": ev.linking_recall_at_k(records, index, run.linking_ks,
                                                    ev.predicted_mentions(ner, records, index, m)),
    }
    results = {}
    for kind in run.models:
        preds = _predict(run, ner, models[kind], records, index, graph)
        results[kind] = ev.model_metrics(preds, run.pair_ks)
    report = ev.build_report(ner=ev.ner_accuracy(ner, records, index, m), linking=linking,
                             models=results, config=run.hashable(),
                             fingerprint=fingerprint(test_path), n_test=len(records))
    report["seed"] = run.seed
    run.out.mkdir(parents=True, exist_ok=True)
    ev.write_report(report, run.out / "report.json")
    tables = ev.write_tables(report, run.out)
    print(f"evaluated {len(records)} questions; report -> {run.out / 'report.json'} "
          f"({len(tables)} tables)")
    for kind in run.models:
        r = results[kind]
        print(f"  {kind}: predicate {r['predicate_accuracy']['value']:.4f}  "
              f"answer {r['answer_accuracy']['value']:.4f}")
    return EXIT_OK


# ---- argument parsing ----------------------------------------------------

def build_parser():
    parser = _Parser(prog="kbqa", description="Simple-question answering over a triple store.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def shared(p):
        p.add_argument("--config", help="TOML run config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory or file")
        p.add_argument("--workers", type=int)
        return p

    p = shared(sub.add_parser("synth", help="generate a synthetic KB and question splits"))
    p.add_argument("--entities", type=int)
    p.add_argument("--train", type=int)
    p.add_argument("--valid", type=int)
    p.add_argument("--test", type=int)
    p.add_argument("--unreachable", type=float)
    p.set_defaults(func=cmd_synth)

    p = shared(sub.add_parser("build-index", help="build the surface-form index from a KB"))
    p.add_argument("--kb")
    p.add_argument("--extra", action="append", help="extra index TSV to merge (repeatable)")
    p.set_defaults(func=cmd_build_index)

    p = shared(sub.add_parser("train", help="train one component"))
    p.add_argument("kind", choices=TRAIN_KINDS)
    p.add_argument("--checkpoint", help="where to write the model (default: <out>/<kind>.ckpt)")
    p.set_defaults(func=cmd_train)

    p = shared(sub.add_parser("answer", help="answer one question or a file of questions"))
    p.add_argument("--model", choices=MODEL_KINDS, default="m4")
    p.add_argument("--question")
    p.add_argument("--questions", help="file with one question per line")
    p.add_argument("--output", help="write JSON lines here instead of stdout")
    p.add_argument("--jsonl", action="store_true", help="JSON output in single-question mode")
    p.set_defaults(func=cmd_answer)

    p = shared(sub.add_parser("evaluate", help="run all evaluations on the test split"))
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"kbqa: usage error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"kbqa: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FloatingPointError as exc:
        print(f"kbqa: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DataError, CheckpointError, OSError, KeyError, ValueError) as exc:
        print(f"kbqa: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
