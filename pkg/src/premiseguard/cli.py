"""Command line front end.

Every setting resolves as: command-line flag, then environment variable, then
the ``[premiseguard]`` section of the ``--config`` file, then the built-in
default. Exit codes: 0 success, 1 some records (or the single query) failed,
2 configuration or input error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .datasets import FORMATS, Dataset, load_dataset
from .errors import ConfigError, FormatError, PremiseGuardError
from .evaluation import read_jsonl, run_ablation, run_detection_eval, run_mitigation_eval, ttest_from_rows
from .index import EmbeddingIndex
from .kgraph import KnowledgeGraph, load_triples
from .logiform import extract_logical_form, serialize_canonical, to_triple_query
from .mitigate import DEFAULT_VOTES, STRATEGIES, VOTE_TEMPERATURE, MitigationStrategy, answer
from .oracle import OracleChat
from .providers import (
    DEFAULT_CHAT_MODEL,
    DEFAULT_EMBED_MODEL,
    MOCK_DIM,
    CachedChat,
    CachedEmbedder,
    ChatProvider,
    Embedder,
    HashingEmbedder,
    HTTPChat,
    HTTPEmbedder,
    ScriptedChat,
    load_transcripts,
)
from .retrieve import DEFAULT_CANDIDATE_CAP, DEFAULT_EDGE_COST, DEFAULT_K, DEFAULT_K_EDGES, DEFAULT_K_NODES, PCSTParams
from .verdict import LF_MODES, RETRIEVERS, DetectionConfig, detect

log = logging.getLogger("premiseguard")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2
SECTION = "premiseguard"


def _bool(s: str | bool) -> bool:
    if isinstance(s, bool):
        return s
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


@dataclass(frozen=True)
class Setting:
    default: Any
    cast: Callable[[str], Any] = str
    env: str | None = None
    choices: tuple | None = None
    help: str = ""


SETTINGS: dict[str, Setting] = {
    # providers
    "backend": Setting("http", choices=("http", "scripted", "oracle"), help="chat backend"),
    "endpoint": Setting(None, env="PG_ENDPOINT", help="base URL of the HTTP chat/embedding API"),
    "api_key": Setting(None, env="PG_API_KEY", help="credential for the HTTP API"),
    "chat_model": Setting(DEFAULT_CHAT_MODEL, help="chat model id"),
    "transcripts": Setting(None, help="JSON Lines prompt/response file for --backend scripted"),
    "embed_backend": Setting("mock", choices=("mock", "http"), help="embedding backend"),
    "embed_model": Setting(DEFAULT_EMBED_MODEL, help="embedding model id for --embed-backend http"),
    "dim": Setting(MOCK_DIM, int, help="hashing embedder dimension for --embed-backend mock"),
    "cache_dir": Setting(None, env="PG_CACHE_DIR", help="response cache directory (off when unset)"),
    "max_in_flight": Setting(8, int, help="concurrent HTTP requests per provider"),
    # inputs
    "kg": Setting(None, help="triple file (JSON Lines or TSV)"),
    "index": Setting(None, help="prebuilt index file from the index command (built in memory when unset)"),
    "dataset": Setting(None, help="dataset file (JSON Lines)"),
    "format": Setting("generic", choices=FORMATS, help="dataset format"),
    # detection
    "retriever": Setting("embedding", choices=RETRIEVERS, help="detection retriever"),
    "lf_mode": Setting("both", choices=LF_MODES, help="where the logical form replaces the question"),
    "k": Setting(DEFAULT_K, int, help="triples kept by the embedding and llm_scored retrievers"),
    "edge_cost": Setting(DEFAULT_EDGE_COST, float, help="PCST cost per edge"),
    "k_nodes": Setting(DEFAULT_K_NODES, int, help="PCST entities given a nonzero prize"),
    "k_edges": Setting(DEFAULT_K_EDGES, int, help="PCST triples given a nonzero prize"),
    "candidate_cap": Setting(DEFAULT_CANDIDATE_CAP, int, help="candidates scored by the llm_scored retriever"),
    # mitigation
    "strategy": Setting("premise_informed", choices=STRATEGIES, help="answering strategy"),
    "votes": Setting(DEFAULT_VOTES, int, help="samples for majority_vote"),
    "vote_temperature": Setting(VOTE_TEMPERATURE, float, help="sampling temperature for majority_vote"),
    "verbatim_paper_prompts": Setting(False, _bool, help="use the original misspelled warning prompt"),
    # runs
    "workers": Setting(1, int, help="records evaluated in parallel"),
    "out": Setting("runs/latest", help="output directory for report.json and provenance.jsonl"),
}

GROUPS = {
    "provider": ["backend", "endpoint", "api_key", "chat_model", "transcripts", "embed_backend", "embed_model",
                 "dim", "cache_dir", "max_in_flight"],
    "graph": ["kg", "index"],
    "dataset": ["dataset", "format"],
    "detection": ["retriever", "lf_mode", "k", "edge_cost", "k_nodes", "k_edges", "candidate_cap"],
    "mitigation": ["strategy", "votes", "vote_temperature", "verbatim_paper_prompts"],
    "run": ["workers", "out"],
}


def _add(parser: argparse.ArgumentParser, names: list[str]) -> None:
    for name in names:
        s = SETTINGS[name]
        flag = "--" + name.replace("_", "-")
        extra = f" [env {s.env}]" if s.env else ""
        help_ = f"{s.help} (default: {s.default}){extra}"
        if s.cast is _bool:
            parser.add_argument(flag, dest=name, action="store_const", const=True, default=None, help=help_)
        else:
            parser.add_argument(flag, dest=name, default=None, choices=s.choices, help=help_,
                                type=s.cast if s.cast is not str else None)


def resolve(args: argparse.Namespace, env: dict[str, str] | None = None) -> dict[str, Any]:
    """Merge flags, environment and config file into one settings dict."""
    env = os.environ if env is None else env
    file_values: dict[str, str] = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser()
        try:
            cp.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if cp.has_section(SECTION):
            file_values = {k.replace("-", "_"): v for k, v in cp.items(SECTION)}
        unknown = sorted(set(file_values) - set(SETTINGS))
        if unknown:
            raise ConfigError(f"{path}: unknown keys {', '.join(unknown)}")
    out: dict[str, Any] = {}
    for name, s in SETTINGS.items():
        value = getattr(args, name, None)
        if value is None and s.env and env.get(s.env):
            value = env[s.env]
        if value is None and name in file_values:
            value = file_values[name]
        if value is None:
            out[name] = s.default
            continue
        try:
            value = s.cast(value) if isinstance(value, str) else value
        except ValueError:
            raise ConfigError(f"{name}: cannot read {value!r}") from None
        if s.choices and value not in s.choices:
            raise ConfigError(f"{name}: {value!r} is not one of {', '.join(s.choices)}")
        out[name] = value
    return out


# --- component construction -------------------------------------------------

def _need(cfg: dict, name: str, why: str) -> Any:
    if cfg[name] in (None, ""):
        raise ConfigError(f"--{name.replace('_', '-')} is required {why}")
    return cfg[name]


def _existing(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} not found: {p}")
    return p


def make_embedder(cfg: dict) -> Embedder:
    if cfg["embed_backend"] == "mock":
        if cfg["dim"] <= 0:
            raise ConfigError("dim must be positive")
        return HashingEmbedder(cfg["dim"])
    emb: Embedder = HTTPEmbedder(_need(cfg, "endpoint", "for --embed-backend http"), cfg["api_key"],
                                 model=cfg["embed_model"])
    if cfg["cache_dir"]:
        emb = CachedEmbedder(emb, cfg["cache_dir"])
    return emb


def make_chat(cfg: dict, dataset: Dataset | None = None) -> ChatProvider:
    backend = cfg["backend"]
    if backend == "http":
        chat: ChatProvider = HTTPChat(_need(cfg, "endpoint", "for --backend http"), cfg["api_key"],
                                      model=cfg["chat_model"], max_in_flight=cfg["max_in_flight"])
    elif backend == "scripted":
        path = _existing(_need(cfg, "transcripts", "for --backend scripted"), "transcripts")
        chat = ScriptedChat(load_transcripts(path), model=cfg["chat_model"])
    else:
        # logical forms come from the dataset's meta, when it has them
        table = {r.question: r.meta["logical_form"] for r in (dataset or []) if "logical_form" in r.meta}
        chat = OracleChat(table)
    if cfg["cache_dir"]:
        chat = CachedChat(chat, cfg["cache_dir"])
    return chat


def load_graph(cfg: dict, embedder: Embedder, required: bool = True) -> tuple[KnowledgeGraph | None,
                                                                             EmbeddingIndex | None]:
    if not cfg["kg"]:
        if required:
            raise ConfigError("--kg is required for this retriever/strategy")
        return None, None
    kg = load_triples(_existing(cfg["kg"], "graph file"))
    if cfg["index"]:
        return kg, EmbeddingIndex.load(_existing(cfg["index"], "index file"), kg, embedder)
    return kg, EmbeddingIndex.build(kg, embedder)


def detection_config(cfg: dict) -> DetectionConfig:
    try:
        return DetectionConfig(
            retriever=cfg["retriever"], lf_mode=cfg["lf_mode"], k=cfg["k"],
            pcst=PCSTParams(k_nodes=cfg["k_nodes"], k_edges=cfg["k_edges"], edge_cost=cfg["edge_cost"]),
            candidate_cap=cfg["candidate_cap"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def strategy(cfg: dict) -> MitigationStrategy:
    try:
        return MitigationStrategy(cfg["strategy"], votes=cfg["votes"], vote_temperature=cfg["vote_temperature"],
                                  verbatim_paper_prompts=cfg["verbatim_paper_prompts"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _dataset(cfg: dict) -> Dataset:
    ds = load_dataset(_existing(_need(cfg, "dataset", "for evaluation"), "dataset"), cfg["format"])
    if ds.dropped:
        log.info("dropped %d records without a binary label", ds.dropped)
    return ds


def _print(obj: Any) -> None:
    sys.stdout.write(json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n")


def _write_run(cfg: dict, report: dict, rows: list[dict]) -> Path:
    from .evaluation import write_jsonl

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
                                     encoding="utf-8")
    write_jsonl(out / "provenance.jsonl", rows)
    return out


# --- commands ---------------------------------------------------------------

def cmd_index(args, cfg) -> int:
    embedder = make_embedder(cfg)
    kg = load_triples(_existing(args.kg_file, "graph file"))
    index = EmbeddingIndex.build(kg, embedder)
    index.save(args.out_file)
    _print({"index": str(args.out_file), **kg.stats(), "model": embedder.model_id})
    return EXIT_OK


def cmd_extract_lf(args, cfg) -> int:
    chat = make_chat(cfg, _dataset(cfg) if cfg["dataset"] else None)
    lf = extract_logical_form(args.question, chat)
    tq = to_triple_query(lf)
    _print({"logical_form": serialize_canonical(lf), "raw": lf.raw,
            "triple_query": {"source": tq.source, "relation": tq.relation, "target": tq.target}})
    return EXIT_OK


def cmd_detect(args, cfg) -> int:
    det = detection_config(cfg)
    chat = make_chat(cfg, _dataset(cfg) if cfg["dataset"] else None)
    kg, index = load_graph(cfg, make_embedder(cfg), required=det.retriever != "direct")
    _print(detect(args.question, kg, index, chat, det).to_json())
    return EXIT_OK


def cmd_answer(args, cfg) -> int:
    det, strat = detection_config(cfg), strategy(cfg)
    chat = make_chat(cfg, _dataset(cfg) if cfg["dataset"] else None)
    needs_graph = strat.kind in ("direct_rag", "premise_informed")
    kg, index = load_graph(cfg, make_embedder(cfg), required=needs_graph)
    aq = answer(strat, args.question, chat, kg, index, det)
    _print({
        "final_query": aq.final_query, "answer": aq.answer_text, "graded_yes": aq.graded_yes,
        "votes": aq.votes, "verdict": aq.verdict.to_json() if aq.verdict else None,
    })
    return EXIT_OK


def _eval_setup(cfg, *, graph: bool):
    ds = _dataset(cfg)
    chat = make_chat(cfg, ds)
    kg, index = load_graph(cfg, make_embedder(cfg), required=graph)
    return ds, chat, kg, index


def _finish(cfg, run) -> int:
    report = run.to_json()
    out = _write_run(cfg, report, run.rows)
    print(f"wrote {out / 'report.json'} and {out / 'provenance.jsonl'}", file=sys.stderr)
    return EXIT_PARTIAL if run.failures else EXIT_OK


def cmd_eval_detect(args, cfg) -> int:
    det = detection_config(cfg)
    ds, chat, kg, index = _eval_setup(cfg, graph=det.retriever != "direct")
    run = run_detection_eval(det, ds.records, kg, index, chat, workers=cfg["workers"])
    return _finish(cfg, run)


def cmd_ablate(args, cfg) -> int:
    det = detection_config(cfg)
    if det.lf_mode == "none":
        raise ConfigError("ablation needs --lf-mode retrieval_only or both")
    ds, chat, kg, index = _eval_setup(cfg, graph=det.retriever != "direct")
    run = run_ablation(det, args.mask, ds.records, kg, index, chat, workers=cfg["workers"])
    return _finish(cfg, run)


def cmd_eval_mitigate(args, cfg) -> int:
    det, strat = detection_config(cfg), strategy(cfg)
    ds, chat, kg, index = _eval_setup(cfg, graph=strat.kind in ("direct_rag", "premise_informed"))
    baseline = read_jsonl(_existing(args.baseline, "baseline provenance")) if args.baseline else None
    run = run_mitigation_eval(strat, ds.records, kg, index, chat, det, baseline=baseline, workers=cfg["workers"])
    return _finish(cfg, run)


def cmd_ttest(args, cfg) -> int:
    a = read_jsonl(_existing(args.run_a, "provenance file"))
    b = read_jsonl(_existing(args.run_b, "provenance file"))
    r = ttest_from_rows(a, b)
    _print({"t": r.t, "p": r.p, "n": r.n, "mean_diff": r.mean_diff, "degenerate": r.degenerate})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="premiseguard", description="False-premise detection over a knowledge graph.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name, fn, help_, groups):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", default=None, help=f"INI file with a [{SECTION}] section (default: none)")
        for g in groups:
            _add(p.add_argument_group(g), GROUPS[g])
        p.set_defaults(func=fn)
        return p

    p = command("index", cmd_index, "embed every triple and entity and save the index", [])
    p.add_argument("kg_file", help="triple file")
    p.add_argument("out_file", help="index file to write")
    _add(p.add_argument_group("embedding"), ["embed_backend", "embed_model", "dim", "endpoint", "api_key",
                                             "cache_dir"])

    p = command("extract-lf", cmd_extract_lf, "print the logical form of one question", ["provider", "dataset"])
    p.add_argument("question")
    p = command("detect", cmd_detect, "decide whether one question has a false premise",
                ["provider", "graph", "dataset", "detection"])
    p.add_argument("question")
    p = command("answer", cmd_answer, "answer one question under a mitigation strategy",
                ["provider", "graph", "dataset", "detection", "mitigation"])
    p.add_argument("question")
    command("eval-detect", cmd_eval_detect, "detection metrics over a dataset",
            ["provider", "graph", "dataset", "detection", "run"])
    p = command("eval-mitigate", cmd_eval_mitigate, "answer accuracy over a dataset",
                ["provider", "graph", "dataset", "detection", "mitigation", "run"])
    p.add_argument("--baseline", default=None,
                   help="provenance.jsonl of an earlier run for the per-query breakdown (default: none)")
    p = command("ablate", cmd_ablate, "detection metrics with one logical-form component masked",
                ["provider", "graph", "dataset", "detection", "run"])
    p.add_argument("--mask", required=True, choices=("relation", "entity1", "entity2"),
                   help="component replaced by the mask token")
    p = command("ttest", cmd_ttest, "paired t-test on per-record correctness of two runs", [])
    p.add_argument("run_a", help="provenance.jsonl of run A")
    p.add_argument("run_b", help="provenance.jsonl of run B")
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=max(logging.DEBUG, logging.WARNING - 10 * args.verbose),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve(args)
        return args.func(args, cfg)
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PremiseGuardError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
