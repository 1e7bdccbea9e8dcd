"""Command-line pipeline driver.

Subcommands cover the full loop: toy-corpus generation, prefix-pair
extraction (with optional joint-corpus export), streaming simulation,
scoring, and quality-latency sweeps. Every command materializes its
resolved configuration into a JSON manifest next to its primary output;
feeding that manifest back through --config reproduces the run.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .corpus import (
    generate_toy_corpus,
    load_lexicon,
    read_parallel_corpus,
    write_parallel_corpus,
)
from .errors import (
    AlignmentError,
    ConfigError,
    CorpusShapeError,
    ExportError,
    GatewayError,
    MalformedSentenceError,
    MetricInputError,
    OOVError,
    SimtError,
)
from .extract import (
    ExtractionConfig,
    export_joint_corpus,
    extract_corpus,
    write_prefix_pairs,
)
from .gateway import endpoint_from_spec
from .metrics import (
    QualityLatencyPoint,
    score_traces,
    sweep,
    write_score_report,
    write_sweep_csv,
)
from .policies import PolicyConfig, WireClassifier, read_scripts
from .simulate import (
    WritePolicyConfig,
    read_source_corpus,
    read_traces,
    simulate_corpus,
    write_rendered,
    write_traces,
)

_USAGE_ERRORS = (
    ConfigError,
    CorpusShapeError,
    MalformedSentenceError,
    AlignmentError,
    MetricInputError,
    OOVError,
    ExportError,
)


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge flag values over config-file values over defaults."""
    cfg = dict(defaults)
    provided = vars(args)
    config_path = provided.get("config")
    if config_path:
        try:
            loaded = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {config_path}: {exc}") from exc
        if isinstance(loaded, dict) and "command" in loaded and "config" in loaded:
            loaded = loaded["config"]  # a manifest file reruns its own config
        for key, value in loaded.items():
            if key in cfg:
                cfg[key] = value
    for key in cfg:
        if key in provided:
            cfg[key] = provided[key]
    return cfg


def _require(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) in (None, "")]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join('--' + k.replace('_', '-') for k in missing)}")


def _write_manifest(
    path: str | Path,
    command: str,
    cfg: dict,
    inputs: list[str],
    outputs: list[str],
    started: float,
) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "inputs": inputs,
        "outputs": outputs,
        "seed": cfg.get("seed"),
        "duration_s": round(time.time() - started, 3),
    }
    Path(path).write_text(json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def _default_workers() -> int:
    return os.cpu_count() or 1


def _read_policy_from_cfg(cfg: dict, *, timeout_ms: int) -> PolicyConfig:
    kind = cfg["read"]
    if kind == "wait_k":
        return PolicyConfig(kind="wait_k", k=int(cfg["k"]))
    if kind == "threshold":
        _require(cfg, "classifier")
        spec = cfg["classifier"]
        if spec.startswith("toy:"):
            raise ConfigError("toy endpoints cannot score boundaries; use exec: or tcp:")
        classifier = WireClassifier(endpoint_from_spec(spec, timeout_ms=timeout_ms))
        return PolicyConfig(kind="threshold", delta=float(cfg["delta"]), classifier=classifier)
    if kind == "scripted":
        _require(cfg, "script")
        return PolicyConfig(kind="scripted", scripts=read_scripts(cfg["script"]))
    if kind == "heuristic":
        return PolicyConfig(kind="heuristic", span=int(cfg["span"]))
    raise ConfigError(f"unknown read policy {kind!r}")


def _refs_by_sid(path: str) -> dict[str, tuple[str, ...]]:
    refs = {}
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            raise MalformedSentenceError(f"empty reference at line {i + 1}")
        refs[str(i)] = tuple(line.split())
    return refs


# ---------------------------------------------------------------------------
# commands


TOY_DEFAULTS = {"lexicon": None, "n": None, "max_len": 8, "seed": 0, "out": None}


def cmd_toy_corpus(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve(args, TOY_DEFAULTS)
    _require(cfg, "lexicon", "n", "out")
    lexicon = load_lexicon(cfg["lexicon"])
    pairs = generate_toy_corpus(lexicon, int(cfg["n"]), int(cfg["max_len"]), int(cfg["seed"]))
    out_src, out_tgt = f"{cfg['out']}.src", f"{cfg['out']}.tgt"
    write_parallel_corpus(pairs, out_src, out_tgt)
    _write_manifest(
        f"{cfg['out']}.manifest.json", "toy-corpus", cfg, [cfg["lexicon"]], [out_src, out_tgt], started
    )
    print(f"wrote {len(pairs)} sentences to {out_src} / {out_tgt}")
    return 0


EXTRACT_DEFAULTS = {
    "src": None,
    "tgt": None,
    "endpoint": None,
    "beam": 10,
    "m": 2,
    "include_full_pair": False,
    "max_source_len": 256,
    "workers": None,
    "out": None,
    "report": None,
    "export_src": None,
    "export_tgt": None,
    "dedupe": False,
    "timeout_ms": 30000,
    "seed": 0,
}


def cmd_extract(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve(args, EXTRACT_DEFAULTS)
    _require(cfg, "src", "tgt", "endpoint", "out")
    workers = int(cfg["workers"]) if cfg["workers"] else _default_workers()
    corpus = read_parallel_corpus(cfg["src"], cfg["tgt"])
    endpoint = endpoint_from_spec(cfg["endpoint"], timeout_ms=int(cfg["timeout_ms"]))
    try:
        extraction_cfg = ExtractionConfig(
            beam_size=int(cfg["beam"]),
            m=int(cfg["m"]),
            include_full_pair=bool(cfg["include_full_pair"]),
            max_source_len=int(cfg["max_source_len"]),
        )
        pairs, report = extract_corpus(corpus, endpoint, extraction_cfg, workers=workers)
    finally:
        endpoint.close()
    write_prefix_pairs(pairs, cfg["out"])
    report_path = cfg["report"] or f"{cfg['out']}.report.jsonl"
    report.write(report_path)
    outputs = [cfg["out"], report_path]
    if cfg["export_src"] or cfg["export_tgt"]:
        _require(cfg, "export_src", "export_tgt")
        export = export_joint_corpus(
            pairs, corpus, cfg["export_src"], cfg["export_tgt"], dedupe=bool(cfg["dedupe"])
        )
        outputs += [cfg["export_src"], cfg["export_tgt"]]
        print(
            f"joint corpus: {export.prefix_rows} prefix rows + {export.original_rows} originals"
            + (f" ({export.duplicates_dropped} duplicates dropped)" if cfg["dedupe"] else "")
        )
    _write_manifest(
        f"{cfg['out']}.manifest.json", "extract", cfg, [cfg["src"], cfg["tgt"]], outputs, started
    )
    summary = report.summary()
    print(
        f"extracted {len(pairs)} prefix pairs from {summary['ok']}/{summary['sentences']} sentences"
        f" (mean {summary['mean_pairs']:.2f} per sentence, {summary['failed']} failures)"
    )
    return 0


SIMULATE_DEFAULTS = {
    "src": None,
    "read": "wait_k",
    "k": 1,
    "delta": 0.5,
    "classifier": None,
    "script": None,
    "span": 4,
    "write": "prefix_model",
    "endpoint": None,
    "m": 0,
    "beam": 10,
    "workers": None,
    "out_traces": None,
    "render": None,
    "timeout_ms": 30000,
    "seed": 0,
}


def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve(args, SIMULATE_DEFAULTS)
    _require(cfg, "src", "endpoint", "out_traces")
    workers = int(cfg["workers"]) if cfg["workers"] else _default_workers()
    corpus = read_source_corpus(cfg["src"])
    read_policy = _read_policy_from_cfg(cfg, timeout_ms=int(cfg["timeout_ms"]))
    endpoint = endpoint_from_spec(cfg["endpoint"], timeout_ms=int(cfg["timeout_ms"]))
    try:
        write_policy = WritePolicyConfig(
            kind=cfg["write"], endpoint=endpoint, m=int(cfg["m"]), beam_size=int(cfg["beam"])
        )
        traces, report = simulate_corpus(corpus, read_policy, write_policy, workers=workers)
    finally:
        endpoint.close()
        classifier = getattr(read_policy, "classifier", None)
        if classifier is not None and hasattr(classifier, "_endpoint"):
            classifier._endpoint.close()
    write_traces(traces, cfg["out_traces"])
    outputs = [cfg["out_traces"]]
    if cfg["render"]:
        write_rendered(traces, cfg["render"])
        outputs.append(cfg["render"])
    _write_manifest(
        f"{cfg['out_traces']}.manifest.json", "simulate", cfg, [cfg["src"]], outputs, started
    )
    summary = report.summary()
    print(f"simulated {summary['ok']}/{summary['sentences']} sentences ({summary['failed']} failures)")
    return 0


SCORE_DEFAULTS = {"traces": None, "refs": None, "out_report": None, "out_csv": None, "seed": 0}


def cmd_score(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve(args, SCORE_DEFAULTS)
    _require(cfg, "traces", "refs")
    traces = read_traces(cfg["traces"])
    refs = _refs_by_sid(cfg["refs"])
    bleu, per_sentence, mean_al = score_traces(traces, refs)
    report_path = cfg["out_report"] or f"{cfg['traces']}.scores.jsonl"
    write_score_report(per_sentence, bleu, mean_al, report_path)
    outputs = [report_path]
    if cfg["out_csv"]:
        point = QualityLatencyPoint(
            param_name="score",
            param_value=0.0,
            bleu=bleu.score,
            mean_al=mean_al,
            n_sentences=len(traces),
        )
        write_sweep_csv([point], cfg["out_csv"])
        outputs.append(cfg["out_csv"])
    _write_manifest(
        f"{report_path}.manifest.json", "score", cfg, [cfg["traces"], cfg["refs"]], outputs, started
    )
    print(f"BLEU {bleu.score:.4f}  mean_AL {mean_al:.4f}  n {len(traces)}")
    return 0


SWEEP_DEFAULTS = {
    "src": None,
    "refs": None,
    "family": None,
    "values": None,
    "endpoint": None,
    "write": "prefix_model",
    "m": 0,
    "beam": 10,
    "classifier": None,
    "workers": None,
    "out_csv": None,
    "timeout_ms": 30000,
    "seed": 0,
}


def cmd_sweep(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve(args, SWEEP_DEFAULTS)
    _require(cfg, "src", "refs", "family", "values", "endpoint", "out_csv")
    if cfg["family"] not in ("wait_k", "delta"):
        raise ConfigError(f"sweep family must be wait_k or delta, got {cfg['family']!r}")
    workers = int(cfg["workers"]) if cfg["workers"] else _default_workers()
    timeout_ms = int(cfg["timeout_ms"])
    corpus = read_source_corpus(cfg["src"])
    refs = _refs_by_sid(cfg["refs"])
    values = [v.strip() for v in str(cfg["values"]).split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep needs at least one value")
    endpoint = endpoint_from_spec(cfg["endpoint"], timeout_ms=timeout_ms)
    classifier = None
    try:
        write_policy = WritePolicyConfig(
            kind=cfg["write"], endpoint=endpoint, m=int(cfg["m"]), beam_size=int(cfg["beam"])
        )
        entries = []
        if cfg["family"] == "wait_k":
            for v in values:
                read_policy = PolicyConfig(kind="wait_k", k=int(v))
                traces, _ = simulate_corpus(corpus, read_policy, write_policy, workers=workers)
                entries.append((float(v), traces, refs))
            points = sweep("k", entries)
        else:
            _require(cfg, "classifier")
            if cfg["classifier"].startswith("toy:"):
                raise ConfigError("toy endpoints cannot score boundaries; use exec: or tcp:")
            classifier = WireClassifier(endpoint_from_spec(cfg["classifier"], timeout_ms=timeout_ms))
            for v in values:
                read_policy = PolicyConfig(kind="threshold", delta=float(v), classifier=classifier)
                traces, _ = simulate_corpus(corpus, read_policy, write_policy, workers=workers)
                entries.append((float(v), traces, refs))
            points = sweep("delta", entries)
    finally:
        endpoint.close()
        if classifier is not None:
            classifier._endpoint.close()
    write_sweep_csv(points, cfg["out_csv"])
    _write_manifest(
        f"{cfg['out_csv']}.manifest.json",
        "sweep",
        cfg,
        [cfg["src"], cfg["refs"]],
        [cfg["out_csv"]],
        started,
    )
    for p in points:
        print(f"{p.param_name}={p.param_value:g}  bleu={p.bleu:.4f}  mean_al={p.mean_al:.4f}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simt",
        description="Prefix-to-prefix simultaneous translation toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command")
    S = argparse.SUPPRESS

    p = sub.add_parser("toy-corpus", help="generate a deterministic toy parallel corpus")
    p.add_argument("--lexicon", default=S, help="toy lexicon JSON file")
    p.add_argument("--n", type=int, default=S, help="number of sentences")
    p.add_argument("--max-len", dest="max_len", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--out", default=S, help="output prefix; writes <out>.src and <out>.tgt")
    p.add_argument("--config", default=None, help="JSON config (or manifest) supplying defaults")
    p.set_defaults(func=cmd_toy_corpus)

    p = sub.add_parser("extract", help="extract pseudo prefix pairs from a parallel corpus")
    p.add_argument("--src", default=S)
    p.add_argument("--tgt", default=S)
    p.add_argument("--endpoint", default=S, help="toy:<lexicon>[:variants] | exec:<cmd> | tcp:<host:port>")
    p.add_argument("--beam", type=int, default=S)
    p.add_argument("--m", type=int, default=S, help="future words per pair (0 = basic variant)")
    p.add_argument("--include-full-pair", dest="include_full_pair", action="store_true", default=S)
    p.add_argument("--max-source-len", dest="max_source_len", type=int, default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--out", default=S, help="prefix-pair JSONL output")
    p.add_argument("--report", default=S)
    p.add_argument("--export-src", dest="export_src", default=S, help="joint corpus source side")
    p.add_argument("--export-tgt", dest="export_tgt", default=S, help="joint corpus target side")
    p.add_argument("--dedupe", action="store_true", default=S)
    p.add_argument("--timeout-ms", dest="timeout_ms", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("simulate", help="stream a corpus through READ/WRITE policies")
    p.add_argument("--src", default=S)
    p.add_argument("--read", default=S, choices=["wait_k", "threshold", "scripted", "heuristic"])
    p.add_argument("--k", type=int, default=S)
    p.add_argument("--delta", type=float, default=S)
    p.add_argument("--classifier", default=S, help="boundary classifier endpoint (exec:/tcp:)")
    p.add_argument("--script", default=S, help="scripted boundaries JSONL")
    p.add_argument("--span", type=int, default=S)
    p.add_argument("--write", default=S, choices=["prefix_model", "full_sentence_model"])
    p.add_argument("--endpoint", default=S)
    p.add_argument("--m", type=int, default=S, help="inference look-ahead tokens per segment")
    p.add_argument("--beam", type=int, default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--out-traces", dest="out_traces", default=S)
    p.add_argument("--render", default=S, help="also write human-readable WAIT*i rendering")
    p.add_argument("--timeout-ms", dest="timeout_ms", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("score", help="score traces against references (BLEU + AL)")
    p.add_argument("--traces", default=S)
    p.add_argument("--refs", default=S, help="reference file, one tokenized sentence per line")
    p.add_argument("--out-report", dest="out_report", default=S)
    p.add_argument("--out-csv", dest="out_csv", default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("sweep", help="quality-latency curve over a policy parameter")
    p.add_argument("--src", default=S)
    p.add_argument("--refs", default=S)
    p.add_argument("--family", default=S, choices=["wait_k", "delta"])
    p.add_argument("--values", default=S, help='comma list, e.g. "1,3,5,7" or "0.2,0.4,0.6"')
    p.add_argument("--endpoint", default=S)
    p.add_argument("--write", default=S, choices=["prefix_model", "full_sentence_model"])
    p.add_argument("--m", type=int, default=S)
    p.add_argument("--beam", type=int, default=S)
    p.add_argument("--classifier", default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--out-csv", dest="out_csv", default=S)
    p.add_argument("--timeout-ms", dest="timeout_ms", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help(file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GatewayError as exc:
        print(f"endpoint error: {exc}", file=sys.stderr)
        return 3
    except SimtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
