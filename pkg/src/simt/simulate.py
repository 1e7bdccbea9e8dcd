"""Streaming decode loop: compose a READ policy with a WRITE model.

Segment policies commit a whole forced-decode continuation per boundary;
wait-k runs the classic token-per-step schedule. Traces record every READ
and WRITE with the number of source tokens read at that moment, which is
all the latency metrics need.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import FW_TOKEN, SentencePair, TokenSeq, as_tokens
from .errors import ConfigError
from .gateway import DEFAULT_BEAM, TranslateRequest
from .policies import SEGMENT, PolicyConfig, make_read_policy
from .workers import map_ordered

EOS_TOKENS = frozenset({"</s>", "<eos>"})

READ_EVENT = "READ"
WRITE_EVENT = "WRITE"


@dataclass(frozen=True)
class SourceSentence:
    """A source-only stream item; SentencePair satisfies the same shape."""

    sid: str
    src: TokenSeq


def read_source_corpus(path: str | Path) -> list[SourceSentence]:
    """Read a source-side file (one tokenized sentence per line)."""
    out = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            raise ConfigError(f"{path}: empty sentence at line {i + 1}")
        out.append(SourceSentence(sid=str(i), src=as_tokens(line.split())))
    return out


@dataclass(frozen=True)
class TraceEvent:
    kind: str  # READ | WRITE
    token: str
    src_read_count: int  # source tokens read once this event is applied


@dataclass(frozen=True)
class DecodingTrace:
    sid: str
    events: tuple[TraceEvent, ...]
    hypothesis: TokenSeq
    g: tuple[int, ...]  # g[t] = source tokens read at the (t+1)-th write

    @property
    def src_len(self) -> int:
        return sum(1 for e in self.events if e.kind == READ_EVENT)


def build_trace(sid: str, events: Sequence[TraceEvent]) -> DecodingTrace:
    """Assemble and check a trace from its event list."""
    reads = 0
    hyp: list[str] = []
    g: list[int] = []
    for ev in events:
        if ev.kind == READ_EVENT:
            reads += 1
            if ev.src_read_count != reads:
                raise ConfigError(
                    f"trace {sid}: READ #{reads} carries src_read_count {ev.src_read_count}"
                )
        elif ev.kind == WRITE_EVENT:
            if ev.src_read_count != reads:
                raise ConfigError(
                    f"trace {sid}: WRITE at read count {reads} carries {ev.src_read_count}"
                )
            hyp.append(ev.token)
            g.append(reads)
        else:
            raise ConfigError(f"trace {sid}: unknown event kind {ev.kind!r}")
    return DecodingTrace(sid=sid, events=tuple(events), hypothesis=tuple(hyp), g=tuple(g))


@dataclass(frozen=True)
class WritePolicyConfig:
    """WRITE side: which model to call and how.

    kind "prefix_model" is a model trained on prefix pairs (m > 0 waits for
    up to m extra source tokens per segment and appends them after "[fw]");
    "full_sentence_model" keeps the same call shape with m = 0 against a
    model trained only on full sentences.
    """

    kind: str
    endpoint: object
    m: int = 0
    beam_size: int = DEFAULT_BEAM

    def __post_init__(self):
        if self.kind not in ("prefix_model", "full_sentence_model"):
            raise ConfigError(f"unknown write policy kind {self.kind!r}")
        if self.m < 0:
            raise ConfigError(f"m must be >= 0, got {self.m}")
        if self.m > 0 and self.kind != "prefix_model":
            raise ConfigError("look-ahead m > 0 requires the prefix model")


def _strip_eos(tokens: TokenSeq) -> TokenSeq:
    """Cut the continuation at the model's first end-of-sequence marker."""
    for i, tok in enumerate(tokens):
        if tok in EOS_TOKENS:
            return tokens[:i]
    return tokens


def simulate_sentence(
    sid: str, src: TokenSeq, read: PolicyConfig, write: WritePolicyConfig
) -> DecodingTrace:
    """Decode one sentence in streaming mode and record its trace."""
    if not src:
        raise ConfigError(f"sentence {sid}: empty source")
    if read.kind == "wait_k":
        return _simulate_wait_k(sid, src, read.k, write)
    return _simulate_segmented(sid, src, read, write)


def _translate(write: WritePolicyConfig, model_src: TokenSeq, committed: TokenSeq) -> TokenSeq:
    cands = write.endpoint.translate(
        TranslateRequest(src=model_src, forced_tgt=committed, beam_size=write.beam_size)
    )
    return _strip_eos(cands.best[len(committed) :])


def _simulate_segmented(
    sid: str, src: TokenSeq, read: PolicyConfig, write: WritePolicyConfig
) -> DecodingTrace:
    T = len(src)
    policy = make_read_policy(read, sid)
    events: list[TraceEvent] = []
    committed: TokenSeq = ()
    read_count = 0  # tokens physically read (>= scan position under look-ahead)

    def read_up_to(n: int) -> None:
        nonlocal read_count
        while read_count < n:
            events.append(TraceEvent(READ_EVENT, src[read_count], read_count + 1))
            read_count += 1

    for pos in range(1, T + 1):
        read_up_to(pos)
        decision = policy.decide(src[:pos], committed, pos == T)
        if decision.action != SEGMENT and pos < T:
            continue
        # boundary at pos: look ahead for up to m more tokens, then decode
        if write.m > 0 and pos < T:
            extra = min(write.m, T - pos)
            read_up_to(pos + extra)
            model_src = src[:pos] + (FW_TOKEN,) + src[pos : pos + extra]
        else:
            model_src = src[:pos]
        continuation = _translate(write, model_src, committed)
        if not continuation:
            continue  # model declined to commit at this boundary
        for tok in continuation:
            events.append(TraceEvent(WRITE_EVENT, tok, read_count))
        committed = committed + continuation
    return build_trace(sid, events)


def _simulate_wait_k(sid: str, src: TokenSeq, k: int, write: WritePolicyConfig) -> DecodingTrace:
    """Classic wait-k: k reads up front, then one write per read, then flush.

    Look-ahead (write.m) does not apply to this schedule; the model sees the
    plain prefix read so far.
    """
    T = len(src)
    events: list[TraceEvent] = []
    committed: TokenSeq = ()
    read_count = 0

    def read_one() -> None:
        nonlocal read_count
        events.append(TraceEvent(READ_EVENT, src[read_count], read_count + 1))
        read_count += 1

    for _ in range(min(k, T)):
        read_one()
    while True:
        continuation = _translate(write, src[:read_count], committed)
        if read_count < T:
            if continuation:
                tok = continuation[0]
                events.append(TraceEvent(WRITE_EVENT, tok, read_count))
                committed = committed + (tok,)
            read_one()
        else:
            for tok in continuation:
                events.append(TraceEvent(WRITE_EVENT, tok, read_count))
            committed = committed + continuation
            break
    return build_trace(sid, events)


def render_trace(trace: DecodingTrace) -> str:
    """Render READ runs as WAIT*i (bare WAIT for a single read) between writes."""
    parts: list[str] = []
    run = 0
    for ev in trace.events:
        if ev.kind == READ_EVENT:
            run += 1
            continue
        if run:
            parts.append("WAIT" if run == 1 else f"WAIT*{run}")
            run = 0
        parts.append(ev.token)
    if run:
        parts.append("WAIT" if run == 1 else f"WAIT*{run}")
    return " ".join(parts)


@dataclass
class SimulationReport:
    records: list[dict] = field(default_factory=list)

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.records if r["status"] == "error")

    @property
    def n_ok(self) -> int:
        return len(self.records) - self.n_failed

    def summary(self) -> dict:
        return {"sentences": len(self.records), "ok": self.n_ok, "failed": self.n_failed}

    def write(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for rec in self.records:
                f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def simulate_corpus(
    corpus: Sequence[SentencePair],
    read: PolicyConfig,
    write: WritePolicyConfig,
    workers: int = 1,
) -> tuple[list[DecodingTrace], SimulationReport]:
    """Simulate every sentence; order-preserving, failures isolated per sentence."""

    def work(pair: SentencePair) -> DecodingTrace:
        return simulate_sentence(pair.sid, pair.src, read, write)

    results = map_ordered(work, corpus, workers)
    traces: list[DecodingTrace] = []
    report = SimulationReport()
    for pair, (trace, error) in zip(corpus, results):
        if error is not None:
            report.records.append({"sid": pair.sid, "status": "error", "detail": str(error)})
            continue
        detail = "" if trace.hypothesis else "empty_hypothesis"
        report.records.append({"sid": pair.sid, "status": "ok", "detail": detail})
        traces.append(trace)
    return traces, report


def write_traces(traces: Sequence[DecodingTrace], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for tr in traces:
            f.write(
                json.dumps(
                    {
                        "sid": tr.sid,
                        "events": [
                            {"k": "R" if e.kind == READ_EVENT else "W", "tok": e.token}
                            for e in tr.events
                        ],
                        "g": list(tr.g),
                        "hyp": list(tr.hypothesis),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_traces(path: str | Path) -> list[DecodingTrace]:
    """Load traces, recomputing per-event read counts from the event order."""
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            events = []
            reads = 0
            for ev in obj["events"]:
                if ev["k"] == "R":
                    reads += 1
                    events.append(TraceEvent(READ_EVENT, ev["tok"], reads))
                else:
                    events.append(TraceEvent(WRITE_EVENT, ev["tok"], reads))
            trace = build_trace(str(obj["sid"]), events)
            if list(trace.g) != [int(x) for x in obj["g"]] or list(trace.hypothesis) != list(
                as_tokens(obj["hyp"])
            ):
                raise ConfigError(f"trace {obj['sid']}: stored g/hyp disagree with events")
            out.append(trace)
    return out


def write_rendered(traces: Sequence[DecodingTrace], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for tr in traces:
            f.write(f"{tr.sid}\t{render_trace(tr)}\n")
