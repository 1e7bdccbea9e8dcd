"""Pseudo prefix-pair generation from full-sentence translation models.

For each source sentence the extractor walks the boundaries left to right,
force-decodes the committed target prefix, and keeps a boundary whenever
the forced continuation is a prefix of one of the full sentence's top beam
candidates. The refined variant additionally records the next m source
tokens as future words, exported after a reserved "[fw]" separator.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import FW_TOKEN, SentencePair, TokenSeq, as_tokens
from .errors import ConfigError, ExportError
from .gateway import DEFAULT_BEAM, TranslateRequest, is_prefix_of_candidates
from .workers import map_ordered

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrefixPair:
    """A pseudo training sample: source prefix (plus optional future words)
    and the target prefix its forced decode committed.

    t is the 1-based count of source tokens consumed; fw holds the future
    words themselves, never the "[fw]" separator.
    """

    sid: str
    t: int
    src_prefix: TokenSeq
    fw: TokenSeq
    tgt_prefix: TokenSeq

    def __post_init__(self):
        if self.t < 1 or len(self.src_prefix) != self.t:
            raise ConfigError(f"prefix pair {self.sid}: t={self.t} vs {len(self.src_prefix)} tokens")
        if not self.tgt_prefix:
            raise ConfigError(f"prefix pair {self.sid} t={self.t}: empty target prefix")

    @property
    def export_src(self) -> TokenSeq:
        return self.src_prefix + ((FW_TOKEN,) + self.fw if self.fw else ())


@dataclass(frozen=True)
class ExtractionConfig:
    beam_size: int = DEFAULT_BEAM
    m: int = 2  # future words; 0 selects the basic variant
    include_full_pair: bool = False
    max_source_len: int = 256  # skip guard applied by extract_corpus

    def __post_init__(self):
        if self.beam_size < 1:
            raise ConfigError(f"beam_size must be >= 1, got {self.beam_size}")
        if self.m < 0:
            raise ConfigError(f"m must be >= 0, got {self.m}")
        if self.max_source_len < 1:
            raise ConfigError(f"max_source_len must be >= 1, got {self.max_source_len}")


def extract_prefix_pairs(
    pair: SentencePair, endpoint, cfg: ExtractionConfig
) -> list[PrefixPair]:
    """Extract all accepted prefix pairs from one sentence.

    Walks boundaries t = 1..T; the committed target grows monotonically via
    forced decoding, so each accepted pair extends the previous one.
    Boundaries whose forced decode adds no new tokens are skipped without
    advancing the committed prefix. The degenerate pair at t = T that
    merely repeats the full-sentence translation is kept only on request.
    """
    src = pair.src
    T = len(src)
    full = endpoint.translate(
        TranslateRequest(src=src, forced_tgt=(), beam_size=cfg.beam_size)
    )
    committed: TokenSeq = ()
    out: list[PrefixPair] = []
    for t in range(1, T + 1):
        step = endpoint.translate(
            TranslateRequest(src=src[:t], forced_tgt=committed, beam_size=cfg.beam_size)
        )
        hyp = step.best
        if not hyp:
            log.warning("sentence %s: empty forced decode at t=%d, skipping boundary", pair.sid, t)
            continue
        if hyp == committed:
            continue
        if not is_prefix_of_candidates(hyp, full):
            continue
        if t == T and hyp == full.best and not cfg.include_full_pair:
            continue
        fw = src[t : t + cfg.m] if cfg.m > 0 else ()
        out.append(PrefixPair(sid=pair.sid, t=t, src_prefix=src[:t], fw=fw, tgt_prefix=hyp))
        committed = hyp
    return out


@dataclass
class SentenceRecord:
    sid: str
    status: str  # "ok" | "error"
    pairs: int = 0
    detail: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {"sid": self.sid, "status": self.status, "pairs": self.pairs, "detail": self.detail},
            ensure_ascii=False,
        )


@dataclass
class ExtractionReport:
    records: list[SentenceRecord] = field(default_factory=list)

    @property
    def n_sentences(self) -> int:
        return len(self.records)

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.records if r.status == "error")

    @property
    def n_ok(self) -> int:
        return self.n_sentences - self.n_failed

    @property
    def pairs_histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(r.pairs for r in self.records if r.status == "ok").items()))

    @property
    def mean_pairs(self) -> float:
        ok = [r.pairs for r in self.records if r.status == "ok"]
        return sum(ok) / len(ok) if ok else 0.0

    @property
    def last_completed_sid(self) -> str | None:
        """Sid up to which the corpus prefix completed cleanly (resume point)."""
        last = None
        for rec in self.records:
            if rec.status != "ok":
                break
            last = rec.sid
        return last

    def summary(self) -> dict:
        return {
            "sentences": self.n_sentences,
            "ok": self.n_ok,
            "failed": self.n_failed,
            "pairs_histogram": {str(k): v for k, v in self.pairs_histogram.items()},
            "mean_pairs": self.mean_pairs,
            "last_completed_sid": self.last_completed_sid,
        }

    def write(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for rec in self.records:
                f.write(rec.to_json() + "\n")


def extract_corpus(
    corpus: Sequence[SentencePair], endpoint, cfg: ExtractionConfig, workers: int = 1
) -> tuple[list[PrefixPair], ExtractionReport]:
    """Extract over a corpus with per-sentence error isolation.

    Output order follows the corpus regardless of worker count; endpoint
    failures become error records, over-long sentences are skipped.
    """

    def work(pair: SentencePair) -> list[PrefixPair] | None:
        if len(pair.src) > cfg.max_source_len:
            return None
        return extract_prefix_pairs(pair, endpoint, cfg)

    results = map_ordered(work, corpus, workers)
    pairs: list[PrefixPair] = []
    report = ExtractionReport()
    for sent, (value, error) in zip(corpus, results):
        if error is not None:
            report.records.append(SentenceRecord(sent.sid, "error", 0, str(error)))
        elif value is None:
            report.records.append(
                SentenceRecord(
                    sent.sid,
                    "ok",
                    0,
                    f"skipped: source length {len(sent.src)} exceeds max_source_len {cfg.max_source_len}",
                )
            )
        else:
            report.records.append(SentenceRecord(sent.sid, "ok", len(value)))
            pairs.extend(value)
    return pairs, report


def write_prefix_pairs(pairs: Sequence[PrefixPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(
                json.dumps(
                    {
                        "sid": p.sid,
                        "t": p.t,
                        "src": list(p.src_prefix),
                        "fw": list(p.fw),
                        "tgt": list(p.tgt_prefix),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_prefix_pairs(path: str | Path) -> list[PrefixPair]:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            pairs.append(
                PrefixPair(
                    sid=str(obj["sid"]),
                    t=int(obj["t"]),
                    src_prefix=as_tokens(obj["src"]),
                    fw=as_tokens(obj["fw"]),
                    tgt_prefix=as_tokens(obj["tgt"]),
                )
            )
    return pairs


@dataclass(frozen=True)
class ExportReport:
    prefix_rows: int
    original_rows: int
    duplicates_dropped: int

    @property
    def total_rows(self) -> int:
        return self.prefix_rows + self.original_rows


def export_joint_corpus(
    pairs: Sequence[PrefixPair],
    originals: Sequence[SentencePair],
    out_src: str | Path,
    out_tgt: str | Path,
    dedupe: bool = False,
) -> ExportReport:
    """Write the joint training corpus: pseudo prefix rows then originals.

    Each prefix pair renders its future words after the "[fw]" separator;
    with dedupe, exact duplicate (source line, target line) rows are
    emitted once, first occurrence wins.
    """
    rows: list[tuple[str, str, bool]] = []
    for p in pairs:
        rows.append((" ".join(p.export_src), " ".join(p.tgt_prefix), True))
    for o in originals:
        rows.append((" ".join(o.src), " ".join(o.tgt), False))
    seen: set[tuple[str, str]] = set()
    n_prefix = n_orig = n_dropped = 0
    try:
        with open(out_src, "w", encoding="utf-8") as fs, open(out_tgt, "w", encoding="utf-8") as ft:
            for src_line, tgt_line, is_prefix_row in rows:
                if dedupe:
                    key = (src_line, tgt_line)
                    if key in seen:
                        n_dropped += 1
                        continue
                    seen.add(key)
                fs.write(src_line + "\n")
                ft.write(tgt_line + "\n")
                if is_prefix_row:
                    n_prefix += 1
                else:
                    n_orig += 1
    except OSError as exc:
        raise ExportError(f"cannot write joint corpus to {out_src} / {out_tgt}: {exc}") from exc
    return ExportReport(prefix_rows=n_prefix, original_rows=n_orig, duplicates_dropped=n_dropped)
