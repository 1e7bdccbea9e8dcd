"""Quality and latency scoring: corpus BLEU-4 and Average Lagging.

BLEU pools clipped n-gram counts over the corpus (n = 1..4), applies the
standard brevity penalty, and floors a zero precision at a small epsilon
instead of smoothing, so hand-computed examples stay exact. An order with
no candidate n-grams at all (hypotheses shorter than n) contributes a
neutral precision of 1. Average Lagging follows the established
streaming-translation formula over the per-write read counts g.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import TokenSeq
from .errors import AlignmentError, MetricInputError
from .simulate import DecodingTrace

BLEU_ORDER = 4
DEFAULT_FLOOR = 1e-16

_PUNCT_RE = re.compile(r"([^\w\s])", re.UNICODE)


@dataclass(frozen=True)
class BleuScore:
    score: float  # 0..100
    precisions: tuple[float, float, float, float]
    brevity_penalty: float
    hyp_len: int
    ref_len: int
    empty_hyp_warning: bool = False


@dataclass(frozen=True)
class LatencyScore:
    al: float  # units: source tokens
    tau: int  # first write index (1-based) at which the source was fully read
    r: float  # target/source length ratio


@dataclass(frozen=True)
class QualityLatencyPoint:
    param_name: str
    param_value: float
    bleu: float
    mean_al: float
    n_sentences: int

    def __post_init__(self):
        if self.n_sentences <= 0:
            raise MetricInputError("n_sentences must be positive")


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _split_punctuation(tokens: Sequence[str]) -> list[str]:
    return _PUNCT_RE.sub(r" \1 ", " ".join(tokens)).split()


def corpus_bleu(
    hypotheses: Sequence[TokenSeq],
    references: Sequence[TokenSeq],
    floor: float = DEFAULT_FLOOR,
    split_punctuation: bool = False,
) -> BleuScore:
    """Corpus-level case-sensitive BLEU-4 over token sequences as given."""
    if len(hypotheses) != len(references):
        raise MetricInputError(
            f"hypotheses/references length mismatch: {len(hypotheses)} vs {len(references)}"
        )
    if not references:
        raise MetricInputError("references must be non-empty")
    if split_punctuation:
        hypotheses = [tuple(_split_punctuation(h)) for h in hypotheses]
        references = [tuple(_split_punctuation(r)) for r in references]

    hyp_len = sum(len(h) for h in hypotheses)
    ref_len = sum(len(r) for r in references)
    if hyp_len == 0:
        return BleuScore(0.0, (0.0,) * 4, 1.0, 0, ref_len, empty_hyp_warning=True)

    matches = [0] * BLEU_ORDER
    totals = [0] * BLEU_ORDER
    for hyp, ref in zip(hypotheses, references):
        for n in range(1, BLEU_ORDER + 1):
            hyp_grams = _ngrams(hyp, n)
            if not hyp_grams:
                continue
            ref_grams = _ngrams(ref, n)
            totals[n - 1] += sum(hyp_grams.values())
            matches[n - 1] += sum(min(c, ref_grams[g]) for g, c in hyp_grams.items())

    precisions = []
    for num, den in zip(matches, totals):
        if den == 0:
            precisions.append(1.0)  # no candidate n-grams at this order
        elif num == 0:
            precisions.append(floor)
        else:
            precisions.append(num / den)
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    geo = math.exp(sum(math.log(p) for p in precisions) / BLEU_ORDER)
    return BleuScore(
        score=100.0 * bp * geo,
        precisions=tuple(precisions),
        brevity_penalty=bp,
        hyp_len=hyp_len,
        ref_len=ref_len,
    )


def average_lagging(g: Sequence[int], src_len: int, hyp_len: int) -> LatencyScore:
    """Average Lagging over one sentence.

    r = hyp_len / src_len; tau is the first write index at which the whole
    source had been read (hyp_len if never); AL averages g[t] - (t-1)/r
    over t = 1..tau.
    """
    if src_len < 1:
        raise MetricInputError(f"src_len must be >= 1, got {src_len}")
    if hyp_len < 1 or len(g) != hyp_len:
        raise MetricInputError(f"g must have hyp_len >= 1 entries, got {len(g)} vs {hyp_len}")
    if any(b < a for a, b in zip(g, g[1:])):
        raise MetricInputError(f"g must be non-decreasing, got {list(g)}")
    if g[-1] > src_len or g[0] < 0:
        raise MetricInputError(f"g out of range for src_len {src_len}: {list(g)}")
    r = hyp_len / src_len
    tau = next((t for t in range(1, hyp_len + 1) if g[t - 1] == src_len), hyp_len)
    al = sum(g[t - 1] - (t - 1) / r for t in range(1, tau + 1)) / tau
    return LatencyScore(al=al, tau=tau, r=r)


def trace_latency(trace: DecodingTrace) -> LatencyScore:
    return average_lagging(trace.g, trace.src_len, len(trace.hypothesis))


def score_traces(
    traces: Sequence[DecodingTrace], references: dict[str, TokenSeq]
) -> tuple[BleuScore, list[tuple[str, float | None]], float]:
    """Score one run: corpus BLEU plus per-sentence and mean AL.

    References are aligned by sid; a trace without a reference is an
    alignment error. Sentences with an empty hypothesis still count for
    BLEU but carry no AL (they never wrote anything).
    """
    missing = [tr.sid for tr in traces if tr.sid not in references]
    if missing:
        raise AlignmentError(f"references missing for sids: {', '.join(missing)}", missing)
    hyps = [tr.hypothesis for tr in traces]
    refs = [references[tr.sid] for tr in traces]
    bleu = corpus_bleu(hyps, refs)
    per_sentence: list[tuple[str, float | None]] = []
    als: list[float] = []
    for tr in traces:
        if tr.hypothesis:
            al = trace_latency(tr).al
            per_sentence.append((tr.sid, al))
            als.append(al)
        else:
            per_sentence.append((tr.sid, None))
    mean_al = sum(als) / len(als) if als else 0.0
    return bleu, per_sentence, mean_al


def sweep(
    param_name: str,
    entries: Sequence[tuple[float, Sequence[DecodingTrace], dict[str, TokenSeq]]],
) -> list[QualityLatencyPoint]:
    """Aggregate one quality-latency point per parameter value, sorted."""
    points = []
    for value, traces, references in entries:
        bleu, _, mean_al = score_traces(list(traces), references)
        points.append(
            QualityLatencyPoint(
                param_name=param_name,
                param_value=float(value),
                bleu=bleu.score,
                mean_al=mean_al,
                n_sentences=len(traces),
            )
        )
    return sorted(points, key=lambda p: p.param_value)


def write_sweep_csv(points: Sequence[QualityLatencyPoint], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("param_name,param_value,bleu,mean_al,n_sentences\n")
        for p in points:
            f.write(
                f"{p.param_name},{p.param_value:.4f},{p.bleu:.4f},{p.mean_al:.4f},{p.n_sentences}\n"
            )


def write_score_report(
    per_sentence: Sequence[tuple[str, float | None]],
    bleu: BleuScore,
    mean_al: float,
    path: str | Path,
) -> None:
    """Line-delimited per-sentence AL records followed by a corpus summary."""
    with open(path, "w", encoding="utf-8") as f:
        for sid, al in per_sentence:
            f.write(json.dumps({"sid": sid, "al": al}, ensure_ascii=False) + "\n")
        f.write(
            json.dumps(
                {
                    "summary": {
                        "bleu": round(bleu.score, 4),
                        "brevity_penalty": round(bleu.brevity_penalty, 6),
                        "mean_al": round(mean_al, 4),
                        "n_sentences": len(per_sentence),
                        "al_granularity": "trace tokens as given",
                    }
                },
                ensure_ascii=False,
            )
            + "\n"
        )
