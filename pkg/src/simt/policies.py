"""READ policies: when to hand the growing source prefix to the WRITE policy.

A policy instance is created per sentence (some keep per-sentence state)
and consulted once per streaming source token. Exhausted input always
forces a final SEGMENT so the full sentence gets translated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import TokenSeq
from .errors import ConfigError, GatewayError, PolicyError

READ = "READ"
SEGMENT = "SEGMENT"

# sentence-internal punctuation for the heuristic segmenter
DEFAULT_PUNCTUATION = frozenset({",", ";", ":", "、", "，", "；", "："})

POLICY_KINDS = ("wait_k", "threshold", "scripted", "heuristic")


@dataclass(frozen=True)
class ReadDecision:
    action: str
    score: float | None = None  # segmenter confidence, scoring policies only


@dataclass(frozen=True)
class PolicyConfig:
    """Parameters for one READ policy kind; only that kind's fields apply."""

    kind: str
    k: int = 1
    delta: float = 0.5
    scripts: dict[str, tuple[int, ...]] | None = None
    classifier: object | None = None
    punctuation: frozenset[str] = DEFAULT_PUNCTUATION
    span: int = 4

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError(f"unknown read policy kind {self.kind!r}")
        if self.kind == "wait_k" and self.k < 1:
            raise ConfigError(f"wait_k needs k >= 1, got {self.k}")
        if self.kind == "threshold":
            if not 0.0 <= self.delta <= 1.0:
                raise ConfigError(f"delta must lie in [0,1], got {self.delta}")
            if self.classifier is None:
                raise ConfigError("threshold policy needs a classifier")
        if self.kind == "scripted" and self.scripts is None:
            raise ConfigError("scripted policy needs per-sentence boundary lists")
        if self.kind == "heuristic" and self.span < 1:
            raise ConfigError(f"heuristic span must be >= 1, got {self.span}")


class ScriptedClassifier:
    """Replays fixed boundary scores; the stand-in for a trained segmenter.

    scores may be one flat list applied to every sentence (position p uses
    scores[p-1], 0.0 past the end) or a per-sid mapping of such lists.
    """

    def __init__(self, scores: Sequence[float] | dict[str, Sequence[float]]):
        self._scores = scores

    def score(self, sid: str, src_so_far: Sequence[str]) -> float:
        if isinstance(self._scores, dict):
            stream = self._scores.get(sid, ())
        else:
            stream = self._scores
        pos = len(src_so_far) - 1
        return float(stream[pos]) if 0 <= pos < len(stream) else 0.0


class WireClassifier:
    """Asks an external endpoint for P(boundary | source prefix)."""

    def __init__(self, endpoint):
        self._endpoint = endpoint

    def score(self, sid: str, src_so_far: Sequence[str]) -> float:
        try:
            return self._endpoint.score_boundary(src_so_far)
        except GatewayError as exc:
            raise PolicyError(f"boundary classifier failed: {exc}") from exc


class WaitKPolicy:
    """Fixed schedule: read k tokens, then one write per subsequent read.

    The simulator emits exactly one target token per SEGMENT under this
    policy, so the committed-target length counts completed write bursts.
    """

    def __init__(self, k: int):
        self.k = k

    def decide(self, src_so_far: TokenSeq, tgt_so_far: TokenSeq, source_exhausted: bool) -> ReadDecision:
        if source_exhausted or len(src_so_far) >= self.k + len(tgt_so_far):
            return ReadDecision(SEGMENT)
        return ReadDecision(READ)


class ThresholdPolicy:
    """Segment when the classifier's boundary confidence reaches delta."""

    def __init__(self, sid: str, classifier, delta: float):
        self.sid = sid
        self.classifier = classifier
        self.delta = delta

    def decide(self, src_so_far: TokenSeq, tgt_so_far: TokenSeq, source_exhausted: bool) -> ReadDecision:
        if source_exhausted:
            return ReadDecision(SEGMENT)
        p = self.classifier.score(self.sid, src_so_far)
        return ReadDecision(SEGMENT if p >= self.delta else READ, score=p)


class ScriptedPolicy:
    """Segment at a fixed set of boundary positions."""

    def __init__(self, boundaries: Sequence[int]):
        self.boundaries = frozenset(boundaries)

    def decide(self, src_so_far: TokenSeq, tgt_so_far: TokenSeq, source_exhausted: bool) -> ReadDecision:
        if source_exhausted or len(src_so_far) in self.boundaries:
            return ReadDecision(SEGMENT)
        return ReadDecision(READ)


class HeuristicPolicy:
    """Deterministic segmenter: break on punctuation or a maximum span."""

    def __init__(self, punctuation: frozenset[str], span: int):
        self.punctuation = punctuation
        self.span = span
        self._last_segment = 0

    def decide(self, src_so_far: TokenSeq, tgt_so_far: TokenSeq, source_exhausted: bool) -> ReadDecision:
        pos = len(src_so_far)
        if (
            source_exhausted
            or src_so_far[-1] in self.punctuation
            or pos - self._last_segment >= self.span
        ):
            self._last_segment = pos
            return ReadDecision(SEGMENT)
        return ReadDecision(READ)


def make_read_policy(config: PolicyConfig, sid: str):
    """Instantiate the per-sentence policy for one decoding stream."""
    if config.kind == "wait_k":
        return WaitKPolicy(config.k)
    if config.kind == "threshold":
        return ThresholdPolicy(sid, config.classifier, config.delta)
    if config.kind == "scripted":
        return ScriptedPolicy(config.scripts.get(sid, ()))
    if config.kind == "heuristic":
        return HeuristicPolicy(config.punctuation, config.span)
    raise ConfigError(f"unknown read policy kind {config.kind!r}")


def decide(policy, src_so_far: TokenSeq, tgt_so_far: TokenSeq, source_exhausted: bool) -> ReadDecision:
    """Functional alias for policy.decide(...)."""
    return policy.decide(src_so_far, tgt_so_far, source_exhausted)


def read_scripts(path: str | Path) -> dict[str, tuple[int, ...]]:
    """Load a scripted-policy file: one {"sid", "boundaries"} object per line."""
    scripts: dict[str, tuple[int, ...]] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            scripts[str(obj["sid"])] = tuple(int(b) for b in obj["boundaries"])
    return scripts


def write_scripts(scripts: dict[str, Sequence[int]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for sid, bounds in scripts.items():
            f.write(json.dumps({"sid": sid, "boundaries": sorted(bounds)}, ensure_ascii=False) + "\n")
