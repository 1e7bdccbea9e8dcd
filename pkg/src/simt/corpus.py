"""Tokenized sentences, parallel corpora, and the deterministic toy language.

Tokens are whitespace-delimited strings; anything smaller (BPE, morphology)
is preprocessing outside this package. The toy language pairs a small
source vocabulary with fixed target expansions, plus "swap marker" tokens
that reorder with their right neighbour so that prefix translation has
genuine rejection cases.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, CorpusShapeError, MalformedSentenceError, OOVError

TokenSeq = tuple[str, ...]

# Reserved separator between a source prefix and its appended future words.
# It never appears in a raw corpus; only extractor output may contain it.
FW_TOKEN = "[fw]"

# Placeholder emitted for a swap marker whose partner has not arrived yet.
# It is not a translation of anything, so a prefix translation containing it
# can never be a prefix of the full translation.
PENDING_TOKEN = "‹pend›"  # ‹pend›


def as_tokens(tokens: Iterable[str], *, allow_fw: bool = True) -> TokenSeq:
    """Validate and freeze a token sequence.

    Rejects empty tokens, tokens with internal whitespace, and (when
    allow_fw is false, i.e. raw corpus text) the reserved "[fw]" token.
    """
    out = tuple(tokens)
    for tok in out:
        if not isinstance(tok, str) or not tok:
            raise MalformedSentenceError(f"empty or non-string token in {out!r}")
        if any(c.isspace() for c in tok):
            raise MalformedSentenceError(f"token {tok!r} contains whitespace")
        if not allow_fw and tok == FW_TOKEN:
            raise MalformedSentenceError(
                f"reserved token {FW_TOKEN!r} is not allowed in raw corpus text"
            )
    return out


@dataclass(frozen=True)
class SentencePair:
    """One parallel sentence: sid is unique within a corpus."""

    sid: str
    src: TokenSeq
    tgt: TokenSeq

    def __post_init__(self):
        if not self.src or not self.tgt:
            raise MalformedSentenceError(f"sentence {self.sid!r}: empty side")


@dataclass(frozen=True)
class ToyLexicon:
    """Deterministic token-to-tokens dictionary driving the toy language.

    entries map a source token to its target expansion (fertility >= 1).
    swap_markers reorder with the following token: "s b" translates as
    entries[b] ++ entries[s]. synonym_slots give one alternative target
    token per source token, used by the toy endpoint's variant beam.
    """

    entries: dict[str, TokenSeq]
    swap_markers: frozenset[str] = frozenset()
    synonym_slots: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.entries:
            raise ConfigError("toy lexicon has no entries")
        for tok, exp in self.entries.items():
            if not exp:
                raise ConfigError(f"lexicon entry {tok!r} has empty expansion")
        for m in self.swap_markers:
            if m not in self.entries:
                raise ConfigError(f"swap marker {m!r} has no lexicon entry")
        for slot in self.synonym_slots:
            if slot not in self.entries:
                raise ConfigError(f"synonym slot {slot!r} not present in entries")

    @property
    def tokens(self) -> list[str]:
        return sorted(self.entries)

    @property
    def plain_tokens(self) -> list[str]:
        return sorted(t for t in self.entries if t not in self.swap_markers)


def load_lexicon(path: str | Path) -> ToyLexicon:
    """Load a toy lexicon from its JSON file format."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load lexicon {path}: {exc}") from exc
    if not isinstance(data, dict) or "entries" not in data:
        raise ConfigError(f"lexicon {path}: expected an object with 'entries'")
    entries = {
        tok: as_tokens(exp) for tok, exp in data["entries"].items()
    }
    return ToyLexicon(
        entries=entries,
        swap_markers=frozenset(data.get("swap_markers", [])),
        synonym_slots=dict(data.get("synonym_slots", {})),
    )


def save_lexicon(lexicon: ToyLexicon, path: str | Path) -> None:
    data = {
        "entries": {tok: list(exp) for tok, exp in lexicon.entries.items()},
        "swap_markers": sorted(lexicon.swap_markers),
        "synonym_slots": dict(lexicon.synonym_slots),
    }
    Path(path).write_text(json.dumps(data, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def read_parallel_corpus(src_path: str | Path, tgt_path: str | Path) -> list[SentencePair]:
    """Read paired one-sentence-per-line files into SentencePairs.

    sid is the zero-based line index rendered as a decimal string.
    """
    src_lines = Path(src_path).read_text(encoding="utf-8").splitlines()
    tgt_lines = Path(tgt_path).read_text(encoding="utf-8").splitlines()
    if len(src_lines) != len(tgt_lines):
        raise CorpusShapeError(
            f"line count mismatch: {src_path} has {len(src_lines)} lines, "
            f"{tgt_path} has {len(tgt_lines)}"
        )
    pairs = []
    for i, (src_line, tgt_line) in enumerate(zip(src_lines, tgt_lines)):
        if not src_line.strip() or not tgt_line.strip():
            raise MalformedSentenceError(f"empty sentence at line {i + 1}")
        pairs.append(
            SentencePair(
                sid=str(i),
                src=as_tokens(src_line.split(), allow_fw=False),
                tgt=as_tokens(tgt_line.split(), allow_fw=False),
            )
        )
    return pairs


def write_parallel_corpus(
    pairs: Sequence[SentencePair], src_path: str | Path, tgt_path: str | Path
) -> None:
    """Write pairs back to paired plain-text files (round-trips with read)."""
    with open(src_path, "w", encoding="utf-8") as fs, open(tgt_path, "w", encoding="utf-8") as ft:
        for pair in pairs:
            fs.write(" ".join(pair.src) + "\n")
            ft.write(" ".join(pair.tgt) + "\n")


def toy_units(lexicon: ToyLexicon, src: Sequence[str]) -> list[tuple[TokenSeq, TokenSeq]]:
    """Split a source into translation units: (consumed tokens, output tokens).

    A non-marker token is one unit emitting its expansion. A swap marker
    consumes itself and the following token, emitting the follower's
    expansion before its own. A trailing marker with no follower emits the
    pending placeholder (prefix inputs only).
    """
    units: list[tuple[TokenSeq, TokenSeq]] = []
    i = 0
    while i < len(src):
        tok = src[i]
        if tok not in lexicon.entries:
            raise OOVError(f"token {tok!r} not in lexicon")
        if tok in lexicon.swap_markers:
            if i + 1 < len(src):
                nxt = src[i + 1]
                if nxt not in lexicon.entries:
                    raise OOVError(f"token {nxt!r} not in lexicon")
                units.append(((tok, nxt), lexicon.entries[nxt] + lexicon.entries[tok]))
                i += 2
            else:
                units.append(((tok,), (PENDING_TOKEN,)))
                i += 1
        else:
            units.append(((tok,), lexicon.entries[tok]))
            i += 1
    return units


def toy_translate(lexicon: ToyLexicon, src: Sequence[str]) -> TokenSeq:
    """Reference translation of the toy language (prefix inputs allowed)."""
    out: list[str] = []
    for _, emitted in toy_units(lexicon, src):
        out.extend(emitted)
    return tuple(out)


def generate_toy_corpus(
    lexicon: ToyLexicon, n_sentences: int, max_len: int, seed: int
) -> list[SentencePair]:
    """Generate a deterministic toy corpus.

    Sources are random token sequences; a swap marker is always followed by
    a non-marker token and never ends a sentence. Targets are the reference
    toy translations.
    """
    if max_len < 1:
        raise ConfigError(f"max_len must be >= 1, got {max_len}")
    if n_sentences < 1:
        raise ConfigError(f"n_sentences must be >= 1, got {n_sentences}")
    vocab = lexicon.tokens
    plain = lexicon.plain_tokens
    if not plain:
        raise ConfigError("toy lexicon needs at least one non-marker token")
    rng = random.Random(seed)
    pairs = []
    for i in range(n_sentences):
        length = rng.randint(1, max_len)
        tokens: list[str] = []
        while len(tokens) < length:
            last_slot = len(tokens) == length - 1
            prev_is_marker = bool(tokens) and tokens[-1] in lexicon.swap_markers
            pool = plain if (last_slot or prev_is_marker) else vocab
            tokens.append(rng.choice(pool))
        src = tuple(tokens)
        pairs.append(SentencePair(sid=str(i), src=src, tgt=toy_translate(lexicon, src)))
    return pairs
