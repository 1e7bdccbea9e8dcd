"""Brute-force reference for prefix-pair extraction on the toy language.

Deliberately independent of the extractor: it enumerates every boundary and
tests prefix-monotonicity directly against the full toy translation, with
no forced decoding and no candidate sets.
"""

from simt import PrefixPair, SentencePair, ToyLexicon, toy_translate


def brute_force_pairs(
    lexicon: ToyLexicon,
    pair: SentencePair,
    m: int = 0,
    include_full_pair: bool = False,
) -> list[PrefixPair]:
    full = toy_translate(lexicon, pair.src)
    T = len(pair.src)
    kept = []
    prev = None
    for t in range(1, T + 1):
        hyp = toy_translate(lexicon, pair.src[:t])
        if hyp == prev:
            continue
        if len(hyp) > len(full) or full[: len(hyp)] != hyp:
            continue
        if t == T and hyp == full and not include_full_pair:
            continue
        fw = pair.src[t : t + m] if m > 0 else ()
        kept.append(
            PrefixPair(sid=pair.sid, t=t, src_prefix=pair.src[:t], fw=fw, tgt_prefix=hyp)
        )
        prev = hyp
    return kept
