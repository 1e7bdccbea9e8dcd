import pytest

from simt import (
    ConfigError,
    CorpusShapeError,
    MalformedSentenceError,
    OOVError,
    SentencePair,
    ToyLexicon,
    generate_toy_corpus,
    load_lexicon,
    read_parallel_corpus,
    save_lexicon,
    toy_translate,
    write_parallel_corpus,
)
from simt.corpus import FW_TOKEN, PENDING_TOKEN, as_tokens


def write_corpus_files(tmp_path, src_lines, tgt_lines):
    src = tmp_path / "c.src"
    tgt = tmp_path / "c.tgt"
    src.write_text("\n".join(src_lines) + "\n", encoding="utf-8")
    tgt.write_text("\n".join(tgt_lines) + "\n", encoding="utf-8")
    return src, tgt


def test_read_parallel_corpus_basic(tmp_path):
    src, tgt = write_corpus_files(tmp_path, ["a b", "c"], ["A B", "C"])
    pairs = read_parallel_corpus(src, tgt)
    assert pairs == [
        SentencePair(sid="0", src=("a", "b"), tgt=("A", "B")),
        SentencePair(sid="1", src=("c",), tgt=("C",)),
    ]


def test_read_parallel_corpus_line_count_mismatch(tmp_path):
    src, tgt = write_corpus_files(tmp_path, ["a", "b"], ["A", "B", "C"])
    with pytest.raises(CorpusShapeError) as err:
        read_parallel_corpus(src, tgt)
    assert "2" in str(err.value) and "3" in str(err.value)


def test_read_parallel_corpus_empty_line(tmp_path):
    src, tgt = write_corpus_files(tmp_path, ["a", ""], ["A", "B"])
    with pytest.raises(MalformedSentenceError) as err:
        read_parallel_corpus(src, tgt)
    assert "2" in str(err.value)


def test_read_parallel_corpus_interpreter_example(tmp_path):
    src, tgt = write_corpus_files(
        tmp_path,
        ["牛顿 发现 了 牛顿 运动定律"],
        ["Newton discovered newton's laws of motion"],
    )
    [pair] = read_parallel_corpus(src, tgt)
    assert len(pair.src) == 5
    assert len(pair.tgt) == 6


def test_read_rejects_reserved_fw_token(tmp_path):
    src, tgt = write_corpus_files(tmp_path, [f"a {FW_TOKEN} b"], ["A B"])
    with pytest.raises(MalformedSentenceError):
        read_parallel_corpus(src, tgt)


def test_corpus_round_trip(tmp_path, lex_toy):
    pairs = generate_toy_corpus(lex_toy, n_sentences=50, max_len=9, seed=3)
    write_parallel_corpus(pairs, tmp_path / "r.src", tmp_path / "r.tgt")
    again = read_parallel_corpus(tmp_path / "r.src", tmp_path / "r.tgt")
    assert again == pairs


def test_as_tokens_rejects_whitespace():
    with pytest.raises(MalformedSentenceError):
        as_tokens(["a b"])
    with pytest.raises(MalformedSentenceError):
        as_tokens([""])


def test_toy_translate_monotone(lex_ab):
    assert toy_translate(lex_ab, ("a", "b")) == ("A", "B")


def test_toy_translate_swap():
    lex = ToyLexicon(entries={"s": ("S",), "b": ("B",)}, swap_markers=frozenset({"s"}))
    assert toy_translate(lex, ("s", "b")) == ("B", "S")


def test_toy_translate_fertility():
    lex = ToyLexicon(entries={"d": ("d1", "d2", "d3")})
    assert toy_translate(lex, ("d",)) == ("d1", "d2", "d3")


def test_toy_translate_trailing_marker_pends(lex_toy):
    assert toy_translate(lex_toy, ("a", "s")) == ("A", PENDING_TOKEN)


def test_toy_translate_oov(lex_ab):
    with pytest.raises(OOVError) as err:
        toy_translate(lex_ab, ("a", "zzz"))
    assert "zzz" in str(err.value)


def test_toy_translate_length_is_sum_of_fertilities(lex_toy):
    for pair in generate_toy_corpus(lex_toy, n_sentences=80, max_len=10, seed=11):
        expect = 0
        i = 0
        while i < len(pair.src):
            if pair.src[i] in lex_toy.swap_markers:
                expect += len(lex_toy.entries[pair.src[i]])
                expect += len(lex_toy.entries[pair.src[i + 1]])
                i += 2
            else:
                expect += len(lex_toy.entries[pair.src[i]])
                i += 1
        assert len(pair.tgt) == expect


def test_toy_translate_prefix_monotone_at_safe_boundaries(lex_toy):
    # a cut is safe unless it lands on a swap marker whose partner is still
    # unread; markers never end a generated sentence, so the only unsafe
    # boundaries are those where x_t itself is a marker
    for pair in generate_toy_corpus(lex_toy, n_sentences=60, max_len=10, seed=5):
        full = toy_translate(lex_toy, pair.src)
        for t in range(1, len(pair.src) + 1):
            if pair.src[t - 1] in lex_toy.swap_markers:
                continue
            prefix = toy_translate(lex_toy, pair.src[:t])
            assert full[: len(prefix)] == prefix, (pair.src, t)


def test_generate_single_token_fertility_one():
    lex = ToyLexicon(entries={"a": ("A",)})
    [pair] = generate_toy_corpus(lex, n_sentences=1, max_len=1, seed=0)
    assert pair.src == ("a",)
    assert pair.tgt == ("A",)


def test_generate_deterministic(lex_toy):
    one = generate_toy_corpus(lex_toy, n_sentences=40, max_len=8, seed=9)
    two = generate_toy_corpus(lex_toy, n_sentences=40, max_len=8, seed=9)
    assert one == two


def test_generate_never_ends_on_swap_marker(lex_toy):
    for pair in generate_toy_corpus(lex_toy, n_sentences=100, max_len=8, seed=7):
        assert pair.src[-1] not in lex_toy.swap_markers
        for i, tok in enumerate(pair.src[:-1]):
            if tok in lex_toy.swap_markers:
                assert pair.src[i + 1] not in lex_toy.swap_markers


def test_generate_empty_lexicon_is_config_error():
    with pytest.raises(ConfigError):
        ToyLexicon(entries={})


def test_lexicon_marker_without_entry():
    with pytest.raises(ConfigError):
        ToyLexicon(entries={"a": ("A",)}, swap_markers=frozenset({"s"}))


def test_lexicon_synonym_slot_must_exist():
    with pytest.raises(ConfigError):
        ToyLexicon(entries={"a": ("A",)}, synonym_slots={"b": "B2"})


def test_lexicon_json_round_trip(tmp_path, lex_toy):
    path = tmp_path / "lex.json"
    save_lexicon(lex_toy, path)
    loaded = load_lexicon(path)
    assert loaded.entries == lex_toy.entries
    assert loaded.swap_markers == lex_toy.swap_markers
    assert loaded.synonym_slots == lex_toy.synonym_slots
