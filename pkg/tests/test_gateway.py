import json
import subprocess
import sys
import textwrap

import pytest

from conftest import TABLE_SCRIPT, ZH

from simt import (
    Candidate,
    CandidateSet,
    GatewayError,
    OOVError,
    ToyEndpoint,
    TranslateRequest,
    is_prefix_of_candidates,
)
from simt.corpus import FW_TOKEN, PENDING_TOKEN
from simt.gateway import ExternalEndpoint, endpoint_from_spec, is_prefix
from simt.testing import ScriptedEndpoint


def cand_set(*seqs, beam=10):
    return CandidateSet(
        tuple(Candidate(tuple(s), -float(i)) for i, s in enumerate(seqs)), beam
    )


def test_toy_translate_monotone(lex_ab):
    ep = ToyEndpoint(lex_ab)
    cs = ep.translate(TranslateRequest(src=("a", "b"), forced_tgt=(), beam_size=10))
    assert cs.best == ("A", "B")
    assert len(cs.candidates) == 1


def test_toy_forced_prefix_continuation(lex_ab):
    ep = ToyEndpoint(lex_ab)
    cs = ep.translate(TranslateRequest(src=("a", "b"), forced_tgt=("A",), beam_size=10))
    assert cs.best == ("A", "B")


def test_toy_best_effort_on_unreachable_forced(lex_ab):
    ep = ToyEndpoint(lex_ab)
    cs = ep.translate(TranslateRequest(src=("a", "b"), forced_tgt=("Z",), beam_size=10))
    assert cs.best == ("Z", "A", "B")
    cs = ep.translate(TranslateRequest(src=("a", "b"), forced_tgt=("A", "Z"), beam_size=10))
    assert cs.best == ("A", "Z", "B")


def test_toy_pending_forced_continues_from_swap_unit(lex_toy):
    # committed ("A", pend) cannot extend; the swap unit s b is retranslated
    ep = ToyEndpoint(lex_toy)
    cs = ep.translate(
        TranslateRequest(src=("a", "s", "b"), forced_tgt=("A", PENDING_TOKEN), beam_size=10)
    )
    assert cs.best == ("A", PENDING_TOKEN, "B", "S")


def test_toy_variant_candidate(lex_toy):
    ep = ToyEndpoint(lex_toy, variants=True)
    cs = ep.translate(TranslateRequest(src=("a", "b"), forced_tgt=(), beam_size=10))
    assert [c.tokens for c in cs.candidates] == [("A", "B"), ("A", "B2")]
    scores = [c.score for c in cs.candidates]
    assert scores == sorted(scores, reverse=True)


def test_toy_variant_respects_beam_cap(lex_toy):
    ep = ToyEndpoint(lex_toy, variants=True)
    cs = ep.translate(TranslateRequest(src=("a", "b"), forced_tgt=(), beam_size=1))
    assert [c.tokens for c in cs.candidates] == [("A", "B")]


def test_toy_fw_source_translates_head_and_future(lex_toy):
    ep = ToyEndpoint(lex_toy)
    cs = ep.translate(
        TranslateRequest(src=("a", FW_TOKEN, "s", "b"), forced_tgt=("A",), beam_size=10)
    )
    assert cs.best == ("A", "B", "S")


def test_toy_oov(lex_ab):
    ep = ToyEndpoint(lex_ab)
    with pytest.raises(OOVError):
        ep.translate(TranslateRequest(src=("zzz",), forced_tgt=(), beam_size=10))


def test_toy_deterministic(lex_toy):
    ep = ToyEndpoint(lex_toy, variants=True)
    req = TranslateRequest(src=("a", "s", "b", "d"), forced_tgt=("A",), beam_size=10)
    assert ep.translate(req) == ep.translate(req)


def test_scripted_endpoint_table_example():
    ep = ScriptedEndpoint(TABLE_SCRIPT)
    cs = ep.translate(TranslateRequest(src=(ZH[0],), forced_tgt=(), beam_size=10))
    assert ("Newton",) in [c.tokens for c in cs.candidates]


def test_is_prefix_of_candidates_basic():
    assert is_prefix_of_candidates(("A",), cand_set(("A", "B")))
    assert is_prefix_of_candidates(("A", "B"), cand_set(("A", "B")))
    assert not is_prefix_of_candidates(("B",), cand_set(("A", "B")))


def test_is_prefix_of_candidates_against_mocked_beam():
    full = ("Newton", "discovered", "newton's", "laws", "of", "motion")
    assert not is_prefix_of_candidates(("Newton", "was"), cand_set(full))


def test_prefix_check_reflexive_and_union_monotone(lex_toy):
    hyp = ("A", "B")
    assert is_prefix_of_candidates(hyp, cand_set(hyp))
    small = cand_set(("X",))
    union = cand_set(("X",), hyp)
    assert not is_prefix_of_candidates(hyp, small)
    assert is_prefix_of_candidates(hyp, union)


def test_is_prefix_equality_counts():
    assert is_prefix((), ())
    assert is_prefix(("a",), ("a",))
    assert not is_prefix(("a", "b"), ("a",))


def test_candidate_set_rejects_increasing_scores():
    with pytest.raises(GatewayError):
        CandidateSet((Candidate(("A",), -1.0), Candidate(("B",), 0.0)), 10)


def test_candidate_set_rejects_overflow():
    with pytest.raises(GatewayError):
        CandidateSet((Candidate(("A",), 0.0), Candidate(("B",), -1.0)), 1)


def test_translate_request_validation():
    with pytest.raises(Exception):
        TranslateRequest(src=(), forced_tgt=(), beam_size=10)
    with pytest.raises(GatewayError):
        TranslateRequest(src=("a",), forced_tgt=(), beam_size=0)


# --- external endpoints over the wire -------------------------------------


@pytest.fixture
def table_exec_spec(tmp_path):
    script = tmp_path / "table.json"
    script.write_text(json.dumps(TABLE_SCRIPT, ensure_ascii=False), encoding="utf-8")
    return f"exec:{sys.executable} -m simt.testing --serve {script}"


def test_exec_endpoint_translate(table_exec_spec):
    ep = endpoint_from_spec(table_exec_spec, timeout_ms=10000)
    try:
        cs = ep.translate(TranslateRequest(src=tuple(ZH), forced_tgt=(), beam_size=10))
        assert cs.best == ("Newton", "discovered", "newton's", "laws", "of", "motion")
        # unknown request comes back as a remote error
        with pytest.raises(GatewayError):
            ep.translate(TranslateRequest(src=("nope",), forced_tgt=(), beam_size=10))
        # endpoint survives the error response and keeps serving
        cs = ep.translate(TranslateRequest(src=(ZH[0],), forced_tgt=(), beam_size=10))
        assert cs.best == ("Newton",)
    finally:
        ep.close()


def _spawn_inline(tmp_path, body):
    path = tmp_path / "ep.py"
    path.write_text(textwrap.dedent(body), encoding="utf-8")
    return ExternalEndpoint.spawn(f"{sys.executable} {path}", timeout_ms=5000)


def test_exec_endpoint_forced_prefix_violation_rejected(tmp_path):
    ep = _spawn_inline(
        tmp_path,
        """
        import json, sys
        for line in sys.stdin:
            req = json.loads(line)
            print(json.dumps({"id": req["id"], "candidates": [["X"]], "scores": [0.0]}))
            sys.stdout.flush()
        """,
    )
    try:
        with pytest.raises(GatewayError) as err:
            ep.translate(TranslateRequest(src=("a",), forced_tgt=("A",), beam_size=10))
        assert "forced prefix" in str(err.value)
        assert err.value.raw is not None
    finally:
        ep.close()


def test_exec_endpoint_zero_candidates_is_protocol_error(tmp_path):
    ep = _spawn_inline(
        tmp_path,
        """
        import json, sys
        for line in sys.stdin:
            req = json.loads(line)
            print(json.dumps({"id": req["id"], "candidates": [], "scores": []}))
            sys.stdout.flush()
        """,
    )
    try:
        with pytest.raises(GatewayError):
            ep.translate(TranslateRequest(src=("a",), forced_tgt=(), beam_size=10))
    finally:
        ep.close()


def test_exec_endpoint_killed_on_unparseable_line(tmp_path):
    ep = _spawn_inline(
        tmp_path,
        """
        import sys
        sys.stdin.readline()
        print("this is not json")
        sys.stdout.flush()
        sys.stdin.read()
        """,
    )
    try:
        with pytest.raises(GatewayError) as err:
            ep.translate(TranslateRequest(src=("a",), forced_tgt=(), beam_size=10))
        assert "non-parseable" in str(err.value) or "closed" in str(err.value)
        ep._proc.wait(timeout=5)
        assert ep._proc.poll() is not None  # process was killed
    finally:
        ep.close()


def test_exec_endpoint_timeout(tmp_path):
    ep = _spawn_inline(
        tmp_path,
        """
        import sys, time
        sys.stdin.readline()
        time.sleep(60)
        """,
    )
    try:
        with pytest.raises(GatewayError) as err:
            ep.translate(TranslateRequest(src=("a",), forced_tgt=(), beam_size=10))
        assert "timeout" in str(err.value)
    finally:
        ep.close()


def test_exec_endpoint_accepts_fewer_candidates_than_beam(tmp_path):
    ep = _spawn_inline(
        tmp_path,
        """
        import json, sys
        for line in sys.stdin:
            req = json.loads(line)
            print(json.dumps({"id": req["id"], "candidates": [["A"], ["A", "B"]],
                              "scores": [-0.1, -0.2]}))
            sys.stdout.flush()
        """,
    )
    try:
        cs = ep.translate(TranslateRequest(src=("a",), forced_tgt=(), beam_size=10))
        assert len(cs.candidates) == 2
        assert cs.requested_beam == 10
    finally:
        ep.close()


def test_tcp_endpoint(tmp_path):
    import socket
    import threading
    import time

    script = tmp_path / "table.json"
    script.write_text(json.dumps(TABLE_SCRIPT, ensure_ascii=False), encoding="utf-8")
    # pick a free port, then serve one connection from a background process
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    server = subprocess.Popen(
        [sys.executable, "-m", "simt.testing", "--serve", str(script), "--tcp", str(port)]
    )
    try:
        ep = None
        for _ in range(50):
            try:
                ep = ExternalEndpoint.connect("127.0.0.1", port, timeout_ms=5000)
                break
            except GatewayError:
                time.sleep(0.1)
        assert ep is not None, "server never came up"
        cs = ep.translate(TranslateRequest(src=(ZH[0],), forced_tgt=(), beam_size=10))
        assert cs.best == ("Newton",)
        ep.close()
    finally:
        server.kill()
        server.wait()


def test_endpoint_spec_parsing(tmp_path, lex_toy):
    from simt import ConfigError, save_lexicon

    path = tmp_path / "lex.json"
    save_lexicon(lex_toy, path)
    ep = endpoint_from_spec(f"toy:{path}")
    assert isinstance(ep, ToyEndpoint) and not ep.variants
    ep = endpoint_from_spec(f"toy:{path}:variants")
    assert isinstance(ep, ToyEndpoint) and ep.variants
    with pytest.raises(ConfigError):
        endpoint_from_spec("bogus:whatever")
    with pytest.raises(ConfigError):
        endpoint_from_spec("tcp:nohost")
