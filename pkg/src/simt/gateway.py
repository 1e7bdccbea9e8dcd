"""Translation-model gateway: forced-prefix beam decoding behind one interface.

Two endpoint families: the built-in deterministic toy model (exact on the
toy language) and external processes speaking a line-delimited JSON wire
protocol over stdio or TCP. All endpoints return ranked CandidateSets whose
hypotheses extend the forced target prefix; the gateway validates external
responses and rejects violators.

Wire protocol (one JSON object per line, UTF-8):
    request:  {"id": str, "op": "translate", "src": [tok], "forced_tgt": [tok], "beam": int}
    response: {"id": str, "candidates": [[tok], ...], "scores": [float, ...]}
    error:    {"id": str, "error": str}
A second op "score_boundary" ({"src": [tok]} -> {"p": float}) serves READ
policies; see policies.WireClassifier.
"""

from __future__ import annotations

import itertools
import json
import shlex
import socket
import subprocess
import threading
from dataclasses import dataclass
from typing import Sequence

from .corpus import FW_TOKEN, PENDING_TOKEN, TokenSeq, ToyLexicon, as_tokens, load_lexicon, toy_units
from .errors import ConfigError, GatewayError, MalformedSentenceError, OOVError

DEFAULT_BEAM = 10  # top-10 full-sentence candidates back the prefix test
DEFAULT_TIMEOUT_MS = 30000


@dataclass(frozen=True)
class TranslateRequest:
    src: TokenSeq
    forced_tgt: TokenSeq = ()
    beam_size: int = DEFAULT_BEAM

    def __post_init__(self):
        if not self.src:
            raise MalformedSentenceError("translate request with empty source")
        if self.beam_size < 1:
            raise GatewayError(f"beam_size must be >= 1, got {self.beam_size}")


@dataclass(frozen=True)
class Candidate:
    tokens: TokenSeq
    score: float


@dataclass(frozen=True)
class CandidateSet:
    candidates: tuple[Candidate, ...]
    requested_beam: int

    def __post_init__(self):
        if not 1 <= len(self.candidates) <= self.requested_beam:
            raise GatewayError(
                f"candidate count {len(self.candidates)} outside [1, {self.requested_beam}]"
            )
        scores = [c.score for c in self.candidates]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise GatewayError(f"candidate scores not non-increasing: {scores}")

    @property
    def best(self) -> TokenSeq:
        return self.candidates[0].tokens


def is_prefix(prefix: Sequence[str], seq: Sequence[str]) -> bool:
    """Token-level prefix test; equality counts."""
    return len(prefix) <= len(seq) and tuple(seq[: len(prefix)]) == tuple(prefix)


def is_prefix_of_candidates(hyp: Sequence[str], candidates: CandidateSet) -> bool:
    """True iff hyp is a prefix of at least one candidate hypothesis."""
    return any(is_prefix(hyp, c.tokens) for c in candidates.candidates)


class ToyEndpoint:
    """Deterministic stand-in model: exact on the toy language.

    Sources may carry one "[fw]" separator; the head and the future words
    are then translated as a single sequence (the future words supply the
    context a trained prefix model would exploit, e.g. completing a swap
    pair that dangles at the head boundary).

    With variants enabled, a second candidate substitutes the synonym-slot
    alternative at the first slotted source token, giving the beam a
    genuine second hypothesis.
    """

    kind = "toy"

    def __init__(self, lexicon: ToyLexicon, variants: bool = False):
        self.lexicon = lexicon
        self.variants = variants

    def translate(self, request: TranslateRequest) -> CandidateSet:
        src = self._strip_fw(request.src)
        hyps = [self._expand(src)]
        if self.variants:
            variant = self._variant(src)
            if variant is not None and variant not in hyps:
                hyps.append(variant)
        forced = request.forced_tgt
        matching = [h for h in hyps if is_prefix(forced, h)]
        if not matching:
            # Forced prefix unreachable: keep it and continue from the first
            # source unit whose expansion was not consumed by it.
            matching = [forced + self._continuation(src, forced)]
        matching = matching[: request.beam_size]
        cands = tuple(Candidate(h, -float(i)) for i, h in enumerate(matching))
        return CandidateSet(cands, request.beam_size)

    def close(self) -> None:
        pass

    def _strip_fw(self, src: TokenSeq) -> TokenSeq:
        if FW_TOKEN not in src:
            return src
        i = src.index(FW_TOKEN)
        head, future = src[:i], src[i + 1 :]
        if not head or FW_TOKEN in future:
            raise GatewayError(f"malformed future-word source: {' '.join(src)!r}")
        return head + future

    def _expand(self, src: TokenSeq) -> TokenSeq:
        out: list[str] = []
        for _, emitted in toy_units(self.lexicon, src):
            out.extend(emitted)
        return tuple(out)

    def _variant(self, src: TokenSeq) -> TokenSeq | None:
        slots = self.lexicon.synonym_slots
        ov = next((i for i, tok in enumerate(src) if tok in slots), None)
        if ov is None:
            return None
        entries = self.lexicon.entries
        markers = self.lexicon.swap_markers

        def expansion(i: int) -> TokenSeq:
            if i == ov:
                return (slots[src[i]],)
            if src[i] not in entries:
                raise OOVError(f"token {src[i]!r} not in lexicon")
            return entries[src[i]]

        out: list[str] = []
        i = 0
        while i < len(src):
            if src[i] in markers and i + 1 < len(src):
                out.extend(expansion(i + 1))
                out.extend(expansion(i))
                i += 2
            elif src[i] in markers:
                out.append(PENDING_TOKEN)
                i += 1
            else:
                out.extend(expansion(i))
                i += 1
        return tuple(out)

    def _continuation(self, src: TokenSeq, forced: TokenSeq) -> TokenSeq:
        units = toy_units(self.lexicon, src)
        rest = list(forced)
        idx = 0
        while idx < len(units):
            emitted = units[idx][1]
            if len(emitted) <= len(rest) and tuple(rest[: len(emitted)]) == emitted:
                rest = rest[len(emitted) :]
                idx += 1
            else:
                break
        out: list[str] = []
        for _, emitted in units[idx:]:
            out.extend(emitted)
        return tuple(out)


class _Slot:
    __slots__ = ("event", "response")

    def __init__(self):
        self.event = threading.Event()
        self.response: dict | None = None


class WireClient:
    """Multiplexes line-protocol requests over one stream pair.

    Requests carry correlation ids; a background reader thread dispatches
    responses to waiting callers, so concurrent workers can share one
    endpoint. A non-parseable line is fatal: all pending requests fail and
    the owner's on_fatal hook runs (the exec endpoint kills its process).
    """

    def __init__(self, name, recv, send, *, timeout_s: float, on_fatal=None):
        self._name = name
        self._recv = recv
        self._send = send
        self._timeout = timeout_s
        self._on_fatal = on_fatal
        self._lock = threading.Lock()
        self._pending: dict[str, _Slot] = {}
        self._ids = itertools.count()
        self._dead: str | None = None
        self._reader = threading.Thread(
            target=self._read_loop, daemon=True, name=f"wire-reader-{name}"
        )
        self._reader.start()

    def request(self, payload: dict) -> dict:
        rid = f"q{next(self._ids)}"
        line = json.dumps({"id": rid, **payload}, ensure_ascii=False)
        slot = _Slot()
        with self._lock:
            if self._dead:
                raise GatewayError(f"endpoint {self._name}: {self._dead}")
            self._pending[rid] = slot
            try:
                self._send.write(line + "\n")
                self._send.flush()
            except (OSError, ValueError) as exc:
                self._pending.pop(rid, None)
                raise GatewayError(f"endpoint {self._name}: write failed: {exc}") from exc
        if not slot.event.wait(self._timeout):
            with self._lock:
                self._pending.pop(rid, None)
            raise GatewayError(f"endpoint {self._name}: timeout after {self._timeout}s")
        resp = slot.response
        if resp is None:
            raise GatewayError(f"endpoint {self._name}: {self._dead or 'stream closed'}")
        if "error" in resp:
            raise GatewayError(
                f"endpoint {self._name}: remote error: {resp['error']}",
                raw=json.dumps(resp, ensure_ascii=False),
            )
        return resp

    def close(self) -> None:
        self._fail("closed", run_hook=False)
        for stream in (self._recv, self._send):
            try:
                stream.close()
            except OSError:
                pass

    def _read_loop(self) -> None:
        try:
            for line in self._recv:
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError:
                    self._fail(f"non-parseable line from endpoint: {line[:200]!r}")
                    return
                if not isinstance(obj, dict) or "id" not in obj:
                    self._fail(f"response without id: {line[:200]!r}")
                    return
                with self._lock:
                    slot = self._pending.pop(str(obj["id"]), None)
                if slot is not None:
                    slot.response = obj
                    slot.event.set()
                # unknown ids are late replies to timed-out requests; dropped
        except (OSError, ValueError):
            pass
        self._fail("endpoint stream closed")

    def _fail(self, reason: str, run_hook: bool = True) -> None:
        with self._lock:
            first = self._dead is None
            if first:
                self._dead = reason
            pending = list(self._pending.values())
            self._pending.clear()
        for slot in pending:
            slot.event.set()
        if first and run_hook and self._on_fatal is not None:
            self._on_fatal(reason)


class ExternalEndpoint:
    """Wire-protocol model endpoint over a child process or TCP stream."""

    kind = "external"

    def __init__(self, client: WireClient, describe: str):
        self._client = client
        self._describe = describe

    @classmethod
    def spawn(cls, command: str, *, timeout_ms: int = DEFAULT_TIMEOUT_MS) -> "ExternalEndpoint":
        argv = shlex.split(command)
        if not argv:
            raise ConfigError("empty endpoint command")
        try:
            proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise GatewayError(f"cannot start endpoint {command!r}: {exc}") from exc

        def kill(_reason: str) -> None:
            if proc.poll() is None:
                proc.kill()

        client = WireClient(
            f"exec:{argv[0]}", proc.stdout, proc.stdin, timeout_s=timeout_ms / 1000.0, on_fatal=kill
        )
        ep = cls(client, f"exec:{command}")
        ep._proc = proc
        return ep

    @classmethod
    def connect(cls, host: str, port: int, *, timeout_ms: int = DEFAULT_TIMEOUT_MS) -> "ExternalEndpoint":
        try:
            sock = socket.create_connection((host, port), timeout=timeout_ms / 1000.0)
        except OSError as exc:
            raise GatewayError(f"cannot connect to {host}:{port}: {exc}") from exc
        sock.settimeout(None)
        recv = sock.makefile("r", encoding="utf-8")
        send = sock.makefile("w", encoding="utf-8")
        client = WireClient(f"tcp:{host}:{port}", recv, send, timeout_s=timeout_ms / 1000.0)
        ep = cls(client, f"tcp:{host}:{port}")
        ep._sock = sock
        return ep

    def translate(self, request: TranslateRequest) -> CandidateSet:
        resp = self._client.request(
            {
                "op": "translate",
                "src": list(request.src),
                "forced_tgt": list(request.forced_tgt),
                "beam": request.beam_size,
            }
        )
        return self._validate(resp, request)

    def score_boundary(self, src: Sequence[str]) -> float:
        resp = self._client.request({"op": "score_boundary", "src": list(src)})
        p = resp.get("p")
        if not isinstance(p, (int, float)) or not 0.0 <= float(p) <= 1.0:
            raise GatewayError(
                f"endpoint {self._describe}: score_boundary returned {p!r}, want float in [0,1]",
                raw=json.dumps(resp, ensure_ascii=False),
            )
        return float(p)

    def close(self) -> None:
        self._client.close()
        proc = getattr(self, "_proc", None)
        if proc is not None and proc.poll() is None:
            proc.kill()
            proc.wait(timeout=5)

    def _validate(self, resp: dict, request: TranslateRequest) -> CandidateSet:
        raw = json.dumps(resp, ensure_ascii=False)
        cands = resp.get("candidates")
        scores = resp.get("scores")
        if not isinstance(cands, list) or not cands:
            raise GatewayError(f"endpoint {self._describe}: empty candidate list", raw=raw)
        if not isinstance(scores, list) or len(scores) != len(cands):
            raise GatewayError(
                f"endpoint {self._describe}: scores do not pair with candidates", raw=raw
            )
        out = []
        for toks, score in zip(cands, scores):
            try:
                tokens = as_tokens(toks)
            except MalformedSentenceError as exc:
                raise GatewayError(f"endpoint {self._describe}: bad tokens: {exc}", raw=raw) from exc
            if not is_prefix(request.forced_tgt, tokens):
                raise GatewayError(
                    f"endpoint {self._describe}: candidate does not extend forced prefix "
                    f"{' '.join(request.forced_tgt)!r}",
                    raw=raw,
                )
            out.append(Candidate(tokens, float(score)))
        if any(a.score < b.score for a, b in zip(out, out[1:])):
            raise GatewayError(f"endpoint {self._describe}: scores not non-increasing", raw=raw)
        # real beams may dedupe below the requested size; above it we trim
        out = out[: request.beam_size]
        return CandidateSet(tuple(out), request.beam_size)


def translate(endpoint, request: TranslateRequest) -> CandidateSet:
    """Functional alias for endpoint.translate(request)."""
    return endpoint.translate(request)


def endpoint_from_spec(spec: str, *, timeout_ms: int = DEFAULT_TIMEOUT_MS):
    """Build an endpoint from its CLI spec.

    "toy:<lexicon.json>[:variants]" | "exec:<command line>" | "tcp:<host>:<port>"
    """
    kind, _, rest = spec.partition(":")
    if kind == "toy" and rest:
        variants = False
        path = rest
        if rest.endswith(":variants"):
            variants = True
            path = rest[: -len(":variants")]
        return ToyEndpoint(load_lexicon(path), variants=variants)
    if kind == "exec" and rest:
        return ExternalEndpoint.spawn(rest, timeout_ms=timeout_ms)
    if kind == "tcp" and rest:
        host, _, port = rest.rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError(f"bad tcp endpoint spec {spec!r}")
        return ExternalEndpoint.connect(host, int(port), timeout_ms=timeout_ms)
    raise ConfigError(f"unrecognized endpoint spec {spec!r}")
