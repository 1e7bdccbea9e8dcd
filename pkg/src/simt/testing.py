"""Scripted endpoints for tests and demos.

ScriptedEndpoint answers translate calls from a fixed (source, forced)
table in-process. The module also runs as a wire-protocol server replaying
the same table over stdio or TCP:

    python -m simt.testing --serve script.json [--tcp PORT]

Script file layout:
    {"translate": [{"src": [...], "forced": [...], "candidates": [[...], ...],
                    "scores": [...]}, ...],
     "score_boundary": [{"src": [...], "p": 0.7}, ...]}
scores default to 0, -1, -2, ... when omitted.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path
from typing import Sequence

from .errors import GatewayError
from .gateway import Candidate, CandidateSet, TranslateRequest


def _key(src: Sequence[str], forced: Sequence[str]) -> tuple[str, str]:
    return (" ".join(src), " ".join(forced))


class ScriptedEndpoint:
    """Replays a fixed translate table; unknown requests are gateway errors."""

    kind = "scripted"

    def __init__(self, table: dict | None = None):
        self._translate: dict[tuple[str, str], list[tuple[list[str], float]]] = {}
        self._boundary: dict[str, float] = {}
        if table:
            self.load(table)

    def load(self, table: dict) -> None:
        for entry in table.get("translate", []):
            cands = entry["candidates"]
            scores = entry.get("scores") or [-float(i) for i in range(len(cands))]
            self._translate[_key(entry["src"], entry.get("forced", []))] = [
                (list(c), float(s)) for c, s in zip(cands, scores)
            ]
        for entry in table.get("score_boundary", []):
            self._boundary[" ".join(entry["src"])] = float(entry["p"])

    def add(self, src, forced, candidates, scores=None) -> "ScriptedEndpoint":
        scores = scores or [-float(i) for i in range(len(candidates))]
        self._translate[_key(src, forced)] = [
            (list(c), float(s)) for c, s in zip(candidates, scores)
        ]
        return self

    def lookup(self, src, forced):
        return self._translate.get(_key(src, forced))

    def translate(self, request: TranslateRequest) -> CandidateSet:
        hit = self.lookup(request.src, request.forced_tgt)
        if hit is None:
            raise GatewayError(
                f"scripted endpoint has no entry for src={' '.join(request.src)!r} "
                f"forced={' '.join(request.forced_tgt)!r}"
            )
        cands = tuple(Candidate(tuple(toks), score) for toks, score in hit[: request.beam_size])
        return CandidateSet(cands, request.beam_size)

    def score_boundary(self, src: Sequence[str]) -> float:
        key = " ".join(src)
        if key not in self._boundary:
            raise GatewayError(f"scripted endpoint has no boundary score for {key!r}")
        return self._boundary[key]

    def close(self) -> None:
        pass


def _serve_streams(endpoint: ScriptedEndpoint, recv, send) -> None:
    for line in recv:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            rid = req.get("id", "?")
        except json.JSONDecodeError:
            send.write(json.dumps({"id": "?", "error": "unparseable request"}) + "\n")
            send.flush()
            continue
        try:
            if req.get("op") == "translate":
                hit = endpoint.lookup(req["src"], req.get("forced_tgt", []))
                if hit is None:
                    resp = {"id": rid, "error": "no scripted entry for request"}
                else:
                    resp = {
                        "id": rid,
                        "candidates": [toks for toks, _ in hit],
                        "scores": [score for _, score in hit],
                    }
            elif req.get("op") == "score_boundary":
                resp = {"id": rid, "p": endpoint.score_boundary(req["src"])}
            else:
                resp = {"id": rid, "error": f"unknown op {req.get('op')!r}"}
        except GatewayError as exc:
            resp = {"id": rid, "error": str(exc)}
        send.write(json.dumps(resp, ensure_ascii=False) + "\n")
        send.flush()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Replay a scripted endpoint over the wire protocol.")
    parser.add_argument("--serve", required=True, help="script JSON file")
    parser.add_argument("--tcp", type=int, default=None, help="listen on this TCP port instead of stdio")
    args = parser.parse_args(argv)
    endpoint = ScriptedEndpoint(json.loads(Path(args.serve).read_text(encoding="utf-8")))
    if args.tcp is None:
        _serve_streams(endpoint, sys.stdin, sys.stdout)
        return 0
    with socket.create_server(("127.0.0.1", args.tcp)) as server:
        conn, _ = server.accept()
        with conn:
            recv = conn.makefile("r", encoding="utf-8")
            send = conn.makefile("w", encoding="utf-8")
            _serve_streams(endpoint, recv, send)
    return 0


if __name__ == "__main__":
    sys.exit(main())
