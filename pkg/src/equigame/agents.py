"""Completion endpoints (remote and scripted) and strict response parsers.

Parsers are total: they either return a typed result or raise one of the
typed errors in `errors` — arbitrary text never produces an uncaught
exception. Extraction always uses the *last* occurrence of a marker, with
`<think>` spans excluded, because reasoning models restate output formats
inside their chain of thought.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import (
    AgentError,
    BadLemmaName,
    EmptyCodeBlock,
    LabelMissing,
    MarkerMissing,
    OutOfRange,
    TranscriptExhausted,
    TranscriptMismatch,
)

DEFAULT_TOKEN_ENV = "MODEL_ENDPOINT_TOKEN"


@dataclass(frozen=True)
class DecodingParams:
    temperature: float = 0.6
    top_p: float = 0.95
    top_k: int = 20
    presence_penalty: float = 1.5
    max_context: int = 32768


@dataclass(frozen=True)
class TranscriptEntry:
    response: str
    expected_request_digest: str | None = None


def request_digest(system: str, user: str) -> str:
    return hashlib.sha256((system + "\x00" + user).encode("utf-8")).hexdigest()


class ScriptedAgent:
    """Replays a fixed transcript; records every request for assertions."""

    kind = "scripted"

    def __init__(self, entries: list[TranscriptEntry], name: str = "scripted"):
        self.name = name
        self.entries = list(entries)
        self.cursor = 0
        self.requests: list[tuple[str, str]] = []
        self._lock = threading.Lock()

    def complete(self, system: str, user: str) -> str:
        with self._lock:
            if self.cursor >= len(self.entries):
                raise TranscriptExhausted(
                    f"{self.name}: transcript exhausted after {len(self.entries)} entries"
                )
            entry = self.entries[self.cursor]
            self.cursor += 1
            self.requests.append((system, user))
        if entry.expected_request_digest is not None:
            got = request_digest(system, user)
            if got != entry.expected_request_digest:
                raise TranscriptMismatch(
                    f"{self.name}: request digest {got[:12]} != "
                    f"expected {entry.expected_request_digest[:12]} at entry {self.cursor - 1}"
                )
        return entry.response

    def fast_forward(self, count: int) -> None:
        """Skip entries already consumed by a run being resumed."""
        with self._lock:
            if count > len(self.entries):
                raise TranscriptExhausted(
                    f"{self.name}: cannot fast-forward to {count} of {len(self.entries)}"
                )
            self.cursor = count


def load_transcript(path: str | Path) -> list[TranscriptEntry]:
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        entries.append(TranscriptEntry(rec["response"], rec.get("expected_request_digest")))
    return entries


def save_transcript(entries: list[TranscriptEntry], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            rec: dict = {"response": e.response}
            if e.expected_request_digest is not None:
                rec["expected_request_digest"] = e.expected_request_digest
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


@dataclass
class RemoteAgent:
    """Chat-completions client; auth token comes from the environment only."""

    url: str
    model: str
    token_env: str = DEFAULT_TOKEN_ENV
    decoding: DecodingParams = field(default_factory=DecodingParams)
    request_timeout: float = 300.0
    max_retries: int = 2

    kind = "remote"

    def complete(self, system: str, user: str) -> str:
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": self.decoding.temperature,
            "top_p": self.decoding.top_p,
            "top_k": self.decoding.top_k,
            "presence_penalty": self.decoding.presence_penalty,
        }
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        last_err: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = requests.post(
                    self.url, json=payload, headers=headers, timeout=self.request_timeout
                )
            except requests.RequestException as exc:
                last_err = exc
                if attempt < self.max_retries:
                    time.sleep(2**attempt)
                    continue
                raise AgentError(f"transport failure after {attempt + 1} attempts: {exc}") from exc
            if resp.status_code >= 500 and attempt < self.max_retries:
                last_err = AgentError(f"status {resp.status_code}")
                time.sleep(2**attempt)
                continue
            if resp.status_code != 200:
                raise AgentError(f"status {resp.status_code}: {resp.text[:500]}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise AgentError(f"malformed completion response: {exc}") from exc
        raise AgentError(f"exhausted retries: {last_err}")


AgentEndpoint = ScriptedAgent | RemoteAgent


def complete(agent: AgentEndpoint, system: str, user: str) -> str:
    return agent.complete(system, user)


# --- response parsing ---

_THINK_RE = re.compile(r"<think>.*?</think>", re.S)
_FENCE_RE = re.compile(r"```([^\n`]*)\n(.*?)\n?```", re.S)

SEQ_CODE_MARKER = "Generated Program `Q`:"
SINQ_INPUT_MARKER = "Diverging Input `x`:"
DIFFICULTY_MARKER = "Difficulty level:"
BOB_HEADER = "# Equivalent?"


def strip_think(text: str) -> str:
    """Drop `<think>…</think>` spans; an unclosed span runs to the end."""
    visible = _THINK_RE.sub("", text)
    open_idx = visible.find("<think>")
    if open_idx != -1:
        visible = visible[:open_idx]
    return visible


def fenced_blocks(text: str) -> list[tuple[str, str]]:
    """All fenced code blocks as (info string, body)."""
    return [(m.group(1).strip(), m.group(2)) for m in _FENCE_RE.finditer(text)]


@dataclass(frozen=True)
class AliceSeqOutput:
    raw: str
    q_code: str


@dataclass(frozen=True)
class AliceSinqOutput:
    raw: str
    q_code: str
    diverging_input: str


@dataclass(frozen=True)
class ProofOutput:
    raw: str
    proof_block: str


@dataclass(frozen=True)
class BobVerdict:
    value: str  # "Equivalent" | "NotEquivalent" | "Malformed"
    reason: str | None = None

    EQUIVALENT = "Equivalent"
    NOT_EQUIVALENT = "NotEquivalent"
    MALFORMED = "Malformed"


def _extract_q_code(visible: str) -> str:
    idx = visible.rfind(SEQ_CODE_MARKER)
    if idx == -1:
        raise MarkerMissing(f"no {SEQ_CODE_MARKER!r} marker in response")
    tail = visible[idx + len(SEQ_CODE_MARKER) :]
    blocks = fenced_blocks(tail)
    if not blocks:
        raise MarkerMissing("no fenced code block after program marker")
    _info, body = blocks[0]
    if not body.strip():
        raise EmptyCodeBlock("program block is empty")
    return body


def parse_alice_seq(raw: str) -> AliceSeqOutput:
    return AliceSeqOutput(raw=raw, q_code=_extract_q_code(strip_think(raw)))


def parse_alice_sinq(raw: str) -> AliceSinqOutput:
    visible = strip_think(raw)
    q_code = _extract_q_code(visible)
    idx = visible.rfind(SINQ_INPUT_MARKER)
    if idx == -1:
        raise MarkerMissing(f"no {SINQ_INPUT_MARKER!r} marker in response")
    blocks = fenced_blocks(visible[idx + len(SINQ_INPUT_MARKER) :])
    if not blocks:
        raise MarkerMissing("no fenced block after diverging-input marker")
    _info, body = blocks[0]
    if not body.strip():
        raise EmptyCodeBlock("diverging-input block is empty")
    return AliceSinqOutput(raw=raw, q_code=q_code, diverging_input=body.strip())


def parse_bob_verdict(raw: str) -> BobVerdict:
    visible = strip_think(raw)
    idx = visible.rfind(BOB_HEADER)
    if idx == -1:
        return BobVerdict(BobVerdict.MALFORMED, "no '# Equivalent?' header")
    tail = visible[idx + len(BOB_HEADER) :]
    for line in tail.splitlines():
        word = line.strip()
        if not word:
            continue
        if word.startswith("Yes"):
            return BobVerdict(BobVerdict.EQUIVALENT)
        if word.startswith("No"):
            return BobVerdict(BobVerdict.NOT_EQUIVALENT)
        return BobVerdict(BobVerdict.MALFORMED, f"unrecognized verdict line {word[:40]!r}")
    return BobVerdict(BobVerdict.MALFORMED, "nothing after '# Equivalent?' header")


_DIFFICULTY_RE = re.compile(re.escape(DIFFICULTY_MARKER) + r"\s*(-?\d+)")


def parse_difficulty_label(raw: str) -> int:
    matches = list(_DIFFICULTY_RE.finditer(strip_think(raw)))
    if not matches:
        raise LabelMissing(f"no {DIFFICULTY_MARKER!r} label in response")
    value = int(matches[-1].group(1))
    if not 0 <= value <= 10:
        raise OutOfRange(f"difficulty {value} outside [0, 10]")
    return value


_LEMMA_NAME_RE = re.compile(r"\blemma_([A-Za-z0-9_']+)_equiv\b")


def parse_proof_block(raw: str, func_name_p: str | None = None) -> ProofOutput:
    visible = strip_think(raw)
    blocks = fenced_blocks(visible)
    if len(blocks) != 1:
        raise MarkerMissing(f"expected exactly one fenced proof block, found {len(blocks)}")
    info, body = blocks[0]
    if info != "haskell":
        raise MarkerMissing(f"proof block must be tagged haskell, got {info!r}")
    if not body.strip():
        raise EmptyCodeBlock("proof block is empty")
    m = _LEMMA_NAME_RE.search(body)
    if not m:
        raise BadLemmaName("no lemma_<P>_equiv definition in proof block")
    if func_name_p is not None and m.group(1) != func_name_p:
        raise BadLemmaName(f"lemma names {m.group(1)!r}, expected {func_name_p!r}")
    return ProofOutput(raw=raw, proof_block=body)
