"""Loading and verifying the Haskell fixture corpus against a toolchain.

The corpus itself (sources + manifest) lives outside the package, under
``fixtures/`` at the repository root; this module is the consumer side of
its manifest format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .hlang import extract_signature
from .toolchain import (
    Agrees,
    CandidateProgram,
    Crashed,
    Diverges,
    TimedOut,
    Toolchain,
    build_equiv_module,
)

EXPECTATIONS = (
    "ProofAccepted",
    "ProofRejected",
    "Diverges",
    "Agrees",
    "TimedOut",
    "Crashed",
)


@dataclass(frozen=True)
class FixtureEntry:
    name: str
    expectation: str
    program_p: str
    program_q: str | None = None
    proof: str | None = None
    diverging_input: str | None = None
    timeout: float | None = None


@dataclass(frozen=True)
class FixtureOutcome:
    entry: FixtureEntry
    ok: bool
    detail: str


def load_fixture_manifest(path: str | Path) -> list[FixtureEntry]:
    path = Path(path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent
    entries = []
    for record in payload["fixtures"]:
        files = record.get("files", {})
        if record["expectation"] not in EXPECTATIONS:
            raise ValueError(f"{record['name']}: unknown expectation {record['expectation']!r}")
        entries.append(
            FixtureEntry(
                name=record["name"],
                expectation=record["expectation"],
                program_p=_read(base, files["program_p"]),
                program_q=_read(base, files.get("program_q")),
                proof=_read(base, files.get("proof")),
                diverging_input=_read_stripped(base, files.get("diverging_input")),
                timeout=record.get("timeout"),
            )
        )
    return entries


def _read(base: Path, rel: str | None) -> str | None:
    if rel is None:
        return None
    return (base / rel).read_text(encoding="utf-8")


def _read_stripped(base: Path, rel: str | None) -> str | None:
    text = _read(base, rel)
    return text.strip() if text is not None else None


def check_fixture(entry: FixtureEntry, toolchain: Toolchain) -> FixtureOutcome:
    """Run one entry's expectation against a toolchain."""
    p = CandidateProgram(entry.program_p, extract_signature(entry.program_p))
    if entry.expectation in ("ProofAccepted", "ProofRejected"):
        q = CandidateProgram(entry.program_q, extract_signature(entry.program_q))
        module = build_equiv_module(p, q, entry.proof or "")
        result = toolchain.check_liquid_proof(module, entry.timeout)
        expected_accept = entry.expectation == "ProofAccepted"
        ok = result.accepted == expected_accept and result.verdict != result.TOOL_FAILURE
        return FixtureOutcome(entry, ok, f"{result.verdict}: {result.message[:200]}")
    if entry.expectation in ("Diverges", "Agrees"):
        q = CandidateProgram(entry.program_q, extract_signature(entry.program_q))
        verdict = toolchain.check_divergence(p, q, entry.diverging_input, entry.timeout)
        if entry.expectation == "Diverges":
            ok = isinstance(verdict, Diverges)
        else:
            ok = isinstance(verdict, Agrees)
        return FixtureOutcome(entry, ok, type(verdict).__name__)
    # single-program execution expectations
    literals = [entry.diverging_input] if entry.diverging_input is not None else []
    result = toolchain.run_on_input(p, literals, entry.timeout)
    if entry.expectation == "TimedOut":
        ok = isinstance(result.outcome, TimedOut)
    else:
        ok = isinstance(result.outcome, Crashed)
    return FixtureOutcome(entry, ok, type(result.outcome).__name__)


def verify_fixtures(
    entries: list[FixtureEntry], toolchain: Toolchain
) -> list[FixtureOutcome]:
    out = []
    for entry in entries:
        try:
            out.append(check_fixture(entry, toolchain))
        except Exception as exc:
            out.append(FixtureOutcome(entry, False, f"{type(exc).__name__}: {exc}"))
    return out


def check_manifest_static(entries: list[FixtureEntry]) -> list[FixtureOutcome]:
    """Static checks only: signatures extract and required parts are present."""
    out = []
    for entry in entries:
        try:
            extract_signature(entry.program_p)
            if entry.expectation in ("ProofAccepted", "ProofRejected", "Diverges", "Agrees"):
                if entry.program_q is None:
                    raise ValueError("program_q required")
                extract_signature(entry.program_q)
            if entry.expectation in ("ProofAccepted", "ProofRejected") and not entry.proof:
                raise ValueError("proof required")
            if entry.expectation in ("Diverges", "Agrees") and entry.diverging_input is None:
                raise ValueError("diverging_input required")
            out.append(FixtureOutcome(entry, True, "static checks passed"))
        except Exception as exc:
            out.append(FixtureOutcome(entry, False, f"{type(exc).__name__}: {exc}"))
    return out
