"""Builds a validated, executable Haskell program corpus from raw candidates.

Each candidate is signature-extracted, given one synthesized type-correct
literal per argument, compiled, and executed; only programs that halt
cleanly are retained, with the run recorded as a replayable witness.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import agents as agents_mod
from . import hlang
from .errors import (
    CompileFailed,
    DuplicateCode,
    DuplicateId,
    EquigameError,
    NoCodeBlock,
    RunFailed,
    Timeout,
    ToolMissing,
    UnsupportedType,
)
from .hlang import SignatureInfo
from .toolchain import Halted, TimedOut, Toolchain, build_exec_harness

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SourceCandidate:
    id: str
    code: str
    origin: str = "raw"


@dataclass(frozen=True)
class ValidatedProgram:
    """A compiled, executable function with a replayable witness run."""

    id: str
    code: str
    signature: SignatureInfo
    witness_input: tuple[str, ...]
    witness_output: str


@dataclass
class IngestConfig:
    seed: int = 0
    depth_budget: int = 3
    run_timeout: float | None = None
    workers: int = 1
    dedup_code: bool = True


@dataclass
class RejectionReport:
    counts: dict[str, int] = field(default_factory=dict)
    items: list[dict] = field(default_factory=list)

    def record(self, candidate_id: str, error: EquigameError) -> None:
        error_class = type(error).__name__
        self.counts[error_class] = self.counts.get(error_class, 0) + 1
        self.items.append(
            {"id": candidate_id, "error_class": error_class, "detail": str(error)}
        )

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed from arbitrary key parts."""
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).hexdigest()
    return int(digest[:16], 16)


def synthesize_arguments(
    signature: SignatureInfo, seed: int, depth_budget: int = 3
) -> tuple[str, ...]:
    """One literal per argument position, curried application order."""
    return tuple(
        hlang.synthesize_literal(t, derive_seed(seed, i, hlang.render_type(t)), depth_budget)
        for i, t in enumerate(signature.arg_types)
    )


def validate_program(
    candidate: SourceCandidate,
    toolchain: Toolchain,
    seed: int,
    depth_budget: int = 3,
    run_timeout: float | None = None,
) -> ValidatedProgram:
    """Signature-extract, synthesize an input, compile, execute, capture."""
    signature = hlang.extract_signature(candidate.code)
    if signature.arity == 0:
        raise UnsupportedType(f"{signature.function_name} takes no arguments")
    literals = synthesize_arguments(signature, seed, depth_budget)
    compile_result = toolchain.compile(candidate.code)
    if not compile_result.success:
        raise CompileFailed(compile_result.diagnostics)
    harness = build_exec_harness(CandidateView(candidate.code, signature), literals)
    result = toolchain.run_program(harness, run_timeout)
    outcome = result.outcome
    if isinstance(outcome, TimedOut):
        raise Timeout(f"{candidate.id} exceeded the run timeout")
    if not isinstance(outcome, Halted):
        raise RunFailed(f"{candidate.id} crashed: {outcome.info.splitlines()[0] if outcome.info else 'unknown'}")
    if outcome.exit_code != 0:
        raise RunFailed(f"{candidate.id} exited {outcome.exit_code}")
    witness_output = outcome.stdout
    if witness_output.endswith("\n"):
        witness_output = witness_output[:-1]
    return ValidatedProgram(
        id=candidate.id,
        code=candidate.code,
        signature=signature,
        witness_input=literals,
        witness_output=witness_output,
    )


@dataclass(frozen=True)
class CandidateView:
    """Adapter giving raw candidate code a ProgramSource shape."""

    code: str
    signature: SignatureInfo


def ingest_corpus(
    candidates: Iterable[SourceCandidate],
    toolchain: Toolchain,
    config: IngestConfig | None = None,
) -> tuple[list[ValidatedProgram], RejectionReport]:
    """Validate a candidate stream; per-item failures are recorded, not raised.

    ToolMissing still propagates — a missing compiler is an environment
    fault, not a property of any candidate.
    """
    config = config or IngestConfig()
    report = RejectionReport()
    seen_ids: set[str] = set()
    seen_code: set[str] = set()
    to_validate: list[SourceCandidate] = []
    for candidate in candidates:
        if candidate.id in seen_ids:
            report.record(candidate.id, DuplicateId(f"duplicate id {candidate.id!r}"))
            continue
        seen_ids.add(candidate.id)
        norm = hlang.normalize_code(candidate.code)
        if config.dedup_code and norm in seen_code:
            report.record(candidate.id, DuplicateCode("whitespace-normalized duplicate"))
            continue
        seen_code.add(norm)
        to_validate.append(candidate)

    def work(candidate: SourceCandidate):
        seed = derive_seed(config.seed, candidate.id)
        try:
            return validate_program(
                candidate, toolchain, seed, config.depth_budget, config.run_timeout
            )
        except ToolMissing:
            raise
        except EquigameError as exc:
            return (candidate.id, exc)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(work, to_validate))
    else:
        results = [work(c) for c in to_validate]

    dataset: list[ValidatedProgram] = []
    for outcome in results:
        if isinstance(outcome, ValidatedProgram):
            dataset.append(outcome)
        else:
            candidate_id, exc = outcome
            report.record(candidate_id, exc)
    return dataset, report


def translate_candidate(
    agent: agents_mod.AgentEndpoint,
    source_description: str,
    system_text: str = "",
    origin: str = "translated",
) -> SourceCandidate:
    """Pipeline hook turning an operator-prompted agent response into a candidate.

    The code is the first fenced Haskell block of the response.
    """
    raw = agents_mod.complete(agent, system_text, source_description)
    code = _first_haskell_block(raw)
    candidate_id = "tr-" + hashlib.sha256(code.encode("utf-8")).hexdigest()[:12]
    return SourceCandidate(id=candidate_id, code=code, origin=origin)


def _first_haskell_block(raw: str) -> str:
    blocks = agents_mod.fenced_blocks(raw)
    for info, body in blocks:
        if info in ("haskell", "hs"):
            return body
    for info, body in blocks:
        if info == "":
            return body
    raise NoCodeBlock("no fenced Haskell code block in response")


# --- line-delimited IO ---


def candidate_from_record(record: dict) -> SourceCandidate:
    return SourceCandidate(
        id=str(record["id"]), code=record["code"], origin=record.get("origin", "raw")
    )


def read_candidates(path: str | Path) -> list[SourceCandidate]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(candidate_from_record(json.loads(line)))
    return out


def program_to_record(p: ValidatedProgram) -> dict:
    return {
        "id": p.id,
        "code": p.code,
        "function_name": p.signature.function_name,
        "arg_types": [hlang.render_type(t) for t in p.signature.arg_types],
        "result_type": hlang.render_type(p.signature.result_type),
        "witness_input": list(p.witness_input),
        "witness_output": p.witness_output,
    }


def program_from_record(record: dict) -> ValidatedProgram:
    signature = SignatureInfo(
        function_name=record["function_name"],
        arg_types=tuple(hlang.parse_type_expr(t) for t in record["arg_types"]),
        result_type=hlang.parse_type_expr(record["result_type"]),
    )
    return ValidatedProgram(
        id=record["id"],
        code=record["code"],
        signature=signature,
        witness_input=tuple(record["witness_input"]),
        witness_output=record["witness_output"],
    )


def write_dataset(programs: Iterable[ValidatedProgram], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in programs:
            fh.write(json.dumps(program_to_record(p), ensure_ascii=False, sort_keys=True) + "\n")


def load_dataset(path: str | Path) -> list[ValidatedProgram]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(program_from_record(json.loads(line)))
    return out


def write_report(report: RejectionReport, path: str | Path) -> None:
    payload = {"counts": dict(sorted(report.counts.items())), "items": report.items}
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
