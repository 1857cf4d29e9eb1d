"""The self-play loop: game selection, generator turns, verification,
proof repair, and evaluator-based difficulty scoring.

All randomness is drawn from string-seeded `random.Random` streams derived
from the run seed, and game choices are pre-drawn per round, so scheduling
order can never change results.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from enum import Enum

from . import agents as agents_mod
from . import hlang, prompts
from .agents import AgentEndpoint, BobVerdict
from .corpus import ValidatedProgram
from .errors import (
    AgentError,
    BadLemmaName,
    EmptyCodeBlock,
    LiteralParseError,
    MarkerMissing,
    NameCollision,
    NoSignature,
    SignatureMismatch,
    UnsupportedType,
)
from .toolchain import (
    Agrees,
    CandidateProgram,
    Diverges,
    Indeterminate,
    ProofCheckResult,
    Toolchain,
    build_equiv_module,
)

log = logging.getLogger(__name__)


class GameType(str, Enum):
    SEQ = "SEQ"
    SINQ = "SINQ"


STATUS_VERIFIED = "Verified"
STATUS_REJECTED = "RejectedAtVerification"


@dataclass(frozen=True)
class ProofEvidence:
    proof: str


@dataclass(frozen=True)
class DivergenceEvidence:
    diverging_input: str
    observed_outputs: tuple[str, str]
    halting_asymmetry: bool = False


@dataclass(frozen=True)
class DifficultyRecord:
    n: int
    n_success: int
    d_hat: float

    def __post_init__(self) -> None:
        if not 0 <= self.n_success <= self.n:
            raise ValueError(f"n_success {self.n_success} outside [0, {self.n}]")

    @classmethod
    def from_counts(cls, n: int, n_success: int) -> "DifficultyRecord":
        return cls(n=n, n_success=n_success, d_hat=difficulty_score(n, n_success))


def difficulty_score(n: int, n_success: int) -> float:
    """The evaluator's scaled failure rate: 10 * (1 - n_success / n)."""
    if n < 1:
        raise ValueError("difficulty needs at least one sample")
    return 10 * (1 - n_success / n)


@dataclass(frozen=True)
class BobSample:
    raw: str
    verdict: str
    correct: bool


@dataclass
class RoundConfig:
    p_seq: float = 0.5
    n_bob_samples: int = 10
    target_difficulty: int = 10
    proof_repair_attempts: int = 3
    seed: int = 0
    run_timeout: float | None = None
    proof_timeout: float | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.p_seq <= 1:
            raise ValueError(f"p_seq {self.p_seq} outside [0, 1]")
        if self.n_bob_samples < 1:
            raise ValueError("n_bob_samples must be >= 1")


@dataclass
class GameInstance:
    instance_id: str
    round: int
    game: GameType
    p: ValidatedProgram
    gen_system: str
    gen_user: str
    alice_raw: str = ""
    q_code: str = ""
    q_name: str | None = None
    status: str = STATUS_REJECTED
    reject_reason: str | None = None
    evidence: ProofEvidence | DivergenceEvidence | None = None
    difficulty: DifficultyRecord | None = None
    bob_samples: tuple[BobSample, ...] = ()
    alice_win: bool | None = None
    proof_system: str | None = None
    proof_user: str | None = None
    proof_raw: str | None = None

    @property
    def verified(self) -> bool:
        return self.status == STATUS_VERIFIED

    @property
    def ground_truth_equivalent(self) -> bool:
        return self.game == GameType.SEQ


def select_game(rng: random.Random, p_seq: float) -> GameType:
    """SEQ with probability p_seq; advances the caller's random stream."""
    return GameType.SEQ if rng.random() < p_seq else GameType.SINQ


def _arg_type_text(program: ValidatedProgram) -> str:
    return " -> ".join(hlang.render_type(t) for t in program.signature.arg_types)


def run_seq_turn(
    p: ValidatedProgram,
    alice: AgentEndpoint,
    toolchain: Toolchain,
    cfg: RoundConfig,
    round_no: int = 0,
    instance_id: str = "",
) -> GameInstance:
    """One equivalence turn: generate Q, then prove it, repairing on rejection."""
    gen_system, gen_user = prompts.render_prompt(
        prompts.get_template("alice_seq"),
        {
            "difficulty_level": cfg.target_difficulty,
            "program_p_completion": p.code,
            "t": _arg_type_text(p),
        },
    )
    inst = GameInstance(
        instance_id=instance_id or f"seq-{p.id}",
        round=round_no,
        game=GameType.SEQ,
        p=p,
        gen_system=gen_system,
        gen_user=gen_user,
    )
    try:
        inst.alice_raw = agents_mod.complete(alice, gen_system, gen_user)
    except AgentError as exc:
        inst.reject_reason = f"agent failure: {exc}"
        return inst
    try:
        parsed = agents_mod.parse_alice_seq(inst.alice_raw)
        q_sig = hlang.extract_signature(parsed.q_code)
    except (MarkerMissing, EmptyCodeBlock, NoSignature, UnsupportedType) as exc:
        inst.reject_reason = f"parse: {exc}"
        return inst
    inst.q_code = parsed.q_code
    inst.q_name = q_sig.function_name
    if q_sig.function_name == p.signature.function_name:
        inst.reject_reason = f"name collision: Q reuses {q_sig.function_name!r}"
        return inst
    if (
        q_sig.arg_types != p.signature.arg_types
        or q_sig.result_type != p.signature.result_type
    ):
        inst.reject_reason = "signature mismatch between P and Q"
        return inst
    q_prog = CandidateProgram(parsed.q_code, q_sig)

    proof_template = prompts.get_template("proof_seq")
    error_section = ""
    equiv_code = ""
    last_error = "no proof attempt made"
    for _attempt in range(max(1, cfg.proof_repair_attempts)):
        proof_system, proof_user = prompts.render_prompt(
            proof_template,
            {
                "error_msg_section": error_section,
                "equiv_code": equiv_code,
                "func_name_p": p.signature.function_name,
                "func_name_q": q_sig.function_name,
                "arg_type": _arg_type_text(p),
                "program_p_content": p.code,
                "program_q_content": parsed.q_code,
            },
        )
        inst.proof_system, inst.proof_user = proof_system, proof_user
        try:
            proof_raw = agents_mod.complete(alice, proof_system, proof_user)
        except AgentError as exc:
            inst.reject_reason = f"agent failure: {exc}"
            return inst
        inst.proof_raw = proof_raw
        try:
            proof = agents_mod.parse_proof_block(proof_raw, p.signature.function_name)
        except (MarkerMissing, EmptyCodeBlock, BadLemmaName) as exc:
            last_error = f"proof format: {exc}"
            error_section = f"Your previous answer was rejected: {exc}"
            continue
        try:
            module = build_equiv_module(p, q_prog, proof.proof_block)
        except NameCollision as exc:
            inst.reject_reason = str(exc)
            return inst
        result = toolchain.check_liquid_proof(module, cfg.proof_timeout)
        if result.accepted:
            inst.status = STATUS_VERIFIED
            inst.reject_reason = None
            inst.evidence = ProofEvidence(proof.proof_block)
            return inst
        if result.verdict == ProofCheckResult.TOOL_FAILURE:
            inst.reject_reason = f"verifier tool failure: {result.message}"
            return inst
        last_error = result.message
        error_section = result.message
        equiv_code = module.source
    inst.reject_reason = f"proof rejected: {last_error}"
    return inst


def run_sinq_turn(
    p: ValidatedProgram,
    alice: AgentEndpoint,
    toolchain: Toolchain,
    cfg: RoundConfig,
    round_no: int = 0,
    instance_id: str = "",
) -> GameInstance:
    """One inequivalence turn: generate (Q, x) and confirm the divergence."""
    gen_system, gen_user = prompts.render_prompt(
        prompts.get_template("alice_sinq"),
        {"difficulty_level": cfg.target_difficulty, "program": p.code},
    )
    inst = GameInstance(
        instance_id=instance_id or f"sinq-{p.id}",
        round=round_no,
        game=GameType.SINQ,
        p=p,
        gen_system=gen_system,
        gen_user=gen_user,
    )
    try:
        inst.alice_raw = agents_mod.complete(alice, gen_system, gen_user)
    except AgentError as exc:
        inst.reject_reason = f"agent failure: {exc}"
        return inst
    try:
        parsed = agents_mod.parse_alice_sinq(inst.alice_raw)
        q_sig = hlang.extract_signature(parsed.q_code)
    except (MarkerMissing, EmptyCodeBlock, NoSignature, UnsupportedType) as exc:
        inst.reject_reason = f"parse: {exc}"
        return inst
    inst.q_code = parsed.q_code
    inst.q_name = q_sig.function_name
    if hlang.normalize_code(parsed.q_code) == hlang.normalize_code(p.code):
        inst.reject_reason = "identity: Q is textually identical to P"
        return inst
    q_prog = CandidateProgram(parsed.q_code, q_sig)
    try:
        verdict = toolchain.check_divergence(p, q_prog, parsed.diverging_input, cfg.run_timeout)
    except (SignatureMismatch, LiteralParseError) as exc:
        inst.reject_reason = f"{type(exc).__name__}: {exc}"
        return inst
    if isinstance(verdict, Diverges):
        inst.status = STATUS_VERIFIED
        inst.reject_reason = None
        inst.evidence = DivergenceEvidence(
            diverging_input=parsed.diverging_input,
            observed_outputs=verdict.evidence,
            halting_asymmetry=verdict.halting_asymmetry,
        )
        return inst
    if isinstance(verdict, Agrees):
        inst.reject_reason = "agrees: P and Q agree on the provided input"
    else:
        assert isinstance(verdict, Indeterminate)
        inst.reject_reason = f"indeterminate: {verdict.reason}"
    return inst


def score_difficulty(
    inst: GameInstance, bob: AgentEndpoint, n: int
) -> tuple[DifficultyRecord, tuple[BobSample, ...]]:
    """Sample the evaluator n times on (P, Q); a malformed verdict never counts."""
    if not inst.verified:
        raise ValueError("only Verified instances are scored")
    system, user = bob_prompt(inst)
    samples: list[BobSample] = []
    truth = BobVerdict.EQUIVALENT if inst.ground_truth_equivalent else BobVerdict.NOT_EQUIVALENT
    for _ in range(n):
        raw = agents_mod.complete(bob, system, user)
        verdict = agents_mod.parse_bob_verdict(raw)
        samples.append(
            BobSample(raw=raw, verdict=verdict.value, correct=verdict.value == truth)
        )
    n_success = sum(1 for s in samples if s.correct)
    return DifficultyRecord.from_counts(n, n_success), tuple(samples)


def bob_prompt(inst: GameInstance) -> tuple[str, str]:
    return prompts.render_prompt(
        prompts.get_template("bob_eval"),
        {"program_p": inst.p.code, "program_q": inst.q_code},
    )


@dataclass
class RoundLog:
    round: int
    instances: list[GameInstance] = field(default_factory=list)

    def counts(self) -> dict:
        verified = [i for i in self.instances if i.verified]
        return {
            "attempts": len(self.instances),
            "verified": len(verified),
            "seq_attempts": sum(1 for i in self.instances if i.game == GameType.SEQ),
            "sinq_attempts": sum(1 for i in self.instances if i.game == GameType.SINQ),
            "seq_verified": sum(1 for i in verified if i.game == GameType.SEQ),
            "sinq_verified": sum(1 for i in verified if i.game == GameType.SINQ),
        }


def round_rng(seed: int, round_no: int, stream: str = "round") -> random.Random:
    return random.Random(f"{seed}/{stream}/{round_no}")


def _draw_round_programs(
    dataset: list[ValidatedProgram], budget: int, rng: random.Random
) -> list[ValidatedProgram]:
    """Without replacement, reshuffling whenever the pool runs dry."""
    chosen: list[ValidatedProgram] = []
    while len(chosen) < budget:
        pool = list(dataset)
        rng.shuffle(pool)
        take = min(budget - len(chosen), len(pool))
        chosen.extend(pool[:take])
    return chosen


def play_round(
    dataset: list[ValidatedProgram],
    alice: AgentEndpoint,
    bob: AgentEndpoint,
    toolchain: Toolchain,
    cfg: RoundConfig,
    budget: int,
    round_no: int = 1,
) -> RoundLog:
    """One pass over the round's budget: select, play, verify, score."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    log_ = RoundLog(round=round_no)
    if budget == 0:
        return log_
    if not dataset:
        raise ValueError("dataset must be non-empty for a positive budget")
    rng = round_rng(cfg.seed, round_no)
    programs = _draw_round_programs(dataset, budget, rng)
    games = [select_game(rng, cfg.p_seq) for _ in programs]
    for slot, (program, game) in enumerate(zip(programs, games)):
        instance_id = f"r{round_no:03d}-s{slot:04d}-{program.id}"
        turn = run_seq_turn if game == GameType.SEQ else run_sinq_turn
        inst = turn(program, alice, toolchain, cfg, round_no, instance_id)
        if inst.verified:
            try:
                record, samples = score_difficulty(inst, bob, cfg.n_bob_samples)
            except AgentError as exc:
                # an unscored instance cannot stay Verified (difficulty is
                # present iff Verified), so it is demoted with its cause
                log.warning("scoring failed for %s: %s", instance_id, exc)
                inst.status = STATUS_REJECTED
                inst.reject_reason = f"scoring failed: {exc}"
            else:
                inst.difficulty = record
                inst.bob_samples = samples
                inst.alice_win = record.n_success * 2 < record.n
        log_.instances.append(inst)
    return log_
