"""Multi-round self-play runs: rounds, cumulative SFT exports, checkpoints.

A run is resumable at round boundaries: the checkpoint records completed
rounds and scripted-transcript cursors, so a resumed run replays the same
agent responses and produces a byte-identical archive.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable

from . import __version__
from .agents import AgentEndpoint
from .archive import RunArchive
from .corpus import ValidatedProgram
from .curriculum import CurriculumConfig, export_round_curriculum
from .engine import RoundConfig, play_round
from .planner import RegimeSpec
from .toolchain import Toolchain

log = logging.getLogger(__name__)

AgentProvider = Callable[[int], tuple[AgentEndpoint, AgentEndpoint]]


def run_self_play(
    dataset: list[ValidatedProgram],
    agents: tuple[AgentEndpoint, AgentEndpoint] | AgentProvider,
    toolchain: Toolchain,
    regime: RegimeSpec,
    seed: int = 0,
    out_dir: str | Path = "run",
    curriculum_config: CurriculumConfig | None = None,
    resume: bool = False,
    stop_after_round: int | None = None,
    config_digest: str = "",
    proof_repair_attempts: int = 3,
) -> RunArchive:
    """Execute (or finish) a run of `regime.rounds` rounds under one seed.

    `agents` is either a fixed (alice, bob) pair or a callable giving the
    endpoints for each round, which is how freshly fine-tuned generators
    enter between rounds.
    """
    provide: AgentProvider = agents if callable(agents) else (lambda _round: agents)
    archive = RunArchive(out_dir)
    core = {
        "seed": seed,
        "regime": regime.to_record(),
        "config_digest": config_digest,
        "version": __version__,
    }
    completed = 0
    if resume:
        checkpoint = archive.validate_resume_state(core)
        completed = int(checkpoint["completed_rounds"])
        cursors = checkpoint.get("agent_cursors", {})
        if completed < regime.rounds:
            alice, bob = provide(completed + 1)
            _fast_forward(alice, cursors.get("alice"))
            _fast_forward(bob, cursors.get("bob"))
    else:
        if archive.exists():
            raise ValueError(f"{archive.root} already holds a run; pass resume=True")
        archive.initialize({**core, "rounds": []})

    cur_cfg = curriculum_config or CurriculumConfig(tau=regime.tau)
    for round_no in range(completed + 1, regime.rounds + 1):
        if stop_after_round is not None and round_no > stop_after_round:
            break
        alice, bob = provide(round_no)
        cfg = RoundConfig(
            p_seq=regime.p_seq,
            n_bob_samples=regime.n_bob_samples,
            seed=seed,
            proof_repair_attempts=proof_repair_attempts,
        )
        round_log = play_round(
            dataset, alice, bob, toolchain, cfg, budget=regime.budget_p, round_no=round_no
        )
        archive.append_round(round_log)
        instances = archive.load_all_instances()
        sft_counts = export_round_curriculum(
            instances,
            cur_cfg,
            seed,
            round_no,
            archive.root / RunArchive.SFT / f"round_{round_no:03d}",
            config_digest=config_digest,
        )
        state = {
            "completed_rounds": round_no,
            "agent_cursors": {
                "alice": _cursor(alice),
                "bob": _cursor(bob),
            },
            "sft_counts": sft_counts,
        }
        archive.write_checkpoint(round_no, state)
        log.info("round %d: %s sft=%s", round_no, round_log.counts(), sft_counts)
    return archive


def _cursor(agent: AgentEndpoint) -> int | None:
    """Transcript position for replayable agents, None for remote ones."""
    return getattr(agent, "cursor", None)


def _fast_forward(agent: AgentEndpoint, cursor: int | None) -> None:
    forward = getattr(agent, "fast_forward", None)
    if cursor is not None and forward is not None:
        forward(cursor)
