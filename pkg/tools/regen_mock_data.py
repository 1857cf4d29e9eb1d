#!/usr/bin/env python3
"""Re-record the shipped mock transcripts.

Plays the default mock scenario (rounds=2, budget=3, seed=7) against the
rule-based responder and writes the resulting transcripts into the package
data directory. Run this whenever prompt templates, the mock corpus, or
the engine's request sequence change.
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from equigame.agents import save_transcript  # noqa: E402
from equigame.mockdata import RecordingAgent, RuleBasedResponder, mock_dataset, mock_toolchain  # noqa: E402
from equigame.planner import RegimeSpec  # noqa: E402
from equigame.selfplay import run_self_play  # noqa: E402

SCENARIO = RegimeSpec(name="E0", budget_p=3, p_seq=0.5, tau=3.0, n_bob_samples=10, rounds=2)
SEED = 7


def main() -> int:
    responder = RuleBasedResponder()
    alice = RecordingAgent(responder, name="alice")
    bob = RecordingAgent(responder, name="bob")
    toolchain = mock_toolchain()
    dataset = mock_dataset(toolchain)
    with tempfile.TemporaryDirectory() as tmp:
        archive = run_self_play(
            dataset, (alice, bob), toolchain, SCENARIO, seed=SEED, out_dir=Path(tmp) / "run"
        )
        manifest = archive.read_manifest()
    out_dir = REPO / "src" / "equigame" / "data" / "transcripts"
    out_dir.mkdir(parents=True, exist_ok=True)
    save_transcript(alice.entries, out_dir / "alice.jsonl")
    save_transcript(bob.entries, out_dir / "bob.jsonl")
    print(f"alice: {len(alice.entries)} entries, bob: {len(bob.entries)} entries")
    for row in manifest["rounds"]:
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
