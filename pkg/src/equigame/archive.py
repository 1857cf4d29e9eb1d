"""Run archives: line-delimited instance records, manifest, checkpoints.

Archives are byte-deterministic for a fixed (dataset, transcripts, seed,
regime): no timestamps, stable key order, stable float repr. The archive
digest hashes every file, so two runs agree iff their archives agree.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .corpus import program_from_record, program_to_record
from .engine import (
    BobSample,
    DifficultyRecord,
    DivergenceEvidence,
    GameInstance,
    GameType,
    ProofEvidence,
    RoundLog,
)
from .errors import CheckpointCorrupt


def dumps_stable(payload: object) -> str:
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def instance_to_record(inst: GameInstance) -> dict:
    evidence: dict | None = None
    if isinstance(inst.evidence, ProofEvidence):
        evidence = {"kind": "proof", "proof": inst.evidence.proof}
    elif isinstance(inst.evidence, DivergenceEvidence):
        evidence = {
            "kind": "diverging_input",
            "input": inst.evidence.diverging_input,
            "observed_outputs": list(inst.evidence.observed_outputs),
            "halting_asymmetry": inst.evidence.halting_asymmetry,
        }
    difficulty = None
    if inst.difficulty is not None:
        difficulty = {
            "n": inst.difficulty.n,
            "n_success": inst.difficulty.n_success,
            "d_hat": inst.difficulty.d_hat,
        }
    return {
        "instance_id": inst.instance_id,
        "round": inst.round,
        "game": inst.game.value,
        "p": program_to_record(inst.p),
        "q_code": inst.q_code,
        "q_name": inst.q_name,
        "status": inst.status,
        "reject_reason": inst.reject_reason,
        "evidence": evidence,
        "difficulty": difficulty,
        "bob_samples": [
            {"raw": s.raw, "verdict": s.verdict, "correct": s.correct}
            for s in inst.bob_samples
        ],
        "alice_win": inst.alice_win,
        "gen_system": inst.gen_system,
        "gen_user": inst.gen_user,
        "alice_raw": inst.alice_raw,
        "proof_system": inst.proof_system,
        "proof_user": inst.proof_user,
        "proof_raw": inst.proof_raw,
    }


def instance_from_record(record: dict) -> GameInstance:
    evidence = None
    ev = record.get("evidence")
    if ev is not None:
        if ev["kind"] == "proof":
            evidence = ProofEvidence(ev["proof"])
        else:
            evidence = DivergenceEvidence(
                diverging_input=ev["input"],
                observed_outputs=tuple(ev["observed_outputs"]),
                halting_asymmetry=ev.get("halting_asymmetry", False),
            )
    difficulty = None
    if record.get("difficulty") is not None:
        d = record["difficulty"]
        difficulty = DifficultyRecord(n=d["n"], n_success=d["n_success"], d_hat=d["d_hat"])
    return GameInstance(
        instance_id=record["instance_id"],
        round=record["round"],
        game=GameType(record["game"]),
        p=program_from_record(record["p"]),
        gen_system=record["gen_system"],
        gen_user=record["gen_user"],
        alice_raw=record["alice_raw"],
        q_code=record["q_code"],
        q_name=record.get("q_name"),
        status=record["status"],
        reject_reason=record.get("reject_reason"),
        evidence=evidence,
        difficulty=difficulty,
        bob_samples=tuple(
            BobSample(raw=s["raw"], verdict=s["verdict"], correct=s["correct"])
            for s in record.get("bob_samples", [])
        ),
        alice_win=record.get("alice_win"),
        proof_system=record.get("proof_system"),
        proof_user=record.get("proof_user"),
        proof_raw=record.get("proof_raw"),
    )


class RunArchive:
    """Filesystem layout for one self-play run."""

    MANIFEST = "manifest.json"
    ROUNDS = "rounds"
    SFT = "sft"
    CHECKPOINTS = "checkpoints"

    def __init__(self, root: str | Path):
        self.root = Path(root)

    # -- manifest --

    @property
    def manifest_path(self) -> Path:
        return self.root / self.MANIFEST

    def initialize(self, manifest: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / self.ROUNDS).mkdir(exist_ok=True)
        (self.root / self.SFT).mkdir(exist_ok=True)
        (self.root / self.CHECKPOINTS).mkdir(exist_ok=True)
        self.write_manifest(manifest)

    def exists(self) -> bool:
        return self.manifest_path.exists()

    def read_manifest(self) -> dict:
        return json.loads(self.manifest_path.read_text(encoding="utf-8"))

    def write_manifest(self, manifest: dict) -> None:
        self.manifest_path.write_text(
            json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )

    # -- rounds --

    def round_path(self, round_no: int) -> Path:
        return self.root / self.ROUNDS / f"round_{round_no:03d}.jsonl"

    def append_round(self, log: RoundLog) -> None:
        path = self.round_path(log.round)
        with open(path, "w", encoding="utf-8") as fh:
            for inst in log.instances:
                fh.write(dumps_stable(instance_to_record(inst)) + "\n")
        manifest = self.read_manifest()
        rounds = [r for r in manifest.get("rounds", []) if r["round"] != log.round]
        rounds.append({"round": log.round, **log.counts()})
        manifest["rounds"] = sorted(rounds, key=lambda r: r["round"])
        self.write_manifest(manifest)

    def round_numbers(self) -> list[int]:
        rounds_dir = self.root / self.ROUNDS
        if not rounds_dir.is_dir():
            return []
        numbers = []
        for path in rounds_dir.glob("round_*.jsonl"):
            numbers.append(int(path.stem.split("_")[1]))
        return sorted(numbers)

    def load_round(self, round_no: int) -> list[GameInstance]:
        out = []
        for line in self.round_path(round_no).read_text(encoding="utf-8").splitlines():
            if line.strip():
                out.append(instance_from_record(json.loads(line)))
        return out

    def load_all_instances(self) -> list[GameInstance]:
        out: list[GameInstance] = []
        for round_no in self.round_numbers():
            out.extend(self.load_round(round_no))
        return out

    # -- checkpoints --

    def checkpoint_path(self, round_no: int) -> Path:
        return self.root / self.CHECKPOINTS / f"round_{round_no:03d}.json"

    def write_checkpoint(self, round_no: int, state: dict) -> None:
        self.checkpoint_path(round_no).write_text(
            json.dumps(state, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )

    def latest_checkpoint(self) -> dict | None:
        checks_dir = self.root / self.CHECKPOINTS
        if not checks_dir.is_dir():
            return None
        paths = sorted(checks_dir.glob("round_*.json"))
        if not paths:
            return None
        return json.loads(paths[-1].read_text(encoding="utf-8"))

    def validate_resume_state(self, expected_core: dict) -> dict:
        """Check manifest/checkpoint coherence before resuming."""
        if not self.exists():
            raise CheckpointCorrupt(f"no archive at {self.root}")
        manifest = self.read_manifest()
        for key, value in expected_core.items():
            if manifest.get(key) != value:
                raise CheckpointCorrupt(
                    f"manifest {key!r} is {manifest.get(key)!r}, expected {value!r}"
                )
        checkpoint = self.latest_checkpoint()
        if checkpoint is None:
            raise CheckpointCorrupt("no checkpoint to resume from")
        for round_no in range(1, checkpoint["completed_rounds"] + 1):
            if not self.round_path(round_no).exists():
                raise CheckpointCorrupt(f"round {round_no} file missing")
        return checkpoint

    # -- digest --

    def digest(self) -> str:
        hasher = hashlib.sha256()
        for path in sorted(self.root.rglob("*")):
            if not path.is_file():
                continue
            rel = path.relative_to(self.root).as_posix()
            hasher.update(rel.encode("utf-8") + b"\0")
            hasher.update(hashlib.sha256(path.read_bytes()).hexdigest().encode("ascii"))
            hasher.update(b"\n")
        return hasher.hexdigest()
