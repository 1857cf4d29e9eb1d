"""Turns verified, difficulty-scored instances into SFT datasets.

Four kinds are emitted: generation examples (all hard plus 20% as many
easy), difficulty-prediction examples (hard/easy balanced 50/50 up to pool
caps), proof examples (every verified equivalence instance), and evaluator
examples (one per correct evaluator sample). The loss target is exactly
the `target` field; consumers mask everything else.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import prompts
from .engine import BobSample, GameInstance, GameType

log = logging.getLogger(__name__)

KIND_GEN_SEQ = "AliceGenSEQ"
KIND_GEN_SINQ = "AliceGenSINQ"
KIND_DIFF_PRED = "AliceDiffPred"
KIND_PROOF = "AliceProof"
KIND_BOB = "BobEval"

ALL_KINDS = (KIND_GEN_SEQ, KIND_GEN_SINQ, KIND_DIFF_PRED, KIND_PROOF, KIND_BOB)


@dataclass
class CurriculumConfig:
    tau: float = 3.0
    easy_fraction_generation: float = 0.20
    easy_fraction_prediction: float = 0.50
    bins: int = 11  # integer difficulty bins 0..10

    def __post_init__(self) -> None:
        if not 0 <= self.tau <= 10:
            raise ValueError(f"tau {self.tau} outside [0, 10]")
        for name in ("easy_fraction_generation", "easy_fraction_prediction"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} {value} outside [0, 1]")


@dataclass(frozen=True)
class SftExample:
    system: str
    user: str
    target: str
    kind: str
    meta: dict = field(default_factory=dict)


def round_half_up(x: float) -> int:
    """Nearest integer, ties away from zero (inputs here are >= 0)."""
    return int(math.floor(x + 0.5))


def _require_scored(instances: Iterable[GameInstance]) -> list[GameInstance]:
    out = list(instances)
    for inst in out:
        if not inst.verified:
            raise ValueError(f"{inst.instance_id} is not Verified")
        if inst.difficulty is None:
            raise ValueError(f"{inst.instance_id} carries no difficulty record")
    return out


def split_by_difficulty(
    instances: Iterable[GameInstance], tau: float
) -> tuple[list[GameInstance], list[GameInstance]]:
    """hard = d_hat > tau, easy = d_hat <= tau; a disjoint partition.

    The comparison runs on the exact rational 10*(n - k)/n rather than the
    stored float, so d_hat values nominally equal to tau land in easy even
    when the float carries representation noise (e.g. 10*(1 - 7/10)).
    """
    hard, easy = [], []
    for inst in _require_scored(instances):
        d = inst.difficulty
        (hard if 10 * (d.n - d.n_success) > tau * d.n else easy).append(inst)
    return hard, easy


def difficulty_bin(inst: GameInstance) -> int:
    """floor(d_hat), computed exactly from the sample counts."""
    d = inst.difficulty
    return min((10 * (d.n - d.n_success)) // d.n, 10)


def difficulty_label(inst: GameInstance) -> int:
    """Nearest-integer d_hat, ties away from zero, in exact arithmetic."""
    d = inst.difficulty
    return (20 * (d.n - d.n_success) + d.n) // (2 * d.n)


def sample_round_robin(
    pool: Sequence[GameInstance], count: int, rng: random.Random, n_bins: int = 11
) -> list[GameInstance]:
    """Cycle ascending difficulty bins, drawing uniformly without replacement."""
    if count <= 0:
        return []
    bins: dict[int, list[GameInstance]] = {b: [] for b in range(n_bins)}
    for inst in pool:
        bins[min(difficulty_bin(inst), n_bins - 1)].append(inst)
    chosen: list[GameInstance] = []
    while len(chosen) < count:
        drew_any = False
        for b in range(n_bins):
            if len(chosen) >= count:
                break
            bucket = bins[b]
            if not bucket:
                continue
            chosen.append(bucket.pop(rng.randrange(len(bucket))))
            drew_any = True
        if not drew_any:
            break
    return chosen


def build_alice_generation_set(
    instances: Iterable[GameInstance], cfg: CurriculumConfig, rng: random.Random
) -> list[SftExample]:
    """Every hard instance plus 20% as many easy, as generation examples."""
    hard, easy = split_by_difficulty(instances, cfg.tau)
    easy_count = round_half_up(cfg.easy_fraction_generation * len(hard))
    selected = hard + sample_round_robin(easy, easy_count, rng, cfg.bins)
    return [_generation_example(inst) for inst in selected]


def _generation_example(inst: GameInstance) -> SftExample:
    kind = KIND_GEN_SEQ if inst.game == GameType.SEQ else KIND_GEN_SINQ
    return SftExample(
        system=inst.gen_system,
        user=inst.gen_user,
        target=inst.alice_raw,
        kind=kind,
        meta=_meta(inst),
    )


def build_alice_difficulty_set(
    instances: Iterable[GameInstance], cfg: CurriculumConfig, rng: random.Random
) -> list[SftExample]:
    """Hard instances plus easy ones up to the configured class balance."""
    hard, easy = split_by_difficulty(instances, cfg.tau)
    f = cfg.easy_fraction_prediction
    if f >= 1.0:
        easy_target = len(easy)
    else:
        easy_target = round_half_up(len(hard) * f / (1.0 - f))
    chosen_easy = sample_round_robin(easy, easy_target, rng, cfg.bins)
    if len(chosen_easy) < easy_target:
        log.info(
            "difficulty-prediction easy pool short: wanted %d, had %d",
            easy_target,
            len(chosen_easy),
        )
    return [_difficulty_example(inst) for inst in hard + chosen_easy]


def _difficulty_example(inst: GameInstance) -> SftExample:
    template = prompts.get_template(
        "diff_pred_seq" if inst.game == GameType.SEQ else "diff_pred_sinq"
    )
    system, user = prompts.render_prompt(
        template, {"program_p": inst.p.code, "program_q": inst.q_code}
    )
    label = difficulty_label(inst)
    return SftExample(
        system=system,
        user=user,
        target=f"Difficulty level: {label}",
        kind=KIND_DIFF_PRED,
        meta=_meta(inst),
    )


def build_alice_proof_set(instances: Iterable[GameInstance]) -> list[SftExample]:
    """One example per verified SEQ instance; no difficulty filtering."""
    out = []
    for inst in instances:
        if not inst.verified or inst.game != GameType.SEQ:
            continue
        if inst.proof_raw is None or inst.proof_user is None:
            raise ValueError(f"{inst.instance_id} verified without a proof turn")
        out.append(
            SftExample(
                system=inst.proof_system or "",
                user=inst.proof_user,
                target=inst.proof_raw,
                kind=KIND_PROOF,
                meta=_meta(inst),
            )
        )
    return out


def build_bob_set(
    instances: Iterable[GameInstance],
    bob_sample_records: Mapping[str, Sequence[BobSample]] | None = None,
) -> list[SftExample]:
    """One example per correct evaluator sample, spanning all difficulties."""
    out = []
    for inst in instances:
        if not inst.verified:
            continue
        samples = (
            bob_sample_records.get(inst.instance_id, ())
            if bob_sample_records is not None
            else inst.bob_samples
        )
        system, user = _bob_prompt_pair(inst)
        for index, sample in enumerate(samples):
            if not sample.correct:
                continue
            meta = _meta(inst)
            meta["sample_index"] = index
            out.append(
                SftExample(system=system, user=user, target=sample.raw, kind=KIND_BOB, meta=meta)
            )
    return out


def _bob_prompt_pair(inst: GameInstance) -> tuple[str, str]:
    return prompts.render_prompt(
        prompts.get_template("bob_eval"),
        {"program_p": inst.p.code, "program_q": inst.q_code},
    )


def _meta(inst: GameInstance) -> dict:
    return {
        "round": inst.round,
        "difficulty": inst.difficulty.d_hat if inst.difficulty else None,
        "difficulty_bin": difficulty_bin(inst) if inst.difficulty else None,
        "instance_id": inst.instance_id,
    }


# --- export ---


def _sort_key(example: SftExample) -> tuple:
    return (
        example.kind,
        example.meta.get("instance_id", ""),
        example.meta.get("sample_index", -1),
    )


def export_sft(examples: Iterable[SftExample], path: str | Path) -> Path:
    """Line-delimited records in a stable order; re-export is byte-identical."""
    path = Path(path)
    ordered = sorted(examples, key=_sort_key)
    with open(path, "w", encoding="utf-8") as fh:
        for ex in ordered:
            record = {
                "system": ex.system,
                "user": ex.user,
                "target": ex.target,
                "kind": ex.kind,
                "meta": ex.meta,
            }
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    _write_export_manifest(ordered, path.with_suffix(path.suffix + ".manifest.json"))
    return path


def _write_export_manifest(examples: list[SftExample], path: Path) -> None:
    counts: dict[str, int] = {}
    histogram: dict[str, int] = {}
    for ex in examples:
        counts[ex.kind] = counts.get(ex.kind, 0) + 1
        difficulty_bin_value = ex.meta.get("difficulty_bin")
        if difficulty_bin_value is not None:
            key = str(difficulty_bin_value)
            histogram[key] = histogram.get(key, 0) + 1
    payload = {
        "total": len(examples),
        "counts_by_kind": dict(sorted(counts.items())),
        "difficulty_histogram": dict(sorted(histogram.items(), key=lambda kv: int(kv[0]))),
    }
    path.write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def export_round_curriculum(
    instances: list[GameInstance],
    cfg: CurriculumConfig,
    seed: int,
    round_no: int,
    out_dir: str | Path,
    config_digest: str = "",
) -> dict[str, int]:
    """Build and export all four datasets over rounds 1..round_no (cumulative)."""
    from . import __version__

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    verified = [i for i in instances if i.verified]
    gen_rng = random.Random(f"{seed}/curriculum/gen/{round_no}")
    pred_rng = random.Random(f"{seed}/curriculum/pred/{round_no}")
    sets = {
        "alice_generation": build_alice_generation_set(verified, cfg, gen_rng),
        "alice_difficulty": build_alice_difficulty_set(verified, cfg, pred_rng),
        "alice_proof": build_alice_proof_set(verified),
        "bob": build_bob_set(verified),
    }
    for name, examples in sets.items():
        export_sft(examples, out_dir / f"{name}.jsonl")
    counts = {name: len(examples) for name, examples in sets.items()}
    manifest = {
        "seed": seed,
        "round": round_no,
        "version": __version__,
        "config_digest": config_digest,
        "counts": counts,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return counts
