"""Aggregates run archives into difficulty trajectories, validated counts,
and classification metrics, with deterministic text/structured/plot-data
renderings."""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Sequence

from .engine import GameInstance, GameType
from .errors import EmptyInput


@dataclass(frozen=True)
class TrajectoryPoint:
    round: int
    n: int
    mean: float | None = None
    std: float | None = None
    median: float | None = None
    q1: float | None = None
    q3: float | None = None


def difficulty_trajectory(
    instances: Iterable[GameInstance], game: GameType | None = None
) -> list[TrajectoryPoint]:
    """Per-round stats over d_hat of verified instances matching the slice."""
    instances = list(instances)
    rounds = sorted({inst.round for inst in instances})
    points = []
    for round_no in rounds:
        scores = [
            inst.difficulty.d_hat
            for inst in instances
            if inst.round == round_no
            and inst.verified
            and inst.difficulty is not None
            and (game is None or inst.game == game)
        ]
        points.append(_trajectory_point(round_no, scores))
    return points


def _trajectory_point(round_no: int, scores: Sequence[float]) -> TrajectoryPoint:
    n = len(scores)
    if n == 0:
        return TrajectoryPoint(round=round_no, n=0)
    if n == 1:
        value = scores[0]
        return TrajectoryPoint(
            round=round_no, n=1, mean=value, std=0.0, median=value, q1=value, q3=value
        )
    q1, median, q3 = statistics.quantiles(scores, n=4, method="inclusive")
    return TrajectoryPoint(
        round=round_no,
        n=n,
        mean=statistics.fmean(scores),
        std=statistics.pstdev(scores),
        median=median,
        q1=q1,
        q3=q3,
    )


def validated_counts(instances: Iterable[GameInstance]) -> list[dict]:
    """Verified counts by game per round, with the SEQ share."""
    instances = list(instances)
    rounds = sorted({inst.round for inst in instances})
    table = []
    for round_no in rounds:
        seq = sum(
            1
            for i in instances
            if i.round == round_no and i.verified and i.game == GameType.SEQ
        )
        sinq = sum(
            1
            for i in instances
            if i.round == round_no and i.verified and i.game == GameType.SINQ
        )
        total = seq + sinq
        table.append(
            {
                "round": round_no,
                "seq": seq,
                "sinq": sinq,
                "seq_share": (seq / total) if total else None,
            }
        )
    return table


@dataclass(frozen=True)
class ClassificationReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: dict

    def to_record(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "confusion": self.confusion,
        }


def classification_metrics(
    predictions: Iterable[tuple[Hashable, Hashable]],
    positive_label: Hashable = True,
) -> ClassificationReport:
    """Confusion-matrix metrics over (predicted, true) label pairs.

    The positive class is an explicit parameter; zero-denominator
    precision/recall are 0 by convention, and f1 = 2PR/(P+R) or 0.
    """
    tp = fp = fn = tn = 0
    for predicted, true in predictions:
        if predicted == positive_label and true == positive_label:
            tp += 1
        elif predicted == positive_label:
            fp += 1
        elif true == positive_label:
            fn += 1
        else:
            tn += 1
    total = tp + fp + fn + tn
    if total == 0:
        raise EmptyInput("no prediction pairs")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ClassificationReport(
        accuracy=(tp + tn) / total,
        precision=precision,
        recall=recall,
        f1=f1,
        confusion={"tp": tp, "fp": fp, "fn": fn, "tn": tn},
    )


# --- rendering ---

FORMATS = ("table", "structured", "plot")


def emit_report(
    instances: list[GameInstance],
    out_dir: str | Path,
    formats: Sequence[str] = FORMATS,
    archive_digest: str | None = None,
) -> list[Path]:
    """Deterministic report files; plot data is plain columnar series."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown report formats: {sorted(unknown)}")
    trajectory = {
        "all": difficulty_trajectory(instances),
        "seq": difficulty_trajectory(instances, GameType.SEQ),
        "sinq": difficulty_trajectory(instances, GameType.SINQ),
    }
    counts = validated_counts(instances)
    written: list[Path] = []
    if "table" in formats:
        written.append(_write_text_report(trajectory, counts, out_dir / "report.txt"))
    if "structured" in formats:
        written.append(_write_structured(trajectory, counts, out_dir / "report.json"))
    if "plot" in formats:
        written.append(_write_trajectory_csv(trajectory["all"], out_dir / "trajectory.csv"))
        written.append(_write_counts_csv(counts, out_dir / "counts.csv"))
    manifest = {
        "archive_digest": archive_digest,
        "instances": len(instances),
        "verified": sum(1 for i in instances if i.verified),
        "files": [p.name for p in written],
    }
    manifest_path = out_dir / "report_manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    written.append(manifest_path)
    return written


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.4f}"


def _write_text_report(trajectory: dict, counts: list[dict], path: Path) -> Path:
    lines = ["difficulty trajectory (verified instances)", ""]
    for label, points in trajectory.items():
        lines.append(f"[{label}]")
        lines.append("round  n     mean     std      q1       median   q3")
        for p in points:
            lines.append(
                f"{p.round:<6d} {p.n:<5d} {_fmt(p.mean):<8} {_fmt(p.std):<8} "
                f"{_fmt(p.q1):<8} {_fmt(p.median):<8} {_fmt(p.q3):<8}".rstrip()
            )
        lines.append("")
    lines.append("validated counts by round")
    lines.append("round  seq   sinq  seq_share")
    for row in counts:
        share = "" if row["seq_share"] is None else f"{row['seq_share']:.4f}"
        lines.append(f"{row['round']:<6d} {row['seq']:<5d} {row['sinq']:<5d} {share}".rstrip())
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _point_record(p: TrajectoryPoint) -> dict:
    return {
        "round": p.round,
        "n": p.n,
        "mean": p.mean,
        "std": p.std,
        "q1": p.q1,
        "median": p.median,
        "q3": p.q3,
    }


def _write_structured(trajectory: dict, counts: list[dict], path: Path) -> Path:
    payload = {
        "trajectory": {
            label: [_point_record(p) for p in points] for label, points in trajectory.items()
        },
        "validated_counts": counts,
    }
    path.write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return path


def _write_trajectory_csv(points: list[TrajectoryPoint], path: Path) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "mean", "std", "q1", "median", "q3", "n"])
        for p in points:
            writer.writerow(
                [p.round, _fmt(p.mean), _fmt(p.std), _fmt(p.q1), _fmt(p.median), _fmt(p.q3), p.n]
            )
    return path


def _write_counts_csv(counts: list[dict], path: Path) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "seq", "sinq"])
        for row in counts:
            writer.writerow([row["round"], row["seq"], row["sinq"]])
    return path
