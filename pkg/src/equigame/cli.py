"""Command-line entry point wiring all subsystems together.

Subcommands: ingest, play, curriculum, plan, report, verify-fixtures.
Exit codes: 0 success, 1 run failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from . import corpus as corpus_mod
from . import curriculum as curriculum_mod
from . import fixtures as fixtures_mod
from . import mockdata, planner, reporting
from .agents import ScriptedAgent, load_transcript
from .archive import RunArchive
from .config import RunConfig, load_config
from .errors import EquigameError
from .selfplay import run_self_play
from .toolchain import ProcessToolchain

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="equigame",
        description="Self-play generation, verification, and curation of "
        "Haskell program-equivalence instances.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration file (YAML or JSON)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--mock", action="store_true", default=None,
                        help="use the stub toolchain and scripted transcripts")

    p_ingest = sub.add_parser("ingest", parents=[common], help="validate a candidate corpus")
    p_ingest.add_argument("--input", help="candidate records, one JSON object per line")
    p_ingest.add_argument("--out", required=True, help="validated dataset output path")
    p_ingest.add_argument("--report", help="rejection report path (JSON)")
    p_ingest.add_argument("--workers", type=int, default=None)

    p_play = sub.add_parser("play", parents=[common], help="run self-play rounds")
    p_play.add_argument("--rounds", type=int, default=None)
    p_play.add_argument("--budget", type=int, default=None, help="reference programs per round")
    p_play.add_argument("--p-seq", type=float, default=None, dest="p_seq")
    p_play.add_argument("--tau", type=float, default=None)
    p_play.add_argument("--n-samples", type=int, default=None, dest="n_samples",
                        help="evaluator samples per verified instance")
    p_play.add_argument("--dataset", help="validated dataset (defaults to the mock corpus)")
    p_play.add_argument("--out", default=None, help="archive directory")
    p_play.add_argument("--resume", action="store_true")
    p_play.add_argument("--stop-after-round", type=int, default=None)
    p_play.add_argument("--endpoint", help="remote chat-completions URL for both agents")
    p_play.add_argument("--model", help="remote model name")
    p_play.add_argument("--transcripts", help="directory with alice.jsonl / bob.jsonl")

    p_cur = sub.add_parser("curriculum", parents=[common], help="export SFT sets from an archive")
    p_cur.add_argument("--archive", required=True)
    p_cur.add_argument("--out", required=True)
    p_cur.add_argument("--tau", type=float, default=None)

    p_plan = sub.add_parser("plan", parents=[common], help="regime planning from yields")
    p_plan.add_argument("--objective", required=True,
                        choices=["main", "max-volume", "balanced-yield", "volume-control"])
    p_plan.add_argument("--k", type=float, default=None, help="verified-count target")
    p_plan.add_argument("--r-seq", type=float, default=None, dest="r_seq")
    p_plan.add_argument("--r-sinq", type=float, default=None, dest="r_sinq")
    p_plan.add_argument("--archive", help="estimate yields from this archive")
    p_plan.add_argument("--rounding", default="ceil-to-10", choices=planner.ROUNDING_MODES)
    p_plan.add_argument("--table", action="store_true", help="print the K(P, p) grid")
    p_plan.add_argument("--out", help="write the planned regime as JSON")

    p_rep = sub.add_parser("report", parents=[common], help="aggregate an archive")
    p_rep.add_argument("--archive", required=True)
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--format", nargs="+", default=list(reporting.FORMATS),
                       choices=list(reporting.FORMATS))

    p_fix = sub.add_parser("verify-fixtures", parents=[common],
                           help="check the fixture corpus expectations")
    p_fix.add_argument("--manifest", default="fixtures/manifest.json")
    p_fix.add_argument("--stub", action="store_true",
                       help="verify against the table-driven stub toolchain")
    p_fix.add_argument("--check-only", action="store_true",
                       help="static manifest checks only (no toolchain)")
    p_fix.add_argument("--ghc", default=None, help="compiler command")
    p_fix.add_argument("--runner", default=None, help="interpreter command")
    p_fix.add_argument("--liquid", default=None, help="verifier command")
    return parser


def _load_run_config(args, extra_overrides: dict | None = None) -> RunConfig:
    overrides = {
        "seed": getattr(args, "seed", None),
        "mock": getattr(args, "mock", None),
    }
    overrides.update(extra_overrides or {})
    return load_config(getattr(args, "config", None), overrides)


def _toolchain_for(cfg: RunConfig):
    if cfg.mock:
        return mockdata.mock_toolchain()
    return ProcessToolchain(cfg.toolchain)


def _packaged_transcript(name: str) -> list:
    path = resources.files("equigame").joinpath(f"data/transcripts/{name}")
    with resources.as_file(path) as real:
        return load_transcript(real)


def _mock_agents(transcript_dir: str | None) -> tuple[ScriptedAgent, ScriptedAgent]:
    if transcript_dir:
        base = Path(transcript_dir)
        alice = ScriptedAgent(load_transcript(base / "alice.jsonl"), name="alice")
        bob = ScriptedAgent(load_transcript(base / "bob.jsonl"), name="bob")
    else:
        alice = ScriptedAgent(_packaged_transcript("alice.jsonl"), name="alice")
        bob = ScriptedAgent(_packaged_transcript("bob.jsonl"), name="bob")
    return alice, bob


def cmd_ingest(args) -> int:
    cfg = _load_run_config(args, {"workers": args.workers})
    toolchain = _toolchain_for(cfg)
    if args.input:
        candidates = corpus_mod.read_candidates(args.input)
    elif cfg.mock:
        candidates = mockdata.mock_candidates()
    else:
        print("ingest: --input is required without --mock", file=sys.stderr)
        return 2
    ingest_cfg = corpus_mod.IngestConfig(seed=cfg.seed, workers=cfg.workers)
    dataset, report = corpus_mod.ingest_corpus(candidates, toolchain, ingest_cfg)
    corpus_mod.write_dataset(dataset, args.out)
    if args.report:
        corpus_mod.write_report(report, args.report)
    print(f"validated {len(dataset)}/{len(candidates)} candidates -> {args.out}")
    for error_class, count in sorted(report.counts.items()):
        print(f"  rejected {error_class}: {count}")
    return 0


def cmd_play(args) -> int:
    cfg = _load_run_config(
        args,
        {
            "rounds": args.rounds,
            "budget_p": args.budget,
            "p_seq": args.p_seq,
            "tau": args.tau,
            "n_bob_samples": args.n_samples,
            "out_dir": args.out,
        },
    )
    toolchain = _toolchain_for(cfg)
    if args.dataset:
        dataset = corpus_mod.load_dataset(args.dataset)
    elif cfg.mock:
        dataset = mockdata.mock_dataset(toolchain)
    else:
        print("play: --dataset is required without --mock", file=sys.stderr)
        return 2
    if cfg.mock:
        agents = _mock_agents(args.transcripts)
    else:
        if args.endpoint:
            cfg.alice.kind = cfg.bob.kind = "remote"
            cfg.alice.url = cfg.bob.url = args.endpoint
            if args.model:
                cfg.alice.model = cfg.bob.model = args.model
        agents = (cfg.alice.build("alice"), cfg.bob.build("bob"))
    archive = run_self_play(
        dataset,
        agents,
        toolchain,
        cfg.regime,
        seed=cfg.seed,
        out_dir=cfg.out_dir,
        curriculum_config=cfg.curriculum,
        resume=args.resume,
        stop_after_round=args.stop_after_round,
        config_digest=cfg.digest(),
    )
    digest = archive.digest()
    manifest = archive.read_manifest()
    verified = sum(r.get("verified", 0) for r in manifest.get("rounds", []))
    print(f"archive: {archive.root}")
    print(f"rounds completed: {len(manifest.get('rounds', []))}, verified instances: {verified}")
    print(f"archive digest: {digest}")
    return 0


def cmd_curriculum(args) -> int:
    cfg = _load_run_config(args, {"tau": args.tau})
    archive = RunArchive(args.archive)
    if not archive.exists():
        print(f"curriculum: no archive at {args.archive}", file=sys.stderr)
        return 1
    instances = archive.load_all_instances()
    rounds = archive.round_numbers()
    round_no = rounds[-1] if rounds else 0
    counts = curriculum_mod.export_round_curriculum(
        instances, cfg.curriculum, cfg.seed, round_no, args.out, config_digest=cfg.digest()
    )
    for name, count in sorted(counts.items()):
        print(f"{name}: {count} examples")
    return 0


def cmd_plan(args) -> int:
    if args.archive:
        archive = RunArchive(args.archive)
        estimate = planner.estimate_yields(archive.load_all_instances())
    elif args.r_seq is not None and args.r_sinq is not None:
        estimate = planner.YieldEstimate(
            seq_attempts=10**6,
            seq_validated=round(args.r_seq * 10**6),
            sinq_attempts=10**6,
            sinq_validated=round(args.r_sinq * 10**6),
        )
    else:
        estimate = planner.REFERENCE_YIELDS
    objective = args.objective.replace("-", "_")
    result = planner.plan_regime(objective, estimate, k_target=args.k, rounding=args.rounding)
    spec = result.spec
    print(f"objective: {args.objective}")
    print(
        f"regime {spec.name}: p_seq={spec.p_seq}, budget={spec.budget_p}, "
        f"tau={spec.tau}, n_bob_samples={spec.n_bob_samples}, rounds={spec.rounds}"
    )
    if result.solved_p_seq is not None:
        print(f"solved balance point: p_seq = {result.solved_p_seq:.4f}")
    if result.exact_budget is not None:
        print(f"exact budget: {result.exact_budget:.2f} -> suggested {spec.budget_p}")
    if args.table:
        print()
        print("budget  p_seq  k_seq    k_sinq   k_total")
        for row in planner.k_table(estimate):
            print(
                f"{row['budget_p']:<7d} {row['p_seq']:<6.2f} {row['k_seq']:<8.3f} "
                f"{row['k_sinq']:<8.3f} {row['k_total']:<8.3f}"
            )
    if args.out:
        Path(args.out).write_text(
            json.dumps(spec.to_record(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def cmd_report(args) -> int:
    archive = RunArchive(args.archive)
    if not archive.exists():
        print(f"report: no archive at {args.archive}", file=sys.stderr)
        return 1
    instances = archive.load_all_instances()
    files = reporting.emit_report(
        instances, args.out, formats=args.format, archive_digest=archive.digest()
    )
    for path in files:
        print(f"wrote {path}")
    return 0


def cmd_verify_fixtures(args) -> int:
    entries = fixtures_mod.load_fixture_manifest(args.manifest)
    if args.check_only:
        outcomes = fixtures_mod.check_manifest_static(entries)
    else:
        if args.stub:
            toolchain = mockdata.mock_toolchain()
        else:
            from .toolchain import ToolchainConfig

            tc = ToolchainConfig()
            if args.ghc:
                tc.ghc_cmd = args.ghc
            if args.runner:
                tc.runner_cmd = args.runner
            if args.liquid:
                tc.liquid_cmd = args.liquid
            toolchain = ProcessToolchain(tc)
        outcomes = fixtures_mod.verify_fixtures(entries, toolchain)
    failures = 0
    for outcome in outcomes:
        status = "ok" if outcome.ok else "FAIL"
        print(f"[{status}] {outcome.entry.name} ({outcome.entry.expectation}): {outcome.detail}")
        failures += not outcome.ok
    print(f"{len(outcomes) - failures}/{len(outcomes)} fixtures confirmed")
    return 0 if failures == 0 else 1


_COMMANDS = {
    "ingest": cmd_ingest,
    "play": cmd_play,
    "curriculum": cmd_curriculum,
    "plan": cmd_plan,
    "report": cmd_report,
    "verify-fixtures": cmd_verify_fixtures,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except (EquigameError, ValueError) as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
