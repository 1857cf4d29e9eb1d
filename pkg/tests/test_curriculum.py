"""Curriculum construction: split, round-robin sampling, the four SFT sets,
and deterministic export."""

import hashlib
import json
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equigame.curriculum import (
    KIND_BOB,
    KIND_DIFF_PRED,
    KIND_GEN_SEQ,
    KIND_GEN_SINQ,
    KIND_PROOF,
    CurriculumConfig,
    build_alice_difficulty_set,
    build_alice_generation_set,
    build_alice_proof_set,
    build_bob_set,
    difficulty_bin,
    export_sft,
    round_half_up,
    sample_round_robin,
    split_by_difficulty,
)
from equigame.engine import GameType
from synth import make_instance, uniform_difficulty_archive


def instances_with_scores(scores, game=GameType.SINQ):
    return [
        make_instance(f"i{k:03d}", game=game, n=10, n_success=int(10 - s))
        for k, s in enumerate(scores)
    ]


class TestSplit:
    def test_basic_split(self):
        hard, easy = split_by_difficulty(instances_with_scores([0, 2, 4, 6]), tau=3)
        assert [i.difficulty.n_success for i in hard] == [6, 4]  # nominal d 4 and 6
        assert [i.difficulty.n_success for i in easy] == [10, 8]  # nominal d 0 and 2

    def test_boundary_is_easy(self):
        hard, easy = split_by_difficulty(instances_with_scores([3]), tau=3)
        assert hard == [] and len(easy) == 1

    def test_empty(self):
        assert split_by_difficulty([], tau=3) == ([], [])

    def test_partition_property(self):
        archive = uniform_difficulty_archive(64)
        hard, easy = split_by_difficulty(archive, tau=3)
        assert len(hard) + len(easy) == len(archive)
        assert {i.instance_id for i in hard}.isdisjoint({i.instance_id for i in easy})

    def test_rejects_unscored(self):
        inst = make_instance("x", verified=False)
        with pytest.raises(ValueError):
            split_by_difficulty([inst], tau=3)


class TestRoundRobin:
    def test_cycles_bins_ascending(self):
        pool = instances_with_scores([0, 0, 1])
        rng = random.Random(0)
        chosen = sample_round_robin(pool, 3, rng)
        bins = [difficulty_bin(i) for i in chosen]
        assert bins[0] == 0 and bins[1] == 1 and bins[2] == 0

    def test_count_zero(self):
        assert sample_round_robin(instances_with_scores([1, 2]), 0, random.Random(0)) == []

    def test_count_exceeds_pool(self):
        pool = instances_with_scores([1, 2, 3])
        chosen = sample_round_robin(pool, 10, random.Random(0))
        assert sorted(i.instance_id for i in chosen) == sorted(i.instance_id for i in pool)

    def test_without_replacement(self):
        pool = instances_with_scores([1] * 6)
        chosen = sample_round_robin(pool, 6, random.Random(0))
        assert len({i.instance_id for i in chosen}) == 6

    @given(count=st.integers(0, 40), seed=st.integers(0, 1000))
    @settings(max_examples=100, deadline=None)
    def test_property_fairness(self, count, seed):
        """Bin counts differ by at most 1 among non-exhausted bins."""
        pool = uniform_difficulty_archive(44)
        chosen = sample_round_robin(pool, count, random.Random(seed))
        assert len(chosen) == min(count, len(pool))
        pool_bins = Counter(difficulty_bin(i) for i in pool)
        chosen_bins = Counter(difficulty_bin(i) for i in chosen)
        live = [b for b in pool_bins if chosen_bins[b] < pool_bins[b]]
        if live:
            counts = [chosen_bins[b] for b in live]
            assert max(counts) - min(counts) <= 1


class TestGenerationSet:
    def test_twenty_percent_rule(self):
        hard = instances_with_scores([5] * 10)
        easy = instances_with_scores([1] * 50)
        for i, inst in enumerate(easy):
            inst.instance_id = f"easy{i:03d}"
        examples = build_alice_generation_set(
            hard + easy, CurriculumConfig(tau=3), random.Random(0)
        )
        assert len(examples) == 12  # 10 hard + round(0.2 * 10)

    def test_rounding_half_up(self):
        hard = instances_with_scores([5] * 3)
        easy = instances_with_scores([1] * 10)
        for i, inst in enumerate(easy):
            inst.instance_id = f"easy{i:03d}"
        examples = build_alice_generation_set(
            hard + easy, CurriculumConfig(tau=3), random.Random(0)
        )
        assert len(examples) == 4  # 3 hard + round-half-up(0.6)

    def test_no_hard_means_empty(self):
        easy = instances_with_scores([1] * 20)
        examples = build_alice_generation_set(easy, CurriculumConfig(tau=3), random.Random(0))
        assert examples == []

    def test_example_contents(self):
        inst = make_instance("one", game=GameType.SEQ, n_success=0)  # d=10, hard
        [example] = build_alice_generation_set([inst], CurriculumConfig(), random.Random(0))
        assert example.kind == KIND_GEN_SEQ
        assert example.system == inst.gen_system
        assert example.user == inst.gen_user
        assert example.target == inst.alice_raw
        assert example.meta["instance_id"] == "one"

    def test_kind_tracks_game(self):
        sinq = make_instance("s", game=GameType.SINQ, n_success=0)
        [example] = build_alice_generation_set([sinq], CurriculumConfig(), random.Random(0))
        assert example.kind == KIND_GEN_SINQ


class TestDifficultySet:
    def test_fifty_fifty(self):
        hard = instances_with_scores([5] * 5)
        easy = instances_with_scores([1] * 9)
        for i, inst in enumerate(easy):
            inst.instance_id = f"easy{i:03d}"
        examples = build_alice_difficulty_set(
            hard + easy, CurriculumConfig(tau=3), random.Random(0)
        )
        assert len(examples) == 10
        assert all(e.kind == KIND_DIFF_PRED for e in examples)

    def test_easy_pool_cap(self):
        hard = instances_with_scores([5] * 5)
        easy = instances_with_scores([1, 2])
        for i, inst in enumerate(easy):
            inst.instance_id = f"easy{i:03d}"
        examples = build_alice_difficulty_set(
            hard + easy, CurriculumConfig(tau=3), random.Random(0)
        )
        assert len(examples) == 7  # 5 hard + the whole easy pool

    def test_integer_label_rendering(self):
        inst = make_instance("x", n=10, n_success=7)  # d_hat == 3.0000000000000004
        examples = build_alice_difficulty_set([inst], CurriculumConfig(tau=0), random.Random(0))
        assert examples[0].target == "Difficulty level: 3"

    def test_prompt_uses_prediction_template(self):
        inst = make_instance("x", game=GameType.SEQ, n_success=0)
        [example] = build_alice_difficulty_set([inst], CurriculumConfig(), random.Random(0))
        assert "semantically equivalent to the original program P" in example.system
        assert example.user.startswith("Predict the difficulty level")


class TestProofSet:
    def test_only_verified_seq(self):
        instances = [
            make_instance("seq-1", game=GameType.SEQ),
            make_instance("seq-2", game=GameType.SEQ),
            *[make_instance(f"sinq-{i}", game=GameType.SINQ) for i in range(9)],
        ]
        examples = build_alice_proof_set(instances)
        assert len(examples) == 2
        assert all(e.kind == KIND_PROOF for e in examples)

    def test_contains_lemma(self):
        [example] = build_alice_proof_set([make_instance("s", game=GameType.SEQ)])
        assert "lemma_double_equiv" in example.target

    def test_empty_without_seq(self):
        assert build_alice_proof_set([make_instance("x", game=GameType.SINQ)]) == []

    def test_no_difficulty_filtering(self):
        easy_seq = make_instance("easy", game=GameType.SEQ, n_success=10)  # d=0
        assert len(build_alice_proof_set([easy_seq])) == 1


class TestBobSet:
    def test_one_example_per_correct_sample(self):
        inst = make_instance("x", n=10, n_success=7)
        examples = build_bob_set([inst])
        assert len(examples) == 7
        assert all(e.kind == KIND_BOB for e in examples)
        assert all(e.meta["instance_id"] == "x" for e in examples)

    def test_zero_correct(self):
        assert build_bob_set([make_instance("x", n=10, n_success=0)]) == []

    def test_malformed_excluded(self):
        from equigame.engine import BobSample

        inst = make_instance("x", n=3, n_success=3)
        inst.bob_samples = (
            BobSample("ok\n# Equivalent?\nNo", "NotEquivalent", True),
            BobSample("meh", "Malformed", False),
            BobSample("ok\n# Equivalent?\nNo", "NotEquivalent", True),
        )
        assert len(build_bob_set([inst])) == 2

    def test_explicit_records_override(self):
        from equigame.engine import BobSample

        inst = make_instance("x", n=10, n_success=7)
        records = {"x": (BobSample("r", "NotEquivalent", True),)}
        assert len(build_bob_set([inst], records)) == 1


class TestExport:
    def test_stable_ordering_and_reexport(self, tmp_path):
        archive = uniform_difficulty_archive(30)
        cfg = CurriculumConfig()
        examples = build_alice_generation_set(archive, cfg, random.Random(0))
        examples += build_alice_proof_set(archive)
        examples += build_bob_set(archive)
        path_a = tmp_path / "a.jsonl"
        path_b = tmp_path / "b.jsonl"
        export_sft(examples, path_a)
        export_sft(list(reversed(examples)), path_b)
        digest_a = hashlib.sha256(path_a.read_bytes()).hexdigest()
        digest_b = hashlib.sha256(path_b.read_bytes()).hexdigest()
        assert digest_a == digest_b

    def test_line_count(self, tmp_path):
        archive = uniform_difficulty_archive(20)
        examples = build_alice_proof_set(archive)
        path = tmp_path / "proof.jsonl"
        export_sft(examples, path)
        lines = [l for l in path.read_text(encoding="utf-8").splitlines() if l]
        assert len(lines) == len(examples)
        record = json.loads(lines[0])
        assert set(record) == {"system", "user", "target", "kind", "meta"}

    def test_empty_export_writes_manifest_sidecar(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        export_sft([], path)
        assert path.read_text(encoding="utf-8") == ""
        manifest = json.loads(
            (tmp_path / "empty.jsonl.manifest.json").read_text(encoding="utf-8")
        )
        assert manifest["total"] == 0

    def test_manifest_histogram(self, tmp_path):
        archive = uniform_difficulty_archive(22)  # two full 0..10 cycles
        examples = build_alice_difficulty_set(
            archive, CurriculumConfig(tau=0, easy_fraction_prediction=0.0), random.Random(0)
        )
        export_sft(examples, tmp_path / "d.jsonl")
        manifest = json.loads(
            (tmp_path / "d.jsonl.manifest.json").read_text(encoding="utf-8")
        )
        assert manifest["counts_by_kind"] == {KIND_DIFF_PRED: len(examples)}


def test_round_half_up():
    assert round_half_up(0.5) == 1
    assert round_half_up(0.6) == 1
    assert round_half_up(0.4) == 0
    assert round_half_up(2.5) == 3
    assert round_half_up(2.0) == 2
