"""Self-play engine: turns, verification gating, difficulty, rounds."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equigame import mockdata as m
from equigame.agents import ScriptedAgent, TranscriptEntry
from equigame.engine import (
    DifficultyRecord,
    DivergenceEvidence,
    GameType,
    ProofEvidence,
    RoundConfig,
    difficulty_score,
    play_round,
    run_seq_turn,
    run_sinq_turn,
    score_difficulty,
    select_game,
)
from equigame.mockdata import RuleBasedResponder


@pytest.fixture()
def stub():
    return m.mock_toolchain()


@pytest.fixture()
def dataset(stub):
    return m.mock_dataset(stub)


def program_named(dataset, name):
    return next(p for p in dataset if p.signature.function_name == name)


def scripted(*responses):
    return ScriptedAgent([TranscriptEntry(r) for r in responses])


class TestSelectGame:
    def test_p_zero_always_sinq(self):
        rng = random.Random(1)
        assert all(select_game(rng, 0.0) == GameType.SINQ for _ in range(100))

    def test_p_one_always_seq(self):
        rng = random.Random(1)
        assert all(select_game(rng, 1.0) == GameType.SEQ for _ in range(100))

    def test_empirical_frequency_under_seed(self):
        rng = random.Random("7/freq-test")
        draws = [select_game(rng, 0.5) for _ in range(10_000)]
        fraction = sum(1 for g in draws if g == GameType.SEQ) / len(draws)
        assert 0.48 <= fraction <= 0.52


class TestDifficultyScore:
    def test_boundaries(self):
        assert difficulty_score(10, 10) == 0.0
        assert difficulty_score(10, 0) == 10.0

    def test_direct_value(self):
        assert difficulty_score(10, 7) == 10 * (1 - 7 / 10)

    @given(n=st.integers(1, 50), k=st.integers(0, 50))
    @settings(max_examples=200, deadline=None)
    def test_property_exact_formula(self, n, k):
        if k > n:
            return
        assert difficulty_score(n, k) == 10 * (1 - k / n)

    def test_strictly_decreasing_in_k(self):
        for n in range(1, 21):
            scores = [difficulty_score(n, k) for k in range(n + 1)]
            assert all(a > b for a, b in zip(scores, scores[1:]))

    def test_record_validates_counts(self):
        with pytest.raises(ValueError):
            DifficultyRecord(n=5, n_success=6, d_hat=0.0)


class TestSeqTurn:
    def test_verified_with_proof(self, stub, dataset):
        alice = RuleBasedResponder()
        inst = run_seq_turn(program_named(dataset, "sign"), alice, stub, RoundConfig())
        assert inst.verified
        assert isinstance(inst.evidence, ProofEvidence)
        assert "lemma_sign_equiv" in inst.evidence.proof
        assert inst.proof_raw is not None

    def test_repair_loop_recovers(self, stub, dataset):
        """First proof answer has a bad lemma name; the repair succeeds."""
        alice = RuleBasedResponder()
        inst = run_seq_turn(program_named(dataset, "double"), alice, stub, RoundConfig())
        assert inst.verified
        assert "rejected" in inst.proof_user  # repair prompt carried the error

    def test_unprovable_pair_rejected(self, stub, dataset):
        alice = RuleBasedResponder()
        inst = run_seq_turn(program_named(dataset, "isEven"), alice, stub, RoundConfig())
        assert not inst.verified
        assert "proof rejected" in inst.reject_reason

    def test_no_code_block_rejected(self, stub, dataset):
        alice = scripted("<think>\nhmm\n</think>\nI refuse.")
        inst = run_seq_turn(program_named(dataset, "double"), alice, stub, RoundConfig())
        assert not inst.verified
        assert inst.reject_reason.startswith("parse:")

    def test_name_collision_rejected(self, stub, dataset):
        alice = scripted(
            "Generated Program `Q`:\n```haskell\n" + m.DOUBLE_CODE + "\n```\n"
        )
        inst = run_seq_turn(program_named(dataset, "double"), alice, stub, RoundConfig())
        assert not inst.verified
        assert "name collision" in inst.reject_reason

    def test_agent_failure_rejected(self, stub, dataset):
        alice = ScriptedAgent([])  # immediately exhausted
        inst = run_seq_turn(program_named(dataset, "double"), alice, stub, RoundConfig())
        assert not inst.verified

    def test_attempts_bounded(self, stub, dataset):
        bad_proof = "```haskell\nlemma_double_equiv x = double x\n```"
        alice = scripted(
            "Generated Program `Q`:\n```haskell\n" + m.DOUBLE_ALT_CODE + "\n```\n",
            bad_proof,
            bad_proof,
            bad_proof,
        )
        cfg = RoundConfig(proof_repair_attempts=3)
        inst = run_seq_turn(program_named(dataset, "double"), alice, stub, cfg)
        assert not inst.verified
        assert alice.cursor == 4  # one generation + three proof attempts


class TestSinqTurn:
    def test_verified_divergence(self, stub, dataset):
        alice = RuleBasedResponder()
        inst = run_sinq_turn(program_named(dataset, "sign"), alice, stub, RoundConfig())
        assert inst.verified
        assert isinstance(inst.evidence, DivergenceEvidence)
        assert inst.evidence.diverging_input == "0"
        assert set(inst.evidence.observed_outputs) == {'"zero"', '"non-positive"'}

    def test_identity_rejected_before_execution(self, stub, dataset):
        response = (
            "Generated Program `Q`:\n```haskell\n" + m.SIGN_CODE + "\n```\n"
            "Diverging Input `x`:\n```\n0\n```\n"
        )
        inst = run_sinq_turn(
            program_named(dataset, "sign"), scripted(response), stub, RoundConfig()
        )
        assert not inst.verified
        assert "identity" in inst.reject_reason

    def test_agreeing_input_rejected(self, stub, dataset):
        response = (
            "Generated Program `Q`:\n```haskell\n" + m.SIGN_INEQ_CODE + "\n```\n"
            "Diverging Input `x`:\n```\n5\n```\n"  # both say "positive"
        )
        inst = run_sinq_turn(
            program_named(dataset, "sign"), scripted(response), stub, RoundConfig()
        )
        assert not inst.verified
        assert "agrees" in inst.reject_reason

    def test_bad_input_literal_rejected(self, stub, dataset):
        response = (
            "Generated Program `Q`:\n```haskell\n" + m.SIGN_INEQ_CODE + "\n```\n"
            'Diverging Input `x`:\n```\n"zero"\n```\n'
        )
        inst = run_sinq_turn(
            program_named(dataset, "sign"), scripted(response), stub, RoundConfig()
        )
        assert not inst.verified
        assert "LiteralParseError" in inst.reject_reason


class TestScoreDifficulty:
    def _verified_instance(self, stub, dataset, name="sign"):
        return run_sinq_turn(
            program_named(dataset, name), RuleBasedResponder(), stub, RoundConfig()
        )

    def test_counts_and_score(self, stub, dataset):
        inst = self._verified_instance(stub, dataset)
        bob = RuleBasedResponder()  # signIneq pattern: 7 ok, 2 wrong, 1 malformed
        record, samples = score_difficulty(inst, bob, 10)
        assert record.n == 10
        assert record.n_success == 7
        assert record.d_hat == 10 * (1 - 7 / 10)
        assert len(samples) == 10
        assert sum(s.correct for s in samples) == 7

    def test_malformed_never_counts(self, stub, dataset):
        inst = self._verified_instance(stub, dataset)
        malformed = "no verdict here"
        bob = scripted(*([malformed] * 10))
        record, samples = score_difficulty(inst, bob, 10)
        assert record.n_success == 0
        assert record.d_hat == 10.0
        assert all(s.verdict == "Malformed" for s in samples)

    def test_requires_verified(self, stub, dataset):
        inst = run_sinq_turn(
            program_named(dataset, "sign"),
            scripted("Generated Program `Q`:\n```haskell\n" + m.SIGN_CODE + "\n```\n"
                     "Diverging Input `x`:\n```\n0\n```\n"),
            stub,
            RoundConfig(),
        )
        with pytest.raises(ValueError):
            score_difficulty(inst, RuleBasedResponder(), 10)


class TestPlayRound:
    def test_deterministic_sequence_under_seed(self, stub, dataset):
        cfg = RoundConfig(p_seq=0.5, seed=7)
        log_a = play_round(dataset, RuleBasedResponder(), RuleBasedResponder(), stub, cfg, 4)
        log_b = play_round(dataset, RuleBasedResponder(), RuleBasedResponder(), stub, cfg, 4)
        games_a = [(i.p.id, i.game) for i in log_a.instances]
        games_b = [(i.p.id, i.game) for i in log_b.instances]
        assert games_a == games_b
        assert len(log_a.instances) == 4

    def test_zero_budget(self, stub, dataset):
        log = play_round(dataset, RuleBasedResponder(), RuleBasedResponder(), stub,
                         RoundConfig(), 0)
        assert log.instances == []

    def test_all_verifications_fail(self, stub, dataset):
        alice = ScriptedAgent([TranscriptEntry("nothing useful")] * 10)
        log = play_round(dataset, alice, RuleBasedResponder(), stub,
                         RoundConfig(p_seq=0.0, seed=1), 3)
        assert len(log.instances) == 3
        assert all(not i.verified for i in log.instances)
        assert all(i.reject_reason for i in log.instances)
        assert log.counts()["verified"] == 0

    def test_verified_instances_are_scored(self, stub, dataset):
        cfg = RoundConfig(p_seq=0.0, seed=3, n_bob_samples=10)
        log = play_round(dataset, RuleBasedResponder(), RuleBasedResponder(), stub, cfg, 3)
        for inst in log.instances:
            if inst.verified:
                assert inst.difficulty is not None
                assert len(inst.bob_samples) == 10
                assert inst.alice_win == (inst.difficulty.n_success * 2 < 10)
            else:
                assert inst.difficulty is None

    def test_verification_gating(self, stub, dataset):
        """Every Verified instance carries oracle-checked evidence."""
        cfg = RoundConfig(p_seq=0.5, seed=11)
        log = play_round(dataset, RuleBasedResponder(), RuleBasedResponder(), stub, cfg, 6)
        for inst in log.instances:
            if not inst.verified:
                continue
            if inst.game == GameType.SEQ:
                assert isinstance(inst.evidence, ProofEvidence)
            else:
                assert isinstance(inst.evidence, DivergenceEvidence)


def test_scoring_agent_failure_demotes_instance(stub=None):
    stub = m.mock_toolchain()
    dataset = m.mock_dataset(stub)
    # bob transcript too short: scoring the first verified instance fails
    bob = ScriptedAgent([TranscriptEntry("# Equivalent?\nNo")] * 3)
    cfg = RoundConfig(p_seq=0.0, seed=3, n_bob_samples=10)
    log = play_round(dataset, RuleBasedResponder(), bob, stub, cfg, 2)
    assert len(log.instances) == 2
    demoted = [i for i in log.instances if i.reject_reason and "scoring failed" in i.reject_reason]
    assert demoted
    for inst in log.instances:
        assert inst.verified == (inst.difficulty is not None)
