"""Prompt rendering, endpoints, and the strict response parsers."""

from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equigame import mockdata as m
from equigame.agents import (
    AliceSinqOutput,
    BobVerdict,
    RemoteAgent,
    ScriptedAgent,
    TranscriptEntry,
    load_transcript,
    parse_alice_seq,
    parse_alice_sinq,
    parse_bob_verdict,
    parse_difficulty_label,
    parse_proof_block,
    request_digest,
    save_transcript,
    strip_think,
)
from equigame.errors import (
    AgentError,
    BadLemmaName,
    EmptyCodeBlock,
    EquigameError,
    LabelMissing,
    MarkerMissing,
    MissingBinding,
    OutOfRange,
    TranscriptExhausted,
    TranscriptMismatch,
    UnknownPlaceholder,
)
from equigame.prompts import TEMPLATE_NAMES, get_template, render_prompt

GOLDEN_DIR = Path(__file__).parent / "data" / "golden"

CANONICAL = {
    "alice_seq": {"difficulty_level": 10, "program_p_completion": m.SIGN_CODE, "t": "Int"},
    "alice_sinq": {"difficulty_level": 10, "program": m.SIGN_CODE},
    "proof_seq": {
        "error_msg_section": "",
        "equiv_code": "",
        "func_name_p": "double",
        "func_name_q": "double_alt",
        "arg_type": "Int",
        "program_p_content": m.DOUBLE_CODE,
        "program_q_content": m.DOUBLE_ALT_CODE,
    },
    "bob_eval": {"program_p": m.SIGN_CODE, "program_q": m.SIGN_INEQ_CODE},
    "diff_pred_seq": {"program_p": m.DOUBLE_CODE, "program_q": m.DOUBLE_ALT_CODE},
    "diff_pred_sinq": {"program_p": m.SIGN_CODE, "program_q": m.SIGN_INEQ_CODE},
}


class TestTemplates:
    @pytest.mark.parametrize("name", sorted(CANONICAL))
    def test_golden_render(self, name):
        system, user = render_prompt(get_template(name), CANONICAL[name])
        golden_system = (GOLDEN_DIR / f"{name}.system.golden").read_text(encoding="utf-8")
        golden_user = (GOLDEN_DIR / f"{name}.user.golden").read_text(encoding="utf-8")
        assert system == golden_system
        assert user == golden_user

    def test_all_templates_covered(self):
        assert set(TEMPLATE_NAMES) == set(CANONICAL)

    def test_sinq_user_starts_with_difficulty(self):
        _system, user = render_prompt(
            get_template("alice_sinq"), {"difficulty_level": 10, "program": m.SIGN_CODE}
        )
        assert user.startswith("Difficulty level: 10")

    def test_proof_pragmas_unescaped(self):
        system, user = render_prompt(get_template("proof_seq"), CANONICAL["proof_seq"])
        assert '{-@ LIQUID "--reflection" @-}' in user
        assert "{-@ reflect double @-}" in user
        assert "{{" not in user
        assert "lemma_double_equiv" in system  # few-shot example survives

    def test_missing_binding(self):
        with pytest.raises(MissingBinding):
            render_prompt(get_template("alice_sinq"), {"difficulty_level": 10})

    def test_unknown_placeholder(self):
        with pytest.raises(UnknownPlaceholder):
            render_prompt(
                get_template("alice_sinq"),
                {"difficulty_level": 10, "program": "x", "foo": "bar"},
            )


SEQ_OK = (
    "<think>\nplanning a rewrite\n</think>\n\n"
    "Generated Program `Q`:\n```haskell\ndouble_alt :: Int -> Int\ndouble_alt x = 2 * x\n```\n"
)
SINQ_OK = (
    "<think>\nflip the zero case\n</think>\n\n"
    "Generated Program `Q`:\n```haskell\n" + m.SIGN_INEQ_CODE + "\n```\n\n"
    "Diverging Input `x`:\n```\n0\n```\n"
)
PROOF_OK = (
    "```haskell\n"
    "{-@ lemma_double_equiv :: x:Int -> { double x == double_alt x } @-}\n"
    "lemma_double_equiv :: Int -> Proof\n"
    "lemma_double_equiv x\n  =   double x\n  === double_alt x\n  *** QED\n"
    "```"
)


class TestParsers:
    def test_seq_well_formed(self):
        out = parse_alice_seq(SEQ_OK)
        assert out.q_code.startswith("double_alt :: Int -> Int")
        assert out.raw == SEQ_OK

    def test_seq_think_only_is_marker_missing(self):
        with pytest.raises(MarkerMissing):
            parse_alice_seq("<think>\nGenerated Program `Q`:\n```haskell\nx\n```\n</think>")

    def test_seq_marker_without_block(self):
        with pytest.raises(MarkerMissing):
            parse_alice_seq("Generated Program `Q`:\nno fence here")

    def test_seq_empty_block(self):
        with pytest.raises(EmptyCodeBlock):
            parse_alice_seq("Generated Program `Q`:\n```haskell\n\n```")

    def test_seq_last_marker_wins(self):
        raw = (
            "Generated Program `Q`:\n```haskell\nstale :: Int -> Int\nstale x = x\n```\n\n"
            "Generated Program `Q`:\n```haskell\nfresh :: Int -> Int\nfresh x = x + 0\n```\n"
        )
        assert parse_alice_seq(raw).q_code.startswith("fresh")

    def test_sinq_well_formed(self):
        out = parse_alice_sinq(SINQ_OK)
        assert isinstance(out, AliceSinqOutput)
        assert out.q_code == m.SIGN_INEQ_CODE
        assert out.diverging_input == "0"

    def test_sinq_missing_input_marker(self):
        raw = "Generated Program `Q`:\n```haskell\nq :: Int -> Int\nq x = x\n```\n"
        with pytest.raises(MarkerMissing):
            parse_alice_sinq(raw)

    def test_sinq_empty_input_block(self):
        raw = (
            "Generated Program `Q`:\n```haskell\nq :: Int -> Int\nq x = x\n```\n"
            "Diverging Input `x`:\n```\n\n```\n"
        )
        with pytest.raises(EmptyCodeBlock):
            parse_alice_sinq(raw)

    def test_bob_yes(self):
        assert parse_bob_verdict("thinking...\n# Equivalent?\nYes").value == BobVerdict.EQUIVALENT

    def test_bob_no(self):
        assert parse_bob_verdict("# Equivalent?\nNo\n").value == BobVerdict.NOT_EQUIVALENT

    def test_bob_indented_yes(self):
        assert parse_bob_verdict("# Equivalent?\n   Yes").value == BobVerdict.EQUIVALENT

    def test_bob_case_sensitive(self):
        assert parse_bob_verdict("# Equivalent?\nyes").value == BobVerdict.MALFORMED

    def test_bob_no_header(self):
        verdict = parse_bob_verdict("these look the same to me")
        assert verdict.value == BobVerdict.MALFORMED
        assert verdict.reason

    def test_bob_last_header_wins(self):
        raw = "# Equivalent?\nYes\n\nwait, reconsidering\n\n# Equivalent?\nNo\n"
        assert parse_bob_verdict(raw).value == BobVerdict.NOT_EQUIVALENT

    def test_bob_header_inside_think_ignored(self):
        raw = "<think>\n# Equivalent?\nYes\n</think>\n# Equivalent?\nNo\n"
        assert parse_bob_verdict(raw).value == BobVerdict.NOT_EQUIVALENT

    def test_bob_nothing_after_header(self):
        assert parse_bob_verdict("# Equivalent?\n\n").value == BobVerdict.MALFORMED

    def test_difficulty_simple(self):
        assert parse_difficulty_label("Difficulty level: 7") == 7

    def test_difficulty_last_occurrence(self):
        assert parse_difficulty_label("Difficulty level: 3\nDifficulty level: 9") == 9

    def test_difficulty_out_of_range(self):
        with pytest.raises(OutOfRange):
            parse_difficulty_label("Difficulty level: 12")

    def test_difficulty_missing(self):
        with pytest.raises(LabelMissing):
            parse_difficulty_label("It is hard")

    def test_proof_well_formed(self):
        out = parse_proof_block(PROOF_OK, "double")
        assert "lemma_double_equiv" in out.proof_block

    def test_proof_wrong_lemma_name(self):
        with pytest.raises(BadLemmaName):
            parse_proof_block(PROOF_OK, "sign")

    def test_proof_no_lemma(self):
        with pytest.raises(BadLemmaName):
            parse_proof_block("```haskell\nqed :: Proof\nqed = ()\n```")

    def test_proof_two_blocks_rejected(self):
        with pytest.raises(MarkerMissing):
            parse_proof_block(PROOF_OK + "\n```haskell\nextra\n```")

    def test_proof_unfenced_rejected(self):
        with pytest.raises(MarkerMissing):
            parse_proof_block("lemma_double_equiv x = () *** QED")

    def test_strip_think_unterminated(self):
        assert strip_think("before<think>never closed") == "before"


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=400))
def test_property_parsers_total(text):
    """Parsers never raise anything outside the typed error set."""
    for parser in (parse_alice_seq, parse_alice_sinq, parse_proof_block, parse_difficulty_label):
        try:
            parser(text)
        except EquigameError:
            pass
    parse_bob_verdict(text)  # total by construction


class TestScriptedAgent:
    def test_replay_and_recording(self):
        agent = ScriptedAgent([TranscriptEntry("a"), TranscriptEntry("b")])
        assert agent.complete("s", "u") == "a"
        assert agent.complete("s2", "u2") == "b"
        assert agent.requests == [("s", "u"), ("s2", "u2")]

    def test_exhausted(self):
        agent = ScriptedAgent([TranscriptEntry("only")])
        agent.complete("s", "u")
        with pytest.raises(TranscriptExhausted):
            agent.complete("s", "u")

    def test_digest_assertion(self):
        good = request_digest("s", "u")
        agent = ScriptedAgent([TranscriptEntry("a", good), TranscriptEntry("b", good)])
        assert agent.complete("s", "u") == "a"
        with pytest.raises(TranscriptMismatch):
            agent.complete("s", "DIFFERENT")

    def test_fast_forward(self):
        agent = ScriptedAgent([TranscriptEntry("a"), TranscriptEntry("b")])
        agent.fast_forward(1)
        assert agent.complete("s", "u") == "b"

    def test_transcript_roundtrip(self, tmp_path):
        entries = [TranscriptEntry("x", request_digest("s", "u")), TranscriptEntry("y")]
        path = tmp_path / "t.jsonl"
        save_transcript(entries, path)
        assert load_transcript(path) == entries


class TestRemoteAgent:
    def test_error_status(self, monkeypatch):
        import requests as requests_lib

        class FakeResponse:
            status_code = 403
            text = "forbidden"

        monkeypatch.setattr(
            requests_lib, "post", lambda *a, **k: FakeResponse(), raising=True
        )
        agent = RemoteAgent(url="http://example.invalid/v1/chat", model="m")
        with pytest.raises(AgentError):
            agent.complete("s", "u")

    def test_success_and_payload(self, monkeypatch):
        import requests as requests_lib

        captured = {}

        class FakeResponse:
            status_code = 200

            def json(self):
                return {"choices": [{"message": {"content": "hello"}}]}

        def fake_post(url, json=None, headers=None, timeout=None):
            captured.update(json)
            return FakeResponse()

        monkeypatch.setattr(requests_lib, "post", fake_post, raising=True)
        agent = RemoteAgent(url="http://example.invalid/v1/chat", model="m")
        assert agent.complete("sys", "use") == "hello"
        assert captured["messages"][0] == {"role": "system", "content": "sys"}
        assert captured["temperature"] == 0.6
        assert captured["top_p"] == 0.95
        assert captured["top_k"] == 20
        assert captured["presence_penalty"] == 1.5

    def test_retries_transport_then_succeeds(self, monkeypatch):
        import requests as requests_lib

        calls = {"n": 0}

        class FakeResponse:
            status_code = 200

            def json(self):
                return {"choices": [{"message": {"content": "ok"}}]}

        def flaky_post(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 1:
                raise requests_lib.ConnectionError("boom")
            return FakeResponse()

        monkeypatch.setattr(requests_lib, "post", flaky_post, raising=True)
        monkeypatch.setattr("time.sleep", lambda s: None)
        agent = RemoteAgent(url="http://example.invalid", model="m")
        assert agent.complete("s", "u") == "ok"
        assert calls["n"] == 2
