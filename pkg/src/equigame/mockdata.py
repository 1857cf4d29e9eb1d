"""Built-in mock corpus, stub toolchain tables, and a rule-based responder.

Everything here exists so the full pipeline runs deterministically with no
Haskell toolchain and no network: the stub toolchain simulates the known
programs, and the responder plays a competent-but-fallible generator and
evaluator. The shipped transcripts under ``data/transcripts/`` were
recorded from this responder (see tools/regen_mock_data.py).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import hlang
from .agents import TranscriptEntry, request_digest
from .corpus import IngestConfig, SourceCandidate, ValidatedProgram, ingest_corpus
from .hlang import extract_signature
from .toolchain import StubBehavior, StubCrash, StubLoop, StubToolchain


@dataclass(frozen=True)
class MockVariant:
    """A canned generator answer for one (program, game) pairing."""

    code: str
    name: str
    diverging_input: str | None = None  # SINQ only
    proof_attempts: tuple[str, ...] = ()  # SEQ only; last entry is the real try
    bob_pattern: tuple[str, ...] = ()  # per-sample: "ok" | "wrong" | "malformed"
    alternate: "MockVariant | None" = None  # served from the second request on


@dataclass
class MockProgram:
    name: str
    code: str
    behavior: StubBehavior
    seq: MockVariant | None = None
    sinq: MockVariant | None = None
    equivalent_variants: tuple[str, ...] = field(default=())


def _sig(code: str):
    return extract_signature(code)


def _beh(code: str, fn) -> StubBehavior:
    return StubBehavior(signature=_sig(code), fn=fn)


def _proof(p_name: str, q_name: str, arg: str = "Int") -> str:
    return (
        "<think>\nUnfold both definitions and close with PLE.\n</think>\n"
        "```haskell\n"
        f"{{-@ lemma_{p_name}_equiv :: x:{arg} -> {{ {p_name} x == {q_name} x }} @-}}\n"
        f"lemma_{p_name}_equiv :: {arg} -> Proof\n"
        f"lemma_{p_name}_equiv x\n"
        f"  =   {p_name} x\n"
        f"  === {q_name} x\n"
        "  *** QED\n"
        "```"
    )


def _bad_lemma_proof(p_name: str, q_name: str) -> str:
    return (
        "<think>\nSketching the lemma.\n</think>\n"
        "```haskell\n"
        f"{{-@ lemma_eq :: x:Int -> {{ {p_name} x == {q_name} x }} @-}}\n"
        "lemma_eq :: Int -> Proof\n"
        f"lemma_eq x = {p_name} x === {q_name} x *** QED\n"
        "```"
    )


SIGN_CODE = (
    "sign :: Int -> String\n"
    "sign n\n"
    '  | n < 0     = "negative"\n'
    '  | n == 0    = "zero"\n'
    '  | otherwise = "positive"'
)
SIGN_INEQ_CODE = (
    "signIneq :: Int -> String\n"
    "signIneq n\n"
    '  | n <= 0    = "non-positive"\n'
    '  | otherwise = "positive"'
)
SIGN_ALT_CODE = (
    "signAlt :: Int -> String\n"
    'signAlt n = if n < 0 then "negative" else if n == 0 then "zero" else "positive"'
)
DOUBLE_CODE = "double :: Int -> Int\ndouble x = x + x"
DOUBLE_ALT_CODE = "double_alt :: Int -> Int\ndouble_alt x = 2 * x"
DOUBLE_INEQ_CODE = "doubleIneq :: Int -> Int\ndoubleIneq x = x + x + 1"
ADD_CODE = "addNumbers :: Int -> Int -> Int\naddNumbers a b = a + b"
ADD_ALT_CODE = "addNumbers' :: Int -> Int -> Int\naddNumbers' a b = b + a"
ADD_INEQ_CODE = "addNumbersIneq :: Int -> Int -> Int\naddNumbersIneq a b = a - b"
ABS_CODE = "absVal :: Int -> Int\nabsVal n = if n < 0 then -n else n"
ABS_ALT_CODE = "absAlt :: Int -> Int\nabsAlt n = if n > 0 then n else -n"
ABS_INEQ_CODE = "absIneq :: Int -> Int\nabsIneq n = n"
IS_EVEN_CODE = "isEven :: Int -> Bool\nisEven n = n `mod` 2 == 0"
IS_EVEN_ALT_CODE = "isEvenAlt :: Int -> Bool\nisEvenAlt n = not (n `mod` 2 == 1)"
IS_EVEN_INEQ_CODE = (
    "isEvenIneq :: Int -> Bool\nisEvenIneq n = n > 0 && n `mod` 2 == 0"
)
SUM_CODE = "sumList :: [Int] -> Int\nsumList [] = 0\nsumList (x:xs) = x + sumList xs"
SUM_ALT_CODE = "sumFold :: [Int] -> Int\nsumFold xs = foldr (+) 0 xs"
SUM_INEQ_CODE = "sumListIneq :: [Int] -> Int\nsumListIneq xs = foldr (-) 0 xs"

TRIPLE_CODE = "triple :: Int -> Int\ntriple x = x + x + x"
LOOP_CODE = "loopForever :: Int -> Int\nloopForever n = loopForever (n + 1)"
CRASH_CODE = 'crashy :: Int -> Int\ncrashy n = error "boom"'
TYPE_ERROR_CODE = "broken :: Int -> Int\nbroken x = x && x"
NO_SIGNATURE_CODE = "f x = x + 1"


def _alt_sum(xs: list) -> int:
    acc = 0
    for x in reversed(xs):
        acc = x - acc
    return acc


def mock_programs() -> list[MockProgram]:
    """The reference corpus plus each program's canned generator answers."""
    ten = lambda ok, wrong=0, malformed=0: ("ok",) * ok + ("wrong",) * wrong + (
        "malformed",
    ) * malformed
    return [
        MockProgram(
            name="sign",
            code=SIGN_CODE,
            behavior=_beh(
                SIGN_CODE,
                lambda n: "negative" if n < 0 else ("zero" if n == 0 else "positive"),
            ),
            seq=MockVariant(
                code=SIGN_ALT_CODE,
                name="signAlt",
                proof_attempts=(_proof("sign", "signAlt"),),
                bob_pattern=ten(9, 1),
            ),
            sinq=MockVariant(
                code=SIGN_INEQ_CODE,
                name="signIneq",
                diverging_input="0",
                bob_pattern=ten(7, 2, 1),
            ),
            equivalent_variants=(SIGN_ALT_CODE,),
        ),
        MockProgram(
            name="double",
            code=DOUBLE_CODE,
            behavior=_beh(DOUBLE_CODE, lambda x: 2 * x),
            seq=MockVariant(
                code=DOUBLE_ALT_CODE,
                name="double_alt",
                proof_attempts=(
                    _bad_lemma_proof("double", "double_alt"),
                    _proof("double", "double_alt"),
                ),
                bob_pattern=ten(10),
            ),
            sinq=MockVariant(
                code=DOUBLE_INEQ_CODE,
                name="doubleIneq",
                diverging_input="3",
                bob_pattern=ten(5, 5),
            ),
            equivalent_variants=(DOUBLE_ALT_CODE,),
        ),
        MockProgram(
            name="addNumbers",
            code=ADD_CODE,
            behavior=_beh(ADD_CODE, lambda a, b: a + b),
            seq=MockVariant(
                code=ADD_ALT_CODE,
                name="addNumbers'",
                proof_attempts=(_proof("addNumbers", "addNumbers'", "Int -> Int"),),
                bob_pattern=ten(8, 2),
            ),
            sinq=MockVariant(
                code=ADD_INEQ_CODE,
                name="addNumbersIneq",
                diverging_input="1 2",
                bob_pattern=ten(2, 8),
            ),
            equivalent_variants=(ADD_ALT_CODE,),
        ),
        MockProgram(
            name="absVal",
            code=ABS_CODE,
            behavior=_beh(ABS_CODE, abs),
            seq=MockVariant(
                code=ABS_ALT_CODE,
                name="absAlt",
                proof_attempts=(_proof("absVal", "absAlt"),),
                bob_pattern=ten(6, 4),
            ),
            # the repeat draw blunders: absIneq agrees with absVal on 7,
            # so the second instance is rejected at verification
            sinq=MockVariant(
                code=ABS_INEQ_CODE,
                name="absIneq",
                diverging_input="-5",
                bob_pattern=ten(0, 9, 1),
                alternate=MockVariant(
                    code=ABS_INEQ_CODE,
                    name="absIneq",
                    diverging_input="7",
                    bob_pattern=(),
                ),
            ),
            equivalent_variants=(ABS_ALT_CODE,),
        ),
        MockProgram(
            name="isEven",
            code=IS_EVEN_CODE,
            behavior=_beh(IS_EVEN_CODE, lambda n: n % 2 == 0),
            # a true equivalence the stub verifier cannot prove: the
            # proof turn always gets rejected, like real PLE failures
            seq=MockVariant(
                code=IS_EVEN_ALT_CODE,
                name="isEvenAlt",
                proof_attempts=(_proof("isEven", "isEvenAlt"),),
                bob_pattern=(),
            ),
            sinq=MockVariant(
                code=IS_EVEN_INEQ_CODE,
                name="isEvenIneq",
                diverging_input="-2",
                bob_pattern=ten(4, 6),
            ),
        ),
        MockProgram(
            name="sumList",
            code=SUM_CODE,
            behavior=_beh(SUM_CODE, sum),
            seq=MockVariant(
                code=SUM_ALT_CODE,
                name="sumFold",
                proof_attempts=(_proof("sumList", "sumFold", "[Int]"),),
                bob_pattern=ten(3, 7),
            ),
            # a blundered counterexample: P and Q agree on [] so the
            # instance is rejected at verification
            sinq=MockVariant(
                code=SUM_INEQ_CODE,
                name="sumListIneq",
                diverging_input="[]",
                bob_pattern=(),
            ),
            equivalent_variants=(SUM_ALT_CODE,),
        ),
    ]


_VARIANT_BEHAVIORS = {
    SIGN_ALT_CODE: lambda n: "negative" if n < 0 else ("zero" if n == 0 else "positive"),
    SIGN_INEQ_CODE: lambda n: "non-positive" if n <= 0 else "positive",
    DOUBLE_ALT_CODE: lambda x: 2 * x,
    DOUBLE_INEQ_CODE: lambda x: 2 * x + 1,
    ADD_ALT_CODE: lambda a, b: b + a,
    ADD_INEQ_CODE: lambda a, b: a - b,
    ABS_ALT_CODE: abs,
    ABS_INEQ_CODE: lambda n: n,
    IS_EVEN_ALT_CODE: lambda n: not (n % 2 == 1),
    IS_EVEN_INEQ_CODE: lambda n: n > 0 and n % 2 == 0,
    SUM_ALT_CODE: sum,
    SUM_INEQ_CODE: _alt_sum,
}


def mock_toolchain() -> StubToolchain:
    """Stub toolchain covering the mock corpus, its variants, and the
    misbehaving ingest fixtures."""
    stub = StubToolchain()
    for program in mock_programs():
        stub.register(program.code, program.behavior)
        for variant_code in program.equivalent_variants:
            stub.register_equivalent(program.code, variant_code)
    for code, fn in _VARIANT_BEHAVIORS.items():
        stub.register(code, _beh(code, fn))
    stub.register(TRIPLE_CODE, _beh(TRIPLE_CODE, lambda x: 3 * x))
    stub.register(LOOP_CODE, StubBehavior(_sig(LOOP_CODE), _loop))
    stub.register(CRASH_CODE, StubBehavior(_sig(CRASH_CODE), _crash))
    stub.compile_failures[hlang.normalize_code(TYPE_ERROR_CODE)] = (
        "Program.hs:2:12: error:\n"
        "    * Couldn't match expected type 'Bool' with actual type 'Int'"
    )
    return stub


def _loop(n: int):
    raise StubLoop()


def _crash(n: int):
    raise StubCrash("boom")


def mock_candidates(include_invalid: bool = True) -> list[SourceCandidate]:
    out = [
        SourceCandidate(id=f"mock-{p.name}", code=p.code, origin="mock")
        for p in mock_programs()
    ]
    if include_invalid:
        out.append(SourceCandidate(id="mock-broken", code=TYPE_ERROR_CODE, origin="mock"))
        out.append(SourceCandidate(id="mock-nosig", code=NO_SIGNATURE_CODE, origin="mock"))
    return out


def mock_dataset(stub: StubToolchain | None = None) -> list[ValidatedProgram]:
    """The validated mock corpus (deterministic)."""
    stub = stub or mock_toolchain()
    dataset, _report = ingest_corpus(
        mock_candidates(include_invalid=False), stub, IngestConfig(seed=0)
    )
    return dataset


# --- rule-based responder (used to record the shipped transcripts) ---

_PROOF_TASK_RE = re.compile(r"`([A-Za-z0-9_']+) x == ([A-Za-z0-9_']+) x` for all `x`")

_THINK = "<think>\n{body}\n</think>\n\n"


class RuleBasedResponder:
    """Deterministic mock agent: generator, prover, and evaluator in one.

    Identifies the request kind from the prompt text and answers from the
    canned tables above. Evaluator verdicts follow each variant's
    bob_pattern, advancing a per-pair counter.
    """

    def __init__(self):
        self.programs = {p.name: p for p in mock_programs()}
        self._by_code = {hlang.normalize_code(p.code): p for p in self.programs.values()}
        self._proof_cursor: dict[str, int] = {}
        self._bob_cursor: dict[str, int] = {}
        self._gen_cursor: dict[tuple[str, str], int] = {}

    def complete(self, system: str, user: str) -> str:
        if "semantically inequivalent variant" in system:
            return self._sinq(user)
        if "*transform* any given function" in system:
            return self._seq(user)
        if "prove that two reflected functions are equivalent" in system:
            return self._prove(user)
        if "determine if they are semantically equivalent" in system:
            return self._bob(user)
        raise ValueError("unrecognized mock request")

    def _find_program(self, user: str) -> MockProgram:
        for program in self.programs.values():
            if program.code in user:
                return program
        raise ValueError("no known reference program in prompt")

    def _pick(self, program: MockProgram, kind: str) -> MockVariant:
        variant = program.seq if kind == "seq" else program.sinq
        key = (program.name, kind)
        cursor = self._gen_cursor.get(key, 0)
        self._gen_cursor[key] = cursor + 1
        if cursor > 0 and variant.alternate is not None:
            return variant.alternate
        return variant

    def _seq(self, user: str) -> str:
        program = self._find_program(user)
        variant = self._pick(program, "seq")
        think = _THINK.format(body=f"Rewriting {program.name} with a different shape.")
        return f"{think}Generated Program `Q`:\n```haskell\n{variant.code}\n```\n"

    def _sinq(self, user: str) -> str:
        program = self._find_program(user)
        variant = self._pick(program, "sinq")
        think = _THINK.format(body=f"Introducing a subtle behavioral change in {program.name}.")
        return (
            f"{think}Generated Program `Q`:\n```haskell\n{variant.code}\n```\n\n"
            f"Diverging Input `x`:\n```\n{variant.diverging_input}\n```\n"
        )

    def _prove(self, user: str) -> str:
        m = _PROOF_TASK_RE.search(user)
        if not m:
            raise ValueError("proof request names no function pair")
        p_name = m.group(1)
        program = self.programs[p_name]
        attempts = program.seq.proof_attempts
        cursor = self._proof_cursor.get(p_name, 0)
        self._proof_cursor[p_name] = cursor + 1
        return attempts[min(cursor, len(attempts) - 1)]

    def _bob(self, user: str) -> str:
        program = None
        variant = None
        for cand in self.programs.values():
            for v in (cand.seq, cand.sinq):
                if v is not None and v.code in user:
                    program, variant = cand, v
        if variant is None:
            raise ValueError("no known variant in evaluator prompt")
        equivalent = variant is program.seq
        cursor = self._bob_cursor.get(variant.name, 0)
        self._bob_cursor[variant.name] = cursor + 1
        pattern = variant.bob_pattern or ("ok",)
        mode = pattern[cursor % len(pattern)]
        think = _THINK.format(body=f"Comparing behaviors of the two {program.name} definitions.")
        if mode == "malformed":
            return think + "I cannot commit to a verdict here."
        correct = mode == "ok"
        says_equivalent = equivalent if correct else not equivalent
        answer = "Yes" if says_equivalent else "No"
        return f"{think}Tracing both definitions on sample inputs.\n# Equivalent?\n{answer}\n"


class RecordingAgent:
    """Wraps a responder, capturing a replayable transcript."""

    def __init__(self, inner, name: str = "recorded"):
        self.inner = inner
        self.name = name
        self.entries: list[TranscriptEntry] = []

    @property
    def cursor(self) -> int:
        return len(self.entries)

    def complete(self, system: str, user: str) -> str:
        response = self.inner.complete(system, user)
        self.entries.append(
            TranscriptEntry(response=response, expected_request_digest=request_digest(system, user))
        )
        return response
