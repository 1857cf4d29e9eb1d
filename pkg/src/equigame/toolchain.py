"""Adapters around the Haskell compiler, runner, and refinement verifier.

Two implementations share one interface: `ProcessToolchain` shells out to
real GHC / Liquid Haskell commands inside throwaway workspaces, and
`StubToolchain` simulates a fixed registry of known programs so the whole
pipeline runs without any Haskell installation. Divergence classification
is shared, so both paths produce identical verdict tables.
"""

from __future__ import annotations

import re
import shlex
import shutil
import subprocess
import tempfile
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Protocol, Sequence

from . import hlang
from .errors import (
    ArityMismatch,
    LiteralParseError,
    NameCollision,
    SignatureMismatch,
    ToolMissing,
)
from .hlang import SignatureInfo


class ProgramSource(Protocol):
    """Anything with Haskell source and an extracted signature."""

    code: str
    signature: SignatureInfo


@dataclass(frozen=True)
class CandidateProgram:
    """A harnessable function that has not (yet) earned a witness."""

    code: str
    signature: SignatureInfo


# --- result types ---


@dataclass(frozen=True)
class CompileResult:
    success: bool
    diagnostics: str
    artifact_path: str | None = None


@dataclass(frozen=True)
class Halted:
    stdout: str
    exit_code: int = 0

    def describe(self) -> str:
        return self.stdout.rstrip("\n")


@dataclass(frozen=True)
class Crashed:
    info: str

    def describe(self) -> str:
        return f"crash: {crash_class(self.info)}"


@dataclass(frozen=True)
class TimedOut:
    def describe(self) -> str:
        return "timeout"


Outcome = Halted | Crashed | TimedOut


@dataclass(frozen=True)
class ExecResult:
    outcome: Outcome
    wall_time: float


@dataclass(frozen=True)
class ProofCheckResult:
    verdict: str  # "Accepted" | "Rejected" | "ToolFailure"
    message: str = ""

    ACCEPTED = "Accepted"
    REJECTED = "Rejected"
    TOOL_FAILURE = "ToolFailure"

    @property
    def accepted(self) -> bool:
        return self.verdict == self.ACCEPTED


@dataclass(frozen=True)
class Diverges:
    evidence: tuple[str, str]
    halting_asymmetry: bool = False


@dataclass(frozen=True)
class Agrees:
    pass


@dataclass(frozen=True)
class Indeterminate:
    reason: str


DivergenceResult = Diverges | Agrees | Indeterminate


def crash_class(info: str) -> str:
    """Exception class prefix: first colon-segment of the first line."""
    stripped = info.strip()
    if not stripped:
        return ""
    return stripped.splitlines()[0].split(":")[0].strip()


# --- module templates ---

PROOF_PLACEHOLDER = "/* PROOF BODY HERE */"


def split_language_pragmas(code: str) -> tuple[str, str]:
    """Split leading pragma lines (which must precede any module header)."""
    lines = code.splitlines()
    i = 0
    while i < len(lines) and (not lines[i].strip() or lines[i].lstrip().startswith("{-#")):
        i += 1
    head = "\n".join(lines[:i]).strip()
    return (head + "\n" if head else ""), "\n".join(lines[i:])


def build_exec_harness(program: ProgramSource, input_literals: Sequence[str]) -> str:
    """A main-bearing module applying the function and printing the result."""
    sig = program.signature
    if len(input_literals) != sig.arity:
        raise ArityMismatch(
            f"{sig.function_name} takes {sig.arity} argument(s), got {len(input_literals)}"
        )
    application = sig.function_name + "".join(f" ({lit})" for lit in input_literals)
    pragmas, body = split_language_pragmas(program.code)
    return (
        f"{pragmas}"
        "module Main where\n"
        "\n"
        f"{body.rstrip()}\n"
        "\n"
        "main :: IO ()\n"
        f"main = putStrLn (show ({application}))\n"
    )


@dataclass(frozen=True)
class EquivModule:
    """A self-contained reflection module: P, Q, and the proof body."""

    source: str
    p_name: str
    q_name: str
    p_code: str
    q_code: str
    proof_body: str

    @property
    def lemma_name(self) -> str:
        return f"lemma_{self.p_name}_equiv"


def build_equiv_module(p: ProgramSource, q: ProgramSource, proof_body: str) -> EquivModule:
    p_name = p.signature.function_name
    q_name = q.signature.function_name
    if p_name == q_name:
        raise NameCollision(f"P and Q both define {p_name!r}")
    body = proof_body.strip("\n") if proof_body.strip() else PROOF_PLACEHOLDER
    source = (
        '{-@ LIQUID "--reflection" @-}\n'
        '{-@ LIQUID "--ple" @-}\n'
        "module Equiv where\n"
        "import Language.Haskell.Liquid.ProofCombinators\n"
        "\n"
        f"{{-@ reflect {p_name} @-}}\n"
        f"{p.code.rstrip()}\n"
        "\n"
        f"{{-@ reflect {q_name} @-}}\n"
        f"{q.code.rstrip()}\n"
        "\n"
        "-- Your complete proof of equivalence\n"
        f"{body}\n"
    )
    return EquivModule(
        source=source,
        p_name=p_name,
        q_name=q_name,
        p_code=p.code,
        q_code=q.code,
        proof_body=body,
    )


def classify_divergence(out_p: Outcome, out_q: Outcome) -> DivergenceResult:
    """Shared verdict table over two execution outcomes."""
    evidence = (out_p.describe(), out_q.describe())
    if isinstance(out_p, Halted) and isinstance(out_q, Halted):
        if out_p.stdout == out_q.stdout:
            return Agrees()
        return Diverges(evidence)
    if isinstance(out_p, Crashed) and isinstance(out_q, Crashed):
        if crash_class(out_p.info) == crash_class(out_q.info):
            return Agrees()
        return Diverges(evidence)
    if isinstance(out_p, TimedOut) and isinstance(out_q, TimedOut):
        return Indeterminate("both executions timed out")
    if isinstance(out_p, Halted) or isinstance(out_q, Halted):
        asym = isinstance(out_p, TimedOut) or isinstance(out_q, TimedOut)
        return Diverges(evidence, halting_asymmetry=asym)
    # crash on one side, timeout on the other: a slow crash is
    # indistinguishable from nontermination at the boundary
    return Indeterminate("crash/timeout combination is not decidable")


@dataclass
class ToolchainConfig:
    ghc_cmd: str = "ghc"
    runner_cmd: str = "runghc"
    liquid_cmd: str = "liquid"
    run_timeout: float = 10.0
    proof_timeout: float = 120.0
    compiled: bool = True
    workspace_root: str | None = None
    max_workers: int = 4


class Toolchain:
    """Interface shared by the process-backed and stub toolchains."""

    config: ToolchainConfig

    def compile(self, code: str) -> CompileResult:
        raise NotImplementedError

    def run_program(self, module_source: str, timeout: float | None = None) -> ExecResult:
        raise NotImplementedError

    def check_liquid_proof(
        self, module: EquivModule, timeout: float | None = None
    ) -> ProofCheckResult:
        raise NotImplementedError

    def run_on_input(
        self, program: ProgramSource, input_literals: Sequence[str], timeout: float | None = None
    ) -> ExecResult:
        return self.run_program(build_exec_harness(program, input_literals), timeout)

    def check_divergence(
        self,
        p: ProgramSource,
        q: ProgramSource,
        x: str,
        timeout: float | None = None,
    ) -> DivergenceResult:
        sig_p, sig_q = p.signature, q.signature
        if sig_p.arg_types != sig_q.arg_types or sig_p.result_type != sig_q.result_type:
            raise SignatureMismatch(
                f"{sig_p.render()} does not match {sig_q.render()}"
            )
        literals = hlang.parse_input_literals(x, sig_p.arg_types)
        try:
            res_p = self.run_on_input(p, literals, timeout)
            res_q = self.run_on_input(q, literals, timeout)
        except ToolMissing as exc:
            return Indeterminate(f"tool failure: {exc}")
        return classify_divergence(res_p.outcome, res_q.outcome)


class ProcessToolchain(Toolchain):
    """Shells out to GHC / runghc / Liquid Haskell in isolated workspaces."""

    def __init__(self, config: ToolchainConfig | None = None):
        self.config = config or ToolchainConfig()
        self._slots = threading.Semaphore(max(1, self.config.max_workers))

    @contextmanager
    def _workspace(self) -> Iterator[Path]:
        path = Path(tempfile.mkdtemp(prefix="equigame-", dir=self.config.workspace_root))
        try:
            yield path
        finally:
            shutil.rmtree(path, ignore_errors=True)

    def _invoke(
        self, argv: list[str], cwd: Path, timeout: float
    ) -> subprocess.CompletedProcess:
        with self._slots:
            try:
                return subprocess.run(
                    argv,
                    cwd=cwd,
                    capture_output=True,
                    text=True,
                    timeout=timeout,
                )
            except FileNotFoundError as exc:
                raise ToolMissing(f"command not found: {argv[0]}") from exc

    def compile(self, code: str) -> CompileResult:
        """Type-check a candidate; bare declarations get a module wrapper so
        GHC does not demand a main."""
        pragmas, body = split_language_pragmas(code)
        if re.match(r"\s*module\s", body):
            module_source = code
        else:
            module_source = f"{pragmas}module CandidateCheck where\n{body}\n"
        with self._workspace() as ws:
            src = ws / "CandidateCheck.hs"
            src.write_text(module_source, encoding="utf-8")
            proc = self._invoke(
                shlex.split(self.config.ghc_cmd) + ["-c", str(src)],
                ws,
                self.config.run_timeout * 6,
            )
            if proc.returncode == 0:
                return CompileResult(True, proc.stderr, str(ws / "CandidateCheck.o"))
            diagnostics = proc.stderr or proc.stdout or f"compiler exited {proc.returncode}"
            return CompileResult(False, diagnostics, None)

    def run_program(self, module_source: str, timeout: float | None = None) -> ExecResult:
        limit = timeout if timeout is not None else self.config.run_timeout
        with self._workspace() as ws:
            src = ws / "Main.hs"
            src.write_text(module_source, encoding="utf-8")
            if self.config.compiled:
                exe = ws / "main"
                compile_proc = self._invoke(
                    shlex.split(self.config.ghc_cmd) + ["-o", str(exe), str(src)],
                    ws,
                    max(limit * 6, 60.0),
                )
                if compile_proc.returncode != 0:
                    info = compile_proc.stderr or "harness failed to compile"
                    return ExecResult(Crashed(info), 0.0)
                argv = [str(exe)]
            else:
                argv = shlex.split(self.config.runner_cmd) + [str(src)]
            started = time.monotonic()
            try:
                proc = self._invoke(argv, ws, limit)
            except subprocess.TimeoutExpired:
                return ExecResult(TimedOut(), limit)
            elapsed = min(time.monotonic() - started, limit)
            if proc.returncode != 0 and proc.stderr.strip():
                return ExecResult(Crashed(_strip_binary_prefix(proc.stderr)), elapsed)
            return ExecResult(Halted(proc.stdout, proc.returncode), elapsed)

    def check_liquid_proof(
        self, module: EquivModule, timeout: float | None = None
    ) -> ProofCheckResult:
        limit = timeout if timeout is not None else self.config.proof_timeout
        with self._workspace() as ws:
            src = ws / "Equiv.hs"
            src.write_text(module.source, encoding="utf-8")
            try:
                proc = self._invoke(
                    shlex.split(self.config.liquid_cmd) + [str(src)], ws, limit
                )
            except ToolMissing as exc:
                return ProofCheckResult(ProofCheckResult.TOOL_FAILURE, str(exc))
            except subprocess.TimeoutExpired:
                return ProofCheckResult(
                    ProofCheckResult.TOOL_FAILURE, f"verifier timed out after {limit}s"
                )
            if proc.returncode == 0:
                return ProofCheckResult(ProofCheckResult.ACCEPTED)
            message = (proc.stdout + "\n" + proc.stderr).strip()
            return ProofCheckResult(ProofCheckResult.REJECTED, message)


def _strip_binary_prefix(stderr: str) -> str:
    """GHC runtime errors open with `<binary>: `; drop it for classing."""
    lines = stderr.strip().splitlines()
    if not lines:
        return stderr.strip()
    first = lines[0]
    head, sep, rest = first.partition(": ")
    if sep and ("/" in head or head in ("main", "program", "Main")):
        lines[0] = rest
    return "\n".join(lines)


# --- table-driven stub ---


class StubCrash(Exception):
    """Raised by a stub behavior to simulate a runtime exception."""

    def __init__(self, info: str):
        super().__init__(info)
        self.info = info


class StubLoop(Exception):
    """Raised by a stub behavior to simulate nontermination."""


@dataclass(frozen=True)
class StubBehavior:
    """Simulated semantics of one known Haskell function."""

    signature: SignatureInfo
    fn: Callable[..., object]


@dataclass
class StubToolchain(Toolchain):
    """Simulates the real toolchain from a registry of known programs.

    `behaviors` maps whitespace-normalized program source to its simulated
    semantics; `equiv_pairs` lists normalized (P, Q) sources the verifier
    should accept valid-looking proofs for; `compile_failures` carries
    canned diagnostics for known-bad sources.
    """

    behaviors: dict[str, StubBehavior] = field(default_factory=dict)
    equiv_pairs: set[frozenset[str]] = field(default_factory=set)
    compile_failures: dict[str, str] = field(default_factory=dict)
    config: ToolchainConfig = field(default_factory=ToolchainConfig)

    def register(self, code: str, behavior: StubBehavior) -> None:
        self.behaviors[hlang.normalize_code(code)] = behavior

    def register_equivalent(self, p_code: str, q_code: str) -> None:
        self.equiv_pairs.add(
            frozenset({hlang.normalize_code(p_code), hlang.normalize_code(q_code)})
        )

    def _find_behavior(self, code: str) -> StubBehavior | None:
        return self.behaviors.get(hlang.normalize_code(code))

    def compile(self, code: str) -> CompileResult:
        norm = hlang.normalize_code(code)
        if norm in self.compile_failures:
            return CompileResult(False, self.compile_failures[norm], None)
        if norm in self.behaviors:
            return CompileResult(True, "", f"stub://{norm[:24]}")
        return CompileResult(False, "stub: program not in registry", None)

    def run_program(self, module_source: str, timeout: float | None = None) -> ExecResult:
        limit = timeout if timeout is not None else self.config.run_timeout
        try:
            behavior, literals = self._parse_harness(module_source)
        except (LiteralParseError, ValueError) as exc:
            return ExecResult(Crashed(f"stub harness error: {exc}"), 0.0)
        values = [
            hlang.parse_literal(lit, t)
            for lit, t in zip(literals, behavior.signature.arg_types)
        ]
        try:
            result = behavior.fn(*values)
        except StubCrash as crash:
            return ExecResult(Crashed(crash.info), 0.0)
        except StubLoop:
            return ExecResult(TimedOut(), limit)
        stdout = hlang.hask_show(result, behavior.signature.result_type) + "\n"
        return ExecResult(Halted(stdout, 0), 0.0)

    def _parse_harness(self, module_source: str) -> tuple[StubBehavior, list[str]]:
        marker = "main = putStrLn (show ("
        idx = module_source.rfind(marker)
        if idx == -1:
            raise ValueError("not a generated harness module")
        expr = module_source[idx + len(marker) :].strip()
        if not expr.endswith("))"):
            raise ValueError("malformed harness application")
        expr = expr[:-2]
        name, _, rest = expr.partition(" ")
        norm_module = hlang.normalize_code(module_source)
        behavior = None
        for norm_code, cand in self.behaviors.items():
            if cand.signature.function_name == name and norm_code in norm_module:
                behavior = cand
                break
        if behavior is None:
            raise ValueError(f"unknown program {name!r}")
        literals = _split_parenthesized(rest)
        if len(literals) != behavior.signature.arity:
            raise ValueError(f"arity mismatch applying {name!r}")
        return behavior, literals

    def check_liquid_proof(
        self, module: EquivModule, timeout: float | None = None
    ) -> ProofCheckResult:
        proof = module.proof_body
        if PROOF_PLACEHOLDER in proof or not proof.strip():
            return ProofCheckResult(
                ProofCheckResult.REJECTED, "stub: proof body is a placeholder"
            )
        pair = frozenset(
            {hlang.normalize_code(module.p_code), hlang.normalize_code(module.q_code)}
        )
        if pair not in self.equiv_pairs:
            return ProofCheckResult(
                ProofCheckResult.REJECTED,
                f"stub: SMT check failed, {module.p_name} and {module.q_name} "
                "are not provably equal",
            )
        if module.lemma_name not in proof:
            return ProofCheckResult(
                ProofCheckResult.REJECTED,
                f"stub: expected lemma {module.lemma_name} in the proof block",
            )
        if "===" not in proof or "QED" not in proof:
            return ProofCheckResult(
                ProofCheckResult.REJECTED,
                "stub: proof lacks equational steps or a QED terminator",
            )
        return ProofCheckResult(ProofCheckResult.ACCEPTED)


def _split_parenthesized(text: str) -> list[str]:
    """Split `(a) (b) (c)` into top-level argument texts."""
    args = []
    depth = 0
    start = None
    in_str: str | None = None
    escaped = False
    for i, ch in enumerate(text):
        if in_str:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == in_str:
                in_str = None
            continue
        if ch in "\"'":
            in_str = ch
            continue
        if ch == "(":
            if depth == 0:
                start = i
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0 and start is not None:
                args.append(text[start + 1 : i])
                start = None
    return args
