"""Typed errors shared across the pipeline.

Rejection reports key on the class name (e.g. ``CompileFailed``), so these
names are part of the on-disk report format.
"""

from __future__ import annotations


class EquigameError(Exception):
    """Base class for all package errors."""


# --- corpus / language-level ---


class NoSignature(EquigameError):
    """No parsable top-level type signature with a matching equation."""


class UnsupportedType(EquigameError):
    """Signature uses constructs outside the supported type grammar."""


class DepthExhausted(EquigameError):
    """No literal of the requested type exists within the depth budget."""


class LiteralParseError(EquigameError):
    """Input text is not a literal of the expected type."""


class CompileFailed(EquigameError):
    def __init__(self, diagnostics: str):
        super().__init__(diagnostics)
        self.diagnostics = diagnostics


class RunFailed(EquigameError):
    """Program crashed or exited nonzero while computing its witness."""


class Timeout(EquigameError):
    """Execution exceeded the configured wall-clock limit."""


class DuplicateId(EquigameError):
    pass


class DuplicateCode(EquigameError):
    """Whitespace-normalized source duplicates an earlier candidate."""


class NoCodeBlock(EquigameError):
    """Agent response contained no fenced Haskell code block."""


# --- toolchain ---


class ToolMissing(EquigameError):
    """A configured external command could not be found."""


class ArityMismatch(EquigameError):
    pass


class SignatureMismatch(EquigameError):
    """Two programs do not share a harnessable signature shape."""


class NameCollision(EquigameError):
    """P and Q use the same function name; reflection would clash."""


# --- agents ---


class MissingBinding(EquigameError):
    pass


class UnknownPlaceholder(EquigameError):
    pass


class AgentError(EquigameError):
    """Transport or status failure talking to a completion endpoint."""


class TranscriptExhausted(AgentError):
    """A scripted agent was asked for more responses than it holds."""


class TranscriptMismatch(EquigameError):
    """A scripted entry's expected request digest did not match.

    Deliberately not an AgentError: a digest mismatch means the replayed
    run diverged from the recorded one and should fail loudly.
    """


class MarkerMissing(EquigameError):
    """Required output marker or fenced block absent from a response."""


class EmptyCodeBlock(EquigameError):
    pass


class LabelMissing(EquigameError):
    pass


class OutOfRange(EquigameError):
    pass


class BadLemmaName(EquigameError):
    pass


# --- engine / archive ---


class CheckpointCorrupt(EquigameError):
    """Resume state disagrees with the on-disk archive."""


# --- planner / reporting ---


class NoAttempts(EquigameError):
    def __init__(self, game: str):
        super().__init__(f"no {game} attempts in archive")
        self.game = game


class ZeroYield(EquigameError):
    pass


class EmptyInput(EquigameError):
    pass


# --- config ---


class ConfigParseError(EquigameError):
    """Configuration file could not be parsed; message carries line info."""


class ConfigValidationError(EquigameError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations
