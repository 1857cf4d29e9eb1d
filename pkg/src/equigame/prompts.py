"""Prompt templates for the generator, prover, and evaluator agents.

Template texts live as package data under ``data/prompts/`` and are loaded
verbatim; rendering is plain ``str.format``-style substitution (doubled
braces are literal, so the Liquid Haskell pragmas in the proof prompts
survive intact). The placeholder set of a template is closed: rendering
fails on missing or unknown names.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping

from .errors import MissingBinding, UnknownPlaceholder

_FORMATTER = string.Formatter()
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _placeholders(text: str) -> frozenset[str]:
    names = set()
    for _literal, field, spec, conv in _FORMATTER.parse(text):
        if field is None:
            continue
        if not _NAME_RE.fullmatch(field) or spec or conv:
            raise ValueError(f"malformed placeholder {field!r}")
        names.add(field)
    return frozenset(names)


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    system_text: str
    user_text: str

    @property
    def placeholders(self) -> frozenset[str]:
        return _placeholders(self.system_text) | _placeholders(self.user_text)


class _StrictBindings(dict):
    def __missing__(self, key: str) -> str:
        raise MissingBinding(key)


def render_prompt(template: PromptTemplate, bindings: Mapping[str, object]) -> tuple[str, str]:
    """Substitute bindings into (system, user); no other transformation."""
    known = template.placeholders
    unknown = set(bindings) - known
    if unknown:
        raise UnknownPlaceholder(", ".join(sorted(unknown)))
    missing = known - set(bindings)
    if missing:
        raise MissingBinding(", ".join(sorted(missing)))
    strict = _StrictBindings(bindings)
    return (
        template.system_text.format_map(strict),
        template.user_text.format_map(strict),
    )


def _load(filename: str) -> str:
    return (
        resources.files("equigame").joinpath(f"data/prompts/{filename}").read_text(encoding="utf-8")
    )


@lru_cache(maxsize=None)
def get_template(name: str) -> PromptTemplate:
    """Look up a template by name; see TEMPLATE_NAMES for the registry."""
    try:
        system_file, user_file = _TEMPLATE_FILES[name]
    except KeyError:
        raise KeyError(f"unknown template {name!r}; known: {sorted(_TEMPLATE_FILES)}") from None
    return PromptTemplate(name, _load(system_file), _load(user_file))


_TEMPLATE_FILES = {
    "alice_seq": ("alice_seq.system.txt", "alice_seq.user.txt"),
    "alice_sinq": ("alice_sinq.system.txt", "alice_sinq.user.txt"),
    "proof_seq": ("proof_seq.system.txt", "proof_seq.user.txt"),
    "bob_eval": ("bob_eval.system.txt", "bob_eval.user.txt"),
    "diff_pred_seq": ("diff_pred_seq.system.txt", "diff_pred.user.txt"),
    "diff_pred_sinq": ("diff_pred_sinq.system.txt", "diff_pred.user.txt"),
}

TEMPLATE_NAMES = tuple(sorted(_TEMPLATE_FILES))
