"""Run configuration: file loading, flag overrides, validation.

Precedence is CLI flags > config file > built-in defaults. The auth token
is environment-only and never appears in configuration files.
"""

from __future__ import annotations

import hashlib
import json
import shutil
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .agents import DecodingParams, RemoteAgent, ScriptedAgent, load_transcript
from .curriculum import CurriculumConfig
from .errors import ConfigParseError, ConfigValidationError
from .planner import PRESETS, RegimeSpec
from .toolchain import ToolchainConfig


@dataclass
class AgentSpec:
    kind: str = "scripted"  # "remote" | "scripted"
    url: str = ""
    model: str = ""
    token_env: str = "MODEL_ENDPOINT_TOKEN"
    transcript: str = ""
    temperature: float = 0.6
    top_p: float = 0.95
    top_k: int = 20
    presence_penalty: float = 1.5
    max_context: int = 32768

    def build(self, name: str):
        if self.kind == "remote":
            return RemoteAgent(
                url=self.url,
                model=self.model,
                token_env=self.token_env,
                decoding=DecodingParams(
                    temperature=self.temperature,
                    top_p=self.top_p,
                    top_k=self.top_k,
                    presence_penalty=self.presence_penalty,
                    max_context=self.max_context,
                ),
            )
        return ScriptedAgent(load_transcript(self.transcript), name=name)


@dataclass
class RunConfig:
    regime: RegimeSpec = field(default_factory=lambda: PRESETS["E0"])
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    toolchain: ToolchainConfig = field(default_factory=ToolchainConfig)
    alice: AgentSpec = field(default_factory=AgentSpec)
    bob: AgentSpec = field(default_factory=AgentSpec)
    seed: int = 0
    mock: bool = False
    out_dir: str = "run"
    workers: int = 4

    def digest(self) -> str:
        payload = {
            "regime": self.regime.to_record(),
            "curriculum": vars(self.curriculum),
            "toolchain": vars(self.toolchain),
            "alice": vars(self.alice),
            "bob": vars(self.bob),
            "seed": self.seed,
            "mock": self.mock,
            "workers": self.workers,
        }
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _parse_file(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigParseError(f"{path}: {exc.problem}{where}") from exc
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigParseError(f"{path}: top level must be a mapping")
    return data


def _apply_section(instance, data: dict, section: str, violations: list[str]):
    known = {f.name for f in fields(instance)}
    for key, value in data.items():
        if key not in known:
            violations.append(f"{section}.{key}: unknown field")
            continue
        setattr(instance, key, value)
    return instance


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional file plus CLI-style overrides."""
    data: dict = {}
    if path is not None:
        data = _parse_file(Path(path))
    violations: list[str] = []

    regime_data = {**data.get("regime", {})}
    preset_name = regime_data.pop("preset", None)
    base_regime = PRESETS.get(preset_name, PRESETS["E0"]) if preset_name else PRESETS["E0"]
    if preset_name and preset_name not in PRESETS:
        violations.append(f"regime.preset: unknown preset {preset_name!r}")
    regime_fields = {f.name for f in fields(RegimeSpec)}
    regime_kwargs = {k: v for k, v in regime_data.items() if k in regime_fields}
    for key in regime_data.keys() - regime_fields:
        violations.append(f"regime.{key}: unknown field")

    cfg = RunConfig(regime=base_regime)
    _apply_section(cfg.curriculum, data.get("curriculum", {}), "curriculum", violations)
    _apply_section(cfg.toolchain, data.get("toolchain", {}), "toolchain", violations)
    agent_data = data.get("agents", {})
    _apply_section(cfg.alice, agent_data.get("alice", {}), "agents.alice", violations)
    _apply_section(cfg.bob, agent_data.get("bob", {}), "agents.bob", violations)
    for key in ("seed", "mock", "out_dir", "workers"):
        if key in data:
            setattr(cfg, key, data[key])

    overrides = overrides or {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key in regime_fields:
            regime_kwargs[key] = value
        elif key == "tau":
            regime_kwargs["tau"] = value
        elif hasattr(cfg, key):
            setattr(cfg, key, value)
        else:
            violations.append(f"override {key!r}: unknown field")
    if "tau" in regime_kwargs:
        cfg.curriculum.tau = regime_kwargs["tau"]
    if regime_kwargs:
        from dataclasses import replace

        try:
            cfg.regime = replace(base_regime, **regime_kwargs)
        except TypeError as exc:
            violations.append(f"regime: {exc}")

    violations.extend(_validate(cfg))
    if violations:
        raise ConfigValidationError(violations)
    return cfg


def _validate(cfg: RunConfig) -> list[str]:
    v: list[str] = []
    regime = cfg.regime
    if not 0 <= regime.p_seq <= 1:
        v.append(f"regime.p_seq {regime.p_seq} outside [0, 1]")
    if regime.budget_p < 0:
        v.append(f"regime.budget_p {regime.budget_p} must be >= 0")
    if regime.rounds < 0:
        v.append(f"regime.rounds {regime.rounds} must be >= 0")
    if regime.n_bob_samples < 1:
        v.append(f"regime.n_bob_samples {regime.n_bob_samples} must be >= 1")
    if not 0 <= regime.tau <= 10:
        v.append(f"regime.tau {regime.tau} outside [0, 10]")
    if not 0 <= cfg.curriculum.tau <= 10:
        v.append(f"curriculum.tau {cfg.curriculum.tau} outside [0, 10]")
    for name in ("easy_fraction_generation", "easy_fraction_prediction"):
        value = getattr(cfg.curriculum, name)
        if not 0 <= value <= 1:
            v.append(f"curriculum.{name} {value} outside [0, 1]")
    if cfg.workers < 1:
        v.append(f"workers {cfg.workers} must be >= 1")
    if not cfg.mock:
        for label, command in (
            ("ghc_cmd", cfg.toolchain.ghc_cmd),
            ("runner_cmd", cfg.toolchain.runner_cmd),
        ):
            head = command.split()[0] if command.split() else ""
            if not head or shutil.which(head) is None:
                v.append(f"toolchain.{label}: command {head!r} not found (required without mock)")
        for name, spec in (("alice", cfg.alice), ("bob", cfg.bob)):
            if spec.kind == "remote" and not spec.url:
                v.append(f"agents.{name}: remote endpoint needs a url")
            if spec.kind == "scripted":
                if not spec.transcript:
                    v.append(f"agents.{name}: scripted endpoint needs a transcript path")
                elif not Path(spec.transcript).exists():
                    v.append(f"agents.{name}: transcript {spec.transcript!r} does not exist")
            if spec.kind not in ("remote", "scripted"):
                v.append(f"agents.{name}: unknown kind {spec.kind!r}")
    if cfg.toolchain.workspace_root and not Path(cfg.toolchain.workspace_root).exists():
        v.append(f"toolchain.workspace_root {cfg.toolchain.workspace_root!r} does not exist")
    return v
