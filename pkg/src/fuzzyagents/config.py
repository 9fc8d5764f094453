"""Structured (JSON) configuration: variables, rules, agents and organisation.

``load_config`` parses and cross-checks a configuration; ``save_config``
writes the canonical form back. Loading what was saved yields an equal
:class:`SystemConfig`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from .agent import DEFAULT_HISTORY_CAP, DecisionRule
from .fuzzy import T_NORMS, FuzzyRule, LinguisticVariable
from .organization import Community, OrganizationState, Role
from .protocol import DEFAULT_MESSAGE_TYPES, DEFAULT_TIMEOUT, MessageType, MessageTypeTable

__all__ = [
    "ConfigError",
    "AgentSpec",
    "CalibrationPoint",
    "SystemConfig",
    "load_config",
    "save_config",
    "parse_config",
]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationPoint:
    variable: str
    term: str
    x: float
    expected: float
    tolerance: float = 0.005

    def to_dict(self) -> dict:
        return {"variable": self.variable, "term": self.term, "x": self.x,
                "expected": self.expected, "tolerance": self.tolerance}


@dataclass(frozen=True)
class AgentSpec:
    """How to build one agent.

    ``inference`` asks for the Mamdani rules concluding on the agent's
    variable to be compiled into its rule base.
    """

    agent_id: str
    variable: Optional[str] = None
    focus: Optional[str] = None
    membership: float = 1.0
    community: Optional[str] = None
    affinities: Mapping[str, float] = field(default_factory=dict)
    inference: bool = False
    rules: tuple[DecisionRule, ...] = ()
    history_cap: int = DEFAULT_HISTORY_CAP

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"id": self.agent_id}
        if self.variable is not None:
            out["variable"] = self.variable
        if self.focus is not None:
            out["focus"] = self.focus
        out["membership"] = self.membership
        if self.community is not None:
            out["community"] = self.community
        if self.affinities:
            out["affinities"] = dict(self.affinities)
        if self.inference:
            out["inference"] = True
        out["rules"] = [r.to_dict() for r in self.rules]
        if self.history_cap != DEFAULT_HISTORY_CAP:
            out["history_cap"] = self.history_cap
        return out


@dataclass(frozen=True)
class SystemConfig:
    name: str
    variables: Mapping[str, LinguisticVariable]
    inference_rules: tuple[FuzzyRule, ...] = ()
    t_norm: str = "min"
    message_types: tuple[MessageType, ...] = DEFAULT_MESSAGE_TYPES
    roles: tuple[Role, ...] = ()
    communities: tuple[Community, ...] = ()
    activation_threshold: float = 0.5
    decay: float = 0.95
    initial_main_degree: float = 1.0
    timeout: int = DEFAULT_TIMEOUT
    environment: tuple[str, ...] = ()
    agents: tuple[AgentSpec, ...] = ()
    calibration: tuple[CalibrationPoint, ...] = ()

    @property
    def type_table(self) -> MessageTypeTable:
        return MessageTypeTable(self.message_types)

    def variable(self, name: str) -> LinguisticVariable:
        try:
            return self.variables[name]
        except KeyError:
            raise ConfigError(f"unknown variable {name!r}") from None

    def canonical_rules(self) -> list[FuzzyRule]:
        return [r.canonicalized(self.variables) for r in self.inference_rules]

    def organization(self) -> OrganizationState:
        return OrganizationState(
            self.roles,
            [Community(c.community_id, c.main_role, c.objective, []) for c in self.communities],
            activation_threshold=self.activation_threshold,
            decay=self.decay,
            initial_main_degree=self.initial_main_degree,
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "connectives": {"t_norm": self.t_norm},
            "variables": [v.to_dict() for v in self.variables.values()],
            "inference_rules": [r.to_dict() for r in self.inference_rules],
            "message_types": [{"code": t.code, "meaning": t.meaning} for t in self.message_types],
            "roles": [{"id": r.role_id, "description": r.description} for r in self.roles],
            "communities": [{"id": c.community_id, "main_role": c.main_role, "objective": c.objective}
                            for c in self.communities],
            "organization": {
                "activation_threshold": self.activation_threshold,
                "decay": self.decay,
                "initial_main_degree": self.initial_main_degree,
            },
            "protocol": {"timeout": self.timeout},
            "environment": list(self.environment),
            "agents": [a.to_dict() for a in self.agents],
            "calibration": [c.to_dict() for c in self.calibration],
        }


def _agent_spec(data: Mapping, types: MessageTypeTable) -> AgentSpec:
    try:
        rules = tuple(DecisionRule.from_dict(r, types) for r in data.get("rules", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"agent {data.get('id')!r}: bad rule: {exc}") from None
    return AgentSpec(
        data["id"],
        data.get("variable"),
        data.get("focus"),
        float(data.get("membership", 1.0)),
        data.get("community"),
        {k: float(v) for k, v in data.get("affinities", {}).items()},
        bool(data.get("inference", False)),
        rules,
        int(data.get("history_cap", DEFAULT_HISTORY_CAP)),
    )


def parse_config(data: Mapping) -> SystemConfig:
    """Build a :class:`SystemConfig` from a decoded JSON tree, checking cross references."""
    try:
        variables = {}
        for v in data.get("variables", []):
            lv = LinguisticVariable.from_dict(v)
            if lv.name in variables:
                raise ConfigError(f"duplicate variable {lv.name!r}")
            variables[lv.name] = lv
        t_norm = data.get("connectives", {}).get("t_norm", "min")
        if t_norm not in T_NORMS:
            raise ConfigError(f"unknown t-norm {t_norm!r}")
        message_types = tuple(MessageType(int(t["code"]), t["meaning"]) for t in data.get("message_types", [])) \
            or DEFAULT_MESSAGE_TYPES
        types = MessageTypeTable(message_types)
        org = data.get("organization", {})
        cfg = SystemConfig(
            name=data.get("name", "unnamed"),
            variables=variables,
            inference_rules=tuple(FuzzyRule.from_dict(r) for r in data.get("inference_rules", [])),
            t_norm=t_norm,
            message_types=message_types,
            roles=tuple(Role(r["id"], r.get("description", "")) for r in data.get("roles", [])),
            communities=tuple(Community(c["id"], c["main_role"], c.get("objective", ""))
                              for c in data.get("communities", [])),
            activation_threshold=float(org.get("activation_threshold", 0.5)),
            decay=float(org.get("decay", 0.95)),
            initial_main_degree=float(org.get("initial_main_degree", 1.0)),
            timeout=int(data.get("protocol", {}).get("timeout", DEFAULT_TIMEOUT)),
            environment=tuple(data.get("environment", [])),
            agents=tuple(_agent_spec(a, types) for a in data.get("agents", [])),
            calibration=tuple(
                CalibrationPoint(c["variable"], c["term"], float(c["x"]), float(c["expected"]),
                                 float(c.get("tolerance", 0.005)))
                for c in data.get("calibration", [])
            ),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None
    _check_references(cfg)
    return cfg


def _check_references(cfg: SystemConfig) -> None:
    for rule in cfg.inference_rules:
        for var, _ in rule.premises + (rule.consequent,):
            cfg.variable(var)
        try:
            rule.canonicalized(cfg.variables)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    try:
        cfg.organization()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    communities = {c.community_id for c in cfg.communities}
    ids = set()
    for spec in cfg.agents:
        if spec.agent_id in ids:
            raise ConfigError(f"duplicate agent id {spec.agent_id!r}")
        ids.add(spec.agent_id)
        if spec.variable is not None:
            lv = cfg.variable(spec.variable)
            if spec.focus is not None and spec.focus not in lv.labels and spec.focus not in lv.aliases:
                raise ConfigError(f"agent {spec.agent_id!r}: unknown focus term {spec.focus!r}")
        if spec.community is not None and spec.community not in communities:
            raise ConfigError(f"agent {spec.agent_id!r}: unknown community {spec.community!r}")
        if spec.inference and spec.variable is None:
            raise ConfigError(f"agent {spec.agent_id!r}: inference needs a variable")
    for point in cfg.calibration:
        lv = cfg.variable(point.variable)
        if point.term not in lv.labels and point.term not in lv.aliases:
            raise ConfigError(f"calibration point names unknown term {point.term!r}")


def load_config(source: Union[str, Path, Mapping]) -> SystemConfig:
    if isinstance(source, Mapping):
        return parse_config(source)
    try:
        data = json.loads(Path(source).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: not valid JSON ({exc})") from None
    return parse_config(data)


def save_config(cfg: SystemConfig, path: Union[str, Path, None] = None) -> str:
    text = json.dumps(cfg.to_dict(), indent=2, ensure_ascii=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
