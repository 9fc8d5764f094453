"""Building agent systems from configuration, and the smart-watering reference system.

Agentification creates one agent per universe; each agent knows its
variable's terms. Mamdani rules are installed on the agent owning the
consequent's universe, and notification rules on the sensing agents tell it
when their membership degrees move.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Optional, Sequence

from .agent import FuzzyAgent, KnowledgeBase, compile_inference_rule
from .config import ConfigError, SystemConfig, load_config
from .fuzzy import LinguisticVariable, infer_mamdani
from .protocol import MessageTypeTable
from .runtime import Runtime, Scenario
from .trace import Trace

__all__ = [
    "agentify",
    "build_system",
    "WateringSystem",
    "build_watering_system",
    "run_scenario",
    "infer",
    "validate_config",
    "reference_config",
    "reference_scenario",
    "REFERENCE_CONFIG",
    "REFERENCE_SCENARIO",
]

_DATA = resources.files("fuzzyagents") / "data"
REFERENCE_CONFIG = _DATA / "watering.json"
REFERENCE_SCENARIO = _DATA / "reference_scenario.json"


def reference_config() -> SystemConfig:
    return load_config(json.loads(REFERENCE_CONFIG.read_text(encoding="utf-8")))


def reference_scenario() -> Scenario:
    return Scenario.from_dict(json.loads(REFERENCE_SCENARIO.read_text(encoding="utf-8")))


def agentify(
    universes: Sequence[LinguisticVariable],
    names: Optional[Mapping[str, str]] = None,
) -> list[FuzzyAgent]:
    """One agent per universe.

    ``names`` maps variable names to agent ids; by default an agent is named
    ``<variable>_agent``.
    """
    universes = list(universes)
    if not universes:
        raise ValueError("nothing to agentify: no universes given")
    seen = set()
    for lv in universes:
        if lv.name in seen:
            raise ValueError(f"duplicate universe {lv.name!r}")
        seen.add(lv.name)
    names = names or {}
    return [
        FuzzyAgent(names.get(lv.name, f"{lv.name}_agent"), variable=lv, knowledge=KnowledgeBase(variables={lv.name: lv}))
        for lv in universes
    ]


def _make_agent(cfg: SystemConfig, spec, base: Optional[FuzzyAgent], types: MessageTypeTable) -> FuzzyAgent:
    kb = KnowledgeBase(acquaintances=dict(spec.affinities), history_cap=spec.history_cap)
    kb.variables.update(cfg.variables)
    rules = list(spec.rules)
    if spec.inference:
        value_type = types.resolve("value").code if "value" in types else 2
        rules += [compile_inference_rule(r, value_type) for r in cfg.canonical_rules()
                  if r.consequent[0] == spec.variable]
    return FuzzyAgent(
        spec.agent_id,
        membership=spec.membership,
        knowledge=kb,
        rules=rules,
        community=spec.community,
        variable=base.variable if base is not None else None,
        focus=spec.focus,
        t_norm=cfg.t_norm,
    )


def build_system(cfg: SystemConfig, parallel: bool = False, seed: int = 0) -> Runtime:
    """Instantiate every configured agent and register it with a fresh runtime."""
    types = cfg.type_table
    with_variables = [s for s in cfg.agents if s.variable is not None]
    bases = {}
    if with_variables:
        agents = agentify([cfg.variable(s.variable) for s in with_variables],
                          {s.variable: s.agent_id for s in with_variables})
        bases = {a.agent_id: a for a in agents}
    try:
        agents = [_make_agent(cfg, spec, bases.get(spec.agent_id), types) for spec in cfg.agents]
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"cannot build agents: {exc}") from None
    runtime = Runtime(
        organization=cfg.organization(),
        variables=cfg.environment,
        message_types=types,
        timeout=cfg.timeout,
        parallel=parallel,
        seed=seed,
    )
    for agent in agents:
        runtime.register(agent)
    return runtime


@dataclass
class WateringSystem:
    config: SystemConfig
    runtime: Runtime
    temperature_agent: FuzzyAgent
    humidity_agent: FuzzyAgent
    duration_agent: FuzzyAgent

    @property
    def agents(self) -> list[FuzzyAgent]:
        return [self.temperature_agent, self.humidity_agent, self.duration_agent]

    @property
    def duration(self) -> Optional[float]:
        return self.runtime.environment.get("duration")


def build_watering_system(cfg: Optional[SystemConfig] = None, parallel: bool = False, seed: int = 0) -> WateringSystem:
    cfg = reference_config() if cfg is None else cfg
    problems = validate_config(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    by_variable: dict[str, list[str]] = {}
    for spec in cfg.agents:
        if spec.variable is not None:
            by_variable.setdefault(spec.variable, []).append(spec.agent_id)
    for var in ("temperature", "humidity", "duration"):
        if len(by_variable.get(var, [])) != 1:
            raise ConfigError(f"the watering system needs exactly one agent for {var!r}")
    if len(cfg.agents) != 3:
        raise ConfigError("the watering system has exactly three agents")
    runtime = build_system(cfg, parallel=parallel, seed=seed)
    pick = {var: runtime.agents[ids[0]] for var, ids in by_variable.items()}
    return WateringSystem(cfg, runtime, pick["temperature"], pick["humidity"], pick["duration"])


def run_scenario(system: WateringSystem, scenario: Scenario) -> tuple[Optional[float], Trace]:
    """Run the scenario; return the last duration set by an agent (None if never set) and the trace."""
    trace = system.runtime.run(scenario)
    duration = None
    for rec in trace.of_kind("env-effect"):
        if rec.detail["variable"] == "duration":
            duration = rec.detail["value"]
    return duration, trace


def infer(cfg: SystemConfig, temperature: float, humidity: float) -> float:
    """Direct Mamdani inference, bypassing the agents."""
    return infer_mamdani(cfg.canonical_rules(), cfg.variables,
                         {"temperature": temperature, "humidity": humidity}, cfg.t_norm, output="duration")


def validate_config(cfg: SystemConfig, required: Iterable[str] = ()) -> list[str]:
    """Semantic checks beyond parsing; returns human-readable problems (empty when valid)."""
    problems = []
    for name in required:
        if name not in cfg.variables:
            problems.append(f"missing variable {name!r}")
    for point in cfg.calibration:
        lv = cfg.variables[point.variable]
        got = lv.term(point.term).membership(point.x)
        if abs(got - point.expected) > point.tolerance:
            problems.append(
                f"calibration: mu_{point.term}({point.x:g}) = {got:.4f}, expected {point.expected} +/- {point.tolerance}"
            )
    for spec in cfg.agents:
        for rule in spec.rules:
            for action in rule.actions:
                to = action.params.get("to")
                if action.kind == "send" and to is not None and not to.startswith("$"):
                    known = {a.agent_id for a in cfg.agents} | {c.community_id for c in cfg.communities}
                    if to not in known:
                        problems.append(f"agent {spec.agent_id!r} rule {rule.rule_id!r} sends to unknown {to!r}")
    for var, lv in cfg.variables.items():
        for term in lv.terms:
            if term.discretize().samples.max() <= 0.0:
                problems.append(f"term {var}.{term.label} is empty on the discretization grid")
    return problems


