"""Fuzzy agents: knowledge base, decision rules and the perceive/decide/act cycle.

An agent only ever touches its own state. Everything it wants to do to the
rest of the system (messages, environment effects) comes back in the
:class:`TickReport` for the runtime to commit at the tick barrier.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Optional

from .fuzzy import (
    EmptyAggregateError,
    FuzzyRule,
    LinguisticVariable,
    T_NORMS,
    check_degree,
    conclude,
    defuzzify_centroid,
)
from .protocol import CommunicationAct, Message, MessageType, MessageTypeTable, Performative, value_of

__all__ = [
    "EventKind",
    "RuleCategory",
    "Event",
    "Percept",
    "KnowledgeBase",
    "Mutation",
    "EventPattern",
    "Condition",
    "ActionSpec",
    "DecisionRule",
    "Decision",
    "SystemView",
    "ActionRecord",
    "TickReport",
    "FuzzyAgent",
    "perceive",
    "decide",
    "act",
    "step",
    "update_knowledge",
    "compile_inference_rule",
    "DEFAULT_HISTORY_CAP",
]

DEFAULT_HISTORY_CAP = 1024


class EventKind(str, Enum):
    MESSAGE = "message-received"
    ENVIRONMENT = "environment-changed"
    TIMER = "timer"


class RuleCategory(str, Enum):
    REACTIVE = "reactive"
    ROUTINE = "routine"
    COGNITIVE = "cognitive"


@dataclass(frozen=True)
class Event:
    kind: EventKind
    payload: Any
    degree: float
    tick: int

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))
        check_degree(self.degree, "event degree")


@dataclass(frozen=True)
class Percept:
    """An interpreted event.

    ``key`` names the knowledge slot the event is about, e.g.
    ``"temperature.burning"`` for a value message or ``"temperature"`` for an
    environment change.
    """

    event: Event
    degree: float
    key: Optional[str] = None

    @property
    def act(self) -> Optional[CommunicationAct]:
        return self.event.payload if self.event.kind is EventKind.MESSAGE else None

    def summary(self) -> dict:
        ev = self.event
        if ev.kind is EventKind.MESSAGE:
            payload = {"id": ev.payload.msg_id, "performative": ev.payload.performative.value,
                       "source": ev.payload.source}
        else:
            payload = ev.payload
        return {"event": ev.kind.value, "key": self.key, "payload": payload}


@dataclass
class KnowledgeBase:
    """Agent memory: domain values, affinities, event history and internal state."""

    domain_values: dict[str, Any] = field(default_factory=dict)
    acquaintances: dict[str, float] = field(default_factory=dict)
    internal_state: dict[str, Any] = field(default_factory=dict)
    variables: dict[str, LinguisticVariable] = field(default_factory=dict)
    history_cap: int = DEFAULT_HISTORY_CAP
    observed_events: deque = field(init=False)

    def __post_init__(self):
        if self.history_cap < 1:
            raise ValueError("history cap must be positive")
        self.observed_events = deque(maxlen=self.history_cap)
        for agent, degree in self.acquaintances.items():
            check_degree(degree, f"affinity for {agent!r}")

    def degree(self, key: str) -> Optional[float]:
        value = self.domain_values.get(key)
        return None if value is None else float(value)

    def affinity(self, agent: str) -> float:
        return self.acquaintances.get(agent, 1.0)

    def previous(self, key: str) -> Optional[float]:
        return self.internal_state.get("previous", {}).get(key)


@dataclass(frozen=True)
class Mutation:
    """A knowledge-base write: ``slot`` is domain, affinity, state or event."""

    slot: str
    key: Optional[str] = None
    value: Any = None


def update_knowledge(agent: "FuzzyAgent", mutation: Mutation) -> None:
    kb = agent.knowledge
    if mutation.slot == "domain":
        kb.domain_values[mutation.key] = mutation.value
    elif mutation.slot == "affinity":
        kb.acquaintances[mutation.key] = check_degree(mutation.value, "affinity")
    elif mutation.slot == "state":
        kb.internal_state[mutation.key] = mutation.value
    elif mutation.slot == "event":
        kb.observed_events.append(mutation.value)
    else:
        raise ValueError(f"unknown knowledge slot {mutation.slot!r}")


# --------------------------------------------------------------------------
# rule parts
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EventPattern:
    """Structural template over percepts.

    A match yields the percept's degree, or 1.0 when ``graded`` is false.
    Fields left as ``None`` match anything.
    """

    kind: EventKind
    performative: Optional[Performative] = None
    mtype: Optional[int] = None
    sender: Optional[str] = None
    about: Optional[tuple[str, ...]] = None
    variable: Optional[str] = None
    timer: Optional[str] = None
    graded: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))
        if self.performative is not None:
            object.__setattr__(self, "performative", Performative(self.performative))
        if self.about is not None:
            object.__setattr__(self, "about", tuple(self.about))

    def match(self, percept: Percept) -> Optional[float]:
        ev = percept.event
        if ev.kind is not self.kind:
            return None
        if self.kind is EventKind.MESSAGE:
            msg = ev.payload
            if self.performative is not None and msg.performative is not self.performative:
                return None
            if self.mtype is not None and msg.mtype.code != self.mtype:
                return None
            if self.sender is not None and msg.source != self.sender:
                return None
            if self.about is not None and percept.key not in self.about:
                return None
        elif self.kind is EventKind.ENVIRONMENT:
            if self.variable is not None and ev.payload["variable"] != self.variable:
                return None
        elif self.timer is not None and ev.payload != self.timer:
            return None
        return percept.degree if self.graded else 1.0

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind.value}
        for name in ("mtype", "sender", "variable", "timer"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        if self.performative is not None:
            out["performative"] = self.performative.value
        if self.about is not None:
            out["about"] = list(self.about)
        if not self.graded:
            out["graded"] = False
        return out

    @classmethod
    def from_dict(cls, data: Mapping, types: Optional[MessageTypeTable] = None) -> "EventPattern":
        data = dict(data)
        if "mtype" in data and types is not None:
            data["mtype"] = types.resolve(data["mtype"]).code
        return cls(**data)


@dataclass(frozen=True)
class Condition:
    """Fuzzy predicate over the knowledge base.

    kinds:
      * ``always``: 1.0
      * ``degree``: the stored degree of ``keys[0]`` (0 when unknown)
      * ``premises``: min over stored degrees of ``keys``, skipping the key
        the triggering percept is about; any unknown key gives 0
      * ``at_least``: crisp ``keys[0] >= value``; the key ``$content`` reads
        the triggering message's content degree
      * ``changed``: crisp, 1 if any key differs from its previous value
      * ``all``: min over ``parts``
    """

    kind: str = "always"
    keys: tuple[str, ...] = ()
    value: float = 0.0
    parts: tuple["Condition", ...] = ()

    def __post_init__(self):
        if self.kind not in ("always", "degree", "premises", "at_least", "changed", "all"):
            raise ValueError(f"unknown condition kind {self.kind!r}")
        object.__setattr__(self, "keys", tuple(self.keys))
        object.__setattr__(self, "parts", tuple(self.parts))

    def degree(self, kb: KnowledgeBase, percept: Optional[Percept] = None) -> float:
        if self.kind == "always":
            return 1.0
        if self.kind == "degree":
            d = kb.degree(self.keys[0])
            return 0.0 if d is None else d
        if self.kind == "premises":
            out = 1.0
            for key in self.keys:
                if percept is not None and key == percept.key:
                    continue
                d = kb.degree(key)
                if d is None:
                    return 0.0
                out = min(out, d)
            return out
        if self.kind == "at_least":
            key = self.keys[0]
            if key == "$content":
                d = percept.act.content.degree if percept is not None and percept.act is not None else None
            else:
                d = kb.degree(key)
            return 1.0 if d is not None and d >= self.value else 0.0
        if self.kind == "changed":
            for key in self.keys:
                if key not in kb.domain_values:
                    continue
                if "previous" not in kb.internal_state or key not in kb.internal_state["previous"]:
                    return 1.0
                if kb.previous(key) != kb.degree(key):
                    return 1.0
            return 0.0
        return min((p.degree(kb, percept) for p in self.parts), default=1.0)

    def to_dict(self) -> dict:
        if self.kind == "always":
            return {"always": True}
        if self.kind == "degree":
            return {"degree": self.keys[0]}
        if self.kind == "at_least":
            return {"at_least": {"key": self.keys[0], "value": self.value}}
        if self.kind == "all":
            return {"all": [p.to_dict() for p in self.parts]}
        return {self.kind: list(self.keys)}

    @classmethod
    def from_dict(cls, data: Optional[Mapping]) -> "Condition":
        if not data:
            return cls()
        if len(data) != 1:
            raise ValueError(f"a condition has exactly one kind, got {sorted(data)}")
        ((kind, arg),) = data.items()
        if kind == "always":
            return cls()
        if kind == "degree":
            return cls("degree", (arg,))
        if kind == "at_least":
            return cls("at_least", (arg["key"],), float(arg["value"]))
        if kind == "all":
            return cls("all", parts=tuple(cls.from_dict(p) for p in arg))
        return cls(kind, tuple(arg))


_ACTION_KINDS = ("send", "env", "update", "conclude")


@dataclass(frozen=True)
class ActionSpec:
    """Template of something an agent can do.

    ``send`` params: performative, to, mtype, content, ack. ``to`` may be
    ``$sender`` (the triggering message's source) or, for diffuse,
    ``$community``. ``content`` is ``{"key": slot}`` to report a stored
    degree, ``"$content"`` to echo the trigger, or an explicit
    ``{"kind", "body", "degree"}``. A reply or confirm reuses the trigger's
    correlation id.

    ``env`` sets an environment variable; ``update`` writes a knowledge slot
    (value ``$content`` stores the trigger's content degree); ``conclude``
    asserts a Mamdani consequent ``(variable, term)`` at the decision's
    strength.
    """

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    degree: float = 1.0

    def __post_init__(self):
        if self.kind not in _ACTION_KINDS:
            raise ValueError(f"unknown action kind {self.kind!r}")
        check_degree(self.degree, "action degree")
        object.__setattr__(self, "params", dict(self.params))

    def to_dict(self) -> dict:
        out = {self.kind: dict(self.params)}
        if self.degree != 1.0:
            out["degree"] = self.degree
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "ActionSpec":
        data = dict(data)
        degree = float(data.pop("degree", 1.0))
        if len(data) != 1:
            raise ValueError(f"an action has exactly one kind, got {sorted(data)}")
        ((kind, params),) = data.items()
        return cls(kind, params, degree)


@dataclass(frozen=True)
class DecisionRule:
    """``IF event AND condition THEN actions``, gated by a threshold."""

    rule_id: str
    event: EventPattern
    condition: Condition
    actions: tuple[ActionSpec, ...]
    threshold: float = 0.0
    category: RuleCategory = RuleCategory.ROUTINE

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "category", RuleCategory(self.category))
        check_degree(self.threshold, "threshold")
        if not self.actions:
            raise ValueError(f"rule {self.rule_id!r} needs at least one action")

    def fires(self, strength: float) -> bool:
        # a zero-strength rule never fires, even under a zero threshold
        return strength >= self.threshold and strength > 0.0

    def to_dict(self) -> dict:
        return {
            "id": self.rule_id,
            "on": self.event.to_dict(),
            "when": self.condition.to_dict(),
            "then": [a.to_dict() for a in self.actions],
            "threshold": self.threshold,
            "category": self.category.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping, types: Optional[MessageTypeTable] = None) -> "DecisionRule":
        return cls(
            data["id"],
            EventPattern.from_dict(data["on"], types),
            Condition.from_dict(data.get("when")),
            tuple(ActionSpec.from_dict(a) for a in data["then"]),
            float(data.get("threshold", 0.0)),
            data.get("category", "routine"),
        )


def compile_inference_rule(rule: FuzzyRule, value_type: int = 2) -> DecisionRule:
    """Turn a Mamdani rule into a decision rule for the agent owning its consequent.

    The rule reacts to value messages about any of its premises; the
    triggering degree is combined with the stored degrees of the other
    premises, so the firing strength is the usual premise t-norm.
    """
    keys = tuple(f"{var}.{term}" for var, term in rule.premises)
    return DecisionRule(
        rule.rule_id,
        EventPattern(EventKind.MESSAGE, Performative.INFORM, value_type, about=keys),
        Condition("premises", keys),
        (ActionSpec("conclude", {"variable": rule.consequent[0], "term": rule.consequent[1]}),),
        threshold=0.0,
    )


@dataclass(frozen=True)
class Decision:
    rule_id: str
    strength: float
    actions: tuple[ActionSpec, ...]
    percept: Percept


# --------------------------------------------------------------------------
# agent and tick
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SystemView:
    """Read-only slice of the system an agent sees during a tick."""

    tick: int
    environment: Mapping[str, Optional[float]]
    deltas: Mapping[str, tuple[Optional[float], float]]
    agents: Mapping[str, float]
    communities: Mapping[str, tuple[str, ...]]
    message_types: MessageTypeTable
    timers: Mapping[str, tuple[str, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class ActionRecord:
    tick: int
    rule_id: str
    kind: str
    detail: Mapping[str, Any]
    degree: float


@dataclass
class TickReport:
    agent: str
    tick: int
    percepts: list[Percept] = field(default_factory=list)
    decisions: list[Decision] = field(default_factory=list)
    sends: list[CommunicationAct] = field(default_factory=list)
    env_effects: list[tuple[str, float, float]] = field(default_factory=list)
    actions: list[ActionRecord] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)


@dataclass
class FuzzyAgent:
    """A fuzzy agent: identity, degree in the system, knowledge, rules and mailbox.

    ``variable`` is the universe the agent was agentified from, if any; it
    perceives changes of that environment variable. ``focus`` is the term
    whose degree an environment percept carries.
    """

    agent_id: str
    membership: float = 1.0
    knowledge: KnowledgeBase = field(default_factory=KnowledgeBase)
    rules: list[DecisionRule] = field(default_factory=list)
    roles: dict[str, float] = field(default_factory=dict)
    community: Optional[str] = None
    variable: Optional[LinguisticVariable] = None
    focus: Optional[str] = None
    t_norm: str = "min"
    mailbox: deque = field(default_factory=deque)
    action_log: list[ActionRecord] = field(default_factory=list)

    def __post_init__(self):
        check_degree(self.membership, f"membership of {self.agent_id!r}")
        if self.variable is not None:
            self.knowledge.variables.setdefault(self.variable.name, self.variable)
            if self.focus is not None:
                self.focus = self.variable.canonical(self.focus)
        ids = [r.rule_id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise ValueError(f"agent {self.agent_id!r} has duplicate rule ids")

    @property
    def watches(self) -> Optional[str]:
        return self.variable.name if self.variable is not None else None

    def receive(self, act: CommunicationAct) -> None:
        self.mailbox.append(act)

    def step(self, view: SystemView) -> TickReport:
        return step(self, view)


def _observe_environment(agent: FuzzyAgent, view: SystemView, old, new) -> Percept:
    kb = agent.knowledge
    var = agent.variable
    degrees = var.fuzzify(new)
    keys = [var.name] + [f"{var.name}.{label}" for label in degrees]
    kb.internal_state["previous"] = {k: kb.domain_values.get(k) for k in keys if k in kb.domain_values}
    kb.domain_values[var.name] = new
    for label, d in degrees.items():
        kb.domain_values[f"{var.name}.{label}"] = d
    degree = degrees[agent.focus] if agent.focus is not None else 1.0
    payload = {"variable": var.name, "old": old, "new": new, "degrees": degrees}
    event = Event(EventKind.ENVIRONMENT, payload, degree, view.tick)
    kb.observed_events.append(event)
    return Percept(event, degree, var.name)


def perceive(agent: FuzzyAgent, view: SystemView) -> list[Percept]:
    """Drain the mailbox and observe the watched environment variable.

    Value messages are filed into the knowledge base as they are read.
    """
    kb = agent.knowledge
    percepts = []
    while agent.mailbox:
        msg = agent.mailbox.popleft()
        event = Event(EventKind.MESSAGE, msg, value_of(msg), view.tick)
        kb.observed_events.append(event)
        key = None
        if msg.content.kind == "value" and msg.content.key is not None:
            key = msg.content.key
            kb.domain_values[key] = msg.content.degree
        percepts.append(Percept(event, event.degree, key))
    if agent.watches is not None and agent.watches in view.deltas:
        old, new = view.deltas[agent.watches]
        percepts.append(_observe_environment(agent, view, old, new))
    for timer in view.timers.get(agent.agent_id, ()):
        event = Event(EventKind.TIMER, timer, 1.0, view.tick)
        kb.observed_events.append(event)
        percepts.append(Percept(event, 1.0, timer))
    return percepts


def decide(agent: FuzzyAgent, percepts: Iterable[Percept]) -> list[Decision]:
    """Fire every rule whose event matches a percept and whose strength clears its threshold.

    Ordered by strength, descending; ties keep rule declaration order, then
    percept order.
    """
    tn = T_NORMS[agent.t_norm]
    percepts = list(percepts)
    decisions = []
    for rule in agent.rules:
        for percept in percepts:
            event_degree = rule.event.match(percept)
            if event_degree is None:
                continue
            if rule.category is RuleCategory.REACTIVE:
                condition_degree = 1.0
            else:
                condition_degree = rule.condition.degree(agent.knowledge, percept)
            strength = tn(event_degree, condition_degree)
            if rule.fires(strength):
                decisions.append(Decision(rule.rule_id, strength, rule.actions, percept))
    decisions.sort(key=lambda d: -d.strength)
    return decisions


def _content(spec: Mapping, agent: FuzzyAgent, trigger: Optional[CommunicationAct]) -> Message:
    content = spec.get("content")
    if content is None:
        return Message()
    if content == "$content":
        if trigger is None:
            raise ValueError("$content needs a triggering message")
        return trigger.content
    if "key" in content:
        key = content["key"]
        d = agent.knowledge.degree(key)
        if d is None:
            raise ValueError(f"nothing known about {key!r}")
        return Message("value", None, d, key)
    return Message(content.get("kind", "assertion"), content.get("body"), float(content.get("degree", 1.0)))


def _build_send(agent: FuzzyAgent, spec: Mapping, decision: Decision, view: SystemView) -> CommunicationAct:
    trigger = decision.percept.act
    performative = Performative(spec["performative"])
    to = spec.get("to")
    if to == "$sender":
        if trigger is None:
            raise ValueError("$sender needs a triggering message")
        to = trigger.source
    receiver = community = None
    if performative is Performative.DIFFUSE:
        community = agent.community if to in (None, "$community") else to
        if community not in view.communities:
            raise LookupError(f"unknown community {community!r}")
    else:
        receiver = to
        if receiver not in view.agents:
            raise LookupError(f"unknown receiver {receiver!r}")
    default_type = {Performative.ASK: 3, Performative.REPLY: 4, Performative.CONFIRM: 5}.get(performative, 2)
    mtype: MessageType = view.message_types.resolve(spec.get("mtype", default_type))
    correlation = None
    if performative in (Performative.REPLY, Performative.CONFIRM) and trigger is not None:
        correlation = trigger.correlation
    return CommunicationAct(
        performative,
        agent.agent_id,
        receiver=receiver,
        community=community,
        mtype=mtype,
        content=_content(spec, agent, trigger),
        source_degree=agent.membership,
        mtype_degree=float(spec.get("mtype_degree", 1.0)),
        correlation=correlation,
        ack_required=bool(spec.get("ack", False)),
        tick=view.tick,
    )


def act(agent: FuzzyAgent, decisions: Iterable[Decision], view: SystemView, report: Optional[TickReport] = None) -> TickReport:
    """Execute the bound actions of the given decisions.

    Sends and environment effects are returned for the runtime to commit.
    Conclusions are pooled over the whole tick, then each concluded variable
    is defuzzified once into a single environment effect. A failing action is
    recorded as an error and the rest still run.
    """
    if report is None:
        report = TickReport(agent.agent_id, view.tick)
    concluded: list[tuple[tuple[str, str], float]] = []
    conclusion_degree: dict[str, float] = {}
    for decision in decisions:
        for spec in decision.actions:
            params = spec.params
            try:
                if spec.kind == "send":
                    msg = _build_send(agent, params, decision, view)
                    report.sends.append(msg)
                    detail = {"performative": msg.performative.value, "to": msg.receiver or msg.community}
                elif spec.kind == "env":
                    value = float(params["value"])
                    report.env_effects.append((params["variable"], value, min(decision.strength, spec.degree)))
                    detail = {"variable": params["variable"], "value": value}
                elif spec.kind == "update":
                    value = params.get("value")
                    if value == "$content":
                        trigger = decision.percept.act
                        if trigger is None:
                            raise ValueError("$content needs a triggering message")
                        value = trigger.content.degree
                    update_knowledge(agent, Mutation(params.get("slot", "domain"), params["key"], value))
                    detail = {"key": params["key"], "value": value}
                else:
                    variable = params["variable"]
                    term = agent.knowledge.variables[variable].canonical(params["term"])
                    strength = min(decision.strength, spec.degree)
                    concluded.append(((variable, term), strength))
                    conclusion_degree[variable] = max(conclusion_degree.get(variable, 0.0), strength)
                    detail = {"variable": variable, "term": term}
            except (LookupError, ValueError) as exc:
                report.errors.append(f"{decision.rule_id}: {exc.args[0] if exc.args else exc}")
                continue
            record = ActionRecord(view.tick, decision.rule_id, spec.kind, detail, decision.strength)
            agent.action_log.append(record)
            report.actions.append(record)
    if concluded:
        sets = conclude(concluded, agent.knowledge.variables)
        for variable in sorted(sets):
            try:
                value = defuzzify_centroid(sets[variable])
            except EmptyAggregateError as exc:
                report.errors.append(str(exc))
                continue
            agent.knowledge.domain_values[variable] = value
            report.env_effects.append((variable, value, conclusion_degree[variable]))
    return report


def step(agent: FuzzyAgent, view: SystemView) -> TickReport:
    """One perceive, decide, act round."""
    report = TickReport(agent.agent_id, view.tick)
    report.percepts = perceive(agent, view)
    report.decisions = decide(agent, report.percepts)
    return act(agent, report.decisions, view, report)
