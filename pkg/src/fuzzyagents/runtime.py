"""Deterministic tick-based host for a fuzzy agent system.

Each tick runs, in order:

1. scheduled injections and timers,
2. delivery of the messages sent last tick,
3. one perceive/decide/act round per agent, in registration order,
4. commit of messages, environment effects and organisation updates,
5. obligation expiry.

Agents may be stepped on a thread pool (``parallel=True``); all of their
effects are buffered and committed in registration order, so the trace is
identical either way.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from .agent import FuzzyAgent, SystemView, TickReport
from .organization import OrganizationState
from .protocol import (
    CommunicationAct,
    CorrelationIds,
    Directory,
    MessageTypeTable,
    ObligationTable,
    Performative,
    ProtocolViolation,
    dispatch,
    value_of,
)
from .trace import Trace

__all__ = ["Injection", "TimerEvent", "Scenario", "Runtime", "ScenarioError"]

log = logging.getLogger(__name__)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Injection:
    tick: int
    variable: str
    value: float


@dataclass(frozen=True)
class TimerEvent:
    tick: int
    agent: str
    timer: str


@dataclass(frozen=True)
class Scenario:
    name: str
    schedule: tuple[Union[Injection, TimerEvent], ...] = ()
    max_ticks: int = 0

    def __post_init__(self):
        object.__setattr__(self, "schedule", tuple(self.schedule))
        ticks = [e.tick for e in self.schedule]
        if ticks != sorted(ticks):
            raise ScenarioError(f"scenario {self.name!r}: schedule must be sorted by tick")
        if ticks and ticks[0] < 0:
            raise ScenarioError(f"scenario {self.name!r}: negative tick")
        if ticks and self.max_ticks < ticks[-1]:
            raise ScenarioError(f"scenario {self.name!r}: max_ticks precedes the last scheduled event")

    def to_dict(self) -> dict:
        entries = []
        for e in self.schedule:
            if isinstance(e, Injection):
                entries.append({"tick": e.tick, "variable": e.variable, "value": e.value})
            else:
                entries.append({"tick": e.tick, "agent": e.agent, "timer": e.timer})
        return {"name": self.name, "max_ticks": self.max_ticks, "schedule": entries}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Scenario":
        schedule = []
        for e in data.get("schedule", []):
            if "timer" in e:
                schedule.append(TimerEvent(int(e["tick"]), e["agent"], e["timer"]))
            else:
                schedule.append(Injection(int(e["tick"]), e["variable"], float(e["value"])))
        return cls(data["name"], tuple(schedule), int(data["max_ticks"]))

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class Runtime:
    """Owns the agents, the shared environment, message transport and the trace."""

    def __init__(
        self,
        agents: Iterable[FuzzyAgent] = (),
        organization: Optional[OrganizationState] = None,
        variables: Iterable[str] = (),
        message_types: Optional[MessageTypeTable] = None,
        timeout: Optional[int] = None,
        parallel: bool = False,
        seed: int = 0,
    ):
        self.agents: dict[str, FuzzyAgent] = {}
        self.organization = organization if organization is not None else OrganizationState()
        self.environment: dict[str, Optional[float]] = {v: None for v in variables}
        self.message_types = message_types if message_types is not None else MessageTypeTable()
        self.obligations = ObligationTable() if timeout is None else ObligationTable(timeout)
        self.parallel = parallel
        # reserved for stochastic extensions; nothing here draws random numbers
        self.seed = seed
        self.tick = 0
        self.trace = Trace()
        self._pending: list[CommunicationAct] = []
        self._outbox: list[CommunicationAct] = []
        self._injections: dict[int, list[Injection]] = {}
        self._timers: dict[int, list[TimerEvent]] = {}
        self._seen: dict[str, Optional[float]] = dict(self.environment)
        self._msg_ids = CorrelationIds("m")
        self._correlations = CorrelationIds("c")
        for agent in agents:
            self.register(agent)

    # ----------------------------------------------------------------------
    # setup

    def register(self, agent: FuzzyAgent, community: Optional[str] = None) -> None:
        if agent.agent_id in self.agents:
            raise ValueError(f"duplicate agent id {agent.agent_id!r}")
        community = community or agent.community
        if community is not None:
            if agent.agent_id not in self.organization.reference:
                self.organization.register_agent(agent.agent_id, community)
            agent.community = self.organization.reference[agent.agent_id]
        if agent.watches is not None:
            self.environment.setdefault(agent.watches, None)
            self._seen.setdefault(agent.watches, None)
        self.agents[agent.agent_id] = agent
        self._sync_roles(agent.agent_id)

    def inject(self, variable: str, value: float, tick: Optional[int] = None) -> None:
        if variable not in self.environment:
            raise ScenarioError(f"unknown environment variable {variable!r}")
        tick = self.tick if tick is None else tick
        if tick < self.tick:
            raise ScenarioError(f"cannot inject into past tick {tick}")
        self._injections.setdefault(tick, []).append(Injection(tick, variable, float(value)))

    def schedule_timer(self, agent: str, timer: str, tick: Optional[int] = None) -> None:
        if agent not in self.agents:
            raise ScenarioError(f"unknown agent {agent!r}")
        tick = self.tick if tick is None else tick
        self._timers.setdefault(tick, []).append(TimerEvent(tick, agent, timer))

    def post(self, act: CommunicationAct) -> None:
        """Send on behalf of an agent from outside its rule base; committed with this tick."""
        if act.source not in self.agents:
            raise ValueError(f"unknown source agent {act.source!r}")
        self._outbox.append(act)

    # ----------------------------------------------------------------------
    # views

    def directory(self) -> Directory:
        communities = {cid: tuple(c.members) for cid, c in self.organization.communities.items()}
        return Directory({aid: a.membership for aid, a in self.agents.items()}, communities)

    def _view(self, deltas, timers) -> SystemView:
        d = self.directory()
        return SystemView(self.tick, dict(self.environment), deltas, d.agents, d.communities,
                          self.message_types, timers)

    def _sync_roles(self, agent_id: str) -> None:
        self.agents[agent_id].roles = self.organization.roles_of(agent_id)

    # ----------------------------------------------------------------------
    # the tick

    def step(self) -> None:
        t = self.tick
        trace = self.trace
        trace.append(t, "tick")

        for inj in self._injections.pop(t, []):
            if inj.variable not in self.environment:
                raise ScenarioError(f"unknown environment variable {inj.variable!r}")
            self.environment[inj.variable] = inj.value
            trace.append(t, "injection", "", {"variable": inj.variable, "value": inj.value})
        timers: dict[str, tuple[str, ...]] = {}
        for ev in self._timers.pop(t, []):
            timers[ev.agent] = timers.get(ev.agent, ()) + (ev.timer,)
            trace.append(t, "timer", ev.agent, {"timer": ev.timer})
        deltas = {
            var: (self._seen.get(var), value)
            for var, value in self.environment.items()
            if value is not None and value != self._seen.get(var)
        }
        self._seen = dict(self.environment)

        for act in self._pending:
            self.agents[act.receiver].receive(act)
            trace.append(t, "message-delivered", act.receiver, {"id": act.msg_id, "source": act.source},
                         value_of(act))
        self._pending = []

        view = self._view(deltas, timers)
        agents = list(self.agents.values())
        if self.parallel and len(agents) > 1:
            with ThreadPoolExecutor(max_workers=min(8, len(agents))) as pool:
                reports = list(pool.map(lambda a: a.step(view), agents))
        else:
            reports = [a.step(view) for a in agents]

        for report in reports:
            self._record(report)
        self._commit(reports)

        for ob in self.obligations.expire(t):
            trace.append(t, "obligation-timeout", ob.obligated,
                         {"correlation": ob.correlation, "required": ob.required.value, "deadline": ob.deadline})
        self.tick += 1

    def _record(self, report: TickReport) -> None:
        t, aid = report.tick, report.agent
        for p in report.percepts:
            self.trace.append(t, "percept", aid, p.summary(), p.degree)
        for d in report.decisions:
            self.trace.append(t, "rule-fired", aid, {"rule": d.rule_id, "trigger": d.percept.key}, d.strength)
        for err in report.errors:
            self.trace.append(t, "error", aid, {"reason": err})

    def _commit(self, reports: list[TickReport]) -> None:
        t = self.tick
        trace = self.trace
        outgoing = [m for r in reports for m in r.sends] + self._outbox
        self._outbox = []

        directory = self.directory()
        interactions: list[tuple[str, str, float]] = []
        for act in outgoing:
            act = self._stamp(act)
            report = dispatch(act, directory)
            for delivery in report.deliveries:
                copy = delivery.act
                if act.performative is Performative.DIFFUSE:
                    copy = _with_id(copy, next(self._msg_ids))
                trace.append(t, "message-sent", copy.source, copy.summary(), value_of(copy))
                if not self._settle_or_open(copy):
                    continue
                self._pending.append(copy)
                interactions.append((copy.source, copy.receiver, value_of(copy)))
            for err in report.errors:
                trace.append(t, "message-sent", act.source, act.summary(), value_of(act))
                trace.append(t, "error", err.agent, {"reason": err.reason, "id": err.msg_id})

        writers: dict[str, str] = {}
        for report in reports:
            for variable, value, degree in report.env_effects:
                if variable not in self.environment:
                    trace.append(t, "error", report.agent, {"reason": f"unknown environment variable {variable!r}"})
                    continue
                detail = {"variable": variable, "value": value}
                if variable in writers:
                    detail["overwrites"] = writers[variable]
                writers[variable] = report.agent
                self.environment[variable] = value
                trace.append(t, "env-effect", report.agent, detail, degree)

        org = self.organization
        changed = org.decay_roles(1) if org.decay != 1.0 else []
        for source, target, value in interactions:
            if value > 0.0 and source in org.reference and target in org.reference:
                update = org.propagate_role(source, target, value)
                if update is not None:
                    changed.append(update)
        for ra in changed:
            trace.append(t, "role-update", ra.agent,
                         {"role": ra.role, "community": org.reference[ra.agent]}, ra.degree)
        for aid in sorted({ra.agent for ra in changed}):
            self._sync_roles(aid)

    def _stamp(self, act: CommunicationAct) -> CommunicationAct:
        correlation = act.correlation
        if correlation is None and act.performative in (Performative.ASK, Performative.INFORM):
            correlation = next(self._correlations)
        return _with_id(act, next(self._msg_ids), correlation, self.tick)

    def _settle_or_open(self, act: CommunicationAct) -> bool:
        t = self.tick
        if act.performative in (Performative.REPLY, Performative.CONFIRM):
            try:
                ob = self.obligations.settle_obligation(act)
            except ProtocolViolation as exc:
                self.trace.append(t, "error", act.source, {"reason": str(exc), "id": act.msg_id})
                return False
            self.trace.append(t, "obligation-settled", act.source, {"correlation": ob.correlation})
            return True
        ob = self.obligations.open_obligation(act)
        if ob is not None:
            self.trace.append(t, "obligation-opened", ob.obligated,
                              {"correlation": ob.correlation, "required": ob.required.value, "deadline": ob.deadline})
        return True

    # ----------------------------------------------------------------------

    def run(self, scenario: Scenario) -> Trace:
        for e in scenario.schedule:
            if isinstance(e, Injection):
                self.inject(e.variable, e.value, e.tick)
            else:
                self.schedule_timer(e.agent, e.timer, e.tick)
        log.debug("running scenario %r for %d ticks", scenario.name, scenario.max_ticks + 1)
        while self.tick <= scenario.max_ticks:
            self.step()
            self.organization.check_invariants()
        return self.trace


def _with_id(act: CommunicationAct, msg_id: str, correlation=None, tick=None) -> CommunicationAct:
    changes = {"msg_id": msg_id}
    if correlation is not None:
        changes["correlation"] = correlation
    if tick is not None:
        changes["tick"] = tick
    return replace(act, **changes)
