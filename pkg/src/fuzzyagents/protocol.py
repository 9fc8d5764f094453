"""Fuzzy speech-act messages, their valuation, dispatch and the obligation protocol."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping, Optional

from .fuzzy import check_degree

__all__ = [
    "Performative",
    "CooperationCategory",
    "MessageType",
    "MessageTypeTable",
    "Message",
    "CommunicationAct",
    "CooperativeAct",
    "Interaction",
    "Obligation",
    "ObligationTable",
    "ProtocolError",
    "Delivery",
    "DeliveryReport",
    "Directory",
    "value_of",
    "evaluate_interest",
    "dispatch",
    "CorrelationIds",
    "DEFAULT_MESSAGE_TYPES",
    "DEFAULT_TIMEOUT",
]

DEFAULT_TIMEOUT = 10


class Performative(str, Enum):
    INFORM = "inform"
    DIFFUSE = "diffuse"
    ASK = "ask"
    REPLY = "reply"
    CONFIRM = "confirm"


class CooperationCategory(str, Enum):
    COMMUNICATION = "Communication"
    COORDINATION = "Coordination"
    CO_PRODUCTION = "Co-production"
    CO_MEMORY = "Co-memory"
    CONTROL_PROCESS = "Control-Process"


@dataclass(frozen=True)
class MessageType:
    code: int
    meaning: str


DEFAULT_MESSAGE_TYPES = (
    MessageType(1, "assertion"),
    MessageType(2, "value"),
    MessageType(3, "question"),
    MessageType(4, "response"),
    MessageType(5, "acknowledgement"),
)


class MessageTypeTable:
    """The registered message types, looked up by code or meaning."""

    def __init__(self, types: Iterable[MessageType] = DEFAULT_MESSAGE_TYPES):
        self._by_code: dict[int, MessageType] = {}
        for t in types:
            if t.code in self._by_code:
                raise ValueError(f"duplicate message type code {t.code}")
            self._by_code[t.code] = t
        self._by_meaning = {t.meaning: t for t in self._by_code.values()}

    def resolve(self, ref: int | str | MessageType) -> MessageType:
        if isinstance(ref, MessageType):
            ref = ref.code
        if isinstance(ref, bool):
            raise KeyError(f"unregistered message type {ref!r}")
        if isinstance(ref, int) and ref in self._by_code:
            return self._by_code[ref]
        if isinstance(ref, str) and ref in self._by_meaning:
            return self._by_meaning[ref]
        raise KeyError(f"unregistered message type {ref!r}")

    def __contains__(self, ref) -> bool:
        try:
            self.resolve(ref)
        except KeyError:
            return False
        return True

    def __iter__(self):
        return iter(sorted(self._by_code.values(), key=lambda t: t.code))


@dataclass(frozen=True)
class Message:
    """Message content.

    ``kind`` is one of assertion, question, response or value. A value
    record names the knowledge slot it reports in ``key`` and carries the
    reported membership degree in ``degree``.
    """

    kind: str = "assertion"
    body: Any = None
    degree: float = 1.0
    key: Optional[str] = None

    def __post_init__(self):
        check_degree(self.degree, "message degree")
        if self.kind not in ("assertion", "question", "response", "value"):
            raise ValueError(f"unknown message kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "body": self.body, "degree": self.degree, "key": self.key}


@dataclass(frozen=True)
class CommunicationAct:
    """A performative sent from one agent to another (or to a community).

    Each component carries a degree; the act's overall value is their t-norm.
    ``community`` is the target of a diffuse; the other performatives use
    ``receiver``. ``msg_id`` and ``correlation`` are assigned by the runtime.
    """

    performative: Performative
    source: str
    receiver: Optional[str] = None
    mtype: MessageType = DEFAULT_MESSAGE_TYPES[1]
    content: Message = field(default_factory=Message)
    source_degree: float = 1.0
    receiver_degree: float = 1.0
    mtype_degree: float = 1.0
    community: Optional[str] = None
    correlation: Optional[str] = None
    ack_required: bool = False
    tick: int = 0
    msg_id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "performative", Performative(self.performative))
        for name in ("source_degree", "receiver_degree", "mtype_degree"):
            check_degree(getattr(self, name), name)
        if self.performative is Performative.DIFFUSE:
            if self.community is None:
                raise ValueError("diffuse needs a community target")
        elif self.receiver is None:
            raise ValueError(f"{self.performative.value} needs a single receiver")

    @property
    def value(self) -> float:
        return value_of(self)

    def summary(self) -> dict:
        return {
            "id": self.msg_id,
            "performative": self.performative.value,
            "source": self.source,
            "receiver": self.receiver,
            "community": self.community,
            "mtype": self.mtype.code,
            "content": self.content.to_dict(),
            "correlation": self.correlation,
            "ack": self.ack_required,
        }


@dataclass(frozen=True)
class CooperativeAct:
    category: CooperationCategory
    goal: str
    payload: CommunicationAct

    def __post_init__(self):
        object.__setattr__(self, "category", CooperationCategory(self.category))


@dataclass(frozen=True)
class Interaction:
    source: str
    destination: str
    cooperative_act: CooperativeAct

    def __post_init__(self):
        if self.source == self.destination:
            raise ValueError("an interaction needs two distinct agents")

    @classmethod
    def from_act(cls, act: CommunicationAct, goal: str = "",
                 category: CooperationCategory = CooperationCategory.COMMUNICATION) -> "Interaction":
        return cls(act.source, act.receiver, CooperativeAct(category, goal, act))


def value_of(act: CommunicationAct) -> float:
    return min(act.source_degree, act.receiver_degree, act.mtype_degree, act.content.degree)


def evaluate_interest(act: CommunicationAct, affinities: Mapping[str, float]) -> float:
    """Interest of a delivered act for its receiver: act value capped by affinity to the sender."""
    return min(value_of(act), affinities.get(act.source, 1.0))


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Directory:
    """Who can be addressed: agent degrees in the system and community rosters."""

    agents: Mapping[str, float]
    communities: Mapping[str, tuple[str, ...]]


@dataclass(frozen=True)
class ProtocolError:
    tick: int
    agent: str
    reason: str
    msg_id: Optional[str] = None
    correlation: Optional[str] = None


@dataclass(frozen=True)
class Delivery:
    receiver: str
    act: CommunicationAct


@dataclass
class DeliveryReport:
    deliveries: list[Delivery] = field(default_factory=list)
    errors: list[ProtocolError] = field(default_factory=list)


class CorrelationIds:
    """Injective id source for messages and conversations."""

    def __init__(self, prefix: str = "c"):
        self._prefix = prefix
        self._counter = itertools.count(1)

    def __next__(self) -> str:
        return f"{self._prefix}{next(self._counter)}"


def dispatch(act: CommunicationAct, directory: Directory) -> DeliveryReport:
    """Address an act: one copy for a named receiver, one per community member for a diffuse.

    The sender never receives its own diffuse. Each copy carries the
    receiver's degree. Unknown targets produce error records instead.
    """
    report = DeliveryReport()
    if act.performative is Performative.DIFFUSE:
        members = directory.communities.get(act.community)
        if members is None:
            report.errors.append(ProtocolError(act.tick, act.source, f"unknown community {act.community!r}", act.msg_id))
            return report
        for i, member in enumerate(m for m in members if m != act.source):
            copy = replace(act, receiver=member, receiver_degree=directory.agents[member],
                           msg_id=f"{act.msg_id}.{i}" if act.msg_id else None)
            report.deliveries.append(Delivery(member, copy))
        return report
    if act.receiver not in directory.agents:
        report.errors.append(ProtocolError(act.tick, act.source, f"unknown receiver {act.receiver!r}", act.msg_id))
        return report
    report.deliveries.append(Delivery(act.receiver, replace(act, receiver_degree=directory.agents[act.receiver])))
    return report


# --------------------------------------------------------------------------
# obligations
# --------------------------------------------------------------------------

_REQUIRED_RESPONSE = {Performative.ASK: Performative.REPLY, Performative.INFORM: Performative.CONFIRM}


@dataclass(frozen=True)
class Obligation:
    correlation: str
    obligated: str
    creditor: str
    required: Performative
    opened: int
    deadline: int


class ObligationTable:
    """Open response obligations keyed by correlation id.

    An ask always obliges the receiver to reply; an inform obliges a confirm
    only when it is flagged ``ack_required``.
    """

    def __init__(self, timeout: int = DEFAULT_TIMEOUT):
        if timeout < 0:
            raise ValueError("timeout must be non-negative")
        self.timeout = timeout
        self.open: dict[str, Obligation] = {}
        self.settled: list[Obligation] = []
        self.violated: list[Obligation] = []

    def open_obligation(self, act: CommunicationAct) -> Optional[Obligation]:
        required = _REQUIRED_RESPONSE.get(act.performative)
        if required is None or (act.performative is Performative.INFORM and not act.ack_required):
            return None
        if act.correlation is None:
            raise ValueError("an obligation needs a correlation id")
        if act.correlation in self.open:
            raise ValueError(f"correlation {act.correlation!r} already has an open obligation")
        ob = Obligation(act.correlation, act.receiver, act.source, required, act.tick, act.tick + self.timeout)
        self.open[act.correlation] = ob
        return ob

    def settle_obligation(self, act: CommunicationAct) -> Obligation:
        """Close the obligation answered by a reply or confirm; raise ProtocolViolation otherwise."""
        ob = self.open.get(act.correlation) if act.correlation is not None else None
        if ob is None:
            raise ProtocolViolation(f"unsolicited {act.performative.value} (correlation {act.correlation!r})")
        if ob.required is not act.performative or ob.obligated != act.source or ob.creditor != act.receiver:
            raise ProtocolViolation(
                f"{act.performative.value} from {act.source!r} does not answer obligation {ob.correlation!r}"
            )
        del self.open[act.correlation]
        self.settled.append(ob)
        return ob

    def expire(self, tick: int) -> list[Obligation]:
        expired = [ob for ob in self.open.values() if tick > ob.deadline]
        for ob in expired:
            del self.open[ob.correlation]
            self.violated.append(ob)
        return expired


class ProtocolViolation(Exception):
    pass


__all__.append("ProtocolViolation")
