"""Small agent societies shared by the runtime and acceptance tests."""
import random

from fuzzyagents.agent import ActionSpec, Condition, DecisionRule, EventKind, EventPattern, FuzzyAgent
from fuzzyagents.organization import Community, OrganizationState, Role
from fuzzyagents.protocol import DEFAULT_MESSAGE_TYPES, CommunicationAct, Message, Performative
from fuzzyagents.runtime import Runtime

QUESTION = DEFAULT_MESSAGE_TYPES[2]
VALUE = DEFAULT_MESSAGE_TYPES[1]

ANSWER_ASK = DecisionRule(
    "answer",
    EventPattern(EventKind.MESSAGE, Performative.ASK),
    Condition(),
    (ActionSpec("send", {"performative": "reply", "to": "$sender", "content": "$content"}),),
)
CONFIRM_INFORM = DecisionRule(
    "acknowledge",
    EventPattern(EventKind.MESSAGE, Performative.INFORM),
    Condition(),
    (ActionSpec("send", {"performative": "confirm", "to": "$sender"}),),
)


def responsive_agent(agent_id, membership=1.0, community=None):
    return FuzzyAgent(agent_id, membership=membership, rules=[ANSWER_ASK, CONFIRM_INFORM], community=community)


def two_communities(decay=1.0):
    return OrganizationState(
        [Role("a_main"), Role("b_main")],
        [Community("A", "a_main"), Community("B", "b_main")],
        decay=decay,
    )


def responsive_society(n_agents, seed, parallel=False, decay=1.0):
    rng = random.Random(seed)
    org = two_communities(decay)
    agents = [
        responsive_agent(f"agent{i}", round(rng.uniform(0.1, 1.0), 3), "A" if i % 2 else "B")
        for i in range(n_agents)
    ]
    return Runtime(agents, org, parallel=parallel)


def random_conversation(runtime, seed, n_messages, ticks):
    """Post asks and ack-requesting informs between random pairs over the first ``ticks`` ticks.

    Returns the number of asks posted.
    """
    rng = random.Random(seed)
    ids = list(runtime.agents)
    plan = {}
    for _ in range(n_messages):
        plan.setdefault(rng.randrange(ticks), []).append(rng.sample(ids, 2) + [rng.random() < 0.6, rng.random()])
    asks = 0
    for t in range(ticks):
        for source, receiver, is_ask, degree in plan.get(t, []):
            if is_ask:
                asks += 1
                act = CommunicationAct(Performative.ASK, source, receiver, QUESTION, Message("question", "status?", degree))
            else:
                act = CommunicationAct(Performative.INFORM, source, receiver, VALUE,
                                       Message("assertion", "ok", degree), ack_required=True)
            runtime.post(act)
        runtime.step()
        runtime.organization.check_invariants()
    return asks


def drain(runtime, ticks=3):
    for _ in range(ticks):
        runtime.step()
        runtime.organization.check_invariants()
