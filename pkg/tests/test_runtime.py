import json

import pytest

from fuzzyagents.agent import ActionSpec, Condition, DecisionRule, EventKind, EventPattern, FuzzyAgent
from fuzzyagents.protocol import CommunicationAct, Message, Performative
from fuzzyagents.runtime import Injection, Runtime, Scenario, ScenarioError, TimerEvent
from fuzzyagents.trace import Trace, export_trace, read_trace
from fuzzyagents.watering import build_watering_system, run_scenario

from helpers import QUESTION, drain, random_conversation, responsive_agent, responsive_society, two_communities


def kinds(trace, tick=None):
    return [r.kind for r in trace if tick is None or r.tick == tick]


class TestScenario:
    def test_round_trip(self, scenario, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(scenario.to_dict()))
        assert Scenario.load(path) == scenario

    def test_unsorted(self):
        with pytest.raises(ScenarioError):
            Scenario("x", (Injection(2, "a", 1.0), Injection(1, "a", 1.0)), 3)

    def test_horizon_before_last_event(self):
        with pytest.raises(ScenarioError):
            Scenario("x", (Injection(5, "a", 1.0),), 3)

    def test_timer_entries(self):
        s = Scenario.from_dict({"name": "t", "max_ticks": 2, "schedule": [{"tick": 1, "agent": "a", "timer": "go"}]})
        assert s.schedule == (TimerEvent(1, "a", "go"),)

    def test_unknown_variable(self):
        with pytest.raises(ScenarioError):
            Runtime(variables=["x"]).inject("y", 1.0)


class TestTick:
    def test_messages_arrive_next_tick(self):
        rt = Runtime([responsive_agent("a"), responsive_agent("b")])
        rt.post(CommunicationAct(Performative.ASK, "a", "b", QUESTION, Message("question")))
        rt.step()
        assert "message-delivered" not in kinds(rt.trace, 0)
        rt.step()
        assert kinds(rt.trace, 1)[:2] == ["tick", "message-delivered"]
        assert rt.trace.of_kind("obligation-settled")[0].tick == 1

    def test_phase_order_within_a_tick(self, system, scenario):
        trace = system.runtime.run(scenario)
        # percepts and firings are grouped per agent inside the stepping phase
        phase = {"tick": 0, "injection": 1, "timer": 1, "message-delivered": 2, "percept": 3, "rule-fired": 3,
                 "message-sent": 4, "obligation-opened": 4, "obligation-settled": 4, "env-effect": 5,
                 "role-update": 6, "obligation-timeout": 7}
        for t in range(scenario.max_ticks + 1):
            seen = [k for k in kinds(trace, t) if k != "error"]
            ranks = [phase[k] for k in seen]
            assert ranks == sorted(ranks), (t, seen)

    def test_sequence_numbers(self, system, scenario):
        trace = system.runtime.run(scenario)
        assert [r.seq for r in trace] == list(range(len(trace)))

    def test_last_writer_wins(self):
        def setter(aid, value):
            return FuzzyAgent(aid, rules=[DecisionRule("set", EventPattern(EventKind.TIMER), Condition(),
                                                       (ActionSpec("env", {"variable": "x", "value": value}),))])

        rt = Runtime([setter("a", 1.0), setter("b", 2.0)], variables=["x"])
        rt.schedule_timer("a", "go", 0)
        rt.schedule_timer("b", "go", 0)
        rt.step()
        effects = rt.trace.of_kind("env-effect")
        assert rt.environment["x"] == 2.0
        assert effects[1].detail["overwrites"] == "a"

    def test_unsolicited_reply_is_not_delivered(self):
        rt = Runtime([responsive_agent("a"), responsive_agent("b")])
        rt.post(CommunicationAct(Performative.REPLY, "a", "b", correlation="nope"))
        rt.step()
        rt.step()
        assert rt.trace.of_kind("error") and not rt.trace.of_kind("message-delivered")

    def test_unanswered_ask_times_out(self):
        rt = Runtime([FuzzyAgent("a"), FuzzyAgent("b")], timeout=2)
        rt.post(CommunicationAct(Performative.ASK, "a", "b", QUESTION))
        for _ in range(4):
            rt.step()
        (timeout,) = rt.trace.of_kind("obligation-timeout")
        assert timeout.tick == 3 and timeout.agent == "b"
        assert not rt.obligations.open

    def test_unknown_receiver_is_traced(self):
        rt = Runtime([FuzzyAgent("a")])
        rt.post(CommunicationAct(Performative.INFORM, "a", "ghost"))
        rt.step()
        assert rt.trace.of_kind("error")[0].detail["reason"].startswith("unknown receiver")

    def test_diffuse_reaches_community_minus_sender(self):
        org = two_communities()
        rt = Runtime([FuzzyAgent(a, community="A") for a in "xyz"], org)
        rt.post(CommunicationAct(Performative.DIFFUSE, "x", community="A"))
        rt.step()
        rt.step()
        assert sorted(r.agent for r in rt.trace.of_kind("message-delivered")) == ["y", "z"]

    def test_duplicate_registration(self):
        rt = Runtime([FuzzyAgent("a")])
        with pytest.raises(ValueError):
            rt.register(FuzzyAgent("a"))


class TestOrganizationInRuntime:
    def test_cross_community_message_grants_role(self):
        rt = Runtime([responsive_agent("x", community="A"), responsive_agent("y", community="B")], two_communities())
        rt.post(CommunicationAct(Performative.INFORM, "x", "y", content=Message(degree=0.4)))
        rt.step()
        assert rt.organization.degree("x", "b_main") == 0.4
        assert rt.agents["x"].roles["b_main"] == 0.4

    def test_roles_decay_each_tick(self):
        rt = Runtime([responsive_agent("x", community="A"), responsive_agent("y", community="B")],
                     two_communities(decay=0.5))
        rt.post(CommunicationAct(Performative.INFORM, "x", "y", content=Message(degree=0.8)))
        rt.step()
        rt.step()
        assert rt.organization.degree("x", "b_main") == 0.4
        assert rt.organization.degree("x", "a_main") == 1.0


class TestTraceFiles:
    @pytest.mark.parametrize("fmt", ["csv", "jsonl"])
    def test_round_trip(self, system, scenario, fmt):
        _, trace = run_scenario(system, scenario)
        data = export_trace(trace, fmt)
        again = read_trace(data, fmt)
        assert again.records == trace.records
        assert export_trace(again, fmt) == data

    def test_csv_header(self, system, scenario):
        _, trace = run_scenario(system, scenario)
        assert export_trace(trace).splitlines()[0] == b"tick,seq,kind,agent,detail,degree"

    def test_bad_format(self):
        with pytest.raises(ValueError):
            export_trace(Trace(), "xml")

    def test_ticks_must_not_go_back(self):
        t = Trace()
        t.append(2, "tick")
        with pytest.raises(ValueError):
            t.append(1, "tick")


class TestCausality:
    def test_every_delivery_was_sent_earlier(self):
        rt = responsive_society(6, seed=3)
        random_conversation(rt, seed=3, n_messages=40, ticks=8)
        drain(rt)
        sent = {r.detail["id"]: r.tick for r in rt.trace.of_kind("message-sent")}
        for r in rt.trace.of_kind("message-delivered"):
            assert sent[r.detail["id"]] < r.tick

    def test_message_conservation(self):
        rt = responsive_society(6, seed=5)
        random_conversation(rt, seed=5, n_messages=40, ticks=8)
        drain(rt)
        errors = {r.detail.get("id") for r in rt.trace.of_kind("error")}
        sent = [r.detail["id"] for r in rt.trace.of_kind("message-sent") if r.detail["id"] not in errors]
        delivered = [r.detail["id"] for r in rt.trace.of_kind("message-delivered")]
        assert sorted(sent) == sorted(delivered)

    def test_parallel_matches_serial(self):
        traces = []
        for parallel in (False, True):
            rt = responsive_society(8, seed=11, parallel=parallel, decay=0.9)
            random_conversation(rt, seed=11, n_messages=60, ticks=10)
            drain(rt)
            traces.append(export_trace(rt.trace))
        assert traces[0] == traces[1]

    def test_watering_parallel_matches_serial(self, cfg, scenario):
        serial = run_scenario(build_watering_system(cfg), scenario)[1]
        parallel = run_scenario(build_watering_system(cfg, parallel=True), scenario)[1]
        assert export_trace(serial) == export_trace(parallel)
