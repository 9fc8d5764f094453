import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzyagents.protocol import (
    DEFAULT_MESSAGE_TYPES,
    CommunicationAct,
    CooperationCategory,
    CorrelationIds,
    Directory,
    Interaction,
    Message,
    MessageTypeTable,
    ObligationTable,
    Performative,
    ProtocolViolation,
    dispatch,
    evaluate_interest,
    value_of,
)

unit = st.floats(0.0, 1.0)


def act(performative="inform", source="a", receiver="b", **kw):
    return CommunicationAct(Performative(performative), source, receiver, **kw)


class TestValuation:
    def test_minimum_of_components(self):
        a = act(source_degree=0.7, receiver_degree=0.6, mtype_degree=1.0, content=Message(degree=0.4))
        assert value_of(a) == 0.4
        assert a.value == 0.4

    def test_all_full(self):
        assert value_of(act()) == 1.0

    @given(unit, unit, unit, unit)
    def test_bounded_by_each_component(self, s, r, t, c):
        a = act(source_degree=s, receiver_degree=r, mtype_degree=t, content=Message(degree=c))
        v = value_of(a)
        assert v == min(s, r, t, c)
        assert 0.0 <= v <= 1.0

    def test_degree_out_of_range(self):
        with pytest.raises(ValueError):
            act(source_degree=1.2)
        with pytest.raises(ValueError):
            Message(degree=-0.1)

    def test_interest_is_capped_by_affinity(self):
        a = act(content=Message(degree=0.8))
        assert evaluate_interest(a, {"a": 0.3}) == 0.3
        assert evaluate_interest(a, {}) == 0.8


class TestMessageTypes:
    def test_resolution_by_code_and_meaning(self):
        table = MessageTypeTable()
        assert table.resolve(3).meaning == "question"
        assert table.resolve("value").code == 2
        assert "response" in table and 5 in table

    def test_unknown_type(self):
        with pytest.raises((KeyError, ValueError)):
            MessageTypeTable().resolve(99)


class TestAddressing:
    def test_diffuse_requires_community(self):
        with pytest.raises(ValueError):
            CommunicationAct(Performative.DIFFUSE, "a")

    def test_directed_requires_receiver(self):
        with pytest.raises(ValueError):
            CommunicationAct(Performative.ASK, "a")

    def test_interaction_needs_two_agents(self):
        with pytest.raises(ValueError):
            Interaction.from_act(act(receiver="a"))
        inter = Interaction.from_act(act(), goal="share")
        assert inter.cooperative_act.category is CooperationCategory.COMMUNICATION


class TestDispatch:
    directory = Directory({"a": 1.0, "b": 0.8, "c": 0.5}, {"all": ("a", "b", "c")})

    def test_directed_copy_carries_receiver_degree(self):
        report = dispatch(act(), self.directory)
        assert [d.receiver for d in report.deliveries] == ["b"]
        assert report.deliveries[0].act.receiver_degree == 0.8

    def test_diffuse_skips_sender(self):
        d = CommunicationAct(Performative.DIFFUSE, "a", community="all", msg_id="m1")
        report = dispatch(d, self.directory)
        assert [x.receiver for x in report.deliveries] == ["b", "c"]
        assert [x.act.msg_id for x in report.deliveries] == ["m1.0", "m1.1"]

    def test_unknown_receiver_is_an_error_not_an_exception(self):
        report = dispatch(act(receiver="ghost"), self.directory)
        assert not report.deliveries
        assert "ghost" in report.errors[0].reason

    def test_unknown_community(self):
        report = dispatch(CommunicationAct(Performative.DIFFUSE, "a", community="nowhere"), self.directory)
        assert report.errors and not report.deliveries


class TestObligations:
    def test_ids_are_unique(self):
        ids = CorrelationIds("c")
        seen = [next(ids) for _ in range(1000)]
        assert len(set(seen)) == 1000

    def test_ask_opens_reply_settles(self):
        table = ObligationTable(timeout=3)
        ob = table.open_obligation(act("ask", correlation="c1", tick=2))
        assert ob.obligated == "b" and ob.required is Performative.REPLY and ob.deadline == 5
        table.settle_obligation(act("reply", source="b", receiver="a", correlation="c1"))
        assert not table.open and len(table.settled) == 1

    def test_inform_obliges_only_with_ack(self):
        table = ObligationTable()
        assert table.open_obligation(act("inform", correlation="c1")) is None
        assert table.open_obligation(act("inform", correlation="c2", ack_required=True)).required is Performative.CONFIRM

    def test_unsolicited_reply(self):
        with pytest.raises(ProtocolViolation):
            ObligationTable().settle_obligation(act("reply", correlation="c9"))

    def test_wrong_responder(self):
        table = ObligationTable()
        table.open_obligation(act("ask", correlation="c1"))
        with pytest.raises(ProtocolViolation):
            table.settle_obligation(act("reply", source="c", receiver="a", correlation="c1"))
        with pytest.raises(ProtocolViolation):
            table.settle_obligation(act("confirm", source="b", receiver="a", correlation="c1"))

    def test_second_reply_is_unsolicited(self):
        table = ObligationTable()
        table.open_obligation(act("ask", correlation="c1"))
        reply = act("reply", source="b", receiver="a", correlation="c1")
        table.settle_obligation(reply)
        with pytest.raises(ProtocolViolation):
            table.settle_obligation(reply)

    def test_expiry_after_deadline(self):
        table = ObligationTable(timeout=2)
        table.open_obligation(act("ask", correlation="c1", tick=0))
        assert table.expire(2) == []
        assert [o.correlation for o in table.expire(3)] == ["c1"]
        assert table.violated and not table.open

    def test_duplicate_correlation(self):
        table = ObligationTable()
        table.open_obligation(act("ask", correlation="c1"))
        with pytest.raises(ValueError):
            table.open_obligation(act("ask", correlation="c1"))

    def test_default_types_cover_the_protocol(self):
        meanings = {t.meaning for t in DEFAULT_MESSAGE_TYPES}
        assert {"assertion", "value", "question", "response", "acknowledgement"} <= meanings
