"""Fuzzy agents: a discrete fuzzy inference core and a deterministic agent runtime."""
from .fuzzy import (
    DiscreteFuzzySet,
    EmptyAggregateError,
    FuzzyRelation,
    FuzzyRule,
    FuzzySubset,
    LinguisticVariable,
    MembershipFunction,
    Modifier,
    Universe,
    infer_mamdani,
)
from .agent import DecisionRule, FuzzyAgent, KnowledgeBase
from .protocol import CommunicationAct, Message, Performative, value_of
from .organization import OrganizationState
from .runtime import Runtime, Scenario
from .config import SystemConfig, load_config, save_config
from .estimator import FuzzyInferenceRegressor, MembershipTransformer

__all__ = [
    "DiscreteFuzzySet",
    "EmptyAggregateError",
    "FuzzyRelation",
    "FuzzyRule",
    "FuzzySubset",
    "LinguisticVariable",
    "MembershipFunction",
    "Modifier",
    "Universe",
    "infer_mamdani",
    "DecisionRule",
    "FuzzyAgent",
    "KnowledgeBase",
    "CommunicationAct",
    "Message",
    "Performative",
    "value_of",
    "OrganizationState",
    "Runtime",
    "Scenario",
    "SystemConfig",
    "load_config",
    "save_config",
    "FuzzyInferenceRegressor",
    "MembershipTransformer",
]

__version__ = "0.1.0"
