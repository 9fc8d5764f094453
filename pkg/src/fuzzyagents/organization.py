"""Fuzzy roles and communities.

Every agent has one reference community and plays that community's main
role. Talking to an agent of another community pulls the speaker into the
listener's main role, by at most the value of the exchange.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .fuzzy import check_degree

__all__ = ["Role", "RoleAssignment", "Community", "OrganizationState", "OrganizationError"]


class OrganizationError(ValueError):
    pass


@dataclass(frozen=True)
class Role:
    role_id: str
    description: str = ""


@dataclass(frozen=True)
class RoleAssignment:
    agent: str
    role: str
    degree: float

    def __post_init__(self):
        check_degree(self.degree, "role degree")


@dataclass
class Community:
    community_id: str
    main_role: str
    objective: str = ""
    members: list[str] = field(default_factory=list)


class OrganizationState:
    """Roles, communities and the agents' fuzzy role degrees.

    ``decay`` is the per-tick multiplicative factor applied to every role an
    agent plays outside its main role; 1.0 disables decay.
    """

    def __init__(
        self,
        roles: Iterable[Role] = (),
        communities: Iterable[Community] = (),
        activation_threshold: float = 0.5,
        decay: float = 0.95,
        initial_main_degree: float = 1.0,
    ):
        self.roles: dict[str, Role] = {}
        for r in roles:
            self.add_role(r)
        self.communities: dict[str, Community] = {}
        for c in communities:
            self.add_community(c)
        self.activation_threshold = check_degree(activation_threshold, "activation threshold")
        if not 0.0 < decay <= 1.0:
            raise OrganizationError("decay must lie in (0, 1]")
        self.decay = float(decay)
        self.initial_main_degree = check_degree(initial_main_degree, "initial main-role degree")
        if self.initial_main_degree <= 0.0:
            raise OrganizationError("the initial main-role degree must be positive")
        # agent -> role -> degree, in insertion order
        self.assignments: dict[str, dict[str, float]] = {}
        self.reference: dict[str, str] = {}

    def add_role(self, role: Role) -> None:
        if role.role_id in self.roles:
            raise OrganizationError(f"duplicate role {role.role_id!r}")
        self.roles[role.role_id] = role

    def add_community(self, community: Community) -> None:
        if community.community_id in self.communities:
            raise OrganizationError(f"duplicate community {community.community_id!r}")
        if community.main_role not in self.roles:
            raise OrganizationError(
                f"community {community.community_id!r} has unregistered main role {community.main_role!r}"
            )
        self.communities[community.community_id] = Community(
            community.community_id, community.main_role, community.objective, []
        )
        for member in community.members:
            self.register_agent(member, community.community_id)

    # ----------------------------------------------------------------------

    def register_agent(self, agent: str, community: str) -> None:
        """Add ``agent`` to ``community``.

        The first registration fixes the agent's reference community and gives
        it that community's main role. Later registrations only add
        memberships.
        """
        if community not in self.communities:
            raise OrganizationError(f"unknown community {community!r}")
        c = self.communities[community]
        if agent in c.members:
            raise OrganizationError(f"{agent!r} is already a member of {community!r}")
        c.members.append(agent)
        if agent not in self.reference:
            self.reference[agent] = community
            roles = self.assignments.setdefault(agent, {})
            roles[c.main_role] = max(roles.get(c.main_role, 0.0), self.initial_main_degree)

    def reference_community(self, agent: str) -> Community:
        return self.communities[self.reference[agent]]

    def main_role(self, agent: str) -> str:
        return self.reference_community(agent).main_role

    def degree(self, agent: str, role: str) -> float:
        return self.assignments.get(agent, {}).get(role, 0.0)

    def roles_of(self, agent: str) -> dict[str, float]:
        return dict(self.assignments.get(agent, {}))

    def set_degree(self, agent: str, role: str, degree: float) -> None:
        if role not in self.roles:
            raise OrganizationError(f"unknown role {role!r}")
        if agent not in self.reference:
            raise OrganizationError(f"unregistered agent {agent!r}")
        self.assignments[agent][role] = check_degree(degree, "role degree")

    def active_roles(self, agent: str, threshold: Optional[float] = None) -> set[str]:
        """Roles played at or above ``threshold``; a zero threshold means strictly positive."""
        threshold = self.activation_threshold if threshold is None else check_degree(threshold, "threshold")
        return {
            role
            for role, d in self.assignments.get(agent, {}).items()
            if d >= threshold and d > 0.0
        }

    def propagate_role(self, source: str, target: str, value: float) -> Optional[RoleAssignment]:
        """Pull ``source`` into ``target``'s main role after an exchange of the given value.

        New degree is ``max(old, min(value, target's main-role degree))``;
        returns the updated assignment, or None when the agents share a
        reference community or nothing changed.
        """
        value = check_degree(value, "interaction value")
        if self.reference[source] == self.reference[target]:
            return None
        role = self.main_role(target)
        old = self.degree(source, role)
        new = max(old, min(value, self.degree(target, role)))
        if new == old:
            return None
        self.assignments[source][role] = new
        return RoleAssignment(source, role, new)

    def decay_roles(self, dt: int = 1) -> list[RoleAssignment]:
        """Fade every role an agent plays outside its main role; return the changed assignments."""
        if dt < 0:
            raise OrganizationError("dt must be non-negative")
        factor = self.decay ** dt
        changed = []
        for agent, roles in self.assignments.items():
            main = self.main_role(agent)
            for role, d in roles.items():
                if role == main:
                    new = max(d, self.initial_main_degree)
                else:
                    new = d * factor
                if new != d:
                    roles[role] = new
                    changed.append(RoleAssignment(agent, role, new))
        return changed

    def check_invariants(self) -> None:
        """Every registered agent has one reference community and a positive main-role degree."""
        for agent, community in self.reference.items():
            c = self.communities[community]
            if agent not in c.members:
                raise OrganizationError(f"{agent!r} is not a member of its reference community")
            if self.degree(agent, c.main_role) <= 0.0:
                raise OrganizationError(f"{agent!r} does not play the main role of {community!r}")
        for agent, roles in self.assignments.items():
            for role, d in roles.items():
                if not 0.0 <= d <= 1.0:
                    raise OrganizationError(f"degree of {agent!r} in {role!r} out of range: {d}")

    # ----------------------------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "activation_threshold": self.activation_threshold,
            "decay": self.decay,
            "initial_main_degree": self.initial_main_degree,
            "roles": [{"id": r.role_id, "description": r.description} for r in self.roles.values()],
            "communities": [
                {"id": c.community_id, "main_role": c.main_role, "objective": c.objective, "members": list(c.members)}
                for c in self.communities.values()
            ],
            "assignments": [
                {"agent": agent, "role": role, "degree": d, "community": self.reference[agent]}
                for agent, roles in self.assignments.items()
                for role, d in roles.items()
            ],
        }

    @classmethod
    def from_snapshot(cls, data: Mapping) -> "OrganizationState":
        org = cls(
            [Role(r["id"], r.get("description", "")) for r in data.get("roles", [])],
            activation_threshold=data.get("activation_threshold", 0.5),
            decay=data.get("decay", 0.95),
            initial_main_degree=data.get("initial_main_degree", 1.0),
        )
        reference = {a["agent"]: a["community"] for a in data.get("assignments", [])}
        for c in data.get("communities", []):
            org.communities[c["id"]] = Community(c["id"], c["main_role"], c.get("objective", ""), list(c["members"]))
        org.reference = {agent: community for agent, community in reference.items()}
        for a in data.get("assignments", []):
            org.assignments.setdefault(a["agent"], {})[a["role"]] = a["degree"]
        return org
