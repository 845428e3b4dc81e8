"""Grid universes, entity records, the dynamic signature and initial state."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Union

from .asm import (BOOL, INT, GridState, Location, Signature, element, keyword)

if TYPE_CHECKING:
    from .scenario import Scenario

UNIVERSES = (
    "USER", "JOB", "PROCESS", "TASK", "HOST", "PRESOURCE", "ARESOURCE",
    "REQUIREMENT", "PROPERTY", "BROKER", "LOCATION",
)

JOB_STATES = ("submitted", "waiting", "running", "done", "failed")
TERMINAL = frozenset({"done", "failed"})
PROC_STATES = ("running", "waiting")
EVENTS = ("start", "abort", "terminate")
STALL_STAGES = ("broker", "broker-auth", "host", "host-auth", "resource", "resource-auth")
FAIL_REASONS = ("unsatisfiable", "aborted")

DIRECT = "direct"
HANDLED = "handled"


class InitializationError(ValueError):
    """The scenario violates an initial-state clause."""

    def __init__(self, clause: str, detail: str):
        self.clause = clause
        super().__init__(f"initial state clause '{clause}' violated: {detail}")


@dataclass(frozen=True)
class Attr:
    """Tagged attribute: a keyword (string) or a capacity (non-negative real with unit)."""

    kind: str
    key: str
    value: Union[str, float]
    unit: str = ""

    def __post_init__(self) -> None:
        if self.kind == "keyword":
            if not isinstance(self.value, str) or not self.value:
                raise ValueError(f"keyword attr {self.key!r} needs a non-empty value")
        elif self.kind == "capacity":
            if isinstance(self.value, bool) or not isinstance(self.value, (int, float)):
                raise ValueError(f"capacity attr {self.key!r} needs a number")
            if self.value < 0:
                raise ValueError(f"capacity attr {self.key!r} must be >= 0")
            object.__setattr__(self, "value", float(self.value))
        else:
            raise ValueError(f"unknown attr kind {self.kind!r}")

    @classmethod
    def kw(cls, key: str, value: str) -> Attr:
        return cls("keyword", key, value)

    @classmethod
    def cap(cls, key: str, value: float, unit: str = "") -> Attr:
        return cls("capacity", key, value, unit)


def compatible_keyword(required: Attr, offered: Attr) -> bool:
    if required.kind != "keyword" or offered.kind != "keyword":
        raise TypeError("compatible_keyword needs two keyword attrs")
    return required.key == offered.key and required.value == offered.value


def compatible_capacity(required: Attr, offered: Attr) -> bool:
    if required.kind != "capacity" or offered.kind != "capacity":
        raise TypeError("compatible_capacity needs two capacity attrs")
    if required.key != offered.key or required.unit != offered.unit:
        raise TypeError(
            f"cannot compare {required.key}[{required.unit}] with "
            f"{offered.key}[{offered.unit}]"
        )
    return offered.value >= required.value


def compatible(required: Attr, offered: Attr) -> bool:
    """Total compatibility: False on any kind, key or unit mismatch."""
    if required.kind != offered.kind or required.key != offered.key:
        return False
    if required.kind == "keyword":
        return compatible_keyword(required, offered)
    if required.unit != offered.unit:
        return False
    return compatible_capacity(required, offered)


@dataclass(frozen=True)
class User:
    id: str
    can_login: tuple = ()
    can_use: tuple = ()
    local_ids: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Job:
    id: str
    owner: str
    requirements: tuple = ()
    processes: tuple = ()
    host: str | None = None


@dataclass(frozen=True)
class Process:
    id: str
    parent_job: str | None
    requests: tuple = ()
    task: str | None = None


@dataclass(frozen=True)
class Task:
    id: str
    of_process: str


@dataclass(frozen=True)
class PhysicalResource:
    id: str
    host: str
    attr: Attr
    type_tag: str = DIRECT
    grid_location: str = ""

    @property
    def location(self) -> str:
        return self.grid_location or self.host


@dataclass(frozen=True)
class AbstractResource:
    id: str
    attr: Attr


@dataclass(frozen=True)
class Host:
    id: str
    resources: tuple = ()
    managed_by: tuple = ()


@dataclass(frozen=True)
class Broker:
    id: str
    properties: tuple = ()
    hosts: tuple = ()
    perf: float | None = None  # None: dynamic

    @property
    def dynamic(self) -> bool:
        return self.perf is None


@dataclass(frozen=True)
class Requirement:
    id: str
    attr: Attr
    role: str  # broker-property | abstract-resource | policy


@dataclass(frozen=True)
class Property:
    id: str
    attr: Attr
    role: str = "broker-property"  # or physical-resource


def grid_signature() -> Signature:
    sig = Signature()
    for name in UNIVERSES:
        sig.declare_universe(name)
    sig.declare("jobState", 1, keyword(*JOB_STATES))
    sig.declare("procState", 1, keyword(*PROC_STATES))
    sig.declare("mapped", 1, element("LOCATION"))
    sig.declare("task", 1, element("TASK"))
    sig.declare("installed", 2, BOOL)
    sig.declare("uses", 2, BOOL)
    sig.declare("procRequest", 2, BOOL)
    sig.declare("mappedResource", 2, element("PRESOURCE"))
    sig.declare("mappedHost", 1, element("HOST"))
    sig.declare("mappedBroker", 1, element("BROKER"))
    sig.declare("submitted", 2, BOOL)
    sig.declare("handler", 1, element("PROCESS"))
    sig.declare("event", 1, keyword(*EVENTS))
    sig.declare("occupant", 1, element("PROCESS"))
    sig.declare("queuedAt", 2, INT)
    sig.declare("stall", 1, INT)
    sig.declare("stallReason", 1, keyword(*STALL_STAGES))
    sig.declare("failReason", 1, keyword(*FAIL_REASONS))
    return sig


SIGNATURE = grid_signature()


def task_id(process_id: str) -> str:
    return f"{process_id}:task"


class Grid:
    """Static (load-time) functions of the grid, indexed for rule bodies.

    Everything here is fixed after scenario load; mutable facts live in
    :class:`GridState` locations.
    """

    def __init__(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.config = scenario.config
        self.users = scenario.users
        self.brokers = scenario.brokers
        self.hosts = scenario.hosts
        self.resources = scenario.resources
        self.jobs = scenario.jobs
        self.processes = scenario.processes
        self.policies = scenario.policies

        self.job_ids = sorted(scenario.jobs)
        self.host_ids = sorted(scenario.hosts)
        self.broker_ids = sorted(scenario.brokers)
        self.resource_ids = sorted(scenario.resources)

        self._attrs: dict[str, Attr] = {}
        for table in (scenario.resources, scenario.abstract_resources,
                      scenario.requirements, scenario.properties):
            for key, rec in table.items():
                self._attrs[key] = rec.attr

        self.host_resources = {h: tuple(sorted(rec.resources))
                               for h, rec in scenario.hosts.items()}
        self.job_processes = {j: tuple(sorted(rec.processes))
                              for j, rec in scenario.jobs.items()}
        self.proc_requests = {p: tuple(sorted(rec.requests))
                              for p, rec in scenario.processes.items()}
        self.job_requests = {
            j: tuple((p, ar) for p in self.job_processes[j] for ar in self.proc_requests[p])
            for j in self.job_ids
        }
        self.job_broker_reqs = {
            j: tuple(scenario.requirements[r] for r in rec.requirements
                     if r in scenario.requirements
                     and scenario.requirements[r].role == "broker-property")
            for j, rec in scenario.jobs.items()
        }
        self.job_policy = {}
        for j, rec in scenario.jobs.items():
            pol = [scenario.requirements[r] for r in rec.requirements
                   if r in scenario.requirements and scenario.requirements[r].role == "policy"]
            self.job_policy[j] = scenario.policies[pol[0].attr.value] if pol else None
        self.broker_hosts = {b: tuple(sorted(rec.hosts)) for b, rec in scenario.brokers.items()}
        self.broker_props = {b: tuple(scenario.properties[p] for p in rec.properties)
                             for b, rec in scenario.brokers.items()}
        self._can_use = {u: frozenset(rec.can_use) for u, rec in scenario.users.items()}
        self._manages = {(h, b) for b, rec in scenario.brokers.items() for h in rec.hosts}
        # resources a process could ever be mapped to (static compatibility)
        self.proc_resources = {}
        self.resource_claimants: dict[str, list[str]] = {pr: [] for pr in scenario.resources}
        for p, ars in self.proc_requests.items():
            found = set()
            for ar in ars:
                for pr, res in scenario.resources.items():
                    if compatible(self._attrs[ar], res.attr):
                        found.add(pr)
            self.proc_resources[p] = tuple(sorted(found))
            for pr in found:
                self.resource_claimants[pr].append(p)
        for pr in self.resource_claimants:
            self.resource_claimants[pr].sort()
        self.faults_at: dict[int, list] = {}
        for f in scenario.faults:
            self.faults_at.setdefault(f.at, []).append(f)

    def attr(self, ident: str) -> Attr:
        return self._attrs[ident]

    def job_of(self, p: str) -> str | None:
        rec = self.processes.get(p)
        return rec.parent_job if rec else None

    def user_of(self, j: str) -> str:
        return self.jobs[j].owner

    def task_of(self, p: str) -> str:
        return task_id(p)

    def belongs_to(self, pr: str, h: str) -> bool:
        return self.resources[pr].host == h

    def location(self, pr: str) -> str:
        return self.resources[pr].location

    def rtype(self, pr: str) -> str:
        return self.resources[pr].type_tag

    def can_use(self, u: str, pr: str) -> bool:
        return pr in self._can_use.get(u, ())

    def can_login(self, u: str, h: str) -> bool:
        return h in self.users[u].can_login

    def local_user(self, u: str, h: str) -> str | None:
        return self.users[u].local_ids.get(h)

    def manages(self, h: str, b: str) -> bool:
        return (h, b) in self._manages

    def have(self, b: str, prop: str) -> bool:
        return prop in self.brokers[b].properties

    def request(self, j: str, r: str) -> bool:
        return r in self.jobs[j].requirements


def init_state(scenario: Scenario) -> GridState:
    """Load every entity into its universe and set the initial interpretation.

    Raises :class:`InitializationError` naming the first violated clause.
    """
    for j, job in scenario.jobs.items():
        if not job.processes:
            raise InitializationError("exists p: job(p) = j", f"job {j} has no process")
        if not job.requirements:
            raise InitializationError("exists r: request(j, r) = true",
                                      f"job {j} has no requirement")
        if job.owner not in scenario.users:
            raise InitializationError("user(p) in USER", f"job {j} has unknown owner")
    for p, proc in scenario.processes.items():
        if not proc.requests:
            raise InitializationError("exists ar: procRequest(p, ar) = true",
                                      f"process {p} requests nothing")
    for u, user in scenario.users.items():
        if not user.can_use:
            raise InitializationError("exists pr: canUse(u, pr) = true",
                                      f"user {u} can use no resource")

    interp: dict[Location, object] = {}

    def member(universe: str, ident: str) -> None:
        interp[Location(universe, (ident,))] = True

    for u in scenario.users:
        member("USER", u)
    for b in scenario.brokers:
        member("BROKER", b)
    for h in scenario.hosts:
        member("HOST", h)
    for pr, res in scenario.resources.items():
        member("PRESOURCE", pr)
        member("PROPERTY", pr)
        member("LOCATION", res.location)
    for prop in scenario.properties:
        member("PROPERTY", prop)
    for ar in scenario.abstract_resources:
        member("ARESOURCE", ar)
        member("REQUIREMENT", ar)
    for r in scenario.requirements:
        member("REQUIREMENT", r)
    for j in scenario.jobs:
        member("JOB", j)
    for p, proc in scenario.processes.items():
        member("PROCESS", p)
        member("TASK", task_id(p))
        for ar in proc.requests:
            interp[Location("procRequest", (p, ar))] = True
        for pr in scenario.resources:
            interp[Location("uses", (p, pr))] = False
    return GridState(SIGNATURE, interp)


def check_structure(state: GridState) -> list[str]:
    """Subset invariants ARESOURCE <= REQUIREMENT and PRESOURCE <= PROPERTY."""
    problems = []
    missing = state.universe("ARESOURCE") - state.universe("REQUIREMENT")
    if missing:
        problems.append(f"ARESOURCE not within REQUIREMENT: {sorted(missing)}")
    missing = state.universe("PRESOURCE") - state.universe("PROPERTY")
    if missing:
        problems.append(f"PRESOURCE not within PROPERTY: {sorted(missing)}")
    return problems
