"""Host selection and broker selection, base and refined matchmaking.

Refined broker matchmaking scores every broker by its performance and zeroes
brokers lacking an exact keyword match for some required property.  Refined
host matchmaking ranks hosts with the job's policy (a weighted sum of capacity
attributes) and zeroes hosts that cannot cover some requested capacity.  Both
pick the maximum score; a zero score is never selected, and ties go to the
choose policy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .asm import UNDEF, GridState, StepContext
from .model import TERMINAL, compatible, compatible_keyword

if TYPE_CHECKING:
    from .model import Grid

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RankPolicy:
    name: str
    weights: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScoreVector:
    subjects: tuple
    scores: tuple

    def best(self) -> list[str]:
        """Subjects tied at the maximum score; empty when every score is zero."""
        top = max(self.scores, default=0.0)
        if top <= 0:
            return []
        return [s for s, v in zip(self.subjects, self.scores) if v == top]


# -- shared predicates ---------------------------------------------------------

def candidate_hosts(state, grid: Grid, j: str) -> tuple:
    """Hosts the job's host mapping may consider: its broker's hosts, or all."""
    if grid.config.mode == "meta":
        b = _read(state, "mappedBroker", j)
        return grid.broker_hosts.get(b, ()) if b is not UNDEF else ()
    return tuple(grid.host_ids)


def host_covers(grid: Grid, j: str, h: str) -> bool:
    """Every requested abstract resource has a compatible resource on ``h``."""
    resources = grid.host_resources[h]
    return all(any(compatible(grid.attr(ar), grid.attr(pr)) for pr in resources)
               for _, ar in grid.job_requests[j])


def host_usable(grid: Grid, j: str, h: str) -> bool:
    """Host selection precondition: a compatible and usable resource for every request."""
    user = grid.user_of(j)
    resources = grid.host_resources[h]
    return all(any(compatible(grid.attr(ar), grid.attr(pr)) and grid.can_use(user, pr)
                   for pr in resources)
               for _, ar in grid.job_requests[j])


def broker_satisfies(grid: Grid, j: str, b: str) -> bool:
    props = grid.broker_props[b]
    return all(any(compatible(req.attr, prop.attr) for prop in props)
               for req in grid.job_broker_reqs[j])


def broker_usable(grid: Grid, j: str, b: str) -> bool:
    """Broker selection precondition: b manages a host with a resource the user may use."""
    user = grid.user_of(j)
    return any(grid.can_use(user, pr)
               for h in grid.broker_hosts[b] for pr in grid.host_resources[h])


def _read(state, function: str, *args):
    if isinstance(state, StepContext):
        return state.read(function, *args)
    return state.get(function, *args)


# -- scores ----------------------------------------------------------------------

def get_broker_perf(state, grid: Grid, b: str) -> float:
    """Static: the configured constant.  Dynamic: done / (done + failed) over jobs
    this broker submitted, 1.0 before any of them finished."""
    broker = grid.brokers[b]
    if broker.perf is not None:
        return float(broker.perf)
    done = failed = 0
    for j in grid.job_ids:
        if _read(state, "mappedBroker", j) != b or _read(state, "submitted", j, b) is not True:
            continue
        js = _read(state, "jobState", j)
        if js == "done":
            done += 1
        elif js == "failed":
            failed += 1
    return 1.0 if done + failed == 0 else done / (done + failed)


def count_rank(policy: RankPolicy, h: str, grid: Grid) -> float:
    """Weighted sum of the host's capacity attributes; keyword attrs count 0."""
    total = 0.0
    for pr in grid.host_resources[h]:
        attr = grid.attr(pr)
        if attr.kind == "capacity":
            total += policy.weights.get(attr.key, 0.0) * attr.value
    return total


def _keyword_match(req, prop) -> bool:
    if req.attr.kind != "keyword" or prop.attr.kind != "keyword":
        return False
    return compatible_keyword(req.attr, prop.attr)


def broker_scores(state, grid: Grid, j: str) -> ScoreVector:
    scores = []
    for b in grid.broker_ids:
        v = get_broker_perf(state, grid, b)
        props = grid.broker_props[b]
        if not all(any(_keyword_match(req, p) for p in props) for req in grid.job_broker_reqs[j]):
            v = 0.0
        scores.append(v)
    return ScoreVector(tuple(grid.broker_ids), tuple(scores))


def _capacity_covered(need, offered) -> bool:
    if need.kind == "capacity":
        return (offered.kind == "capacity" and need.key == offered.key
                and need.unit == offered.unit and offered.value >= need.value)
    return compatible(need, offered)


def host_scores(state, grid: Grid, j: str, policy: RankPolicy) -> ScoreVector:
    hosts = candidate_hosts(state, grid, j)
    scores = []
    for h in hosts:
        r = count_rank(policy, h, grid)
        resources = grid.host_resources[h]
        if not all(any(_capacity_covered(grid.attr(ar), grid.attr(pr)) for pr in resources)
                   for _, ar in grid.job_requests[j]):
            r = 0.0
        scores.append(r)
    return ScoreVector(tuple(hosts), tuple(scores))


# -- candidate sets (used by the mapping agents and the stall monitor) -----------

def broker_candidates(ctx: StepContext, grid: Grid, j: str, refined: bool) -> list[str]:
    if refined:
        return broker_scores(ctx, grid, j).best()
    return [b for b in grid.broker_ids if broker_satisfies(grid, j, b)]


def host_candidates(ctx: StepContext, grid: Grid, j: str, refined: bool) -> list[str]:
    policy = grid.job_policy.get(j)
    if refined and policy is not None:
        return host_scores(ctx, grid, j, policy).best()
    return [h for h in candidate_hosts(ctx, grid, j) if host_covers(grid, j, h)]


def host_mapping_enabled(ctx: StepContext, grid: Grid, j: str) -> bool:
    if ctx.read("jobState", j) in TERMINAL or ctx.read("mappedHost", j) is not UNDEF:
        return False
    if grid.config.mode == "meta":
        b = ctx.read("mappedBroker", j)
        return b is not UNDEF and ctx.read("submitted", j, b) is True
    return True


def broker_mapping_enabled(ctx: StepContext, grid: Grid, j: str) -> bool:
    return (ctx.read("jobState", j) not in TERMINAL
            and ctx.read("mappedBroker", j) is UNDEF)


# -- rules -------------------------------------------------------------------------

def host_selection(ctx: StepContext, grid: Grid, j: str) -> None:
    """Submit the job to its mapped host once the user can use what it needs there."""
    if ctx.read("jobState", j) in TERMINAL:
        return
    h = ctx.read("mappedHost", j)
    if h is UNDEF or ctx.read("submitted", j, h) is True:
        return
    if host_usable(grid, j, h):
        ctx.stage("submitted", (j, h), True)


def host_mapping(ctx: StepContext, grid: Grid, j: str) -> None:
    if host_mapping_enabled(ctx, grid, j):
        h = ctx.choose(host_candidates(ctx, grid, j, refined=False))
        if h is not None:
            ctx.stage("mappedHost", (j,), h)


def refined_host_mapping(ctx: StepContext, grid: Grid, j: str) -> None:
    if not host_mapping_enabled(ctx, grid, j):
        return
    if grid.job_policy.get(j) is None:
        log.debug("job %s has no policy requirement; using base host mapping", j)
    h = ctx.choose(host_candidates(ctx, grid, j, refined=True))
    if h is not None:
        ctx.stage("mappedHost", (j,), h)


def user_host_choice(ctx: StepContext, grid: Grid, j: str) -> None:
    """Local mode: the user names the host in the job description."""
    if ctx.read("jobState", j) in TERMINAL or ctx.read("mappedHost", j) is not UNDEF:
        return
    host = grid.jobs[j].host
    if host is not None:
        ctx.stage("mappedHost", (j,), host)


def broker_selection(ctx: StepContext, grid: Grid, j: str) -> None:
    if ctx.read("jobState", j) in TERMINAL:
        return
    b = ctx.read("mappedBroker", j)
    if b is UNDEF or ctx.read("submitted", j, b) is True:
        return
    if broker_usable(grid, j, b):
        ctx.stage("submitted", (j, b), True)


def broker_mapping(ctx: StepContext, grid: Grid, j: str) -> None:
    if broker_mapping_enabled(ctx, grid, j):
        b = ctx.choose(broker_candidates(ctx, grid, j, refined=False))
        if b is not None:
            ctx.stage("mappedBroker", (j,), b)


def refined_broker_mapping(ctx: StepContext, grid: Grid, j: str) -> None:
    if broker_mapping_enabled(ctx, grid, j):
        b = ctx.choose(broker_candidates(ctx, grid, j, refined=True))
        if b is not None:
            ctx.stage("mappedBroker", (j,), b)


def perf_snapshot(state: GridState, grid: Grid) -> dict[str, float]:
    return {b: get_broker_perf(state, grid, b) for b in grid.broker_ids}
