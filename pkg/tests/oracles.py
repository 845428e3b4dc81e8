"""Independent exhaustive-search matchmaking oracles.

These work from the raw scenario records and a state snapshot and share no
code with the simulator's brokering module.
"""

from __future__ import annotations

from gridbroker.asm import UNDEF, GridState
from gridbroker.scenario import Scenario


def attr_fits(need, offer) -> bool:
    if need.kind != offer.kind or need.key != offer.key:
        return False
    if need.kind == "keyword":
        return need.value == offer.value
    return need.unit == offer.unit and offer.value >= need.value


def _requirements(s: Scenario, j: str, role: str) -> list:
    return [s.requirements[r] for r in s.jobs[j].requirements
            if r in s.requirements and s.requirements[r].role == role]


def _abstract_needs(s: Scenario, j: str) -> list:
    return [s.abstract_resources[ar].attr
            for p in s.jobs[j].processes for ar in s.processes[p].requests]


def broker_perf(s: Scenario, state: GridState, b: str) -> float:
    broker = s.brokers[b]
    if broker.perf is not None:
        return broker.perf
    finished = [state.get("jobState", j) for j in s.jobs
                if state.get("mappedBroker", j) == b and state.get("submitted", j, b) is True
                and state.get("jobState", j) in ("done", "failed")]
    if not finished:
        return 1.0
    return finished.count("done") / len(finished)


def broker_score(s: Scenario, state: GridState, j: str, b: str) -> float:
    props = [s.properties[p].attr for p in s.brokers[b].properties]
    for req in _requirements(s, j, "broker-property"):
        if not any(p.kind == "keyword" and p.key == req.attr.key and p.value == req.attr.value
                   for p in props):
            return 0.0
    return broker_perf(s, state, b)


def host_score(s: Scenario, j: str, h: str, weights: dict) -> float:
    offers = [s.resources[r].attr for r in s.hosts[h].resources]
    if not all(any(attr_fits(n, o) for o in offers) for n in _abstract_needs(s, j)):
        return 0.0
    return sum(weights.get(o.key, 0.0) * o.value for o in offers if o.kind == "capacity")


def job_weights(s: Scenario, j: str) -> dict | None:
    pols = _requirements(s, j, "policy")
    return dict(s.policies[pols[0].attr.value].weights) if pols else None


def best_brokers(s: Scenario, state: GridState, j: str) -> tuple[list[str], dict]:
    scores = {b: broker_score(s, state, j, b) for b in s.brokers}
    top = max(scores.values(), default=0.0)
    return (sorted(b for b, v in scores.items() if v == top) if top > 0 else []), scores


def best_hosts(s: Scenario, state: GridState, j: str) -> tuple[list[str], dict]:
    b = state.get("mappedBroker", j)
    if s.config.mode == "meta":
        pool = list(s.brokers[b].hosts) if b is not UNDEF else []
    else:
        pool = list(s.hosts)
    weights = job_weights(s, j)
    if weights is None:
        # no ranking policy: every covering host is an equal candidate
        fits = [h for h in pool
                if all(any(attr_fits(n, s.resources[r].attr) for r in s.hosts[h].resources)
                       for n in _abstract_needs(s, j))]
        return sorted(fits), {h: (1.0 if h in fits else 0.0) for h in pool}
    scores = {h: host_score(s, j, h, weights) for h in pool}
    top = max(scores.values(), default=0.0)
    return (sorted(h for h, v in scores.items() if v == top) if top > 0 else []), scores


def oracle_broker(s: Scenario, state: GridState, j: str) -> str | None:
    best, _ = best_brokers(s, state, j)
    return best[0] if best else None


def oracle_host(s: Scenario, state: GridState, j: str) -> str | None:
    best, _ = best_hosts(s, state, j)
    return best[0] if best else None


def broker_mapping_due(s: Scenario, state: GridState, j: str) -> bool:
    return (state.get("jobState", j) not in ("done", "failed")
            and state.get("mappedBroker", j) is UNDEF)


def host_mapping_due(s: Scenario, state: GridState, j: str) -> bool:
    if state.get("jobState", j) in ("done", "failed") or state.get("mappedHost", j) is not UNDEF:
        return False
    if s.config.mode == "meta":
        b = state.get("mappedBroker", j)
        return b is not UNDEF and state.get("submitted", j, b) is True
    return s.config.mode == "broker"
