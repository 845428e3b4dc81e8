"""Random scenario generator for the randomized suites.

Capacities and weights are multiples of 0.5 so rank sums, and their tenfold
scaling, are exact in binary floating point.
"""

from __future__ import annotations

import random

from gridbroker.scenario import Scenario, parse_scenario

CAPACITY_KEYS = {"cpu_speed": "GHz", "memory": "GB", "disk": "GB"}
KEYWORDS = {"software": ("solver", "blast", "matlab"), "os": ("linux", "aix")}
MIDDLEWARE = ("globus", "unicore", "gridway")


def _half(rng: random.Random, lo: float, hi: float) -> float:
    return rng.randint(int(lo * 2), int(hi * 2)) / 2


def _attr_text(rng: random.Random, need: bool) -> str:
    if rng.random() < (0.85 if need else 0.7):
        key = rng.choice(sorted(CAPACITY_KEYS))
        unit = CAPACITY_KEYS[key]
        if need:
            return f"{key}>={_half(rng, 0.5, 2.5)} unit={unit}"
        return f"key={key} capacity={_half(rng, 0.5, 5.0)} unit={unit}"
    key = rng.choice(sorted(KEYWORDS))
    value = rng.choice(KEYWORDS[key])
    return f"{key}={value}" if need else f"key={key} keyword={value}"


def scenario_text(seed: int, *, mode: str = "meta", matchmaking: str = "refined",
                  choose: str = "lowest-id", choose_seed: int = 0,
                  max_brokers: int = 4, max_hosts: int = 6, max_resources: int = 5,
                  max_jobs: int = 3, stall_limit: int = 6, max_steps: int = 150) -> str:
    rng = random.Random(seed)
    hosts = [f"h{i}" for i in range(1, rng.randint(1, max_hosts) + 1)]
    brokers = [f"b{i}" for i in range(1, rng.randint(1, max_brokers) + 1)]
    out = ["[config]", f"mode = {mode}", f"matchmaking = {matchmaking}",
           f"choose = {choose}", f"seed = {choose_seed}",
           f"stall_limit = {stall_limit}", f"max_steps = {max_steps}", ""]

    policies = [f"pol{i}" for i in range(1, rng.randint(1, 2) + 1)]
    for name in policies:
        out.append(f"[policy {name}]")
        weights = {k: _half(rng, 0.0, 3.0) for k in sorted(CAPACITY_KEYS) if rng.random() < 0.7}
        if not any(weights.values()):
            weights[rng.choice(sorted(CAPACITY_KEYS))] = _half(rng, 0.5, 3.0)
        out += [f"weight {k} = {w}" for k, w in weights.items()]
        out.append("")

    resources: dict[str, list[str]] = {}
    host_lines = []
    for h in hosts:
        host_lines.append(f"[host {h}]")
        resources[h] = []
        for n in range(1, rng.randint(2, max_resources) + 1):
            rid = f"{h}.r{n}"
            kind = "handled" if rng.random() < 0.2 else "direct"
            host_lines.append(f"resource {rid} {_attr_text(rng, need=False)} type={kind}")
            resources[h].append(rid)
        host_lines.append("")

    users = [f"u{i}" for i in range(1, rng.randint(1, 2) + 1)]
    all_resources = [r for h in hosts for r in resources[h]]
    for u in users:
        usable = [r for r in all_resources if rng.random() < 0.9] or [all_resources[0]]
        out += [f"[user {u}]", f"can_login = {', '.join(hosts)}",
                f"can_use = {', '.join(usable)}", ""]

    for b in brokers:
        out.append(f"[broker {b}]")
        for mw in rng.sample(MIDDLEWARE, rng.randint(1, 2)):
            out.append(f"property middleware={mw}")
        managed = [h for h in hosts if rng.random() < 0.6] or [rng.choice(hosts)]
        out.append(f"hosts = {', '.join(managed)}")
        out.append("perf = dynamic" if rng.random() < 0.4 else f"perf = {_half(rng, 0.0, 2.0)}")
        out.append("")

    out += host_lines

    faults = []
    for j in range(1, rng.randint(1, max_jobs) + 1):
        jid = f"j{j}"
        out += [f"[job {jid}]", f"user = {rng.choice(users)}"]
        if mode == "local":
            out.append(f"host = {rng.choice(hosts)}")
        for mw in rng.sample(MIDDLEWARE, rng.choice((0, 1, 1, 2))):
            out.append(f"require broker middleware={mw}")
        if rng.random() < 0.85:
            out.append(f"require policy {rng.choice(policies)}")
        for k in range(1, rng.randint(1, 2) + 1):
            pid = f"{jid}p{k}"
            for _ in range(rng.choice((1, 1, 2))):
                out.append(f"process {pid} needs {_attr_text(rng, need=True)}")
            faults.append(f"terminate process={pid} at={rng.randint(0, 8)}")
        out.append("")
    out += ["[fault]"] + faults + [""]
    return "\n".join(out)


def generate(seed: int, **kwargs) -> Scenario:
    return parse_scenario(scenario_text(seed, **kwargs))
