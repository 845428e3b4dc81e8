"""Trace-scanning and state validators for simulation runs.

Each validator returns a list of human-readable violations; an empty list
means the property holds.  :class:`Monitor` bundles the per-state checks into
an ``on_step`` hook for :func:`gridbroker.sim.run`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .asm import UNDEF, GridState
from .model import DIRECT, Grid, check_structure
from .sim import MAPPING_RULES, TraceEvent

ALLOWED_JOB_EDGES = frozenset({
    ("undef", "submitted"),
    ("submitted", "waiting"),
    ("waiting", "running"),
    ("running", "waiting"),
    ("running", "done"),
    ("submitted", "failed"),
    ("waiting", "failed"),
    ("running", "failed"),
})

LAYERS = ("mappedBroker", "submitted(j,b)", "mappedHost", "submitted(j,h)",
          "mappedResource", "uses", "done")


def _name(value) -> str:
    return "undef" if value is UNDEF else str(value)


def job_state_changes(trace: Iterable[TraceEvent]) -> list[tuple[int, str, str, str]]:
    """(step, job, old, new) for every jobState update in the trace."""
    out = []
    for ev in trace:
        for location, old, new in ev.updates:
            if location.function == "jobState":
                out.append((ev.step, location.args[0], _name(old), _name(new)))
    return out


def check_trajectory(trace: Iterable[TraceEvent]) -> list[str]:
    """Every jobState update must follow an allowed edge."""
    return [f"step {s}: jobState({j}) {old} -> {new} is not an allowed transition"
            for s, j, old, new in job_state_changes(trace)
            if (old, new) not in ALLOWED_JOB_EDGES]


def layer_onsets(trace: Iterable[TraceEvent], grid: Grid) -> dict[str, dict[str, int]]:
    """First step at which each job reached each layer of the lifecycle."""
    onsets: dict[str, dict[str, int]] = {j: {} for j in grid.job_ids}
    brokers = set(grid.broker_ids)
    for ev in trace:
        for location, _, new in ev.updates:
            fn, args = location
            layer = job = None
            if fn in ("mappedBroker", "mappedHost") and new is not UNDEF:
                layer, job = fn, args[0]
            elif fn == "submitted" and new is True:
                layer = "submitted(j,b)" if args[1] in brokers else "submitted(j,h)"
                job = args[0]
            elif fn in ("mappedResource", "uses") and new not in (UNDEF, False):
                layer, job = fn, grid.job_of(args[0])
            elif fn == "jobState" and new == "done":
                layer, job = "done", args[0]
            if job in onsets and layer is not None:
                onsets[job].setdefault(layer, ev.step)
    return onsets


def check_layer_order(trace: Iterable[TraceEvent], grid: Grid) -> list[str]:
    """Layers a job reaches appear in lifecycle order, each in a later step."""
    problems = []
    for j, seen in layer_onsets(trace, grid).items():
        reached = [(layer, seen[layer]) for layer in LAYERS if layer in seen]
        for (a, sa), (b, sb) in zip(reached, reached[1:]):
            if sb <= sa:
                problems.append(f"{j}: {b} at step {sb} does not follow {a} at step {sa}")
    return problems


def check_mode_machinery(trace: Iterable[TraceEvent], mode: str) -> list[str]:
    """Local mode runs no host or broker mapping; broker mode runs no broker mapping."""
    forbidden = set()
    if mode in ("local", "broker"):
        forbidden |= MAPPING_RULES["broker"]
    if mode == "local":
        forbidden |= MAPPING_RULES["host"]
    return [f"step {ev.step}: {ev.rule} fired in {mode} mode"
            for ev in trace if ev.rule in forbidden]


def check_state(state: GridState, grid: Grid) -> list[str]:
    """Per-state safety: exclusivity, occupancy, finished jobs, handlers, subsets."""
    problems = list(check_structure(state))
    for pr in grid.resource_ids:
        occ = state.get("occupant", pr)
        if occ is not UNDEF:
            if not state.member("PROCESS", occ):
                problems.append(f"occupant({pr}) = {occ} is not a live process")
            elif state.get("uses", occ, pr) is not True:
                problems.append(f"occupant({pr}) = {occ} does not use it")
        h = state.get("handler", pr)
        if h is not UNDEF and grid.rtype(pr) == DIRECT:
            problems.append(f"direct resource {pr} has handler {h}")
    handlers = [state.get("handler", pr) for pr in grid.resource_ids]
    handlers = [h for h in handlers if h is not UNDEF]
    if len(handlers) != len(set(handlers)):
        problems.append(f"handler process shared between resources: {handlers}")
    for j in grid.job_ids:
        js = state.get("jobState", j)
        live = [p for p in grid.job_processes[j] if state.member("PROCESS", p)]
        if js == "done" and live:
            problems.append(f"done job {j} still has processes {live}")
        for p in live:
            if state.get("procState", p) != "running":
                continue
            for pr in grid.proc_resources.get(p, ()):
                if state.get("uses", p, pr) is True and state.get("occupant", pr) != p:
                    problems.append(f"running {p} does not occupy {pr}")
    return problems


@dataclass
class Monitor:
    """``on_step`` hook that validates every post-state of a run."""

    grid: Grid
    violations: list = field(default_factory=list)
    states: int = 0

    def __call__(self, s: int, pre: GridState, post: GridState, fired: list) -> None:
        if s == 0:
            self._check(-1, pre)
        self._check(s, post)

    def _check(self, s: int, state: GridState) -> None:
        self.states += 1
        self.violations += [f"after step {s}: {p}" for p in check_state(state, self.grid)]


def check_handlers_once(trace: Iterable[TraceEvent]) -> list[str]:
    """A handled resource acquires at most one handler over a whole run."""
    assigned: dict[str, int] = {}
    problems = []
    for ev in trace:
        for location, _, new in ev.updates:
            if location.function == "handler" and new is not UNDEF:
                pr = location.args[0]
                if pr in assigned:
                    problems.append(f"step {ev.step}: second handler for {pr} "
                                    f"(first at step {assigned[pr]})")
                assigned.setdefault(pr, ev.step)
    return problems


def check_run(trace: list[TraceEvent], grid: Grid) -> list[str]:
    """All trace-level validators combined."""
    return (check_trajectory(trace) + check_layer_order(trace, grid)
            + check_mode_machinery(trace, grid.config.mode) + check_handlers_once(trace))
