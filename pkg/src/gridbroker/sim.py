"""Simulation driver: agent assembly, the step loop, traces, reports and metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import IO, Any, Callable, Iterable

from . import brokering as bk
from . import rules
from .asm import (UNDEF, ChoosePolicy, FiredRule, GridState, Location, Program, StepContext,
                  Update, fire, format_location, format_value, parse_location, step)
from .model import SIGNATURE, TERMINAL, Grid, compatible, init_state
from .scenario import Scenario, ValidationIssue, validate_scenario

MAPPING_RULES = {
    "broker": {"broker_mapping", "refined_broker_mapping"},
    "host": {"host_mapping", "refined_host_mapping"},
}


class ScenarioInvalid(ValueError):
    def __init__(self, issues: list[ValidationIssue]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))


# -- stall monitoring -----------------------------------------------------------

def stall_stage(ctx: StepContext, grid: Grid, j: str) -> str | None:
    """The level at which ``j`` cannot progress in this snapshot, if any.

    Waiting for a busy resource or for the next layer to act is not a stall;
    an empty candidate set or a failed authorization precondition is.
    """
    cfg = grid.config
    if ctx.read("jobState", j) in TERMINAL:
        return None
    if cfg.mode == "meta":
        b = ctx.read("mappedBroker", j)
        if b is UNDEF:
            refined = cfg.broker_matchmaking == "refined"
            return None if bk.broker_candidates(ctx, grid, j, refined) else "broker"
        if ctx.read("submitted", j, b) is not True:
            return None if bk.broker_usable(grid, j, b) else "broker-auth"
    h = ctx.read("mappedHost", j)
    if h is UNDEF:
        if cfg.mode == "local":
            return None
        refined = cfg.host_matchmaking == "refined"
        return None if bk.host_candidates(ctx, grid, j, refined) else "host"
    if ctx.read("submitted", j, h) is not True:
        return None if bk.host_usable(grid, j, h) else "host-auth"
    user = grid.user_of(j)
    for p in rules.live_processes(ctx, grid, j):
        for ar in grid.proc_requests[p]:
            if ctx.read("procRequest", p, ar) is not True:
                continue
            pr = ctx.read("mappedResource", p, ar)
            if pr is UNDEF:
                need = grid.attr(ar)
                if not any(compatible(need, grid.attr(r)) for r in grid.host_resources[h]):
                    return "resource"
            elif not grid.can_use(user, pr):
                return "resource-auth"
    return None


def stall_monitor(ctx: StepContext, grid: Grid, j: str) -> None:
    reason = stall_stage(ctx, grid, j)
    count = ctx.read("stall", j)
    count = 0 if count is UNDEF else count
    if reason is not None:
        if count < grid.config.stall_limit:
            ctx.stage("stall", (j,), count + 1)
            if ctx.read("stallReason", j) != reason:
                ctx.stage("stallReason", (j,), reason)
    elif count and ctx.read("jobState", j) not in TERMINAL:
        ctx.stage("stall", (j,), 0)
        ctx.stage("stallReason", (j,), UNDEF)


# -- agents -------------------------------------------------------------------------

def build_programs(grid: Grid) -> list[Program]:
    """Agent programs in firing-log order for the configured mode and matchmaking."""
    cfg = grid.config
    programs = [Program("env", "fault_injection", partial(rules.fault_injection, grid=grid))]
    for j in grid.job_ids:
        job_rules: list[tuple[str, Callable]] = []
        if cfg.mode == "meta":
            if cfg.broker_matchmaking == "refined":
                job_rules.append(("refined_broker_mapping", bk.refined_broker_mapping))
            else:
                job_rules.append(("broker_mapping", bk.broker_mapping))
            job_rules.append(("broker_selection", bk.broker_selection))
        if cfg.mode == "local":
            job_rules.append(("user_host_choice", bk.user_host_choice))
        elif cfg.host_matchmaking == "refined":
            job_rules.append(("refined_host_mapping", bk.refined_host_mapping))
        else:
            job_rules.append(("host_mapping", bk.host_mapping))
        job_rules += [
            ("host_selection", bk.host_selection),
            ("resource_mapping", rules.resource_mapping),
            ("resource_selection", rules.resource_selection),
            ("state_transition", rules.state_transition),
            ("termination", rules.termination),
            ("stall_monitor", stall_monitor),
        ]
        programs += [Program(j, name, partial(body, grid=grid, j=j)) for name, body in job_rules]
    for h in grid.host_ids:
        programs.append(Program(h, "occupancy", partial(rules.occupancy, grid=grid, h=h)))
    return programs


# -- trace --------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceEvent:
    step: int
    agent: str
    rule: str
    updates: tuple  # of (Location, old, new)


def _events(step_index: int, pre: GridState, fired: Iterable[FiredRule]) -> list[TraceEvent]:
    return [
        TraceEvent(step_index, f.agent, f.rule,
                   tuple((u.location, pre.get(u.location.function, *u.location.args), u.value)
                         for u in f.updates))
        for f in fired
    ]


def trace_lines(trace: Iterable[TraceEvent]) -> Iterable[str]:
    for ev in trace:
        for location, old, new in ev.updates:
            yield "\t".join((str(ev.step), ev.agent, ev.rule, format_location(location),
                             format_value(old), format_value(new)))


def emit_trace(trace: Iterable[TraceEvent], sink: IO[str]) -> None:
    """Write one tab-separated line per update, in firing order."""
    for line in trace_lines(trace):
        sink.write(line + "\n")


def format_trace(trace: Iterable[TraceEvent]) -> str:
    return "".join(line + "\n" for line in trace_lines(trace))


@dataclass(frozen=True)
class TraceRecord:
    step: int
    agent: str
    rule: str
    location: Location
    old: Any
    new: Any


def parse_trace(text: str, signature=SIGNATURE) -> list[TraceRecord]:
    records = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise ValueError(f"trace line {number}: expected 6 fields, got {len(parts)}")
        step_s, agent, rule, loc_s, old_s, new_s = parts
        location = parse_location(loc_s)
        codomain = signature.check(location).codomain
        records.append(TraceRecord(int(step_s), agent, rule, location,
                                   codomain.parse(old_s), codomain.parse(new_s)))
    return records


def replay(initial: GridState, updates: Iterable) -> GridState:
    """Fire a trace's updates step by step, starting from ``initial``.

    Accepts :class:`TraceEvent` or :class:`TraceRecord` items.
    """
    batches: dict[int, list] = {}
    for item in updates:
        if isinstance(item, TraceEvent):
            batches.setdefault(item.step, []).extend(
                (location, new) for location, _, new in item.updates)
        else:
            batches.setdefault(item.step, []).append((item.location, item.new))
    state = initial
    for s in sorted(batches):
        state = fire(state, [Update(location, value) for location, value in batches[s]])
    return state


# -- report ---------------------------------------------------------------------------

@dataclass
class JobReport:
    id: str
    final_state: str = "undef"
    fail_reason: str = ""
    stall_reason: str = ""
    broker: str = ""
    host: str = ""
    entered: dict = field(default_factory=dict)   # jobState -> first state index
    steps_in: dict = field(default_factory=dict)  # jobState -> number of state indices
    in_flight: bool = False


@dataclass
class RunReport:
    jobs: dict
    broker_perf: dict
    total_steps: int
    status: str  # complete | quiescent | max_steps
    mode: str
    final_state: GridState | None = None

    @property
    def all_done(self) -> bool:
        return all(r.final_state == "done" for r in self.jobs.values())


def _value(x: Any) -> str:
    return "" if x is UNDEF else str(x)


class _Recorder:
    def __init__(self, grid: Grid):
        self.grid = grid
        self.jobs = {j: JobReport(j) for j in grid.job_ids}
        self.perf = {b: [] for b in grid.broker_ids}

    def observe(self, index: int, state: GridState) -> None:
        for j, rep in self.jobs.items():
            js = state.get("jobState", j)
            name = "undef" if js is UNDEF else js
            rep.entered.setdefault(name, index)
            rep.steps_in[name] = rep.steps_in.get(name, 0) + 1
        for b, history in self.perf.items():
            history.append(bk.get_broker_perf(state, self.grid, b))

    def finish(self, state: GridState) -> None:
        for j, rep in self.jobs.items():
            js = state.get("jobState", j)
            rep.final_state = "undef" if js is UNDEF else js
            rep.fail_reason = _value(state.get("failReason", j))
            rep.stall_reason = _value(state.get("stallReason", j))
            b = state.get("mappedBroker", j)
            if b is not UNDEF and state.get("submitted", j, b) is True:
                rep.broker = b
            rep.host = _value(state.get("mappedHost", j))
            rep.in_flight = rep.final_state not in TERMINAL


StepHook = Callable[[int, GridState, GridState, list], None]


def run(scenario: Scenario, *, on_step: StepHook | None = None,
        lint: list | None = None) -> tuple[RunReport, list[TraceEvent]]:
    """Execute steps until every job is done/failed and the state is quiescent,
    or ``max_steps`` is reached.

    Raises :class:`ScenarioInvalid` for invalid input and
    :class:`~gridbroker.asm.EngineFault` for an inconsistent update set.
    """
    issues = validate_scenario(scenario)
    if issues:
        raise ScenarioInvalid(issues)
    grid = Grid(scenario)
    cfg = scenario.config
    state = init_state(scenario)
    programs = build_programs(grid)
    policy = ChoosePolicy(cfg.choose, cfg.seed)
    last_fault = max(grid.faults_at, default=-1)
    recorder = _Recorder(grid)
    recorder.observe(0, state)
    trace: list[TraceEvent] = []
    status = "max_steps"
    steps_run = 0
    for s in range(cfg.max_steps):
        nxt, fired = step(state, programs, policy, s, lint)
        steps_run = s + 1
        trace.extend(_events(s, state, fired))
        if on_step is not None:
            on_step(s, state, nxt, fired)
        state = nxt
        recorder.observe(s + 1, state)
        if not fired and s >= last_fault:
            # nothing enabled and no scripted event pending: a fixed point
            status = "quiescent"
            break
    recorder.finish(state)
    if all(not r.in_flight for r in recorder.jobs.values()):
        status = "complete"
    report = RunReport(recorder.jobs, recorder.perf, steps_run, status, cfg.mode, state)
    return report, trace


# -- metrics --------------------------------------------------------------------------

@dataclass
class Metrics:
    makespan: dict
    broker_success: dict
    done_fraction: float


def compute_metrics(report: RunReport) -> Metrics:
    makespan = {}
    for j, rep in report.jobs.items():
        if rep.final_state in TERMINAL:
            start = rep.entered.get("submitted", 0)
            makespan[j] = rep.entered[rep.final_state] - start
        else:
            makespan[j] = None
    tallies: dict[str, list[int]] = {b: [0, 0] for b in report.broker_perf}
    for rep in report.jobs.values():
        if rep.broker and rep.final_state in TERMINAL:
            tallies.setdefault(rep.broker, [0, 0])[rep.final_state == "failed"] += 1
    success = {b: (1.0 if done + failed == 0 else done / (done + failed))
               for b, (done, failed) in tallies.items()}
    n = len(report.jobs)
    done = sum(1 for r in report.jobs.values() if r.final_state == "done")
    return Metrics(makespan, success, done / n if n else 0.0)


def format_report(report: RunReport, metrics: Metrics | None = None) -> str:
    metrics = metrics or compute_metrics(report)
    out = [f"status = {report.status}", f"mode = {report.mode}",
           f"total_steps = {report.total_steps}"]
    for j, rep in report.jobs.items():
        prefix = f"job.{j}"
        out.append(f"{prefix}.state = {rep.final_state}")
        out.append(f"{prefix}.in_flight = {str(rep.in_flight).lower()}")
        if rep.fail_reason:
            out.append(f"{prefix}.fail_reason = {rep.fail_reason}")
        if rep.stall_reason:
            out.append(f"{prefix}.stall_reason = {rep.stall_reason}")
        if rep.broker:
            out.append(f"{prefix}.broker = {rep.broker}")
        if rep.host:
            out.append(f"{prefix}.host = {rep.host}")
        for name, index in rep.entered.items():
            out.append(f"{prefix}.entered.{name} = {index}")
        for name, count in rep.steps_in.items():
            out.append(f"{prefix}.steps.{name} = {count}")
        ms = metrics.makespan.get(j)
        out.append(f"{prefix}.makespan = {'' if ms is None else ms}")
    for b, history in report.broker_perf.items():
        out.append(f"broker.{b}.perf = {','.join(format_value(float(v)) for v in history)}")
        out.append(f"broker.{b}.success_ratio = {format_value(float(metrics.broker_success[b]))}")
    out.append(f"metrics.done_fraction = {format_value(float(metrics.done_fraction))}")
    return "\n".join(out) + "\n"


def exit_code(report: RunReport) -> int:
    return 0 if report.all_done else 2
