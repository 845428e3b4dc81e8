"""Job-agent rules: resource mapping and selection, state transitions, termination.

Each rule is a function ``(ctx, grid, j)`` that reads the step snapshot through
``ctx`` and stages its contribution there.  Besides the job rules this module
holds the two non-job agents the rules depend on: the local resource manager
that grants resource occupancy FIFO, and the fault injector that delivers
scripted task events.
"""

from __future__ import annotations

from .asm import UNDEF, StepContext
from .model import DIRECT, TERMINAL, Grid, compatible


def live_processes(ctx: StepContext, grid: Grid, j: str) -> list[str]:
    return [p for p in grid.job_processes[j] if ctx.member("PROCESS", p)]


def used_resources(ctx: StepContext, grid: Grid, p: str) -> list[str]:
    return [pr for pr in grid.proc_resources.get(p, ()) if ctx.read("uses", p, pr) is True]


def _aborting(ctx: StepContext, grid: Grid, p: str) -> bool:
    t = ctx.read("task", p)
    return t is not UNDEF and ctx.read("event", t) == "abort" and bool(used_resources(ctx, grid, p))


def _terminating(ctx: StepContext, p: str) -> bool:
    t = ctx.read("task", p)
    return (ctx.read("procState", p) == "running" and t is not UNDEF
            and ctx.read("event", t) == "terminate")


def releasing(ctx: StepContext, grid: Grid, p: str) -> bool:
    """True when ``p`` leaves PROCESS in the step being evaluated."""
    if not ctx.member("PROCESS", p):
        return True
    j = grid.job_of(p)
    if j is None:
        return False  # handlers persist
    js = ctx.read("jobState", j)
    if js == "failed":
        return True
    if js == "done":
        return False
    return _terminating(ctx, p) or _aborting(ctx, grid, p)


def running_ready(ctx: StepContext, grid: Grid, p: str) -> bool:
    """All requests served and ``p`` occupies every resource it uses."""
    if any(ctx.read("procRequest", p, ar) is True for ar in grid.proc_requests[p]):
        return False
    used = used_resources(ctx, grid, p)
    return bool(used) and all(ctx.read("occupant", pr) == p for pr in used)


# -- resource mapping (local resource manager level) -------------------------

def resource_mapping(ctx: StepContext, grid: Grid, j: str) -> None:
    """Map each pending abstract request of ``j`` to a compatible resource on its host."""
    if ctx.read("jobState", j) in TERMINAL:
        return
    h = ctx.read("mappedHost", j)
    if h is UNDEF or ctx.read("submitted", j, h) is not True:
        return
    for p in live_processes(ctx, grid, j):
        for ar in grid.proc_requests[p]:
            if ctx.read("procRequest", p, ar) is not True:
                continue
            if ctx.read("mappedResource", p, ar) is not UNDEF:
                continue
            need = grid.attr(ar)
            pr = ctx.choose(r for r in grid.host_resources[h] if compatible(need, grid.attr(r)))
            if pr is not None:
                ctx.stage("mappedResource", (p, ar), pr)


def _selectable(ctx: StepContext, grid: Grid, p: str, ar: str) -> str | None:
    """The resource Rule 1 would act on for (p, ar), or None when disabled."""
    j = grid.job_of(p)
    if j is None or ctx.read("jobState", j) in TERMINAL:
        return None
    if ctx.read("mappedHost", j) is UNDEF or not ctx.member("PROCESS", p):
        return None
    if ctx.read("procRequest", p, ar) is not True:
        return None
    pr = ctx.read("mappedResource", p, ar)
    if pr is UNDEF or not grid.can_use(grid.user_of(j), pr):
        return None
    return pr


def _handler_claimant(ctx: StepContext, grid: Grid, pr: str) -> tuple[str, str] | None:
    # the lowest (process, request) pair that would spawn the handler this step
    key = ("handler-claim", pr)
    if key not in ctx.memo:
        claim = None
        for q in grid.resource_claimants[pr]:
            for ar in grid.proc_requests[q]:
                if _selectable(ctx, grid, q, ar) == pr:
                    claim = (q, ar)
                    break
            if claim:
                break
        ctx.memo[key] = claim
    return ctx.memo[key]


def resource_selection(ctx: StepContext, grid: Grid, j: str) -> None:
    """Install the process on its mapped resource; spawn a handler for handled resources."""
    for p in live_processes(ctx, grid, j):
        t = grid.task_of(p)
        installed = set()
        for ar in grid.proc_requests[p]:
            pr = _selectable(ctx, grid, p, ar)
            if pr is None:
                continue
            location = grid.location(pr)
            if not installed:
                ctx.stage("task", (p,), t)
            if grid.rtype(pr) == DIRECT:
                if location not in installed:
                    ctx.stage("mapped", (p,), location)
                    ctx.stage("installed", (t, location), True)
                    installed.add(location)
            elif (ctx.read("handler", pr) is UNDEF
                  and _handler_claimant(ctx, grid, pr) == (p, ar)):
                handler = ctx.extend("PROCESS")
                handler_task = ctx.extend("TASK")
                ctx.stage("mapped", (handler,), location)
                ctx.stage("task", (handler,), handler_task)
                ctx.stage("installed", (handler_task, location), True)
                ctx.stage("handler", (pr,), handler)
                for other in grid.scenario.abstract_resources:
                    ctx.stage("procRequest", (handler, other), False)
            ctx.stage("procRequest", (p, ar), False)
            if ctx.read("uses", p, pr) is not True:
                ctx.stage("uses", (p, pr), True)
                ctx.stage("queuedAt", (p, pr), ctx.step)


# -- job state -----------------------------------------------------------------

def state_transition(ctx: StepContext, grid: Grid, j: str) -> None:
    """Advance jobState/procState from the snapshot.

    Priority: abort, then stall-limit failure, then progress.  Each job-level
    trigger is gated on the current state so at most one value is staged.
    """
    js = ctx.read("jobState", j)
    if js in TERMINAL:
        return
    live = live_processes(ctx, grid, j)

    aborting = [p for p in live if _aborting(ctx, grid, p)]
    if aborting:
        ctx.stage("jobState", (j,), "failed")
        ctx.stage("failReason", (j,), "aborted")
        for p in aborting:
            ctx.stage("PROCESS", (p,), False)
        return

    # a job never handed to any broker or host has no edge into failed
    stalled = ctx.read("stall", j)
    if js is not UNDEF and stalled is not UNDEF and stalled >= grid.config.stall_limit:
        ctx.stage("jobState", (j,), "failed")
        ctx.stage("failReason", (j,), "unsatisfiable")
        return

    any_running = False
    any_active = False
    for p in live:
        ready = running_ready(ctx, grid, p)
        active = ready or ctx.read("mapped", p) is not UNDEF or bool(used_resources(ctx, grid, p))
        ps = ctx.read("procState", p)
        if ready:
            any_running = True
            if ps != "running":
                ctx.stage("procState", (p,), "running")
        elif active and ps != "waiting":
            ctx.stage("procState", (p,), "waiting")
        any_active = any_active or active

    target = None
    if any_running:
        target = "running"
    elif any_active:
        target = "waiting"
    elif js is UNDEF or js == "submitted":
        h = ctx.read("mappedHost", j)
        host_submitted = h is not UNDEF and ctx.read("submitted", j, h) is True
        if grid.config.mode == "meta":
            b = ctx.read("mappedBroker", j)
            if host_submitted:
                target = "waiting"
            elif js is UNDEF and b is not UNDEF and ctx.read("submitted", j, b) is True:
                target = "submitted"
        elif host_submitted and js is UNDEF:
            target = "submitted"
    if target is not None and target != js:
        ctx.stage("jobState", (j,), target)


def termination(ctx: StepContext, grid: Grid, j: str) -> None:
    js = ctx.read("jobState", j)
    live = live_processes(ctx, grid, j)
    for p in live:
        if js == "failed" or _terminating(ctx, p):
            ctx.stage("PROCESS", (p,), False)
    if not live and js == "running":
        ctx.stage("jobState", (j,), "done")


# -- non-job agents ------------------------------------------------------------

def occupancy(ctx: StepContext, grid: Grid, h: str) -> None:
    """Grant each free resource on ``h`` to its oldest waiting user (FIFO)."""
    for pr in grid.host_resources[h]:
        occ = ctx.read("occupant", pr)
        if occ is not UNDEF and not releasing(ctx, grid, occ):
            continue
        head = None
        if grid.rtype(pr) == DIRECT or ctx.read("handler", pr) is not UNDEF:
            waiting = [
                (ctx.read("queuedAt", q, pr), q)
                for q in grid.resource_claimants[pr]
                if q != occ and ctx.member("PROCESS", q)
                and ctx.read("uses", q, pr) is True and not releasing(ctx, grid, q)
            ]
            if waiting:
                head = min(waiting)[1]
        if head is not None:
            ctx.stage("occupant", (pr,), head)
        elif occ is not UNDEF:
            ctx.stage("occupant", (pr,), UNDEF)


def fault_injection(ctx: StepContext, grid: Grid) -> None:
    for fault in grid.faults_at.get(ctx.step, ()):
        ctx.stage("event", (grid.task_of(fault.process),), fault.kind)
