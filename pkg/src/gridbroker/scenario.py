"""Scenario files: a strict, line-oriented, section-based text format.

Example::

    [config]
    mode = meta
    matchmaking = refined

    [policy fast]
    weight cpu_speed = 1.0

    [user u1]
    can_login = h1
    can_use = h1.cpu

    [broker b1]
    property middleware=globus
    hosts = h1
    perf = dynamic

    [host h1]
    resource h1.cpu key=cpu_speed capacity=3.0 unit=GHz type=direct

    [job j1]
    user = u1
    require broker middleware=globus
    require policy fast
    process p1 needs cpu_speed>=2.0 unit=GHz

    [fault]
    terminate process=p1 at=0

Identifiers match ``[A-Za-z0-9_.-]+`` and are unique across all element kinds.
Derived identifiers (abstract resources, requirements, broker properties and
tasks) contain a colon and so never clash with declared ones.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Iterator

from .brokering import RankPolicy
from .model import (DIRECT, HANDLED, AbstractResource, Attr, Broker, Host, Job,
                    PhysicalResource, Process, Property, Requirement, User, task_id)

ID_RE = re.compile(r"[A-Za-z0-9_.\-]+\Z")
SECTION_RE = re.compile(r"\[\s*([A-Za-z_]+)(?:\s+(\S+?))?\s*\]\Z")
MODES = ("local", "broker", "meta")
MATCHMAKING = ("base", "refined")
CHOOSE_MODES = ("lowest-id", "seeded")
FAULT_KINDS = ("abort", "terminate")


class ScenarioError(ValueError):
    """Syntax or structural error in a scenario file."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}" if line is not None else ""
        if line is not None and column is not None:
            where += f", column {column}"
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class Fault:
    kind: str
    process: str
    at: int


@dataclass(frozen=True)
class Config:
    choose: str = "lowest-id"
    seed: int = 0
    mode: str = "meta"
    broker_matchmaking: str = "base"
    host_matchmaking: str = "base"
    stall_limit: int = 100
    max_steps: int = 1000


@dataclass
class Scenario:
    users: dict[str, User] = field(default_factory=dict)
    brokers: dict[str, Broker] = field(default_factory=dict)
    hosts: dict[str, Host] = field(default_factory=dict)
    resources: dict[str, PhysicalResource] = field(default_factory=dict)
    jobs: dict[str, Job] = field(default_factory=dict)
    processes: dict[str, Process] = field(default_factory=dict)
    abstract_resources: dict[str, AbstractResource] = field(default_factory=dict)
    requirements: dict[str, Requirement] = field(default_factory=dict)
    properties: dict[str, Property] = field(default_factory=dict)
    policies: dict[str, RankPolicy] = field(default_factory=dict)
    faults: list[Fault] = field(default_factory=list)
    config: Config = field(default_factory=Config)

    def with_config(self, **changes) -> Scenario:
        """Copy with some ``[config]`` values replaced (``None`` values are ignored)."""
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, config=replace(self.config, **changes))


# -- parsing -----------------------------------------------------------------

class _Line:
    def __init__(self, number: int, text: str):
        self.number = number
        self.text = text
        self.tokens = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", text)]

    def error(self, message: str, column: int | None = None) -> ScenarioError:
        return ScenarioError(message, self.number, column if column is not None else 1)

    def assignment(self) -> tuple[str, str, int]:
        """Split ``lhs = rhs``; returns (lhs, rhs, rhs column)."""
        if "=" not in self.text:
            raise self.error("expected '='", self.tokens[0][0])
        idx = self.text.index("=")
        lhs = self.text[:idx].strip()
        rhs = self.text[idx + 1:].strip()
        return lhs, rhs, idx + 2


def _check_id(line: _Line, ident: str, column: int) -> str:
    if not ID_RE.match(ident):
        raise line.error(f"invalid identifier {ident!r}", column)
    return ident


def _id_list(line: _Line, text: str, column: int) -> tuple:
    items = [s.strip() for s in text.split(",")] if text.strip() else []
    for item in items:
        _check_id(line, item, column)
    return tuple(items)


def _real(line: _Line, text: str, column: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise line.error(f"expected a real number, got {text!r}", column) from None
    if not math.isfinite(value):
        raise line.error(f"expected a finite number, got {text!r}", column)
    return value


def _int(line: _Line, text: str, column: int, lo: int = 0, hi: int | None = None) -> int:
    try:
        value = int(text)
    except ValueError:
        raise line.error(f"expected an integer, got {text!r}", column) from None
    if value < lo or (hi is not None and value > hi):
        raise line.error(f"integer {value} out of range", column)
    return value


def _kv(line: _Line, token: str, column: int) -> tuple[str, str]:
    key, sep, value = token.partition("=")
    if not sep or not key or not value:
        raise line.error(f"expected key=value, got {token!r}", column)
    return key, value


def _lines(text: str) -> Iterator[_Line]:
    for number, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        if body.strip():
            yield _Line(number, body)


class _Parser:
    def __init__(self) -> None:
        self.s = Scenario()
        self.declared: dict[str, tuple[str, int]] = {}
        self.config: dict = {}
        self.config_seen = False
        self.policy_lines: dict[str, int] = {}
        # raw per-job state, finalized after parsing
        self.job_raw: dict[str, dict] = {}
        self.broker_raw: dict[str, dict] = {}
        self.host_raw: dict[str, list] = {}

    def declare(self, kind: str, ident: str, line: _Line, column: int) -> None:
        if ident in self.declared:
            other_kind, other_line = self.declared[ident]
            raise line.error(
                f"duplicate {kind} id {ident!r} (line {other_line} and line {line.number}"
                + (f", already a {other_kind})" if other_kind != kind else ")"),
                column,
            )
        self.declared[ident] = (kind, line.number)

    def parse(self, text: str) -> Scenario:
        section = None
        for line in _lines(text):
            stripped = line.text.strip()
            if stripped.startswith("["):
                section = self.open_section(line, stripped)
                continue
            if section is None:
                raise line.error("content outside of any section", line.tokens[0][0])
            kind, ident = section
            getattr(self, f"line_{kind}")(line, ident)
        if not self.s.jobs:
            raise ScenarioError("no jobs declared")
        self.finish()
        return self.s

    def open_section(self, line: _Line, stripped: str):
        m = SECTION_RE.match(stripped)
        if not m:
            raise line.error(f"malformed section header {stripped!r}", line.tokens[0][0])
        kind, ident = m.group(1), m.group(2)
        col = line.text.index(ident) + 1 if ident else 1
        if kind in ("user", "broker", "host", "job", "policy"):
            if ident is None:
                raise line.error(f"[{kind}] needs an identifier", 1)
            _check_id(line, ident, col)
            if kind == "policy":
                if ident in self.policy_lines:
                    raise line.error(
                        f"duplicate policy id {ident!r} (line {self.policy_lines[ident]} "
                        f"and line {line.number})", col)
                self.policy_lines[ident] = line.number
                self.s.policies[ident] = RankPolicy(ident, {})
            else:
                self.declare(kind, ident, line, col)
                self.start(kind, ident)
            return kind, ident
        if kind in ("fault", "config"):
            if ident is not None:
                raise line.error(f"[{kind}] takes no identifier", col)
            if kind == "config":
                if self.config_seen:
                    raise line.error("duplicate [config] section", 1)
                self.config_seen = True
            return kind, None
        raise line.error(f"unknown section [{kind}]", 2)

    def start(self, kind: str, ident: str) -> None:
        if kind == "user":
            self.s.users[ident] = User(ident)
        elif kind == "broker":
            self.broker_raw[ident] = {"props": [], "hosts": (), "perf": None, "perf_set": False}
        elif kind == "host":
            self.host_raw[ident] = []
        elif kind == "job":
            self.job_raw[ident] = {"user": None, "broker": [], "policy": [], "procs": {},
                                   "host": None}
            self.s.jobs[ident] = None  # placeholder keeps declaration order

    # -- per-section line handlers

    def line_user(self, line: _Line, ident: str) -> None:
        lhs, rhs, col = line.assignment()
        user = self.s.users[ident]
        parts = lhs.split()
        if lhs == "can_login":
            self.s.users[ident] = replace(user, can_login=_id_list(line, rhs, col))
        elif lhs == "can_use":
            self.s.users[ident] = replace(user, can_use=_id_list(line, rhs, col))
        elif len(parts) == 2 and parts[0] == "local":
            host = _check_id(line, parts[1], line.tokens[1][0])
            name = rhs
            if not name or len(name.split()) != 1:
                raise line.error("local name must be a single token", col)
            local_ids = dict(user.local_ids)
            local_ids[host] = name
            self.s.users[ident] = replace(user, local_ids=local_ids)
        else:
            raise line.error(f"unknown key {lhs!r} in [user]", line.tokens[0][0])

    def line_broker(self, line: _Line, ident: str) -> None:
        raw = self.broker_raw[ident]
        first_col, first = line.tokens[0]
        if first == "property":
            if len(line.tokens) != 2:
                raise line.error("expected 'property <key>=<value>'", first_col)
            col, tok = line.tokens[1]
            key, value = _kv(line, tok, col)
            raw["props"].append(Attr.kw(key, value))
            return
        lhs, rhs, col = line.assignment()
        if lhs == "hosts":
            raw["hosts"] = _id_list(line, rhs, col)
        elif lhs == "perf":
            raw["perf"] = None if rhs == "dynamic" else _real(line, rhs, col)
        else:
            raise line.error(f"unknown key {lhs!r} in [broker]", first_col)

    def line_host(self, line: _Line, ident: str) -> None:
        first_col, first = line.tokens[0]
        if first != "resource":
            raise line.error(f"unknown key {first!r} in [host]", first_col)
        if len(line.tokens) < 2:
            raise line.error("resource needs an identifier", first_col)
        rcol, rid = line.tokens[1]
        _check_id(line, rid, rcol)
        self.declare("resource", rid, line, rcol)
        fields: dict[str, tuple[str, int]] = {}
        for col, tok in line.tokens[2:]:
            key, value = _kv(line, tok, col)
            if key not in ("key", "keyword", "capacity", "unit", "type"):
                raise line.error(f"unknown resource field {key!r}", col)
            if key in fields:
                raise line.error(f"repeated resource field {key!r}", col)
            fields[key] = (value, col)
        if "key" not in fields:
            raise line.error("resource needs key=<attr-key>", rcol)
        attr = self._attr(line, fields, rcol)
        type_tag, tcol = fields.get("type", (DIRECT, rcol))
        if type_tag not in (DIRECT, HANDLED):
            raise line.error(f"type must be direct or handled, got {type_tag!r}", tcol)
        self.host_raw[ident].append(PhysicalResource(rid, ident, attr, type_tag))

    def _attr(self, line: _Line, fields: dict, column: int) -> Attr:
        key = fields["key"][0]
        if ("keyword" in fields) == ("capacity" in fields):
            raise line.error("exactly one of keyword= or capacity= is required", column)
        if "keyword" in fields:
            if "unit" in fields:
                raise line.error("unit= only applies to capacity", fields["unit"][1])
            return Attr.kw(key, fields["keyword"][0])
        value, vcol = fields["capacity"]
        number = _real(line, value, vcol)
        if number < 0:
            raise line.error("capacity must be >= 0", vcol)
        return Attr.cap(key, number, fields.get("unit", ("", 0))[0])

    def line_job(self, line: _Line, ident: str) -> None:
        raw = self.job_raw[ident]
        first_col, first = line.tokens[0]
        if first == "require":
            if len(line.tokens) != 3 or line.tokens[1][1] not in ("broker", "policy"):
                raise line.error("expected 'require broker <k>=<v>' or 'require policy <name>'",
                                 first_col)
            col, tok = line.tokens[2]
            if line.tokens[1][1] == "broker":
                raw["broker"].append(Attr.kw(*_kv(line, tok, col)))
            else:
                raw["policy"].append((_check_id(line, tok, col), line.number))
            return
        if first == "process":
            self._process_line(line, raw, ident)
            return
        lhs, rhs, col = line.assignment()
        if lhs == "user":
            raw["user"] = _check_id(line, rhs, col)
        elif lhs == "host":
            raw["host"] = _check_id(line, rhs, col)
        else:
            raise line.error(f"unknown key {lhs!r} in [job]", first_col)

    def _process_line(self, line: _Line, raw: dict, job: str) -> None:
        toks = line.tokens
        if len(toks) < 4 or toks[2][1] != "needs":
            raise line.error("expected 'process <id> needs <attr-key>=<value>' or "
                             "'process <id> needs <attr-key>>=<real> unit=<u>'", toks[0][0])
        pcol, pid = toks[1]
        _check_id(line, pid, pcol)
        if pid not in raw["procs"]:
            self.declare("process", pid, line, pcol)
            raw["procs"][pid] = []
        ncol, need = toks[3]
        extra = toks[4:]
        if ">=" in need:
            key, value = need.split(">=", 1)
            if not key or not value:
                raise line.error(f"malformed capacity need {need!r}", ncol)
            unit = ""
            for col, tok in extra:
                k, v = _kv(line, tok, col)
                if k != "unit" or unit:
                    raise line.error(f"unexpected {tok!r}", col)
                unit = v
            number = _real(line, value, ncol + len(key) + 2)
            if number < 0:
                raise line.error("capacity must be >= 0", ncol)
            attr = Attr.cap(key, number, unit)
        else:
            key, value = _kv(line, need, ncol)
            if extra:
                raise line.error(f"unexpected {extra[0][1]!r}", extra[0][0])
            attr = Attr.kw(key, value)
        raw["procs"][pid].append(attr)

    def line_policy(self, line: _Line, ident: str) -> None:
        first_col, first = line.tokens[0]
        lhs, rhs, col = line.assignment()
        parts = lhs.split()
        if len(parts) != 2 or parts[0] != "weight":
            raise line.error(f"unknown key {lhs!r} in [policy]", first_col)
        weights = dict(self.s.policies[ident].weights)
        if parts[1] in weights:
            raise line.error(f"repeated weight for {parts[1]!r}", first_col)
        weights[parts[1]] = _real(line, rhs, col)
        self.s.policies[ident] = RankPolicy(ident, weights)

    def line_fault(self, line: _Line, ident: None) -> None:
        first_col, kind = line.tokens[0]
        if kind not in FAULT_KINDS:
            raise line.error(f"unknown fault kind {kind!r}", first_col)
        fields = {}
        for col, tok in line.tokens[1:]:
            k, v = _kv(line, tok, col)
            if k not in ("process", "at") or k in fields:
                raise line.error(f"unexpected {tok!r}", col)
            fields[k] = (v, col)
        if set(fields) != {"process", "at"}:
            raise line.error("expected process=<id> at=<step>", first_col)
        process = _check_id(line, *fields["process"])
        at = _int(line, *fields["at"])
        self.s.faults.append(Fault(kind, process, at))

    def line_config(self, line: _Line, ident: None) -> None:
        lhs, rhs, col = line.assignment()
        if lhs in self.config:
            raise line.error(f"repeated config key {lhs!r}", line.tokens[0][0])
        if lhs == "choose":
            if rhs not in CHOOSE_MODES:
                raise line.error(f"choose must be one of {CHOOSE_MODES}", col)
            self.config["choose"] = rhs
        elif lhs == "seed":
            self.config["seed"] = _int(line, rhs, col, 0, (1 << 64) - 1)
        elif lhs == "mode":
            if rhs not in MODES:
                raise line.error(f"mode must be one of {MODES}", col)
            self.config["mode"] = rhs
        elif lhs in ("matchmaking", "broker_matchmaking", "host_matchmaking"):
            if rhs not in MATCHMAKING:
                raise line.error(f"{lhs} must be base or refined", col)
            self.config[lhs] = rhs
        elif lhs == "stall_limit":
            self.config["stall_limit"] = _int(line, rhs, col, 1)
        elif lhs == "max_steps":
            self.config["max_steps"] = _int(line, rhs, col, 0)
        else:
            raise line.error(f"unknown key {lhs!r} in [config]", line.tokens[0][0])

    # -- assembly

    def finish(self) -> None:
        s = self.s
        for h, resources in self.host_raw.items():
            for res in resources:
                s.resources[res.id] = res
        for b, raw in self.broker_raw.items():
            prop_ids = []
            for n, attr in enumerate(raw["props"], start=1):
                pid = f"{b}:prop{n}"
                s.properties[pid] = Property(pid, attr)
                prop_ids.append(pid)
            s.brokers[b] = Broker(b, tuple(prop_ids), raw["hosts"], raw["perf"])
        for h, resources in self.host_raw.items():
            managed_by = tuple(b for b, raw in self.broker_raw.items() if h in raw["hosts"])
            s.hosts[h] = Host(h, tuple(r.id for r in resources), managed_by)
        for j, raw in self.job_raw.items():
            reqs = []
            for n, attr in enumerate(raw["broker"], start=1):
                rid = f"{j}:req{n}"
                s.requirements[rid] = Requirement(rid, attr, "broker-property")
                reqs.append(rid)
            for n, (name, _) in enumerate(raw["policy"]):
                rid = f"{j}:policy" if n == 0 else f"{j}:policy{n + 1}"
                s.requirements[rid] = Requirement(rid, Attr.kw("policy", name), "policy")
                reqs.append(rid)
            procs = []
            for p, needs in raw["procs"].items():
                ars = []
                for n, attr in enumerate(needs, start=1):
                    aid = f"{p}:ar{n}"
                    s.abstract_resources[aid] = AbstractResource(aid, attr)
                    ars.append(aid)
                s.processes[p] = Process(p, j, tuple(ars), task_id(p))
                procs.append(p)
                reqs.extend(ars)
            s.jobs[j] = Job(j, raw["user"] or "", tuple(reqs), tuple(procs), raw["host"])
        cfg = dict(self.config)
        both = cfg.pop("matchmaking", None)
        if both is not None:
            cfg.setdefault("broker_matchmaking", both)
            cfg.setdefault("host_matchmaking", both)
        s.config = Config(**cfg)


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; raises :class:`ScenarioError` with line/column."""
    return _Parser().parse(text)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# -- serialization -----------------------------------------------------------

def _fmt_real(x: float) -> str:
    return repr(float(x))


def _fmt_attr_need(attr: Attr) -> str:
    if attr.kind == "keyword":
        return f"{attr.key}={attr.value}"
    text = f"{attr.key}>={_fmt_real(attr.value)}"
    return text + (f" unit={attr.unit}" if attr.unit else "")


def serialize_scenario(s: Scenario) -> str:
    out: list[str] = []
    c = s.config
    out += ["[config]", f"choose = {c.choose}", f"seed = {c.seed}", f"mode = {c.mode}",
            f"broker_matchmaking = {c.broker_matchmaking}",
            f"host_matchmaking = {c.host_matchmaking}",
            f"stall_limit = {c.stall_limit}", f"max_steps = {c.max_steps}", ""]
    for name, pol in s.policies.items():
        out.append(f"[policy {name}]")
        out += [f"weight {k} = {_fmt_real(w)}" for k, w in pol.weights.items()]
        out.append("")
    for u in s.users.values():
        out.append(f"[user {u.id}]")
        out.append(f"can_login = {', '.join(u.can_login)}")
        out.append(f"can_use = {', '.join(u.can_use)}")
        out += [f"local {h} = {name}" for h, name in u.local_ids.items()]
        out.append("")
    for b in s.brokers.values():
        out.append(f"[broker {b.id}]")
        for pid in b.properties:
            a = s.properties[pid].attr
            out.append(f"property {a.key}={a.value}")
        out.append(f"hosts = {', '.join(b.hosts)}")
        out.append("perf = dynamic" if b.perf is None else f"perf = {_fmt_real(b.perf)}")
        out.append("")
    for h in s.hosts.values():
        out.append(f"[host {h.id}]")
        for rid in h.resources:
            r = s.resources[rid]
            a = r.attr
            if a.kind == "keyword":
                val = f"keyword={a.value}"
            else:
                val = f"capacity={_fmt_real(a.value)}" + (f" unit={a.unit}" if a.unit else "")
            out.append(f"resource {rid} key={a.key} {val} type={r.type_tag}")
        out.append("")
    for j in s.jobs.values():
        out.append(f"[job {j.id}]")
        out.append(f"user = {j.owner}")
        if j.host is not None:
            out.append(f"host = {j.host}")
        for rid in j.requirements:
            req = s.requirements.get(rid)
            if req is None:
                continue
            if req.role == "broker-property":
                out.append(f"require broker {req.attr.key}={req.attr.value}")
            elif req.role == "policy":
                out.append(f"require policy {req.attr.value}")
        for p in j.processes:
            for ar in s.processes[p].requests:
                out.append(f"process {p} needs {_fmt_attr_need(s.abstract_resources[ar].attr)}")
        out.append("")
    if s.faults:
        out.append("[fault]")
        out += [f"{f.kind} process={f.process} at={f.at}" for f in s.faults]
        out.append("")
    return "\n".join(out)


# -- validation --------------------------------------------------------------

def validate_scenario(s: Scenario) -> list[ValidationIssue]:
    """Every violated clause, in a stable order; an empty list means valid."""
    issues: list[ValidationIssue] = []

    def add(code: str, message: str) -> None:
        issues.append(ValidationIssue(code, message))

    c = s.config
    if c.mode not in MODES:
        add("CONFIG_INVALID", f"unknown mode {c.mode!r}")
    if c.choose not in CHOOSE_MODES:
        add("CONFIG_INVALID", f"unknown choose mode {c.choose!r}")
    for key in ("broker_matchmaking", "host_matchmaking"):
        if getattr(c, key) not in MATCHMAKING:
            add("CONFIG_INVALID", f"{key} must be base or refined")
    if c.stall_limit < 1:
        add("CONFIG_INVALID", "stall_limit must be >= 1")
    if c.max_steps < 0:
        add("CONFIG_INVALID", "max_steps must be >= 0")

    if not s.jobs:
        add("NO_JOBS", "no jobs declared")
    for u in s.users.values():
        if not u.can_use:
            add("USER_NO_RESOURCE", f"user {u.id} can use no physical resource")
        for h in u.can_login:
            if h not in s.hosts:
                add("USER_UNKNOWN_HOST", f"user {u.id} can_login references unknown host {h}")
        for pr in u.can_use:
            if pr not in s.resources:
                add("USER_UNKNOWN_RESOURCE",
                    f"user {u.id} can_use references unknown resource {pr}")
        for h in u.local_ids:
            if h not in u.can_login:
                add("LOCAL_NOT_LOGIN", f"user {u.id} has a local id on {h} without can_login")
    for b in s.brokers.values():
        if b.perf is not None and b.perf < 0:
            add("BROKER_PERF_NEGATIVE", f"broker {b.id} has negative perf")
        for h in b.hosts:
            if h not in s.hosts:
                add("BROKER_UNKNOWN_HOST", f"broker {b.id} references unknown host {h}")
    for h in s.hosts.values():
        if not h.resources:
            add("HOST_NO_RESOURCE", f"host {h.id} has no physical resource")
    for name, pol in s.policies.items():
        if not any(w != 0 for w in pol.weights.values()):
            add("POLICY_NO_WEIGHT", f"policy {name} has no nonzero weight")
        if any(w < 0 for w in pol.weights.values()):
            add("POLICY_NEGATIVE_WEIGHT", f"policy {name} has a negative weight")
    for j in s.jobs.values():
        if j.owner not in s.users:
            add("JOB_UNKNOWN_USER", f"job {j.id} owner {j.owner or '<none>'} is not declared")
        if not j.processes:
            add("JOB_NO_PROCESS", f"job {j.id} has no process")
        policies = [s.requirements[r] for r in j.requirements
                    if r in s.requirements and s.requirements[r].role == "policy"]
        if len(policies) > 1:
            add("JOB_MULTIPLE_POLICY", f"job {j.id} requires more than one policy")
        for req in policies:
            if req.attr.value not in s.policies:
                add("POLICY_UNDECLARED", f"job {j.id} requires undeclared policy {req.attr.value}")
        if j.host is not None and j.host not in s.hosts:
            add("JOB_UNKNOWN_HOST", f"job {j.id} names unknown host {j.host}")
        if c.mode == "local" and j.host is None:
            add("JOB_NO_HOST", f"job {j.id} needs 'host =' in local mode")
    for p in s.processes.values():
        if not p.requests:
            add("PROC_NO_REQUEST", f"process {p.id} requests no abstract resource")
    fault_kinds: dict[tuple[str, int], set] = {}
    for f in s.faults:
        if f.process not in s.processes:
            add("FAULT_UNKNOWN_PROCESS", f"{f.kind} fault references unknown process {f.process}")
        if f.at < 0:
            add("FAULT_NEGATIVE_STEP", f"{f.kind} fault on {f.process} at negative step")
        fault_kinds.setdefault((f.process, f.at), set()).add(f.kind)
    for (p, at), kinds in fault_kinds.items():
        if len(kinds) > 1:
            add("FAULT_CONFLICT", f"process {p} has both abort and terminate at step {at}")
    return issues
