"""Minimal abstract state machine kernel.

A state is a finite interpretation of declared functions: a mapping from
locations ``(function, args)`` to values, where an absent location reads as
``UNDEF``.  Universe membership is an ordinary unary boolean function whose
name is the universe name (``PROCESS(p)``), mirrored into a set per universe
so membership scans are cheap.

One step evaluates every agent program against the same immutable snapshot,
collects all staged updates into one update set, checks it for consistency
and fires it atomically.

Seeded ``choose`` uses the splitmix64 finalizer as its mixing function::

    mix64(z):  z += 0x9E3779B97F4A7C15
               z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
               z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
               return z ^ (z >> 31)                       (all mod 2**64)

    H(seed, step, call) = mix64(mix64(mix64(seed) ^ step) ^ call)

and selects ``sorted(candidates)[H(seed, step, call) % n]``.  ``call`` counts
``choose`` invocations within a step, in agent order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Iterator, NamedTuple, Sequence

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
RESERVE = "reserve"


class _Undef:
    """The distinguished ``undef`` element; distinct from ``False``."""

    _instance: _Undef | None = None

    def __new__(cls) -> _Undef:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "undef"

    def __bool__(self) -> bool:
        return False

    def __copy__(self) -> _Undef:
        return self

    def __deepcopy__(self, memo: dict) -> _Undef:
        return self

    def __reduce__(self) -> str:
        return "UNDEF"


UNDEF = _Undef()


class SignatureError(KeyError):
    """Undeclared function name or wrong arity."""


class StagingError(TypeError):
    """Value does not belong to the codomain of the location's function."""


class Conflict(NamedTuple):
    location: Location
    values: tuple
    origins: tuple


class EngineFault(RuntimeError):
    """Raised when an inconsistent update set would be fired."""

    def __init__(self, conflicts: Sequence[Conflict]):
        self.conflicts = list(conflicts)
        lines = []
        for c in self.conflicts:
            who = ", ".join(f"{a}/{r}" for a, r in c.origins if a is not None) or "?"
            lines.append(f"{format_location(c.location)} <- {list(c.values)!r} by {who}")
        super().__init__("inconsistent update set: " + "; ".join(lines))


@dataclass(frozen=True)
class Codomain:
    """Value domain of a function: bool, int, real, keyword (closed set) or element."""

    kind: str
    choices: frozenset = frozenset()

    def accepts(self, value: Any) -> bool:
        if value is UNDEF:
            return True
        if self.kind == "bool":
            return isinstance(value, bool)
        if self.kind == "int":
            return isinstance(value, int) and not isinstance(value, bool)
        if self.kind == "real":
            return isinstance(value, (int, float)) and not isinstance(value, bool)
        if self.kind == "keyword":
            return isinstance(value, str) and (not self.choices or value in self.choices)
        if self.kind == "element":
            return isinstance(value, str)
        return True

    def parse(self, text: str) -> Any:
        """Inverse of :func:`format_value` for this codomain."""
        if text == "undef":
            return UNDEF
        if self.kind == "bool":
            if text not in ("true", "false"):
                raise ValueError(f"not a boolean: {text!r}")
            return text == "true"
        if self.kind == "int":
            return int(text)
        if self.kind == "real":
            return float(text)
        return text


BOOL = Codomain("bool")
INT = Codomain("int")
REAL = Codomain("real")
ANY = Codomain("any")


def keyword(*choices: str) -> Codomain:
    return Codomain("keyword", frozenset(choices))


def element(*universes: str) -> Codomain:
    return Codomain("element", frozenset(universes))


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    arity: int
    codomain: Codomain
    universe: bool = False


class Signature:
    """Declared function names with arities and codomains."""

    def __init__(self) -> None:
        self._decls: dict[str, FunctionDecl] = {}
        self.declare(RESERVE, 0, INT)

    def declare(self, name: str, arity: int, codomain: Codomain = ANY) -> FunctionDecl:
        if name in self._decls:
            raise ValueError(f"function {name!r} already declared")
        decl = FunctionDecl(name, arity, codomain)
        self._decls[name] = decl
        return decl

    def declare_universe(self, name: str) -> FunctionDecl:
        if name in self._decls:
            raise ValueError(f"function {name!r} already declared")
        decl = FunctionDecl(name, 1, BOOL, universe=True)
        self._decls[name] = decl
        return decl

    def __contains__(self, name: object) -> bool:
        return name in self._decls

    def __getitem__(self, name: str) -> FunctionDecl:
        try:
            return self._decls[name]
        except KeyError:
            raise SignatureError(f"undeclared function {name!r}") from None

    def __iter__(self) -> Iterator[FunctionDecl]:
        return iter(self._decls.values())

    @property
    def universes(self) -> list[str]:
        return [d.name for d in self._decls.values() if d.universe]

    def check(self, loc: Location) -> FunctionDecl:
        decl = self[loc.function]
        if len(loc.args) != decl.arity:
            raise SignatureError(
                f"{loc.function} has arity {decl.arity}, got {len(loc.args)} args"
            )
        return decl


class Location(NamedTuple):
    function: str
    args: tuple = ()


def loc(function: str, *args: str) -> Location:
    return Location(function, tuple(args))


class Update(NamedTuple):
    location: Location
    value: Any
    origin: tuple | None = None


def format_location(location: Location) -> str:
    return f"{location.function}({','.join(location.args)})"


def parse_location(text: str) -> Location:
    name, _, rest = text.partition("(")
    if not rest.endswith(")"):
        raise ValueError(f"malformed location {text!r}")
    inner = rest[:-1]
    return Location(name, tuple(inner.split(",")) if inner else ())


def format_value(value: Any) -> str:
    if value is UNDEF:
        return "undef"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _value_key(value: Any) -> tuple:
    # keeps True distinct from 1 and 1.0
    return (type(value).__name__, value)


class UpdateSet:
    """Staged writes.  Duplicates are kept; consistency is checked separately."""

    def __init__(self, signature: Signature | None = None,
                 updates: Iterable[Update] = ()) -> None:
        self.signature = signature
        self._updates: list[Update] = list(updates)

    def stage(self, location: Location, value: Any, origin: tuple | None = None) -> UpdateSet:
        if self.signature is not None:
            decl = self.signature.check(location)
            if not decl.codomain.accepts(value):
                raise StagingError(
                    f"{value!r} is not in the codomain of {location.function} "
                    f"({decl.codomain.kind})"
                )
            if decl.codomain.kind == "real" and isinstance(value, int):
                value = float(value)
        self._updates.append(Update(location, value, origin))
        return self

    def __len__(self) -> int:
        return len(self._updates)

    def __iter__(self) -> Iterator[Update]:
        return iter(self._updates)

    def __getitem__(self, index):
        return self._updates[index]

    def locations(self) -> set[Location]:
        return {u.location for u in self._updates}


def stage(update_set: UpdateSet, location: Location, value: Any) -> UpdateSet:
    return update_set.stage(location, value)


def check_consistency(update_set: Iterable[Update]) -> list[Conflict]:
    """Every location written with two distinct values; empty list means consistent."""
    seen: dict[Location, dict[tuple, Any]] = {}
    origins: dict[Location, list] = {}
    for u in update_set:
        seen.setdefault(u.location, {}).setdefault(_value_key(u.value), u.value)
        origins.setdefault(u.location, []).append(u.origin or (None, None))
    conflicts = []
    for location, values in seen.items():
        if len(values) > 1:
            conflicts.append(Conflict(location, tuple(values.values()),
                                      tuple(dict.fromkeys(origins[location]))))
    return conflicts


class GridState:
    """Interpretation of the dynamic functions plus universe membership."""

    __slots__ = ("signature", "_interp", "_universes", "_all_members")

    def __init__(self, signature: Signature, interp: dict | None = None,
                 universes: dict[str, set] | None = None) -> None:
        self.signature = signature
        self._interp: dict[Location, Any] = interp if interp is not None else {}
        if universes is None:
            universes = {name: set() for name in signature.universes}
            for location, value in self._interp.items():
                if location.function in universes and value is True:
                    universes[location.function].add(location.args[0])
        self._universes = universes
        self._all_members: set | None = None

    def read(self, location: Location) -> Any:
        self.signature.check(location)
        return self._interp.get(location, UNDEF)

    def get(self, function: str, *args: str) -> Any:
        """Unchecked fast read used by rule bodies."""
        # a plain tuple hashes and compares equal to the Location
        return self._interp.get((function, args), UNDEF)

    def member(self, universe: str, element: str) -> bool:
        return element in self._universes[universe]

    def universe(self, name: str) -> frozenset:
        return frozenset(self._universes[name])

    @property
    def universes(self) -> dict[str, frozenset]:
        return {k: frozenset(v) for k, v in self._universes.items()}

    def in_any_universe(self, element: str) -> bool:
        if self._all_members is None:
            self._all_members = set().union(*self._universes.values())
        return element in self._all_members

    @property
    def reserve_counter(self) -> int:
        return self._interp.get(Location(RESERVE, ()), 0)

    def items(self) -> Iterator[tuple[Location, Any]]:
        return iter(self._interp.items())

    def __len__(self) -> int:
        return len(self._interp)

    def copy(self) -> GridState:
        return GridState(self.signature, dict(self._interp),
                         {k: set(v) for k, v in self._universes.items()})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridState):
            return NotImplemented
        if self._interp.keys() != other._interp.keys():
            return False
        return all(_value_key(v) == _value_key(other._interp[k]) for k, v in self._interp.items())

    def __repr__(self) -> str:
        return f"GridState({len(self._interp)} locations)"

    def _write(self, location: Location, value: Any) -> None:
        if value is UNDEF:
            self._interp.pop(location, None)
        else:
            self._interp[location] = value
        members = self._universes.get(location.function)
        if members is not None and self.signature[location.function].universe:
            if value is True:
                members.add(location.args[0])
            else:
                members.discard(location.args[0])
        self._all_members = None


def read(state: GridState, location: Location) -> Any:
    return state.read(location)


def fire(state: GridState, update_set: Iterable[Update]) -> GridState:
    """Apply a consistent update set, returning the successor state."""
    updates = list(update_set)
    conflicts = check_consistency(updates)
    if conflicts:
        raise EngineFault(conflicts)
    nxt = state.copy()
    for u in updates:
        state.signature.check(u.location)
        nxt._write(u.location, u.value)
    return nxt


@dataclass(frozen=True)
class ChoosePolicy:
    mode: str = "lowest-id"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ("lowest-id", "seeded"):
            raise ValueError(f"unknown choose mode {self.mode!r}")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def mix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def choice_hash(seed: int, step: int, call: int) -> int:
    return mix64(mix64(mix64(seed) ^ (step & MASK64)) ^ (call & MASK64))


def choose(candidates: Iterable[str], policy: ChoosePolicy = ChoosePolicy(),
           step: int = 0, call_index: int = 0) -> str | None:
    ordered = sorted(candidates)
    if not ordered:
        return None
    if policy.mode == "lowest-id":
        return ordered[0]
    return ordered[choice_hash(policy.seed, step, call_index) % len(ordered)]


def extend(state: GridState, universe: str) -> tuple[GridState, str]:
    """Import a fresh element from the reserve into ``universe``."""
    if not state.signature[universe].universe:
        raise SignatureError(f"{universe!r} is not a universe")
    counter = state.reserve_counter
    fresh = f"{universe}#{counter}"
    while state.in_any_universe(fresh):
        counter += 1
        fresh = f"{universe}#{counter}"
    nxt = fire(state, [Update(Location(universe, (fresh,)), True),
                       Update(Location(RESERVE, ()), counter + 1)])
    return nxt, fresh


@dataclass(frozen=True)
class Program:
    """One agent's rule: ``body`` reads the snapshot and stages through the context."""

    agent: str
    rule: str
    body: Callable[[StepContext], None]


@dataclass(frozen=True)
class FiredRule:
    agent: str
    rule: str
    updates: tuple


@dataclass
class LintFinding:
    agent: str
    rule: str
    location: Location


class StepContext:
    """What a rule body sees during one step: the snapshot plus staging."""

    def __init__(self, state: GridState, policy: ChoosePolicy = ChoosePolicy(),
                 step: int = 0, lint: bool = False) -> None:
        self.state = state
        self.policy = policy
        self.step = step
        self.updates = UpdateSet(state.signature)
        self.memo: dict = {}
        self.lint_findings: list[LintFinding] = []
        self._lint = lint
        self._calls = 0
        self._reserve = state.reserve_counter
        self._origin: tuple = ("?", "?")

    def read(self, function: str, *args: str) -> Any:
        if self._lint and args:
            self._check_members(function, args)
        return self.state._interp.get((function, args), UNDEF)

    def member(self, universe: str, element: str) -> bool:
        return self.state.member(universe, element)

    def stage(self, function: str, args: tuple, value: Any) -> None:
        self.updates.stage(Location(function, tuple(args)), value, self._origin)

    def choose(self, candidates: Iterable[str]) -> str | None:
        picked = choose(candidates, self.policy, self.step, self._calls)
        self._calls += 1
        return picked

    def extend(self, universe: str) -> str:
        if not self.state.signature[universe].universe:
            raise SignatureError(f"{universe!r} is not a universe")
        fresh = f"{universe}#{self._reserve}"
        while self.state.in_any_universe(fresh):
            self._reserve += 1
            fresh = f"{universe}#{self._reserve}"
        self._reserve += 1
        self.stage(universe, (fresh,), True)
        return fresh

    def _check_members(self, function: str, args: tuple) -> None:
        # only flag elements that were members once (never scalars or fresh ids)
        for a in args:
            if isinstance(a, str) and not self.state.in_any_universe(a) and self._known(a):
                self.lint_findings.append(
                    LintFinding(self._origin[0], self._origin[1], Location(function, args)))
                return

    def _known(self, element: str) -> bool:
        for name in self.state.signature.universes:
            if self.state._interp.get(Location(name, (element,))) is False:
                return True
        return False


def step(state: GridState, programs: Sequence[Program],
         policy: ChoosePolicy = ChoosePolicy(), step_index: int = 0,
         lint: list | None = None) -> tuple[GridState, list[FiredRule]]:
    """Fire all enabled programs simultaneously against ``state``."""
    ctx = StepContext(state, policy, step_index, lint=lint is not None)
    fired: list[FiredRule] = []
    staged = ctx.updates._updates
    for prog in programs:
        start = len(staged)
        ctx._origin = (prog.agent, prog.rule)
        prog.body(ctx)
        if len(staged) > start:
            fired.append(FiredRule(prog.agent, prog.rule, tuple(staged[start:])))
    if ctx._reserve != state.reserve_counter:
        ctx._origin = ("engine", "extend")
        ctx.stage(RESERVE, (), ctx._reserve)
        fired.append(FiredRule("engine", "extend", (ctx.updates[len(ctx.updates) - 1],)))
    if lint is not None:
        lint.extend(ctx.lint_findings)
    conflicts = check_consistency(ctx.updates)
    if conflicts:
        raise EngineFault(conflicts)
    return fire(state, ctx.updates), fired


def contribution(body: Callable[[StepContext], None], state: GridState,
                 policy: ChoosePolicy = ChoosePolicy(), step_index: int = 0) -> UpdateSet:
    """Run a single rule body against ``state`` and return what it stages."""
    ctx = StepContext(state, policy, step_index)
    ctx._origin = ("test", getattr(body, "__name__", "rule"))
    body(ctx)
    return ctx.updates
