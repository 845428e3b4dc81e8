from __future__ import annotations

from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridbroker.asm import UNDEF, Location, Update, fire
from gridbroker.model import (Attr, Grid, InitializationError, check_structure, compatible,
                              compatible_capacity, compatible_keyword, init_state, task_id)


def test_keyword_exact_match():
    assert compatible_keyword(Attr.kw("arch", "x86_64"), Attr.kw("arch", "x86_64"))


def test_keyword_case_sensitive():
    assert not compatible_keyword(Attr.kw("arch", "x86_64"), Attr.kw("arch", "X86_64"))


def test_keyword_key_mismatch():
    assert not compatible_keyword(Attr.kw("arch", "x86_64"), Attr.kw("os", "x86_64"))


def test_keyword_kind_mismatch_raises():
    with pytest.raises(TypeError):
        compatible_keyword(Attr.kw("arch", "x"), Attr.cap("arch", 1.0))


@pytest.mark.parametrize("need,offer,ok", [(2, 4, True), (4, 4, True), (8, 4, False)])
def test_capacity_examples(need, offer, ok):
    assert compatible_capacity(Attr.cap("memory", need, "GB"), Attr.cap("memory", offer, "GB")) is ok


def test_capacity_unit_or_key_mismatch_raises():
    with pytest.raises(TypeError):
        compatible_capacity(Attr.cap("memory", 1, "GB"), Attr.cap("memory", 1, "MB"))
    with pytest.raises(TypeError):
        compatible_capacity(Attr.cap("memory", 1, "GB"), Attr.cap("disk", 1, "GB"))


def test_compatible_dispatch():
    assert compatible(Attr.kw("os", "linux"), Attr.kw("os", "linux"))
    assert compatible(Attr.cap("memory", 2), Attr.cap("memory", 3))
    assert not compatible(Attr.kw("memory", "2"), Attr.cap("memory", 2))
    assert not compatible(Attr.cap("memory", 1, "GB"), Attr.cap("memory", 1, "MB"))
    assert not compatible(Attr.cap("memory", 1), Attr.cap("disk", 9))


def test_attr_validation():
    with pytest.raises(ValueError):
        Attr.cap("memory", -1)
    with pytest.raises(ValueError):
        Attr.kw("os", "")
    with pytest.raises(ValueError):
        Attr("vector", "k", "v")
    assert Attr.cap("memory", 2).value == 2.0


keys = st.sampled_from(["memory", "cpu_speed"])
caps = st.floats(0, 1e6, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(keys, caps, st.sampled_from(["linux", "aix", "Linux"]))
def test_compatible_reflexive(key, value, word):
    assert compatible(Attr.cap(key, value), Attr.cap(key, value))
    assert compatible(Attr.kw(key, word), Attr.kw(key, word))


@settings(max_examples=200, deadline=None)
@given(keys, caps, caps, caps)
def test_capacity_monotone(key, need, offer, more):
    r, o, o2 = Attr.cap(key, need), Attr.cap(key, offer), Attr.cap(key, max(offer, more))
    if compatible(r, o):
        assert compatible(r, o2)


# -- init_state ------------------------------------------------------------------------

def test_init_minimal(minimal):
    s = init_state(minimal)
    assert s.get("jobState", "j1") is UNDEF
    assert s.get("uses", "p1", "h1.cpu") is False
    assert s.get("mappedBroker", "j1") is UNDEF
    for fn in ("mapped", "task", "procState"):
        assert s.get(fn, "p1") is UNDEF
    assert s.member("PROCESS", "p1") and s.member("TASK", task_id("p1"))
    assert s.get("procRequest", "p1", "p1:ar1") is True
    assert s.member("LOCATION", "h1")


def test_init_enumerates_all_clauses(walkthrough):
    s = init_state(walkthrough)
    for j in walkthrough.jobs:
        for fn in ("jobState", "mappedHost", "mappedBroker"):
            assert s.get(fn, j) is UNDEF
        assert any(s.member("REQUIREMENT", r) for r in walkthrough.jobs[j].requirements)
    for p in walkthrough.processes:
        assert all(s.get("uses", p, pr) is False for pr in walkthrough.resources)
    for u, user in walkthrough.users.items():
        assert any(s.member("PRESOURCE", pr) for pr in user.can_use)
    assert check_structure(s) == []


def test_init_rejects_job_without_requirements(minimal):
    job = replace(minimal.jobs["j1"], requirements=())
    bad = replace(minimal, jobs={"j1": job})
    with pytest.raises(InitializationError) as err:
        init_state(bad)
    assert "request(j, r)" in err.value.clause


def test_init_rejects_user_without_resource(minimal):
    bad = replace(minimal, users={"u1": replace(minimal.users["u1"], can_use=())})
    with pytest.raises(InitializationError):
        init_state(bad)


def test_check_structure_detects_gap(minimal):
    s = fire(init_state(minimal), [Update(Location("REQUIREMENT", ("p1:ar1",)), False)])
    assert check_structure(s)


def test_grid_indexes(walkthrough):
    g = Grid(walkthrough)
    assert g.job_of("p1") == "j1" and g.job_of("PROCESS#0") is None
    assert g.user_of("j2") == "alice"
    assert g.manages("h3", "b2") and not g.manages("h3", "b1")
    assert g.can_use("alice", "h2.cpu") and g.can_login("alice", "h1")
    assert g.local_user("alice", "h2") == "alice01"
    assert g.location("h3.solver") == "h3" and g.rtype("h3.solver") == "handled"
    assert g.belongs_to("h1.mem", "h1")
    assert g.request("j1", "j1:req1")
    assert g.job_policy["j1"].weights == {"cpu_speed": 1.0, "memory": 0.5}
    assert sorted(g.resource_claimants["h2.cpu"]) == ["p1", "p3"]
