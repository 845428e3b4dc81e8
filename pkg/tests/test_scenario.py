from __future__ import annotations

from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import MINIMAL, SCENARIOS
from gridbroker.model import Process
from gridbroker.scenario import (Config, ScenarioError, load_scenario, parse_scenario,
                                 serialize_scenario, validate_scenario)
from scenario_gen import generate


def codes(s):
    return [i.code for i in validate_scenario(s)]


def test_minimal_file_loads():
    s = load_scenario(SCENARIOS / "minimal.scn")
    assert len(s.jobs) == 1 and len(s.hosts) == 1
    assert validate_scenario(s) == []


def test_walkthrough_file_loads(walkthrough):
    assert sorted(walkthrough.brokers) == ["b1", "b2"]
    assert sorted(walkthrough.hosts) == ["h1", "h2", "h3"]
    assert walkthrough.config.broker_matchmaking == "refined"
    assert walkthrough.config.host_matchmaking == "refined"
    assert walkthrough.brokers["b2"].perf is None
    assert walkthrough.brokers["b1"].perf == 0.8


def test_derived_ids(walkthrough):
    j1 = walkthrough.jobs["j1"]
    assert j1.requirements == ("j1:req1", "j1:policy", "p1:ar1", "p1:ar2", "p3:ar1")
    assert walkthrough.brokers["b1"].properties == ("b1:prop1",)
    assert walkthrough.processes["p1"].task == "p1:task"
    assert walkthrough.hosts["h1"].managed_by == ("b1",)


def test_duplicate_host_names_both_lines():
    text = MINIMAL + "\n[host h1]\nresource h1.gpu key=gpu keyword=yes type=direct\n"
    with pytest.raises(ScenarioError) as err:
        parse_scenario(text)
    msg = str(err.value)
    assert "'h1'" in msg and "line 14" in msg and f"line {err.value.line}" in msg


def test_duplicate_across_kinds():
    with pytest.raises(ScenarioError, match="already a host"):
        parse_scenario(MINIMAL + "\n[user h1]\ncan_use = h1.cpu\n")


def test_empty_file():
    with pytest.raises(ScenarioError, match="no jobs declared"):
        parse_scenario("")
    with pytest.raises(ScenarioError, match="no jobs declared"):
        parse_scenario("# only a comment\n[config]\nmode = meta\n")


@pytest.mark.parametrize("snippet,message", [
    ("[bogus x]\n", "unknown section"),
    ("[host h9]\nresource h9.x key=k keyword=v colour=red\n", "unknown resource field"),
    ("[host h9]\nmemory = 4\n", "unknown key"),
    ("[config]\n", "duplicate \\[config\\]"),
    ("[host h9]\nresource h9.x key=k capacity=lots type=direct\n", "real number"),
    ("[host h9]\nresource h9.x key=k capacity=-1 type=direct\n", ">= 0"),
    ("[host h9]\nresource h9.x key=k keyword=v capacity=1 type=direct\n", "exactly one"),
    ("[host h9]\nresource h9.x key=k keyword=v type=remote\n", "direct or handled"),
    ("[fault]\nexplode process=p1 at=1\n", "unknown fault kind"),
    ("[fault]\nabort process=p1 at=-2\n", "out of range"),
    ("[job j9]\nuser = u1\nprocess q needs memory>=x unit=GB\n", "real number"),
    ("[job j9]\nrequire cheese brie\n", "expected 'require"),
    ("[user bad!id]\n", "invalid identifier"),
    ("[user]\n", "needs an identifier"),
    ("[config x]\n", "takes no identifier"),
])
def test_parse_errors(snippet, message):
    with pytest.raises(ScenarioError, match=message) as err:
        parse_scenario(MINIMAL + "\n" + snippet)
    assert err.value.line is not None and err.value.line > MINIMAL.count("\n")


@pytest.mark.parametrize("line,message", [
    ("speed = 3", "unknown key"),
    ("choose = dice", "choose must be"),
    ("stall_limit = 0", "out of range"),
    ("seed = 18446744073709551616", "out of range"),
    ("mode = local", "repeated config key"),
])
def test_config_errors(line, message):
    with pytest.raises(ScenarioError, match=message) as err:
        parse_scenario(MINIMAL.replace("mode = meta", f"mode = meta\n{line}"))
    assert err.value.line == 4


def test_config_bad_mode():
    with pytest.raises(ScenarioError, match="mode must be"):
        parse_scenario(MINIMAL.replace("mode = meta", "mode = grid"))


def test_error_reports_column():
    with pytest.raises(ScenarioError) as err:
        parse_scenario("[job j1]\nuser = u1\nprocess p1 needs memory>=4 unit=GB flavour=x\n")
    assert err.value.line == 3 and err.value.column == 36


def test_content_outside_section():
    with pytest.raises(ScenarioError, match="outside of any section"):
        parse_scenario("mode = meta\n")


def test_matchmaking_shorthand_and_override():
    text = MINIMAL.replace("mode = meta", "mode = meta\nmatchmaking = refined\nhost_matchmaking = base")
    s = parse_scenario(text)
    assert s.config.broker_matchmaking == "refined"
    assert s.config.host_matchmaking == "base"


def test_with_config(minimal):
    s = minimal.with_config(seed=5, mode=None)
    assert s.config.seed == 5 and s.config.mode == "meta"
    assert minimal.config.seed == 0


# -- validation --------------------------------------------------------------------

def test_validate_minimal_ok(minimal):
    assert validate_scenario(minimal) == []


def test_validate_process_without_requests(minimal):
    bad = replace(minimal, processes={"p1": Process("p1", "j1", (), "p1:task")})
    assert "PROC_NO_REQUEST" in codes(bad)


def test_validate_user_without_resources(minimal):
    bad = replace(minimal, users={"u1": replace(minimal.users["u1"], can_use=())})
    assert "USER_NO_RESOURCE" in codes(bad)


def test_validate_reports_every_violation():
    text = """
[config]
mode = local
[policy cheap]
weight memory = 0
[user u1]
can_login = h1, h7
can_use = h1.cpu, h1.gpu
local h8 = bob
[broker b1]
hosts = h1, h9
perf = -1
[host h1]
resource h1.cpu key=cpu_speed capacity=2 unit=GHz type=direct
[job j1]
user = nobody
require policy cheap
require policy pricey
process p1 needs cpu_speed>=1 unit=GHz
[fault]
abort process=p1 at=3
terminate process=p1 at=3
abort process=p42 at=1
"""
    got = set(codes(parse_scenario(text)))
    assert got == {"USER_UNKNOWN_HOST", "USER_UNKNOWN_RESOURCE", "LOCAL_NOT_LOGIN",
                   "BROKER_PERF_NEGATIVE", "BROKER_UNKNOWN_HOST", "POLICY_NO_WEIGHT",
                   "JOB_UNKNOWN_USER", "JOB_MULTIPLE_POLICY", "POLICY_UNDECLARED",
                   "JOB_NO_HOST", "FAULT_CONFLICT", "FAULT_UNKNOWN_PROCESS"}


def test_validate_is_total_on_broken_model(minimal):
    broken = replace(minimal, config=Config(mode="nowhere", choose="dice", stall_limit=0,
                                            max_steps=-1, broker_matchmaking="x"),
                     jobs={}, hosts={"h1": replace(minimal.hosts["h1"], resources=())})
    got = codes(broken)
    assert got.count("CONFIG_INVALID") == 5
    assert "NO_JOBS" in got and "HOST_NO_RESOURCE" in got


# -- round trip ------------------------------------------------------------------------

def test_round_trip_fixtures(walkthrough):
    for s in (walkthrough, load_scenario(SCENARIOS / "minimal.scn")):
        assert parse_scenario(serialize_scenario(s)) == s


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["local", "broker", "meta"]))
def test_round_trip_generated(seed, mode):
    s = generate(seed, mode=mode)
    text = serialize_scenario(s)
    assert parse_scenario(text) == s
    assert serialize_scenario(parse_scenario(text)) == text
