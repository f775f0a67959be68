import copy
import csv
import io
import itertools

import pytest

from conftest import linear_problem, two_segment_problem
from railode.plan import (Plan, PlanError, TrainStep, export, extract_plan, trajectory_csv,
                          validate_plan)
from railode.rail import (AbsoluteTiming, Connection, Ordering, TrainSpec, Visit, encode)
from railode.run import solve_formula


def solve_plan(problem):
    enc = encode(problem)
    r = solve_formula(enc.formula)
    assert r.sat
    return extract_plan(enc, r.model, r.theory)


@pytest.fixture(scope="module")
def track():
    p = two_segment_problem(J=10)
    return p, solve_plan(p)


@pytest.fixture(scope="module")
def station():
    p = linear_problem(J=12, stop=True)
    return p, solve_plan(p)


def test_solver_plan_is_valid(track, station):
    for p, plan in (track, station):
        assert validate_plan(plan, p) == []


def test_visits_on_linear_track(track):
    _, plan = track
    events = {(v.node, v.kind) for v in plan.visits}
    assert ("A", "departure") in events and ("B", "arrival") in events


def test_time_is_prefix_sum(track):
    _, plan = track
    assert plan.t[0] == 0.0
    for j in range(plan.J):
        assert plan.t[j + 1] == pytest.approx(plan.t[j] + plan.tau[j], abs=1e-12)
        assert plan.t[j + 1] > plan.t[j]


def test_station_stop_respected(station):
    _, plan = station
    kinds = [(v.node, v.kind) for v in plan.visits if v.node == "n2"]
    assert kinds == [("n2", "arrival"), ("n2", "departure")]


def test_json_roundtrip(track):
    _, plan = track
    back = Plan.from_json(plan.to_json())
    assert back == plan


def test_malformed_plan():
    with pytest.raises(PlanError):
        Plan.from_json("{\"t\": [0]}")
    with pytest.raises(PlanError):
        Plan.from_json("not json")


def test_csv_export(track, tmp_path):
    _, plan = track
    rows = list(csv.reader(io.StringIO(trajectory_csv(plan, "T1"))))
    assert rows[0] == ["time", "d", "v", "segment"]
    times = [float(r[0]) for r in rows[1:]]
    assert len(times) > 10 and all(a < b for a, b in zip(times, times[1:]))
    (path,) = export(plan, "csv", tmp_path / "traj.csv")
    assert open(path).read() == trajectory_csv(plan, "T1")
    (jpath,) = export(plan, "json", tmp_path / "plan.json")
    assert Plan.from_json(open(jpath).read()) == plan


def test_empty_plan_csv_is_header_only():
    assert trajectory_csv(Plan([0.0], [1.0], {"T1": []}), "T1") == "time,d,v,segment\n"


def _rules(violations):
    return {v.rule for v in violations}


def test_mutual_violation(track):
    p, plan = track
    p2 = copy.deepcopy(p)
    p2.trains = p.trains + [TrainSpec("T2")]
    p2.connections = p.connections + [Connection("T2", p.connections[0].nodes)]
    bad = copy.deepcopy(plan)
    bad.trains["T2"] = copy.deepcopy(plan.trains["T1"])
    viol = validate_plan(bad, p2)
    k = next(j for j, s in enumerate(plan.trains["T1"]) if s.front is not None)
    assert any(v.rule == "mutual" and v.step == k for v in viol)


def test_speeding_into_segment_detected(track):
    p, plan = track
    bad = copy.deepcopy(plan)
    steps = bad.trains["T1"]
    j = next(j for j in range(1, plan.J + 1) if steps[j].front != steps[j - 1].front and steps[j].front)
    lim = p.network.segment[steps[j].front].limit
    steps[j - 1].v1 = steps[j].v0 = lim + 1e-3
    assert {"dynamics", "limit"} & _rules(validate_plan(bad, p))


def test_trajectory_drift_detected(track):
    p, plan = track
    bad = copy.deepcopy(plan)
    s = next(s for s in bad.trains["T1"] if s.mode == "acc")
    s.d1 += 1e-4
    assert "dynamics" in _rules(validate_plan(bad, p))


def test_flag_inconsistency_detected(track):
    p, plan = track
    bad = copy.deepcopy(plan)
    bad.trains["T1"][-1].finished = False
    assert validate_plan(bad, p)


def test_time_tampering_detected(track):
    p, plan = track
    bad = copy.deepcopy(plan)
    bad.t[3] += 1.0
    assert "time" in _rules(validate_plan(bad, p))


def test_schedule_checked(track):
    p, plan = track
    p2 = copy.deepcopy(p)
    arrive = next(v for v in plan.visits if v.node == "B")
    p2.schedule = [AbsoluteTiming(Visit("T1", "B", "arrival"), "<", arrive.time / 2)]
    assert "schedule" in _rules(validate_plan(plan, p2))
    p2.schedule = [Ordering(Visit("T1", "A", "departure"), "<", Visit("T1", "B", "arrival"))]
    assert validate_plan(plan, p2) == []


def test_validator_does_not_need_solver(track):
    p, plan = track
    again = Plan.from_json(plan.to_json())
    assert validate_plan(again, copy.deepcopy(p)) == []
