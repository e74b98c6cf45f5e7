import json
import logging

import pytest

from aircomp import scenario as scn
from aircomp.cli import resolve_scenario
from aircomp.simulation import run_single
from helpers import make_spec, run_of, spec_dict


class TestLoad:
    def test_bundled_reference_scenario(self):
        spec = resolve_scenario("paper_replica")
        assert (spec.world.x_max, spec.world.y_max) == (400.0, 400.0)
        assert (spec.world.grid_rows, spec.world.grid_cols) == (2, 2)
        assert [(e.x, e.y) for e in spec.edges] == [
            (100.0, 100.0), (300.0, 100.0), (100.0, 300.0), (300.0, 300.0)]
        assert all(e.radius == 100.0 for e in spec.edges)
        assert spec.sim.duration_s == 1000.0
        assert spec.sim.repeats == 50
        assert spec.uavs.capacity == 500.0
        assert [a.name for a in spec.apps] == [
            "entertainment", "multimedia", "rendering", "imgclass"]
        assert dict(spec.sweeps)["uavs"] == (0, 5, 10, 15, 20)

    def test_high_capacity_variant(self):
        spec = resolve_scenario("paper_replica_table1")
        assert spec.uavs.capacity == 1000.0

    def test_edge_outside_world_rejected(self):
        d = spec_dict()
        d["servers"]["edges"][0]["x"] = 500.0
        with pytest.raises(scn.ValidationError, match="outside the world"):
            scn.from_dict(d)

    def test_empty_file_names_required_sections(self):
        with pytest.raises(scn.ValidationError) as err:
            scn.load_scenario("")
        for section in ("apps", "servers", "users"):
            assert section in str(err.value)

    def test_unknown_key_rejected(self):
        d = spec_dict()
        d["users"]["speed_mx"] = 3.0
        with pytest.raises(scn.ValidationError, match="speed_mx"):
            scn.from_dict(d)

    def test_broken_yaml_is_a_parse_error(self):
        with pytest.raises(scn.ParseError):
            scn.load_scenario("users: [unclosed")

    def test_validation_error_carries_field_path(self):
        d = spec_dict()
        d["sim"]["duration_s"] = -5
        with pytest.raises(scn.ValidationError, match="sim.duration_s"):
            scn.from_dict(d)

    def test_event_beyond_duration_rejected(self):
        d = spec_dict(duration=100.0,
                      events=[{"time": 500.0, "kind": "capacity_surge", "multiplier": 2.0}])
        with pytest.raises(scn.ValidationError, match="duration"):
            scn.from_dict(d)

    def test_event_server_must_resolve(self):
        d = spec_dict(events=[{"time": 5.0, "kind": "server_failure", "server": "edge_9"}])
        with pytest.raises(scn.ValidationError, match="edge_9"):
            scn.from_dict(d)

    def test_uav_event_ids_check_fleet_size(self):
        d = spec_dict(uavs=2, events=[{"time": 5.0, "kind": "server_failure",
                                       "server": "uav_1"}])
        scn.from_dict(d)
        d["events"][0]["server"] = "uav_2"
        with pytest.raises(scn.ValidationError):
            scn.from_dict(d)

    def test_preset_fills_uav_latency(self):
        d = spec_dict()
        d["network"] = {"preset": "leo"}
        spec = scn.from_dict(d)
        assert spec.network.uav_latency_s == pytest.approx(2.25e-3)

    def test_preset_conflicts_with_explicit_value(self):
        d = spec_dict()
        d["network"]["preset"] = "lap"
        with pytest.raises(scn.ValidationError, match="preset"):
            scn.from_dict(d)

    def test_round_trip(self):
        spec = resolve_scenario("paper_replica")
        again = scn.load_scenario(scn.dumps_scenario(spec))
        assert again == spec
        assert again.scenario_hash() == spec.scenario_hash()


class TestSweeps:
    def test_reference_grid_size(self):
        spec = resolve_scenario("paper_replica")
        cfgs = scn.expand_sweep(spec)
        assert len(cfgs) == 2 * 5 * 50
        assert cfgs[0].axes == (("users", 80), ("uavs", 0))

    def test_no_sweep_gives_repeats_only(self):
        spec = make_spec(repeats=3)
        cfgs = scn.expand_sweep(spec)
        assert len(cfgs) == 3
        assert all(c.axes == () for c in cfgs)

    def test_duplicate_axis_values_deduplicated_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING):
            spec = make_spec(sweeps={"users": [5, 5, 8]})
        assert dict(spec.sweeps)["users"] == (5, 8)
        assert any("duplicate" in r.message for r in caplog.records)

    def test_unknown_axis_rejected(self):
        with pytest.raises(scn.ValidationError, match="sweeps"):
            make_spec(sweeps={"gremlins": [1, 2]})

    def test_dotted_axis_path(self):
        spec = make_spec(sweeps={"servers.uavs.capacity": [500, 1000]}, uavs=2)
        cfgs = scn.expand_sweep(spec)
        assert {c.spec.uavs.capacity for c in cfgs} == {500.0, 1000.0}

    def test_seed_isolation_when_axis_values_change(self):
        seeds = lambda spec: {(c.axes, c.repeat): c.seed for c in scn.expand_sweep(spec)}
        a = seeds(make_spec(repeats=2, sweeps={"users": [5, 8]}))
        b = seeds(make_spec(repeats=2, sweeps={"users": [5, 8, 12]}))
        for key, seed in a.items():
            assert b[key] == seed

    def test_adding_an_axis_keeps_base_valued_runs(self):
        base = make_spec(repeats=2, uavs=0, sweeps={"users": [5, 8]})
        wider = make_spec(repeats=2, uavs=0, sweeps={"users": [5, 8], "uavs": [0, 2]})
        a = {(dict(c.axes)["users"], c.repeat): c.seed for c in scn.expand_sweep(base)}
        b = {(dict(c.axes)["users"], c.repeat): c.seed
             for c in scn.expand_sweep(wider) if dict(c.axes)["uavs"] == 0}
        assert a == b


class TestDynamicEvents:
    def test_failure_lowers_success_in_a_light_system(self):
        # lightly loaded: killing an edge mid-run forces its users to the
        # cloud, where only the long-tolerance app survives
        base = make_spec(users=12, duration=200.0, seed=9)
        failed = scn.from_dict(spec_dict(
            users=12, duration=200.0, seed=9,
            events=[{"time": 100.0, "kind": "server_failure", "server": "edge_0"}]))
        r_base = run_of(base)
        r_fail = run_of(failed)
        assert r_fail.success_rate < r_base.success_rate

    def test_failure_kills_the_queued_tasks(self):
        failed = scn.from_dict(spec_dict(
            users=40, duration=120.0, seed=3, edge_capacity=300.0,
            events=[{"time": 60.0, "kind": "server_failure", "server": "edge_0"}]))
        res = run_of(failed, collect_tasks=True)
        assert res.killed_by_failure > 0
        killed = [row for row in res.task_rows
                  if row[3] == "edge_0" and row[5] is None and row[4] < 60.0]
        assert len(killed) >= res.killed_by_failure > 0
        assert all(row[9] is False or row[9] == 0 for row in killed)

    def test_restore_brings_a_server_back(self):
        spec = scn.from_dict(spec_dict(
            users=12, duration=200.0, seed=9,
            events=[{"time": 50.0, "kind": "server_failure", "server": "edge_0"},
                    {"time": 60.0, "kind": "server_restore", "server": "edge_0"}]))
        res = run_of(spec)
        base = run_of(make_spec(users=12, duration=200.0, seed=9))
        # a 10 s outage barely dents the run; the server must be serving again
        assert res.success_rate > base.success_rate - 0.05

    def test_capacity_surge_doubles_the_offered_load(self):
        window = []
        for seed in range(4):
            base = run_of(make_spec(users=20, duration=400.0, seed=seed),
                          collect_tasks=True)
            surged = run_of(scn.from_dict(spec_dict(
                users=20, duration=400.0, seed=seed,
                events=[{"time": 200.0, "kind": "capacity_surge", "multiplier": 2.0}])),
                collect_tasks=True)
            count = lambda res: sum(1 for row in res.task_rows if row[4] >= 200.0)
            window.append(count(surged) / count(base))
        ratio = sum(window) / len(window)
        assert 1.75 <= ratio <= 2.25

    def test_user_burst_adds_task_sources(self):
        base = run_of(make_spec(users=10, duration=200.0, seed=2))
        burst = run_of(scn.from_dict(spec_dict(
            users=10, duration=200.0, seed=2,
            events=[{"time": 50.0, "kind": "user_burst", "count": 10,
                     "x": 100.0, "y": 100.0}])))
        assert burst.tasks_total > base.tasks_total * 1.3

    def test_zero_user_burst_is_a_no_op(self):
        base = run_of(make_spec(users=10, duration=200.0, seed=2))
        noop = run_of(scn.from_dict(spec_dict(
            users=10, duration=200.0, seed=2,
            events=[{"time": 50.0, "kind": "user_burst", "count": 0,
                     "x": 100.0, "y": 100.0}])))
        assert (noop.tasks_total, noop.tasks_ok, noop.tier_counts) == \
               (base.tasks_total, base.tasks_ok, base.tier_counts)

    def test_double_failure_is_a_runtime_error(self):
        spec = scn.from_dict(spec_dict(
            users=5, duration=100.0,
            events=[{"time": 10.0, "kind": "server_failure", "server": "edge_0"},
                    {"time": 20.0, "kind": "server_failure", "server": "edge_0"}]))
        from aircomp.servers import InvalidTransition
        with pytest.raises(InvalidTransition):
            run_of(spec)
