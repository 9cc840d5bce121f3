import dataclasses
import math

import pytest

from bamsim import Model, ParseError, ScenarioError, ValidationError, simulate
from bamsim import scenario
from bamsim.checks import check_all
from bamsim.metrics import summarize

MINI = """
# two hosts, one switch, tiny demand
[topology]
node A host
node B host
node SW switch
link L1 A SW 100
link L2 SW B 100
bottleneck L2

[classes]
class 0 rate 5 ports 30000-30999
class 1 rate 10 ports 31000-31999

[bc]
model MAM
bc 50 50

[demand]
flows A B class 0 count 12 start_cycle 0
flows A B class 1 count 6 start_cycle 1

[run]
cycles 3
cycle_length 100
lsp_lifetime 80
seed 5
stop 18
"""

TIE = """
[topology]
node A host
node B host
link L1 A B 10

[classes]
class 0 rate 10 ports 30000-30000

[bc]
model MAM
bc 10

[demand]
flows A B class 0 count 2

[run]
cycles 2
cycle_length 50
lsp_lifetime 50
seed 1
stop 2
"""

CUT = """
[topology]
node A host
node B host
link L1 A B 100

[classes]
class 0 rate 5 ports 30000-30999

[bc]
model MAM
bc 50

[reconfig]
event hard after_request 5 bc 5

[demand]
flows A B class 0 count 10

[run]
cycles 1
cycle_length 100
lsp_lifetime 1000
seed 3
stop 10
"""


def parse(text=MINI):
    return scenario.parse_text(text, source="<test>")


class TestParsing:
    def test_round_trip_of_every_section(self):
        scn = parse()
        assert [n for n, k in scn.nodes if k == "host"] == ["A", "B"]
        assert [n for n, k in scn.nodes if k == "switch"] == ["SW"]
        assert scn.links == [("L1", "A", "SW", 100.0), ("L2", "SW", "B", 100.0)]
        assert scn.bottleneck == "L2"
        assert [(c.index, c.rate_mbps, c.port_lo, c.port_hi) for c in scn.classes] == [
            (0, 5.0, 30000, 30999),
            (1, 10.0, 31000, 31999),
        ]
        assert scn.model == "MAM"
        assert scn.bc_mbps == [50.0, 50.0]
        assert scn.demands[1].start_cycle == 1
        assert scn.run.cycles == 3
        assert scn.run.cycle_length == 100.0
        assert scn.run.lsp_lifetime == 80.0
        assert scn.run.seed == 5
        assert scn.run.stop == 18

    def test_comments_and_blank_lines_ignored(self):
        scn = parse(MINI.replace("[run]", "# noise\n\n[run]"))
        assert scn.run.stop == 18

    def test_reconfig_lines(self):
        text = MINI.replace(
            "[demand]",
            "[reconfig]\nevent hard after_request 9 bc 30 70\n"
            "event soft at_time 150 bc 40 60\n\n[demand]",
        )
        scn = parse(text)
        hard, soft = scn.reconfigs
        assert (hard.mode, hard.after_request, hard.bc_mbps) == ("hard", 9, [30.0, 70.0])
        assert (soft.mode, soft.at_time, soft.bc_mbps) == ("soft", 150.0, [40.0, 60.0])

    @pytest.mark.parametrize(
        "mangle",
        [
            lambda t: t.replace("[topology]", "[nonsense]"),
            lambda t: t.replace("node A host", "node A router"),
            lambda t: t.replace("class 0 rate 5 ports", "class 0 speed 5 ports"),
            lambda t: t.replace("model MAM", "model FOO"),
            lambda t: t.replace("flows A B class 0", "pipes A B class 0"),
            lambda t: t.replace("cycles 3", "epochs 3"),
            lambda t: "stray line\n" + t,
        ],
    )
    def test_syntax_errors_carry_source_and_line(self, mangle):
        with pytest.raises(ParseError) as err:
            parse(mangle(MINI))
        assert "<test>:" in str(err.value)

    def test_reconfig_trigger_must_be_exactly_one(self):
        bad = MINI.replace("[demand]", "[reconfig]\nevent hard bc 30 70\n\n[demand]")
        with pytest.raises(ParseError):
            parse(bad)
        bad = MINI.replace(
            "[demand]",
            "[reconfig]\nevent hard after_request 3 at_time 9 bc 30 70\n\n[demand]",
        )
        with pytest.raises(ParseError):
            parse(bad)


class TestValidation:
    @pytest.mark.parametrize(
        "mangle,needle",
        [
            (lambda t: t.replace("node B host", "node A host"), "duplicate"),
            (lambda t: t.replace("class 1 rate", "class 2 rate"), "indices"),
            (lambda t: t.replace("rate 5", "rate 0"), "positive"),
            (lambda t: t.replace("ports 31000-31999", "ports 31999-31000"), "port"),
            (lambda t: t.replace("bottleneck L2", "bottleneck L9"), "bottleneck"),
            (lambda t: t.replace("bc 50 50", "bc 50"), "length"),
            (lambda t: t.replace("flows A B", "flows A SW"), "hosts"),
            (lambda t: t.replace("class 1 count", "class 7 count"), "unknown class"),
            (lambda t: t.replace("count 12", "count -1"), "count"),
            (lambda t: t.replace("start_cycle 1", "start_cycle 3"), "start_cycle"),
            (lambda t: t.replace("cycle_length 100", "cycle_length 0"), "out of range"),
            (lambda t: t.replace("stop 18", "stop 17"), "stop"),
        ],
    )
    def test_inconsistent_scenarios_rejected(self, mangle, needle):
        with pytest.raises(ValidationError) as err:
            parse(mangle(MINI))
        assert needle in str(err.value)

    def test_bc_over_capacity_is_a_validation_error(self):
        scn = parse(MINI.replace("bc 50 50", "bc 150 50"))
        with pytest.raises(ValidationError):
            scenario.build(scn)

    def test_rdm_vector_order_is_a_validation_error(self):
        text = MINI.replace("model MAM", "model RDM").replace("bc 50 50", "bc 40 50")
        scn = parse(text)
        with pytest.raises(ValidationError):
            scenario.build(scn)


class TestBuild:
    def test_state_mirrors_the_text(self):
        state, fabric, events = scenario.build(parse())
        assert state.bc_config.model is Model.MAM
        assert state.bc_config.values_kbps == (50000, 50000)
        assert state.topology.links["L1"].capacity_kbps == 100000
        assert [c.max_lsp_kbps for c in state.classes] == [5000, 10000]
        assert events == []
        assert fabric.rule_count() == 0

    def test_reconfig_events_built_in_order(self):
        text = MINI.replace(
            "[demand]",
            "[reconfig]\nevent hard after_request 9 bc 30 70\n"
            "event soft at_time 150 bc 40 60\n\n[demand]",
        )
        _state, _fabric, events = scenario.build(parse(text))
        assert events[0].after_request == 9
        assert events[0].config.values_kbps == (30000, 70000)
        assert events[1].at_time == 150.0


class TestSchedule:
    def test_counts_split_evenly_with_remainder_up_front(self):
        scn = parse()
        schedule = scenario.generate_schedule(scn)
        assert len(schedule) == 18
        per_cycle = {0: [0, 0, 0], 1: [0, 0, 0]}
        for req in schedule:
            cycle = int(req.time // scn.run.cycle_length)
            per_cycle[req.class_index][cycle] += 1
        assert per_cycle[0] == [4, 4, 4]   # 12 over cycles 0..2
        assert per_cycle[1] == [0, 3, 3]   # 6 over cycles 1..2
        # uneven split: 7 requests over 3 cycles lands 3, 2, 2
        text = MINI.replace("count 12", "count 7").replace("stop 18", "stop 13")
        lop = scenario.generate_schedule(parse(text))
        sided = [0, 0, 0]
        for req in lop:
            if req.class_index == 0:
                sided[int(req.time // 100.0)] += 1
        assert sided == [3, 2, 2]

    def test_stream_ids_are_one_based_and_time_ordered(self):
        schedule = scenario.generate_schedule(parse())
        assert [r.lsp_id for r in schedule] == list(range(1, 19))
        times = [r.time for r in schedule]
        assert times == sorted(times)
        for req in schedule:
            cycle = int(req.time // 100.0)
            assert cycle * 100.0 <= req.time < (cycle + 1) * 100.0

    def test_ports_derive_from_stream_position(self):
        for req in scenario.generate_schedule(parse()):
            assert req.src_port == 20000 + req.lsp_id
            lo, hi = (30000, 30999) if req.class_index == 0 else (31000, 31999)
            assert req.dst_port == lo + req.lsp_id % (hi - lo + 1)

    def test_same_seed_same_schedule_different_seed_differs(self):
        a = scenario.generate_schedule(parse())
        b = scenario.generate_schedule(parse())
        assert a == b
        other = parse(MINI.replace("seed 5", "seed 6"))
        c = scenario.generate_schedule(other)
        assert [r.time for r in c] != [r.time for r in a]


class TestSimulate:
    def test_run_drains_completely(self):
        result = simulate(parse())
        state = result.state
        assert sum(state.counters.requested) == 18
        assert state.active_lsps == {}
        for c in range(2):
            assert state.counters.admitted[c] == (
                state.counters.completed[c] + state.counters.preempted[c]
            )
        assert result.fabric.rule_count() == 0

    def test_every_admitted_lsp_lives_exactly_its_lifetime(self):
        result = simulate(parse())
        admits = {e["lsp"]: e["time"] for e in result.journal if e["kind"] == "admit"}
        expires = {e["lsp"]: e["time"] for e in result.journal if e["kind"] == "expire"}
        assert admits
        assert set(admits) == set(expires)
        for lsp_id, t0 in admits.items():
            assert math.isclose(expires[lsp_id] - t0, 80.0)

    def test_stop_short_circuits_but_still_drains(self):
        scn = parse()
        scn.run.stop = 5
        result = simulate(scn)
        assert sum(result.state.counters.requested) == 5
        assert len(result.metrics.records) == 5
        assert result.state.active_lsps == {}

    def test_metrics_record_per_request_in_stream_order(self):
        result = simulate(parse())
        records = result.metrics.records
        assert [r.request_index for r in records] == list(range(1, 19))
        assert all(len(r.util_kbps) == 2 for r in records)
        last = records[-1]
        assert last.blocked == tuple(result.state.counters.blocked)

    def test_journal_totals_match_state_counters(self):
        result = simulate(parse())
        stats = summarize(result.journal)
        counters = result.state.counters
        assert stats["requested"] == counters.requested
        assert stats["admitted"] == counters.admitted
        assert stats["blocked"] == counters.blocked
        assert stats["preempted"] == counters.preempted
        assert stats["completed"] == counters.completed

    def test_on_event_hook_sees_consistent_state_throughout(self):
        seen = []

        def hook(kind, state, fabric):
            seen.append(kind)
            check_all(state, fabric)

        simulate(parse(), on_event=hook)
        assert seen.count("request") == 18
        assert "expire" in seen

    def test_count_triggered_reconfig_fires_after_the_nth_record(self):
        # Nothing expires during this run, so five LSPs hold 25 of the 50
        # Mbps limit when the cut to 5 Mbps lands.  The 5th record must
        # predate the cut's evictions; the 6th must show them.
        result = simulate(parse(CUT))
        records = result.metrics.records
        assert records[4].preempted == (0,)
        assert records[4].util_kbps == (25000,)
        assert records[5].preempted == (4,)
        reconfigs = [e for e in result.journal if e["kind"] == "reconfig"]
        assert len(reconfigs) == 1
        assert reconfigs[0]["time"] == records[4].sim_time

    def test_departures_precede_arrivals_at_equal_times(self, monkeypatch):
        scn = parse(TIE)
        first, second = scenario.generate_schedule(scn)
        forced = dataclasses.replace(second, time=first.time + 50.0)
        monkeypatch.setattr(scenario, "generate_schedule", lambda _scn: [first, forced])
        result = simulate(scn)
        # The link fits one LSP; the second request lands exactly at the
        # first's expiry and must see the freed capacity.
        assert result.state.counters.blocked == [0]
        assert result.state.counters.completed == [2]

    def test_bundled_scenarios_enumerate_and_load(self):
        names = scenario.bundled_names()
        assert names == ["exp1_mam", "exp1_rdm", "exp2_hard", "exp2_soft"]
        scn = scenario.load("exp1_mam")
        assert scn.run.stop == sum(d.count for d in scn.demands)
        with pytest.raises(ScenarioError):
            scenario.load_bundled("exp9_missing")

    def test_load_prefers_filesystem_paths(self, tmp_path):
        p = tmp_path / "mini.scn"
        p.write_text(MINI)
        scn = scenario.load(str(p))
        assert scn.source == str(p)
