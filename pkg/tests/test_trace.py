import pytest

from bcsim.simulator import SimConfig, Simulator, baseline_config
from bcsim.trace import (
    KIND_CTXSWITCH,
    KIND_INVALIDATE,
    KIND_LOAD,
    KIND_STORE,
    TraceError,
    parse_trace,
    run_trace,
)


def test_parse_basic_records():
    records = parse_trace(["R 0x1040\n", "W 0x2000\n", "INV 0xff\n", "CS\n"])
    assert [r.kind for r in records] == [KIND_LOAD, KIND_STORE, KIND_INVALIDATE, KIND_CTXSWITCH]
    assert records[0].addr == 0x1040
    assert records[3].addr is None


def test_parse_skips_comments_and_blanks():
    records = parse_trace(["# header\n", "\n", "   \n", "R 0x0\n"])
    assert len(records) == 1


def test_parse_bad_hex_cites_line():
    with pytest.raises(TraceError) as exc:
        parse_trace(["R 0x10\n", "W 0xZZ\n"])
    assert exc.value.lineno == 2


def test_parse_unknown_opcode_is_error():
    with pytest.raises(TraceError):
        parse_trace(["X 0x10\n"])


def test_parse_rejects_address_too_wide():
    with pytest.raises(TraceError):
        parse_trace(["R 0x1000000000000\n"])  # 13 hex digits


def test_parse_rejects_missing_operand():
    with pytest.raises(TraceError):
        parse_trace(["R\n"])


def test_empty_trace_zero_stats():
    stats = run_trace(Simulator(SimConfig()), [])
    assert stats.accesses == 0
    assert stats.total_latency_cycles == 0
    assert stats.avg_access_latency == 0.0


def test_distinct_cold_loads_all_case_00():
    records = parse_trace([f"R {hex(i * 64)}\n" for i in range(50)])
    stats = run_trace(Simulator(SimConfig()), records)
    assert stats.case_counts["00"] == 50
    assert stats.l1d_misses == 50


def test_load_twice_latency_table():
    records = parse_trace(["R 0x1000\n", "R 0x1000\n"])
    stats = run_trace(Simulator(SimConfig()), records)
    assert stats.total_latency_cycles == 120 + 3


def test_stats_identities_hold():
    lines = []
    for i in range(2000):
        op = ("R", "W", "CS", "INV")[i % 4]
        lines.append("CS\n" if op == "CS" else f"{op} {hex((i * 37 % 500) * 64)}\n")
    records = parse_trace(lines)
    stats = run_trace(Simulator(SimConfig(seed=3)), records)
    assert stats.accesses == sum(stats.case_counts.values())
    assert stats.backup_hits == stats.case_counts["01"] + stats.case_counts["11"]
    assert stats.l1d_hits + stats.l1d_misses == stats.accesses
    assert stats.avg_access_latency == stats.total_latency_cycles / stats.accesses


def test_replay_determinism():
    records = parse_trace([f"R {hex((i * 7 % 300) * 64)}\n" for i in range(3000)])

    def run():
        sim = Simulator(SimConfig(seed=8))
        return run_trace(sim, records).as_dict(), sim.state_digest()

    assert run() == run()


def test_fitting_working_set_equal_misses_in_both_modes():
    # 100 distinct lines, re-walked: fits a 16KB L1D easily
    lines = [f"R {hex(i * 64)}\n" for i in range(100)] * 5
    records = parse_trace(lines)
    backup_cfg = SimConfig(seed=1)
    base_cfg = SimConfig(mode="baseline", l1d=backup_cfg.l1d, seed=1)
    s1 = run_trace(Simulator(backup_cfg), records)
    s2 = run_trace(Simulator(base_cfg), records)
    assert s1.case_counts["00"] == s2.case_counts["00"] == 100
