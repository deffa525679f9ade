import pytest
from hypothesis import given, settings, strategies as st

from dramcam import (AccountingFault, DeviceConfig, EnergyModel, LayoutMap,
                     TimingModel, TraceFormatError, account,
                     add_host_assignment, compile_nand_compare, format_report,
                     pre, act, throughput_estimate, trace_cycles)

T = TimingModel()
E = EnergyModel()

commands = st.one_of(
    st.builds(act, st.integers(0, 127), st.integers(0, 60)),
    st.builds(pre, st.integers(0, 60)),
)


def test_empty_trace_is_all_zero():
    report = account([], T, E)
    assert report.latency_cycles == 0
    assert report.latency_ns == 0.0
    assert report.energy_pj == 0.0


def test_n_pres_latency():
    report = account([pre(7)] * 5, T, E)
    assert report.latency_cycles == 35
    assert report.counts["PRE"] == 5 and report.counts["ACT"] == 0


def test_negative_gap_faults():
    from dramcam.trace import Command, CommandKind
    with pytest.raises(TraceFormatError):
        account([Command(CommandKind.PRE, None, -1)], T, E)


def test_nand_compare_latency_matches_independent_summation():
    m = 32
    layout = LayoutMap.for_subarray(2 * m + 16, 8, m)
    trace = compile_nand_compare("01" * 16, layout, T).trace
    report = account(trace, T, E)
    assert report.latency_cycles == sum(c.gap_after for c in trace)
    assert report.latency_ns == pytest.approx(report.latency_cycles * T.clock_ns)
    # known per-bit structure: 6 ACT + 6 PRE per bit, plus 3 + 3 around them
    assert report.counts["ACT"] == 6 * m + 3
    assert report.counts["PRE"] == 6 * m + 3
    assert report.counts["row_copy"] == 2 * m + 1
    assert report.counts["multi_activate"] == m


@given(st.lists(commands, max_size=40), st.lists(commands, max_size=40))
@settings(max_examples=60)
def test_accounting_is_additive(left, right):
    t = TimingModel(strict=False)
    whole = account(left + right, t, E)
    a, b = account(left, t, E), account(right, t, E)
    assert whole.latency_cycles == a.latency_cycles + b.latency_cycles
    assert whole.energy_pj == pytest.approx(a.energy_pj + b.energy_pj)


@given(st.lists(commands, max_size=40), commands)
@settings(max_examples=60)
def test_accounting_is_monotone(trace, extra):
    t = TimingModel(strict=False)
    base = account(trace, t, E)
    more = account(trace + [extra], t, E)
    assert more.latency_cycles >= base.latency_cycles
    assert more.energy_pj >= base.energy_pj


def test_energy_terms():
    e = EnergyModel(act_pj=10, pre_pj=4, micro_op_pj=3, background_mw=0)
    trace = [pre(T.t_rp), act(1, T.t_ras), pre(T.copy_gap), act(2, T.t_ras)]
    report = account(trace, T, e)
    # 2 ACT + 2 PRE + one truncated PRE surcharge
    assert report.energy_pj == pytest.approx(2 * 10 + 2 * 4 + 3)


def test_background_energy_scales_with_latency():
    e = EnergyModel(act_pj=0, pre_pj=0, micro_op_pj=0, background_mw=2.0)
    report = account([pre(8)] * 4, T, e)
    assert report.energy_pj == pytest.approx(2.0 * report.latency_ns)


def test_throughput_scales_linearly_with_banks():
    layout = LayoutMap.for_subarray(32, 8, 4)
    report = account(compile_nand_compare("0101", layout, T).trace, T, E)
    one = throughput_estimate(DeviceConfig(chips=2, banks_per_chip=2), report, 100)
    two = throughput_estimate(DeviceConfig(chips=2, banks_per_chip=4), report, 100)
    assert two.kmers_per_sec == pytest.approx(2 * one.kmers_per_sec)


def test_throughput_roughly_halves_when_m_doubles():
    cfg = DeviceConfig()
    rates = {}
    for m in (16, 32):
        layout = LayoutMap.for_subarray(2 * m + 16, 8, m)
        report = account(compile_nand_compare("0" * m, layout, T).trace, T, E)
        rates[m] = throughput_estimate(cfg, report, 1000).kmers_per_sec
    ratio = rates[16] / rates[32]
    assert 1.8 < ratio < 2.2  # affine latency, so slightly below 2x


def test_throughput_zero_latency_faults():
    from dramcam.metrics import Report
    with pytest.raises(AccountingFault):
        throughput_estimate(DeviceConfig(), Report(), 10)
    good = account([pre(5)], T, E)
    with pytest.raises(AccountingFault):
        throughput_estimate(DeviceConfig(), good, 0)


def test_host_assignment_split_in_report_text():
    report = account([pre(10)] * 10, T, E)
    report = add_host_assignment(report, 4, 25.0)
    assert report.assign_ns == pytest.approx(100.0)
    text = format_report(report)
    assert "search/assign" in text


def test_throughput_assumptions_listed():
    report = account([pre(10), act(0, 28)], T, E)
    est = throughput_estimate(DeviceConfig(), report, 8192)
    assert any("8192" in a for a in est.assumptions)
    assert any("16 chips" in a for a in est.assumptions)
    text = format_report(report, est)
    assert "assumptions:" in text and "Gkmers/s" in text


def test_report_json_round_trips():
    import json
    report = account([pre(3), act(1, 28)], T, E)
    payload = json.loads(report.to_json())
    assert payload["latency_cycles"] == 31
    assert payload["counts"]["ACT"] == 1
