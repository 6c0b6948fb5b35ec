import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from dtcsim.analyzer import (AnalysisError, JitterModel, decode_intervals, expected_pulse_widths,
                             interval_statistics, linearity_from_widths, sequence_period_check,
                             sweep_linearity, synthesize, uniformity_test, write_intervals_csv,
                             write_linearity_csv, write_summary_json)
from dtcsim.encoder import TimingParameter
from dtcsim.lfsr import LfsrBank
from dtcsim.serdes import Bitstream, LineConfig

P = TimingParameter


def test_decode_simple_pulse():
    train = decode_intervals(Bitstream.from_bits([1, 1, 1, 0, 0, 0]))
    assert len(train) == 1
    m = train[0]
    assert m.width_bits == 3 and m.width_s == 300e-12 and m.terminated


def test_decode_round_trip_widths():
    train = decode_intervals(synthesize([P(10, 20), P(6, 12)], LineConfig()))
    assert [m.width_s for m in train] == [1e-9, 600e-12]
    assert train.parameters()[0] == P(10, 20)


def test_decode_all_zero():
    assert len(decode_intervals(Bitstream.from_bits([0] * 40))) == 0


def test_unterminated_pulse_flagged():
    train = decode_intervals(Bitstream.from_bits([0, 1, 1, 0, 1, 1]))
    assert train.open_end
    assert [m.terminated for m in train] == [True, False]
    assert len(train.terminated) == 1


def test_fixed_repeats_decode():
    train = decode_intervals(synthesize([P(10, 20)] * 1000, LineConfig()))
    assert len(train) == 1000 and set(train.widths_bits.tolist()) == {10}


def test_expected_widths_merge():
    assert expected_pulse_widths([P(3, 3), P(2, 5), P(0, 4), P(4, 4)]).tolist() == [5, 4]


ok_params = st.lists(st.integers(2, 400).flatmap(
    lambda t: st.tuples(st.integers(1, t - 1), st.just(t))), min_size=1, max_size=25)


@settings(max_examples=150, deadline=None)
@given(ok_params, st.sampled_from([8, 16, 32, 64]))
def test_round_trip_parameters(pairs, w):
    params = [P(h, t) for h, t in pairs]
    train = decode_intervals(synthesize(params, LineConfig(10e9, w)))
    got = train.parameters()
    assert [p.high_bits for p in got] == [p.high_bits for p in params]
    assert [p.total_bits for p in got[:-1]] == [p.total_bits for p in params[:-1]]
    # the final signal absorbs the frame padding, nothing more
    pad = -sum(t for _, t in pairs) % w
    assert got[-1].total_bits == params[-1].total_bits + pad


def test_noiseless_linearity_is_zero():
    rep = sweep_linearity(range(1, 101))
    assert rep.max_abs_dnl == 0 and rep.max_abs_inl == 0
    assert rep.lsb_s == 1e-10


def test_linearity_fixed_total():
    rep = sweep_linearity(range(1, 50), total_bits=64)
    assert rep.max_abs_dnl == 0
    with pytest.raises(AnalysisError):
        sweep_linearity(range(1, 50), total_bits=49)


def test_single_code_linearity():
    rep = sweep_linearity([5])
    assert rep.dnl_lsb.size == 0 and "two codes" in rep.note


def test_empty_sweep():
    with pytest.raises(AnalysisError):
        sweep_linearity([])


def test_inl_is_prefix_sum():
    rng = np.random.default_rng(3)
    widths = np.arange(20) + rng.normal(0, 0.05, 20)
    rep = linearity_from_widths(np.arange(20), widths, 1e-10)
    assert np.array_equal(rep.inl_lsb, np.cumsum(rep.dnl_lsb))
    # hand check of the first entries
    assert rep.dnl_lsb[0] == pytest.approx(widths[1] - widths[0] - 1)


def test_jittered_linearity_scale():
    sigma, repeats = 2e-12, 1000
    rep = sweep_linearity(range(1, 101), jitter=JitterModel(sigma, seed=11), repeats=repeats)
    # each averaged width carries sqrt(2)*sigma/sqrt(R); a DNL step differences two
    dnl_sd = 2 * sigma / math.sqrt(repeats) / 1e-10
    assert rep.max_abs_dnl < 5 * dnl_sd
    assert rep.max_abs_dnl > 0
    assert np.std(rep.dnl_lsb) == pytest.approx(dnl_sd, rel=0.25)


def test_statistics_noiseless():
    w = JitterModel(0.0).widths(1e-9, 100)
    assert interval_statistics(w) == (pytest.approx(1e-9), 0.0)


def test_statistics_empty():
    with pytest.raises(AnalysisError):
        interval_statistics([])


def test_jitter_quadrature_sum():
    sigma = 1.57e-12
    w = JitterModel(sigma, seed=1).widths(1e-9, 1_000_000)
    mean, std = interval_statistics(w)
    assert std == pytest.approx(math.sqrt(2) * sigma, rel=0.05)
    assert mean == pytest.approx(1e-9, abs=1e-14)


def test_jitter_reproducible():
    a = JitterModel(1e-12, seed=4).widths([1e-9, 2e-9], 10)
    b = JitterModel(1e-12, seed=4).widths([1e-9, 2e-9], 10)
    assert np.array_equal(a, b) and a.shape == (2, 10)


def test_jitter_negative_sigma():
    with pytest.raises(AnalysisError):
        JitterModel(-1.0)


def test_uniformity_default_bank():
    res = uniformity_test(LfsrBank.default().words(1_000_000), bins=64)
    assert res.passed and res.dof == 63


def test_uniformity_constant_fails():
    assert not uniformity_test(np.full(10_000, 17)).passed


def test_uniformity_exact():
    codes = np.tile(np.arange(4096), 3)
    res = uniformity_test(codes)
    assert res.statistic == 0 and res.passed


def test_uniformity_matches_scipy():
    rng = np.random.default_rng(0)
    codes = rng.integers(0, 4096, 50_000)
    res = uniformity_test(codes, bins=64)
    ref = stats.chisquare(np.bincount(codes // 64, minlength=64))
    assert res.statistic == pytest.approx(ref.statistic)
    assert res.p_value == pytest.approx(ref.pvalue)


def test_uniformity_needs_samples():
    with pytest.raises(AnalysisError):
        uniformity_test(np.arange(639), bins=64)


def test_period_check():
    cycle = [10, 20, 30, 40, 50, 60, 70, 80, 90]
    assert sequence_period_check(cycle * 2, cycle)
    bad = cycle * 2
    bad[13] += 1
    assert not sequence_period_check(bad, cycle)
    assert sequence_period_check([5] * 7, [5])
    assert not sequence_period_check([5, 5, 6], [5])
    assert not sequence_period_check(cycle, cycle)


def test_reports(tmp_path):
    train = decode_intervals(synthesize([P(10, 20), P(6, 12)], LineConfig()))
    write_intervals_csv(tmp_path / "i.csv", train)
    lines = (tmp_path / "i.csv").read_text().splitlines()
    assert lines[0] == "pulse_index,start_bit,width_bits,width_s,terminated"
    assert lines[1] == "0,0,10,1e-09,1" and lines[2] == "1,20,6,6e-10,1"
    rep = sweep_linearity([1, 2, 3])
    write_linearity_csv(tmp_path / "l.csv", rep)
    assert (tmp_path / "l.csv").read_text().splitlines()[1:] == ["1,1.0,0.0,0.0", "2,2.0,0.0,0.0", "3,3.0,,"]
    write_summary_json(tmp_path / "s.json", {"a": 1})
    assert json.loads((tmp_path / "s.json").read_text()) == {"a": 1}
