"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (outside pytest's capture) before
asserting, so `pytest tests/test_acceptance.py -v` doubles as a report.
"""
import math
from fractions import Fraction

import numpy as np
import pytest

from dtcsim import selftest
from dtcsim.analyzer import (JitterModel, decode_intervals, interval_statistics, sweep_linearity,
                             synthesize, uniformity_test)
from dtcsim.cli import main
from dtcsim.lfsr import DEFAULT_TAPS, Lfsr, LfsrBank, is_maximal, is_primitive, joint_period_bruteforce
from dtcsim.sequence import (CodeMapping, ParameterLut, PhaseAccumulator, control_word_for,
                             generate_sequence, traversal_steps)
from dtcsim.serdes import LineConfig, read_bitstream

RATE = 10**10
BIT = Fraction(1, RATE)


@pytest.fixture
def report(capsys):
    def emit(n, name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n:2d} {name}: {detail}")
        return ok
    return emit


def test_01_resolution(report):
    rng = np.random.default_rng(2024)
    ks = rng.integers(1, 4095, size=1000)
    m = CodeMapping(high_offset=0, low_bits=10)
    params = [p for k in ks.tolist() for p in (m(k), m(k + 1))]
    widths = decode_intervals(synthesize(params, LineConfig())).widths_bits
    steps = {(b - a) * BIT for a, b in widths.reshape(-1, 2).tolist()}
    ok = steps == {Fraction(1, 10**10)}
    assert report(1, "resolution", ok, f"1000 code pairs, width steps {sorted(map(float, steps))} s")


def test_02_dynamic_range(report, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    got = {}
    for name, high, total in (("min", "1ns", "2ns"), ("max", "40us", "40us")):
        assert main(["synth", "--high", high, "--total", total, "--output", f"{name}.dtcb"]) == 0
        train = decode_intervals(read_bitstream(f"{name}.dtcb"))
        got[name] = (train[0].width_bits * BIT, train[0].width_s)
    ok = (got["min"][0] == Fraction(1, 10**9) and got["max"][0] == Fraction(4, 10**5)
          and got["min"][1] == 1e-9 and got["max"][1] == 4e-5)
    assert report(2, "dynamic range", ok, f"min {got['min'][1]!r} s, max {got['max'][1]!r} s")


def test_03_encoder_oracle(report):
    res = selftest.run(cases=10_000, seed=7, widths=(8, 16, 32, 64))
    ok = res.ok and res.cases == 10_000
    assert report(3, "encoder oracle", ok,
                  f"{res.cases - len(res.failures)}/{res.cases} lists bit-identical")


def test_04_noiseless_linearity(report):
    rep = sweep_linearity(range(1, 4096))
    ok = rep.dnl_lsb.size == 4094 and rep.max_abs_dnl == 0 and rep.max_abs_inl == 0
    assert report(4, "noiseless linearity", ok,
                  f"max|DNL| {rep.max_abs_dnl} LSB, max|INL| {rep.max_abs_inl} LSB over codes 1..4095")


def test_05_jitter(report):
    sigma = 1.57e-12
    _, std = interval_statistics(JitterModel(sigma, seed=5).widths(1e-9, 100_000))
    target = math.sqrt(2) * sigma
    ok = abs(std - target) <= 0.05 * target
    assert report(5, "jitter", ok, f"stddev {std * 1e12:.3f} ps vs {target * 1e12:.3f} ps (5%)")


def test_06_lfsr_period(report):
    small = sorted(n for n in DEFAULT_TAPS if n <= 20)
    enumerated = all(is_maximal(n, DEFAULT_TAPS[n]) for n in small)
    primitive = all(is_primitive(n, t) for n, t in DEFAULT_TAPS.items())
    joint = joint_period_bruteforce([Lfsr(3, (3, 2)), Lfsr(4, (4, 3)), Lfsr(5, (5, 3))])
    ok = enumerated and primitive and joint == 3255
    assert report(6, "lfsr period", ok,
                  f"degrees {small} enumerated maximal, all 12 primitive={primitive}, joint {{3,4,5}}={joint}")


def test_07_uniformity(report):
    res = uniformity_test(LfsrBank.default().words(1_000_000), bins=64, alpha=0.01)
    assert report(7, "uniformity", res.passed,
                  f"chi2 {res.statistic:.2f} (critical {res.critical:.2f}, p={res.p_value:.3f})")


def test_08_sequence(report):
    codes = [10, 20, 30, 40, 50, 60, 70, 80, 90]
    lut = ParameterLut(codes, CodeMapping(high_offset=0, low_bits=10))
    params, _ = generate_sequence(lut, PhaseAccumulator(12, control_word_for(9, 12)), 18)
    widths = decode_intervals(synthesize(params, LineConfig())).widths_bits.tolist()
    first, second = widths[:9], widths[9:]
    ok = len(widths) == 18 and first == second == codes
    assert report(8, "sequence", ok, f"cycles {first} / {second}")


def test_09_traversal(report):
    got = {k: traversal_steps(PhaseAccumulator(12, k)) for k in (1, 2, 4)}
    ok = got == {k: 4096 // k for k in (1, 2, 4)}
    assert report(9, "traversal length", ok, f"steps per K {got}")


def test_10_replay(report, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    runs = [
        ["--mode", "single", "--high", "3ns", "--total", "7ns"],
        ["--mode", "fixed-sequence", "--high", "5ns", "--total", "9ns", "--count", "1000"],
        ["--mode", "lut-sequence", "--lut", "10,20,30,40,50,60,70,80,90", "--count", "18"],
        ["--mode", "random", "--count", "20000"],
    ]
    same = []
    for i, args in enumerate(runs):
        assert main(["synth", *args, "--output", f"a{i}.dtcb"]) == 0
        assert main(["synth", "-c", f"a{i}.dtcb.json", "--output", f"b{i}.dtcb"]) == 0
        same.append((tmp_path / f"a{i}.dtcb").read_bytes() == (tmp_path / f"b{i}.dtcb").read_bytes())
    assert report(10, "manifest replay", all(same), f"{sum(same)}/{len(same)} modes byte-identical")
