import math

import pytest

from dtcsim.encoder import TimingParameter
from dtcsim.sequence import (CodeMapping, ParameterLut, PhaseAccumulator, SequenceError,
                             accumulator_step, control_word_for, generate_fixed,
                             generate_sequence, load_lut, sequence_length, traversal_steps)

P = TimingParameter


def test_unit_step():
    idx, acc = accumulator_step(PhaseAccumulator(12, 1, 0))
    assert (idx, acc.phase) == (1, 1)


def test_wraparound():
    _, acc = accumulator_step(PhaseAccumulator(12, 4095, 4095))
    assert acc.phase == 4094


def test_full_cycle_by_simulation():
    acc = PhaseAccumulator(12, 2, 0)
    for _ in range(2048):
        _, acc = accumulator_step(acc)
    assert acc.phase == 0
    assert traversal_steps(PhaseAccumulator(12, 2, 0)) == 2048


def test_top_bits_addressing():
    acc = PhaseAccumulator(12, 1, 0b1011_0000_0000)
    assert acc.address(16) == 0b1011
    assert acc.address(4096) == acc.phase


@pytest.mark.parametrize("k,expected", [(1, 4.096e-3), (2, 2.048e-3)])
def test_sequence_length(k, expected):
    assert sequence_length(PhaseAccumulator(12, k, sample_rate_hz=1e6)) == pytest.approx(expected, rel=1e-15)


def test_sequence_length_large_accumulator():
    # 2**32 / (4096 * 156.25e6) = 2**20 / 156.25e6
    acc = PhaseAccumulator(32, 4096, sample_rate_hz=156.25e6)
    assert sequence_length(acc) == pytest.approx(2**20 / 156.25e6, rel=1e-15)
    assert sequence_length(acc) == pytest.approx(6.7108864e-3, rel=1e-12)


@pytest.mark.parametrize("kwargs", [dict(control_word=0), dict(control_word=4096),
                                    dict(phase=4096), dict(sample_rate_hz=0), dict(depth_bits=0)])
def test_accumulator_rejects(kwargs):
    with pytest.raises(SequenceError):
        PhaseAccumulator(**{"depth_bits": 12, **kwargs})


def test_generate_fixed():
    p = P(10, 20)
    assert generate_fixed(p, 3) == [p, p, p]
    assert len(generate_fixed(p, 1000)) == 1000
    for bad in (0, 1001):
        with pytest.raises(SequenceError):
            generate_fixed(p, bad)


def test_nine_entry_lut_two_cycles():
    codes = [10, 20, 30, 40, 50, 60, 70, 80, 90]
    lut = ParameterLut(codes, CodeMapping(low_bits=10))
    acc = PhaseAccumulator(12, control_word_for(9, 12))
    out, _ = generate_sequence(lut, acc, 18)
    highs = [p.high_bits for p in out]
    assert highs == codes + codes


def test_single_entry_lut_equals_fixed():
    p = P(10, 20)
    lut = ParameterLut([10], CodeMapping(low_bits=10))
    out, _ = generate_sequence(lut, PhaseAccumulator(12, 7), 50)
    assert out == generate_fixed(p, 50)


def test_two_entry_alternation():
    a, b = CodeMapping()(5), CodeMapping()(9)
    lut = ParameterLut([5, 9])
    out, _ = generate_sequence(lut, PhaseAccumulator(12, 2048), 6)
    # direct simulation: phases 0, 2048, 0, ... -> top bit 0, 1, 0, ...
    phases = [(k * 2048) % 4096 for k in range(6)]
    assert [[a, b][ph >> 11] for ph in phases] == out == [a, b, a, b, a, b]


def test_coprime_control_word_visits_everything():
    lut = ParameterLut(list(range(16)))
    out, _ = generate_sequence(lut, PhaseAccumulator(4, 3), 16)
    assert sorted(p.high_bits for p in out) == list(range(16))


@pytest.mark.parametrize("k", [1, 2, 4, 8, 64])
def test_doubling_k_halves_traversal(k):
    assert traversal_steps(PhaseAccumulator(12, k)) == 4096 // k
    assert traversal_steps(PhaseAccumulator(12, 2 * k)) * 2 == traversal_steps(PhaseAccumulator(12, k))


def test_non_dividing_k_period():
    assert traversal_steps(PhaseAccumulator(12, 6)) == 4096 // math.gcd(6, 4096)


def test_empty_lut_rejected():
    with pytest.raises(SequenceError):
        generate_sequence(ParameterLut([]), PhaseAccumulator(), 1)


def test_lut_code_width():
    with pytest.raises(SequenceError):
        ParameterLut([4096])


def test_mapping():
    m = CodeMapping(high_offset=10, high_scale=2, low_bits=5)
    assert m(3) == P(16, 21)
    assert CodeMapping(total_bits=5000)(4095) == P(4095, 5000)
    assert list(m.code_of([10, 16])) == [0, 3]
    with pytest.raises(SequenceError):
        CodeMapping(total_bits=100).validate()


def test_load_lut(tmp_path):
    f = tmp_path / "lut.csv"
    f.write_text("# codes\n10\n20, ignored\n\n0x1e\n")
    lut = load_lut(f)
    assert lut.codes == [10, 20, 30]
    f.write_text("10\nabc\n")
    with pytest.raises(SequenceError, match=":2"):
        load_lut(f)
    f.write_text("5000\n")
    with pytest.raises(SequenceError):
        load_lut(f)
