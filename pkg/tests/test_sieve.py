"""Segmented sieve: correctness against trial division, tiling, invariance."""
from __future__ import annotations

import numpy as np
import pytest

from primerace.sieve import (
    DEFAULT_SEGMENT_ODDS,
    PrimeEvent,
    prime_powers,
    segment_bounds,
    simple_sieve,
    stream_primes,
    stream_segments,
)

import oracles


class TestSimpleSieve:
    def test_small_limits(self):
        assert simple_sieve(1).tolist() == []
        assert simple_sieve(2).tolist() == [2]
        assert simple_sieve(10).tolist() == [2, 3, 5, 7]
        assert simple_sieve(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]

    def test_against_trial_division(self):
        assert simple_sieve(2000).tolist() == list(oracles.primes_upto(2000))

    def test_pi_of_ten_thousand(self):
        assert len(simple_sieve(10**4)) == 1229


class TestStreamPrimes:
    def test_window_above_a_million(self):
        events = list(stream_primes(10**6, 10**6 + 100, 4))
        assert [e.p for e in events] == [
            1000003, 1000033, 1000037, 1000039, 1000081, 1000099,
        ]
        assert [e.residue for e in events] == [3, 1, 1, 3, 1, 3]
        assert all(e.is_unit for e in events)
        # cross-check by trial division
        assert [e.p for e in events] == oracles.primes_in(10**6, 10**6 + 100)

    def test_empty_range(self):
        assert list(stream_primes(2, 2, 4)) == []

    def test_exactly_once_in_order(self):
        seen = [e.p for e in stream_primes(2, 5000, 3, segment_odds=64)]
        assert seen == sorted(set(seen))
        assert seen == list(oracles.primes_upto(4999))

    def test_primes_dividing_q_flagged(self):
        events = {e.p: e for e in stream_primes(2, 20, 6)}
        assert not events[2].is_unit
        assert not events[3].is_unit
        assert events[5].is_unit and events[5].residue == 5
        assert events[7].is_unit and events[7].residue == 1

    def test_sampled_values_pass_primality_check(self):
        primes = [e.p for e in stream_primes(2, 3 * 10**5, 4, segment_odds=2048)]
        rng = np.random.default_rng(7)
        for p in rng.choice(primes, size=50, replace=False).tolist():
            assert oracles.is_prime(int(p))

    def test_errors(self):
        with pytest.raises(ValueError, match="start at 2"):
            list(stream_primes(1, 10, 4))
        with pytest.raises(ValueError, match="inverted"):
            list(stream_primes(10, 5, 4))
        with pytest.raises(ValueError, match="segment size"):
            list(stream_primes(2, 10, 4, segment_odds=0))
        with pytest.raises(ValueError, match="invalid modulus"):
            list(stream_primes(2, 10, 0))


class TestSegmentation:
    def test_bounds_tile_without_gaps(self):
        bounds = list(segment_bounds(2, 10**5 + 17, 1 << 12))
        assert bounds[0][0] == 2
        assert bounds[-1][1] == 10**5 + 17
        for (a1, b1), (a2, _b2) in zip(bounds, bounds[1:]):
            assert b1 == a2
            assert a1 < b1

    @pytest.mark.parametrize("segment_odds", [16, 499, 4096, DEFAULT_SEGMENT_ODDS])
    def test_event_multiset_independent_of_segment_size(self, segment_odds):
        primes = [e.p for e in stream_primes(2, 30000, 5, segment_odds=segment_odds)]
        assert primes == list(oracles.primes_upto(29999))

    def test_threaded_stream_matches_sequential(self):
        seq = [p for _a, _b, seg in stream_segments(2, 10**6, segment_odds=1 << 14)
               for p in seg.tolist()]
        par = [p for _a, _b, seg in stream_segments(2, 10**6, segment_odds=1 << 14, threads=4)
               for p in seg.tolist()]
        assert seq == par
        assert len(seq) == 78498  # pi(10**6)

    def test_segment_arrays_are_sorted_and_in_bounds(self):
        for a, b, seg in stream_segments(2, 200000, segment_odds=1 << 10):
            if len(seg):
                assert seg[0] >= a and seg[-1] < b
                assert np.all(np.diff(seg) > 0)


class TestPrimeCounts:
    def test_pi_at_powers_of_ten(self):
        # independent second implementation: the non-segmented simple sieve
        for x, expected in [(10**4, 1229), (10**6, 78498)]:
            streamed = sum(len(s) for _a, _b, s in stream_segments(2, x + 1))
            assert streamed == len(simple_sieve(x)) == expected


class TestPrimePowers:
    def test_upto_ten(self):
        assert [v for v, _p, _k in prime_powers(10)] == [4, 8, 9]
        assert prime_powers(10) == [(4, 2, 2), (8, 2, 3), (9, 3, 2)]

    def test_below_four_empty(self):
        assert prime_powers(3) == []

    def test_upto_one_hundred(self):
        # frozen via the trial-division oracle: ten proper prime powers
        expected = oracles.prime_powers_upto(100)
        got = prime_powers(100)
        assert got == expected
        assert len(got) == 10
        assert [v for v, _p, _k in got] == [4, 8, 9, 16, 25, 27, 32, 49, 64, 81]

    def test_values_ascending_and_complete(self):
        got = prime_powers(5000)
        assert got == oracles.prime_powers_upto(5000)
        vals = [v for v, _p, _k in got]
        assert vals == sorted(vals)
