import math
from fractions import Fraction

import pytest

from affsieve.core_arith import factorize, primes_upto
from affsieve.matgroup import GeneratorSet, MatrixQ, entry_variable_names
from affsieve.modp import local_density, sl2_ambient_ideal
from affsieve.orbit_sieve import (
    ModuliBudgetError,
    SieveSequence,
    almost_prime_census,
    brun_bound,
    build_sequence,
    level_distribution_report,
    moduli_decomposition,
    r_formula,
    saturation_estimate,
    sieve_dimension_fit,
)
from affsieve.polyalg import MultiPoly

A = MatrixQ([[1, 2], [0, 1]])
B = MatrixQ([[1, 0], [2, 1]])
FREE = GeneratorSet([A, B])
V = entry_variable_names(2)
TR2 = MultiPoly.parse("x11 + x22 - 2", V)
IDEAL = sl2_ambient_ideal()


def synthetic_sequence(lo=3, hi=10_000):
    entries: dict[int, int] = {}
    for n in range(lo, hi + 1):
        v = n * (n + 2)
        entries[v] = entries.get(v, 0) + 1
    return SieveSequence(L=0, S_used=(), entries=entries, skipped=0)


def test_build_sequence_trace_degenerate_at_L1():
    # at radius 1 every element has trace 2, so f = tr - 2 vanishes everywhere
    seq = build_sequence(FREE, TR2, 1, [2])
    assert seq.X == 0
    assert seq.skipped == 5
    assert seq.entries == {}


def test_build_sequence_L3_frozen():
    seq = build_sequence(FREE, TR2, 3, [2])
    # every nonzero trace deviation at this radius is a power of two
    assert seq.entries == {1: 32}
    assert seq.skipped == 21
    assert seq.X == 32
    assert seq.X + seq.skipped == 2 * 3**3 - 1


def test_sifted_count_exempts_S():
    seq = build_sequence(FREE, TR2, 3, [2])
    assert seq.sifted_count(10) == 32  # all values are 1 after stripping 2s


def test_moduli_decomposition_floor_identity():
    # synthetic multiset 1..N with beta(d) = 1/d: |r_d| < 1 by the floor identity
    N = 500
    seq = SieveSequence(L=0, S_used=(), entries={n: 1 for n in range(1, N + 1)}, skipped=0)
    decomp = moduli_decomposition(seq, lambda d: Fraction(1, d), 12)
    for d, (A_d, pred, r_d) in decomp.rows.items():
        assert A_d == N // d
        assert abs(r_d) < 1


def test_level_report_grid():
    N = 500
    seq = SieveSequence(L=0, S_used=(), entries={n: 1 for n in range(1, N + 1)}, skipped=0)
    decomp = moduli_decomposition(seq, lambda d: Fraction(1, d), 12)
    rep = level_distribution_report(decomp, [Fraction(1, 10), Fraction(1, 2)], dim=1)
    assert rep.least_tau == Fraction(1, 10)
    assert rep.abs_max <= rep.abs_sum


def test_sieve_dimension_fit_synthetic():
    for c in (1, 2):
        table = {p: Fraction(c, p) for p in primes_upto(10**4)}
        fit = sieve_dimension_fit(table, 3, 10**4)
        assert fit.conclusive
        assert abs(fit.slope - c) <= 0.05 * c


def test_sieve_dimension_fit_inconclusive():
    table = {p: Fraction(1, p) for p in (3, 5, 7)}
    assert not sieve_dimension_fit(table, 3, 10).conclusive


def test_brun_brackets_synthetic():
    seq = synthetic_sequence()
    prev_gap = None
    for z in (7, 10, 13):
        prev_gap = None
        for b in (2, 3):
            br = brun_bound(seq, z, b)
            exact = seq.sifted_count(z)
            assert br.lower <= exact <= br.upper, (z, b)
            gap = br.upper - br.lower
            if prev_gap is not None:
                assert gap <= prev_gap
            prev_gap = gap


def test_brun_frozen_values():
    seq = synthetic_sequence()
    br = brun_bound(seq, 13, 2)
    assert (br.lower, br.upper) == (-1218, 704)
    assert seq.sifted_count(13) == 494
    br = brun_bound(seq, 13, 3)
    assert (br.lower, br.upper) == (485, 494)


def test_brun_moduli_budget():
    seq = synthetic_sequence(3, 100)
    with pytest.raises(ModuliBudgetError):
        brun_bound(seq, 100, 6, moduli_budget=50)


def test_census_monotone_in_r_and_L():
    prev = None
    for L in (2, 3, 4):
        cen = almost_prime_census(FREE, TR2, L, [2], r_max=4)
        counts = [cen.counts[r] for r in range(5)]
        assert counts == sorted(counts)  # nondecreasing in r
        if prev is not None:
            assert all(c >= p for c, p in zip(counts, prev))  # balls nest
        prev = counts
        assert cen.incomplete == 0


def test_census_samples_consistent():
    cen = almost_prime_census(FREE, TR2, 3, [2], r_max=2)
    for r, mats in cen.samples.items():
        assert len(mats) == cen.counts[r]
        for m in mats:
            val = TR2.eval(m.entry_dict())
            assert val != 0


def test_saturation_estimate_entry_function():
    est = saturation_estimate(
        FREE, MultiPoly.parse("x11", V), [2], 1, (4, 5), ambient_ideal_basis=IDEAL
    )
    assert est.r_hat == 1
    assert est.stable
    assert est.per_L == {4: 1, 5: 1}


def test_saturation_estimate_trace():
    # the 2-stripped trace deviations are S-units on a dense set already
    est = saturation_estimate(FREE, TR2, [2], 1, (4, 6), ambient_ideal_basis=IDEAL)
    assert est.r_hat == 0
    assert est.stable


def test_r_formula_worked_example():
    assert r_formula(1, 1, 3, Fraction(1, 2), 4, Fraction(1), Fraction(1)) == 104


def test_r_formula_monotone_grid():
    base = {}
    for s in (1, 2, 3):
        for deg in (1, 2, 3):
            base[(s, deg)] = r_formula(deg, s, 3, Fraction(1, 2), 4)
    for s in (1, 2):
        for deg in (1, 2, 3):
            assert base[(s + 1, deg)] >= base[(s, deg)]
    for s in (1, 2, 3):
        for deg in (1, 2):
            assert base[(s, deg + 1)] >= base[(s, deg)]


def test_r_formula_domain():
    with pytest.raises(ValueError):
        r_formula(1, 1, 3, Fraction(3, 2), 4)
    with pytest.raises(ValueError):
        r_formula(1, 1, 3, Fraction(1, 2), 1)
    with pytest.raises(ValueError):
        r_formula(0, 1, 3, Fraction(1, 2), 4)
