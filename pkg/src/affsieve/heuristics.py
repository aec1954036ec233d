"""Diagonalizable-group (torus) non-saturation heuristics: Hilbert-Schmidt
norm growth envelopes, the shifted-product regular function, prime-factor
trend tables, and convergence of the relevant Borel-Cantelli sums.

No randomness is simulated: the deterministic quantities and the bound sums
are computed side by side for comparison.  Evidence only; nothing here
asserts non-saturation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .core_arith import FactorBudget, check_prime_set, factorize
from .matgroup import MatrixQ


def hilbert_schmidt(x: MatrixQ) -> Fraction:
    """F(x) = Tr(x^t x) = sum of squared entries; F(I_n) = n."""
    return sum(e * e for row in x.entries for e in row)


def shifted_product(x: MatrixQ, nu: int) -> Fraction:
    """prod_{j=1..nu} (F(x) + j); empty product 1 at nu = 0."""
    if nu < 0:
        raise ValueError("nu must be >= 0")
    F = hilbert_schmidt(x)
    out = Fraction(1)
    for j in range(1, nu + 1):
        out *= F + j
    return out


@dataclass(frozen=True)
class TorusSpec:
    generators: tuple[MatrixQ, ...]
    M: int

    def __post_init__(self):
        if not self.generators:
            raise ValueError("need at least one generator")
        if self.M < 1:
            raise ValueError("box radius must be >= 1")
        for a, b in itertools.combinations(self.generators, 2):
            if a @ b != b @ a:
                raise ValueError("generators must commute pairwise")

    @property
    def rank(self) -> int:
        return len(self.generators)

    def power(self, m: Sequence[int]) -> MatrixQ:
        out = MatrixQ.identity(self.generators[0].n)
        for g, e in zip(self.generators, m):
            base = g if e >= 0 else g.inverse()
            for _ in range(abs(e)):
                out = out @ base
        return out


@dataclass(frozen=True)
class GrowthEnvelope:
    A1: float  # upper growth rate
    A2: float  # lower growth rate over escaping directions
    K: float  # envelope constant: A2^|m|/K <= F <= K A1^|m| on the box
    degenerate_directions: tuple[tuple[int, ...], ...]
    verified: bool


def norm_growth_check(spec: TorusSpec, min_M: int = 3) -> GrowthEnvelope:
    """Fit a two-sided exponential envelope for F(gamma^m) over the sup-norm
    box |m| <= M and verify it pointwise.

    Rates come from boundary values along primitive directions; directions
    where F fails to grow past F(I) (eigenvalues on the unit circle, torsion)
    are reported as degenerate and excluded from the lower rate.
    """
    if spec.M < min_M:
        raise ValueError(f"box radius must be >= {min_M}")
    t = spec.rank
    n = spec.generators[0].n
    F_I = float(n)

    # primitive directions from the boundary shell
    directions = []
    seen = set()
    for m in itertools.product(range(-spec.M, spec.M + 1), repeat=t):
        if max(abs(c) for c in m) != spec.M:
            continue
        g = math.gcd(*[abs(c) for c in m])
        prim = tuple(c // g for c in m)
        if prim not in seen:
            seen.add(prim)
            directions.append(prim)

    rates_up = []
    rates_down = []
    degenerate = []
    values: dict[tuple[int, ...], float] = {}
    for m in itertools.product(range(-spec.M, spec.M + 1), repeat=t):
        values[m] = float(hilbert_schmidt(spec.power(m)))
    for d in directions:
        steps = spec.M // max(abs(c) for c in d)
        boundary = tuple(c * steps for c in d)
        Fb = values[boundary]
        norm = max(abs(c) for c in boundary)
        if Fb <= F_I + 1e-9:
            degenerate.append(d)
            continue
        rate = Fb ** (1.0 / norm)
        rates_up.append(rate)
        rates_down.append(rate)
    if not rates_up:
        return GrowthEnvelope(
            A1=1.0, A2=1.0, K=1.0, degenerate_directions=tuple(degenerate), verified=False
        )
    # the upper rate must cover interior points too (small |m| can have
    # larger per-step ratios)
    for m, F in values.items():
        norm = max((abs(c) for c in m), default=0)
        if norm >= 1:
            rates_up.append(F ** (1.0 / norm))
    A1 = max(rates_up)
    A2 = min(rates_down)

    degenerate_set = set()
    for d in degenerate:
        for s in range(1, spec.M + 1):
            degenerate_set.add(tuple(c * s for c in d))
    K = 1.0
    for m, F in values.items():
        norm = max((abs(c) for c in m), default=0)
        if norm == 0:
            continue
        K = max(K, F / A1**norm)
        if m not in degenerate_set:
            K = max(K, A2**norm / F)
    verified = True
    for m, F in values.items():
        norm = max((abs(c) for c in m), default=0)
        if norm == 0:
            continue
        if F > K * A1**norm * (1 + 1e-12):
            verified = False
        if m not in degenerate_set and F * K < A2**norm * (1 - 1e-12):
            verified = False
    return GrowthEnvelope(
        A1=A1, A2=A2, K=K, degenerate_directions=tuple(degenerate), verified=verified
    )


@dataclass(frozen=True)
class TrendRow:
    m: int
    value: int
    omega_distinct: Optional[int]  # None when factoring hit the budget
    omega_mult: Optional[int]
    running_min: Optional[int]  # min of omega_distinct over the dyadic window


@dataclass(frozen=True)
class TrendTable:
    rows: tuple[TrendRow, ...]
    S: tuple[int, ...]
    odd_only: bool
    incomplete: int


def prime_factor_trend(
    value_fn: Callable[[int], int],
    M: int,
    S: Iterable[int] = (),
    odd_only: bool = True,
    budget: FactorBudget = FactorBudget(),
    start: int = 1,
) -> TrendTable:
    """Per m <= M: distinct and with-multiplicity prime-factor counts of
    value_fn(m) outside S (optionally odd primes only), with the running
    minimum of the distinct count over each dyadic window [2^k, 2^(k+1)).

    No extrapolation: rows where factoring exhausts its budget are marked.
    """
    Sset = set(check_prime_set(S))
    rows = []
    incomplete = 0
    window_start = None
    window_min: Optional[int] = None
    for m in range(start, M + 1):
        v = int(value_fn(m))
        if v == 0:
            rows.append(TrendRow(m, 0, None, None, window_min))
            incomplete += 1
            continue
        fac = factorize(abs(v), budget)
        if not fac.complete:
            rows.append(TrendRow(m, v, None, None, window_min))
            incomplete += 1
            continue
        kept = [
            (p, e)
            for p, e in fac.factors
            if p not in Sset and (not odd_only or p != 2)
        ]
        w_d = len(kept)
        w_m = sum(e for _, e in kept)
        k = m.bit_length() - 1
        if window_start != k:
            window_start = k
            window_min = w_d
        else:
            window_min = w_d if window_min is None else min(window_min, w_d)
        rows.append(TrendRow(m, v, w_d, w_m, window_min))
    return TrendTable(
        rows=tuple(rows), S=tuple(sorted(Sset)), odd_only=odd_only, incomplete=incomplete
    )


def two_power_product(m: int) -> int:
    """(2^m - 2)(2^m - 1), the orbit value in the rank-1 doubling example."""
    return (2**m - 2) * (2**m - 1)


@dataclass(frozen=True)
class BorelCantelliReport:
    t: int
    nu: int
    r: int
    checkpoints: tuple[int, ...]
    partial_sums: tuple[float, ...]
    increments: tuple[float, ...]  # sums between consecutive checkpoints
    integral_bound: float  # upper bound for the full sum (integral test)


def _shell_count(t: int, s: int) -> int:
    if s == 0:
        return 1
    return (2 * s + 1) ** t - (2 * s - 1) ** t


def borel_cantelli_sum(
    t: int, nu: int, r: int, M: int, checkpoints: Sequence[int] = ()
) -> BorelCantelliReport:
    """Partial sums over m in Z^t, |m|_sup <= M of
    [log(|m|+1)]^(nu(r-1)) / (|m|+1)^nu, grouped by sup-norm shells.

    Convergent exactly when nu > t (enforced); the integral-test bound covers
    the infinite tail so partial sums must stay below it.
    """
    if not (nu > t >= 1):
        raise ValueError("need nu > t >= 1")
    if r < 1:
        raise ValueError("r must be >= 1")
    cps = sorted(set(int(c) for c in checkpoints) | {M})
    if any(c < 1 for c in cps):
        raise ValueError("checkpoints must be >= 1")
    power = nu * (r - 1)
    sums = []
    total = 1.0 if power == 0 else 0.0  # s = 0 shell: log(1)^power / 1
    prev = 0
    for cp in cps:
        s = np.arange(prev + 1, cp + 1, dtype=np.float64)
        shells = (2 * s + 1) ** t - (2 * s - 1) ** t
        total += float(np.sum(shells * np.log(s + 1) ** power / (s + 1) ** nu))
        sums.append(total)
        prev = cp
    increments = tuple(
        sums[i] - (sums[i - 1] if i else (1.0 if power == 0 else 0.0))
        for i in range(len(sums))
    )
    # integral-test tail bound from 1: shell(s) <= 2t(2s+1)^(t-1) <= 2t(3s)^(t-1)
    # for s >= 1, and the summand is decreasing for s+1 > e^(power/nu)
    from scipy.integrate import quad

    def integrand(x):
        return 2 * t * (3 * x) ** (t - 1) * math.log(x + 1) ** power / (x + 1) ** nu

    head_end = max(2.0, math.exp(power / nu))
    head = 0.0
    s = 1
    while s <= head_end:
        head += _shell_count(t, s) * math.log(s + 1) ** power / (s + 1) ** nu
        s += 1
    tail, _err = quad(integrand, head_end, np.inf)
    base = 1.0 if power == 0 else 0.0
    bound = base + head + tail
    return BorelCantelliReport(
        t=t,
        nu=nu,
        r=r,
        checkpoints=tuple(cps),
        partial_sums=tuple(sums),
        increments=increments,
        integral_bound=bound,
    )
