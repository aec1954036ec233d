"""Sieving polynomial values over word-metric balls: sequences a_n(L), moduli
decompositions with exact remainders, level-distribution reports, sieve
dimension fits, truncated inclusion-exclusion brackets, almost-prime
censuses, an empirical saturation estimator, and the explicit r formula.

All counts and remainders are exact; floats appear only in fitted slopes and
report summaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .core_arith import (
    FactorBudget,
    check_prime_set,
    factorize,
    omega_outside,
    primes_upto,
    s_integer_part,
)
from .matgroup import Ball, GeneratorSet, MatrixQ, ball, entry_variable_names
from .polyalg import MultiPoly, zariski_density_test

BetaProvider = Callable[[int], Fraction]


class ModuliBudgetError(RuntimeError):
    """Truncated inclusion-exclusion needs more moduli than the budget allows."""


@dataclass(frozen=True)
class SieveSequence:
    """Multiset of S-integer values of f over a ball: n -> a_n(L)."""

    L: int
    S_used: tuple[int, ...]
    entries: dict[int, int]
    skipped: int  # f(gamma) = 0 (points on V(f))

    @property
    def X(self) -> int:
        return sum(self.entries.values())

    def sifted_count(self, z: int) -> int:
        """Exact count of entries with no prime factor <= z outside S."""
        small = [p for p in primes_upto(z) if p not in self.S_used]
        total = 0
        for n, a in self.entries.items():
            if all(n % p for p in small):
                total += a
        return total


def build_sequence(
    gens: GeneratorSet,
    f: MultiPoly,
    L: int,
    S: Iterable[int] = (),
    cap: int = 5_000_000,
    ball_cache: Optional[Ball] = None,
) -> SieveSequence:
    Sset = check_prime_set(S)
    B = ball_cache if ball_cache is not None and ball_cache.L == L else ball(gens, L, cap=cap)
    entries: dict[int, int] = {}
    skipped = 0
    for gamma in B.elements:
        val = f.eval(gamma.entry_dict())
        if val == 0:
            skipped += 1
            continue
        n = s_integer_part(val, Sset)
        entries[n] = entries.get(n, 0) + 1
    return SieveSequence(L=L, S_used=Sset, entries=entries, skipped=skipped)


def _squarefree_upto(D: int) -> list[int]:
    out = []
    for d in range(1, D + 1):
        fac = factorize(d) if d > 1 else None
        if fac is None or all(e == 1 for _, e in fac.factors):
            out.append(d)
    return out


@dataclass(frozen=True)
class ModuliDecomposition:
    D: int
    X: int
    rows: dict[int, tuple[int, Fraction, Fraction]]  # d -> (A_d, beta(d)*X, r_d)

    def remainders(self) -> dict[int, Fraction]:
        return {d: row[2] for d, row in self.rows.items()}


def moduli_decomposition(
    seq: SieveSequence, beta_provider: BetaProvider, D: int
) -> ModuliDecomposition:
    X = seq.X
    rows = {}
    for d in _squarefree_upto(D):
        A_d = sum(a for n, a in seq.entries.items() if n % d == 0)
        pred = Fraction(beta_provider(d)) * X
        rows[d] = (A_d, pred, A_d - pred)
    return ModuliDecomposition(D=D, X=X, rows=rows)


@dataclass(frozen=True)
class LevelReport:
    D: int
    abs_sum: Fraction
    abs_max: Fraction
    least_tau: Optional[Fraction]  # smallest grid tau passing the level bound
    tau_grid: tuple[Fraction, ...]


def level_distribution_report(
    decomp: ModuliDecomposition,
    tau_grid: Sequence[Fraction],
    dim: int,
    eps: Fraction = Fraction(1, 10),
) -> LevelReport:
    """Empirical level-of-distribution summary: the least tau on the grid with
    sum_d |r_d| <= X^tau * D^(dim+eps).  No claim beyond the computed window."""
    rems = decomp.remainders()
    abs_sum = sum((abs(r) for r in rems.values()), Fraction(0))
    abs_max = max((abs(r) for r in rems.values()), default=Fraction(0))
    grid = tuple(sorted(Fraction(t) for t in tau_grid))
    least = None
    X = decomp.X
    for tau in grid:
        bound = (X ** float(tau) if X else 0.0) * decomp.D ** float(dim + eps)
        if float(abs_sum) <= bound:
            least = tau
            break
    return LevelReport(
        D=decomp.D, abs_sum=abs_sum, abs_max=abs_max, least_tau=least, tau_grid=grid
    )


@dataclass(frozen=True)
class DimensionFit:
    window: tuple[int, int]
    slope: float
    intercept: float
    residual: float
    n_primes: int
    conclusive: bool


def sieve_dimension_fit(
    beta_table: dict[int, Fraction], w: int, z: int
) -> DimensionFit:
    """Least-squares slope of the cumulative sum of beta(p) log p against
    log x over an expanding window of primes in [w, z]."""
    ps = sorted(p for p in beta_table if w <= p <= z)
    if len(ps) < 10:
        return DimensionFit((w, z), 0.0, 0.0, 0.0, len(ps), conclusive=False)
    xs = []
    ys = []
    acc = 0.0
    for p in ps:
        acc += float(beta_table[p]) * math.log(p)
        xs.append(math.log(p))
        ys.append(acc)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = float(
        np.sqrt(np.mean((np.polyval([slope, intercept], xs) - np.asarray(ys)) ** 2))
    )
    return DimensionFit(
        (w, z), float(slope), float(intercept), resid, len(ps), conclusive=True
    )


@dataclass(frozen=True)
class BrunBracket:
    z: int
    b: int
    lower: int
    upper: int
    moduli_used: int


def brun_bound(
    seq: SieveSequence,
    z: int,
    b: int,
    moduli_budget: int = 200_000,
) -> BrunBracket:
    """Truncated inclusion-exclusion over squarefree products of the primes
    <= z outside S.

    Truncating the alternating sum after an odd number of prime factors gives
    a lower bound for the sifted count, after an even number an upper bound
    (partial sums of sum_j (-1)^j C(w, j) alternate around [w = 0]).  So:
    lower = depth 2b-1, upper = depth 2b.  Exact, beta-independent.
    """
    if z < 2 or b < 1:
        raise ValueError("need z >= 2 and b >= 1")
    ps = [p for p in primes_upto(z) if p not in seq.S_used]

    def moduli(depth: int) -> list[tuple[int, int]]:
        # (d, omega(d)) for squarefree d from ps with omega <= depth
        out = [(1, 0)]
        for p in ps:
            new = []
            for d, w in out:
                if w < depth:
                    new.append((d * p, w + 1))
            out.extend(new)
            if len(out) > moduli_budget:
                raise ModuliBudgetError(
                    "moduli explosion beyond budget; increase budget or lower z/b"
                )
        return out

    def truncated(depth: int) -> int:
        total = 0
        for d, w in moduli(depth):
            A_d = sum(a for n, a in seq.entries.items() if n % d == 0)
            total += (-1) ** w * A_d
        return total

    mods = moduli(2 * b)
    lower = truncated(2 * b - 1)
    upper = truncated(2 * b)
    return BrunBracket(z=z, b=b, lower=lower, upper=upper, moduli_used=len(mods))


@dataclass(frozen=True)
class CensusResult:
    L: int
    S_used: tuple[int, ...]
    counts: dict[int, int]  # r -> #{gamma : Omega_outside(f_Gamma) <= r}
    incomplete: int  # factoring budget failures, excluded from counts
    skipped: int  # f = 0
    samples: dict[int, list[MatrixQ]]  # r -> matrices achieving Omega <= r


def almost_prime_census(
    gens: GeneratorSet,
    f: MultiPoly,
    L: int,
    S: Iterable[int] = (),
    r_max: int = 8,
    budget: FactorBudget = FactorBudget(),
    cap: int = 5_000_000,
    ball_cache: Optional[Ball] = None,
    sample_limit: int = 100_000,
) -> CensusResult:
    Sset = check_prime_set(S)
    B = ball_cache if ball_cache is not None and ball_cache.L == L else ball(gens, L, cap=cap)
    counts = {r: 0 for r in range(r_max + 1)}
    samples: dict[int, list[MatrixQ]] = {r: [] for r in range(r_max + 1)}
    skipped = 0
    incomplete = 0
    for gamma in B.elements:
        val = f.eval(gamma.entry_dict())
        if val == 0:
            skipped += 1
            continue
        n = s_integer_part(val, Sset)
        om = omega_outside(n, Sset, with_multiplicity=True, budget=budget) if n > 1 else 0
        if om is None:
            incomplete += 1
            continue
        for r in range(r_max + 1):
            if om <= r:
                counts[r] += 1
                if len(samples[r]) < sample_limit:
                    samples[r].append(gamma)
    return CensusResult(
        L=L, S_used=Sset, counts=counts, incomplete=incomplete, skipped=skipped, samples=samples
    )


@dataclass(frozen=True)
class SaturationEstimate:
    r_hat: Optional[int]
    S_used: tuple[int, ...]
    D: int
    L_schedule: tuple[int, ...]
    stable: bool
    per_L: dict[int, Optional[int]]  # L -> minimal passing r (None = none passed)
    failure_mode: dict[int, str]  # L -> "" | "not dense at D" | "too few points"


def saturation_estimate(
    gens: GeneratorSet,
    f: MultiPoly,
    S: Iterable[int],
    D: int,
    L_schedule: Sequence[int],
    ambient_ideal_basis: Sequence[MultiPoly] = (),
    r_max: int = 8,
    cap: int = 5_000_000,
) -> SaturationEstimate:
    """Minimal r whose census sample is dense at degree D at the final L, with
    a stability verdict over the last two L values.

    This is an empirical lower-confidence estimate from finite data, not a
    proof of saturation at r.
    """
    Sset = check_prime_set(S)
    per_L: dict[int, Optional[int]] = {}
    failure: dict[int, str] = {}
    schedule = tuple(sorted(L_schedule))
    for L in schedule:
        census = almost_prime_census(gens, f, L, Sset, r_max=r_max, cap=cap)
        found = None
        mode = ""
        for r in range(r_max + 1):
            pts = [
                tuple(x for row in m.entries for x in row) for m in census.samples[r]
            ]
            if not pts:
                mode = "too few points"
                continue
            verdict = zariski_density_test(
                pts, D, ambient_ideal_basis, variables=entry_variable_names(gens.n)
            )
            if verdict.dense:
                found = r
                mode = ""
                break
            mode = "too few points" if not verdict.sufficient_points else "not dense at D"
        per_L[L] = found
        failure[L] = mode
    last_two = schedule[-2:]
    stable = (
        len(last_two) == 2
        and per_L[last_two[0]] is not None
        and per_L[last_two[0]] == per_L[last_two[1]]
    )
    return SaturationEstimate(
        r_hat=per_L[schedule[-1]],
        S_used=Sset,
        D=D,
        L_schedule=schedule,
        stable=stable,
        per_L=per_L,
        failure_mode=failure,
    )


def r_formula(
    deg_ftilde: int,
    s_count: int,
    dim_G: int,
    tau: Fraction,
    omega_size: int,
    T: Fraction = Fraction(1),
    logM0: Fraction = Fraction(1),
) -> int:
    """floor(9 (#S+1) deg T (dim+1) logM0 / ((1 - tau) ln #Omega)) + 1."""
    tau = Fraction(tau)
    if not 0 < tau < 1:
        raise ValueError("tau must lie strictly between 0 and 1")
    if omega_size < 2:
        raise ValueError("generator set size must be >= 2")
    if deg_ftilde < 1 or dim_G < 1 or s_count < 0:
        raise ValueError("degree and dimension must be positive, #S nonnegative")
    num = 9 * (s_count + 1) * deg_ftilde * Fraction(T) * (dim_G + 1) * Fraction(logM0)
    val = float(num) / (float(1 - tau) * math.log(omega_size))
    return math.floor(val) + 1
