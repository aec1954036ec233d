"""Constructive almost-prime search on unipotent groups.

The core is a recursion on the number of variables: split the target
polynomial into its content and primitive part with respect to a pivot
variable, recurse on the content and the coefficient families, then for each
emitted prefix run a single-variable search along an arithmetic progression
chosen so that the coprime-family values stay supported on a fixed prime set.
Every emitted point carries certificates (factorization of the target value,
gcd of each family) and is re-checked from scratch; group-level problems are
routed through lattice coordinates and re-verified on the actual matrices.

The classical-sieve existence step is replaced by bounded search: an empty
result distinguishes "searched and none found" from "budget exhausted".
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import sympy

from .core_arith import (
    FactorBudget,
    factorize,
    omega_outside,
    primes_upto,
)
from .matgroup import MatrixQ
from .polyalg import (
    MultiPoly,
    NilpotentLog,
    bad_prime_bound,
    gcd_certificate,
    malcev_lattice,
    progression_avoiding,
)


class CoprimalityError(ValueError):
    """A declared family has a nonconstant common factor."""

    def __init__(self, message: str, common_factor=None):
        super().__init__(message)
        self.common_factor = common_factor


@dataclass(frozen=True)
class SieveBudget:
    value_want: int = 5  # values emitted per prefix
    prefix_want: int = 60  # prefixes carried into the next level
    search_bound: int = 100_000  # |progression argument| cap
    r_extra_cap: int = 3  # how far past the degree target r may escalate
    choice_cap: int = 64  # cap on refined choice families per family
    factor: FactorBudget = FactorBudget()


@dataclass(frozen=True)
class UniSieveProblem:
    variables: tuple[str, ...]
    P: MultiPoly
    families: tuple[tuple[MultiPoly, ...], ...]

    def __post_init__(self):
        for fam in self.families:
            g = sympy.Integer(0)
            for m in fam:
                g = sympy.gcd(g, m.to_sympy())
            if not g.is_number:
                raise CoprimalityError(
                    f"family has common factor {g}", common_factor=g
                )


@dataclass(frozen=True)
class EmittedPoint:
    x: tuple[int, ...]
    value: int  # numerator of P(x)
    omega: int  # prime factors of value outside S (with multiplicity)
    family_gcds: tuple[int, ...]


@dataclass(frozen=True)
class PrefixRecord:
    prefix: tuple[int, ...]  # assignments in emission variable order
    M: int
    progression: tuple[int, int]
    values: tuple[int, ...]
    instances: tuple[MultiPoly, ...] = ()  # integer-scaled single-variable polys


@dataclass(frozen=True)
class UniSieveResult:
    variables: tuple[str, ...]
    r: int
    S: tuple[int, ...]
    points: tuple[EmittedPoint, ...]
    prefixes: tuple[PrefixRecord, ...]
    exhausted: bool  # some search hit its bound before filling its quota
    dropped: int  # points failing final re-certification (should be 0)
    matrices: tuple[MatrixQ, ...] = ()


@dataclass(frozen=True)
class SearchOutcome:
    values: tuple[int, ...]
    omegas: tuple[int, ...]
    exhausted: bool
    r_used: int


def single_variable_almost_primes(
    P: MultiPoly,
    S: Iterable[int],
    progression: tuple[int, int],
    r: int,
    search_bound: int,
    want: int,
    budget: FactorBudget = FactorBudget(),
) -> SearchOutcome:
    """Integers n = aj + b, |n| <= search_bound, with P(n) nonzero and at most
    r prime factors outside S, in order of |n|."""
    a, b = progression
    if a <= 0:
        raise ValueError("progression step must be positive")
    Sset = tuple(sorted(set(int(p) for p in S)))
    values = []
    omegas = []
    exhausted = False
    seen: set[int] = set()
    for j in itertools.count():
        step = (j + 1) // 2 * (1 if j % 2 else -1)  # 0, -1, 1, -2, 2, ...
        n = a * step + b
        if abs(n) > search_bound:
            # both directions exceed the bound once |a*step| dominates
            if a * ((j + 1) // 2) > search_bound + abs(b):
                exhausted = len(values) < want
                break
            continue
        if n in seen:
            continue
        seen.add(n)
        val = P.eval({name: n for name in P.variables})
        if val == 0:
            continue
        om = omega_outside(val.numerator, Sset, with_multiplicity=True, budget=budget)
        if om is None:
            continue  # factoring budget: skip, never guess
        if om <= r:
            values.append(n)
            omegas.append(om)
            if len(values) >= want:
                break
    return SearchOutcome(
        values=tuple(values), omegas=tuple(omegas), exhausted=exhausted, r_used=max(omegas, default=0)
    )


# ---------------------------------------------------------------------------
# family refinement and certificates


def _integerize(P: MultiPoly) -> tuple[MultiPoly, Fraction]:
    """Scale to an integer-primitive polynomial; returns (primitive, unit)
    with P = unit * primitive."""
    if P.is_zero():
        raise ValueError("zero polynomial in a coprime family")
    den = P.denominator_lcm()
    scaled = P.scale(den)
    content = scaled.integer_content()
    prim = scaled.scale(Fraction(1, content))
    # normalize sign by the leading (lexicographically largest) term
    lead = max(prim.terms)
    if prim.terms[lead] < 0:
        prim = prim.scale(-1)
        content = -content
    return prim, Fraction(content, den)


def _refine_family(
    family: Sequence[MultiPoly], variables: tuple[str, ...], cap: int
) -> tuple[list[tuple[MultiPoly, ...]], set[int]]:
    """Replace a coprime family by choice families of irreducible integer
    factors; unit/constant content primes go into the returned prime set.

    A prime dividing every member's value divides, per member, some
    irreducible factor's value, so controlling every choice family controls
    the original gcd.  A family containing a nonzero integer constant is
    dropped (its gcd divides that constant).
    """
    const_primes: set[int] = set()
    factor_lists: list[list[MultiPoly]] = []
    for member in family:
        prim, unit = _integerize(member)
        for part in (abs(unit.numerator), unit.denominator):
            if part > 1:
                const_primes.update(factorize(part).primes())
        if prim.is_constant():
            # gcd of the family divides this constant: whole family controlled
            return [], const_primes
        _, factors = sympy.factor_list(prim.to_sympy())
        parts = []
        for fexpr, _exp in factors:
            fpoly, funit = _integerize(MultiPoly.from_sympy(fexpr, variables))
            for part in (abs(funit.numerator), funit.denominator):
                if part > 1:
                    const_primes.update(factorize(part).primes())
            parts.append(fpoly)
        factor_lists.append(parts)
    n_choices = math.prod(len(fl) for fl in factor_lists)
    if n_choices > cap:
        raise ValueError(f"choice-family refinement explosion ({n_choices} > {cap})")
    out = []
    seen = set()
    for choice in itertools.product(*factor_lists):
        key = frozenset(c for c in choice)
        if key in seen:
            continue
        seen.add(key)
        out.append(tuple(dict.fromkeys(choice)))  # dedup members, keep order
    return out, const_primes


def _family_certificate(
    members: Sequence[MultiPoly], pivot: str, others: tuple[str, ...]
) -> MultiPoly:
    """Q(x') in Z[others] with sum_j S_j * member_j = Q identically, so
    gcd_j member_j(x', v) divides Q(x') for all integer v.

    Extended Euclid in Q(others)[pivot] with all denominators cleared.
    """
    pivot_sym = sympy.Symbol(pivot)
    other_syms = [sympy.Symbol(v) for v in others]
    domain = sympy.QQ.frac_field(*other_syms) if other_syms else sympy.QQ
    polys = [sympy.Poly(m.to_sympy(), pivot_sym, domain=domain) for m in members]
    g = polys[0]
    cofactors = [sympy.Poly(1, pivot_sym, domain=domain)]
    for q in polys[1:]:
        s, t, h = g.gcdex(q)
        cofactors = [s * c for c in cofactors]
        cofactors.append(t)
        g = h
    if g.degree() > 0:
        raise CoprimalityError(
            f"family has common factor {g.as_expr()} over the function field",
            common_factor=g.as_expr(),
        )
    c_expr = domain.to_sympy(g.nth(0)) if g.degree() == 0 else sympy.Integer(0)
    if c_expr == 0:
        raise CoprimalityError("family gcd vanished; degenerate input")
    # clear every denominator appearing in the cofactors and in c
    dens = [sympy.fraction(sympy.together(c_expr))[1]]
    for cof in cofactors:
        for coeff in cof.all_coeffs():
            dens.append(sympy.fraction(sympy.together(domain.to_sympy(coeff)))[1])
    D = sympy.Integer(1)
    for d in dens:
        D = sympy.lcm(D, d)
    Q_expr = sympy.expand(sympy.together(D * c_expr))
    vars_tuple = others if others else (pivot,)
    Q = MultiPoly.from_sympy(Q_expr, vars_tuple)
    den = Q.denominator_lcm()
    if den != 1:
        Q = Q.scale(den)
    return Q


def _content_split(
    P: MultiPoly, pivot: str, variables: tuple[str, ...]
) -> tuple[MultiPoly, list[MultiPoly]]:
    """P = H * sum_i H_i pivot^i with gcd_i H_i = 1: returns (H, [H_0..H_k]).

    Both H and the H_i come back with integer-primitive normalization pushed
    into H where possible.
    """
    deg = P.degree_in(pivot)
    coeffs = [P.coeff_in(pivot, i) for i in range(deg + 1)]
    g = sympy.Integer(0)
    for c in coeffs:
        if not c.is_zero():
            g = sympy.gcd(g, c.to_sympy())
    H = MultiPoly.from_sympy(g, variables)
    syms = [sympy.Symbol(v) for v in variables]
    His = []
    for c in coeffs:
        if c.is_zero():
            His.append(MultiPoly.constant(variables, 0))
        elif g.is_number:
            His.append(c.scale(Fraction(1) / Fraction(str(g))))
        else:
            q, rem = sympy.div(c.to_sympy(), g, *syms)
            if sympy.simplify(rem) != 0:
                raise AssertionError("content division left a remainder")
            His.append(MultiPoly.from_sympy(q, variables))
    return H, His


def _pivot_choice(
    P: MultiPoly, families: Sequence[Sequence[MultiPoly]], active: Sequence[str]
) -> str:
    def score(v: str) -> tuple[int, int]:
        s = P.degree_in(v)
        for fam in families:
            for m in fam:
                s += m.degree_in(v)
        return (s, -list(active).index(v))

    return min(active, key=score)


# ---------------------------------------------------------------------------
# the recursion


@dataclass
class _LevelResult:
    r: int
    S: set[int]
    assignments: list[dict[str, int]]
    prefixes: list[PrefixRecord]
    exhausted: bool


def _depends_on(m: MultiPoly, pivot: str) -> bool:
    return pivot in m.used_variables()


def _sieve_level(
    P: MultiPoly,
    families: list[tuple[MultiPoly, ...]],
    active: tuple[str, ...],
    variables: tuple[str, ...],
    budget: SieveBudget,
) -> _LevelResult:
    if not active:
        # constants only: P's factors count toward r; family gcds must be
        # constants (refinement dropped them or flagged earlier)
        val = P.constant_value()
        if val == 0:
            raise ValueError("target polynomial is identically zero")
        S: set[int] = set()
        for fam in families:
            g = 0
            for m in fam:
                g = math.gcd(g, abs(int(m.constant_value())))
            if g == 0:
                raise CoprimalityError("constant family with gcd 0")
            if g > 1:
                S |= set(factorize(g).primes())
        fac = factorize(abs(val.numerator))
        r = fac.omega() if fac.complete else 0
        return _LevelResult(r=r or 0, S=S, assignments=[{}], prefixes=[], exhausted=False)

    pivot = _pivot_choice(P, families, active)
    rest = tuple(v for v in active if v != pivot)

    # refine every family into choice families of irreducible factors
    refined: list[tuple[MultiPoly, ...]] = []
    S_const: set[int] = set()
    for fam in families:
        choice_fams, cps = _refine_family(fam, variables, budget.choice_cap)
        S_const |= cps
        refined.extend(choice_fams)

    # split the target into content and pivot-primitive part
    if P.is_zero():
        raise ValueError("target polynomial is identically zero")
    H, His = _content_split(P, pivot, variables)
    calP_deg = len(His) - 1

    # recursive families: coefficients of the primitive part, plus per choice
    # family either the family itself (pivot-independent) or the coefficient
    # families of its pivot-dependent members
    rec_families: list[tuple[MultiPoly, ...]] = []
    rec_families.append(tuple(h for h in His if not h.is_zero()))
    certificates: list[MultiPoly] = []
    dependent_members: list[MultiPoly] = []
    for fam in refined:
        deps = [m for m in fam if _depends_on(m, pivot)]
        if not deps:
            rec_families.append(fam)
            continue
        for m in deps:
            dependent_members.append(m)
            d = m.degree_in(pivot)
            coeff_fam = tuple(
                c for i in range(d + 1) if not (c := m.coeff_in(pivot, i)).is_zero()
            )
            if not any(c.is_constant() for c in coeff_fam):
                rec_families.append(coeff_fam)
        certificates.append(_family_certificate(fam, pivot, rest))

    # drop recursive families that contain a nonzero constant (auto-coprime)
    kept_rec = []
    for fam in rec_families:
        fam = tuple(m for m in fam if not m.is_zero())
        if not fam:
            continue
        consts = [m for m in fam if m.is_constant()]
        if consts:
            for m in consts:
                c = m.constant_value()
                for part in (abs(c.numerator), c.denominator):
                    if part > 1:
                        S_const |= set(factorize(part).primes())
            continue
        kept_rec.append(fam)

    sub = _sieve_level(H, kept_rec, rest, variables, budget)

    # degree window for the prime set (uniform over prefixes)
    window = calP_deg + sum(m.degree_in(pivot) for m in dependent_members)
    S_level = set(sub.S) | S_const | set(primes_upto(window))

    assignments: list[dict[str, int]] = []
    prefixes: list[PrefixRecord] = list(sub.prefixes)
    exhausted = sub.exhausted
    max_single_r = 0

    for assign in sub.assignments[: budget.prefix_want]:
        # specialize at the prefix
        point = dict(assign)
        M = 1
        degenerate = False
        for Q in certificates:
            qv = Q.eval({v: point.get(v, 0) for v in Q.variables})
            qi = int(qv)
            if qi == 0:
                degenerate = True
                break
            M *= qi
        if degenerate:
            continue
        calP_terms = {}
        for i, h in enumerate(His):
            hv = h.eval({v: point.get(v, 0) for v in h.variables})
            if hv:
                e = [0] * len(variables)
                e[variables.index(pivot)] = i
                calP_terms[tuple(e)] = hv
        calP = MultiPoly(variables, calP_terms)
        if calP.is_zero():
            continue
        spec_deps = []
        for m in dependent_members:
            sm = m.substitute(
                {v: Fraction(point.get(v, 0)) for v in m.used_variables() if v != pivot}
            )
            if not sm.is_zero():
                spec_deps.append(sm)
        # integer-scale the instances; scaling primes join the prime set
        instances = []
        for inst in [calP] + spec_deps:
            den = inst.denominator_lcm()
            if den != 1:
                inst = inst.scale(den)
                S_level |= set(factorize(den).primes())
            instances.append(inst)
            if not inst.is_constant():
                S_level |= set(bad_prime_bound(inst).primes)
        try:
            a, b = progression_avoiding(M, instances)
        except ValueError:
            continue  # no admissible residue at this prefix: skip it
        H_val = H.eval({v: point.get(v, 0) for v in H.variables})
        if H_val == 0:
            continue
        # search the full target P(prefix, pivot) = H_val * calP(pivot)
        full = calP.scale(H_val)
        r_target = max(1, calP_deg)
        outcome = None
        for r_try in range(r_target, r_target + budget.r_extra_cap + 1):
            outcome = single_variable_almost_primes(
                full,
                S_level,
                (a, b),
                sub.r + r_try,
                budget.search_bound,
                budget.value_want,
                budget.factor,
            )
            if outcome.values:
                break
        exhausted = exhausted or outcome.exhausted
        if not outcome.values:
            continue
        max_single_r = max(max_single_r, max(outcome.omegas))
        prefixes.append(
            PrefixRecord(
                prefix=tuple(point.get(v, 0) for v in variables if v in rest),
                M=M,
                progression=(a, b),
                values=outcome.values,
                instances=tuple(instances),
            )
        )
        for n in outcome.values:
            new = dict(point)
            new[pivot] = n
            assignments.append(new)

    # the searched values are of the full product H * calP, so their observed
    # omega already accounts for the content's factors
    return _LevelResult(
        r=max_single_r,
        S=S_level,
        assignments=assignments,
        prefixes=prefixes,
        exhausted=exhausted,
    )


def multivariable_sieve(
    problem: UniSieveProblem, budget: SieveBudget = SieveBudget()
) -> UniSieveResult:
    """Emit integer points where the target value is S-almost-prime and every
    family gcd is S-supported, with the recursion's certificates re-checked
    per point from the original polynomials."""
    variables = problem.variables
    level = _sieve_level(
        problem.P, list(problem.families), variables, variables, budget
    )
    S = tuple(sorted(level.S))
    points: list[EmittedPoint] = []
    dropped = 0
    max_omega = 0
    for assign in level.assignments:
        x = tuple(int(assign.get(v, 0)) for v in variables)
        val = problem.P.eval(dict(zip(variables, x)))
        if val == 0:
            dropped += 1
            continue
        om = omega_outside(val.numerator, S, budget=budget.factor)
        gcds = []
        ok = om is not None
        for fam in problem.families:
            g = 0
            for m in fam:
                mv = m.eval(dict(zip(variables, x)))
                g = math.gcd(g, abs(mv.numerator))
            if g == 0:
                ok = False
                break
            rest = g
            for p in S:
                while rest % p == 0:
                    rest //= p
            if rest != 1:
                ok = False
                break
            gcds.append(g)
        if not ok:
            dropped += 1
            continue
        max_omega = max(max_omega, om)
        points.append(
            EmittedPoint(x=x, value=val.numerator, omega=om, family_gcds=tuple(gcds))
        )
    return UniSieveResult(
        variables=variables,
        r=max_omega,
        S=S,
        points=tuple(points),
        prefixes=tuple(level.prefixes),
        exhausted=level.exhausted,
        dropped=dropped,
    )


# ---------------------------------------------------------------------------
# group-level wrapper


def _symbolic_exp(
    lattice: NilpotentLog, variables: tuple[str, ...]
) -> list[list[MultiPoly]]:
    """Matrix entries of exp(scale * sum_i y_i B_i) as polynomials in y."""
    n = lattice.n
    zero = MultiPoly.constant(variables, 0)
    N = [[zero for _ in range(n)] for _ in range(n)]
    for idx, B in enumerate(lattice.basis):
        y = MultiPoly.var(variables, variables[idx])
        for i in range(n):
            for j in range(n):
                if B[i][j]:
                    N[i][j] = N[i][j] + y.scale(Fraction(lattice.scale) * B[i][j])
    out = [
        [MultiPoly.constant(variables, 1 if i == j else 0) for j in range(n)]
        for i in range(n)
    ]
    term = [
        [MultiPoly.constant(variables, 1 if i == j else 0) for j in range(n)]
        for i in range(n)
    ]
    for k in range(1, n):
        nxt = [[zero for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                acc = zero
                for l in range(n):
                    acc = acc + term[i][l] * N[l][j]
                nxt[i][j] = acc
        term = nxt
        inv = Fraction(1, math.factorial(k))
        for i in range(n):
            for j in range(n):
                out[i][j] = out[i][j] + term[i][j].scale(inv)
    return out


def unipotent_group_sieve(
    gens: Sequence,
    p: MultiPoly,
    families: Sequence[Sequence[MultiPoly]],
    budget: SieveBudget = SieveBudget(),
) -> UniSieveResult:
    """Sieve on the group generated by unipotent upper triangular matrices.

    ``p`` and the family members are polynomials in the matrix-entry
    variables x11..xnn; they are rewritten in lattice coordinates, sieved,
    and every emitted point is re-verified by evaluating the original
    polynomials on the emitted matrix directly.
    """
    lattice = malcev_lattice(gens)
    k = lattice.rank
    yvars = tuple(f"y{i+1}" for i in range(k))
    entries = _symbolic_exp(lattice, yvars)
    n = lattice.n
    subst: dict[str, MultiPoly] = {}
    for i in range(n):
        for j in range(n):
            subst[f"x{i+1}{j+1}"] = entries[i][j]

    def rewrite(poly: MultiPoly) -> MultiPoly:
        out = MultiPoly.constant(yvars, 0)
        for exps, c in poly.terms.items():
            term = MultiPoly.constant(yvars, c)
            for name, e in zip(poly.variables, exps):
                if e:
                    if name not in subst:
                        raise ValueError(f"unknown entry variable {name}")
                    for _ in range(e):
                        term = term * subst[name]
            out = out + term
        return out

    problem = UniSieveProblem(
        variables=yvars,
        P=rewrite(p),
        families=tuple(tuple(rewrite(m) for m in fam) for fam in families),
    )
    result = multivariable_sieve(problem, budget)

    # independent matrix-route re-verification of every emitted point
    verified: list[EmittedPoint] = []
    matrices: list[MatrixQ] = []
    dropped = result.dropped
    for pt in result.points:
        mat = MatrixQ(lattice.lattice_point(pt.x))
        env = mat.entry_dict()
        val = p.eval({v: env[v] for v in p.variables})
        if val.numerator != pt.value or val.denominator != 1:
            dropped += 1
            continue
        om = omega_outside(val.numerator, result.S, budget=budget.factor)
        ok = om is not None and om <= result.r
        for fam, g_claim in zip(families, pt.family_gcds):
            g = 0
            for m in fam:
                mv = m.eval({v: env[v] for v in m.variables})
                g = math.gcd(g, abs(mv.numerator))
            if g != g_claim:
                ok = False
                break
        if not ok:
            dropped += 1
            continue
        verified.append(pt)
        matrices.append(mat)
    return replace(
        result, points=tuple(verified), matrices=tuple(matrices), dropped=dropped
    )
