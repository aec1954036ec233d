"""Exact matrix groups over Q: generator sets, word-metric balls by BFS,
orbit slices, the affine embedding, an S-adapted norm surrogate, and
derived-series generator sets.

Matrices are immutable tuples of tuples of Fraction; dedup is by exact
entries, so relations in the group are handled without any freeness
assumption.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .core_arith import check_prime_set, padic_valuation

Entries = tuple[tuple[Fraction, ...], ...]


class ResourceCapError(RuntimeError):
    """Enumeration hit its cardinality cap; carries the partial radius reached."""

    def __init__(self, message: str, partial_radius: int, size: int):
        super().__init__(message)
        self.partial_radius = partial_radius
        self.size = size


def _freeze(entries) -> Entries:
    return tuple(tuple(Fraction(x) for x in row) for row in entries)


@dataclass(frozen=True)
class MatrixQ:
    """Invertible square matrix with exact rational entries."""

    entries: Entries

    def __init__(self, entries):
        rows = _freeze(entries)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("matrix must be square")
        object.__setattr__(self, "entries", rows)

    @property
    def n(self) -> int:
        return len(self.entries)

    @classmethod
    def identity(cls, n: int) -> "MatrixQ":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    def __matmul__(self, other: "MatrixQ") -> "MatrixQ":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        a, b = self.entries, other.entries
        n = self.n
        return MatrixQ(
            [
                [sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)]
                for i in range(n)
            ]
        )

    def det(self) -> Fraction:
        # fraction-free-ish Gaussian elimination on a copy
        n = self.n
        m = [list(r) for r in self.entries]
        det = Fraction(1)
        for col in range(n):
            piv = next((r for r in range(col, n) if m[r][col] != 0), None)
            if piv is None:
                return Fraction(0)
            if piv != col:
                m[col], m[piv] = m[piv], m[col]
                det = -det
            det *= m[col][col]
            inv = 1 / m[col][col]
            for r in range(col + 1, n):
                f = m[r][col] * inv
                if f:
                    m[r] = [x - f * y for x, y in zip(m[r], m[col])]
        return det

    def inverse(self) -> "MatrixQ":
        n = self.n
        m = [list(r) + [Fraction(1 if i == j else 0) for j in range(n)] for i, r in enumerate(self.entries)]
        for col in range(n):
            piv = next((r for r in range(col, n) if m[r][col] != 0), None)
            if piv is None:
                raise ValueError("singular matrix")
            m[col], m[piv] = m[piv], m[col]
            inv = 1 / m[col][col]
            m[col] = [x * inv for x in m[col]]
            for r in range(n):
                if r != col and m[r][col]:
                    f = m[r][col]
                    m[r] = [x - f * y for x, y in zip(m[r], m[col])]
        return MatrixQ([row[n:] for row in m])

    def trace(self) -> Fraction:
        return sum(self.entries[i][i] for i in range(self.n))

    def apply(self, v: Sequence) -> tuple[Fraction, ...]:
        vv = tuple(Fraction(x) for x in v)
        if len(vv) != self.n:
            raise ValueError("vector dimension mismatch")
        return tuple(sum(row[j] * vv[j] for j in range(self.n)) for row in self.entries)

    def is_identity(self) -> bool:
        return self == MatrixQ.identity(self.n)

    def transpose(self) -> "MatrixQ":
        return MatrixQ(list(zip(*self.entries)))

    def entry_dict(self, prefix: str = "x") -> dict[str, Fraction]:
        """Entries keyed x11, x12, ... for polynomial evaluation."""
        out = {}
        for i, row in enumerate(self.entries, start=1):
            for j, x in enumerate(row, start=1):
                out[f"{prefix}{i}{j}"] = x
        return out

    def __repr__(self):
        rows = ["[" + ", ".join(str(x) for x in r) + "]" for r in self.entries]
        return "MatrixQ([" + ", ".join(rows) + "])"


def entry_variable_names(n: int, prefix: str = "x") -> tuple[str, ...]:
    return tuple(f"{prefix}{i}{j}" for i in range(1, n + 1) for j in range(1, n + 1))


def _sort_key(m: MatrixQ):
    return tuple(
        (x.numerator, x.denominator) for row in m.entries for x in row
    )


@dataclass(frozen=True)
class GeneratorSet:
    generators: tuple[MatrixQ, ...]
    symmetric: bool = True

    def __init__(self, generators: Iterable, symmetric: bool = True):
        gens = [g if isinstance(g, MatrixQ) else MatrixQ(g) for g in generators]
        if not gens:
            raise ValueError("need at least one generator")
        n = gens[0].n
        seen: set[Entries] = set()
        out = []
        for g in gens:
            if g.n != n:
                raise ValueError("generator dimension mismatch")
            if g.det() == 0:
                raise ValueError("generators must be invertible")
            if g.is_identity():
                continue
            if g.entries not in seen:
                seen.add(g.entries)
                out.append(g)
        if symmetric:
            for g in list(out):
                inv = g.inverse()
                if inv.entries not in seen:
                    seen.add(inv.entries)
                    out.append(inv)
        out.sort(key=_sort_key)
        object.__setattr__(self, "generators", tuple(out))
        object.__setattr__(self, "symmetric", symmetric)

    @property
    def n(self) -> int:
        return self.generators[0].n


@dataclass(frozen=True)
class Ball:
    """Word-metric ball: every element with its exact word length <= L."""

    L: int
    length: dict[Entries, int]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def elements(self) -> list[MatrixQ]:
        if "elements" not in self._cache:
            elems = [MatrixQ(e) for e in self.length]
            elems.sort(key=lambda m: (self.length[m.entries], _sort_key(m)))
            self._cache["elements"] = elems
        return self._cache["elements"]

    def __len__(self):
        return len(self.length)

    def word_length(self, gamma: MatrixQ) -> int:
        return self.length[gamma.entries]


def ball(gens: GeneratorSet, L: int, cap: int = 5_000_000) -> Ball:
    """BFS over words in the symmetrized generators, deduplicated by exact
    entries; deterministic frontier order."""
    if L < 0:
        raise ValueError("radius must be >= 0")
    n = gens.n
    ident = MatrixQ.identity(n)
    length: dict[Entries, int] = {ident.entries: 0}
    frontier = [ident]
    for radius in range(1, L + 1):
        nxt = []
        for w in frontier:
            for g in gens.generators:
                m = w @ g
                if m.entries not in length:
                    length[m.entries] = radius
                    nxt.append(m)
                    if len(length) > cap:
                        raise ResourceCapError(
                            f"ball cap {cap} exceeded at radius {radius}",
                            partial_radius=radius - 1,
                            size=len(length),
                        )
        nxt.sort(key=_sort_key)
        frontier = nxt
    return Ball(L=L, length=length)


@dataclass(frozen=True)
class OrbitSlice:
    base: tuple[Fraction, ...]
    points: dict[tuple[Fraction, ...], int]  # point -> minimal word length

    def __len__(self):
        return len(self.points)

    def sorted_points(self) -> list[tuple[Fraction, ...]]:
        return sorted(
            self.points,
            key=lambda p: (self.points[p], [(x.numerator, x.denominator) for x in p]),
        )


def orbit(gens: GeneratorSet, v: Sequence, L: int, cap: int = 5_000_000) -> OrbitSlice:
    """{gamma v : l(gamma) <= L} by BFS directly on points (cheaper than a full
    ball when the stabilizer is large)."""
    if L < 0:
        raise ValueError("radius must be >= 0")
    base = tuple(Fraction(x) for x in v)
    if len(base) != gens.n:
        raise ValueError("vector dimension mismatch")
    points: dict[tuple[Fraction, ...], int] = {base: 0}
    frontier = [base]
    for radius in range(1, L + 1):
        nxt = []
        for p in frontier:
            for g in gens.generators:
                q = g.apply(p)
                if q not in points:
                    points[q] = radius
                    nxt.append(q)
                    if len(points) > cap:
                        raise ResourceCapError(
                            f"orbit cap {cap} exceeded at radius {radius}",
                            partial_radius=radius - 1,
                            size=len(points),
                        )
        nxt.sort(key=lambda t: [(x.numerator, x.denominator) for x in t])
        frontier = nxt
    return OrbitSlice(base=base, points=points)


def affine_embed(A: MatrixQ, b: Sequence) -> MatrixQ:
    """x -> Ax + b as the (n+1)x(n+1) block matrix [[A, b], [0, 1]]."""
    bb = tuple(Fraction(x) for x in b)
    if len(bb) != A.n:
        raise ValueError("translation dimension mismatch")
    n = A.n
    rows = [list(A.entries[i]) + [bb[i]] for i in range(n)]
    rows.append([Fraction(0)] * n + [Fraction(1)])
    return MatrixQ(rows)


def s_norm(gamma: MatrixQ, S: Iterable[int] = ()) -> Fraction:
    """Computable norm surrogate: max of the archimedean bound n * max|entry|
    and, per p in S, the max p-adic norm of the entries.

    Submultiplicative up to the factor n: s_norm(ab) <= n * s_norm(a) * s_norm(b).
    """
    Sset = check_prime_set(S)
    arch = Fraction(gamma.n) * max(abs(x) for row in gamma.entries for x in row)
    best = arch
    for p in Sset:
        for row in gamma.entries:
            for x in row:
                if x == 0:
                    continue
                np = Fraction(p) ** (-padic_valuation(x, p))
                if np > best:
                    best = np
    return best


def derived_generators(gens: GeneratorSet, depth: int) -> Optional[GeneratorSet]:
    """Commutator generator sets, iterated `depth` times.

    Approximates the derived series: the result generates a subgroup of the
    i-th derived group, not necessarily all of it.  Returns None when every
    commutator collapses to the identity (abelian level reached).
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    current = gens
    for _ in range(depth):
        gs = current.generators
        comms = []
        for a in gs:
            for b in gs:
                c = a.inverse() @ b.inverse() @ a @ b
                if not c.is_identity():
                    comms.append(c)
        if not comms:
            return None
        current = GeneratorSet(comms, symmetric=True)
    return current
