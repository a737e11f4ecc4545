"""Balanced length of dissimilarity maps over partial circular orderings and
split systems, adjacency counts, and the Z-criterion.

Everything here is oracle machinery: the enumerators are capped and the
agglomeration engine never calls them. All quantities stay exact when the
input distances are exact.

The balanced length of a map d over a partial circular ordering C averages
half the tour length over every circular ordering consistent with C:

    l(d, C) = (1 / |o(C)|) * sum_orderings (1/2) sum_k d(x_k, x_{k+1})
            = (1 / (2 |o(C)|)) * sum_{i<j} eta_C(i, j) d(i, j)

where eta_C(i, j) counts the consistent orderings in which i and j are
adjacent. The split-system length uses the same normalization with
"consistent" meaning every split is a contiguous arc of the ordering.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product
from typing import Iterable, Sequence

from .agglomerate import BlockState, q_criterion
from .core import (
    CircularOrdering,
    DissimilarityMap,
    Num,
    PartialCircularOrdering,
    Split,
    canonical_cycle,
    canonical_orderings,
    count_distinct_orderings,
    is_circular_split,
    join_paths,
)

DEFAULT_CAP = 10**6


class EnumerationCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class EtaTable:
    """Adjacency counts eta(i, j) per unordered pair, with the number of
    orderings they were counted over."""

    n: int
    counts: dict
    total_orderings: Num

    def eta(self, i: int, j: int) -> Num:
        if i == j:
            return 0
        return self.counts.get((min(i, j), max(i, j)), 0)

    def row_sum(self, i: int) -> Num:
        return sum(self.eta(i, j) for j in range(self.n) if j != i)

    def pairs(self):
        for i in range(self.n):
            for j in range(i + 1, self.n):
                yield i, j


def count_consistent_orderings(pco: PartialCircularOrdering) -> int:
    """(1/2) (m-1)! * prod_r |endpoints(C_r)|, and 1 for a single block."""
    m = pco.m
    if m == 1:
        return 1
    prod = 1
    for r in range(m):
        prod *= len(pco.endpoints(r))
    return math.factorial(m - 1) * prod // 2


def enumerate_consistent_orderings(
    pco: PartialCircularOrdering, cap: int = DEFAULT_CAP
) -> list:
    """All canonical circular orderings that keep every block's path intact."""
    expected = count_consistent_orderings(pco)
    if expected > cap:
        raise EnumerationCapExceeded(f"{expected} consistent orderings exceed cap {cap}")
    first, rest = pco.blocks[0], pco.blocks[1:]
    seen = set()
    for perm in permutations(rest):
        arrangement = (first,) + perm
        orient_choices = [
            ((b, b[::-1]) if len(b) > 1 else (b,)) for b in arrangement
        ]
        for oriented in product(*orient_choices):
            seq = [t for b in oriented for t in b]
            seen.add(canonical_cycle(seq))
    assert len(seen) == expected
    return [CircularOrdering(o) for o in sorted(seen)]


def pco_join(
    pco: PartialCircularOrdering, r: int, s: int, i: int, j: int
) -> PartialCircularOrdering:
    """The single-edge extension joining block r at endpoint i to block s at j."""
    if r == s:
        raise ValueError("r and s must differ")
    merged = join_paths(pco.blocks[r], pco.blocks[s], i, j)
    lo, hi = min(r, s), max(r, s)
    blocks = list(pco.blocks)
    blocks[lo] = merged
    del blocks[hi]
    return PartialCircularOrdering(blocks)


def join_extensions(pco: PartialCircularOrdering, r: int, s: int):
    """All joined partial orderings over the endpoint choices of blocks r, s."""
    for i in pco.endpoints(r):
        for j in pco.endpoints(s):
            yield (i, j), pco_join(pco, r, s, i, j)


def _tour_length(d: DissimilarityMap, seq: Sequence[int]) -> Num:
    n = len(seq)
    return sum(d[seq[k], seq[(k + 1) % n]] for k in range(n))


def _ratio(num: Num, den: int, exact: bool) -> Num:
    return Fraction(num, den) if exact else num / den


def eta_table(pco: PartialCircularOrdering, cap: int = DEFAULT_CAP) -> EtaTable:
    """Brute-force adjacency counts over the consistent orderings."""
    orderings = enumerate_consistent_orderings(pco, cap)
    counts: dict = defaultdict(int)
    for o in orderings:
        seq = o.order
        n = len(seq)
        for k in range(n):
            a, b = seq[k], seq[(k + 1) % n]
            counts[(min(a, b), max(a, b))] += 1
    return EtaTable(pco.n, dict(counts), len(orderings))


def eta_table_for_join(
    pco: PartialCircularOrdering, r: int, s: int, mu
) -> EtaTable:
    """Closed-form adjacency counts over o(C_{r,s}), the orderings consistent
    with some endpoint joining of blocks r and s.

    Only valid for TSP-style weightings (interior weights zero) and m >= 3.
    """
    m = pco.m
    if m < 3:
        raise ValueError("closed form requires at least 3 blocks")
    if r == s:
        raise ValueError("r and s must differ")
    for t_idx, block in enumerate(pco.blocks):
        ends = pco.endpoints(t_idx)
        for t in block:
            if t not in ends and mu[t] != 0:
                raise ValueError("closed form requires a TSP weighting (interior weights zero)")
    exact = all(not isinstance(v, float) for v in mu.values())
    n_total = count_consistent_orderings(pco)
    block_of = {t: b for b, blk in enumerate(pco.blocks) for t in blk}
    adjacent = set()
    for a, b in pco.adjacent_pairs():
        adjacent.add((min(a, b), max(a, b)))

    counts = {}
    n = pco.n
    for i in range(n):
        for j in range(i + 1, n):
            bi, bj = block_of[i], block_of[j]
            if bi == bj:
                val = _ratio(2 * n_total, m - 1, exact) if (i, j) in adjacent else 0
            else:
                mm = mu[i] * mu[j]
                if {bi, bj} == {r, s}:
                    val = _ratio(2 * n_total * mm, m - 1, exact)
                elif bi in (r, s) or bj in (r, s):
                    val = _ratio(2 * n_total * mm, (m - 1) * (m - 2), exact)
                else:
                    val = _ratio(4 * n_total * mm, (m - 1) * (m - 2), exact)
            if val:
                counts[(i, j)] = val
    return EtaTable(n, counts, _ratio(2 * n_total, m - 1, exact))


def balanced_length(
    d: DissimilarityMap, pco: PartialCircularOrdering, cap: int = DEFAULT_CAP
) -> Num:
    """Average half tour length over the orderings consistent with pco."""
    if d.n != pco.n:
        raise ValueError("taxon count mismatch")
    orderings = enumerate_consistent_orderings(pco, cap)
    total = sum(_tour_length(d, o.order) for o in orderings)
    return _ratio(total, 2 * len(orderings), d.is_exact)


def balanced_length_from_eta(d: DissimilarityMap, table: EtaTable) -> Num:
    """The eta-weighted form of the balanced length; agrees with the average."""
    total = sum(table.eta(i, j) * d[i, j] for i, j in table.pairs())
    if d.is_exact:
        return Fraction(total) / (2 * Fraction(table.total_orderings))
    return total / (2 * table.total_orderings)


def balanced_length_of_join_family(
    d: DissimilarityMap,
    pco: PartialCircularOrdering,
    r: int,
    s: int,
    cap: int = DEFAULT_CAP,
) -> Num:
    """l(d, C_{r,s}): balanced length over the union of the endpoint joinings."""
    seen = set()
    for _, joined in join_extensions(pco, r, s):
        for o in enumerate_consistent_orderings(joined, cap):
            seen.add(o.order)
    total = sum(_tour_length(d, seq) for seq in seen)
    return _ratio(total, 2 * len(seen), d.is_exact)


def w_neighborliness(state: BlockState, r: int, s: int, t: int, u: int) -> Num:
    """Pairwise neighborliness w(C_r C_s : C_t C_u)."""
    bd = state.block_distance
    val = (
        bd(r, t) + bd(r, u) + bd(s, t) + bd(s, u) - 2 * bd(r, s) - 2 * bd(t, u)
    )
    return _ratio(val, 2, state.is_exact)


def z_criterion(state: BlockState, r: int, s: int) -> Num:
    """Balanced-length decrease achieved by joining blocks r and s:

        Z(r, s) = l(d, C) - l(d, C_{r,s})
                = -P / ((m-1)(m-2)) - Q(r, s) / (2 (m-2))

    with P the sum of block distances over unordered pairs. Equivalently
    Z = sum_{t<u not in {r,s}} w(C_r C_s : C_t C_u) / ((m-1)(m-2)). Requires
    m >= 3 blocks.
    """
    if r == s:
        raise ValueError("r and s must differ")
    m = state.m
    if m < 3:
        raise ValueError("Z-criterion requires at least 3 blocks")
    p_total = state.total_pair_sum()
    q = q_criterion(state, r, s)
    if state.is_exact:
        return -Fraction(p_total) / ((m - 1) * (m - 2)) - Fraction(q) / (2 * (m - 2))
    return -p_total / ((m - 1) * (m - 2)) - q / (2 * (m - 2))


def z_from_w_sum(state: BlockState, r: int, s: int) -> Num:
    """Z recomputed from the neighborliness sum; equals z_criterion."""
    m = state.m
    if m < 3:
        raise ValueError("requires at least 3 blocks")
    others = [t for t in range(m) if t not in (r, s)]
    total = 0
    for a in range(len(others)):
        for b in range(a + 1, len(others)):
            total += w_neighborliness(state, r, s, others[a], others[b])
    return _ratio(total, (m - 1) * (m - 2), state.is_exact)


def split_system_orderings(
    splits: Iterable[Split], n: int, cap: int = DEFAULT_CAP
) -> list:
    """Canonical orderings for which every split is a contiguous arc."""
    splits = list(splits)
    if any(s.n != n for s in splits):
        raise ValueError("split taxon count mismatch")
    if count_distinct_orderings(n) > cap:
        raise EnumerationCapExceeded(
            f"{count_distinct_orderings(n)} candidate orderings exceed cap {cap}"
        )
    out = []
    for seq in canonical_orderings(n):
        o = CircularOrdering(seq)
        if all(is_circular_split(s, o) for s in splits):
            out.append(o)
    return out


def eta_for_splits(splits: Iterable[Split], n: int, cap: int = DEFAULT_CAP) -> EtaTable:
    orderings = split_system_orderings(splits, n, cap)
    if not orderings:
        raise ValueError("no circular ordering is consistent with the split system")
    counts: dict = defaultdict(int)
    for o in orderings:
        seq = o.order
        for k in range(n):
            a, b = seq[k], seq[(k + 1) % n]
            counts[(min(a, b), max(a, b))] += 1
    return EtaTable(n, dict(counts), len(orderings))


def split_system_length(
    d: DissimilarityMap, splits: Iterable[Split], cap: int = DEFAULT_CAP
) -> Num:
    """Length of d with respect to a circular split system, normalized the same
    way as the balanced length over partial orderings."""
    table = eta_for_splits(splits, d.n, cap)
    total = sum(table.eta(i, j) * d[i, j] for i, j in table.pairs())
    return _ratio(total, 2 * table.total_orderings, d.is_exact)
