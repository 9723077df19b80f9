"""
Compressed pattern-matching index for rlbwt-lab
Fragment-pair range structure plus reporting, leftmost/rightmost and counting queries.

Patterns are always given by one of their occurrences, as a Fragment of T.
"""
import logging
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import GrammarError
from .grammar_queries import Fragment, GrammarText
from .range_tree import RangeTree
from .rlslp import Pair, Power, Rlslp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FragTriple:
    x: Fragment
    y: Fragment
    w: int


@dataclass
class FragPairSet:
    triples: List[FragTriple] = field(default_factory=list)

    def add(self, x: Fragment, y: Fragment, w: int) -> None:
        self.triples.append(FragTriple(x, y, w))

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)


def _dense_ranks(items: Sequence[Fragment], cmp) -> Tuple[List[int], List[Fragment]]:
    """Rank of every item under cmp (equal strings share a rank) and one representative per rank."""
    order = sorted(range(len(items)), key=cmp_to_key(lambda i, j: cmp(items[i], items[j])))
    ranks = [0] * len(items)
    reps: List[Fragment] = []
    for pos, idx in enumerate(order):
        if pos == 0 or cmp(items[order[pos - 1]], items[idx]) != 0:
            reps.append(items[idx])
        ranks[idx] = len(reps) - 1
    return ranks, reps


def _match_range(reps: Sequence[Fragment], query: Fragment, cmp) -> Optional[Tuple[int, int]]:
    """Inclusive rank range of representatives that cmp reports as matching query."""
    lo, hi = 0, len(reps)
    while lo < hi:
        mid = (lo + hi) // 2
        if cmp(reps[mid], query) < 0:
            lo = mid + 1
        else:
            hi = mid
    first = lo
    hi = len(reps)
    while lo < hi:
        mid = (lo + hi) // 2
        if cmp(reps[mid], query) <= 0:
            lo = mid + 1
        else:
            hi = mid
    if first >= lo:
        return None
    return first, lo - 1


class RangeStructure:
    """Weights of triples whose x has a given suffix and whose y has a given prefix."""

    def __init__(self, text: GrammarText, x_reps, y_reps, points: Sequence[Tuple[int, int, int]]):
        self.text = text
        self._x_reps = x_reps
        self._y_reps = y_reps
        self._points = list(points)
        self._tree = RangeTree(self._points)

    def reweighted(self, weights: Sequence[int]) -> "RangeStructure":
        """Same triples and ranks with a new weight per triple."""
        points = [(x, y, w) for (x, y, _), w in zip(self._points, weights)]
        return RangeStructure(self.text, self._x_reps, self._y_reps, points)

    def _rect(self, x_query: Fragment, y_query: Fragment):
        xr = _match_range(self._x_reps, x_query, self.text.suffix_cmp)
        if xr is None:
            return None
        yr = _match_range(self._y_reps, y_query, self.text.prefix_cmp)
        if yr is None:
            return None
        return xr[0], xr[1], yr[0], yr[1]

    def enumerate(self, x_query: Fragment, y_query: Fragment) -> List[int]:
        rect = self._rect(x_query, y_query)
        return self._tree.enumerate(*rect) if rect else []

    def minimum(self, x_query: Fragment, y_query: Fragment) -> Optional[int]:
        rect = self._rect(x_query, y_query)
        return self._tree.minimum(*rect) if rect else None

    def total(self, x_query: Fragment, y_query: Fragment) -> int:
        rect = self._rect(x_query, y_query)
        return self._tree.total(*rect) if rect else 0

    def __len__(self) -> int:
        return len(self._points)


def build_range(pairs: FragPairSet, text: GrammarText) -> RangeStructure:
    """Rank x by reversed-lex order and y by lex order, then index the weighted points."""
    triples = list(pairs)
    x_ranks, x_reps = _dense_ranks([t.x for t in triples], text.compare_reversed)
    y_ranks, y_reps = _dense_ranks([t.y for t in triples], text.compare)
    points = [(x_ranks[i], y_ranks[i], t.w) for i, t in enumerate(triples)]
    return RangeStructure(text, x_reps, y_reps, points)


@dataclass
class PowerExponentTable:
    """K(B) with suffix aggregates Σ k·count(A) and Σ count(A) over rules A -> B^k."""

    exponents: Dict[int, List[int]] = field(default_factory=dict)
    sum_k: Dict[int, List[int]] = field(default_factory=dict)
    sum_count: Dict[int, List[int]] = field(default_factory=dict)

    @classmethod
    def from_grammar(cls, grammar: Rlslp) -> "PowerExponentTable":
        per_base: Dict[int, Dict[int, int]] = defaultdict(lambda: defaultdict(int))
        for idx, rule in grammar.power_rules():
            per_base[rule.base][rule.exp] += grammar.counts[idx]
        table = cls()
        for base, by_exp in per_base.items():
            ks = sorted(set(by_exp) | {1})
            sk = [0] * len(ks)
            sc = [0] * len(ks)
            acc_k = acc_c = 0
            for pos in range(len(ks) - 1, -1, -1):
                sk[pos], sc[pos] = acc_k, acc_c
                acc_k += ks[pos] * by_exp.get(ks[pos], 0)
                acc_c += by_exp.get(ks[pos], 0)
            table.exponents[base] = ks
            table.sum_k[base] = sk
            table.sum_count[base] = sc
        return table

    def count(self, base: int, m: int) -> int:
        """Σ (k-m)·count(A) over rules A -> base^k with k > m."""
        if m < 1:
            raise ValueError(f"m must be positive, got {m}")
        ks = self.exponents.get(base)
        if ks is None:
            return 0
        pos = bisect_right(ks, m) - 1
        return self.sum_k[base][pos] - m * self.sum_count[base][pos]


class CompressedIndex:
    """Reporting, leftmost/rightmost and counting over a recompression RLSLP."""

    def __init__(self, grammar: Rlslp, text: Optional[GrammarText] = None):
        self.grammar = grammar
        self.text = text or GrammarText(grammar)
        self.n = grammar.n
        occurrence_pairs = FragPairSet()
        leftmost_weights: List[int] = []
        regular_pairs = FragPairSet()
        for symbol, rule in enumerate(grammar.rules):
            if not isinstance(rule, (Pair, Power)):
                continue
            node = grammar.first_node(symbol)
            left = rule.left if isinstance(rule, Pair) else rule.base
            mid = node.start + grammar.lengths[left]
            x = Fragment(node.start, mid)
            occurrence_pairs.add(x, Fragment(mid, node.end), symbol)
            leftmost_weights.append(mid)
            count = grammar.counts[symbol]
            if isinstance(rule, Pair):
                regular_pairs.add(x, Fragment(mid, node.end), count)
            else:
                regular_pairs.add(x, Fragment(node.start, mid), count)
                if rule.exp > 2:
                    square = Fragment(node.start, node.start + 2 * grammar.lengths[left])
                    regular_pairs.add(x, square, (rule.exp - 2) * count)
        self._report = build_range(occurrence_pairs, self.text)
        self._leftmost = self._report.reweighted(leftmost_weights)
        self._regular = build_range(regular_pairs, self.text)
        self.powers = PowerExponentTable.from_grammar(grammar)
        self._by_expansion = self._sort_by_expansion()
        self._mirror: Optional["CompressedIndex"] = None
        log.debug("index built: %d pair triples, %d regular triples", len(occurrence_pairs), len(regular_pairs))

    def _sort_by_expansion(self) -> List[int]:
        first = self.grammar.first()
        symbols = sorted(first)
        frag = {s: Fragment(first[s].start, first[s].end) for s in symbols}
        order = sorted(symbols, key=cmp_to_key(lambda a, b: self.text.compare(frag[a], frag[b]) or a - b))
        for a, b in zip(order, order[1:]):
            if self.text.compare(frag[a], frag[b]) == 0:
                raise GrammarError(f"symbols {a} and {b} share an expansion")
        return order

    @property
    def mirror(self) -> "CompressedIndex":
        """Index over reverse(T), used for rightmost occurrences."""
        if self._mirror is None:
            self._mirror = CompressedIndex(self.grammar.reversed(), self.text.reverse)
        return self._mirror

    def _check(self, pattern: Fragment) -> None:
        if pattern.length == 0 or pattern.end > self.n + 1:
            raise ValueError(f"pattern fragment [{pattern.start}..{pattern.end}) is not inside T[1..{self.n}]")

    def _terminal(self, pattern: Fragment) -> int:
        symbol = self.grammar.terminal_of(self.text.char_at(pattern.start))
        if symbol is None:
            raise GrammarError(f"no terminal for the character at {pattern.start}")
        return symbol

    def report(self, pattern: Fragment) -> List[int]:
        """All starting positions of the pattern, sorted."""
        self._check(pattern)
        if pattern.length == 1:
            return sorted(node.start for node in self.grammar.enumerate_nodes(self._terminal(pattern)))
        out: List[int] = []
        for a in self.text.anchors(pattern):
            p_left, p_right = pattern.split(a)
            for symbol in self._report.enumerate(p_left, p_right):
                for node in self.grammar.enumerate_nodes(symbol):
                    out.extend(self.text.node_positions(node, a, p_right.length))
        return sorted(out)

    def leftmost(self, pattern: Fragment) -> int:
        self._check(pattern)
        if pattern.length == 1:
            return self.grammar.first_node(self._terminal(pattern)).start
        best = None
        for a in self.text.anchors(pattern):
            p_left, p_right = pattern.split(a)
            weight = self._leftmost.minimum(p_left, p_right)
            if weight is not None and (best is None or weight - a < best):
                best = weight - a
        if best is None:
            raise GrammarError(f"no occurrence found for pattern {pattern}")
        return best

    def rightmost(self, pattern: Fragment) -> int:
        self._check(pattern)
        mirrored = Fragment(self.n - pattern.end + 2, self.n - pattern.start + 2)
        return self.n - self.mirror.leftmost(mirrored) - pattern.length + 2

    def regular_count(self, pattern: Fragment) -> int:
        self._check(pattern)
        if pattern.length == 1:
            return self.grammar.count(self._terminal(pattern))
        total = 0
        for a in self.text.anchors(pattern):
            p_left, p_right = pattern.split(a)
            total += self._regular.total(p_left, p_right)
        return total

    def find_symbol(self, frag: Fragment) -> Optional[int]:
        """The unique symbol expanding to the fragment's content, if any."""
        first = self.grammar.first()
        lo, hi = 0, len(self._by_expansion)
        while lo < hi:
            mid = (lo + hi) // 2
            node = first[self._by_expansion[mid]]
            order = self.text.compare(Fragment(node.start, node.end), frag)
            if order == 0:
                return self._by_expansion[mid]
            if order < 0:
                lo = mid + 1
            else:
                hi = mid
        return None

    def special_count(self, pattern: Fragment) -> int:
        self._check(pattern)
        m = pattern.length
        per = self.text.two_period(pattern)
        if per is None:
            return 0
        total = 0
        for a in self.text.anchors(pattern):
            if not (1 <= a < m and a <= per and 2 * per < m - a):
                continue
            base = self.find_symbol(pattern.sub(a, per))
            if base is None:
                continue
            total += self.powers.count(base, -(-(m - a) // per))
        return total

    def count(self, pattern: Fragment) -> int:
        return self.regular_count(pattern) + self.special_count(pattern)

    def count_power_suffix(self, base: int, m: int) -> int:
        return self.powers.count(base, m)

    def describe(self) -> Dict:
        return {
            "n": self.n,
            "symbols": self.grammar.size,
            "height": self.grammar.height,
            "pair_triples": len(self._report),
            "regular_triples": len(self._regular),
        }


def naive_occurrences(data: bytes, pattern: bytes) -> List[int]:
    """1-based starts of pattern in data by direct scanning."""
    out = []
    pos = data.find(pattern)
    while pos >= 0:
        out.append(pos + 1)
        pos = data.find(pattern, pos + 1)
    return out

