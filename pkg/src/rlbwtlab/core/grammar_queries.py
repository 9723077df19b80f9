"""
Grammar query layer for rlbwt-lab
LCE on T and its reverse, anchor sets, internal pattern matching and 2-period queries.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Set, Tuple

from .errors import GrammarError
from .rlslp import NodeHandle, Pair, Power, Rlslp, Terminal

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Fragment:
    """T[start..end), half-open and 1-based."""

    start: int
    end: int

    def __post_init__(self):
        if not 1 <= self.start <= self.end:
            raise ValueError(f"invalid fragment [{self.start}..{self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start

    def __len__(self) -> int:
        return self.end - self.start

    def split(self, offset: int) -> Tuple["Fragment", "Fragment"]:
        if not 0 <= offset <= self.length:
            raise ValueError(f"split offset {offset} outside [0..{self.length}]")
        mid = self.start + offset
        return Fragment(self.start, mid), Fragment(mid, self.end)

    def sub(self, offset: int, length: int) -> "Fragment":
        """The fragment of `length` characters starting `offset` characters in."""
        return Fragment(self.start + offset, self.start + offset + length)


@dataclass(frozen=True)
class AnchorSet:
    anchors: Tuple[int, ...]

    def __iter__(self):
        return iter(self.anchors)

    def __len__(self) -> int:
        return len(self.anchors)

    def __contains__(self, a: int) -> bool:
        return a in self.anchors


@dataclass(frozen=True)
class ArithProgression:
    """{first + i*step : 0 <= i < count}; empty is (0, 0, 0), a singleton has step 0."""

    first: int = 0
    step: int = 0
    count: int = 0

    def positions(self) -> List[int]:
        return [self.first + i * self.step for i in range(self.count)]

    def __bool__(self) -> bool:
        return self.count > 0

    @classmethod
    def from_positions(cls, positions: Sequence[int]) -> "ArithProgression":
        values = sorted(set(positions))
        if not values:
            return cls()
        if len(values) == 1:
            return cls(values[0], 0, 1)
        step = values[1] - values[0]
        if any(b - a != step for a, b in zip(values, values[1:])):
            raise GrammarError(f"positions {values} do not form an arithmetic progression")
        return cls(values[0], step, len(values))


class GrammarText:
    """Read-only query view of the text generated by a recompression RLSLP."""

    def __init__(self, grammar: Rlslp, reverse: Optional["GrammarText"] = None):
        self.grammar = grammar
        self.n = grammar.n
        self._reverse = reverse

    @property
    def reverse(self) -> "GrammarText":
        """View of reverse(T), built from the grammar with reversed right-hand sides."""
        if self._reverse is None:
            self._reverse = GrammarText(self.grammar.reversed(), reverse=self)
        return self._reverse

    def char_at(self, i: int) -> int:
        return self.grammar.char_at(i)

    def extract(self, frag: Fragment) -> bytes:
        return self.grammar.extract(frag.start, frag.end)

    # -- LCE ---------------------------------------------------------------

    def _lce(self, p: int, q: int) -> int:
        n = self.n
        if p == q:
            return n - p + 1
        levels = self.grammar.levels
        lengths = self.grammar.lengths
        rules = self.grammar.rules
        total = 0
        while p <= n and q <= n:
            best = -1
            symbol = -1
            for idx, level in enumerate(levels):
                if not (level.is_boundary(p) and level.is_boundary(q)):
                    break
                sp = level.symbols[level.index_at(p)]
                if sp != level.symbols[level.index_at(q)]:
                    break
                best, symbol = idx, sp
            if best < 0:
                break
            step = lengths[symbol]
            advance = step
            if best + 1 < len(levels):
                upper = levels[best + 1]
                _, end_p, sym_p = upper.block_at(p)
                _, end_q, sym_q = upper.block_at(q)
                rule_p, rule_q = rules[sym_p], rules[sym_q]
                if (
                    isinstance(rule_p, Power)
                    and isinstance(rule_q, Power)
                    and rule_p.base == symbol
                    and rule_q.base == symbol
                ):
                    advance = min(end_p - p, end_q - q) // step * step
            p += advance
            q += advance
            total += advance
        return total

    def lce(self, i: int, j: int, direction: str = "forward") -> int:
        """Longest common prefix of T[i..] and T[j..] (or of the reversed text)."""
        for pos in (i, j):
            if not 1 <= pos <= self.n + 1:
                raise ValueError(f"LCE position {pos} outside [1..{self.n + 1}]")
        if i == self.n + 1 or j == self.n + 1:
            return 0
        if direction == "forward":
            return self._lce(i, j)
        if direction == "reverse":
            return self.reverse._lce(i, j)
        raise ValueError(f"direction must be 'forward' or 'reverse', got {direction!r}")

    def lcs(self, i: int, j: int) -> int:
        """Longest common suffix of T[..i] and T[..j]; 0 when either prefix is empty."""
        if i == 0 or j == 0:
            return 0
        return self.lce(self.n - i + 1, self.n - j + 1, "reverse")

    # -- fragment comparisons ----------------------------------------------

    def compare(self, a: Fragment, b: Fragment) -> int:
        """Lexicographic comparison of two fragments: -1, 0 or 1."""
        shorter = min(a.length, b.length)
        common = min(self.lce(a.start, b.start), shorter) if shorter else 0
        if common == shorter:
            return (a.length > b.length) - (a.length < b.length)
        ca, cb = self.char_at(a.start + common), self.char_at(b.start + common)
        return -1 if ca < cb else 1

    def compare_reversed(self, a: Fragment, b: Fragment) -> int:
        """Comparison of the reversed fragments."""
        shorter = min(a.length, b.length)
        common = min(self.lcs(a.end - 1, b.end - 1), shorter) if shorter else 0
        if common == shorter:
            return (a.length > b.length) - (a.length < b.length)
        ca, cb = self.char_at(a.end - 1 - common), self.char_at(b.end - 1 - common)
        return -1 if ca < cb else 1

    def prefix_cmp(self, stored: Fragment, query: Fragment) -> int:
        """0 when query is a prefix of stored, else the order of stored against query."""
        if query.length == 0:
            return 0
        common = min(self.lce(stored.start, query.start), stored.length, query.length)
        if common == query.length:
            return 0
        if common == stored.length:
            return -1
        return -1 if self.char_at(stored.start + common) < self.char_at(query.start + common) else 1

    def suffix_cmp(self, stored: Fragment, query: Fragment) -> int:
        """0 when query is a suffix of stored, else the reversed order of stored against query."""
        if query.length == 0:
            return 0
        common = min(self.lcs(stored.end - 1, query.end - 1), stored.length, query.length)
        if common == query.length:
            return 0
        if common == stored.length:
            return -1
        return -1 if self.char_at(stored.end - 1 - common) < self.char_at(query.end - 1 - common) else 1

    def is_prefix_at(self, query: Fragment, pos: int) -> bool:
        return query.length == 0 or (
            pos + query.length <= self.n + 1 and self.lce(query.start, pos) >= query.length
        )

    def is_suffix_at(self, query: Fragment, end: int) -> bool:
        """True when query matches T[end-|query|..end)."""
        return query.length == 0 or (
            end - query.length >= 1 and self.lcs(query.end - 1, end - 1) >= query.length
        )

    # -- anchors and hooks -------------------------------------------------

    def anchors(self, occ: Fragment) -> AnchorSet:
        """Superset of the anchors of every occurrence of the pattern given by occ."""
        m = occ.length
        if m == 0:
            raise ValueError("anchors of an empty pattern are undefined")
        if m == 1:
            return AnchorSet((0,))
        i = occ.start
        levels = self.grammar.levels
        h = len(levels)
        lo, hi = 0, m
        zone = True
        possible: Set[int] = set()
        found: Set[int] = set()
        for idx, level in enumerate(levels):
            inner = []
            if zone:
                inner = [b - i for b in level.boundaries_in(i + lo, i + hi) if i < b < i + m]
            if inner:
                found.add(inner[0])
                found.update(p for p in possible if 0 < p < inner[0])
            else:
                found.update(p for p in possible if 0 < p < m)
            if idx + 1 == h:
                break
            if zone:
                # boundaries strictly inside the zone are the same for every occurrence
                nxt = levels[idx + 1].boundaries_in(i + lo + 1, i + hi - 1)
                possible.update((lo, hi))
                if nxt:
                    lo, hi = nxt[0] - i, nxt[-1] - i
                else:
                    zone = False
        if len(found) > 2 * h:
            log.warning("anchor set of size %d exceeds 2h = %d", len(found), 2 * h)
        return AnchorSet(tuple(sorted(found)))

    def hook(self, occ: Fragment) -> Tuple[NodeHandle, int]:
        """The lowest node containing occ and the anchor of occ inside it."""
        m = occ.length
        if m == 0:
            raise ValueError("hook of an empty fragment is undefined")
        if m == 1:
            return self.grammar.path_to(occ.start)[-1], 0
        levels = self.grammar.levels
        top = None
        for idx, level in enumerate(levels):
            inner = level.boundaries_in(occ.start + 1, occ.end - 1)
            if not inner:
                break
            top = (idx, inner[0])
        idx, boundary = top
        start, end, symbol = levels[idx + 1].block_at(occ.start)
        return NodeHandle(symbol, start, end), boundary - occ.start

    def overlapped_children(self, occ: Fragment, node: NodeHandle) -> int:
        """Number of children of node whose fragments intersect occ."""
        return sum(1 for c in self.grammar.children(node) if c.start < occ.end and occ.start < c.end)

    def is_regular(self, occ: Fragment) -> bool:
        if occ.length == 1:
            return True
        node, _ = self.hook(occ)
        return self.overlapped_children(occ, node) <= 3

    # -- occurrences at a node ---------------------------------------------

    def node_positions(
        self,
        node: NodeHandle,
        left_len: int,
        right_len: int,
        window: Optional[Tuple[int, int]] = None,
    ) -> List[int]:
        """Occurrence starts with hook `node` and anchor `left_len`, once the match is known."""
        rule = self.grammar.rules[node.symbol]
        if isinstance(rule, Terminal):
            out = [node.start]
        elif isinstance(rule, Pair):
            out = [node.start + self.grammar.lengths[rule.left] - left_len]
        else:
            step = self.grammar.lengths[rule.base]
            first, last = 1, rule.exp - (right_len + step - 1) // step
            if window is not None:
                lo, hi = window
                first = max(first, -(-(lo - node.start + left_len) // step))
                last = min(last, (hi - node.start + left_len) // step)
            return [node.start + i * step - left_len for i in range(first, last + 1)]
        if window is not None:
            out = [p for p in out if window[0] <= p <= window[1]]
        return out

    def occ_at_node(
        self,
        p_left: Fragment,
        p_right: Fragment,
        node: NodeHandle,
        window: Optional[Tuple[int, int]] = None,
    ) -> List[int]:
        """Starts of occurrences of P_L·P_R with hook `node` and anchor |P_L|."""
        a, r = p_left.length, p_right.length
        rule = self.grammar.rules[node.symbol]
        lengths = self.grammar.lengths
        if isinstance(rule, Terminal):
            if a == 0 and r == 1 and self.char_at(p_right.start) == rule.char:
                return self.node_positions(node, a, r, window)
            return []
        if a == 0 or r == 0:
            return []
        left = rule.left if isinstance(rule, Pair) else rule.base
        boundary = node.start + lengths[left]
        room = lengths[rule.right] if isinstance(rule, Pair) else node.end - boundary
        if a > lengths[left] or r > room:
            return []
        if not (self.is_suffix_at(p_left, boundary) and self.is_prefix_at(p_right, boundary)):
            return []
        return self.node_positions(node, a, r, window)

    # -- IPM and periods ---------------------------------------------------

    def ipm(self, x: Fragment, y: Fragment) -> ArithProgression:
        """Occurrences of x inside y, relative to y (1-based), for |y| < 2|x|."""
        if x.length == 0:
            raise ValueError("IPM pattern must be non-empty")
        if y.length >= 2 * x.length:
            raise ValueError(f"IPM needs |y| < 2|x|, got |x|={x.length}, |y|={y.length}")
        if y.length < x.length:
            return ArithProgression()
        window = (y.start, y.end - x.length)
        pivot = y.start + x.length - 1
        hooks = [
            node
            for node in self.grammar.path_to(pivot)
            if min(node.end, y.end) - max(node.start, y.start) >= x.length
        ]
        found: Set[int] = set()
        for a in self.anchors(x):
            p_left, p_right = x.split(a)
            for node in hooks:
                found.update(self.occ_at_node(p_left, p_right, node, window))
        return ArithProgression.from_positions([p - y.start + 1 for p in found])

    def two_period(self, x: Fragment) -> Optional[int]:
        """per(x) when per(x) <= |x|/2, otherwise None."""
        m = x.length
        if m == 0:
            raise ValueError("period of an empty fragment is undefined")
        if m == 1:
            return None
        half = (m + 1) // 2
        prog = self.ipm(x.sub(0, half), Fragment(x.start + 1, x.end))
        if not prog:
            return None
        p = prog.first
        if 2 * p > m or self.lce(x.start, x.start + p) < m - p:
            return None
        return p


def anchors_for(queries: GrammarText, occurrences: Sequence[Fragment]) -> List[int]:
    """Distinct true anchors over a list of occurrences."""
    return sorted({queries.hook(occ)[1] for occ in occurrences})
