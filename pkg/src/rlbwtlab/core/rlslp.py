"""
Run-length straight-line programs for rlbwt-lab
Recompression construction, parse-tree navigation and node statistics.

Symbol ids are dense integers; every rule references only smaller ids. The
grammar keeps the recompression levels T_1..T_h as block-start arrays so that
LCE and anchor computations can walk the parse tree level by level.
"""
import logging
import math
import random
from bisect import bisect_right
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from .errors import GrammarError, VerificationError
from .text import Lz77Parse, Text, lz77_decode, shortest_period, symbol_from_repr, symbol_repr

log = logging.getLogger(__name__)

POLICIES = ("greedy", "random")


@dataclass(frozen=True)
class Terminal:
    char: int


@dataclass(frozen=True)
class Pair:
    left: int
    right: int


@dataclass(frozen=True)
class Power:
    base: int
    exp: int


Rule = Union[Terminal, Pair, Power]


@dataclass(frozen=True)
class NodeHandle:
    """A parse-tree node: its symbol and the fragment T[start..end) it expands to."""

    symbol: int
    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass
class LevelBlocks:
    """Block decomposition of T_j: 1-based block starts and their symbols."""

    starts: List[int]
    symbols: List[int]
    n: int

    def __len__(self) -> int:
        return len(self.starts)

    def index_at(self, pos: int) -> int:
        """Index of the block containing text position pos."""
        return bisect_right(self.starts, pos) - 1

    def block_at(self, pos: int) -> Tuple[int, int, int]:
        idx = self.index_at(pos)
        end = self.starts[idx + 1] if idx + 1 < len(self.starts) else self.n + 1
        return self.starts[idx], end, self.symbols[idx]

    def is_boundary(self, pos: int) -> bool:
        if pos == self.n + 1:
            return True
        idx = self.index_at(pos)
        return idx >= 0 and self.starts[idx] == pos

    def boundaries_in(self, lo: int, hi: int) -> List[int]:
        """Block boundaries b with lo <= b <= hi (n+1 counts as a boundary)."""
        left = bisect_right(self.starts, lo - 1)
        right = bisect_right(self.starts, hi)
        out = self.starts[left:right]
        if lo <= self.n + 1 <= hi:
            out = out + [self.n + 1]
        return out


class Rlslp:
    """An RLSLP with recompression levels; immutable after construction."""

    def __init__(
        self,
        rules: Sequence[Rule],
        start: int,
        introduced: Optional[Sequence[int]] = None,
        levels: Optional[List[LevelBlocks]] = None,
    ):
        self.rules: Tuple[Rule, ...] = tuple(rules)
        self.start = start
        self._check_rules()
        self.lengths: List[int] = self._expansion_lengths()
        self.introduced: List[int] = list(introduced) if introduced else self._heights()
        self.n = self.lengths[start]
        self._levels = levels

    # -- structure ---------------------------------------------------------

    def _check_rules(self) -> None:
        if not 0 <= self.start < len(self.rules):
            raise GrammarError(f"start symbol {self.start} out of range")
        for idx, rule in enumerate(self.rules):
            if isinstance(rule, Terminal):
                continue
            if isinstance(rule, Pair):
                refs = (rule.left, rule.right)
                if rule.left == rule.right:
                    raise GrammarError(f"symbol {idx}: pair with equal halves {rule.left}")
            elif isinstance(rule, Power):
                refs = (rule.base,)
                if rule.exp < 2:
                    raise GrammarError(f"symbol {idx}: power exponent {rule.exp} < 2")
            else:
                raise GrammarError(f"symbol {idx}: unknown rule {rule!r}")
            if any(not 0 <= ref < idx for ref in refs):
                raise GrammarError(f"symbol {idx} references a symbol that is not earlier: {rule}")

    def _expansion_lengths(self) -> List[int]:
        lengths = [0] * len(self.rules)
        for idx, rule in enumerate(self.rules):
            if isinstance(rule, Terminal):
                lengths[idx] = 1
            elif isinstance(rule, Pair):
                lengths[idx] = lengths[rule.left] + lengths[rule.right]
            else:
                lengths[idx] = lengths[rule.base] * rule.exp
        return lengths

    def _heights(self) -> List[int]:
        out = [1] * len(self.rules)
        for idx, rule in enumerate(self.rules):
            if isinstance(rule, Pair):
                out[idx] = 1 + max(out[rule.left], out[rule.right])
            elif isinstance(rule, Power):
                out[idx] = 1 + out[rule.base]
        return out

    @property
    def size(self) -> int:
        return len(self.rules)

    @property
    def height(self) -> int:
        return self.introduced[self.start]

    def length(self, symbol: int) -> int:
        return self.lengths[symbol]

    def rule(self, symbol: int) -> Rule:
        return self.rules[symbol]

    @property
    def levels(self) -> List[LevelBlocks]:
        if self._levels is None:
            self._levels = self._levels_from_tree()
        return self._levels

    def _levels_from_tree(self) -> List[LevelBlocks]:
        """Rebuild T_1..T_h: a node sits in T_j for introduced(s) <= j < introduced(parent)."""
        h = self.height
        starts: List[List[int]] = [[] for _ in range(h)]
        symbols: List[List[int]] = [[] for _ in range(h)]
        stack = [(self.start, 1, h + 1)]
        while stack:
            symbol, pos, parent_level = stack.pop()
            for j in range(self.introduced[symbol], parent_level):
                starts[j - 1].append(pos)
                symbols[j - 1].append(symbol)
            level = self.introduced[symbol]
            children = list(self._child_offsets(symbol))
            for child, offset in reversed(children):
                stack.append((child, pos + offset, level))
        return [LevelBlocks(s, y, self.n) for s, y in zip(starts, symbols)]

    def _child_offsets(self, symbol: int) -> Iterator[Tuple[int, int]]:
        rule = self.rules[symbol]
        if isinstance(rule, Pair):
            yield rule.left, 0
            yield rule.right, self.lengths[rule.left]
        elif isinstance(rule, Power):
            step = self.lengths[rule.base]
            for i in range(rule.exp):
                yield rule.base, i * step

    # -- navigation --------------------------------------------------------

    def root(self) -> NodeHandle:
        return NodeHandle(self.start, 1, self.n + 1)

    def arity(self, symbol: int) -> int:
        rule = self.rules[symbol]
        if isinstance(rule, Terminal):
            return 0
        return 2 if isinstance(rule, Pair) else rule.exp

    def children(self, node: NodeHandle) -> List[NodeHandle]:
        return [
            NodeHandle(child, node.start + offset, node.start + offset + self.lengths[child])
            for child, offset in self._child_offsets(node.symbol)
        ]

    def child_at(self, node: NodeHandle, i: int) -> NodeHandle:
        """The i-th child (1-based) of a node."""
        rule = self.rules[node.symbol]
        arity = self.arity(node.symbol)
        if not 1 <= i <= arity:
            raise ValueError(f"child index {i} outside [1..{arity}] for symbol {node.symbol}")
        if isinstance(rule, Pair):
            if i == 1:
                return NodeHandle(rule.left, node.start, node.start + self.lengths[rule.left])
            return NodeHandle(rule.right, node.start + self.lengths[rule.left], node.end)
        step = self.lengths[rule.base]
        begin = node.start + (i - 1) * step
        return NodeHandle(rule.base, begin, begin + step)

    def child_containing(self, node: NodeHandle, j: int) -> Tuple[NodeHandle, int]:
        """The child whose fragment contains position j, with its 1-based index."""
        if not node.start <= j < node.end:
            raise ValueError(f"position {j} outside node fragment [{node.start}..{node.end})")
        rule = self.rules[node.symbol]
        if isinstance(rule, Terminal):
            raise ValueError(f"terminal node at {node.start} has no children")
        if isinstance(rule, Pair):
            index = 1 if j < node.start + self.lengths[rule.left] else 2
        else:
            index = (j - node.start) // self.lengths[rule.base] + 1
        return self.child_at(node, index), index

    def path_to(self, j: int) -> List[NodeHandle]:
        """Root-to-leaf path of nodes containing position j."""
        node = self.root()
        path = [node]
        while not isinstance(self.rules[node.symbol], Terminal):
            node, _ = self.child_containing(node, j)
            path.append(node)
        return path

    def char_at(self, j: int) -> int:
        if not 1 <= j <= self.n:
            raise ValueError(f"position {j} outside [1..{self.n}]")
        return self.rules[self.path_to(j)[-1].symbol].char

    def extract(self, start: int, end: int) -> bytes:
        """T[start..end) decoded from the grammar."""
        if not 1 <= start <= end <= self.n + 1:
            raise ValueError(f"fragment [{start}..{end}) outside [1..{self.n + 1}]")
        out = bytearray()
        stack = [self.root()]
        while stack:
            node = stack.pop()
            if node.end <= start or node.start >= end:
                continue
            rule = self.rules[node.symbol]
            if isinstance(rule, Terminal):
                out.append(rule.char)
                continue
            stack.extend(reversed(self.children(node)))
        return bytes(out)

    def expand(self, symbol: Optional[int] = None) -> bytes:
        symbol = self.start if symbol is None else symbol
        if symbol == self.start:
            return self.extract(1, self.n + 1)
        node = self.first_node(symbol)
        return self.extract(node.start, node.end)

    # -- node statistics ---------------------------------------------------

    def first(self) -> Dict[int, NodeHandle]:
        """Leftmost node of every symbol, by a pre-order scan skipping seen symbols."""
        return self._first

    @cached_property
    def _first(self) -> Dict[int, NodeHandle]:
        seen: Dict[int, NodeHandle] = {}
        stack = [self.root()]
        while stack:
            node = stack.pop()
            if node.symbol in seen:
                continue
            seen[node.symbol] = node
            rule = self.rules[node.symbol]
            if isinstance(rule, Pair):
                stack.extend(reversed(self.children(node)))
            elif isinstance(rule, Power):
                stack.append(self.child_at(node, 1))
        return seen

    def first_node(self, symbol: int) -> NodeHandle:
        node = self._first.get(symbol)
        if node is None:
            raise GrammarError(f"symbol {symbol} does not occur in the parse tree")
        return node

    @cached_property
    def counts(self) -> List[int]:
        """count(A) = |nodes(A)|, accumulated from the start symbol downwards."""
        counts = [0] * len(self.rules)
        counts[self.start] = 1
        for idx in range(len(self.rules) - 1, -1, -1):
            rule = self.rules[idx]
            if isinstance(rule, Pair):
                counts[rule.left] += counts[idx]
                counts[rule.right] += counts[idx]
            elif isinstance(rule, Power):
                counts[rule.base] += rule.exp * counts[idx]
        return counts

    def count(self, symbol: int) -> int:
        value = self.counts[symbol]
        if value == 0:
            raise GrammarError(f"symbol {symbol} does not occur in the parse tree")
        return value

    @cached_property
    def _parents(self) -> List[Dict[int, List[int]]]:
        parents: List[Dict[int, List[int]]] = [defaultdict(list) for _ in self.rules]
        for idx in range(len(self.rules)):
            for child, offset in self._child_offsets(idx):
                parents[child][idx].append(offset)
        return parents

    def enumerate_nodes(self, symbol: int) -> Iterator[NodeHandle]:
        """All nodes labelled `symbol`, recursing through the nodes of its parents."""
        if not 0 <= symbol < len(self.rules) or self.counts[symbol] == 0:
            raise GrammarError(f"symbol {symbol} does not occur in the parse tree")
        return self._nodes(symbol)

    def _nodes(self, symbol: int) -> Iterator[NodeHandle]:
        if symbol == self.start:
            yield self.root()
        length = self.lengths[symbol]
        for parent, offsets in self._parents[symbol].items():
            for node in self._nodes(parent):
                for offset in offsets:
                    begin = node.start + offset
                    yield NodeHandle(symbol, begin, begin + length)

    def terminal_of(self, char: int) -> Optional[int]:
        return self._terminals.get(char)

    @cached_property
    def _terminals(self) -> Dict[int, int]:
        return {rule.char: idx for idx, rule in enumerate(self.rules) if isinstance(rule, Terminal)}

    def power_rules(self) -> Iterator[Tuple[int, Power]]:
        for idx, rule in enumerate(self.rules):
            if isinstance(rule, Power):
                yield idx, rule

    # -- derived grammars --------------------------------------------------

    def trimmed(self) -> "Rlslp":
        """Drop symbols unreachable from the start symbol and renumber."""
        reachable = [False] * len(self.rules)
        reachable[self.start] = True
        for idx in range(len(self.rules) - 1, -1, -1):
            if reachable[idx]:
                for child, _ in self._child_offsets(idx):
                    reachable[child] = True
        if all(reachable):
            return self
        remap: Dict[int, int] = {}
        rules: List[Rule] = []
        introduced: List[int] = []
        for idx, rule in enumerate(self.rules):
            if not reachable[idx]:
                continue
            remap[idx] = len(rules)
            if isinstance(rule, Pair):
                rule = Pair(remap[rule.left], remap[rule.right])
            elif isinstance(rule, Power):
                rule = Power(remap[rule.base], rule.exp)
            rules.append(rule)
            introduced.append(self.introduced[idx])
        log.debug("trimmed %d unreachable symbols", len(self.rules) - len(rules))
        return Rlslp(rules, remap[self.start], introduced)

    def reversed(self) -> "Rlslp":
        """The grammar of reverse(T), obtained by reversing every right-hand side."""
        rules = [Pair(r.right, r.left) if isinstance(r, Pair) else r for r in self.rules]
        levels = None
        if self._levels is not None:
            levels = []
            for level in self._levels:
                count = len(level.starts)
                ends = level.starts[1:] + [self.n + 1]
                starts = [self.n + 2 - ends[i] for i in range(count - 1, -1, -1)]
                levels.append(LevelBlocks(starts, level.symbols[::-1], self.n))
        return Rlslp(rules, self.start, self.introduced, levels)

    # -- serialization -----------------------------------------------------

    def to_lines(self) -> List[str]:
        lines = []
        for idx, rule in enumerate(self.rules):
            level = self.introduced[idx]
            if isinstance(rule, Terminal):
                lines.append(f"T {symbol_repr(rule.char)} {level}")
            elif isinstance(rule, Pair):
                lines.append(f"P {rule.left} {rule.right} {level}")
            else:
                lines.append(f"R {rule.base} {rule.exp} {level}")
        lines.append(f"S {self.start}")
        return lines

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "Rlslp":
        rules: List[Rule] = []
        introduced: List[int] = []
        start = None
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                kind = parts[0]
                if kind == "S":
                    start = int(parts[1])
                    continue
                if kind == "T":
                    rules.append(Terminal(symbol_from_repr(parts[1])))
                    level_token = parts[2:3]
                elif kind == "P":
                    rules.append(Pair(int(parts[1]), int(parts[2])))
                    level_token = parts[3:4]
                elif kind == "R":
                    rules.append(Power(int(parts[1]), int(parts[2])))
                    level_token = parts[3:4]
                else:
                    raise GrammarError(f"unknown rule kind {kind!r}")
                introduced.append(int(level_token[0]) if level_token else 0)
            except (IndexError, ValueError) as exc:
                raise GrammarError(f"line {lineno}: {exc}") from exc
        if start is None:
            raise GrammarError("grammar has no start line")
        has_levels = all(introduced)
        if not has_levels:
            log.debug("grammar lines carry no levels; using node heights")
        return cls(rules, start, introduced if has_levels else None)

    # -- checks ------------------------------------------------------------

    def validate(self, exhaustive_limit: int = 5000) -> None:
        """Check distinct expansions (up to a size limit) and primitive power bases."""
        for idx, rule in self.power_rules():
            base = self.expand(rule.base)
            if shortest_period(base + base) != len(base):
                raise GrammarError(f"symbol {idx}: power base {rule.base} is not primitive")
        if len(self.rules) <= exhaustive_limit:
            seen: Dict[bytes, int] = {}
            for idx in range(len(self.rules)):
                if self.counts[idx] == 0:
                    continue
                exp = self.expand(idx)
                if exp in seen:
                    raise GrammarError(f"symbols {seen[exp]} and {idx} share an expansion")
                seen[exp] = idx


class _Builder:
    """Rule table with rhs deduplication; new ids are appended."""

    def __init__(self):
        self.rules: List[Rule] = []
        self.introduced: List[int] = []
        self.index: Dict[Rule, int] = {}

    def add(self, rule: Rule, level: int) -> int:
        found = self.index.get(rule)
        if found is not None:
            return found
        idx = len(self.rules)
        self.rules.append(rule)
        self.introduced.append(level)
        self.index[rule] = idx
        return idx


def _greedy_partition(symbols: Sequence[int]) -> Dict[int, bool]:
    """True = left. Greedy max-cut over adjacent pair frequencies, flipped to favour L·R."""
    freq = Counter(zip(symbols, symbols[1:]))
    weights: Dict[int, Counter] = defaultdict(Counter)
    for (s, t), count in freq.items():
        if s != t:
            weights[s][t] += count
            weights[t][s] += count
    side: Dict[int, bool] = {}
    for s in sorted(set(symbols)):
        if_left = sum(w for t, w in weights[s].items() if side.get(t) is False)
        if_right = sum(w for t, w in weights[s].items() if side.get(t) is True)
        side[s] = if_left >= if_right
    left_right = sum(c for (s, t), c in freq.items() if side[s] and not side[t])
    right_left = sum(c for (s, t), c in freq.items() if not side[s] and side[t])
    if right_left > left_right:
        side = {s: not v for s, v in side.items()}
    return side


def _random_partition(symbols: Sequence[int], rng: random.Random) -> Dict[int, bool]:
    return {s: rng.random() < 0.5 for s in sorted(set(symbols))}


def _run_length_round(seq: List[int], starts: List[int], builder: _Builder, level: int):
    out_syms, out_starts = [], []
    i = 0
    while i < len(seq):
        j = i
        while j + 1 < len(seq) and seq[j + 1] == seq[i]:
            j += 1
        run = j - i + 1
        out_syms.append(seq[i] if run == 1 else builder.add(Power(seq[i], run), level))
        out_starts.append(starts[i])
        i = j + 1
    return out_syms, out_starts


def _pairing_round(seq: List[int], starts: List[int], side: Dict[int, bool], builder: _Builder, level: int):
    out_syms, out_starts = [], []
    i = 0
    while i < len(seq):
        if i + 1 < len(seq) and side[seq[i]] and not side[seq[i + 1]]:
            out_syms.append(builder.add(Pair(seq[i], seq[i + 1]), level))
            out_starts.append(starts[i])
            i += 2
        else:
            out_syms.append(seq[i])
            out_starts.append(starts[i])
            i += 1
    return out_syms, out_starts


def recompress(text: Text, policy: str = "greedy", seed: Optional[int] = None) -> Rlslp:
    """Recompression RLSLP of T: odd rounds collapse runs, even rounds pair left/right symbols."""
    if policy not in POLICIES:
        raise ValueError(f"unknown partition policy {policy!r}; expected one of {POLICIES}")
    rng = random.Random(seed)
    builder = _Builder()
    for char in sorted(set(text.data)):
        builder.add(Terminal(char), 1)
    seq = [builder.index[Terminal(c)] for c in text.data]
    starts = list(range(1, text.n + 1))
    levels = [LevelBlocks(starts, seq, text.n)]
    j = 1
    while len(seq) > 1:
        if j % 2 == 1:
            seq, starts = _run_length_round(seq, starts, builder, j + 1)
        else:
            side = _greedy_partition(seq) if policy == "greedy" else _random_partition(seq, rng)
            seq, starts = _pairing_round(seq, starts, side, builder, j + 1)
        levels.append(LevelBlocks(starts, seq, text.n))
        log.debug("round %d: |T_%d| = %d, %d symbols", j, j + 1, len(seq), len(builder.rules))
        j += 1
    grammar = Rlslp(builder.rules, seq[0], builder.introduced, levels)
    log.debug("recompression: n=%d, |S|=%d, h=%d", text.n, grammar.size, grammar.height)
    return grammar


def size_bound(z: int, n: int, constant: float) -> float:
    log_n = math.log2(max(2, n))
    return constant * z * log_n * log_n


def rlslp_from_lz77(
    parse: Lz77Parse,
    constant: Optional[float] = 64,
    policy: str = "greedy",
    seed: Optional[int] = None,
) -> Rlslp:
    """Decode the parse and recompress, checking |S| against C·z·log²n."""
    text = lz77_decode(parse)
    grammar = recompress(text, policy, seed)
    if constant is not None:
        bound = size_bound(parse.z, text.n, constant)
        if grammar.size > bound:
            raise VerificationError(
                f"grammar size {grammar.size} exceeds {constant}*z*log^2(n) = {bound:.1f}"
            )
    log.info("grammar from LZ77: z=%d, |S|=%d, h=%d", parse.z, grammar.size, grammar.height)
    return grammar
