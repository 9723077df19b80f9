"""
Compressed wavelet tree for rlbwt-lab
Wavelet tree over a run-length compressed sequence of equal-length strings,
with run-length compressed node sequences and primary-index routing along
heavy paths.

Element positions are 1-based. Node sequences B_X hold, for every element of W
with prefix X (in W order), the symbol following X.
"""
import heapq
import logging
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .range_tree import RangeTree
from .text import run_length

log = logging.getLogger(__name__)


@dataclass
class CwtNode:
    index: int
    depth: int
    rep: int
    parent: Optional[int]
    children: Dict[int, int] = field(default_factory=dict)
    members: List[int] = field(default_factory=list)
    offsets: List[int] = field(default_factory=list)
    runs: List[Tuple[int, int]] = field(default_factory=list)
    size: int = 0
    leaves: int = 0
    # symbol -> (elements of that child before each of its runs, offset of the run here)
    lists: Dict[int, Tuple[List[int], List[int]]] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return not self.children


class HeavyPath:
    """RL((l_i)) of a path top, indexed for depth-restricted select."""

    def __init__(self, top: int, nodes: List[int], ell: List[int], lengths: List[int], offsets: List[int]):
        self.top = top
        self.nodes = nodes
        self.ell = ell
        self.offsets = offsets
        self._tree = RangeTree([(x, y, w) for x, (y, w) in enumerate(zip(ell, lengths))])
        self._deepest = max(ell) if ell else 0

    def rl_size(self) -> int:
        return len(run_length(self.ell))

    def _prefix_total(self, x: int, depth: int) -> int:
        if x < 0:
            return 0
        return self._tree.total(0, x, depth, self._deepest)

    def select(self, depth: int, q: int) -> int:
        """Position in the top's sequence of the q-th element reaching depth."""
        lo, hi = 0, len(self.ell) - 1
        if q < 1 or self._prefix_total(hi, depth) < q:
            raise ValueError(f"no element {q} at depth {depth} on the path from node {self.top}")
        while lo < hi:
            mid = (lo + hi) // 2
            if self._prefix_total(mid, depth) >= q:
                hi = mid
            else:
                lo = mid + 1
        return self.offsets[lo] + q - self._prefix_total(lo - 1, depth)


@dataclass(frozen=True)
class CwtStats:
    strings: int
    runs: int
    nodes: int
    rl_total: int
    heavy_paths: int
    paths: Tuple[Tuple[int, int], ...]

    def as_dict(self) -> Dict[str, int]:
        return {
            "strings": self.strings,
            "runs": self.runs,
            "nodes": self.nodes,
            "rl_total": self.rl_total,
            "heavy_paths": self.heavy_paths,
        }


class Cwt:
    def __init__(self, runs: Sequence[Tuple[bytes, int]]):
        merged = run_length_merge(runs)
        if not merged:
            raise ValueError("cannot build a wavelet tree over an empty sequence")
        width = len(merged[0][0])
        if width < 1 or any(len(s) != width for s, _ in merged):
            raise ValueError("all strings must share one positive length")
        self.width = width
        self.runs = merged
        self.strings = sorted({s for s, _ in merged})
        self.nodes: List[CwtNode] = []
        self._build_trie()
        self._fill_sequences()
        self._path_of: Dict[int, HeavyPath] = {}
        self.paths: List[HeavyPath] = []
        self._decompose()
        log.debug("cwt: %d runs, %d strings, %d nodes", len(merged), len(self.strings), len(self.nodes))

    # -- construction -------------------------------------------------------

    def _new_node(self, depth: int, rep: int, parent: Optional[int]) -> CwtNode:
        node = CwtNode(len(self.nodes), depth, rep, parent)
        self.nodes.append(node)
        return node

    def _build_trie(self) -> None:
        strings = self.strings
        root = self._new_node(0, 0, None)
        stack = [root]
        for k, s in enumerate(strings):
            lcp = common_prefix_length(strings[k - 1], s) if k else 0
            last = None
            while stack[-1].depth > lcp:
                last = stack.pop()
            if stack[-1].depth < lcp:
                parent = stack[-1]
                mid = self._new_node(lcp, last.rep, parent.index)
                parent.children[strings[last.rep][parent.depth]] = mid.index
                last.parent = mid.index
                mid.children[strings[last.rep][lcp]] = last.index
                stack.append(mid)
            parent = stack[-1]
            leaf = self._new_node(self.width, k, parent.index)
            parent.children[s[parent.depth]] = leaf.index
            stack.append(leaf)

    def _fill_sequences(self) -> None:
        lengths = [length for _, length in self.runs]
        by_string: Dict[bytes, List[int]] = {}
        for idx, (s, _) in enumerate(self.runs):
            by_string.setdefault(s, []).append(idx)
        for node in sorted(self.nodes, key=lambda v: -v.depth):
            if node.is_leaf:
                node.members = by_string[self.strings[node.rep]]
                node.leaves = 1
            else:
                kids = sorted(node.children.items())
                tagged = [[(idx, c) for idx in self.nodes[child].members] for c, child in kids]
                merged = list(heapq.merge(*tagged))
                node.members = [idx for idx, _ in merged]
                node.runs = run_length_weighted((c, lengths[idx]) for idx, c in merged)
                node.leaves = sum(self.nodes[child].leaves for _, child in kids)
            node.offsets = []
            total = 0
            for idx in node.members:
                node.offsets.append(total)
                total += lengths[idx]
            node.size = total
        for node in self.nodes:
            if node.is_leaf:
                continue
            child_of = {}
            for c, child in node.children.items():
                for idx in self.nodes[child].members:
                    child_of[idx] = c
            seen: Dict[int, int] = {}
            for idx, offset in zip(node.members, node.offsets):
                c = child_of[idx]
                cum, starts = node.lists.setdefault(c, ([], []))
                cum.append(seen.get(c, 0))
                starts.append(offset)
                seen[c] = seen.get(c, 0) + lengths[idx]

    def _heavy_child(self, node: CwtNode) -> Optional[int]:
        best = None
        for c, child in sorted(node.children.items()):
            if best is None or self.nodes[child].leaves > self.nodes[best].leaves:
                best = child
        return best

    def _decompose(self) -> None:
        lengths = [length for _, length in self.runs]
        tops = [0]
        while tops:
            top = tops.pop()
            path = [top]
            while True:
                heavy = self._heavy_child(self.nodes[path[-1]])
                for child in self.nodes[path[-1]].children.values():
                    if child != heavy:
                        tops.append(child)
                if heavy is None:
                    break
                path.append(heavy)
            deepest: Dict[int, int] = {}
            for v in path:
                for idx in self.nodes[v].members:
                    deepest[idx] = self.nodes[v].depth
            head = self.nodes[top]
            heavy_path = HeavyPath(
                top,
                path,
                [deepest[idx] for idx in head.members],
                [lengths[idx] for idx in head.members],
                head.offsets,
            )
            self.paths.append(heavy_path)
            for v in path:
                self._path_of[v] = heavy_path

    # -- queries ------------------------------------------------------------

    @property
    def root(self) -> CwtNode:
        return self.nodes[0]

    def label(self, node: int) -> bytes:
        v = self.nodes[node]
        return self.strings[v.rep][: v.depth]

    def locus(self, prefix: bytes) -> Optional[int]:
        """Highest node whose label starts with prefix, or None."""
        if len(prefix) > self.width:
            return None
        node = self.root
        while len(prefix) > node.depth:
            child = node.children.get(prefix[node.depth])
            if child is None:
                return None
            node = self.nodes[child]
            upto = min(len(prefix), node.depth)
            if self.strings[node.rep][:upto] != prefix[:upto]:
                return None
        return node.index

    def symbols(self, node: int, lo: int, hi: int) -> List[Tuple[int, int]]:
        """RL(B_X[lo..hi]) for the node labelled X."""
        v = self.nodes[node]
        if v.is_leaf:
            raise ValueError(f"node {node} is a leaf and has no following symbols")
        if not 1 <= lo <= hi <= v.size:
            raise ValueError(f"range [{lo}..{hi}] outside B of size {v.size}")
        out: List[Tuple[int, int]] = []
        start = 1
        for symbol, length in v.runs:
            end = start + length - 1
            a, b = max(lo, start), min(hi, end)
            if a <= b:
                out.append((symbol, b - a + 1))
            if end >= hi:
                break
            start = end + 1
        return out

    def prefix_symbols(self, prefix: bytes, lo: int, hi: int) -> List[Tuple[int, int]]:
        """RL of the symbols following prefix, elements lo..hi among those with that prefix."""
        node = self.locus(prefix)
        if node is None:
            raise ValueError(f"no element starts with {prefix!r}")
        v = self.nodes[node]
        if v.depth > len(prefix):
            if not 1 <= lo <= hi <= v.size:
                raise ValueError(f"range [{lo}..{hi}] outside B of size {v.size}")
            return [(self.strings[v.rep][len(prefix)], hi - lo + 1)]
        return self.symbols(node, lo, hi)

    def prefix_size(self, prefix: bytes) -> int:
        node = self.locus(prefix)
        return 0 if node is None else self.nodes[node].size

    def select_child(self, node: int, symbol: int, q: int) -> int:
        """Position in node's sequence of the q-th element continuing with symbol."""
        cum, starts = self.nodes[node].lists[symbol]
        k = bisect_right(cum, q - 1) - 1
        return starts[k] + q - cum[k]

    def primary_index(self, node: int, q: int) -> int:
        """Position in W of the element behind B_X[q]."""
        v = self.nodes[node]
        if not 1 <= q <= v.size:
            raise ValueError(f"index {q} outside [1..{v.size}] at node {node}")
        pos = q
        while True:
            path = self._path_of[node]
            if node != path.top:
                pos = path.select(self.nodes[node].depth, pos)
                node = path.top
            parent = self.nodes[node].parent
            if parent is None:
                return pos
            symbol = self.strings[self.nodes[node].rep][self.nodes[parent].depth]
            pos = self.select_child(parent, symbol, pos)
            node = parent

    def prefix_primary_index(self, prefix: bytes, q: int) -> int:
        node = self.locus(prefix)
        if node is None:
            raise ValueError(f"no element starts with {prefix!r}")
        return self.primary_index(node, q)

    def element(self, pos: int) -> Tuple[int, bytes]:
        """(run index, string) of W[pos]."""
        root = self.root
        k = bisect_right(root.offsets, pos - 1) - 1
        idx = root.members[k]
        return idx, self.runs[idx][0]


def common_prefix_length(a: bytes, b: bytes) -> int:
    k = 0
    limit = min(len(a), len(b))
    while k < limit and a[k] == b[k]:
        k += 1
    return k


def run_length_merge(runs: Sequence[Tuple[bytes, int]]) -> List[Tuple[bytes, int]]:
    out: List[Tuple[bytes, int]] = []
    for s, length in runs:
        if length <= 0:
            raise ValueError(f"run length must be positive, got {length}")
        if out and out[-1][0] == s:
            out[-1] = (s, out[-1][1] + length)
        else:
            out.append((s, length))
    return out


def run_length_weighted(pairs) -> List[Tuple[int, int]]:
    out: List[Tuple[int, int]] = []
    for symbol, length in pairs:
        if out and out[-1][0] == symbol:
            out[-1] = (symbol, out[-1][1] + length)
        else:
            out.append((symbol, length))
    return out


def cwt_stats(cwt: Cwt) -> CwtStats:
    nodes = cwt.nodes
    paths = tuple(
        (path.rl_size(), sum(len(nodes[v].runs) for v in path.nodes)) for path in cwt.paths
    )
    return CwtStats(
        strings=len(cwt.strings),
        runs=len(cwt.runs),
        nodes=len(nodes),
        rl_total=sum(len(v.runs) for v in nodes),
        heavy_paths=len(cwt.paths),
        paths=paths,
    )
