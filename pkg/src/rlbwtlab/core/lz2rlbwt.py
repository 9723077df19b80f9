"""
LZ77 to RL-BWT conversion for rlbwt-lab
Doubling rounds over BWT modulo ell: the sequence that agrees with the BWT
except where the length-ell context X_i is left-maximal in T∞, where it holds
a reference to the leftmost occurrence of X_i instead.
"""
import logging
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .compressed_index import CompressedIndex
from .cwt import Cwt, cwt_stats
from .errors import MalformedParseError, VerificationError
from .grammar_queries import Fragment
from .periodic import PeriodicRuns
from .rlslp import recompress
from .syncset import SyncSet, compressed_sync_set
from .text import (
    BwtRuns,
    Lz77Parse,
    Text,
    TextInf,
    build_bwt_runs,
    build_lcp,
    build_suffix_array,
    lz77_decode,
    shortest_period,
    symbol_from_repr,
    symbol_repr,
)

log = logging.getLogger(__name__)

MIN_ROUND_ELL = 16


@dataclass(frozen=True)
class Ref:
    """Leftmost occurrence of a left-maximal context."""

    pos: int


Symbol = Union[int, Ref]


def _render_symbol(symbol: Symbol) -> str:
    return f"#{symbol.pos}" if isinstance(symbol, Ref) else symbol_repr(symbol)


def merge_runs(pairs: Iterable[Tuple[Symbol, int]]) -> List[Tuple[Symbol, int]]:
    out: List[Tuple[Symbol, int]] = []
    for symbol, length in pairs:
        if length <= 0:
            continue
        if out and out[-1][0] == symbol:
            out[-1] = (symbol, out[-1][1] + length)
        else:
            out.append((symbol, length))
    return out


@dataclass(frozen=True)
class BwtModulo:
    ell: int
    runs: Tuple[Tuple[Symbol, int], ...]

    @classmethod
    def from_pairs(cls, ell: int, pairs: Iterable[Tuple[Symbol, int]]) -> "BwtModulo":
        return cls(ell, tuple(merge_runs(pairs)))

    @property
    def n(self) -> int:
        return sum(length for _, length in self.runs)

    @property
    def size(self) -> int:
        return len(self.runs)

    def numeric_runs(self) -> int:
        return sum(1 for symbol, _ in self.runs if isinstance(symbol, Ref))

    def spans(self) -> Iterable[Tuple[Symbol, int, int]]:
        """(symbol, first position, length) per run, positions 1-based."""
        pos = 1
        for symbol, length in self.runs:
            yield symbol, pos, length
            pos += length

    def to_bwt(self) -> BwtRuns:
        if self.numeric_runs():
            raise VerificationError(f"BWT modulo {self.ell} still holds {self.numeric_runs()} references")
        return BwtRuns.from_lengths(self.runs)

    def render(self) -> str:
        return "".join(f"{_render_symbol(symbol)}{length}" for symbol, length in self.runs)


def bwt_modulo_oracle(text: Text, ell: int) -> BwtModulo:
    """Direct computation from SA and LCP: equal contexts form LCP >= ell intervals."""
    if ell < 1:
        raise ValueError(f"ell must be positive, got {ell}")
    sa = build_suffix_array(text)
    bwt_runs = build_bwt_runs(text, sa)
    bwt = bwt_runs.decode()
    lcp = build_lcp(text, sa, bwt_runs).lcp
    pairs: List[Tuple[Symbol, int]] = []
    start = 0
    n = text.n
    for i in range(1, n + 1):
        if i == n or lcp[i] < ell:
            chars = set(bwt[start:i])
            if len(chars) > 1:
                pairs.append((Ref(min(sa.sa[start:i])), i - start))
            else:
                pairs.extend((bwt[k], 1) for k in range(start, i))
            start = i
    return BwtModulo.from_pairs(ell, pairs)


def distinguishing_prefix(sync: SyncSet, i: int) -> int:
    """|D_i| for D_i = T[i..succ(i)+2tau), succ(i) the first of S ∪ {n-2tau+2} at or after i."""
    tau = sync.tau
    last = sync.n - 2 * tau + 1
    if not 1 <= i <= last:
        raise ValueError(f"position {i} outside [1..{last}]")
    idx = bisect_left(sync.positions, i)
    succ = sync.positions[idx] if idx < len(sync.positions) else last + 1
    return succ + 2 * tau - i


@dataclass
class RoundStats:
    ell: int
    tau: int
    sync_size: int
    comp_size: int
    w_runs: int = 0
    cwt_nodes: int = 0
    numeric_in: int = 0
    periodic_in: int = 0
    prime_windows: int = 0
    corrections: int = 0
    runs_out: int = 0
    numeric_out: int = 0

    def as_dict(self) -> Dict[str, int]:
        return dict(self.__dict__)


@dataclass
class ConversionStats:
    n: int
    z: int
    r: int = 0
    rounds: List[RoundStats] = field(default_factory=list)

    def as_dict(self) -> Dict[str, object]:
        return {"n": self.n, "z": self.z, "r": self.r, "rounds": [stats.as_dict() for stats in self.rounds]}


class WIndex:
    """W = T∞[s-tau..s+7tau) over s in S, sorted by (suffix part, reversed prefix part)."""

    def __init__(self, text: Text, sync: SyncSet):
        inf = TextInf(text)
        tau = sync.tau
        entries = sorted(
            (inf.window(s, 7 * tau), inf.window(s - tau, tau)[::-1], s) for s in sync.positions
        )
        self.sufs: List[bytes] = []
        self.prefs: List[bytes] = []
        self.reps: List[int] = []
        self.lengths: List[int] = []
        for suf, pref, s in entries:
            if self.sufs and self.sufs[-1] == suf and self.prefs[-1] == pref:
                self.lengths[-1] += 1
                continue
            self.sufs.append(suf)
            self.prefs.append(pref)
            self.reps.append(s)
            self.lengths.append(1)
        self.offsets = [0]
        for length in self.lengths:
            self.offsets.append(self.offsets[-1] + length)
        self._cwt: Optional[Cwt] = None

    def __len__(self) -> int:
        return len(self.sufs)

    @property
    def has_cwt(self) -> bool:
        return self._cwt is not None

    @property
    def cwt(self) -> Cwt:
        if self._cwt is None:
            self._cwt = Cwt(list(zip(self.prefs, self.lengths)))
        return self._cwt

    def run_at(self, pos: int) -> int:
        return bisect_right(self.offsets, pos - 1) - 1

    def suffix_range(self, prefix: bytes) -> Tuple[int, int]:
        """Element positions [x..x'] whose suffix part starts with prefix; x > x' when empty."""
        lo = bisect_left(self.sufs, prefix)
        hi = _first_true(lo, len(self.sufs), lambda k: not self.sufs[k].startswith(prefix))
        return self.offsets[lo] + 1, self.offsets[hi]


class Converter:
    """Doubling rounds for one text; the index answers leftmost, count and LCE queries."""

    def __init__(
        self,
        text: Text,
        parse: Lz77Parse,
        index: Optional[CompressedIndex] = None,
        seed: int = 0,
        comp_k: int = 6,
        retry_limit: int = 32,
    ):
        self.text = text
        self.parse = parse
        self.index = index or CompressedIndex(recompress(text))
        self.seed = seed
        self.comp_k = comp_k
        self.retry_limit = retry_limit
        self.inf = TextInf(text)
        self.n = text.n

    # -- text queries -------------------------------------------------------

    def occurrences(self, i: int, m: int) -> int:
        """Occurrences of T∞[i..i+m) in T; windows reaching the sentinel are unique."""
        if i + m - 1 >= self.n:
            return 1
        return self.index.count(Fragment(i, i + m))

    def leftmost(self, i: int, m: int) -> int:
        if i + m - 1 >= self.n:
            return i
        return self.index.leftmost(Fragment(i, i + m))

    def _same_prefix(self, s1: int, s2: int, m: int) -> bool:
        return s1 == s2 or self.index.text.lce(s1, s2) >= m

    # -- one round ----------------------------------------------------------

    def round(self, prev: BwtModulo, salt: int = 0) -> Tuple[BwtModulo, RoundStats]:
        ell = prev.ell
        if ell < MIN_ROUND_ELL:
            raise ValueError(f"rounds start at ell={MIN_ROUND_ELL}, got {ell}")
        if ell >= self.n:
            raise ValueError(f"ell={ell} already covers the text of length {self.n}")
        tau = ell // 3
        sync, comp = compressed_sync_set(
            self.text, self.parse, tau, self.comp_k, self.seed + 7919 * salt, self.retry_limit
        )
        stats = RoundStats(ell, tau, len(sync), len(comp))
        runs = PeriodicRuns(self.text, sync, ell)
        w_index = WIndex(self.text, sync)
        stats.w_runs = len(w_index)

        numeric: Dict[int, Tuple[int, int]] = {}
        for symbol, pos, length in prev.spans():
            if isinstance(symbol, Ref):
                numeric[symbol.pos] = (pos, length)
        stats.numeric_in = len(numeric)

        comp_size = len(comp) if self.comp_k >= 6 else None
        corrections = self.periodic_corrections(runs, numeric, comp_size=comp_size, stats=stats)

        pairs: List[Tuple[Symbol, int]] = []
        for symbol, pos, length in prev.spans():
            if not isinstance(symbol, Ref):
                pairs.append((symbol, length))
                continue
            c = symbol.pos
            head = self.inf.window(c, 3 * tau - 1)
            period = shortest_period(head)
            if 3 * period <= tau:
                stats.periodic_in += 1
                pairs.extend(self.periodic_fill_and_correct(c, head[period - 1], length, corrections))
            else:
                pairs.extend(self.nonperiodic_resolve(sync, w_index, c, ell, length))
        if w_index.has_cwt:
            stats.cwt_nodes = cwt_stats(w_index.cwt).nodes
        out = BwtModulo.from_pairs(2 * ell, pairs)
        stats.runs_out = out.size
        stats.numeric_out = out.numeric_runs()
        return out, stats

    def nonperiodic_resolve(
        self, sync: SyncSet, w_index: WIndex, c: int, ell: int, length: int
    ) -> List[Tuple[Symbol, int]]:
        """BWT modulo 2ell over the range of Y = T[c..c+ell), Y without a periodic prefix."""
        tau = sync.tau
        delta = distinguishing_prefix(sync, c) - 2 * tau
        x_bar = self.inf.window(c, delta)[::-1]
        x_rest = self.inf.window(c + delta, ell - delta)
        x, x_last = w_index.suffix_range(x_rest)
        cwt = w_index.cwt
        size = cwt.prefix_size(x_bar)

        def primary(k: int) -> int:
            return cwt.prefix_primary_index(x_bar, k)

        b = _first_true(1, size + 1, lambda k: primary(k) >= x)
        b_last = _first_true(1, size + 1, lambda k: primary(k) > x_last) - 1
        if b_last - b + 1 != length:
            raise VerificationError(
                f"context at {c}: {b_last - b + 1} elements in W, {length} in the previous round"
            )
        pieces: List[Tuple[Symbol, int]] = cwt.prefix_symbols(x_bar, b, b_last)

        m2 = 2 * ell - delta

        def rep(k: int) -> int:
            return w_index.reps[w_index.run_at(primary(k))]

        overrides: List[Tuple[int, int, Symbol]] = []
        covered = b - 1
        k = b - 1
        for _, run_len in pieces[:-1]:
            k += run_len
            if k <= covered:
                continue
            anchor = rep(k)
            if not self._same_prefix(anchor, rep(k + 1), m2):
                continue
            lo = _first_true(b, k + 1, lambda q: self._same_prefix(anchor, rep(q), m2))
            hi = _first_true(k + 1, b_last + 1, lambda q: not self._same_prefix(anchor, rep(q), m2)) - 1
            ref = Ref(self.leftmost(anchor - delta, 2 * ell))
            overrides.append((lo - b, hi - b, ref))
            covered = hi
        return overlay(pieces, overrides)

    def periodic_fill_and_correct(
        self, c: int, fill: int, length: int, corrections: Dict[int, List[Tuple[int, int, Symbol]]]
    ) -> List[Tuple[Symbol, int]]:
        """Range of a periodic Y filled with Y[p], then overridden where a prime window starts."""
        return overlay([(fill, length)], corrections.get(c, []))

    def periodic_corrections(
        self,
        runs: PeriodicRuns,
        numeric: Dict[int, Tuple[int, int]],
        comp_size: Optional[int],
        stats: RoundStats,
    ) -> Dict[int, List[Tuple[int, int, Symbol]]]:
        """Overrides of the periodic fill, keyed by the reference of the run they fall in."""
        ell = runs.ell
        windows = runs.prime_windows()
        stats.prime_windows = len(windows)
        if comp_size is not None and len(windows) > comp_size + 1:
            raise VerificationError(f"|F'| = {len(windows)} exceeds |comp(S)| + 1 = {comp_size + 1}")
        relevant = {}
        for x, starts in windows.items():
            j = starts[0]
            if j + ell - 1 >= self.n:
                continue
            y_ref = self.leftmost(j, ell)
            if y_ref in numeric:
                relevant[x] = (starts, y_ref)
        ranks = runs.local_ranks([starts[0] for starts, _ in relevant.values()], self.occurrences)

        out: Dict[int, List[Tuple[int, int, Symbol]]] = {}
        for x, (starts, y_ref) in relevant.items():
            j = starts[0]
            period = runs.run_of(j).period
            total = self.occurrences(j, 2 * ell)
            chars = {self.inf[s - 1] for s in starts}
            if total > len(starts):
                chars.add(x[period - 1])
            symbol: Symbol = chars.pop() if len(chars) == 1 else Ref(self.leftmost(j, 2 * ell))
            offset = ranks[j].total
            out.setdefault(y_ref, []).append((offset, offset + total - 1, symbol))
            stats.corrections += 1
        for overrides in out.values():
            overrides.sort(key=lambda item: item[0])
        return out


def _first_true(lo: int, hi: int, predicate: Callable[[int], bool]) -> int:
    """Smallest k in [lo..hi) with predicate(k), hi when none; predicate is monotone."""
    while lo < hi:
        mid = (lo + hi) // 2
        if predicate(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def overlay(
    pieces: Sequence[Tuple[Symbol, int]], overrides: Sequence[Tuple[int, int, Symbol]]
) -> List[Tuple[Symbol, int]]:
    """Replace 0-based closed offset ranges of a run sequence; overrides are sorted and disjoint."""
    out: List[Tuple[Symbol, int]] = []
    pos = 0
    idx = 0
    pending = list(overrides)
    for symbol, length in pieces:
        start, end = pos, pos + length - 1
        cursor = start
        while idx < len(pending) and pending[idx][0] <= end:
            lo, hi, replacement = pending[idx]
            if lo > cursor:
                out.append((symbol, lo - cursor))
            cut = min(hi, end)
            out.append((replacement, cut - max(lo, cursor) + 1))
            cursor = cut + 1
            if hi > end:
                pending[idx] = (end + 1, hi, replacement)
                break
            idx += 1
        if cursor <= end:
            out.append((symbol, end - cursor + 1))
        pos = end + 1
    return merge_runs(out)


def convert(
    parse: Lz77Parse,
    seed: int = 0,
    comp_k: int = 6,
    retry_limit: int = 32,
    verify: bool = False,
    on_round: Optional[Callable[[RoundStats], None]] = None,
) -> Tuple[BwtRuns, ConversionStats]:
    """RL(BWT) of the text behind an LZ77 parse."""
    text = lz77_decode(parse)
    stats = ConversionStats(text.n, parse.z)
    current = bwt_modulo_oracle(text, MIN_ROUND_ELL)
    if current.ell < text.n:
        converter = Converter(text, parse, seed=seed, comp_k=comp_k, retry_limit=retry_limit)
        salt = 0
        while current.ell < text.n:
            current, round_stats = converter.round(current, salt)
            salt += 1
            stats.rounds.append(round_stats)
            log.debug("round ell=%d: %d runs", current.ell, current.size)
            if verify:
                expected = bwt_modulo_oracle(text, current.ell)
                if expected != current:
                    raise VerificationError(
                        f"BWT modulo {current.ell} differs: {current.render()} vs {expected.render()}"
                    )
            if on_round:
                on_round(round_stats)
    bwt = current.to_bwt()
    stats.r = bwt.r
    return bwt, stats


# -- RL(BWT) files ------------------------------------------------------------


def rlbwt_to_lines(bwt: BwtRuns) -> List[str]:
    return [f"{length} {symbol_repr(symbol)}" for symbol, length in bwt.lengths()]


def rlbwt_from_lines(lines: Iterable[str]) -> BwtRuns:
    pairs = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MalformedParseError(f"line {lineno}: expected '<run_length> <char>', got {line!r}")
        try:
            length = int(parts[0])
        except ValueError as exc:
            raise MalformedParseError(f"line {lineno}: bad run length {parts[0]!r}") from exc
        if length <= 0:
            raise MalformedParseError(f"line {lineno}: run length must be positive")
        pairs.append((symbol_from_repr(parts[1]), length))
    if not pairs:
        raise MalformedParseError("empty RL-BWT")
    return BwtRuns.from_lengths(pairs)


def write_rlbwt(bwt: BwtRuns, path: Path) -> None:
    Path(path).write_text("\n".join(rlbwt_to_lines(bwt)) + "\n")


def read_rlbwt(path: Path) -> BwtRuns:
    return rlbwt_from_lines(Path(path).read_text().splitlines())
