"""
Core string machinery for rlbwt-lab
Terminated texts, suffix array, BWT runs, LCP, LZ77 and periods.

Every index handed across this module's API is 1-based, the same way the
rest of the package addresses T[1..n]. The sentinel `$` is stored as byte 0.
"""
import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import groupby
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import MalformedParseError, TextFormatError

log = logging.getLogger(__name__)

SENTINEL = 0


def symbol_repr(code: int) -> str:
    """Printable form of one text byte ($ for the sentinel)."""
    if code == SENTINEL:
        return "$"
    if 33 <= code < 127 and code not in (ord("$"), ord("\\")):
        return chr(code)
    return f"\\x{code:02x}"


def symbol_from_repr(token: str) -> int:
    if token == "$":
        return SENTINEL
    if token.startswith("\\x") and len(token) == 4:
        return int(token[2:], 16)
    if len(token) == 1:
        return ord(token)
    raise MalformedParseError(f"Unreadable symbol token: {token!r}")


def run_length(values: Iterable[Any]) -> List[Tuple[Any, int]]:
    """Run-length encode a sequence into (value, length) pairs."""
    return [(value, sum(1 for _ in group)) for value, group in groupby(values)]


@dataclass(frozen=True)
class Text:
    """T[1..n] with T[n] = $ (byte 0) occurring exactly once."""

    data: bytes

    def __post_init__(self):
        if not self.data:
            raise TextFormatError("empty input")
        if self.data[-1] != SENTINEL or self.data.count(SENTINEL) != 1:
            raise TextFormatError("text must end with a unique sentinel byte")

    @classmethod
    def from_raw(cls, raw: Union[bytes, str]) -> "Text":
        """Map a trailing '$' to the sentinel, or append one with a warning."""
        if isinstance(raw, str):
            raw = raw.encode("latin-1")
        if not raw:
            raise TextFormatError("empty input")
        if SENTINEL in raw:
            raise TextFormatError("input contains byte 0, which is reserved for the sentinel")
        if raw.endswith(b"$") and raw.count(b"$") == 1:
            return cls(raw[:-1] + b"\x00")
        log.warning("Input has no trailing sentinel; appending '$'")
        return cls(raw + b"\x00")

    @property
    def n(self) -> int:
        return len(self.data)

    def __len__(self) -> int:
        return len(self.data)

    def __getitem__(self, i: int) -> int:
        if not 1 <= i <= len(self.data):
            raise IndexError(f"position {i} outside [1..{len(self.data)}]")
        return self.data[i - 1]

    def fragment(self, start: int, end: int) -> bytes:
        """T[start..end) as bytes."""
        return self.data[start - 1 : end - 1]

    @property
    def sigma(self) -> int:
        return len(set(self.data))

    def render(self) -> str:
        return "".join(symbol_repr(c) for c in self.data)

    def __repr__(self) -> str:
        shown = self.render()
        if len(shown) > 40:
            shown = shown[:37] + "..."
        return f"Text({shown!r}, n={self.n})"


class TextInf:
    """T∞: the infinite power of T, addressed by any integer."""

    def __init__(self, base: Text):
        self.base = base
        self._n = base.n
        self._data = base.data

    def __getitem__(self, i: int) -> int:
        return self._data[(i - 1) % self._n]

    def window(self, i: int, m: int) -> bytes:
        """T∞[i..i+m)."""
        start = (i - 1) % self._n
        if start + m <= self._n:
            return self._data[start : start + m]
        out = bytearray(self._data[start:])
        while len(out) < m:
            out.extend(self._data[: m - len(out)])
        return bytes(out)


def load_text(path: Path) -> Text:
    """Read a raw byte file as a terminated text."""
    raw = Path(path).read_bytes()
    if not raw:
        raise TextFormatError(f"{path}: empty input")
    try:
        return Text.from_raw(raw)
    except TextFormatError as exc:
        raise TextFormatError(f"{path}: {exc}") from exc


def reverse_text(text: Text) -> Text:
    """T̄ = reverse(T[1..n-1]) followed by $."""
    return Text(text.data[-2::-1] + b"\x00" if text.n > 1 else b"\x00")


# ---------------------------------------------------------------------------
# Suffix array, BWT, LCP
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuffixArray:
    sa: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.sa)

    def __getitem__(self, i: int) -> int:
        return self.sa[i - 1]

    def inverse(self) -> List[int]:
        """isa[j] = rank of suffix j (both 1-based); isa[0] unused."""
        isa = [0] * (len(self.sa) + 1)
        for rank, pos in enumerate(self.sa, start=1):
            isa[pos] = rank
        return isa


@dataclass(frozen=True)
class BwtRuns:
    """RL(BWT) as (start, symbol) pairs."""

    runs: Tuple[Tuple[int, int], ...]
    n: int

    @property
    def r(self) -> int:
        return len(self.runs)

    @classmethod
    def from_sequence(cls, bwt: Sequence[int]) -> "BwtRuns":
        runs = []
        start = 1
        for symbol, length in run_length(bwt):
            runs.append((start, symbol))
            start += length
        return cls(tuple(runs), len(bwt))

    @classmethod
    def from_lengths(cls, pairs: Sequence[Tuple[int, int]]) -> "BwtRuns":
        """Build from (symbol, length) pairs; adjacent equal symbols are merged."""
        expanded: List[Tuple[int, int]] = []
        for symbol, length in pairs:
            if length <= 0:
                raise ValueError(f"run length must be positive, got {length}")
            if expanded and expanded[-1][0] == symbol:
                expanded[-1] = (symbol, expanded[-1][1] + length)
            else:
                expanded.append((symbol, length))
        runs = []
        start = 1
        for symbol, length in expanded:
            runs.append((start, symbol))
            start += length
        return cls(tuple(runs), start - 1)

    def lengths(self) -> List[Tuple[int, int]]:
        """(symbol, length) pairs."""
        out = []
        for idx, (start, symbol) in enumerate(self.runs):
            end = self.runs[idx + 1][0] if idx + 1 < len(self.runs) else self.n + 1
            out.append((symbol, end - start))
        return out

    def decode(self) -> bytes:
        return b"".join(bytes([symbol]) * length for symbol, length in self.lengths())

    def render(self) -> str:
        return "".join(f"{symbol_repr(symbol)}{length}" for symbol, length in self.lengths())


@dataclass(frozen=True)
class LcpArray:
    lcp: Tuple[int, ...]
    irreducible_mask: Tuple[bool, ...]

    def irreducible_values(self) -> List[int]:
        return [v for v, irr in zip(self.lcp, self.irreducible_mask) if irr]


def build_suffix_array(text: Text) -> SuffixArray:
    """Prefix doubling over numpy rank arrays; deterministic."""
    data = np.frombuffer(text.data, dtype=np.uint8).astype(np.int64)
    n = len(data)
    rank = data.copy()
    k = 1
    while True:
        second = np.full(n, -1, dtype=np.int64)
        if k < n:
            second[: n - k] = rank[k:]
        order = np.lexsort((second, rank))
        first_sorted = rank[order]
        second_sorted = second[order]
        changed = (first_sorted[1:] != first_sorted[:-1]) | (second_sorted[1:] != second_sorted[:-1])
        new_rank = np.concatenate(([0], np.cumsum(changed)))
        rank = np.empty(n, dtype=np.int64)
        rank[order] = new_rank
        if new_rank[-1] == n - 1:
            break
        k *= 2
    return SuffixArray(tuple(int(i) + 1 for i in order))


def bwt_sequence(text: Text, sa: SuffixArray) -> bytes:
    data = text.data
    return bytes(data[pos - 2] if pos > 1 else data[-1] for pos in sa.sa)


def build_bwt_runs(text: Text, sa: SuffixArray) -> BwtRuns:
    return BwtRuns.from_sequence(bwt_sequence(text, sa))


def build_lcp(text: Text, sa: SuffixArray, bwt: BwtRuns) -> LcpArray:
    """Kasai et al. plus the irreducibility mask."""
    n = text.n
    data = text.data
    isa = sa.inverse()
    lcp = [0] * (n + 1)
    h = 0
    for pos in range(1, n + 1):
        rank = isa[pos]
        if rank > 1:
            prev = sa.sa[rank - 2]
            while pos + h <= n and prev + h <= n and data[pos + h - 1] == data[prev + h - 1]:
                h += 1
            lcp[rank] = h
            if h > 0:
                h -= 1
        else:
            h = 0
    seq = bwt.decode()
    mask = tuple(i == 0 or seq[i] != seq[i - 1] for i in range(n))
    return LcpArray(tuple(lcp[1:]), mask)


def invert_bwt(bwt: BwtRuns) -> Text:
    """Recover T from RL(BWT) by LF mapping."""
    seq = bwt.decode()
    n = len(seq)
    counts = [0] * 256
    occ = [0] * n
    for i, c in enumerate(seq):
        occ[i] = counts[c]
        counts[c] += 1
    starts = [0] * 256
    total = 0
    for c in range(256):
        starts[c] = total
        total += counts[c]
    out = bytearray(n)
    out[n - 1] = SENTINEL
    row = 0
    for pos in range(n - 2, -1, -1):
        c = seq[row]
        out[pos] = c
        row = starts[c] + occ[row]
    return Text(bytes(out))


# ---------------------------------------------------------------------------
# LCE and periods
# ---------------------------------------------------------------------------


def common_prefix(data: bytes, a: int, b: int, limit: Optional[int] = None) -> int:
    """Length of the common prefix of data[a:] and data[b:] (0-based offsets)."""
    n = len(data)
    cap = n - max(a, b)
    if limit is not None:
        cap = min(cap, limit)
    if a == b:
        return max(cap, 0)
    length = 0
    step = 16
    while length < cap:
        span = min(step, cap - length)
        if data[a + length : a + length + span] == data[b + length : b + length + span]:
            length += span
            step *= 2
            continue
        while data[a + length] == data[b + length]:
            length += 1
        return length
    return cap


def lce_naive(text: Text, j1: int, j2: int) -> int:
    """LCE(j1, j2) by character comparison."""
    n = text.n
    if not (1 <= j1 <= n and 1 <= j2 <= n):
        raise ValueError(f"LCE positions must lie in [1..{n}], got ({j1}, {j2})")
    return common_prefix(text.data, j1 - 1, j2 - 1)


def prefix_function(s: bytes) -> List[int]:
    pi = [0] * len(s)
    for i in range(1, len(s)):
        k = pi[i - 1]
        while k and s[i] != s[k]:
            k = pi[k - 1]
        if s[i] == s[k]:
            k += 1
        pi[i] = k
    return pi


def shortest_period(fragment: bytes) -> int:
    """per(S): the smallest p with S[i] = S[i+p] for all valid i."""
    if not fragment:
        raise ValueError("period of an empty fragment is undefined")
    return len(fragment) - prefix_function(fragment)[-1]


def is_periodic(fragment: bytes) -> bool:
    return 2 * shortest_period(fragment) <= len(fragment)


# ---------------------------------------------------------------------------
# LZ77
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Phrase:
    """Either a copy (src, length) with length >= 1 or a literal (char, 0)."""

    src: int = 0
    length: int = 0
    char: Optional[int] = None

    @property
    def is_literal(self) -> bool:
        return self.length == 0

    @property
    def span(self) -> int:
        return 1 if self.length == 0 else self.length

    def render(self) -> str:
        if self.is_literal:
            return f"({symbol_repr(self.char)},0)"
        return f"({self.src},{self.length})"


@dataclass(frozen=True)
class Lz77Parse:
    phrases: Tuple[Phrase, ...]

    @property
    def z(self) -> int:
        return len(self.phrases)

    @property
    def ends(self) -> Tuple[int, ...]:
        out = []
        pos = 0
        for phrase in self.phrases:
            pos += phrase.span
            out.append(pos)
        return tuple(out)

    @property
    def n(self) -> int:
        return sum(phrase.span for phrase in self.phrases)

    def render(self) -> str:
        return ",".join(phrase.render() for phrase in self.phrases)


def _smaller_neighbours(sa: Sequence[int]) -> Tuple[List[int], List[int]]:
    """For each SA rank, the closest ranks before/after holding a smaller text position."""
    n = len(sa)
    psv = [-1] * n
    nsv = [-1] * n
    stack: List[int] = []
    for k in range(n):
        while stack and sa[stack[-1]] > sa[k]:
            nsv[stack.pop()] = k
        psv[k] = stack[-1] if stack else -1
        stack.append(k)
    return psv, nsv


def lz77_parse(text: Text) -> Lz77Parse:
    """Greedy longest-previous-factor parsing using PSV/NSV over the suffix array."""
    sa = build_suffix_array(text)
    order = list(sa.sa)
    isa = sa.inverse()
    psv, nsv = _smaller_neighbours(order)
    data = text.data
    n = text.n

    phrases: List[Phrase] = []
    pos = 1
    while pos <= n:
        rank = isa[pos] - 1
        best_len, best_src = 0, 0
        for neighbour in (psv[rank], nsv[rank]):
            if neighbour < 0:
                continue
            src = order[neighbour]
            length = common_prefix(data, src - 1, pos - 1)
            if length > best_len:
                best_len, best_src = length, src
        if best_len == 0:
            phrases.append(Phrase(char=data[pos - 1]))
            pos += 1
        else:
            phrases.append(Phrase(src=best_src, length=best_len))
            pos += best_len
    return Lz77Parse(tuple(phrases))


def lz77_decode(parse: Lz77Parse) -> Text:
    out = bytearray()
    for idx, phrase in enumerate(parse.phrases, start=1):
        if phrase.is_literal:
            if phrase.char is None:
                raise MalformedParseError(f"phrase {idx}: literal without a character")
            out.append(phrase.char)
            continue
        start = len(out) + 1
        if not 1 <= phrase.src < start:
            raise MalformedParseError(
                f"phrase {idx}: source {phrase.src} is not before position {start}"
            )
        for offset in range(phrase.length):
            out.append(out[phrase.src - 1 + offset])
    try:
        return Text(bytes(out))
    except Exception as exc:
        raise MalformedParseError(f"parse does not decode to a terminated text: {exc}") from exc


def parse_to_lines(parse: Lz77Parse) -> List[str]:
    lines = []
    for phrase in parse.phrases:
        if phrase.is_literal:
            lines.append(f"L {symbol_repr(phrase.char)}")
        else:
            lines.append(f"C {phrase.src} {phrase.length}")
    return lines


def parse_from_lines(lines: Iterable[str]) -> Lz77Parse:
    phrases = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "L" and len(parts) == 2:
                phrases.append(Phrase(char=symbol_from_repr(parts[1])))
            elif parts[0] == "C" and len(parts) == 3:
                src, length = int(parts[1]), int(parts[2])
                if length < 1:
                    raise MalformedParseError(f"copy length must be positive, got {length}")
                phrases.append(Phrase(src=src, length=length))
            else:
                raise MalformedParseError(f"unknown record {line!r}")
        except (ValueError, IndexError) as exc:
            raise MalformedParseError(f"line {lineno}: {exc}") from exc
    if not phrases:
        raise MalformedParseError("parse has no phrases")
    return Lz77Parse(tuple(phrases))


def parse_to_json(parse: Lz77Parse) -> str:
    records = [
        {"char": p.char} if p.is_literal else {"src": p.src, "len": p.length}
        for p in parse.phrases
    ]
    return json.dumps({"z": parse.z, "phrases": records})


def parse_from_json(payload: str) -> Lz77Parse:
    try:
        data = json.loads(payload)
        phrases = []
        for record in data["phrases"]:
            if "char" in record:
                phrases.append(Phrase(char=int(record["char"])))
            else:
                phrases.append(Phrase(src=int(record["src"]), length=int(record["len"])))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedParseError(f"bad JSON parse: {exc}") from exc
    return Lz77Parse(tuple(phrases))


def read_parse(path: Path) -> Lz77Parse:
    content = Path(path).read_text(encoding="utf-8")
    if content.lstrip().startswith("{"):
        return parse_from_json(content)
    return parse_from_lines(content.splitlines())


# ---------------------------------------------------------------------------
# Substring complexity
# ---------------------------------------------------------------------------


def distinct_substring_counts(text: Text, sa: Optional[SuffixArray] = None) -> List[int]:
    """|S_m| for m = 1..n over T∞ (index 0 unused)."""
    sa = sa or build_suffix_array(text)
    lcp = build_lcp(text, sa, build_bwt_runs(text, sa)).lcp
    n = text.n
    lengths = n - np.asarray(sa.sa, dtype=np.int64) + 1
    lcp_arr = np.asarray(lcp, dtype=np.int64)
    diff = np.zeros(n + 2, dtype=np.int64)
    # suffix k contributes a fresh $-free m-prefix for m in [lcp+1, length-1]
    valid = lcp_arr + 1 <= lengths - 1
    np.add.at(diff, lcp_arr[valid] + 1, 1)
    np.add.at(diff, lengths[valid], -1)
    fresh = np.cumsum(diff)
    counts = [0] * (n + 1)
    for m in range(1, n + 1):
        counts[m] = int(fresh[m]) + m
    return counts


def substring_complexity(text: Text, limit: int = 4096) -> Tuple[Fraction, int]:
    """δ = max_m |S_m|/m as an exact fraction, with the smallest maximizing m."""
    if text.n > limit:
        raise ValueError(
            f"substring complexity enumeration is limited to n <= {limit} (got n={text.n})"
        )
    counts = distinct_substring_counts(text)
    best, best_m = Fraction(counts[1], 1), 1
    for m in range(2, text.n + 1):
        value = Fraction(counts[m], m)
        if value > best:
            best, best_m = value, m
    return best, best_m
