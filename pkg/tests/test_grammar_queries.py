import random
import string

import pytest

from rlbwtlab.core.errors import GrammarError
from rlbwtlab.core.grammar_queries import (
    AnchorSet,
    ArithProgression,
    Fragment,
    GrammarText,
    anchors_for,
)
from rlbwtlab.core.rlslp import Pair, Power, Rlslp, Terminal, recompress
from rlbwtlab.core.text import Text, shortest_period

FIG1 = Text.from_raw("bbabaababababaababa$")


def _queries(raw: str) -> GrammarText:
    return GrammarText(recompress(Text.from_raw(raw)))


def _naive_lce(data: bytes, i: int, j: int) -> int:
    k = 0
    while i + k <= len(data) and j + k <= len(data) and data[i + k - 1] == data[j + k - 1]:
        k += 1
    return k


def _naive_starts(data: bytes, pattern: bytes, lo: int, hi: int):
    return [s for s in range(lo, hi + 1) if data[s - 1 : s - 1 + len(pattern)] == pattern]


def _random_raw(rng: random.Random, n: int, alphabet: str) -> str:
    return "".join(rng.choice(alphabet) for _ in range(n)) + "$"


def test_lce_on_fig1_text():
    queries = GrammarText(recompress(FIG1))
    assert queries.lce(3, 15) == 3
    assert queries.lce(7, 7) == FIG1.n - 7 + 1
    assert queries.lce(1, 21) == 0


def test_lce_matches_naive_in_both_directions():
    rng = random.Random(21)
    for alphabet in ("ab", "abc", "a"):
        raw = _random_raw(rng, 150, alphabet)
        queries = _queries(raw)
        data = queries.grammar.expand()
        rev = data[::-1]
        n = len(data)
        for _ in range(400):
            i, j = rng.randint(1, n), rng.randint(1, n)
            assert queries.lce(i, j) == _naive_lce(data, i, j)
            assert queries.lce(i, j, "reverse") == _naive_lce(rev, i, j)


def test_lce_rejects_unknown_direction():
    with pytest.raises(ValueError):
        _queries("ab$").lce(1, 2, "sideways")


def test_lcs_is_common_suffix():
    queries = GrammarText(recompress(FIG1))
    # T[..12] ends "ababa", T[..10] ends "aababa"
    assert queries.lcs(12, 10) == 5
    assert queries.lcs(0, 5) == 0


def test_compare_fragments():
    queries = GrammarText(recompress(FIG1))
    assert queries.compare(Fragment(3, 5), Fragment(6, 8)) == 0
    assert queries.compare(Fragment(3, 5), Fragment(3, 6)) == -1
    assert queries.compare(Fragment(1, 3), Fragment(3, 5)) == 1
    assert queries.compare_reversed(Fragment(2, 4), Fragment(7, 9)) == 0


def test_single_character_anchor_is_zero():
    queries = GrammarText(recompress(FIG1))
    assert queries.anchors(Fragment(5, 6)) == AnchorSet((0,))


def test_two_character_pattern_has_anchor_one():
    queries = GrammarText(recompress(FIG1))
    assert 1 in queries.anchors(Fragment(3, 5))


def test_anchor_sets_cover_every_occurrence():
    rng = random.Random(31)
    for alphabet in ("ab", "abc"):
        queries = _queries(_random_raw(rng, 120, alphabet))
        data = queries.grammar.expand()
        n = len(data)
        h = queries.grammar.height
        for _ in range(150):
            m = rng.randint(1, 12)
            start = rng.randint(1, n - m + 1)
            pattern = data[start - 1 : start - 1 + m]
            occs = [Fragment(s, s + m) for s in _naive_starts(data, pattern, 1, n - m + 1)]
            found = queries.anchors(Fragment(start, start + m))
            assert set(anchors_for(queries, occs)) <= set(found)
            assert len(found) <= 3 * h


def test_occ_at_terminal_node():
    queries = GrammarText(recompress(FIG1))
    leaf = queries.grammar.path_to(3)[-1]
    assert queries.occ_at_node(Fragment(3, 3), Fragment(3, 4), leaf) == [3]
    assert queries.occ_at_node(Fragment(3, 3), Fragment(1, 2), leaf) == []


def test_occ_at_power_node():
    # 0:a 1:b 2:ab 3:(ab)^5
    grammar = Rlslp([Terminal(97), Terminal(98), Pair(0, 1), Power(2, 5)], 3)
    queries = GrammarText(grammar)
    root = grammar.root()
    # P_L = "b", P_R = "ababa": i in [1..5-3]
    assert queries.occ_at_node(Fragment(2, 3), Fragment(3, 8), root) == [2, 4]
    assert queries.occ_at_node(Fragment(2, 3), Fragment(3, 8), root, window=(3, 10)) == [4]


def test_occ_at_node_agrees_with_direct_comparison():
    rng = random.Random(41)
    queries = _queries(_random_raw(rng, 100, "ab"))
    grammar = queries.grammar
    data = grammar.expand()
    n = len(data)
    for _ in range(200):
        m = rng.randint(2, 10)
        start = rng.randint(1, n - m + 1)
        a = rng.randint(1, m - 1)
        p_left, p_right = Fragment(start, start + m).split(a)
        pattern = data[start - 1 : start - 1 + m]
        for node in grammar.path_to(start + a - 1):
            for pos in queries.occ_at_node(p_left, p_right, node):
                assert data[pos - 1 : pos - 1 + m] == pattern
                assert node.start <= pos and pos + m <= node.end


def test_hook_anchor_pairs_partition_occurrences():
    rng = random.Random(43)
    queries = _queries(_random_raw(rng, 90, "abc"))
    grammar = queries.grammar
    data = grammar.expand()
    n = len(data)
    all_nodes = []
    stack = [grammar.root()]
    while stack:
        node = stack.pop()
        all_nodes.append(node)
        stack.extend(grammar.children(node))
    for _ in range(40):
        m = rng.randint(1, 8)
        start = rng.randint(1, n - m + 1)
        pattern = data[start - 1 : start - 1 + m]
        produced = []
        for a in queries.anchors(Fragment(start, start + m)):
            p_left, p_right = Fragment(start, start + m).split(a)
            for node in all_nodes:
                produced.extend(queries.occ_at_node(p_left, p_right, node))
        assert sorted(produced) == _naive_starts(data, pattern, 1, n - m + 1)


def test_ipm_self_occurrence_and_fig1_example():
    queries = GrammarText(recompress(FIG1))
    assert queries.ipm(Fragment(4, 9), Fragment(4, 9)) == ArithProgression(1, 0, 1)
    assert queries.ipm(Fragment(3, 6), Fragment(8, 13)) == ArithProgression(1, 2, 2)


def test_ipm_rejects_long_text():
    queries = GrammarText(recompress(FIG1))
    with pytest.raises(ValueError):
        queries.ipm(Fragment(3, 5), Fragment(1, 5))


def _query_texts(rng: random.Random):
    """Random, large-alphabet and highly periodic texts for the bulk query checks."""
    yield _random_raw(rng, 200, "ab")
    yield _random_raw(rng, 200, "abc")
    yield _random_raw(rng, 256, string.ascii_lowercase)
    yield ("abaab" * 60)[:250] + "$"
    yield "a" * 120 + "b" + "a" * 119 + "$"


def test_ipm_matches_naive_scan():
    rng = random.Random(51)
    for raw in _query_texts(rng):
        queries = _queries(raw)
        data = queries.grammar.expand()
        n = len(data)
        for _ in range(2000):
            m = rng.randint(1, 10)
            xs = rng.randint(1, n - m + 1)
            ylen = rng.randint(0, min(2 * m - 1, n))
            ys = rng.randint(1, n - ylen + 1)
            prog = queries.ipm(Fragment(xs, xs + m), Fragment(ys, ys + ylen))
            expected = [
                s - ys + 1
                for s in _naive_starts(data, data[xs - 1 : xs - 1 + m], ys, ys + ylen - m)
            ]
            assert prog.positions() == expected


def test_progression_rejects_irregular_positions():
    with pytest.raises(GrammarError):
        ArithProgression.from_positions([1, 2, 4])
    assert ArithProgression.from_positions([]) == ArithProgression()


def test_two_period_examples():
    queries = GrammarText(recompress(FIG1))
    assert queries.two_period(Fragment(8, 14)) == 2  # ababab
    assert queries.two_period(Fragment(3, 11)) is None  # abaababa
    assert queries.two_period(Fragment(1, 2)) is None


def test_two_period_matches_shortest_period():
    rng = random.Random(61)
    for raw in _query_texts(rng):
        queries = _queries(raw)
        data = queries.grammar.expand()
        n = len(data)
        for _ in range(2000):
            m = rng.randint(1, 40)
            start = rng.randint(1, n - m + 1)
            per = shortest_period(data[start - 1 : start - 1 + m])
            expected = per if 2 * per <= m else None
            assert queries.two_period(Fragment(start, start + m)) == expected


def test_regular_fragments_touch_at_most_three_children():
    grammar = recompress(Text.from_raw("a" * 20 + "$"))
    queries = GrammarText(grammar)
    assert queries.is_regular(Fragment(1, 3))
    node, anchor = queries.hook(Fragment(1, 10))
    assert grammar.rules[node.symbol] == Power(grammar.terminal_of(ord("a")), 20)
    assert anchor == 1
    assert not queries.is_regular(Fragment(1, 10))
