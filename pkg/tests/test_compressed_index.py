import random

from rlbwtlab.core.compressed_index import (
    CompressedIndex,
    FragPairSet,
    PowerExponentTable,
    build_range,
    naive_occurrences,
)
from rlbwtlab.core.grammar_queries import Fragment, GrammarText
from rlbwtlab.core.range_tree import RangeTree
from rlbwtlab.core.rlslp import Pair, Power, Rlslp, Terminal, recompress
from rlbwtlab.core.text import Text

FIG1 = Text.from_raw("bbabaababababaababa$")


def _index(raw: str) -> CompressedIndex:
    return CompressedIndex(recompress(Text.from_raw(raw)))


def test_range_tree_matches_filter():
    rng = random.Random(1)
    points = [(rng.randint(0, 20), rng.randint(0, 20), rng.randint(-5, 50)) for _ in range(200)]
    tree = RangeTree(points)
    for _ in range(100):
        x1, x2 = sorted(rng.randint(0, 20) for _ in range(2))
        y1, y2 = sorted(rng.randint(0, 20) for _ in range(2))
        inside = [w for x, y, w in points if x1 <= x <= x2 and y1 <= y <= y2]
        assert sorted(tree.enumerate(x1, x2, y1, y2)) == sorted(inside)
        assert tree.total(x1, x2, y1, y2) == sum(inside)
        assert tree.minimum(x1, x2, y1, y2) == (min(inside) if inside else None)
        assert tree.count(x1, x2, y1, y2) == len(inside)


def test_empty_range_structure():
    text = GrammarText(recompress(FIG1))
    structure = build_range(FragPairSet(), text)
    assert structure.enumerate(Fragment(3, 4), Fragment(4, 5)) == []
    assert structure.minimum(Fragment(3, 4), Fragment(4, 5)) is None
    assert structure.total(Fragment(3, 4), Fragment(4, 5)) == 0


def test_single_triple_query_by_itself():
    text = GrammarText(recompress(FIG1))
    pairs = FragPairSet()
    pairs.add(Fragment(3, 5), Fragment(5, 8), 42)
    structure = build_range(pairs, text)
    assert structure.enumerate(Fragment(3, 5), Fragment(5, 8)) == [42]
    assert structure.minimum(Fragment(4, 5), Fragment(5, 6)) == 42
    assert structure.total(Fragment(3, 5), Fragment(5, 9)) == 0


def test_range_structure_matches_brute_force():
    rng = random.Random(2)
    raw = "".join(rng.choice("ab") for _ in range(80)) + "$"
    text = GrammarText(recompress(Text.from_raw(raw)))
    data = raw.replace("$", "\x00").encode("latin-1")
    n = len(data)

    def frag(max_len):
        length = rng.randint(1, max_len)
        start = rng.randint(1, n - length + 1)
        return Fragment(start, start + length)

    def content(f):
        return data[f.start - 1 : f.end - 1]

    pairs = FragPairSet()
    for w in range(200):
        pairs.add(frag(8), frag(8), w)
    structure = build_range(pairs, text)
    for _ in range(100):
        xq, yq = frag(3), frag(3)
        expected = [
            t.w
            for t in pairs
            if content(t.x).endswith(content(xq)) and content(t.y).startswith(content(yq))
        ]
        assert sorted(structure.enumerate(xq, yq)) == sorted(expected)
        assert structure.total(xq, yq) == sum(expected)
        assert structure.minimum(xq, yq) == (min(expected) if expected else None)


def test_report_on_fig1_text():
    index = CompressedIndex(recompress(FIG1))
    assert index.report(Fragment(3, 5)) == [3, 6, 8, 10, 12, 15, 17]
    assert index.report(Fragment(3, 5)) == naive_occurrences(FIG1.data, b"ab")
    assert index.report(Fragment(1, 21)) == [1]


def test_leftmost_and_rightmost_on_fig1_text():
    index = CompressedIndex(recompress(FIG1))
    assert index.leftmost(Fragment(5, 6)) == 3
    assert index.rightmost(Fragment(5, 6)) == 19
    assert index.leftmost(Fragment(1, 21)) == 1
    assert index.rightmost(Fragment(1, 21)) == 1
    assert index.leftmost(Fragment(15, 17)) == 3
    assert index.rightmost(Fragment(3, 5)) == 17


def test_count_whole_text_and_overlapping_runs():
    assert _index("bbabaababababaababa$").count(Fragment(1, 21)) == 1
    index = _index("aaaa$")
    assert index.count(Fragment(1, 3)) == 3
    assert index.count(Fragment(2, 5)) == 2
    assert index.count(Fragment(4, 5)) == 4


def test_long_runs_need_special_counting():
    index = _index("a" * 40 + "$")
    pattern = Fragment(1, 11)
    assert index.count(pattern) == 31
    assert index.special_count(pattern) > 0
    assert index.regular_count(pattern) + index.special_count(pattern) == 31


def test_special_count_is_zero_without_period():
    index = CompressedIndex(recompress(FIG1))
    pattern = Fragment(3, 11)  # abaababa
    assert index.text.two_period(pattern) is None
    assert index.special_count(pattern) == 0


def test_queries_agree_with_naive_scan_on_random_texts():
    rng = random.Random(3)
    for alphabet in ("ab", "abc", "a", "aab"):
        raw = "".join(rng.choice(alphabet) for _ in range(rng.randint(20, 70))) + "$"
        index = _index(raw)
        data = index.grammar.expand()
        n = len(data)
        for m in range(1, 8):
            for start in range(1 + m % 2, n - m + 2, 2):
                pattern = Fragment(start, start + m)
                expected = naive_occurrences(data, data[start - 1 : start - 1 + m])
                reported = index.report(pattern)
                assert reported == expected
                assert index.leftmost(pattern) == expected[0]
                assert index.rightmost(pattern) == expected[-1]
                assert index.count(pattern) == len(expected)


def test_regular_count_matches_children_criterion():
    rng = random.Random(4)
    texts = ["a" * 30 + "b" + "a" * 12 + "$", "ab" * 20 + "$"]
    texts.append("".join(rng.choice("ab") for _ in range(60)) + "$")
    for raw in texts:
        index = _index(raw)
        data = index.grammar.expand()
        n = len(data)
        for m in (1, 2, 5, 9, 14):
            for start in range(1, n - m + 2, 3):
                pattern = Fragment(start, start + m)
                occs = naive_occurrences(data, data[start - 1 : start - 1 + m])
                regular = sum(1 for s in occs if index.text.is_regular(Fragment(s, s + m)))
                assert index.regular_count(pattern) == regular
                assert index.special_count(pattern) == len(occs) - regular


def test_count_power_suffix_formula():
    # 0:a 1:b 2:c 3:ab 4:(ab)^5 5:(ab)^5 c 6:(ab)^5 c (ab)^5
    grammar = Rlslp(
        [Terminal(97), Terminal(98), Terminal(99), Pair(0, 1), Power(3, 5), Pair(4, 2), Pair(5, 4)], 6
    )
    assert grammar.count(4) == 2
    table = PowerExponentTable.from_grammar(grammar)
    assert table.exponents[3] == [1, 5]
    assert table.count(3, 3) == 4
    assert table.count(3, 5) == 0
    assert table.count(3, 9) == 0
    assert table.count(0, 1) == 0


def test_count_power_suffix_matches_direct_sum():
    rng = random.Random(5)
    for _ in range(5):
        raw = "".join(rng.choice("aab") for _ in range(120)) + "$"
        index = _index(raw)
        grammar = index.grammar
        for base in range(grammar.size):
            for m in range(1, 8):
                direct = sum(
                    (rule.exp - m) * grammar.count(idx)
                    for idx, rule in grammar.power_rules()
                    if rule.base == base and rule.exp > m
                )
                assert index.count_power_suffix(base, m) == direct


def test_find_symbol_by_expansion():
    index = CompressedIndex(recompress(FIG1))
    grammar = index.grammar
    for symbol, node in grammar.first().items():
        assert index.find_symbol(Fragment(node.start, node.end)) == symbol
    assert index.describe()["symbols"] == grammar.size
