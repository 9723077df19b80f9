import math
import random
from collections import Counter

import pytest

from rlbwtlab.core.errors import GrammarError
from rlbwtlab.core.lbgen import gen_thue_morse
from rlbwtlab.core.rlslp import (
    NodeHandle,
    Pair,
    Power,
    Rlslp,
    Terminal,
    recompress,
    rlslp_from_lz77,
    size_bound,
)
from rlbwtlab.core.text import Text, lz77_parse

FIG1 = Text.from_raw("bbabaababababaababa$")


def _random_text(rng: random.Random, n: int, alphabet: str = "ab") -> Text:
    return Text.from_raw("".join(rng.choice(alphabet) for _ in range(n)) + "$")


def _all_nodes(grammar: Rlslp):
    stack = [grammar.root()]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(grammar.children(node))


def test_fig1_grammar_expands_to_text():
    grammar = recompress(FIG1)
    assert grammar.expand() == FIG1.data
    assert grammar.n == FIG1.n
    grammar.validate()


def test_single_run_text():
    grammar = recompress(Text.from_raw("aaaa$"))
    assert grammar.height == 3
    a = grammar.terminal_of(ord("a"))
    assert grammar.count(a) == 4
    assert Power(a, 4) in grammar.rules
    assert grammar.count(grammar.start) == 1


def test_two_letter_text_has_three_symbols():
    grammar = recompress(Text.from_raw("a$"))
    assert grammar.size == 3
    assert grammar.expand() == b"a\x00"


def test_sentinel_only_text():
    grammar = recompress(Text.from_raw("$"))
    assert grammar.size == 1
    assert grammar.height == 1


def test_rules_reference_earlier_symbols_only():
    with pytest.raises(GrammarError):
        Rlslp([Terminal(97), Pair(0, 2), Terminal(98)], 1)
    with pytest.raises(GrammarError):
        Rlslp([Terminal(97), Power(0, 1)], 1)
    with pytest.raises(GrammarError):
        Rlslp([Terminal(97), Pair(0, 0)], 1)


def test_child_containing_in_power_node():
    # 0:a 1:b 2:ab 3:ba 4:abba 5:(abba)^3
    grammar = Rlslp([Terminal(97), Terminal(98), Pair(0, 1), Pair(1, 0), Pair(2, 3), Power(4, 3)], 5)
    root = grammar.root()
    child, index = grammar.child_containing(root, root.start + 5)
    assert index == 2
    assert child == NodeHandle(4, 5, 9)
    assert grammar.child_at(root, 3) == NodeHandle(4, 9, 13)
    with pytest.raises(ValueError):
        grammar.child_at(root, 4)
    with pytest.raises(ValueError):
        grammar.child_containing(root, 13)


def test_leftmost_descent_reaches_first_character():
    grammar = recompress(FIG1)
    leaf = grammar.path_to(1)[-1]
    assert leaf.start == 1 and leaf.end == 2
    assert grammar.rules[leaf.symbol] == Terminal(ord("b"))


def test_children_tile_their_parent():
    rng = random.Random(5)
    grammar = recompress(_random_text(rng, 200, "abc"))
    for node in _all_nodes(grammar):
        kids = grammar.children(node)
        if not kids:
            continue
        assert kids[0].start == node.start and kids[-1].end == node.end
        assert all(a.end == b.start for a, b in zip(kids, kids[1:]))


def test_first_count_and_enumerate_match_full_traversal():
    rng = random.Random(9)
    for _ in range(10):
        grammar = recompress(_random_text(rng, rng.randint(10, 150), "abc"))
        tally = Counter()
        nodes = {}
        for node in _all_nodes(grammar):
            tally[node.symbol] += 1
            nodes.setdefault(node.symbol, set()).add(node)
        for symbol in range(grammar.size):
            assert grammar.count(symbol) == tally[symbol]
            enumerated = set(grammar.enumerate_nodes(symbol))
            assert enumerated == nodes[symbol]
            assert grammar.first()[symbol].start == min(node.start for node in enumerated)


def test_unused_symbol_raises():
    grammar = Rlslp([Terminal(97), Terminal(98), Terminal(0), Pair(0, 2)], 3)
    with pytest.raises(GrammarError):
        list(grammar.enumerate_nodes(1))
    with pytest.raises(GrammarError):
        grammar.count(1)
    trimmed = grammar.trimmed()
    assert trimmed.size == 3
    assert trimmed.expand() == b"a\x00"


def test_levels_nest_and_end_with_the_root():
    grammar = recompress(FIG1)
    levels = grammar.levels
    assert len(levels) == grammar.height
    assert levels[0].starts == list(range(1, FIG1.n + 1))
    assert levels[-1].symbols == [grammar.start]
    for lower, upper in zip(levels, levels[1:]):
        assert set(upper.starts) <= set(lower.starts)


def test_levels_rebuilt_from_lines_match_construction():
    grammar = recompress(Text.from_raw("abracadabraabracadabra$"))
    loaded = Rlslp.from_lines(grammar.to_lines())
    assert loaded.rules == grammar.rules
    assert loaded.start == grammar.start
    assert [lv.starts for lv in loaded.levels] == [lv.starts for lv in grammar.levels]
    assert [lv.symbols for lv in loaded.levels] == [lv.symbols for lv in grammar.levels]


def test_from_lines_requires_start():
    with pytest.raises(GrammarError):
        Rlslp.from_lines(["T a 1"])


def test_recompression_is_deterministic():
    rng = random.Random(1)
    text = _random_text(rng, 300)
    assert recompress(text).to_lines() == recompress(text).to_lines()
    assert recompress(text, "random", seed=4).to_lines() == recompress(text, "random", seed=4).to_lines()
    with pytest.raises(ValueError):
        recompress(text, "optimal")


def test_random_policy_generates_text():
    rng = random.Random(2)
    text = _random_text(rng, 120, "abcd")
    grammar = recompress(text, "random", seed=17)
    assert grammar.expand() == text.data
    grammar.validate()


def test_height_is_logarithmic_on_random_texts():
    rng = random.Random(3)
    for _ in range(30):
        text = _random_text(rng, rng.randint(2, 512), "ab")
        grammar = recompress(text)
        assert grammar.expand() == text.data
        assert grammar.height <= 6 * math.log2(text.n) + 4


def test_expansions_distinct_and_power_bases_primitive():
    rng = random.Random(4)
    for alphabet in ("a", "ab", "abc"):
        grammar = recompress(_random_text(rng, 200, alphabet))
        grammar.validate()


def test_reversed_grammar_generates_reverse():
    grammar = recompress(FIG1)
    rev = grammar.reversed()
    assert rev.expand() == FIG1.data[::-1]
    assert [lv.starts for lv in rev.levels] == [lv.starts for lv in rev._levels_from_tree()]


def test_extract_and_char_at():
    grammar = recompress(FIG1)
    assert grammar.extract(3, 8) == FIG1.data[2:7]
    assert grammar.char_at(20) == 0
    with pytest.raises(ValueError):
        grammar.extract(5, 30)


def test_grammar_from_lz77():
    parse = lz77_parse(Text.from_raw("a$"))
    assert rlslp_from_lz77(parse).size == 3
    assert rlslp_from_lz77(lz77_parse(FIG1)).expand() == FIG1.data


def test_thue_morse_grammar_size_within_bound():
    text = gen_thue_morse(1024)
    parse = lz77_parse(text)
    grammar = rlslp_from_lz77(parse)
    assert grammar.expand() == text.data
    assert grammar.size <= size_bound(parse.z, text.n, 64)
