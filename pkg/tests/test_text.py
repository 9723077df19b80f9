import pytest

from rlbwtlab.core.errors import MalformedParseError, TextFormatError
from rlbwtlab.core.text import (
    Lz77Parse,
    Phrase,
    Text,
    TextInf,
    build_bwt_runs,
    build_lcp,
    build_suffix_array,
    distinct_substring_counts,
    invert_bwt,
    lce_naive,
    lz77_decode,
    lz77_parse,
    parse_from_json,
    parse_from_lines,
    parse_to_json,
    parse_to_lines,
    reverse_text,
    shortest_period,
    substring_complexity,
)

FIG1 = "bbabaababababaababa$"


def test_from_raw_maps_trailing_dollar_to_sentinel():
    text = Text.from_raw(FIG1)
    assert text.n == 20
    assert text[20] == 0
    assert text.render() == FIG1


def test_from_raw_appends_missing_sentinel():
    text = Text.from_raw("abc")
    assert text.data == b"abc\x00"


def test_zero_byte_in_input_is_rejected():
    with pytest.raises(TextFormatError):
        Text.from_raw(b"a\x00b")


def test_suffix_array_of_fig1_text():
    sa = build_suffix_array(Text.from_raw(FIG1))
    assert list(sa.sa) == [20, 19, 14, 5, 17, 12, 3, 15, 10, 8, 6, 18, 13, 4, 16, 11, 2, 9, 7, 1]


def test_bwt_runs_of_fig1_text():
    text = Text.from_raw(FIG1)
    bwt = build_bwt_runs(text, build_suffix_array(text))
    assert bwt.render() == "a1b6a1b2a6b1a2$1"
    assert bwt.r == 8


def test_lcp_and_irreducible_values_of_fig1_text():
    text = Text.from_raw(FIG1)
    sa = build_suffix_array(text)
    lcp = build_lcp(text, sa, build_bwt_runs(text, sa))
    assert list(lcp.lcp) == [0, 0, 1, 6, 1, 3, 8, 3, 5, 5, 7, 0, 2, 7, 2, 4, 9, 4, 6, 1]
    assert sum(lcp.irreducible_values()) == 29


def test_suffix_array_small_texts():
    assert list(build_suffix_array(Text.from_raw("$")).sa) == [1]
    assert list(build_suffix_array(Text.from_raw("aaaa$")).sa) == [5, 4, 3, 2, 1]


def test_invert_bwt_recovers_text():
    text = Text.from_raw("mississippi$")
    assert invert_bwt(build_bwt_runs(text, build_suffix_array(text))) == text


def test_lz77_of_fig1_text():
    parse = lz77_parse(Text.from_raw(FIG1))
    assert parse.render() == "(b,0),(1,1),(a,0),(2,2),(3,3),(7,6),(10,5),($,0)"
    assert parse.z == 8
    assert lz77_decode(parse) == Text.from_raw(FIG1)


def test_lz77_decode_rejects_forward_reference():
    parse = Lz77Parse((Phrase(char=ord("a")), Phrase(src=5, length=1), Phrase(char=0)))
    with pytest.raises(MalformedParseError):
        lz77_decode(parse)


def test_parse_text_and_json_forms_agree():
    parse = lz77_parse(Text.from_raw("abababab$"))
    assert parse_from_lines(parse_to_lines(parse)) == parse
    assert parse_from_json(parse_to_json(parse)) == parse


def test_parse_from_lines_rejects_unknown_records():
    with pytest.raises(MalformedParseError):
        parse_from_lines(["X 1 2"])


def test_lce_naive():
    text = Text.from_raw(FIG1)
    assert lce_naive(text, 3, 15) == 3
    assert lce_naive(text, 7, 7) == 14


def test_shortest_period():
    assert shortest_period(b"bababa") == 2
    assert shortest_period(b"abaababa") == 5
    assert shortest_period(b"a") == 1


def test_reverse_text_keeps_sentinel_last():
    assert reverse_text(Text.from_raw("abc$")).data == b"cba\x00"


def test_substring_counts_match_window_enumeration():
    for raw in (FIG1, "abracadabra$", "aaaaaaa$", "a$"):
        text = Text.from_raw(raw)
        tinf = TextInf(text)
        counts = distinct_substring_counts(text)
        for m in range(1, text.n + 1):
            assert counts[m] == len({tinf.window(i, m) for i in range(1, text.n + 1)})


def test_substring_complexity_of_two_letter_text():
    delta, m = substring_complexity(Text.from_raw("a$"))
    assert delta == 2
    assert m == 1


def test_substring_complexity_respects_limit():
    with pytest.raises(ValueError):
        substring_complexity(Text.from_raw("ab" * 10 + "$"), limit=8)
