import pytest

from pvguard import ParseError, parse_source

GOOD = """\
# two crossing lock orders
resource a cap 1
resource b cap 1

thread T1 = Pa Pb Vb Va
thread T2 = Pb Pa Va Vb   # reversed order

program main = T1 | T2
program tower = T1 ^ 3
program mixed = T1 | T2^2
"""


def test_parse_good_source():
    m = parse_source(GOOD)
    assert sorted(m.threads) == ["T1", "T2"]
    assert sorted(m.programs) == ["main", "mixed", "tower"]
    assert m.caps.items() == (("a", 1), ("b", 1))
    assert m.programs["main"].n == 2
    assert m.programs["tower"].n == 3
    mixed = m.programs["mixed"]
    assert mixed.n == 3
    assert str(mixed.threads[0]) == "Pa Pb Vb Va"
    assert str(mixed.threads[1]) == str(mixed.threads[2]) == "Pb Pa Va Vb"


def test_parse_spaced_actions_and_blank_lines():
    m = parse_source(
        "resource a cap 2\n\nthread T = P a V a\nprogram main = T^2\n"
    )
    assert str(m.threads["T"]) == "Pa Va"
    assert m.caps["a"] == 2


def err(src: str) -> ParseError:
    with pytest.raises(ParseError) as e:
        parse_source(src)
    return e.value


def test_invalid_thread_position_reported():
    e = err("resource a cap 1\nthread T = Pa Pa Va Va\nprogram m = T^2\n")
    assert e.line == 2
    assert "position 2" in str(e)
    assert "use count 2" in str(e)


def test_zero_capacity_rejected():
    e = err("resource a cap 0\n")
    assert e.line == 1
    assert "must be an integer >= 1" in str(e)


def test_unknown_resource_in_thread():
    e = err("thread T = Pa Va\n")
    assert "unknown resource 'a'" in str(e)


def test_bad_action_token_position():
    e = err("resource a cap 1\nthread T = Pa Qa Va\n")
    assert e.line == 2
    assert "Qa" in str(e)


def test_unknown_thread_in_program():
    e = err("resource a cap 1\nthread T = Pa Va\nprogram m = T | U\n")
    assert e.line == 3
    assert "unknown thread name 'U'" in str(e)


def test_duplicate_resource():
    e = err("resource a cap 1\nresource a cap 2\n")
    assert (e.line, e.column) == (2, 1)


def test_duplicate_thread_and_program():
    e = err("resource a cap 1\nthread T = Pa Va\nthread T = Pa Va\n")
    assert e.line == 3
    e = err(
        "resource a cap 1\nthread T = Pa Va\n"
        "program m = T^2\nprogram m = T^3\n"
    )
    assert e.line == 4


def test_held_at_end_reported():
    e = err("resource a cap 1\nthread T = Pa\nprogram m = T^1\n")
    assert "still held at end" in str(e)


def test_unparseable_line():
    e = err("resource a cap 1\nbogus line here\n")
    assert e.line == 2


def test_bad_power_suffix():
    e = err("resource a cap 1\nthread T = Pa Va\nprogram m = T^0\n")
    assert e.line == 3
    e = err("resource a cap 1\nthread T = Pa Va\nprogram m = T^x\n")
    assert e.line == 3


def test_empty_program_expression():
    e = err("resource a cap 1\nthread T = Pa Va\nprogram m =\n")
    assert e.line == 3


def test_empty_source_has_no_models():
    m = parse_source("# nothing but comments\n")
    assert not m.threads and not m.programs and len(m.caps) == 0


def test_parse_error_str_format():
    e = err("resource a cap 0\n")
    assert str(e).startswith(f"line {e.line}, column {e.column}: ")
