from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

from repocompose.pysurface import (
    declared_identifiers,
    extract_declarations,
    extract_text_chunks,
    lex_python,
    strip_to_code,
)


def kinds_and_spans(content):
    return [(u.kind, u.start, u.end) for u in lex_python(content)]


# -- lex_python ---------------------------------------------------------------

def test_lex_comment_then_code():
    assert kinds_and_spans("# hi\nx = 1\n") == [("comment", 1, 1), ("code", 2, 2)]


def test_lex_module_docstring():
    assert kinds_and_spans('"""doc"""\n') == [("docstring", 1, 1)]


def test_lex_parenthesized_import_spans_three_lines():
    assert kinds_and_spans("from os import (\n path,\n)\n") == [("import", 1, 3)]


def test_lex_backslash_import_continuation():
    assert kinds_and_spans("import os, \\\n    sys\nx = 1\n") == [
        ("import", 1, 2),
        ("code", 3, 3),
    ]


def test_lex_multiline_docstring():
    content = '"""start\nmiddle\nend"""\nx = 1\n'
    assert kinds_and_spans(content) == [("docstring", 1, 3), ("code", 4, 4)]


def test_lex_declaration_header_until_colon():
    content = "def g(\n  x,\n):\n  pass\n"
    assert kinds_and_spans(content) == [("declaration_header", 1, 3), ("code", 4, 4)]


def test_lex_unterminated_triple_becomes_code():
    content = 'x = 1\n"""never closed\nstill inside\n'
    assert kinds_and_spans(content) == [("code", 1, 1), ("code", 2, 3)]


def test_lex_hash_inside_string_is_not_comment():
    assert kinds_and_spans("x = '# not a comment'\n") == [("code", 1, 1)]


def test_lex_string_assigned_multiline_is_code():
    content = 'msg = """a\nb"""\n'
    assert kinds_and_spans(content) == [("code", 1, 2)]


def test_lex_blank_lines():
    assert kinds_and_spans("\n  \nx=1\n") == [("blank", 1, 1), ("blank", 2, 2), ("code", 3, 3)]


def test_lex_no_trailing_newline():
    assert kinds_and_spans("x = 1") == [("code", 1, 1)]


text_strategy = st.text(
    alphabet="abx=1#'\"()\n \tdefclassimportfrom:\\",
    max_size=200,
)


@given(text_strategy)
def test_lex_spans_partition_every_input(content):
    units = lex_python(content)
    n_lines = len(content.split("\n")) - (1 if content.endswith("\n") else 0)
    if not content:
        n_lines = 0
    covered = []
    for unit in units:
        assert 1 <= unit.start <= unit.end
        covered.extend(range(unit.start, unit.end + 1))
    assert covered == list(range(1, n_lines + 1))


# -- strip_to_code ------------------------------------------------------------

def test_strip_removes_import_and_trailing_comment():
    assert strip_to_code("import os\nx = 1  # note\n") == "x = 1\n"


def test_strip_comment_only_file_is_empty():
    assert strip_to_code("# one\n# two\n") == ""


def test_strip_preserves_hash_in_string():
    content = "x = '# not a comment'\n"
    assert strip_to_code(content) == content


def test_strip_drops_docstrings_and_collapses_blanks():
    content = '"""mod doc"""\n\n\nimport sys\n\n\ndef f():\n    return 1\n'
    assert strip_to_code(content) == "def f():\n    return 1\n"


def test_strip_keeps_code_inside_triple_string():
    content = 'template = """\n# looks like a comment\n"""\n'
    assert strip_to_code(content) == content


@given(text_strategy)
def test_strip_to_code_idempotent(content):
    once = strip_to_code(content)
    assert strip_to_code(once) == once


# -- extract_declarations -----------------------------------------------------

def test_declarations_keep_headers_only():
    content = "class A:\n    def f(self):\n        return 1\n"
    assert extract_declarations(content) == "class A:\n    def f(self):\n"


def test_declarations_empty_when_absent():
    assert extract_declarations("x = 1\ny = 2\n") == ""


def test_declarations_multiline_signature():
    content = "def g(\n  x,\n):\n  pass\n"
    assert extract_declarations(content) == "def g(\n  x,\n):\n"


def test_declarations_drop_decorators_and_async_kept():
    content = "@decorate\nasync def fetch(url):\n    return await get(url)\n"
    assert extract_declarations(content) == "async def fetch(url):\n"


# -- extract_text_chunks ------------------------------------------------------

def test_text_chunks_docstring_and_comment():
    assert extract_text_chunks('"""m"""\nx=1\n# c\n') == '"""m"""\n# c\n'


def test_text_chunks_pure_code_empty():
    assert extract_text_chunks("x = 1\nreturn x\n") == ""


@given(text_strategy)
def test_code_and_text_outputs_share_no_line_position(content):
    """Code-ish units and text units draw from disjoint line positions."""
    code_rows = set()
    text_rows = set()
    for unit in lex_python(content):
        rows = set(range(unit.start, unit.end + 1))
        if unit.kind in ("code", "declaration_header"):
            code_rows |= rows
        elif unit.kind in ("comment", "docstring"):
            text_rows |= rows
    assert not (code_rows & text_rows)


def test_every_nonblank_line_lands_in_one_bucket():
    content = (
        '"""module doc"""\n'
        "import os\n"
        "from sys import (\n"
        "  argv,\n"
        ")\n"
        "# top comment\n"
        "def f(x):  # inline\n"
        "    return x + 1\n"
        "\n"
        "VALUE = 3\n"
    )
    assert strip_to_code(content) == "def f(x):\n    return x + 1\n\nVALUE = 3\n"
    assert extract_text_chunks(content) == '"""module doc"""\n# top comment\n'
    import_rows = [
        (unit.start, unit.end) for unit in lex_python(content) if unit.kind == "import"
    ]
    assert import_rows == [(2, 2), (3, 5)]


# -- declared_identifiers -----------------------------------------------------

def test_identifiers_def_and_class():
    assert declared_identifiers("def foo(): pass\nclass Bar: pass\n") == {"foo", "Bar"}


def test_identifiers_empty_input():
    assert declared_identifiers("") == set()


def test_identifiers_tuple_targets():
    assert declared_identifiers("x, y = 1, 2\n") == {"x", "y"}


def test_identifiers_annotated_and_chained():
    assert declared_identifiers("count: int = 0\nfirst = second = init()\n") == {
        "count",
        "first",
        "second",
    }


def test_identifiers_skip_nested_assignments_keep_nested_defs():
    content = "def outer():\n    inner_value = 1\n    def inner(): pass\n"
    assert declared_identifiers(content) == {"outer", "inner"}


def test_identifiers_ignore_comparisons_and_calls():
    assert declared_identifiers("if ready == done:\n    run(x=1)\n") == set()
