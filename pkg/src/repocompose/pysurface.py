"""Lexical line classification over Python source.

A hand-written, line-oriented lexer rather than a grammar parser: the content
transforms (code-only, declarations-only, text-only) are line-level and must
tolerate the broken code that real repositories contain. The lexer is total:
any input, valid Python or not, yields units whose line spans partition the
file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

IMPORT_RE = re.compile(r"^(?:import|from)\b")
DECL_RE = re.compile(r"^(?:async\s+def|def|class)\b")
STRING_START_RE = re.compile(r"^[rRbBuUfF]{0,2}(\"\"\"|'''|\"|')")
DEF_NAME_RE = re.compile(r"^\s*(?:async\s+)?def\s+([A-Za-z_]\w*)")
CLASS_NAME_RE = re.compile(r"^\s*class\s+([A-Za-z_]\w*)")
IDENT_RE = re.compile(r"[A-Za-z_]\w*")

KINDS = ("code", "comment", "docstring", "import", "declaration_header", "blank")


@dataclass(frozen=True)
class LexUnit:
    """One classified region of a file; ``start``/``end`` are 1-based inclusive."""

    kind: str
    start: int
    end: int
    text: str


@dataclass
class _LineInfo:
    comment_pos: int | None = None
    colon_pos: int | None = None
    backslash: bool = False


def _scan_line(line: str, state: tuple[str, bool] | None, depth: int):
    """Scan one physical line with carried string state and bracket depth.

    ``state`` is (quote_char, is_triple) when a string literal is open across
    lines. Returns (new_state, new_depth, info). Unterminated single-quoted
    strings recover at end of line unless the newline is backslash-escaped.
    """
    info = _LineInfo()
    i = 0
    n = len(line)
    escaped_eol = False
    while i < n:
        if state is not None:
            quote, triple = state
            ch = line[i]
            if ch == "\\":
                if i == n - 1:
                    escaped_eol = True
                i += 2
                continue
            if triple:
                if line.startswith(quote * 3, i):
                    state = None
                    i += 3
                    continue
            elif ch == quote:
                state = None
            i += 1
            continue
        ch = line[i]
        if ch == "#":
            info.comment_pos = i
            break
        if ch in "\"'":
            if line.startswith(ch * 3, i):
                state = (ch, True)
                i += 3
            else:
                state = (ch, False)
                i += 1
            continue
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth = max(0, depth - 1)
        elif ch == ":" and depth == 0 and info.colon_pos is None:
            info.colon_pos = i
        i += 1
    if state is not None and not state[1] and not escaped_eol:
        state = None
    info.backslash = (
        state is None
        and info.comment_pos is None
        and line.endswith("\\")
    )
    return state, depth, info


def _split_lines(content: str) -> list[str]:
    if not content:
        return []
    lines = content.split("\n")
    if content.endswith("\n"):
        lines.pop()
    return lines


def _consume_statement(lines: list[str], start: int) -> int:
    """Last line index of the logical statement starting at ``start``."""
    state: tuple[str, bool] | None = None
    depth = 0
    j = start
    last = len(lines) - 1
    while True:
        state, depth, info = _scan_line(lines[j], state, depth)
        if j == last or (state is None and depth == 0 and not info.backslash):
            return j
        j += 1


def _consume_declaration(lines: list[str], start: int) -> int:
    """Last line of a def/class header: continuation until the colon at depth 0."""
    state: tuple[str, bool] | None = None
    depth = 0
    j = start
    last = len(lines) - 1
    while True:
        state, depth, info = _scan_line(lines[j], state, depth)
        if info.colon_pos is not None:
            return j
        if j == last or (state is None and depth == 0 and not info.backslash):
            return j
        j += 1


def _scan_string_literal(lines: list[str], row: int, col: int, quote: str, triple: bool):
    """Find the close of a string opened at (row, col past the opening quotes).

    Returns (row, col past the closing quotes) or None when unterminated.
    """
    j, k = row, col
    while j < len(lines):
        line = lines[j]
        n = len(line)
        while k < n:
            ch = line[k]
            if ch == "\\":
                k += 2
                continue
            if triple:
                if line.startswith(quote * 3, k):
                    return j, k + 3
                k += 1
            else:
                if ch == quote:
                    return j, k + 1
                k += 1
        if triple:
            j, k = j + 1, 0
        elif k == n + 1:
            j, k = j + 1, 0
        else:
            return None
    return None


def lex_python(content: str) -> list[LexUnit]:
    """Classify every line of LF-normalized Python-like text.

    Spans are non-overlapping and cover all lines. Statement-position string
    literals are docstrings; import statements and def/class headers span
    their continuations; unterminated triple-quoted strings make the rest of
    the file code.
    """
    lines = _split_lines(content)
    n = len(lines)
    units: list[LexUnit] = []

    def emit(kind: str, start: int, end: int) -> None:
        units.append(LexUnit(kind, start + 1, end + 1, "\n".join(lines[start : end + 1])))

    i = 0
    while i < n:
        stripped = lines[i].strip()
        if not stripped:
            emit("blank", i, i)
            i += 1
            continue
        if stripped.startswith("#"):
            emit("comment", i, i)
            i += 1
            continue
        if IMPORT_RE.match(stripped):
            j = _consume_statement(lines, i)
            emit("import", i, j)
            i = j + 1
            continue
        if DECL_RE.match(stripped):
            j = _consume_declaration(lines, i)
            emit("declaration_header", i, j)
            i = j + 1
            continue
        m = STRING_START_RE.match(stripped)
        if m:
            quote_seq = m.group(1)
            indent = len(lines[i]) - len(lines[i].lstrip())
            open_end = indent + m.end(1)
            closed = _scan_string_literal(lines, i, open_end, quote_seq[0], len(quote_seq) == 3)
            if closed is None:
                if len(quote_seq) == 3:
                    emit("code", i, n - 1)
                    i = n
                else:
                    emit("code", i, i)
                    i += 1
                continue
            j, after = closed
            rest = lines[j][after:].strip()
            if not rest or rest.startswith("#"):
                emit("docstring", i, j)
                i = j + 1
                continue
        j = _consume_statement(lines, i)
        emit("code", i, j)
        i = j + 1
    return units


def _chop_trailing_comments(lines: list[str], start: int, end: int) -> list[str]:
    """Unit lines with trailing comments removed, string state carried across."""
    state: tuple[str, bool] | None = None
    depth = 0
    out = []
    for row in range(start, end + 1):
        line = lines[row]
        state, depth, info = _scan_line(line, state, depth)
        if info.comment_pos is not None:
            line = line[: info.comment_pos].rstrip()
        out.append(line)
    return out


def strip_to_code(content: str) -> str:
    """Remove docstrings, comments (incl. trailing), and import statements.

    Runs of blank lines in the result collapse to one; leading and trailing
    blanks are dropped. Idempotent.
    """
    lines = _split_lines(content)
    kept: list[str] = []
    for unit in lex_python(content):
        if unit.kind in ("comment", "docstring", "import"):
            continue
        if unit.kind == "blank":
            kept.append(lines[unit.start - 1])
        else:
            kept.extend(_chop_trailing_comments(lines, unit.start - 1, unit.end - 1))

    collapsed: list[str] = []
    prev_blank = True
    for line in kept:
        blank = not line.strip()
        if blank and prev_blank:
            continue
        collapsed.append(line)
        prev_blank = blank
    while collapsed and not collapsed[-1].strip():
        collapsed.pop()
    if not collapsed:
        return ""
    return "\n".join(collapsed) + "\n"


def extract_declarations(content: str) -> str:
    """Keep only def/class header lines (with signature continuations)."""
    parts = [u.text for u in lex_python(content) if u.kind == "declaration_header"]
    if not parts:
        return ""
    return "\n".join(parts) + "\n"


def extract_text_chunks(content: str) -> str:
    """Keep only comment and docstring units, in file order."""
    parts = [u.text for u in lex_python(content) if u.kind in ("comment", "docstring")]
    if not parts:
        return ""
    return "\n".join(parts) + "\n"


def _top_level_assign_positions(text: str) -> list[int]:
    """Positions of bare ``=`` at bracket depth 0 outside strings."""
    positions = []
    state: tuple[str, bool] | None = None
    depth = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if state is not None:
            quote, triple = state
            if ch == "\\":
                i += 2
                continue
            if triple:
                if text.startswith(quote * 3, i):
                    state = None
                    i += 3
                    continue
            elif ch == quote or ch == "\n":
                state = None
            i += 1
            continue
        if ch in "\"'":
            if text.startswith(ch * 3, i):
                state = (ch, True)
                i += 3
            else:
                state = (ch, False)
                i += 1
            continue
        if ch == "#":
            nl = text.find("\n", i)
            i = n if nl < 0 else nl
            continue
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth = max(0, depth - 1)
        elif ch == "=" and depth == 0:
            prev = text[i - 1] if i else ""
            nxt = text[i + 1] if i + 1 < n else ""
            if prev not in "+-*/%@&|^<>!=:~" and nxt != "=":
                positions.append(i)
        i += 1
    return positions


def _split_top_level_commas(segment: str) -> list[str]:
    parts = []
    depth = 0
    current = []
    for ch in segment:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth = max(0, depth - 1)
        if ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return parts


def _target_names(segment: str) -> set[str]:
    names: set[str] = set()
    for part in _split_top_level_commas(segment):
        part = part.strip()
        if part.startswith("*"):
            part = part.lstrip("*").strip()
        if part.startswith("(") and part.endswith(")"):
            names.update(_target_names(part[1:-1]))
            continue
        if ":" in part:
            part = part.split(":", 1)[0].strip()
        if IDENT_RE.fullmatch(part):
            names.add(part)
    return names


def declared_identifiers(content: str) -> set[str]:
    """Names bound by def, class, and top-level assignment targets."""
    lines = _split_lines(content)
    names: set[str] = set()
    for unit in lex_python(content):
        first = lines[unit.start - 1]
        if unit.kind == "declaration_header":
            m = DEF_NAME_RE.match(first) or CLASS_NAME_RE.match(first)
            if m:
                names.add(m.group(1))
        elif unit.kind == "code" and first and first[0] not in " \t":
            positions = _top_level_assign_positions(unit.text)
            prev = 0
            for pos in positions:
                names.update(_target_names(unit.text[prev:pos]))
                prev = pos + 1
    return names
