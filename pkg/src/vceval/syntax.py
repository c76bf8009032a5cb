"""Syntax facade over subject Python source.

Structural facts (call sites, with-statements, definitions) come from the
stdlib ast parser, which is the full grammar of the subject language.  The
identifier stream comes from a lexical scanner that skips string literals
and comments, so it works on unparseable text too; f-string interiors count
as string content.  Identifiers are ASCII ([A-Za-z_][A-Za-z0-9_]*) and hard
keywords are dropped from the stream.
"""

from __future__ import annotations

import ast
import keyword
import re
from dataclasses import dataclass
from pathlib import Path

from .core_model import IDENTIFIER_RE
from .errors import InvalidArgs, IoFailure

_STRING_PREFIX = r"[rRbBuUfF]{0,3}"

# Unterminated strings are consumed to end of line (single quotes) or end of
# input (triple quotes) so their contents stay out of the identifier stream
# whenever the opening boundary is recognizable.
_LEX_RE = re.compile(
    r"(?P<comment>\#[^\n]*)"
    r"|(?P<string>" + _STRING_PREFIX + r"(?:"
    r"'''(?:[^'\\]|\\.|'(?!''))*(?:'''|\Z)"
    r'|"""(?:[^"\\]|\\.|"(?!""))*(?:"""|\Z)'
    r"|'(?:[^'\\\n]|\\.)*(?:'|(?=\n)|\Z)"
    r'|"(?:[^"\\\n]|\\.)*(?:"|(?=\n)|\Z)'
    r"))"
    r"|(?P<name>" + IDENTIFIER_RE.pattern + r")",
    re.DOTALL,
)


def identifier_spans(code: str) -> list[tuple[str, int, int]]:
    """(name, start, end) character spans of identifier tokens, in source order."""
    spans = []
    for match in _LEX_RE.finditer(code):
        name = match.group("name")
        if name is not None and not keyword.iskeyword(name):
            spans.append((name, match.start(), match.end()))
    return spans


def identifier_tokens(code: str) -> list[str]:
    """Identifier tokens in source order; strings and comments contribute none."""
    return [name for name, _, _ in identifier_spans(code)]


def _parse_module(code: str) -> ast.Module | None:
    # ast.parse alone accepts contextually invalid statements (e.g. a
    # module-level return); compiling the tree applies the remaining checks,
    # matching the behavior of the builtin compile() on source text.
    try:
        tree = ast.parse(code)
        compile(tree, "<subject>", "exec")
    except (SyntaxError, ValueError, RecursionError):
        return None
    return tree


def check_syntax(code: str) -> bool:
    """True iff the text compiles as a complete module under the full grammar."""
    return _parse_module(code) is not None


@dataclass(frozen=True)
class CallSiteInfo:
    """Syntactic facts about one function call.

    callee_name is the terminal identifier of the called expression ("dump"
    for json.dump); positional, keyword, and star arguments each count once.
    """

    callee_name: str
    total_arg_count: int
    keyword_names: frozenset[str]
    inside_with: bool
    line_index: int


@dataclass(frozen=True)
class CodeFacts:
    is_valid: bool
    identifiers: tuple[str, ...]
    call_sites: tuple[CallSiteInfo, ...]
    has_with: bool
    definitions: frozenset[str]


def _callee_name(func: ast.expr) -> str | None:
    if isinstance(func, ast.Name):
        return func.id
    if isinstance(func, ast.Attribute):
        return func.attr
    return None


def _definition_names(tree: ast.Module) -> set[str]:
    # module-level functions and classes; methods one level down as Class.method
    names: set[str] = set()
    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            names.add(node.name)
        elif isinstance(node, ast.ClassDef):
            names.add(node.name)
            for item in node.body:
                if isinstance(item, (ast.FunctionDef, ast.AsyncFunctionDef)):
                    names.add(f"{node.name}.{item.name}")
    return names


def extract_facts(code: str) -> CodeFacts:
    """Full structural facts when the text parses; lexical identifiers either way.

    A call counts as inside_with when it is the context expression of a
    with-statement or lexically nested in one.
    """
    idents = tuple(identifier_tokens(code))
    tree = _parse_module(code)
    if tree is None:
        return CodeFacts(False, idents, (), False, frozenset())

    sites: list[CallSiteInfo] = []
    saw_with = False

    def visit(node: ast.AST, inside_with: bool) -> None:
        nonlocal saw_with
        if isinstance(node, (ast.With, ast.AsyncWith)):
            saw_with = True
            inside_with = True
        if isinstance(node, ast.Call):
            callee = _callee_name(node.func)
            if callee is not None:
                sites.append(
                    CallSiteInfo(
                        callee_name=callee,
                        total_arg_count=len(node.args) + len(node.keywords),
                        keyword_names=frozenset(
                            kw.arg for kw in node.keywords if kw.arg is not None
                        ),
                        inside_with=inside_with,
                        line_index=node.lineno - 1,
                    )
                )
        for child in ast.iter_child_nodes(node):
            visit(child, inside_with)

    visit(tree, False)
    return CodeFacts(True, idents, tuple(sites), saw_with, frozenset(_definition_names(tree)))


def contains_core_token(code: str, token: str) -> bool:
    """True iff token occurs as a whole identifier in the lexical stream of code.

    Occurrences inside longer identifiers, string literals, or comments do
    not count; unparseable code is judged via the lexical fallback.
    """
    if not IDENTIFIER_RE.fullmatch(token):
        raise InvalidArgs(f"core token {token!r} is not a single identifier")
    return token in identifier_tokens(code)


@dataclass(frozen=True)
class DefinitionScan:
    names: frozenset[str]
    parsed_files: int
    skipped_files: int


def scan_api_definitions(tree_root: str | Path) -> DefinitionScan:
    """Collect public qualified definition names from every .py file under tree_root.

    Files that cannot be decoded or parsed are skipped and counted.  Names
    whose terminal segment starts with an underscore are excluded; a file
    pkg/a.py defining f contributes "pkg.a.f", and __init__.py maps to its
    package.
    """
    root = Path(tree_root)
    if not root.is_dir():
        raise IoFailure(f"not a readable directory: {root}")
    names: set[str] = set()
    parsed = skipped = 0
    for path in sorted(root.rglob("*.py")):
        if not path.is_file():
            continue
        try:
            source = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError):
            skipped += 1
            continue
        tree = _parse_module(source)
        if tree is None:
            skipped += 1
            continue
        parsed += 1
        module = _module_name(path.relative_to(root))
        for local in _definition_names(tree):
            qualified = f"{module}.{local}" if module else local
            if not qualified.rsplit(".", 1)[-1].startswith("_"):
                names.add(qualified)
    return DefinitionScan(frozenset(names), parsed, skipped)


def _module_name(relative: Path) -> str:
    parts = list(relative.with_suffix("").parts)
    if parts and parts[-1] == "__init__":
        parts.pop()
    return ".".join(parts)


def extract_api_definitions(tree_root: str | Path) -> frozenset[str]:
    """Qualified public definition names under tree_root (unparseable files skipped)."""
    return scan_api_definitions(tree_root).names
