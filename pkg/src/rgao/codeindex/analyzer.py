"""Line-level heuristic grammars for symbol and dependency extraction.

Each grammar turns source text into :class:`RawSymbol` records: functions,
methods, classes, top-level variables, imports, and (Python only) the
``if __name__ == "__main__"`` block.  The analyzers never execute or fully
parse code; they recognise definitions by line shape and attribute call
sites to the innermost enclosing definition.
"""

from __future__ import annotations

import keyword
import re
from dataclasses import dataclass, field
from typing import Protocol

CALL_RE = re.compile(r"(?<![\w$])([A-Za-z_$][\w$]*)\s*\(")


@dataclass
class RawSymbol:
    name: str
    qualname: str
    symbol_type: str
    start_line: int
    end_line: int
    signature: str = ""
    docstring: str | None = None
    parent: str | None = None  # qualname of enclosing symbol
    calls: list[str] = field(default_factory=list)
    bases: list[str] = field(default_factory=list)
    module: str | None = None  # import symbols: module being imported
    imported_names: list[str] = field(default_factory=list)


class Grammar(Protocol):
    language: str
    extensions: tuple[str, ...]

    def parse(self, text: str) -> list[RawSymbol]: ...


def _add_call(sym: RawSymbol, name: str, ignore: frozenset[str]) -> None:
    if name in ignore or name == sym.name:
        return
    if name not in sym.calls:
        sym.calls.append(name)


# -- Python -------------------------------------------------------------------

_PY_DEF = re.compile(r"^(\s*)(?:async\s+)?def\s+([A-Za-z_]\w*)\s*\(")
_PY_CLASS = re.compile(r"^(\s*)class\s+([A-Za-z_]\w*)\s*(?:\(([^)]*)\))?\s*:")
_PY_DEF_PREFIXES = ("def ", "async ", "class ")
_PY_IMPORT = re.compile(r"^import\s+(.+)$")
_PY_FROM = re.compile(r"^from\s+([.\w]+)\s+import\s+(.+)$")
_PY_VAR = re.compile(r"^([A-Za-z_]\w*)\s*(?::[^=]+)?=(?!=)")
_PY_MAIN = re.compile(r"""^if\s+__name__\s*==\s*['"]__main__['"]\s*:""")
_PY_IGNORE = frozenset(keyword.kwlist) | frozenset({
    "print", "len", "range", "str", "int", "float", "dict", "list", "set", "tuple",
    "isinstance", "super", "enumerate", "zip", "sorted", "min", "max", "open",
    "repr", "type", "bool", "sum", "any", "all", "getattr", "setattr", "hasattr",
    "iter", "next", "map", "filter", "abs", "round", "object", "format", "id",
})


def _strip_comment(line: str) -> str:
    # Good enough for call extraction: drop trailing comments outside quotes.
    if "#" not in line:
        return line
    out = []
    quote = ""
    for ch in line:
        if quote:
            if ch == quote:
                quote = ""
        elif ch in "'\"":
            quote = ch
        elif ch == "#":
            break
        out.append(ch)
    return "".join(out)


class PythonGrammar:
    language = "python"
    extensions = (".py", ".pyi")

    def parse(self, text: str) -> list[RawSymbol]:
        lines = text.splitlines()
        n = len(lines)
        symbols: list[RawSymbol] = []
        stack: list[tuple[int, RawSymbol]] = []  # (indent, symbol)
        last_code_line = 0
        in_string: str | None = None
        pending_doc: RawSymbol | None = None
        doc_lines: list[str] | None = None
        i = 0
        while i < n:
            raw = lines[i]
            lineno = i + 1
            stripped = raw.strip()

            if in_string is not None:
                if doc_lines is not None:
                    end = stripped.find(in_string)
                    doc_lines.append(stripped if end < 0 else stripped[:end])
                if in_string in raw:
                    in_string = None
                    if doc_lines is not None and pending_doc is not None:
                        pending_doc.docstring = "\n".join(doc_lines).strip()
                    doc_lines = None
                    pending_doc = None
                if stripped:
                    last_code_line = lineno
                i += 1
                continue

            if not stripped or stripped.startswith("#"):
                i += 1
                continue

            indent = len(raw) - len(raw.lstrip())
            while stack and stack[-1][0] >= indent:
                stack.pop()[1].end_line = last_code_line

            if pending_doc is not None:
                doc_sym, pending_doc = pending_doc, None
                body = stripped.lstrip("rRuUbB")
                quote = body[:3]
                if quote in ('"""', "'''"):
                    body = body[3:]
                    if quote in body:
                        doc_sym.docstring = body[: body.index(quote)].strip()
                    else:
                        in_string = quote
                        pending_doc = doc_sym
                        doc_lines = [body]
                    last_code_line = lineno
                    i += 1
                    continue

            parent = stack[-1][1] if stack else None
            m_def = m_cls = None
            if stripped.startswith(_PY_DEF_PREFIXES):
                m_def = _PY_DEF.match(raw)
                m_cls = None if m_def else _PY_CLASS.match(raw)
            if m_def or m_cls:
                name = (m_def or m_cls).group(2)
                if m_cls:
                    stype = "class"
                elif parent is not None and parent.symbol_type == "class":
                    stype = "method"
                else:
                    stype = "function"
                qual = f"{parent.qualname}.{name}" if parent is not None else name
                sym = RawSymbol(name, qual, stype, lineno, lineno, signature=stripped.rstrip(":"),
                                parent=parent.qualname if parent is not None else None)
                if m_cls and m_cls.group(3):
                    sym.bases = [b.strip().split("[")[0].split(".")[-1]
                                 for b in m_cls.group(3).split(",")
                                 if b.strip() and "=" not in b]
                symbols.append(sym)
                stack.append((indent, sym))
                pending_doc = sym
                # Collect calls in default arguments / decorators-free signature tail.
                for call in CALL_RE.findall(_strip_comment(raw)[m_def.end() if m_def else m_cls.end():]):
                    _add_call(sym, call, _PY_IGNORE)
                last_code_line = lineno
                i += 1
                continue

            if indent == 0:
                m_from = m_imp = None
                if stripped.startswith(("from ", "import ")):
                    m_from = _PY_FROM.match(stripped)
                    m_imp = None if m_from else _PY_IMPORT.match(stripped)
                if m_from or m_imp:
                    stmt = stripped
                    end = lineno
                    if "(" in stmt and ")" not in stmt:
                        while end < n and ")" not in lines[end - 1]:
                            end += 1
                            stmt += " " + lines[end - 1].strip()
                    if m_from:
                        module = m_from.group(1)
                        names_part = stmt.split(" import ", 1)[1]
                        names = [p.strip().split(" as ")[0].strip("() ")
                                 for p in names_part.replace("(", " ").replace(")", " ").split(",")]
                        names = [x for x in names if x and x != "\\"]
                    else:
                        mods = [p.strip().split(" as ")[0] for p in m_imp.group(1).split(",")]
                        module = mods[0]
                        names = []
                    sym = RawSymbol(module, f"import:{module}", "import", lineno, end,
                                    signature=stmt, module=module, imported_names=names)
                    symbols.append(sym)
                    last_code_line = end
                    i = end
                    continue
                if stripped.startswith("if") and _PY_MAIN.match(stripped):
                    sym = RawSymbol("__main__", "__main__", "block", lineno, lineno, signature=stripped)
                    symbols.append(sym)
                    stack.append((indent, sym))
                    last_code_line = lineno
                    i += 1
                    continue
                m_var = _PY_VAR.match(stripped) if "=" in stripped else None
                if m_var:
                    name = m_var.group(1)
                    sym = RawSymbol(name, name, "variable", lineno, lineno, signature=stripped[:120])
                    symbols.append(sym)
                    for call in CALL_RE.findall(_strip_comment(stripped)[m_var.end():]):
                        _add_call(sym, call, _PY_IGNORE)
                    last_code_line = lineno
                    i += 1
                    continue

            if parent is not None and "(" in raw:
                for call in CALL_RE.findall(_strip_comment(raw)):
                    _add_call(parent, call, _PY_IGNORE)
            for q in ('"""', "'''"):
                if raw.count(q) % 2 == 1:
                    in_string = q
                    break
            last_code_line = lineno
            i += 1

        while stack:
            stack.pop()[1].end_line = last_code_line
        return symbols


# -- JavaScript / TypeScript --------------------------------------------------

_JS_FUNC = re.compile(r"^\s*(?:export\s+)?(?:default\s+)?(?:async\s+)?function\s*\*?\s*([A-Za-z_$][\w$]*)\s*[(<]")
_JS_CLASS = re.compile(r"^\s*(?:export\s+)?(?:default\s+)?(?:abstract\s+)?class\s+([A-Za-z_$][\w$]*)"
                       r"(?:\s*<[^>]*>)?(?:\s+extends\s+([A-Za-z_$][\w$.]*))?")
_JS_ARROW = re.compile(r"^\s*(?:export\s+)?(?:const|let|var)\s+([A-Za-z_$][\w$]*)\s*(?::[^=]+)?=\s*"
                       r"(?:async\s+)?(?:function\b|\([^)]*\)\s*(?::[^=]+)?=>|[A-Za-z_$][\w$]*\s*=>)")
_JS_VAR = re.compile(r"^(?:export\s+)?(?:const|let|var)\s+([A-Za-z_$][\w$]*)\s*(?::[^=]+)?=")
_JS_METHOD = re.compile(r"^\s*(?:(?:public|private|protected|static|readonly|async|override|get|set)\s+)*"
                        r"([A-Za-z_$][\w$]*)\s*(?:<[^>]*>)?\([^)]*(?:\)\s*(?::[^{;]+)?(?:\{|$)|$)")
_JS_IMPORT = re.compile(r"""^\s*import\s+(?:(.+?)\s+from\s+)?['"]([^'"]+)['"]""")
_JS_REQUIRE = re.compile(r"""^\s*(?:const|let|var)\s+(.+?)\s*=\s*require\(\s*['"]([^'"]+)['"]\s*\)""")
_JS_IGNORE = frozenset({
    "if", "for", "while", "switch", "catch", "function", "return", "typeof", "new",
    "constructor", "super", "require", "import", "console", "await", "async", "with",
    "delete", "void", "yield", "in", "of", "do", "else", "try", "throw", "class",
    "Number", "String", "Boolean", "Array", "Object", "Promise", "JSON", "Math",
    "parseInt", "parseFloat", "setTimeout", "log",
})


def _brace_depths(lines: list[str]) -> tuple[list[int], list[int], list[str]]:
    """Depth before each line, depth after it, and each line with strings/comments blanked."""
    before, after, cleaned = [], [], []
    depth = 0
    in_block_comment = False
    for line in lines:
        before.append(depth)
        out = []
        i = 0
        quote = ""
        while i < len(line):
            ch = line[i]
            nxt = line[i + 1] if i + 1 < len(line) else ""
            if in_block_comment:
                if ch == "*" and nxt == "/":
                    in_block_comment = False
                    i += 2
                    continue
                i += 1
                continue
            if quote:
                if ch == "\\":
                    i += 2
                    continue
                if ch == quote:
                    quote = ""
                out.append(" ")
                i += 1
                continue
            if ch == "/" and nxt == "/":
                break
            if ch == "/" and nxt == "*":
                in_block_comment = True
                i += 2
                continue
            if ch in "'\"`":
                quote = ch
                out.append(ch)
                i += 1
                continue
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth = max(0, depth - 1)
            out.append(ch)
            i += 1
        after.append(depth)
        cleaned.append("".join(out))
    return before, after, cleaned


def _jsdoc_before(lines: list[str], idx: int) -> str | None:
    j = idx - 1
    while j >= 0 and not lines[j].strip():
        j -= 1
    if j < 0 or not lines[j].strip().endswith("*/"):
        return None
    end = j
    while j >= 0 and "/**" not in lines[j]:
        j -= 1
    if j < 0:
        return None
    body = []
    for raw in lines[j:end + 1]:
        s = raw.strip()
        s = s.removeprefix("/**").removesuffix("*/").strip()
        s = s.lstrip("*").strip()
        if s:
            body.append(s)
    return "\n".join(body) or None


class JavaScriptGrammar:
    language = "javascript"
    extensions = (".js", ".jsx", ".mjs", ".cjs")

    def parse(self, text: str) -> list[RawSymbol]:
        lines = text.splitlines()
        before, after, cleaned = _brace_depths(lines)
        n = len(lines)
        symbols: list[RawSymbol] = []
        open_syms: list[tuple[int, RawSymbol]] = []  # (depth before the definition line, symbol)

        def span_end(idx: int) -> int:
            start_depth = before[idx]
            if after[idx] <= start_depth and "{" not in cleaned[idx]:
                # Signature may continue; look ahead for the opening brace.
                k = idx
                while k + 1 < n and after[k] <= start_depth and "{" not in cleaned[k] and not cleaned[k].rstrip().endswith(";"):
                    k += 1
                if after[k] <= start_depth:
                    return k + 1
                idx = k
            k = idx
            while k < n and after[k] > start_depth:
                k += 1
            return min(k, n - 1) + 1

        for idx, raw in enumerate(lines):
            lineno = idx + 1
            code = cleaned[idx]
            stripped = code.strip()
            while open_syms and lineno > open_syms[-1][1].end_line:
                open_syms.pop()
            parent = open_syms[-1][1] if open_syms else None
            if not stripped:
                continue
            depth = before[idx]

            if depth == 0:
                m_imp = _JS_IMPORT.match(raw) or _JS_REQUIRE.match(raw)
                if m_imp:
                    bound, module = m_imp.group(1) or "", m_imp.group(2)
                    names = [p.strip().split(" as ")[-1].strip()
                             for p in bound.replace("{", ",").replace("}", ",").replace("*", "").split(",")]
                    names = [x for x in names if x and x != "type"]
                    symbols.append(RawSymbol(module, f"import:{module}", "import", lineno, lineno,
                                             signature=raw.strip(), module=module, imported_names=names))
                    continue

            m_cls = _JS_CLASS.match(code)
            m_fn = None if m_cls else (_JS_FUNC.match(code) or _JS_ARROW.match(code))
            m_meth = None
            if not (m_cls or m_fn) and parent is not None and parent.symbol_type == "class" \
                    and depth == open_syms[-1][0] + 1:
                m_meth = _JS_METHOD.match(code)
                if m_meth and m_meth.group(1) in _JS_IGNORE - {"constructor"}:
                    m_meth = None
            if m_cls or m_fn or m_meth:
                match = m_cls or m_fn or m_meth
                name = match.group(1)
                stype = "class" if m_cls else ("method" if m_meth else "function")
                qual = f"{parent.qualname}.{name}" if parent is not None else name
                end = span_end(idx)
                sym = RawSymbol(name, qual, stype, lineno, end, signature=raw.strip().rstrip("{").strip(),
                                docstring=_jsdoc_before(lines, idx),
                                parent=parent.qualname if parent is not None else None)
                if m_cls and m_cls.group(2):
                    sym.bases = [m_cls.group(2).split(".")[-1]]
                symbols.append(sym)
                if end > lineno:
                    open_syms.append((depth, sym))
                tail = code[match.end():]
                for call in CALL_RE.findall(tail):
                    _add_call(sym, call, _JS_IGNORE)
                continue

            if depth == 0 and parent is None:
                m_var = _JS_VAR.match(stripped)
                if m_var:
                    sym = RawSymbol(m_var.group(1), m_var.group(1), "variable", lineno, span_end(idx),
                                    signature=raw.strip()[:120])
                    symbols.append(sym)
                    for call in CALL_RE.findall(stripped[m_var.end():]):
                        _add_call(sym, call, _JS_IGNORE)
                    continue

            if parent is not None:
                for call in CALL_RE.findall(code):
                    _add_call(parent, call, _JS_IGNORE)
        return symbols


class TypeScriptGrammar(JavaScriptGrammar):
    language = "typescript"
    extensions = (".ts", ".tsx", ".mts", ".cts")


GRAMMARS: tuple[Grammar, ...] = (PythonGrammar(), JavaScriptGrammar(), TypeScriptGrammar())

# Recognised source files without a grammar: indexed as file nodes only.
PLAIN_SOURCE_LANGUAGES: dict[str, str] = {
    ".go": "go", ".rs": "rust", ".java": "java", ".kt": "kotlin", ".c": "c", ".h": "c",
    ".cc": "cpp", ".cpp": "cpp", ".hpp": "cpp", ".cs": "csharp", ".rb": "ruby",
    ".php": "php", ".swift": "swift", ".scala": "scala", ".sh": "shell",
}

SUPPORTED_LANGUAGES = frozenset(g.language for g in GRAMMARS)


def grammar_for(suffix: str) -> Grammar | None:
    suffix = suffix.lower()
    for g in GRAMMARS:
        if suffix in g.extensions:
            return g
    return None


def language_for(suffix: str) -> str | None:
    g = grammar_for(suffix)
    if g is not None:
        return g.language
    return PLAIN_SOURCE_LANGUAGES.get(suffix.lower())
