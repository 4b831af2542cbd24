"""CSS animation subset: tokenizer-free recursive scanner, typed AST, and
canonical serializer.

The grammar is deliberately narrow — class/id/type/universal selectors with
descendant combinators, @keyframes, and the animation-oriented property set
the generator actually emits. Anything outside the subset is preserved as a
RawItem so unknown content survives a round trip untouched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ._colors import NAMED_COLORS
from .errors import TypeMismatch, UnknownSelectorPath

# ---------------------------------------------------------------------------
# Typed values
# ---------------------------------------------------------------------------


def _fmt_num(v):
    if isinstance(v, float) and v == int(v) and abs(v) < 1e15:
        return str(int(v))
    out = f"{float(v):.6f}".rstrip("0").rstrip(".")
    return out or "0"


@dataclass(frozen=True)
class TimeValue:
    seconds: float

    def css(self):
        return f"{_fmt_num(self.seconds)}s"


@dataclass(frozen=True)
class NumberValue:
    value: float

    def css(self):
        return _fmt_num(self.value)


@dataclass(frozen=True)
class PercentValue:
    value: float

    def css(self):
        return f"{_fmt_num(self.value)}%"


@dataclass(frozen=True)
class ColorValue:
    r: int
    g: int
    b: int
    a: float = 1.0

    def css(self):
        if self.a >= 1.0:
            return f"#{self.r:02x}{self.g:02x}{self.b:02x}"
        return f"rgba({self.r}, {self.g}, {self.b}, {_fmt_num(self.a)})"


@dataclass(frozen=True)
class KeywordValue:
    name: str

    def css(self):
        return self.name


@dataclass(frozen=True)
class BezierValue:
    x1: float
    y1: float
    x2: float
    y2: float

    def css(self):
        args = ", ".join(_fmt_num(v) for v in (self.x1, self.y1, self.x2, self.y2))
        return f"cubic-bezier({args})"


@dataclass(frozen=True)
class TransformFunc:
    name: str
    args: tuple  # of (number, unit) pairs

    def css(self):
        rendered = ", ".join(f"{_fmt_num(n)}{u}" for n, u in self.args)
        return f"{self.name}({rendered})"


@dataclass(frozen=True)
class TransformListValue:
    functions: tuple

    def css(self):
        return " ".join(f.css() for f in self.functions)


@dataclass(frozen=True)
class IdentifierListValue:
    names: tuple

    def css(self):
        return ", ".join(self.names)


@dataclass(frozen=True)
class ListValue:
    items: tuple

    def css(self):
        return ", ".join(item.css() for item in self.items)


@dataclass(frozen=True)
class RawValue:
    text: str

    def css(self):
        return self.text


# ---------------------------------------------------------------------------
# Value parsing
# ---------------------------------------------------------------------------

_TIME_RE = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+))(s|ms)$")
_NUMBER_RE = re.compile(r"^[-+]?(?:\d+\.?\d*|\.\d+)$")
_PERCENT_RE = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+))%$")
_KEYWORD_RE = re.compile(r"^-?[a-zA-Z][a-zA-Z-]*$")
_HEX_RE = re.compile(r"^#([0-9a-fA-F]{3,8})$")
_FUNC_RE = re.compile(r"^([a-zA-Z-]+)\((.*)\)$", re.S)
_FUNC_ARG_RE = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+))([a-z%]*)$")

TIMING_PRESETS = {
    "linear": (0.0, 0.0, 1.0, 1.0),
    "ease": (0.25, 0.1, 0.25, 1.0),
    "ease-in": (0.42, 0.0, 1.0, 1.0),
    "ease-out": (0.0, 0.0, 0.58, 1.0),
    "ease-in-out": (0.42, 0.0, 0.58, 1.0),
}

TIME_PROPERTIES = {"animation-duration", "animation-delay"}
NUMBER_PROPERTIES = {"opacity"}
COLOR_PROPERTIES = {"fill", "stroke", "color", "background-color", "stop-color"}
KEYWORD_PROPERTIES = {
    "visibility", "animation-direction", "animation-play-state",
    "animation-fill-mode", "transform-box", "display", "transform-origin",
}
TIMING_PROPERTIES = {"animation-timing-function"}
IDENTIFIER_LIST_PROPERTIES = {"animation-name", "font-family"}
FUNCTION_LIST_PROPERTIES = {"transform", "filter"}
COUNT_PROPERTIES = {"animation-iteration-count"}

# The property set the generator is known to emit (used for typed-coverage
# guarantees and the property-sheet widget mapping).
KNOWN_PROPERTIES = (
    TIME_PROPERTIES | NUMBER_PROPERTIES | COLOR_PROPERTIES | KEYWORD_PROPERTIES
    | TIMING_PROPERTIES | IDENTIFIER_LIST_PROPERTIES | FUNCTION_LIST_PROPERTIES
    | COUNT_PROPERTIES
)


def _split_top_level(text, sep):
    """Split on sep outside parentheses and quotes."""
    parts = []
    depth = 0
    quote = None
    start = 0
    for i, ch in enumerate(text):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        elif ch == sep and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def _parse_time(text):
    m = _TIME_RE.match(text)
    if not m:
        return None
    value = float(m.group(1))
    if value < 0:
        return None
    return TimeValue(value if m.group(2) == "s" else value / 1000.0)


def _parse_color(text):
    m = _HEX_RE.match(text)
    if m:
        digits = m.group(1)
        if len(digits) == 3:
            digits = "".join(ch * 2 for ch in digits)
        if len(digits) == 4:
            digits = "".join(ch * 2 for ch in digits)
        if len(digits) == 6:
            digits += "ff"
        if len(digits) != 8:
            return None
        r, g, b, a = (int(digits[i:i + 2], 16) for i in (0, 2, 4, 6))
        return ColorValue(r, g, b, round(a / 255.0, 4))
    fn = _FUNC_RE.match(text)
    if fn and fn.group(1) in ("rgb", "rgba"):
        args = [a.strip() for a in re.split(r"[,/\s]+", fn.group(2).strip()) if a.strip()]
        if len(args) not in (3, 4):
            return None
        try:
            channels = [int(round(float(a.rstrip("%")) * (2.55 if a.endswith("%") else 1))) for a in args[:3]]
            alpha = float(args[3]) if len(args) == 4 else 1.0
        except ValueError:
            return None
        r, g, b = (max(0, min(255, c)) for c in channels)
        return ColorValue(r, g, b, alpha)
    named = NAMED_COLORS.get(text.lower())
    if named:
        return ColorValue(*named)
    return None


def _parse_bezier(text):
    fn = _FUNC_RE.match(text)
    if not fn or fn.group(1) != "cubic-bezier":
        return None
    try:
        nums = [float(a.strip()) for a in fn.group(2).split(",")]
    except ValueError:
        return None
    if len(nums) != 4 or not (0 <= nums[0] <= 1 and 0 <= nums[2] <= 1):
        return None
    return BezierValue(*nums)


def _parse_function_list(text):
    funcs = []
    rest = text.strip()
    pattern = re.compile(r"([a-zA-Z-]+)\(([^()]*)\)\s*")
    pos = 0
    while pos < len(rest):
        m = pattern.match(rest, pos)
        if not m:
            return None
        args = []
        arg_text = m.group(2).strip()
        if arg_text:
            for piece in re.split(r"[,\s]+", arg_text):
                am = _FUNC_ARG_RE.match(piece)
                if not am:
                    return None
                args.append((float(am.group(1)), am.group(2)))
        funcs.append(TransformFunc(m.group(1), tuple(args)))
        pos = m.end()
    if not funcs:
        return None
    return TransformListValue(tuple(funcs))


def parse_value(prop, raw):
    """Best-effort typed parse; falls back to RawValue passthrough."""
    text = raw.strip()
    prop = prop.lower()
    items = [p.strip() for p in _split_top_level(text, ",")]

    if prop in IDENTIFIER_LIST_PROPERTIES:
        if all(_KEYWORD_RE.match(i) or (i and i[0] in "'\"") for i in items):
            return IdentifierListValue(tuple(items))
        return RawValue(text)

    if prop in TIME_PROPERTIES:
        parsed = [_parse_time(i) for i in items]
        if all(parsed):
            return parsed[0] if len(parsed) == 1 else ListValue(tuple(parsed))
        return RawValue(text)

    if prop in COUNT_PROPERTIES:
        out = []
        for item in items:
            if item == "infinite":
                out.append(KeywordValue("infinite"))
            elif _NUMBER_RE.match(item):
                out.append(NumberValue(float(item)))
            else:
                return RawValue(text)
        return out[0] if len(out) == 1 else ListValue(tuple(out))

    if len(items) > 1:
        return RawValue(text)

    if prop in NUMBER_PROPERTIES:
        if _NUMBER_RE.match(text):
            return NumberValue(float(text))
        if _PERCENT_RE.match(text):
            return PercentValue(float(text[:-1]))
        return RawValue(text)

    if prop in COLOR_PROPERTIES:
        color = _parse_color(text)
        if color:
            return color
        if _KEYWORD_RE.match(text):
            return KeywordValue(text)
        return RawValue(text)

    if prop in TIMING_PROPERTIES:
        if text in TIMING_PRESETS:
            return KeywordValue(text)
        bez = _parse_bezier(text)
        if bez:
            return bez
        return RawValue(text)

    if prop in KEYWORD_PROPERTIES:
        if _KEYWORD_RE.match(text):
            return KeywordValue(text)
        return RawValue(text)

    if prop in FUNCTION_LIST_PROPERTIES:
        fl = _parse_function_list(text)
        if fl:
            return fl
        return RawValue(text)

    return RawValue(text)


def validate_value(prop, value):
    """Raise TypeMismatch when a typed value is incompatible with a property."""
    prop = prop.lower()

    def fail(expected):
        raise TypeMismatch(f"{prop}: expected {expected}, got {type(value).__name__}")

    if prop in TIME_PROPERTIES:
        items = value.items if isinstance(value, ListValue) else (value,)
        for item in items:
            if not isinstance(item, TimeValue):
                fail("time")
            if item.seconds < 0:
                raise TypeMismatch(f"{prop}: negative duration {item.seconds}s")
    elif prop in NUMBER_PROPERTIES:
        if not isinstance(value, (NumberValue, PercentValue)):
            fail("number")
    elif prop in COLOR_PROPERTIES:
        if not isinstance(value, (ColorValue, KeywordValue)):
            fail("color")
    elif prop in TIMING_PROPERTIES:
        if isinstance(value, KeywordValue):
            if value.name not in TIMING_PRESETS:
                fail("timing preset or cubic-bezier")
        elif not isinstance(value, BezierValue):
            fail("timing preset or cubic-bezier")
    elif prop in COUNT_PROPERTIES:
        if isinstance(value, KeywordValue):
            if value.name != "infinite":
                fail("number or 'infinite'")
        elif not isinstance(value, NumberValue):
            fail("number or 'infinite'")
    elif prop in KEYWORD_PROPERTIES:
        if not isinstance(value, (KeywordValue, RawValue)):
            fail("keyword")
    elif prop in FUNCTION_LIST_PROPERTIES:
        if not isinstance(value, (TransformListValue, KeywordValue)):
            fail("function list")
    elif prop in IDENTIFIER_LIST_PROPERTIES:
        if not isinstance(value, (IdentifierListValue, KeywordValue)):
            fail("identifier list")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SelectorPart:
    kind: str  # class | id | type | universal
    name: str = None

    def css(self):
        if self.kind == "class":
            return f".{self.name}"
        if self.kind == "id":
            return f"#{self.name}"
        if self.kind == "universal":
            return "*"
        return self.name


_DESIGN_CLASS_RE = re.compile(r"^design-(\d+)$")


@dataclass(frozen=True)
class SelectorChain:
    parts: tuple

    def css(self):
        return " ".join(p.css() for p in self.parts)

    def scope_index(self):
        if self.parts and self.parts[0].kind == "class":
            m = _DESIGN_CLASS_RE.match(self.parts[0].name)
            if m:
                return int(m.group(1))
        return None


@dataclass(frozen=True)
class Declaration:
    property: str
    value: object
    # Original value text; kept for display, ignored in structural equality.
    raw: str = field(compare=False)


@dataclass
class StyleRule:
    selectors: list
    declarations: list
    span: tuple = field(default=(0, 0), compare=False)


@dataclass
class Keyframe:
    offsets: list  # percentages 0..100
    declarations: list


@dataclass
class KeyframesRule:
    name: str
    frames: list
    selector_prefix: str = None  # illegal ".design-n" prefix, kept for lint/fix
    span: tuple = field(default=(0, 0), compare=False)


@dataclass
class RawItem:
    text: str
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Diagnostic:
    offset: int
    message: str

    def to_json(self):
        return {"offset": self.offset, "message": self.message}


@dataclass
class Stylesheet:
    items: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list, compare=False)

    def style_rules(self):
        return [i for i in self.items if isinstance(i, StyleRule)]

    def keyframes_rules(self):
        return [i for i in self.items if isinstance(i, KeyframesRule)]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_COMMENT_RE = re.compile(r"/\*.*?\*/", re.S)


def _strip_comments(text):
    """Blank out comments in place so byte offsets stay aligned."""
    return _COMMENT_RE.sub(lambda m: " " * len(m.group()), text)


def parse_css(text: str) -> Stylesheet:
    """Parse CSS with best-effort recovery: a construct outside the subset
    becomes a RawItem plus a diagnostic; content never raises."""
    sheet = Stylesheet()
    stripped = _strip_comments(text)
    pos = 0
    n = len(text)
    while pos < n:
        while pos < n and stripped[pos].isspace():
            pos += 1
        if pos >= n:
            break
        start = pos
        brace = stripped.find("{", pos)
        if brace < 0:
            sheet.items.append(RawItem(text[pos:].strip(), span=(pos, n)))
            sheet.diagnostics.append(Diagnostic(pos, "content without a block"))
            break
        prelude = text[pos:brace].strip()
        end = _match_brace(stripped, brace)
        if end < 0:
            sheet.items.append(RawItem(text[pos:].strip(), span=(pos, n)))
            sheet.diagnostics.append(Diagnostic(brace, "unbalanced braces"))
            break
        body = text[brace + 1:end]
        raw_text = text[start:end + 1].strip()
        item = _parse_item(prelude, body, stripped[brace + 1:end], (start, end + 1))
        if item is None:
            sheet.items.append(RawItem(raw_text, span=(start, end + 1)))
            sheet.diagnostics.append(Diagnostic(start, f"unparseable rule: {prelude[:60]!r}"))
        else:
            sheet.items.append(item)
        pos = end + 1
    return sheet


def _match_brace(text, open_pos):
    depth = 0
    for i in range(open_pos, len(text)):
        if text[i] == "{":
            depth += 1
        elif text[i] == "}":
            depth -= 1
            if depth == 0:
                return i
    return -1


def _parse_item(prelude, body, stripped_body, span):
    kf_at = prelude.find("@keyframes")
    if kf_at >= 0:
        prefix = prelude[:kf_at].strip() or None
        name = prelude[kf_at + len("@keyframes"):].strip()
        if not name or not re.match(r"^-?[\w-]+$", name):
            return None
        frames = _parse_frames(body, stripped_body)
        if frames is None:
            return None
        return KeyframesRule(name=name, frames=frames, selector_prefix=prefix, span=span)
    if prelude.startswith("@"):
        return None
    selectors = _parse_selector_list(prelude)
    if not selectors:
        return None
    decls = _parse_declarations(body, stripped_body)
    if decls is None:
        return None
    return StyleRule(selectors=selectors, declarations=decls, span=span)


def _parse_frames(body, stripped_body):
    frames = []
    pos = 0
    n = len(body)
    while pos < n:
        while pos < n and stripped_body[pos].isspace():
            pos += 1
        if pos >= n:
            break
        brace = stripped_body.find("{", pos)
        if brace < 0:
            return None
        end = _match_brace(stripped_body, brace)
        if end < 0:
            return None
        offsets = _parse_offsets(body[pos:brace])
        if offsets is None:
            return None
        decls = _parse_declarations(body[brace + 1:end], stripped_body[brace + 1:end])
        if decls is None:
            return None
        frames.append(Keyframe(offsets=offsets, declarations=decls))
        pos = end + 1
    return frames


def _parse_offsets(text):
    offsets = []
    for piece in text.split(","):
        piece = piece.strip()
        if piece == "from":
            offsets.append(0.0)
        elif piece == "to":
            offsets.append(100.0)
        elif piece.endswith("%"):
            try:
                value = float(piece[:-1])
            except ValueError:
                return None
            if not 0 <= value <= 100:
                return None
            offsets.append(value)
        else:
            return None
    return offsets or None


_SELECTOR_PART_RE = re.compile(r"^(?:\*|[.#]?-?[a-zA-Z_][\w-]*)$")


def _parse_selector_list(prelude):
    chains = []
    for chain_text in _split_top_level(prelude, ","):
        chain_text = chain_text.strip()
        if not chain_text:
            return None
        parts = []
        for token in chain_text.split():
            if not _SELECTOR_PART_RE.match(token):
                return None
            if token == "*":
                parts.append(SelectorPart("universal"))
            elif token.startswith("."):
                parts.append(SelectorPart("class", token[1:]))
            elif token.startswith("#"):
                parts.append(SelectorPart("id", token[1:]))
            else:
                parts.append(SelectorPart("type", token))
        chains.append(SelectorChain(tuple(parts)))
    return chains


def _parse_declarations(body, stripped_body):
    decls = []
    for chunk in _split_top_level(stripped_body, ";"):
        # Use stripped text for structure but original offsets for content.
        piece = chunk.strip()
        if not piece:
            continue
        colon = piece.find(":")
        if colon <= 0:
            return None
        prop = piece[:colon].strip()
        raw_value = piece[colon + 1:].strip()
        if not raw_value:
            return None
        if prop.startswith("--"):
            decls.append(Declaration(prop, RawValue(raw_value), raw_value))
            continue
        if not re.match(r"^-?[a-zA-Z][\w-]*$", prop):
            return None
        prop = prop.lower()
        decls.append(Declaration(prop, parse_value(prop, raw_value), raw_value))
    return decls


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def serialize_css(sheet: Stylesheet) -> str:
    """Canonical formatting: one declaration per line, lowercase properties,
    normalized typed values; RawItems verbatim."""
    blocks = []
    for item in sheet.items:
        if isinstance(item, StyleRule):
            blocks.append(_serialize_style_rule(item))
        elif isinstance(item, KeyframesRule):
            blocks.append(_serialize_keyframes(item))
        else:
            blocks.append(item.text)
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def _serialize_decl(decl, indent):
    return f"{indent}{decl.property}: {decl.value.css()};"


def _serialize_style_rule(rule):
    header = ", ".join(c.css() for c in rule.selectors)
    lines = [f"{header} {{"]
    lines += [_serialize_decl(d, "  ") for d in rule.declarations]
    lines.append("}")
    return "\n".join(lines)


def _serialize_keyframes(rule):
    prefix = f"{rule.selector_prefix} " if rule.selector_prefix else ""
    lines = [f"{prefix}@keyframes {rule.name} {{"]
    for frame in rule.frames:
        header = ", ".join(f"{_fmt_num(o)}%" for o in frame.offsets)
        lines.append(f"  {header} {{")
        lines += [_serialize_decl(d, "    ") for d in frame.declarations]
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Queries and edits
# ---------------------------------------------------------------------------


def scope_indices(sheet: Stylesheet) -> set:
    found = set()
    for rule in sheet.style_rules():
        for chain in rule.selectors:
            idx = chain.scope_index()
            if idx is not None:
                found.add(idx)
    return found


def copy_sheet(sheet: Stylesheet) -> Stylesheet:
    items = []
    for item in sheet.items:
        if isinstance(item, StyleRule):
            items.append(StyleRule(list(item.selectors), list(item.declarations), item.span))
        elif isinstance(item, KeyframesRule):
            frames = [Keyframe(list(f.offsets), list(f.declarations)) for f in item.frames]
            items.append(KeyframesRule(item.name, frames, item.selector_prefix, item.span))
        else:
            items.append(RawItem(item.text, item.span))
    return Stylesheet(items=items, diagnostics=list(sheet.diagnostics))


def _normalize_path(selector_path):
    chains = _parse_selector_list(selector_path)
    if not chains or len(chains) != 1:
        raise UnknownSelectorPath(f"cannot parse selector path {selector_path!r}")
    return chains[0].css()


def get_declaration(sheet: Stylesheet, selector_path: str, prop: str):
    """Last-wins read of a property under the given selector chain."""
    target = _normalize_path(selector_path)
    prop = prop.lower()
    result = None
    found_rule = False
    for rule in sheet.style_rules():
        if any(c.css() == target for c in rule.selectors):
            found_rule = True
            for decl in rule.declarations:
                if decl.property == prop:
                    result = decl.value
    if not found_rule:
        raise UnknownSelectorPath(f"no rule matches {selector_path!r}")
    return result


def set_declaration(sheet: Stylesheet, selector_path: str, prop: str, value) -> Stylesheet:
    """Return a new sheet with the targeted declaration replaced (last
    occurrence wins) or inserted into the last matching rule."""
    target = _normalize_path(selector_path)
    prop = prop.lower()
    validate_value(prop, value)
    new_sheet = copy_sheet(sheet)
    matching = [
        r for r in new_sheet.style_rules() if any(c.css() == target for c in r.selectors)
    ]
    if not matching:
        raise UnknownSelectorPath(f"no rule matches {selector_path!r}")
    new_decl = Declaration(prop, value, value.css())
    for rule in reversed(matching):
        for i in range(len(rule.declarations) - 1, -1, -1):
            if rule.declarations[i].property == prop:
                rule.declarations[i] = new_decl
                return new_sheet
    matching[-1].declarations.append(new_decl)
    return new_sheet
