"""SVG parsing, preprocessing, and serialization.

The pipeline feeds SVG source to an LLM, so the goals here are: a faithful
element tree with stable identifiers, baking inline transforms into geometry
(so generated CSS transforms don't fight with ones already in the markup),
stripping editor metadata, and emitting compact text with ids first on each
element for easy scanning.
"""

from __future__ import annotations

import math
import re
import xml.parsers.expat
from dataclasses import dataclass, field

from .errors import MalformedXml, NotAnSvg

# ---------------------------------------------------------------------------
# Affine transforms
# ---------------------------------------------------------------------------

_EPS = 1e-9


@dataclass(frozen=True)
class AffineTransform:
    """2x3 affine matrix (column-vector convention):

        | a  c  e |
        | b  d  f |
    """

    a: float = 1.0
    b: float = 0.0
    c: float = 0.0
    d: float = 1.0
    e: float = 0.0
    f: float = 0.0

    def apply(self, x, y):
        return (self.a * x + self.c * y + self.e, self.b * x + self.d * y + self.f)

    def compose(self, other: "AffineTransform") -> "AffineTransform":
        """self ∘ other (other applied first)."""
        return AffineTransform(
            self.a * other.a + self.c * other.b,
            self.b * other.a + self.d * other.b,
            self.a * other.c + self.c * other.d,
            self.b * other.c + self.d * other.d,
            self.a * other.e + self.c * other.f + self.e,
            self.b * other.e + self.d * other.f + self.f,
        )

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def is_identity(self, tol=_EPS):
        return (
            abs(self.a - 1) < tol and abs(self.b) < tol and abs(self.c) < tol
            and abs(self.d - 1) < tol and abs(self.e) < tol and abs(self.f) < tol
        )

    def is_axis_preserving(self, tol=_EPS):
        """No rotation or shear: maps axis-aligned boxes to axis-aligned boxes."""
        return abs(self.b) < tol and abs(self.c) < tol

    def is_conformal(self, tol=_EPS):
        """Uniform scaling + rotation (circles map to circles)."""
        col_norm_diff = (self.a * self.a + self.b * self.b) - (self.c * self.c + self.d * self.d)
        dot = self.a * self.c + self.b * self.d
        return abs(col_norm_diff) < tol and abs(dot) < tol

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def translate(cls, tx, ty=0.0):
        return cls(1, 0, 0, 1, tx, ty)

    @classmethod
    def scale(cls, sx, sy=None):
        if sy is None:
            sy = sx
        return cls(sx, 0, 0, sy, 0, 0)

    @classmethod
    def rotate(cls, degrees, cx=0.0, cy=0.0):
        rad = math.radians(degrees)
        cos, sin = math.cos(rad), math.sin(rad)
        m = cls(cos, sin, -sin, cos, 0, 0)
        if cx or cy:
            return cls.translate(cx, cy).compose(m).compose(cls.translate(-cx, -cy))
        return m

    def to_svg(self):
        nums = ",".join(_fmt(v) for v in (self.a, self.b, self.c, self.d, self.e, self.f))
        return f"matrix({nums})"


_NUM_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")
_TRANSFORM_FN_RE = re.compile(r"([a-zA-Z]+)\s*\(([^)]*)\)")


def parse_transform(text):
    """Parse a `transform` attribute into (matrix, supported).

    skewX/skewY (and anything unrecognized) mark the transform unsupported for
    baking; the composed matrix is still returned so callers can preserve it.
    """
    matrix = AffineTransform.identity()
    supported = True
    for name, args in _TRANSFORM_FN_RE.findall(text or ""):
        nums = [float(n) for n in _NUM_RE.findall(args)]
        name = name.lower()
        if name == "translate" and 1 <= len(nums) <= 2:
            m = AffineTransform.translate(*nums)
        elif name == "scale" and 1 <= len(nums) <= 2:
            m = AffineTransform.scale(*nums)
        elif name == "rotate" and len(nums) in (1, 3):
            m = AffineTransform.rotate(*nums)
        elif name == "matrix" and len(nums) == 6:
            m = AffineTransform(*nums)
        elif name == "skewx" and len(nums) == 1:
            m = AffineTransform(1, 0, math.tan(math.radians(nums[0])), 1, 0, 0)
            supported = False
        elif name == "skewy" and len(nums) == 1:
            m = AffineTransform(1, math.tan(math.radians(nums[0])), 0, 1, 0, 0)
            supported = False
        else:
            supported = False
            continue
        matrix = matrix.compose(m)
    return matrix, supported


def _fmt(v):
    """Compact numeric formatting: drop trailing zeros, keep precision."""
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    out = f"{v:.9f}".rstrip("0").rstrip(".")
    return out if out not in ("", "-") else "0"


# ---------------------------------------------------------------------------
# Document model
# ---------------------------------------------------------------------------

KIND_BY_TAG = {
    "g": "group",
    "svg": "group",
    "path": "path",
    "rect": "rect",
    "circle": "circle",
    "ellipse": "ellipse",
    "line": "line",
    "polygon": "polygon",
    "polyline": "polyline",
    "text": "text",
}

# Tags whose character data is significant (serialized inline, preserved on parse).
TEXT_CONTENT_TAGS = {"text", "tspan", "textPath", "title", "desc", "style", "script"}

EDITOR_PREFIXES = {"sketch", "inkscape", "sodipodi", "figma", "serif", "i"}

METADATA_TAGS = {"metadata", "title", "desc"}


@dataclass
class TextNode:
    text: str


@dataclass
class CommentNode:
    text: str


@dataclass
class PINode:
    target: str
    data: str


@dataclass
class SvgElement:
    tag: str
    attributes: dict = field(default_factory=dict)
    children: list = field(default_factory=list)

    @property
    def local_name(self):
        return self.tag.rsplit(":", 1)[-1]

    @property
    def kind(self):
        return KIND_BY_TAG.get(self.local_name, "other")

    @property
    def id(self):
        return self.attributes.get("id")

    def element_children(self):
        return [c for c in self.children if isinstance(c, SvgElement)]

    def float_attr(self, name, default=0.0):
        raw = self.attributes.get(name)
        if raw is None:
            return default
        m = _NUM_RE.search(raw)
        return float(m.group()) if m else default


@dataclass
class SvgDocument:
    root: SvgElement
    view_box: tuple = (0.0, 0.0, 0.0, 0.0)
    source_text: str = field(default="", compare=False)
    doctype: str = field(default=None, compare=False)
    warnings: list = field(default_factory=list, compare=False)


@dataclass(frozen=True)
class IndexEntry:
    id: str
    kind: str
    depth: int
    parent_id: str


@dataclass
class ElementIndex:
    entries: list = field(default_factory=list)
    class_names: set = field(default_factory=set)

    def ids(self):
        return [e.id for e in self.entries]

    def to_json(self):
        return [
            {"id": e.id, "kind": e.kind, "depth": e.depth, "parent_id": e.parent_id}
            for e in self.entries
        ]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def parse_svg(text: str) -> SvgDocument:
    """Parse SVG text into a document tree.

    Raises MalformedXml (with byte offset) on broken XML and NotAnSvg when the
    root element is anything other than <svg>.
    """
    parser = xml.parsers.expat.ParserCreate(namespace_separator=None)
    parser.ordered_attributes = True

    root_holder = []
    stack = []
    doctype_holder = []

    def start(name, attr_list):
        attrs = {attr_list[i]: attr_list[i + 1] for i in range(0, len(attr_list), 2)}
        el = SvgElement(tag=name, attributes=attrs)
        if stack:
            stack[-1].children.append(el)
        else:
            root_holder.append(el)
        stack.append(el)

    def end(name):
        stack.pop()

    def chars(data):
        if not stack:
            return
        parent = stack[-1]
        if not data.strip() and parent.local_name not in TEXT_CONTENT_TAGS:
            return
        if parent.children and isinstance(parent.children[-1], TextNode):
            parent.children[-1].text += data
        else:
            parent.children.append(TextNode(data))

    def comment(data):
        target = stack[-1].children if stack else None
        if target is not None:
            target.append(CommentNode(data))

    def pi(target, data):
        if stack:
            stack[-1].children.append(PINode(target, data))

    def doctype_start(name, sysid, pubid, has_internal):
        parts = ["<!DOCTYPE", name]
        if pubid:
            parts += ["PUBLIC", f'"{pubid}"', f'"{sysid}"']
        elif sysid:
            parts += ["SYSTEM", f'"{sysid}"']
        doctype_holder.append(" ".join(parts) + ">")

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    parser.CommentHandler = comment
    parser.ProcessingInstructionHandler = pi
    parser.StartDoctypeDeclHandler = doctype_start

    try:
        parser.Parse(text, True)
    except xml.parsers.expat.ExpatError as exc:
        raise MalformedXml(
            xml.parsers.expat.errors.messages[exc.code], parser.ErrorByteIndex
        ) from exc

    if not root_holder:
        raise MalformedXml("no root element", 0)
    root = root_holder[0]
    if root.local_name != "svg":
        raise NotAnSvg(f"root element is <{root.tag}>, expected <svg>")

    doc = SvgDocument(
        root=root,
        view_box=_parse_view_box(root.attributes.get("viewBox")),
        source_text=text,
        doctype=doctype_holder[0] if doctype_holder else None,
    )
    _dedupe_ids(doc)
    return doc


def _parse_view_box(raw):
    if not raw:
        return (0.0, 0.0, 0.0, 0.0)
    nums = [float(n) for n in _NUM_RE.findall(raw)]
    return tuple(nums) if len(nums) == 4 else (0.0, 0.0, 0.0, 0.0)


def _dedupe_ids(doc):
    """Ids drive prompting; collisions are surfaced as warnings, never fatal."""
    seen = {}

    def walk(el):
        eid = el.id
        if eid is not None:
            if eid in seen:
                seen[eid] += 1
                new_id = f"{eid}-dup-{seen[eid]}"
                el.attributes["id"] = new_id
                doc.warnings.append(f'duplicate id "{eid}" renamed to "{new_id}"')
            else:
                seen[eid] = 0
        for child in el.element_children():
            walk(child)

    walk(doc.root)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _escape_text(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _escape_attr(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace('"', "&quot;")


def serialize(doc: SvgDocument, id_first: bool = False) -> str:
    """Serialize to SVG text; id_first moves the id attribute to the front of
    every element so identifiers are visible without horizontal scrolling."""
    out = []
    if doc.doctype:
        out.append(doc.doctype + "\n")
    _serialize_node(doc.root, out, 0, id_first)
    return "".join(out)


def _attr_items(el, id_first):
    items = list(el.attributes.items())
    if id_first and "id" in el.attributes:
        items.sort(key=lambda kv: 0 if kv[0] == "id" else 1)
    return items


def _serialize_node(node, out, depth, id_first, inline=False):
    pad = "" if inline else "  " * depth
    if isinstance(node, TextNode):
        out.append(_escape_text(node.text) if inline else pad + _escape_text(node.text) + "\n")
        return
    if isinstance(node, CommentNode):
        out.append(f"{pad}<!--{node.text}-->" + ("" if inline else "\n"))
        return
    if isinstance(node, PINode):
        out.append(f"{pad}<?{node.target} {node.data}?>" + ("" if inline else "\n"))
        return

    attrs = "".join(f' {k}="{_escape_attr(v)}"' for k, v in _attr_items(node, id_first))
    if not node.children:
        out.append(f"{pad}<{node.tag}{attrs}/>" + ("" if inline else "\n"))
        return

    # Text-bearing elements keep their content inline so whitespace stays stable.
    children_inline = inline or node.local_name in TEXT_CONTENT_TAGS
    out.append(f"{pad}<{node.tag}{attrs}>")
    if not children_inline:
        out.append("\n")
    for child in node.children:
        _serialize_node(child, out, depth + 1, id_first, inline=children_inline)
    if not children_inline:
        out.append(pad)
    out.append(f"</{node.tag}>" + ("" if inline else "\n"))


# ---------------------------------------------------------------------------
# Path data
# ---------------------------------------------------------------------------

_CMD_ARG_COUNT = {
    "M": 2, "L": 2, "H": 1, "V": 1, "C": 6, "S": 4, "Q": 4, "T": 2, "A": 7, "Z": 0,
}


class PathSyntaxError(ValueError):
    pass


def parse_path_data(d):
    """Parse path data into absolute segments.

    Relative commands are normalized to absolute; H/V become L; S/T are
    expanded to C/Q (reflected control points). Arc flags tolerate the
    compact unseparated form.
    """
    tokens = _tokenize_path(d)
    segments = []
    pos = 0
    cur = (0.0, 0.0)
    start = (0.0, 0.0)
    prev_cubic_ctrl = None
    prev_quad_ctrl = None

    def take_numbers(n):
        nonlocal pos
        nums = []
        for _ in range(n):
            if pos >= len(tokens) or tokens[pos][0].isalpha():
                raise PathSyntaxError(f"expected number in path data near token {pos}")
            nums.append(float(tokens[pos]))
            pos += 1
        return nums

    def take_flag():
        # Flags may be written without separators ("011.5" = flag 0, then
        # flag 1, then 1.5), so split one leading digit off the token.
        nonlocal pos
        if pos >= len(tokens) or tokens[pos][0] not in "01":
            raise PathSyntaxError("arc flag must be 0 or 1")
        text = tokens[pos]
        if len(text) == 1:
            pos += 1
        else:
            tokens[pos] = text[1:]
        return int(text[0])

    last_cmd = None
    while pos < len(tokens):
        tok = tokens[pos]
        if tok[0].isalpha():
            cmd = tok
            pos += 1
        else:
            if last_cmd is None:
                raise PathSyntaxError("path data must start with a command")
            # Implicit repeat; M repeats as L.
            cmd = last_cmd
            if cmd in ("M", "m"):
                cmd = "L" if cmd == "M" else "l"
        last_cmd = cmd
        rel = cmd.islower()
        ucmd = cmd.upper()
        if ucmd not in _CMD_ARG_COUNT:
            raise PathSyntaxError(f"unknown path command {cmd!r}")

        if ucmd == "Z":
            segments.append(("Z",))
            cur = start
            prev_cubic_ctrl = prev_quad_ctrl = None
            continue

        if ucmd == "A":
            rx, ry, xrot = take_numbers(3)
            laf, sf = take_flag(), take_flag()
            x, y = take_numbers(2)
            if rel:
                x += cur[0]
                y += cur[1]
            segments.append(("A", abs(rx), abs(ry), xrot, int(laf), int(sf), x, y))
            cur = (x, y)
            prev_cubic_ctrl = prev_quad_ctrl = None
            continue

        nums = take_numbers(_CMD_ARG_COUNT[ucmd])
        if ucmd == "H":
            x = nums[0] + (cur[0] if rel else 0.0)
            segments.append(("L", x, cur[1]))
            cur = (x, cur[1])
            prev_cubic_ctrl = prev_quad_ctrl = None
        elif ucmd == "V":
            y = nums[0] + (cur[1] if rel else 0.0)
            segments.append(("L", cur[0], y))
            cur = (cur[0], y)
            prev_cubic_ctrl = prev_quad_ctrl = None
        else:
            if rel:
                nums = [v + cur[i % 2] for i, v in enumerate(nums)]
            if ucmd == "M":
                segments.append(("M", *nums))
                cur = start = (nums[0], nums[1])
                prev_cubic_ctrl = prev_quad_ctrl = None
            elif ucmd == "L":
                segments.append(("L", *nums))
                cur = (nums[0], nums[1])
                prev_cubic_ctrl = prev_quad_ctrl = None
            elif ucmd == "C":
                segments.append(("C", *nums))
                prev_cubic_ctrl = (nums[2], nums[3])
                prev_quad_ctrl = None
                cur = (nums[4], nums[5])
            elif ucmd == "S":
                c1 = (2 * cur[0] - prev_cubic_ctrl[0], 2 * cur[1] - prev_cubic_ctrl[1]) \
                    if prev_cubic_ctrl else cur
                segments.append(("C", c1[0], c1[1], *nums))
                prev_cubic_ctrl = (nums[0], nums[1])
                prev_quad_ctrl = None
                cur = (nums[2], nums[3])
            elif ucmd == "Q":
                segments.append(("Q", *nums))
                prev_quad_ctrl = (nums[0], nums[1])
                prev_cubic_ctrl = None
                cur = (nums[2], nums[3])
            elif ucmd == "T":
                c1 = (2 * cur[0] - prev_quad_ctrl[0], 2 * cur[1] - prev_quad_ctrl[1]) \
                    if prev_quad_ctrl else cur
                segments.append(("Q", c1[0], c1[1], *nums))
                prev_quad_ctrl = c1
                prev_cubic_ctrl = None
                cur = (nums[0], nums[1])
    return segments


def _tokenize_path(d):
    tokens = []
    i = 0
    n = len(d)
    while i < n:
        ch = d[i]
        if ch.isalpha():
            tokens.append(ch)
            i += 1
        elif ch in " ,\t\n\r":
            i += 1
        else:
            m = _NUM_RE.match(d, i)
            if not m:
                raise PathSyntaxError(f"bad character {ch!r} in path data at {i}")
            tokens.append(m.group())
            i = m.end()
    return tokens


def serialize_path_data(segments):
    parts = []
    for seg in segments:
        cmd = seg[0]
        if cmd == "Z":
            parts.append("Z")
        elif cmd == "A":
            rx, ry, xrot, laf, sf, x, y = seg[1:]
            parts.append(
                f"A{_fmt(rx)} {_fmt(ry)} {_fmt(xrot)} {laf} {sf} {_fmt(x)} {_fmt(y)}"
            )
        else:
            parts.append(cmd + " ".join(_fmt(v) for v in seg[1:]))
    return "".join(parts)


def _transform_ellipse_axes(m: AffineTransform, rx, ry, phi_deg):
    """Transform ellipse shape (radii rx, ry rotated by phi) by the linear part
    of m. Returns (rx', ry', phi'_deg) via eigen-decomposition of A·Aᵀ."""
    phi = math.radians(phi_deg)
    cos, sin = math.cos(phi), math.sin(phi)
    # Shape matrix A = L · R(phi) · diag(rx, ry)
    a11 = (m.a * cos + m.c * sin) * rx
    a12 = (-m.a * sin + m.c * cos) * ry
    a21 = (m.b * cos + m.d * sin) * rx
    a22 = (-m.b * sin + m.d * cos) * ry
    b11 = a11 * a11 + a12 * a12
    b12 = a11 * a21 + a12 * a22
    b22 = a21 * a21 + a22 * a22
    tr = b11 + b22
    disc = math.sqrt(max((b11 - b22) ** 2 + 4 * b12 * b12, 0.0))
    l1 = (tr + disc) / 2
    l2 = (tr - disc) / 2
    new_rx = math.sqrt(max(l1, 0.0))
    new_ry = math.sqrt(max(l2, 0.0))
    if abs(b12) < _EPS and b11 >= b22:
        new_phi = 0.0
    elif abs(b12) < _EPS:
        new_phi = 90.0
    else:
        new_phi = math.degrees(math.atan2(l1 - b11, b12))
    return new_rx, new_ry, new_phi


def transform_path_segments(segments, m: AffineTransform):
    out = []
    for seg in segments:
        cmd = seg[0]
        if cmd == "Z":
            out.append(seg)
        elif cmd == "A":
            rx, ry, xrot, laf, sf, x, y = seg[1:]
            if rx < _EPS or ry < _EPS:
                # Degenerate arc renders as a straight line.
                out.append(("L", *m.apply(x, y)))
                continue
            nrx, nry, nphi = _transform_ellipse_axes(m, rx, ry, xrot)
            nsf = sf if m.det >= 0 else 1 - sf
            out.append(("A", nrx, nry, nphi, laf, nsf, *m.apply(x, y)))
        else:
            coords = seg[1:]
            new = []
            for i in range(0, len(coords), 2):
                new.extend(m.apply(coords[i], coords[i + 1]))
            out.append((cmd, *new))
    return out


# ---------------------------------------------------------------------------
# Transform baking
# ---------------------------------------------------------------------------

_BAKEABLE_KINDS = {"path", "rect", "circle", "ellipse", "line", "polygon", "polyline"}


def bake_transforms(doc: SvgDocument) -> SvgDocument:
    """Compose transforms down the tree and apply them to geometry.

    Supported transform kinds (translate/scale/rotate/matrix) on supported
    geometry are fully baked and the transform attributes removed. Anything
    else (skews, transforms over text, unparseable geometry) is preserved as a
    composed transform attribute on that element and reported via warnings.
    """
    new_doc = _copy_document(doc)
    warnings = list(doc.warnings)
    _bake_element(new_doc.root, AffineTransform.identity(), warnings)
    new_doc.warnings = warnings
    return new_doc


def _copy_document(doc):
    return SvgDocument(
        root=_copy_node(doc.root),
        view_box=doc.view_box,
        source_text=doc.source_text,
        doctype=doc.doctype,
        warnings=list(doc.warnings),
    )


def _copy_node(node):
    if isinstance(node, SvgElement):
        return SvgElement(
            tag=node.tag,
            attributes=dict(node.attributes),
            children=[_copy_node(c) for c in node.children],
        )
    if isinstance(node, TextNode):
        return TextNode(node.text)
    if isinstance(node, CommentNode):
        return CommentNode(node.text)
    return PINode(node.target, node.data)


def _preserve(el, ctm, warnings, reason):
    el.attributes.pop("transform", None)
    if not ctm.is_identity():
        el.attributes["transform"] = ctm.to_svg()
        warnings.append(f"transform preserved on <{el.tag}>{_id_suffix(el)}: {reason}")


def _id_suffix(el):
    return f' id="{el.id}"' if el.id else ""


def _bake_element(el, ctm, warnings):
    own_raw = el.attributes.get("transform")
    own, supported = parse_transform(own_raw) if own_raw else (AffineTransform.identity(), True)
    net = ctm.compose(own)

    if not supported:
        _preserve(el, net, warnings, "unsupported transform kind")
        return
    kind = el.kind
    if kind == "group":
        el.attributes.pop("transform", None)
        for child in el.element_children():
            _bake_element(child, net, warnings)
        return
    if kind == "text":
        _preserve(el, net, warnings, "text geometry is not baked")
        return
    if kind not in _BAKEABLE_KINDS:
        _preserve(el, net, warnings, "unsupported element kind")
        # Children (e.g. inside <defs>) keep relative coordinates.
        return

    if net.is_identity():
        el.attributes.pop("transform", None)
        return
    try:
        _apply_to_geometry(el, net, warnings)
        el.attributes.pop("transform", None)
    except (ValueError, KeyError, PathSyntaxError) as exc:
        _preserve(el, net, warnings, f"geometry not parseable ({exc})")


def _apply_to_geometry(el, m, warnings):
    kind = el.kind
    if kind == "rect":
        _bake_rect(el, m)
    elif kind == "circle":
        _bake_circle(el, m)
    elif kind == "ellipse":
        _bake_ellipse(el, m)
    elif kind == "line":
        x1, y1 = m.apply(el.float_attr("x1"), el.float_attr("y1"))
        x2, y2 = m.apply(el.float_attr("x2"), el.float_attr("y2"))
        el.attributes.update(x1=_fmt(x1), y1=_fmt(y1), x2=_fmt(x2), y2=_fmt(y2))
    elif kind in ("polygon", "polyline"):
        nums = [float(n) for n in _NUM_RE.findall(el.attributes.get("points", ""))]
        if len(nums) % 2:
            raise ValueError("odd point count")
        pts = []
        for i in range(0, len(nums), 2):
            pts.append(m.apply(nums[i], nums[i + 1]))
        el.attributes["points"] = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
    elif kind == "path":
        segments = parse_path_data(el.attributes.get("d", ""))
        el.attributes["d"] = serialize_path_data(transform_path_segments(segments, m))


def _bake_rect(el, m):
    x, y = el.float_attr("x"), el.float_attr("y")
    w, h = el.float_attr("width"), el.float_attr("height")
    if m.is_axis_preserving():
        (nx1, ny1), (nx2, ny2) = m.apply(x, y), m.apply(x + w, y + h)
        el.attributes["x"] = _fmt(min(nx1, nx2))
        el.attributes["y"] = _fmt(min(ny1, ny2))
        el.attributes["width"] = _fmt(abs(nx2 - nx1))
        el.attributes["height"] = _fmt(abs(ny2 - ny1))
        for radius, scale in (("rx", abs(m.a)), ("ry", abs(m.d))):
            if radius in el.attributes:
                el.attributes[radius] = _fmt(el.float_attr(radius) * scale)
        return
    if "rx" in el.attributes or "ry" in el.attributes:
        raise ValueError("rotated rounded rect")
    # Rotated/sheared rect becomes a path through its four corners.
    corners = [m.apply(*p) for p in ((x, y), (x + w, y), (x + w, y + h), (x, y + h))]
    d = "M" + "L".join(f"{_fmt(px)} {_fmt(py)}" for px, py in corners) + "Z"
    el.tag = "path"
    new_attrs = {}
    for k, v in el.attributes.items():
        if k in ("x", "y", "width", "height"):
            continue
        new_attrs[k] = v
    new_attrs["d"] = d
    el.attributes = new_attrs


def _bake_circle(el, m):
    cx, cy = m.apply(el.float_attr("cx"), el.float_attr("cy"))
    r = el.float_attr("r")
    if m.is_conformal(tol=1e-9):
        el.attributes.update(cx=_fmt(cx), cy=_fmt(cy), r=_fmt(r * math.hypot(m.a, m.b)))
        return
    _emit_ellipse_or_path(el, m, r, r, cx, cy)


def _bake_ellipse(el, m):
    cx, cy = m.apply(el.float_attr("cx"), el.float_attr("cy"))
    _emit_ellipse_or_path(el, m, el.float_attr("rx"), el.float_attr("ry"), cx, cy)


def _emit_ellipse_or_path(el, m, rx, ry, cx, cy):
    nrx, nry, nphi = _transform_ellipse_axes(m, rx, ry, 0.0)
    phi_mod = abs(math.remainder(nphi, 180.0))
    axis_aligned = phi_mod < 1e-7 or abs(phi_mod - 90.0) < 1e-7
    if abs(phi_mod - 90.0) < 1e-7:
        nrx, nry = nry, nrx
    drop = {"r", "rx", "ry", "cx", "cy"}
    if axis_aligned or abs(nrx - nry) < 1e-9:
        if abs(nrx - nry) < 1e-9:
            nrx = nry = (nrx + nry) / 2
        el.tag = "ellipse"
        new_attrs = {k: v for k, v in el.attributes.items() if k not in drop}
        new_attrs.update(cx=_fmt(cx), cy=_fmt(cy), rx=_fmt(nrx), ry=_fmt(nry))
        el.attributes = new_attrs
        return
    # Tilted ellipse: two arc halves.
    rad = math.radians(nphi)
    ax = nrx * math.cos(rad)
    ay = nrx * math.sin(rad)
    p1 = (cx + ax, cy + ay)
    p2 = (cx - ax, cy - ay)
    sweep = 1 if m.det >= 0 else 0
    d = (
        f"M{_fmt(p1[0])} {_fmt(p1[1])}"
        f"A{_fmt(nrx)} {_fmt(nry)} {_fmt(nphi)} 0 {sweep} {_fmt(p2[0])} {_fmt(p2[1])}"
        f"A{_fmt(nrx)} {_fmt(nry)} {_fmt(nphi)} 0 {sweep} {_fmt(p1[0])} {_fmt(p1[1])}"
        "Z"
    )
    el.tag = "path"
    new_attrs = {k: v for k, v in el.attributes.items() if k not in drop}
    new_attrs["d"] = d
    el.attributes = new_attrs


# ---------------------------------------------------------------------------
# Minification
# ---------------------------------------------------------------------------


def minify(doc: SvgDocument) -> SvgDocument:
    """Drop comments, processing instructions, the doctype, editor-private
    namespaced attributes, metadata elements, and empty groups."""
    new_doc = _copy_document(doc)
    new_doc.doctype = None
    new_doc.root = _minify_element(new_doc.root)
    return new_doc


def _is_editor_attr(name):
    if ":" not in name:
        return False
    prefix, rest = name.split(":", 1)
    if prefix == "xmlns":
        return rest in EDITOR_PREFIXES
    return prefix in EDITOR_PREFIXES


def _minify_element(el):
    el.attributes = {k: v for k, v in el.attributes.items() if not _is_editor_attr(k)}
    kept = []
    for child in el.children:
        if isinstance(child, (CommentNode, PINode)):
            continue
        if isinstance(child, SvgElement):
            if child.local_name in METADATA_TAGS:
                continue
            child = _minify_element(child)
            if child.local_name == "g" and not child.children:
                continue
        kept.append(child)
    el.children = kept
    return el


# ---------------------------------------------------------------------------
# Index + preprocess
# ---------------------------------------------------------------------------


def element_index(doc: SvgDocument) -> ElementIndex:
    """One entry per id-bearing element, in document order."""
    index = ElementIndex()

    def walk(el, depth, parent_id):
        eid = el.id
        if eid is not None:
            index.entries.append(IndexEntry(eid, el.kind, depth, parent_id))
        for cls in el.attributes.get("class", "").split():
            index.class_names.add(cls)
        for child in el.element_children():
            walk(child, depth + 1, eid if eid is not None else parent_id)

    walk(doc.root, 0, None)
    return index


@dataclass
class PreprocessStats:
    line_count: int
    char_count: int
    approx_tokens: int


@dataclass
class PreprocessResult:
    svg: str
    index: ElementIndex
    stats: PreprocessStats
    warnings: list = field(default_factory=list)

    def to_json(self):
        return {
            "svg": self.svg,
            "index": self.index.to_json(),
            "stats": {
                "line_count": self.stats.line_count,
                "char_count": self.stats.char_count,
                "approx_tokens": self.stats.approx_tokens,
            },
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_json(cls, data):
        index = ElementIndex(
            entries=[
                IndexEntry(e["id"], e["kind"], e["depth"], e["parent_id"])
                for e in data["index"]
            ]
        )
        stats = PreprocessStats(**data["stats"])
        return cls(svg=data["svg"], index=index, stats=stats, warnings=list(data.get("warnings", [])))


def preprocess(text: str) -> PreprocessResult:
    """Full pipeline: bake transforms, minify, serialize with ids first.

    Stats are computed on the output text; the token count is the chars/4
    heuristic and deliberately approximate.
    """
    doc = parse_svg(text)
    baked = bake_transforms(doc)
    minified = minify(baked)
    svg_text = serialize(minified, id_first=True)
    index = element_index(minified)
    stats = PreprocessStats(
        line_count=max(1, svg_text.count("\n") + (0 if svg_text.endswith("\n") else 1)),
        char_count=len(svg_text),
        approx_tokens=max(1, math.ceil(len(svg_text) / 4)),
    )
    return PreprocessResult(svg=svg_text, index=index, stats=stats, warnings=list(minified.warnings))
