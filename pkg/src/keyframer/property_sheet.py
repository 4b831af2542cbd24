"""Widget-oriented projection of a stylesheet for GUI editing.

Declarations are grouped by animated target (resolved element id, or the
keyframes rule name) and mapped to widget kinds by property name. Edits flow
back through source pointers into the AST, so the code view and the property
view always describe the same sheet.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .css_core import (
    BezierValue,
    ColorValue,
    IdentifierListValue,
    KeywordValue,
    KeyframesRule,
    ListValue,
    NumberValue,
    PercentValue,
    RawValue,
    StyleRule,
    Stylesheet,
    TIMING_PRESETS,
    TimeValue,
    TransformFunc,
    TransformListValue,
    copy_sheet,
    validate_value,
)
from .errors import StaleSource

KEYWORD_OPTIONS = {
    "visibility": ["visible", "hidden", "collapse"],
    "animation-direction": ["normal", "reverse", "alternate", "alternate-reverse"],
    "animation-play-state": ["running", "paused"],
    "animation-fill-mode": ["none", "forwards", "backwards", "both"],
    "transform-box": ["content-box", "border-box", "fill-box", "stroke-box", "view-box"],
}

_COLOR_PROPS = {"fill", "stroke", "color", "background-color", "stop-color"}


def widget_for(prop):
    """Widget kind is a pure function of the property name."""
    prop = prop.lower()
    if prop in _COLOR_PROPS:
        return "color_picker"
    if prop == "animation-timing-function":
        return "timing_curve"
    if prop == "animation-duration":
        return "duration_seconds"
    if prop == "animation-delay":
        return "delay_seconds"
    if prop == "opacity":
        return "number"
    if prop == "transform":
        return "transform_fields"
    if prop in KEYWORD_OPTIONS:
        return "keyword_choice"
    return "text"


@dataclass(frozen=True)
class EntrySource:
    """Pointer from a sheet entry back into the stylesheet AST."""

    item_index: int
    frame_index: int  # None for style-rule declarations
    decl_index: int
    property: str

    def to_json(self):
        return {
            "item_index": self.item_index,
            "frame_index": self.frame_index,
            "decl_index": self.decl_index,
            "property": self.property,
        }

    @classmethod
    def from_json(cls, data):
        return cls(data["item_index"], data["frame_index"],
                   data["decl_index"], data["property"])


@dataclass
class PropertyEntry:
    property: str
    widget: str
    value: object
    source: EntrySource
    options: list = None  # keyword_choice only
    preset: str = None  # timing_curve: matched preset name, else "custom"

    def to_json(self):
        out = {
            "property": self.property,
            "widget": self.widget,
            "value": value_to_json(self.value),
            "source": self.source.to_json(),
        }
        if self.options is not None:
            out["options"] = self.options
        if self.preset is not None:
            out["preset"] = self.preset
        return out


@dataclass
class PropertyGroup:
    target: str  # selector text or "@keyframes <name>"
    element_id: str  # resolved id, or None
    entries: list = field(default_factory=list)

    def to_json(self):
        return {
            "target": self.target,
            "element_id": self.element_id,
            "entries": [e.to_json() for e in self.entries],
        }


@dataclass
class PropertySheet:
    groups: list = field(default_factory=list)

    def to_json(self):
        return {"groups": [g.to_json() for g in self.groups]}

    def find_entry(self, prop, target=None):
        for group in self.groups:
            if target is not None and group.target != target:
                continue
            for entry in group.entries:
                if entry.property == prop:
                    return entry
        return None


def _timing_preset_name(value):
    if isinstance(value, KeywordValue):
        return value.name
    if isinstance(value, BezierValue):
        pts = (value.x1, value.y1, value.x2, value.y2)
        for name, preset in TIMING_PRESETS.items():
            if all(abs(a - b) < 1e-9 for a, b in zip(pts, preset)):
                return name
        return "custom"
    return "custom"


def derive_sheet(sheet: Stylesheet, index=None) -> PropertySheet:
    """Project every typed declaration into widget entries, one group per
    animated target in order of first appearance."""
    ids = set(index.ids()) if index is not None else set()
    groups = {}
    order = []

    def group_for(key, target, element_id):
        if key not in groups:
            groups[key] = PropertyGroup(target=target, element_id=element_id)
            order.append(key)
        return groups[key]

    for item_idx, item in enumerate(sheet.items):
        if isinstance(item, StyleRule):
            selector = ", ".join(c.css() for c in item.selectors)
            element_id = None
            for chain in item.selectors:
                for part in chain.parts:
                    if part.kind == "id" and (not ids or part.name in ids):
                        element_id = part.name
            key = element_id or selector
            group = group_for(key, selector, element_id)
            for decl_idx, decl in enumerate(item.declarations):
                group.entries.append(_make_entry(
                    decl, EntrySource(item_idx, None, decl_idx, decl.property)))
        elif isinstance(item, KeyframesRule):
            group = group_for(f"@keyframes {item.name}", f"@keyframes {item.name}", None)
            for frame_idx, frame in enumerate(item.frames):
                for decl_idx, decl in enumerate(frame.declarations):
                    group.entries.append(_make_entry(
                        decl, EntrySource(item_idx, frame_idx, decl_idx, decl.property)))
    return PropertySheet(groups=[groups[k] for k in order])


def _make_entry(decl, source):
    widget = widget_for(decl.property)
    entry = PropertyEntry(
        property=decl.property, widget=widget, value=decl.value, source=source)
    if widget == "keyword_choice":
        entry.options = KEYWORD_OPTIONS[decl.property]
    if widget == "timing_curve":
        entry.preset = _timing_preset_name(decl.value)
    return entry


def apply_edit(sheet: Stylesheet, source: EntrySource, new_value) -> Stylesheet:
    """Replace exactly one declaration; returns a new sheet.

    Raises StaleSource when the pointer no longer resolves (the sheet changed
    since derivation) and TypeMismatch for incompatible values.
    """
    from .css_core import Declaration

    if source.item_index >= len(sheet.items):
        raise StaleSource(f"item {source.item_index} out of range")
    item = sheet.items[source.item_index]
    if source.frame_index is None:
        if not isinstance(item, StyleRule) or source.decl_index >= len(item.declarations):
            raise StaleSource("declaration pointer does not resolve")
        old = item.declarations[source.decl_index]
    else:
        if (not isinstance(item, KeyframesRule)
                or source.frame_index >= len(item.frames)
                or source.decl_index >= len(item.frames[source.frame_index].declarations)):
            raise StaleSource("keyframe declaration pointer does not resolve")
        old = item.frames[source.frame_index].declarations[source.decl_index]
    if old.property != source.property:
        raise StaleSource(
            f"pointer expected property {source.property!r}, found {old.property!r}")

    validate_value(source.property, new_value)
    new_sheet = copy_sheet(sheet)
    new_decl = Declaration(source.property, new_value, new_value.css())
    target = new_sheet.items[source.item_index]
    if source.frame_index is None:
        target.declarations[source.decl_index] = new_decl
    else:
        target.frames[source.frame_index].declarations[source.decl_index] = new_decl
    return new_sheet


# ---------------------------------------------------------------------------
# Typed value <-> JSON (the wire format the UI edits through)
# ---------------------------------------------------------------------------


def value_to_json(value):
    if isinstance(value, TimeValue):
        return {"kind": "time", "seconds": value.seconds}
    if isinstance(value, NumberValue):
        return {"kind": "number", "value": value.value}
    if isinstance(value, PercentValue):
        return {"kind": "percentage", "value": value.value}
    if isinstance(value, ColorValue):
        return {"kind": "color", "r": value.r, "g": value.g, "b": value.b, "a": value.a}
    if isinstance(value, KeywordValue):
        return {"kind": "keyword", "name": value.name}
    if isinstance(value, BezierValue):
        return {"kind": "bezier", "points": [value.x1, value.y1, value.x2, value.y2]}
    if isinstance(value, TransformListValue):
        return {
            "kind": "transform_list",
            "functions": [
                {"name": f.name, "args": [[n, u] for n, u in f.args]}
                for f in value.functions
            ],
        }
    if isinstance(value, IdentifierListValue):
        return {"kind": "identifier_list", "names": list(value.names)}
    if isinstance(value, ListValue):
        return {"kind": "list", "items": [value_to_json(v) for v in value.items]}
    return {"kind": "raw", "text": value.css()}


def value_from_json(data):
    kind = data.get("kind")
    if kind == "time":
        return TimeValue(float(data["seconds"]))
    if kind == "number":
        return NumberValue(float(data["value"]))
    if kind == "percentage":
        return PercentValue(float(data["value"]))
    if kind == "color":
        return ColorValue(int(data["r"]), int(data["g"]), int(data["b"]),
                          float(data.get("a", 1.0)))
    if kind == "keyword":
        return KeywordValue(data["name"])
    if kind == "bezier":
        return BezierValue(*(float(v) for v in data["points"]))
    if kind == "transform_list":
        funcs = tuple(
            TransformFunc(f["name"], tuple((float(n), u) for n, u in f["args"]))
            for f in data["functions"]
        )
        return TransformListValue(funcs)
    if kind == "identifier_list":
        return IdentifierListValue(tuple(data["names"]))
    if kind == "list":
        return ListValue(tuple(value_from_json(v) for v in data["items"]))
    return RawValue(data.get("text", ""))
