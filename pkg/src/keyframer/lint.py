"""Validation of generated animation CSS against the prompt contract, plus
auto-repair for the mechanically fixable defect classes."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .css_core import (
    KeywordValue,
    KeyframesRule,
    ListValue,
    SelectorChain,
    SelectorPart,
    StyleRule,
    Stylesheet,
    copy_sheet,
)


class Code(enum.Enum):
    CLASS_ON_KEYFRAME = "CLASS_ON_KEYFRAME"
    CLASS_INSTEAD_OF_ID = "CLASS_INSTEAD_OF_ID"
    WRONG_SCOPE_INDEX = "WRONG_SCOPE_INDEX"
    STYLE_TAG_TYPO = "STYLE_TAG_TYPO"
    INVALID_VALUE_LIST = "INVALID_VALUE_LIST"
    UNDEFINED_VARIABLE = "UNDEFINED_VARIABLE"
    SHORTHAND_ANIMATION = "SHORTHAND_ANIMATION"
    MISSING_TRANSFORM_ORIGIN = "MISSING_TRANSFORM_ORIGIN"
    FINITE_ITERATION = "FINITE_ITERATION"
    UNKNOWN_TARGET = "UNKNOWN_TARGET"


# The first six classes break rendering outright; the rest are advisory.
ERROR_CODES = {
    Code.CLASS_ON_KEYFRAME,
    Code.CLASS_INSTEAD_OF_ID,
    Code.WRONG_SCOPE_INDEX,
    Code.STYLE_TAG_TYPO,
    Code.INVALID_VALUE_LIST,
    Code.UNDEFINED_VARIABLE,
}

FIXABLE_CODES = {Code.CLASS_ON_KEYFRAME, Code.CLASS_INSTEAD_OF_ID, Code.WRONG_SCOPE_INDEX}


@dataclass(frozen=True)
class Patch:
    """Mechanical AST repair, interpreted by auto_fix."""

    kind: str
    item_index: int
    chain_index: int = -1
    part_index: int = -1
    new_name: str = None


@dataclass(frozen=True)
class Finding:
    code: Code
    severity: str
    location: tuple
    message: str
    fix: Patch = None

    def to_json(self):
        return {
            "code": self.code.value,
            "severity": self.severity,
            "location": list(self.location),
            "message": self.message,
            "fixable": self.fix is not None,
        }


@dataclass
class LintReport:
    findings: list = field(default_factory=list)
    fixed_sheet: Stylesheet = None

    @property
    def error_count(self):
        return sum(1 for f in self.findings if f.severity == "error")

    @property
    def warning_count(self):
        return sum(1 for f in self.findings if f.severity == "warning")

    def codes(self):
        return {f.code for f in self.findings}

    def to_json(self):
        return {
            "findings": [f.to_json() for f in self.findings],
            "error_count": self.error_count,
            "warning_count": self.warning_count,
        }


def _finding(code, location, message, fix=None):
    severity = "error" if code in ERROR_CODES else "warning"
    return Finding(code, severity, location, message, fix)


_VAR_USE_RE = re.compile(r"var\(\s*(--[\w-]+)")


def lint(sheet: Stylesheet, index, expected_scope: int, malformed_style_tag=False) -> LintReport:
    """Deterministic classification of the known defect taxonomy.

    `index` is the SVG ElementIndex; `expected_scope` is the design-n index
    this snippet must be scoped under. `malformed_style_tag` is injected by
    the stream parser, which is the layer that sees raw <style> tags.
    """
    findings = []
    svg_ids = set(index.ids()) if index is not None else set()
    svg_classes = index.class_names if index is not None else set()

    if malformed_style_tag:
        findings.append(_finding(
            Code.STYLE_TAG_TYPO, (0, 0),
            "malformed <style> tag (e.g. <stle>) around this snippet",
        ))

    defined_vars = _defined_variables(sheet)

    for item_idx, item in enumerate(sheet.items):
        if isinstance(item, KeyframesRule):
            if item.selector_prefix:
                findings.append(_finding(
                    Code.CLASS_ON_KEYFRAME, item.span,
                    f"keyframes rule '{item.name}' carries selector prefix "
                    f"'{item.selector_prefix}'; keyframes must not be scoped",
                    fix=Patch("strip_keyframes_prefix", item_idx),
                ))
            for frame in item.frames:
                findings.extend(_check_variables(frame.declarations, defined_vars, item.span))
            continue
        if not isinstance(item, StyleRule):
            continue
        rule = item
        for chain_idx, chain in enumerate(rule.selectors):
            for part_idx, part in enumerate(chain.parts):
                if part.kind == "class":
                    scope = chain.scope_index() if part_idx == 0 else None
                    if scope is not None:
                        if scope != expected_scope:
                            findings.append(_finding(
                                Code.WRONG_SCOPE_INDEX, rule.span,
                                f"rule scoped under .design-{scope} but design-{expected_scope} expected",
                                fix=Patch("rename_scope", item_idx, chain_idx, part_idx,
                                          f"design-{expected_scope}"),
                            ))
                    elif part.name in svg_ids and part.name not in svg_classes:
                        findings.append(_finding(
                            Code.CLASS_INSTEAD_OF_ID, rule.span,
                            f"selector uses class '.{part.name}' but the SVG defines id "
                            f"'#{part.name}' and no element carries that class",
                            fix=Patch("class_to_id", item_idx, chain_idx, part_idx, part.name),
                        ))
                elif part.kind == "id" and svg_ids and part.name not in svg_ids:
                    findings.append(_finding(
                        Code.UNKNOWN_TARGET, rule.span,
                        f"selector targets '#{part.name}' which is not in the SVG",
                    ))

        findings.extend(_check_value_lists(rule))
        findings.extend(_check_variables(rule.declarations, defined_vars, rule.span))

        decls = {d.property: d for d in rule.declarations}
        if "animation" in decls:
            findings.append(_finding(
                Code.SHORTHAND_ANIMATION, rule.span,
                "animation shorthand used; write longhand properties with animation-name",
            ))
        if "animation-name" in decls:
            count = decls.get("animation-iteration-count")
            if count is None:
                findings.append(_finding(
                    Code.FINITE_ITERATION, rule.span,
                    "animation-iteration-count missing (defaults to 1); "
                    "set it to infinite for a looping animation",
                ))
            elif not _is_infinite(count.value):
                findings.append(_finding(
                    Code.FINITE_ITERATION, rule.span,
                    f"animation-iteration-count is '{count.raw}', not infinite",
                ))

    findings.extend(_check_transform_origin(sheet))
    return LintReport(findings=findings)


def _is_infinite(value):
    if isinstance(value, KeywordValue):
        return value.name == "infinite"
    if isinstance(value, ListValue):
        return all(_is_infinite(v) for v in value.items)
    return False


def _defined_variables(sheet):
    defined = set()
    for item in sheet.items:
        if isinstance(item, StyleRule):
            decl_groups = [item.declarations]
        elif isinstance(item, KeyframesRule):
            decl_groups = [f.declarations for f in item.frames]
        else:
            # Definitions inside raw content (e.g. :root blocks) still count.
            defined.update(m.group(1) for m in re.finditer(r"(--[\w-]+)\s*:", item.text))
            continue
        for decls in decl_groups:
            defined.update(d.property for d in decls if d.property.startswith("--"))
    return defined


def _check_variables(declarations, defined, span):
    out = []
    for decl in declarations:
        for used in _VAR_USE_RE.findall(decl.raw):
            if used not in defined:
                out.append(_finding(
                    Code.UNDEFINED_VARIABLE, span,
                    f"{decl.property} references {used} which is never defined",
                ))
    return out


_ANIMATION_TIMING_LONGHANDS = {
    "animation-duration", "animation-delay", "animation-iteration-count",
}


def _check_value_lists(rule):
    """A comma list of timing values longer than the animation-name list is the
    'per-selector values' misconception and silently breaks the animation."""
    out = []
    name_decl = next((d for d in rule.declarations if d.property == "animation-name"), None)
    name_count = 1
    if name_decl is not None and hasattr(name_decl.value, "names"):
        name_count = len(name_decl.value.names)
    for decl in rule.declarations:
        if decl.property in _ANIMATION_TIMING_LONGHANDS and isinstance(decl.value, ListValue):
            if len(decl.value.items) > name_count:
                out.append(_finding(
                    Code.INVALID_VALUE_LIST, rule.span,
                    f"{decl.property} lists {len(decl.value.items)} values for "
                    f"{name_count} animation(s); values do not distribute across selectors",
                ))
    return out


_TRANSFORMING_FUNCS = ("rotate", "scale")


def _check_transform_origin(sheet):
    """Keyframes that rotate or scale need transform-origin on the animated
    rule, otherwise the motion pivots around the canvas origin."""
    out = []
    needy_keyframes = set()
    for item in sheet.items:
        if not isinstance(item, KeyframesRule):
            continue
        for frame in item.frames:
            for decl in frame.declarations:
                if decl.property == "transform" and any(
                    fn in decl.raw for fn in _TRANSFORMING_FUNCS
                ):
                    needy_keyframes.add(item.name)
    if not needy_keyframes:
        return out
    for rule in sheet.style_rules():
        names = set()
        for decl in rule.declarations:
            if decl.property == "animation-name" and hasattr(decl.value, "names"):
                names.update(decl.value.names)
        if names & needy_keyframes:
            props = {d.property for d in rule.declarations}
            if "transform-origin" not in props:
                out.append(_finding(
                    Code.MISSING_TRANSFORM_ORIGIN, rule.span,
                    f"rule animates {sorted(names & needy_keyframes)} which rotates/scales "
                    "but does not set transform-origin",
                ))
    return out


def auto_fix(sheet: Stylesheet, report: LintReport) -> Stylesheet:
    """Apply every attached fix in order; unfixable findings are untouched."""
    fixed = copy_sheet(sheet)
    for finding in report.findings:
        patch = finding.fix
        if patch is None:
            continue
        item = fixed.items[patch.item_index]
        if patch.kind == "strip_keyframes_prefix" and isinstance(item, KeyframesRule):
            item.selector_prefix = None
        elif patch.kind in ("rename_scope", "class_to_id") and isinstance(item, StyleRule):
            chain = item.selectors[patch.chain_index]
            parts = list(chain.parts)
            if patch.kind == "rename_scope":
                parts[patch.part_index] = SelectorPart("class", patch.new_name)
            else:
                parts[patch.part_index] = SelectorPart("id", patch.new_name)
            item.selectors[patch.chain_index] = SelectorChain(tuple(parts))
    return fixed
