"""Incremental parsing of streamed LLM responses into design candidates.

The response format is: one or more <style>...</style> blocks, each followed
by an <explanation>...</explanation> and (between designs) a delimiter line of
five-or-more dashes. The parser is total — any input produces events, never an
exception — and chunking-invariant: events depend only on the concatenated
text, not on how it was split into chunks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


@dataclass
class DesignCandidate:
    ordinal: int
    css_text: str
    explanation: str = None
    malformed_style_tag: bool = False
    truncated: bool = False
    commentary: str = ""  # free text preceding the block, kept for UI display


@dataclass(frozen=True)
class StyleOpened:
    malformed: bool = False


@dataclass(frozen=True)
class SnippetComplete:
    candidate: DesignCandidate


@dataclass(frozen=True)
class ExplanationComplete:
    ordinal: int
    text: str


@dataclass(frozen=True)
class DelimiterSeen:
    pass


_DELIMITER_LINE_RE = re.compile(r"^[ \t]*-{5,}[ \t]*$")

_OPEN_TAGS = ("<style>", "<stle>")
_CLOSE_TAGS = ("</style>", "</stle>")
_EXPLANATION_OPEN = "<explanation>"
_EXPLANATION_CLOSE = "</explanation>"


@dataclass
class ParserState:
    buffer: str = ""
    mode: str = "scanning"  # scanning | in_style | in_explanation
    completed: list = field(default_factory=list)
    byte_cursor: int = 0
    _pending_commentary: str = ""
    _open_malformed: bool = False
    trailing_commentary: str = ""


def feed(state: ParserState, chunk: str) -> list:
    """Consume one chunk; return the events it completes."""
    state.buffer += chunk
    events = []
    while True:
        progressed = _step(state, events, at_end=False)
        if not progressed:
            break
    return events


def finish(state: ParserState) -> list:
    """Flush at end of stream: emit trailing complete blocks, flag truncation."""
    events = []
    while _step(state, events, at_end=True):
        pass
    if state.mode == "in_style":
        candidate = DesignCandidate(
            ordinal=len(state.completed),
            css_text=state.buffer.strip(),
            malformed_style_tag=True,
            truncated=True,
            commentary=state._pending_commentary.strip(),
        )
        state.completed.append(candidate)
        events.append(SnippetComplete(candidate))
        _consume(state, len(state.buffer))
        state._pending_commentary = ""
        state.mode = "scanning"
    elif state.mode == "in_explanation":
        text = state.buffer.strip()
        _consume(state, len(state.buffer))
        state.mode = "scanning"
        if text:
            ordinal = state.completed[-1].ordinal if state.completed else -1
            if state.completed:
                state.completed[-1].explanation = text
            events.append(ExplanationComplete(ordinal, text))
    if state.buffer:
        remainder = state.buffer
        _consume(state, len(state.buffer))
        if _DELIMITER_LINE_RE.match(remainder.strip("\n")):
            events.append(DelimiterSeen())
        elif remainder.strip():
            state.trailing_commentary += remainder
    return events


def parse_full(text: str):
    """Whole-text convenience: one feed plus finish. Returns (events, candidates)."""
    state = ParserState()
    events = feed(state, text)
    events += finish(state)
    return events, state.completed


def _consume(state, count):
    state.buffer = state.buffer[count:]
    state.byte_cursor += count


def _step(state, events, at_end):
    if state.mode == "scanning":
        return _step_scanning(state, events, at_end)
    if state.mode == "in_style":
        return _step_in_style(state, events)
    return _step_in_explanation(state, events)


def _find_delimiter_line(buffer, at_end):
    """Earliest complete line that is only dashes (>=5). Lines are complete
    when newline-terminated, or unconditionally at end of stream."""
    offset = 0
    for line in buffer.splitlines(keepends=True):
        terminated = line.endswith("\n") or at_end
        if terminated and _DELIMITER_LINE_RE.match(line.rstrip("\n")):
            return offset, offset + len(line)
        offset += len(line)
    return None


def _step_scanning(state, events, at_end):
    buf = state.buffer
    candidates = []
    for tag in _OPEN_TAGS:
        pos = buf.find(tag)
        if pos >= 0:
            candidates.append((pos, "open", tag))
    pos = buf.find(_EXPLANATION_OPEN)
    if pos >= 0:
        candidates.append((pos, "explanation", _EXPLANATION_OPEN))
    delim = _find_delimiter_line(buf, at_end)
    if delim is not None:
        candidates.append((delim[0], "delimiter", buf[delim[0]:delim[1]]))
    if not candidates:
        return False
    pos, kind, token = min(candidates)
    commentary = buf[:pos]
    if commentary.strip():
        state._pending_commentary += commentary
    if kind == "delimiter":
        _consume(state, pos + len(token))
        events.append(DelimiterSeen())
        return True
    _consume(state, pos + len(token))
    if kind == "open":
        state.mode = "in_style"
        state._open_malformed = token == "<stle>"
        events.append(StyleOpened(malformed=state._open_malformed))
    else:
        state.mode = "in_explanation"
    return True


def _step_in_style(state, events):
    buf = state.buffer
    closes = [(buf.find(t), t) for t in _CLOSE_TAGS]
    closes = [(p, t) for p, t in closes if p >= 0]
    if not closes:
        return False
    pos, tag = min(closes)
    css_text = buf[:pos]
    malformed = state._open_malformed or tag == "</stle>"
    candidate = DesignCandidate(
        ordinal=len(state.completed),
        css_text=css_text.strip(),
        malformed_style_tag=malformed,
        commentary=state._pending_commentary.strip(),
    )
    state.completed.append(candidate)
    state._pending_commentary = ""
    _consume(state, pos + len(tag))
    state.mode = "scanning"
    events.append(SnippetComplete(candidate))
    return True


def _step_in_explanation(state, events):
    buf = state.buffer
    pos = buf.find(_EXPLANATION_CLOSE)
    if pos < 0:
        return False
    text = buf[:pos].strip()
    _consume(state, pos + len(_EXPLANATION_CLOSE))
    state.mode = "scanning"
    ordinal = state.completed[-1].ordinal if state.completed else -1
    if state.completed:
        state.completed[-1].explanation = text
    events.append(ExplanationComplete(ordinal, text))
    return True
