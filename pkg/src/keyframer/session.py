"""Iterative session state: prompt iterations, designs, edits, favorites,
an append-only activity log, JSON persistence, and corpus statistics."""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field

from . import stream_parse
from .css_core import parse_css, serialize_css
from .errors import (
    EmptyPrompt,
    ProviderError,
    SchemaVersionError,
    UnknownDesign,
    UnknownIteration,
)
from .lint import LintReport, lint
from .prompting import (
    CallbackSink,
    PromptSpec,
    RequestRecord,
    build_prompt,
    get_provider,
)
from .property_sheet import EntrySource, apply_edit, derive_sheet, value_from_json
from .svg_core import PreprocessResult, preprocess

SCHEMA_VERSION = 1

LOG_KINDS = {
    "prompt_submitted", "response_chunk_meta", "design_completed", "code_edit",
    "property_edit", "favorite_toggled", "regenerate", "export", "provider_error",
}


def _now():
    return round(time.time(), 3)  # wall clock, millisecond resolution


@dataclass
class LogEvent:
    timestamp: float
    kind: str
    payload: dict = field(default_factory=dict)

    def to_json(self):
        return {"timestamp": self.timestamp, "kind": self.kind, "payload": self.payload}


@dataclass
class EditEvent:
    kind: str  # code_edit | property_edit
    timestamp: float
    detail: dict = field(default_factory=dict)

    def to_json(self):
        return {"kind": self.kind, "timestamp": self.timestamp, "detail": self.detail}


@dataclass
class Design:
    id: str
    scope_index: int
    css_current: str
    css_original: str
    explanation: str
    lint: LintReport
    edits: list = field(default_factory=list)
    malformed_style_tag: bool = False

    def to_json(self):
        return {
            "id": self.id,
            "scope_index": self.scope_index,
            "css_current": self.css_current,
            "css_original": self.css_original,
            "explanation": self.explanation,
            "malformed_style_tag": self.malformed_style_tag,
            "edits": [e.to_json() for e in self.edits],
            "lint": self.lint.to_json(),
        }


@dataclass
class Iteration:
    prompt_text: str
    base_design: str = None
    designs: list = field(default_factory=list)
    request_record: RequestRecord = None
    is_regenerate: bool = False
    failed: bool = False
    error: str = None

    def to_json(self):
        return {
            "prompt_text": self.prompt_text,
            "base_design": self.base_design,
            "is_regenerate": self.is_regenerate,
            "failed": self.failed,
            "error": self.error,
            "request_record": self.request_record.to_json() if self.request_record else None,
            "designs": [d.to_json() for d in self.designs],
        }


@dataclass
class Session:
    id: str
    svg: PreprocessResult
    svg_source: str
    created_at: float
    iterations: list = field(default_factory=list)
    favorites: set = field(default_factory=set)
    log: list = field(default_factory=list)

    def all_designs(self):
        return [d for it in self.iterations for d in it.designs]

    def find_design(self, design_id):
        for design in self.all_designs():
            if design.id == design_id:
                return design
        raise UnknownDesign(f"no design {design_id!r} in session {self.id}")

    def design_count(self):
        return len(self.all_designs())

    def append_log(self, kind, **payload):
        assert kind in LOG_KINDS, kind
        self.log.append(LogEvent(_now(), kind, payload))


def create_session(svg_text: str) -> Session:
    """Preprocess the SVG and open a fresh session. Raises on unparseable SVG."""
    result = preprocess(svg_text)
    session = Session(
        id=uuid.uuid4().hex[:12],
        svg=result,
        svg_source=svg_text,
        created_at=_now(),
    )
    return session


def run_iteration(session: Session, prompt_text: str, base_design: str = None,
                  config=None, provider=None, is_regenerate=False,
                  sink=None, design_callback=None) -> Iteration:
    """Build the prompt, stream the completion, parse candidates, lint each
    against its expected scope, and append the iteration.

    `provider` (an object with .stream) wins over `config`; `sink` is an
    optional extra StreamSink for UIs observing the raw stream.
    """
    if not prompt_text.strip():
        raise EmptyPrompt("prompt text is blank")
    base = session.find_design(base_design) if base_design else None
    existing = session.design_count()
    spec = PromptSpec(
        user_text=prompt_text,
        svg_text=session.svg.svg,
        existing_design_count=existing,
        extension_css=base.css_current if base else None,
    )
    prompt = build_prompt(spec)
    if provider is None:
        provider = get_provider(config)

    session.append_log(
        "regenerate" if is_regenerate else "prompt_submitted",
        prompt=prompt_text, base_design=base_design, existing_designs=existing,
    )
    iteration = Iteration(
        prompt_text=prompt_text, base_design=base_design, is_regenerate=is_regenerate)

    state = stream_parse.ParserState()
    chunk_sizes = []

    def on_chunk(text):
        chunk_sizes.append(len(text))
        if sink:
            sink.chunk(text)
        for event in stream_parse.feed(state, text):
            _handle_event(session, iteration, event, design_callback)

    def on_done(full_text, elapsed):
        for event in stream_parse.finish(state):
            _handle_event(session, iteration, event, design_callback)
        if sink:
            sink.done(full_text, elapsed)

    def on_error(kind, message):
        if sink:
            sink.error(kind, message)

    try:
        record = provider.stream(prompt, CallbackSink(on_chunk, on_done, on_error))
    except ProviderError as exc:
        iteration.failed = True
        iteration.error = str(exc)
        session.append_log("provider_error", message=str(exc))
        session.iterations.append(iteration)
        return iteration

    session.append_log(
        "response_chunk_meta",
        chunk_count=record.chunk_count, total_chars=len(record.full_text),
        elapsed_seconds=record.elapsed_seconds,
    )
    iteration.request_record = record
    if not iteration.designs:
        iteration.failed = True
        iteration.error = "response contained no design candidates"
    session.iterations.append(iteration)
    return iteration


def _handle_event(session, iteration, event, design_callback=None):
    if isinstance(event, stream_parse.ExplanationComplete):
        # The snippet closes before its explanation arrives; patch it in.
        if event.ordinal < len(iteration.designs):
            design = iteration.designs[event.ordinal]
            design.explanation = event.text
            if design_callback:
                design_callback(design)
        return
    if not isinstance(event, stream_parse.SnippetComplete):
        return
    candidate = event.candidate
    scope = session.design_count() + candidate.ordinal
    sheet = parse_css(candidate.css_text)
    report = lint(sheet, session.svg.index, scope,
                  malformed_style_tag=candidate.malformed_style_tag)
    design = Design(
        id=uuid.uuid4().hex[:12],
        scope_index=scope,
        css_current=candidate.css_text,
        css_original=candidate.css_text,
        explanation=candidate.explanation or "",
        lint=report,
        malformed_style_tag=candidate.malformed_style_tag,
    )
    iteration.designs.append(design)
    session.append_log(
        "design_completed",
        design_id=design.id, scope_index=scope,
        lint_errors=report.error_count, truncated=candidate.truncated,
    )
    if design_callback:
        design_callback(design)


def regenerate(session: Session, iteration_index: int, config=None, provider=None,
               sink=None) -> Iteration:
    """Re-run an iteration with the identical prompt; prior designs are kept."""
    if not 0 <= iteration_index < len(session.iterations):
        raise UnknownIteration(f"no iteration {iteration_index}")
    original = session.iterations[iteration_index]
    return run_iteration(
        session, original.prompt_text, base_design=original.base_design,
        config=config, provider=provider, is_regenerate=True, sink=sink,
    )


def _relint(session, design):
    sheet = parse_css(design.css_current)
    design.lint = lint(sheet, session.svg.index, design.scope_index,
                       malformed_style_tag=design.malformed_style_tag)


def apply_code_edit(session: Session, design_id: str, new_css: str) -> Design:
    design = session.find_design(design_id)
    design.css_current = new_css
    design.edits.append(EditEvent("code_edit", _now(), {"chars": len(new_css)}))
    _relint(session, design)
    session.append_log("code_edit", design_id=design_id)
    return design


def apply_property_edit(session: Session, design_id: str, source, value) -> Design:
    """Edit one declaration through the property-sheet pointer. `source` may be
    an EntrySource or its JSON form; `value` a typed value or its JSON form."""
    design = session.find_design(design_id)
    if isinstance(source, dict):
        source = EntrySource.from_json(source)
    if isinstance(value, dict):
        value = value_from_json(value)
    sheet = parse_css(design.css_current)
    new_sheet = apply_edit(sheet, source, value)
    design.css_current = serialize_css(new_sheet)
    design.edits.append(EditEvent(
        "property_edit", _now(),
        {"property": source.property, "value": value.css()},
    ))
    _relint(session, design)
    session.append_log("property_edit", design_id=design_id, property=source.property)
    return design


def design_property_sheet(session: Session, design_id: str):
    design = session.find_design(design_id)
    return derive_sheet(parse_css(design.css_current), session.svg.index)


def toggle_favorite(session: Session, design_id: str) -> Session:
    session.find_design(design_id)  # raises UnknownDesign
    if design_id in session.favorites:
        session.favorites.discard(design_id)
        state = False
    else:
        session.favorites.add(design_id)
        state = True
    session.append_log("favorite_toggled", design_id=design_id, favorited=state)
    return session


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def session_to_json(session: Session) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "session": {
            "id": session.id,
            "created_at": session.created_at,
            "svg_source": session.svg_source,
            "svg": session.svg.to_json(),
            "favorites": sorted(session.favorites),
            "iterations": [it.to_json() for it in session.iterations],
            "log": [e.to_json() for e in session.log],
        },
    }


def export_log(session: Session) -> bytes:
    session.append_log("export", favorites=sorted(session.favorites))
    return json.dumps(session_to_json(session), indent=2).encode("utf-8")


def import_log(data: bytes) -> Session:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaVersionError(f"not a session log: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"unsupported schema version {doc.get('schema_version')!r}"
            if isinstance(doc, dict) else "not a session log object"
        )
    raw = doc["session"]
    session = Session(
        id=raw["id"],
        svg=PreprocessResult.from_json(raw["svg"]),
        svg_source=raw["svg_source"],
        created_at=raw["created_at"],
        favorites=set(raw["favorites"]),
        log=[LogEvent(e["timestamp"], e["kind"], e["payload"]) for e in raw["log"]],
    )
    for it_raw in raw["iterations"]:
        iteration = Iteration(
            prompt_text=it_raw["prompt_text"],
            base_design=it_raw["base_design"],
            is_regenerate=it_raw["is_regenerate"],
            failed=it_raw["failed"],
            error=it_raw.get("error"),
            request_record=(
                RequestRecord.from_json(it_raw["request_record"])
                if it_raw.get("request_record") else None
            ),
        )
        for d_raw in it_raw["designs"]:
            design = Design(
                id=d_raw["id"],
                scope_index=d_raw["scope_index"],
                css_current=d_raw["css_current"],
                css_original=d_raw["css_original"],
                explanation=d_raw["explanation"],
                malformed_style_tag=d_raw.get("malformed_style_tag", False),
                edits=[
                    EditEvent(e["kind"], e["timestamp"], e["detail"])
                    for e in d_raw["edits"]
                ],
                lint=None,
            )
            _relint(session, design)
            iteration.designs.append(design)
        session.iterations.append(iteration)
    return session


def verify_replay(session: Session):
    """Re-parse every stored response and check css_original byte-identity.

    Returns (ok, messages)."""
    messages = []
    ok = True
    for i, iteration in enumerate(session.iterations):
        if iteration.request_record is None:
            continue
        _, candidates = stream_parse.parse_full(iteration.request_record.full_text)
        if len(candidates) != len(iteration.designs):
            ok = False
            messages.append(
                f"iteration {i}: {len(candidates)} candidates from replay, "
                f"{len(iteration.designs)} designs stored")
            continue
        for candidate, design in zip(candidates, iteration.designs):
            if candidate.css_text != design.css_original:
                ok = False
                messages.append(
                    f"iteration {i} design {design.id}: css_original mismatch")
            else:
                messages.append(
                    f"iteration {i} design {design.id}: css_original verified")
    return ok, messages


# ---------------------------------------------------------------------------
# Corpus statistics
# ---------------------------------------------------------------------------


@dataclass
class SessionStats:
    unique_prompt_count: int = 0
    mean_words_per_prompt: float = 0.0
    reprompt_fraction: float = 0.0
    designs_generated: int = 0
    designs_generated_excluding_regenerated: int = 0
    fraction_code_instances_edited: float = 0.0
    mean_response_seconds: float = 0.0
    css_error_rate: float = 0.0
    css_error_rate_per_prompt: float = 0.0
    empty: bool = False

    def to_json(self):
        return {
            "unique_prompt_count": self.unique_prompt_count,
            "mean_words_per_prompt": self.mean_words_per_prompt,
            "reprompt_fraction": self.reprompt_fraction,
            "designs_generated": self.designs_generated,
            "designs_generated_excluding_regenerated":
                self.designs_generated_excluding_regenerated,
            "fraction_code_instances_edited": self.fraction_code_instances_edited,
            "mean_response_seconds": self.mean_response_seconds,
            "css_error_rate": self.css_error_rate,
            "css_error_rate_per_prompt": self.css_error_rate_per_prompt,
            "empty": self.empty,
        }

    def to_table(self):
        rows = [(k, v) for k, v in self.to_json().items()]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def compute_stats(sessions) -> SessionStats:
    """Exact corpus statistics; empty corpus yields zeroed stats with the
    empty flag set."""
    sessions = list(sessions)
    unique_prompts = []
    total_iterations = 0
    reprompts = 0
    designs = []
    fresh_designs = 0
    latencies = []
    erroring_prompts = 0
    counted_prompts = 0
    for session in sessions:
        seen = set()
        for iteration in session.iterations:
            total_iterations += 1
            if iteration.is_regenerate:
                reprompts += 1
            if iteration.prompt_text not in seen:
                seen.add(iteration.prompt_text)
                unique_prompts.append(iteration.prompt_text)
            if iteration.request_record is not None:
                latencies.append(iteration.request_record.elapsed_seconds)
            if iteration.designs:
                counted_prompts += 1
                if any(d.lint and d.lint.error_count > 0 for d in iteration.designs):
                    erroring_prompts += 1
            for design in iteration.designs:
                designs.append(design)
                if not iteration.is_regenerate:
                    fresh_designs += 1

    if not sessions or (not total_iterations and not designs):
        return SessionStats(empty=True)

    word_counts = [len(p.split()) for p in unique_prompts]
    edited = sum(1 for d in designs if d.edits)
    erroring = sum(1 for d in designs if d.lint and d.lint.error_count > 0)
    return SessionStats(
        unique_prompt_count=len(unique_prompts),
        mean_words_per_prompt=(sum(word_counts) / len(word_counts)) if word_counts else 0.0,
        reprompt_fraction=(reprompts / total_iterations) if total_iterations else 0.0,
        designs_generated=len(designs),
        designs_generated_excluding_regenerated=fresh_designs,
        fraction_code_instances_edited=(edited / len(designs)) if designs else 0.0,
        mean_response_seconds=(sum(latencies) / len(latencies)) if latencies else 0.0,
        css_error_rate=(erroring / len(designs)) if designs else 0.0,
        css_error_rate_per_prompt=(erroring_prompts / counted_prompts) if counted_prompts else 0.0,
    )
