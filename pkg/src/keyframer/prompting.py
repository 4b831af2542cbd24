"""Prompt assembly and streaming completion providers.

The prompt text is a fixed contract: the generator downstream (stream_parse,
lint) depends on the response format it mandates, so assembly is pure and
byte-stable. The template intentionally preserves the original wording,
including its typos ("delimeter", "ONlY", "RETAIN ALL LINE OF"); pass
corrected=True for a cleaned variant.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    AuthError,
    EmptyPrompt,
    NetworkError,
    ProviderError,
    ProviderTimeout,
)

# ---------------------------------------------------------------------------
# Prompt templates
# ---------------------------------------------------------------------------

INITIAL_TEMPLATE = """\
You are writing CSS for animating the SVG contained within the <> symbols below. The design should meet the following user specification:

###
{user_text}
##

Please follow these rules in writing the CSS:
1. Contain the CSS code snippet in a <style> element.
2. In the CSS code snippet, do not use animation shorthand and use the property "animation-name".
3. If there is any transform: rotate() or transform: scale() in the code snippet, set transform-origin: center and transform-box: fill-box.
4. The animation should repeat forever with animation-iteration-count: infinite.
5. The CSS for a code snippet should be nested within a parent with the class design-n where n corresponds to the index of the snippet counting up from {existing_design_count}. ONlY add this parent-class to CSS rules. DO NOT add the parent class to keyframes.
6. A code snippet should be followed by a short explanation summarizing how the design is distinct. The explanation should be no more than 15 words long, should be descriptive rather than technical, and should be contained in an <explanation> tag.
7. Only write CSS. Do not return any SVG or additional text.

If the user asks for more than one design, follow these addition rules FOR EACH DESIGN:
1. Generate independent CSS code snippets and explanations for each design.
2. End each CSS code snippet and explanation with the delimiter -----. Ensure the delimeter has 5 dashes.

<>
{svg_text}
<>
"""

EXTENSION_TEMPLATE = """\

For all generated designs, start from the existing add any new CSS BELOW the existing CSS.

\"\"\"{extension_css}\"\"\"

Refactor the existing CSS to apply the corresponding design-{existing_design_count} class.
RETAIN ALL LINE OF IN THE EXISTING CSS. DO NOT DROP ANY LINES.
Check your work and ensure that the existing CSS is represented in the designs.
"""

_CORRECTIONS = [
    ("ONlY add", "Only add"),
    ("these addition rules", "these additional rules"),
    ("Ensure the delimeter has", "Ensure the delimiter has"),
    ("start from the existing add any new CSS", "start from the existing CSS and add any new CSS"),
    ("RETAIN ALL LINE OF IN THE EXISTING CSS", "RETAIN ALL LINES IN THE EXISTING CSS"),
]


def _apply_corrections(text):
    for old, new in _CORRECTIONS:
        text = text.replace(old, new)
    return text


@dataclass(frozen=True)
class PromptSpec:
    user_text: str
    svg_text: str
    existing_design_count: int = 0
    extension_css: str = None


def build_initial_prompt(spec: PromptSpec, corrected=False) -> str:
    if not spec.user_text.strip():
        raise EmptyPrompt("prompt text is blank")
    text = INITIAL_TEMPLATE.format(
        user_text=spec.user_text,
        svg_text=spec.svg_text,
        existing_design_count=spec.existing_design_count,
    )
    return _apply_corrections(text) if corrected else text


def build_extension_prompt(spec: PromptSpec, corrected=False) -> str:
    if not spec.user_text.strip():
        raise EmptyPrompt("prompt text is blank")
    if not spec.extension_css or not spec.extension_css.strip():
        raise EmptyPrompt("extension CSS is required when iterating on a design")
    text = build_initial_prompt(spec) + EXTENSION_TEMPLATE.format(
        extension_css=spec.extension_css,
        existing_design_count=spec.existing_design_count,
    )
    return _apply_corrections(text) if corrected else text


def build_prompt(spec: PromptSpec, corrected=False) -> str:
    """Extension prompt when extension_css is set, initial prompt otherwise."""
    if spec.extension_css:
        return build_extension_prompt(spec, corrected=corrected)
    return build_initial_prompt(spec, corrected=corrected)


# ---------------------------------------------------------------------------
# Streaming providers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProviderConfig:
    provider: str = "replay"  # live | replay
    model_id: str = "gpt-4"
    temperature: float = 0.7
    max_tokens: int = 4096
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    credential_ref: str = "KEYFRAMER_API_KEY"
    request_timeout: float = 120.0
    # replay-only knobs (ignored by the live provider)
    replay_path: str = None
    honor_delays: bool = False
    # retry backoff base in seconds; tests shrink this
    retry_backoff: float = 1.0


class StreamSink:
    """Callback surface for one streamed completion. Chunk calls arrive in
    order; exactly one terminal call (done or error) follows."""

    def chunk(self, text):
        pass

    def done(self, full_text, elapsed_seconds):
        pass

    def error(self, kind, message):
        pass


class CallbackSink(StreamSink):
    def __init__(self, on_chunk=None, on_done=None, on_error=None):
        self._chunk = on_chunk
        self._done = on_done
        self._error = on_error

    def chunk(self, text):
        if self._chunk:
            self._chunk(text)

    def done(self, full_text, elapsed_seconds):
        if self._done:
            self._done(full_text, elapsed_seconds)

    def error(self, kind, message):
        if self._error:
            self._error(kind, message)


@dataclass
class RequestRecord:
    full_text: str
    elapsed_seconds: float
    chunk_count: int

    def to_json(self):
        return {
            "full_text": self.full_text,
            "elapsed_seconds": self.elapsed_seconds,
            "chunk_count": self.chunk_count,
        }

    @classmethod
    def from_json(cls, data):
        return cls(data["full_text"], data["elapsed_seconds"], data["chunk_count"])


class ReplayProvider:
    """Deterministic provider backed by recorded fixtures.

    A fixture is JSON: {"chunks": [...], "delays_ms": [...], "elapsed_seconds": n}.
    A directory of fixtures is consumed in sorted order, cycling.
    """

    def __init__(self, replay_path, honor_delays=False):
        path = Path(replay_path)
        if path.is_dir():
            self.paths = sorted(p for p in path.iterdir() if p.suffix == ".json")
            if not self.paths:
                raise ProviderError(f"no replay fixtures in {path}")
        else:
            self.paths = [path]
        self.honor_delays = honor_delays
        self._calls = 0

    def stream(self, prompt, sink: StreamSink) -> RequestRecord:
        fixture_path = self.paths[self._calls % len(self.paths)]
        self._calls += 1
        try:
            fixture = json.loads(fixture_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            sink.error("provider", str(exc))
            raise ProviderError(f"bad replay fixture {fixture_path}: {exc}") from exc
        chunks = fixture.get("chunks", [])
        delays = fixture.get("delays_ms", [])
        for i, chunk in enumerate(chunks):
            if self.honor_delays and i < len(delays):
                time.sleep(delays[i] / 1000.0)
            sink.chunk(chunk)
        full_text = "".join(chunks)
        elapsed = fixture.get("elapsed_seconds")
        if elapsed is None:
            elapsed = sum(delays) / 1000.0
        sink.done(full_text, elapsed)
        return RequestRecord(full_text, elapsed, len(chunks))


class LiveProvider:
    """Chat-completion endpoint speaking server-sent events.

    The credential is read from the environment variable named by
    credential_ref at request time and never stored or logged.
    """

    MAX_RETRIES = 2

    def __init__(self, config: ProviderConfig):
        self.config = config

    def _headers(self):
        key = os.environ.get(self.config.credential_ref, "")
        if not key:
            raise AuthError(
                f"no credential in environment variable {self.config.credential_ref}"
            )
        return {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    def _payload(self, prompt):
        return {
            "model": self.config.model_id,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
            "stream": True,
            "messages": [{"role": "user", "content": prompt}],
        }

    def stream(self, prompt, sink: StreamSink) -> RequestRecord:
        import httpx

        attempt = 0
        start = time.monotonic()
        while True:
            try:
                return self._stream_once(prompt, sink, start)
            except (NetworkError, ProviderError) as exc:
                if isinstance(exc, (AuthError, ProviderTimeout)):
                    sink.error(_error_kind(exc), str(exc))
                    raise
                retryable = isinstance(exc, NetworkError) or (
                    exc.status is not None and exc.status >= 500
                )
                if not retryable or attempt >= self.MAX_RETRIES:
                    sink.error(_error_kind(exc), str(exc))
                    raise
                time.sleep(self.config.retry_backoff * (2 ** attempt))
                attempt += 1
            except httpx.TimeoutException as exc:
                err = ProviderTimeout(f"request timed out after {self.config.request_timeout}s")
                sink.error("timeout", str(err))
                raise err from exc
            except httpx.TransportError as exc:
                if attempt >= self.MAX_RETRIES:
                    err = NetworkError(str(exc))
                    sink.error("network", str(err))
                    raise err from exc
                time.sleep(self.config.retry_backoff * (2 ** attempt))
                attempt += 1

    def _stream_once(self, prompt, sink, start):
        import httpx

        chunks = []
        with httpx.Client(timeout=self.config.request_timeout) as client:
            with client.stream(
                "POST", self.config.endpoint, headers=self._headers(),
                json=self._payload(prompt),
            ) as resp:
                if resp.status_code in (401, 403):
                    raise AuthError(f"provider rejected credential (HTTP {resp.status_code})",
                                    status=resp.status_code)
                if resp.status_code // 100 != 2:
                    body = resp.read().decode("utf-8", "replace")
                    raise ProviderError(
                        f"provider returned HTTP {resp.status_code}",
                        status=resp.status_code, body=body,
                    )
                for line in resp.iter_lines():
                    if not line.startswith("data:"):
                        continue
                    data = line[len("data:"):].strip()
                    if data == "[DONE]":
                        break
                    try:
                        delta = json.loads(data)["choices"][0]["delta"].get("content")
                    except (json.JSONDecodeError, KeyError, IndexError):
                        continue
                    if delta:
                        chunks.append(delta)
                        sink.chunk(delta)
        elapsed = time.monotonic() - start
        full_text = "".join(chunks)
        sink.done(full_text, elapsed)
        return RequestRecord(full_text, elapsed, len(chunks))


def _error_kind(exc):
    if isinstance(exc, AuthError):
        return "auth"
    if isinstance(exc, ProviderTimeout):
        return "timeout"
    if isinstance(exc, NetworkError):
        return "network"
    return "provider"


def get_provider(config: ProviderConfig):
    if config.provider == "replay":
        if not config.replay_path:
            raise ProviderError("replay provider requires replay_path")
        return ReplayProvider(config.replay_path, honor_delays=config.honor_delays)
    if config.provider == "live":
        return LiveProvider(config)
    raise ProviderError(f"unknown provider {config.provider!r}")


def complete_streaming(config: ProviderConfig, prompt: str, sink: StreamSink) -> RequestRecord:
    """Stream one completion through the configured provider."""
    return get_provider(config).stream(prompt, sink)
