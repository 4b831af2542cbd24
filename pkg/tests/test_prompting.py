import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import pytest

from keyframer.errors import AuthError, EmptyPrompt, ProviderError
from keyframer.prompting import (
    CallbackSink,
    PromptSpec,
    ProviderConfig,
    ReplayProvider,
    RequestRecord,
    build_extension_prompt,
    build_initial_prompt,
    build_prompt,
    complete_streaming,
    get_provider,
)

SVG = ('<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 24 24">\n'
       '  <circle id="sun" cx="12" cy="12" r="6" fill="gold"/>\n'
       '</svg>')

EXT_CSS = (".design-0 #sun {\n  animation-name: glow;\n  animation-duration: 2s;\n"
           "  animation-iteration-count: infinite;\n}\n\n@keyframes glow {\n"
           "  0% {\n    opacity: 0.6;\n  }\n  100% {\n    opacity: 1;\n  }\n}")


class TestAssembly:
    def test_initial_golden(self, fixtures_dir):
        golden = (fixtures_dir / "golden" / "initial_single.txt").read_text()
        assert build_initial_prompt(PromptSpec("Make the sparkles twinkle", SVG)) == golden

    def test_initial_golden_with_offset(self, fixtures_dir):
        golden = (fixtures_dir / "golden" / "initial_offset.txt").read_text()
        spec = PromptSpec("Give me 3 designs where the planet rocks back and forth", SVG, 2)
        assert build_initial_prompt(spec) == golden

    def test_extension_golden(self, fixtures_dir):
        golden = (fixtures_dir / "golden" / "extension.txt").read_text()
        spec = PromptSpec("Make the halos spin too", SVG, 1, EXT_CSS)
        assert build_extension_prompt(spec) == golden

    def test_dispatcher_picks_template(self):
        initial = build_prompt(PromptSpec("go", SVG))
        extension = build_prompt(PromptSpec("go", SVG, 1, EXT_CSS))
        assert "RETAIN ALL LINE" not in initial
        assert "RETAIN ALL LINE" in extension

    def test_count_substitution(self):
        for n in (0, 4, 17):
            prompt = build_initial_prompt(PromptSpec("go", SVG, n))
            assert f"counting up from {n}." in prompt

    def test_blank_user_text_rejected(self):
        with pytest.raises(EmptyPrompt):
            build_initial_prompt(PromptSpec("   ", SVG))

    def test_extension_requires_css(self):
        with pytest.raises(EmptyPrompt):
            build_extension_prompt(PromptSpec("go", SVG, 1, "  "))

    def test_verbatim_quirks_kept_by_default(self):
        prompt = build_prompt(PromptSpec("go", SVG, 1, EXT_CSS))
        assert "ONlY add this parent-class" in prompt
        assert "Ensure the delimeter has 5 dashes" in prompt
        assert "RETAIN ALL LINE OF IN THE EXISTING CSS" in prompt

    def test_corrected_variant(self):
        prompt = build_prompt(PromptSpec("go", SVG, 1, EXT_CSS), corrected=True)
        assert "ONlY" not in prompt
        assert "delimeter" not in prompt
        assert "RETAIN ALL LINES IN THE EXISTING CSS" in prompt
        # corrections never touch the payload sections
        assert SVG in prompt
        assert EXT_CSS in prompt

    def test_assembly_is_deterministic(self):
        spec = PromptSpec("go", SVG, 3, EXT_CSS)
        assert build_prompt(spec) == build_prompt(spec)


class Recorder:
    def __init__(self):
        self.chunks = []
        self.done = None
        self.errors = []

    def sink(self):
        return CallbackSink(
            self.chunks.append,
            lambda text, secs: setattr(self, "done", (text, secs)),
            lambda kind, msg: self.errors.append((kind, msg)),
        )


class TestReplayProvider:
    def test_streams_fixture_chunks(self, replay_dir, replay_texts):
        rec = Recorder()
        provider = ReplayProvider(replay_dir / "r01.json")
        record = provider.stream("ignored", rec.sink())
        assert "".join(rec.chunks) == replay_texts["r01"]
        assert record.full_text == replay_texts["r01"]
        assert record.elapsed_seconds == 3.0
        assert rec.done == (replay_texts["r01"], 3.0)

    def test_directory_cycles_in_sorted_order(self, replay_dir, replay_texts):
        provider = ReplayProvider(replay_dir)
        names = sorted(replay_texts)
        seen = []
        for _ in range(len(names) + 2):
            rec = Recorder()
            provider.stream("x", rec.sink())
            seen.append("".join(rec.chunks))
        expected = [replay_texts[n] for n in names] + [replay_texts[names[0]],
                                                       replay_texts[names[1]]]
        assert seen == expected

    def test_replay_is_deterministic(self, replay_dir):
        records = []
        for _ in range(2):
            provider = ReplayProvider(replay_dir / "r02.json")
            rec = Recorder()
            records.append((provider.stream("x", rec.sink()), list(rec.chunks)))
        assert records[0][0] == records[1][0]
        assert records[0][1] == records[1][1]

    def test_elapsed_falls_back_to_delay_sum(self, tmp_path):
        path = tmp_path / "f.json"
        path.write_text(json.dumps({"chunks": ["a", "b"], "delays_ms": [250, 250]}))
        record = ReplayProvider(path).stream("x", Recorder().sink())
        assert record.elapsed_seconds == 0.5

    def test_empty_directory_rejected(self, tmp_path):
        with pytest.raises(ProviderError):
            ReplayProvider(tmp_path)

    def test_get_provider_requires_replay_path(self):
        with pytest.raises(ProviderError):
            get_provider(ProviderConfig(provider="replay"))

    def test_record_json_round_trip(self):
        record = RequestRecord("text", 1.25, 4)
        assert RequestRecord.from_json(record.to_json()) == record


def _sse_body(chunks):
    lines = []
    for chunk in chunks:
        payload = {"choices": [{"delta": {"content": chunk}}]}
        lines.append(f"data: {json.dumps(payload)}\n\n")
    lines.append("data: [DONE]\n\n")
    return "".join(lines).encode()


class FlakyHandler(BaseHTTPRequestHandler):
    failures = 0
    status = 500
    requests = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        type(self).requests.append(
            {"auth": self.headers.get("Authorization"), "body": body})
        if type(self).failures > 0:
            type(self).failures -= 1
            self.send_response(type(self).status)
            self.end_headers()
            self.wfile.write(b"boom")
            return
        data = _sse_body(["hello ", "world"])
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture()
def live_server():
    server = HTTPServer(("127.0.0.1", 0), FlakyHandler)
    FlakyHandler.failures = 0
    FlakyHandler.status = 500
    FlakyHandler.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1/chat"
    server.shutdown()


def _live_config(endpoint):
    return ProviderConfig(provider="live", endpoint=endpoint, retry_backoff=0.01,
                          request_timeout=5, model_id="test-model", temperature=0.3)


class TestLiveProvider:
    def test_streams_and_records(self, live_server, monkeypatch):
        monkeypatch.setenv("KEYFRAMER_API_KEY", "sk-test-123")
        rec = Recorder()
        record = complete_streaming(_live_config(live_server), "do it", rec.sink())
        assert rec.chunks == ["hello ", "world"]
        assert record.full_text == "hello world"
        assert record.chunk_count == 2
        body = FlakyHandler.requests[0]["body"]
        assert body["model"] == "test-model"
        assert body["temperature"] == 0.3
        assert body["stream"] is True
        assert body["messages"] == [{"role": "user", "content": "do it"}]

    def test_credential_sent_but_never_stored(self, live_server, monkeypatch):
        monkeypatch.setenv("KEYFRAMER_API_KEY", "sk-secret-789")
        record = complete_streaming(_live_config(live_server), "x", Recorder().sink())
        assert FlakyHandler.requests[0]["auth"] == "Bearer sk-secret-789"
        assert "sk-secret-789" not in json.dumps(record.to_json())

    def test_missing_credential_raises_before_network(self, monkeypatch):
        monkeypatch.delenv("KEYFRAMER_API_KEY", raising=False)
        with pytest.raises(AuthError):
            complete_streaming(
                _live_config("http://127.0.0.1:1/nope"), "x", Recorder().sink())

    def test_retries_5xx_then_succeeds(self, live_server, monkeypatch):
        monkeypatch.setenv("KEYFRAMER_API_KEY", "k")
        FlakyHandler.failures = 2
        record = complete_streaming(_live_config(live_server), "x", Recorder().sink())
        assert record.full_text == "hello world"
        assert len(FlakyHandler.requests) == 3

    def test_gives_up_after_two_retries(self, live_server, monkeypatch):
        monkeypatch.setenv("KEYFRAMER_API_KEY", "k")
        FlakyHandler.failures = 10
        rec = Recorder()
        with pytest.raises(ProviderError):
            complete_streaming(_live_config(live_server), "x", rec.sink())
        assert len(FlakyHandler.requests) == 3  # initial + 2 retries
        assert rec.errors and rec.errors[0][0] == "provider"

    def test_auth_rejection_is_not_retried(self, live_server, monkeypatch):
        monkeypatch.setenv("KEYFRAMER_API_KEY", "k")
        FlakyHandler.failures = 10
        FlakyHandler.status = 401
        rec = Recorder()
        with pytest.raises(AuthError):
            complete_streaming(_live_config(live_server), "x", rec.sink())
        assert len(FlakyHandler.requests) == 1
        assert rec.errors[0][0] == "auth"
