import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from keyframer import session as sessions
from keyframer.cli import main
from keyframer.prompting import ReplayProvider

GOLDEN_SVG = ('<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 24 24">\n'
              '  <circle id="sun" cx="12" cy="12" r="6" fill="gold"/>\n'
              '</svg>')

EXT_CSS = (".design-0 #sun {\n  animation-name: glow;\n  animation-duration: 2s;\n"
           "  animation-iteration-count: infinite;\n}\n\n@keyframes glow {\n"
           "  0% {\n    opacity: 0.6;\n  }\n  100% {\n    opacity: 1;\n  }\n}")


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def sun_svg(tmp_path):
    path = tmp_path / "sun.svg"
    path.write_text(GOLDEN_SVG)
    return path


class TestPreprocess:
    def test_writes_svg_to_stdout_stats_to_stderr(self, runner, fixtures_dir):
        result = runner.invoke(main, ["preprocess", str(fixtures_dir / "saturn.svg")])
        assert result.exit_code == 0
        assert result.stdout.startswith("<svg")
        assert "transform=" not in result.stdout
        assert "tokens" in result.stderr

    def test_out_file_and_ids(self, runner, fixtures_dir, tmp_path):
        out = tmp_path / "pre.svg"
        result = runner.invoke(main, [
            "preprocess", str(fixtures_dir / "saturn.svg"),
            "--out", str(out), "--ids"])
        assert result.exit_code == 0
        assert out.read_text().startswith("<svg")
        assert "halo-outer" in result.stdout

    def test_missing_file_is_usage_error(self, runner):
        result = runner.invoke(main, ["preprocess", "no-such.svg"])
        assert result.exit_code == 2

    def test_invalid_svg_is_io_error(self, runner, tmp_path):
        bad = tmp_path / "bad.svg"
        bad.write_text("<svg><oops")
        result = runner.invoke(main, ["preprocess", str(bad)])
        assert result.exit_code == 3
        assert "error:" in result.stderr


class TestLint:
    def _write(self, tmp_path, css):
        path = tmp_path / "in.css"
        path.write_text(css)
        return path

    def test_clean_css_exits_zero(self, runner, fixtures_dir, tmp_path):
        css = self._write(tmp_path, (
            ".design-0 #planet { animation-name: spin; "
            "animation-iteration-count: infinite; }\n"
            "@keyframes spin { 100% { opacity: 0.5; } }\n"))
        result = runner.invoke(main, [
            "lint", str(css), "--svg", str(fixtures_dir / "saturn.svg"), "--scope", "0"])
        assert result.exit_code == 0
        assert "0 error(s)" in result.stderr

    def test_errors_exit_one(self, runner, fixtures_dir, tmp_path):
        css = self._write(tmp_path, ".design-9 .planet { opacity: 1; }")
        result = runner.invoke(main, [
            "lint", str(css), "--svg", str(fixtures_dir / "saturn.svg"), "--scope", "0"])
        assert result.exit_code == 1
        assert "WRONG_SCOPE_INDEX" in result.stdout
        assert "CLASS_INSTEAD_OF_ID" in result.stdout

    def test_fix_prints_repaired_css(self, runner, fixtures_dir, tmp_path):
        css = self._write(tmp_path, ".design-9 .planet { opacity: 1; }")
        result = runner.invoke(main, [
            "lint", str(css), "--svg", str(fixtures_dir / "saturn.svg"),
            "--scope", "0", "--fix"])
        assert ".design-0 #planet" in result.stdout
        assert "WRONG_SCOPE_INDEX" in result.stderr

    def test_json_report(self, runner, fixtures_dir, tmp_path):
        css = self._write(tmp_path, ".design-9 #planet { opacity: 1; }")
        result = runner.invoke(main, [
            "lint", str(css), "--svg", str(fixtures_dir / "saturn.svg"),
            "--scope", "0", "--json"])
        report = json.loads(result.stdout)
        assert report["error_count"] == 1


class TestPrompt:
    def test_dry_run_matches_initial_golden(self, runner, fixtures_dir, sun_svg):
        result = runner.invoke(main, [
            "prompt", str(sun_svg), "--text", "Make the sparkles twinkle",
            "--dry-run", "--no-preprocess"])
        assert result.exit_code == 0
        assert result.stdout == (fixtures_dir / "golden" / "initial_single.txt").read_text()

    def test_dry_run_matches_offset_golden(self, runner, fixtures_dir, sun_svg):
        result = runner.invoke(main, [
            "prompt", str(sun_svg),
            "--text", "Give me 3 designs where the planet rocks back and forth",
            "--count", "2", "--dry-run", "--no-preprocess"])
        assert result.stdout == (fixtures_dir / "golden" / "initial_offset.txt").read_text()

    def test_dry_run_matches_extension_golden(self, runner, fixtures_dir, sun_svg,
                                              tmp_path):
        ext = tmp_path / "ext.css"
        ext.write_text(EXT_CSS)
        result = runner.invoke(main, [
            "prompt", str(sun_svg), "--text", "Make the halos spin too",
            "--count", "1", "--extend", str(ext), "--dry-run", "--no-preprocess"])
        assert result.stdout == (fixtures_dir / "golden" / "extension.txt").read_text()

    def test_blank_text_is_usage_error(self, runner, sun_svg):
        result = runner.invoke(main, [
            "prompt", str(sun_svg), "--text", "  ", "--dry-run"])
        assert result.exit_code == 2

    def test_replay_generation_writes_design_files(self, runner, fixtures_dir,
                                                   replay_dir, tmp_path, replay_texts):
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "prompt", str(fixtures_dir / "saturn.svg"), "--text", "twinkle",
            "--provider", "replay", "--replay", str(replay_dir / "r02.json"),
            "--out-dir", str(out)])
        assert result.exit_code == 0
        assert result.stdout.splitlines() == ["design-0.css", "design-1.css"]
        assert "2 design(s)" in result.stderr
        assert (out / "design-0.css").exists()
        assert (out / "design-1.txt").read_text().strip()
        assert (out / "design-0.css").read_text().rstrip("\n") in replay_texts["r02"]

    def test_count_offsets_output_names(self, runner, fixtures_dir, replay_dir,
                                        tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "prompt", str(fixtures_dir / "saturn.svg"), "--text", "more",
            "--count", "3", "--replay", str(replay_dir / "r01.json"),
            "--out-dir", str(out)])
        assert result.stdout.splitlines() == ["design-3.css"]


def _export_session(replay_dir, path):
    svg = Path(__file__).parent / "fixtures" / "saturn.svg"
    session = sessions.create_session(svg.read_text())
    provider = ReplayProvider(replay_dir)
    sessions.run_iteration(session, "twinkle please", provider=provider)
    sessions.run_iteration(session, "two more designs", provider=provider)
    path.write_bytes(sessions.export_log(session))
    return session


class TestReplay:
    def test_honest_log_passes(self, runner, replay_dir, tmp_path):
        log = tmp_path / "log.json"
        _export_session(replay_dir, log)
        result = runner.invoke(main, ["replay", str(log)])
        assert result.exit_code == 0
        assert result.stdout.strip().endswith("PASS")

    def test_tampered_log_fails(self, runner, replay_dir, tmp_path):
        log = tmp_path / "log.json"
        _export_session(replay_dir, log)
        doc = json.loads(log.read_text())
        doc["session"]["iterations"][0]["designs"][0]["css_original"] = "x"
        log.write_text(json.dumps(doc))
        result = runner.invoke(main, ["replay", str(log)])
        assert result.exit_code == 1
        assert result.stdout.strip().endswith("FAIL")

    def test_unreadable_log_is_io_error(self, runner, tmp_path):
        log = tmp_path / "junk.json"
        log.write_text("not a log")
        result = runner.invoke(main, ["replay", str(log)])
        assert result.exit_code == 3


class TestStats:
    def test_table_and_json(self, runner, replay_dir, tmp_path):
        logs = tmp_path / "logs"
        logs.mkdir()
        _export_session(replay_dir, logs / "a.json")
        _export_session(replay_dir, logs / "b.json")
        (logs / "skipme.json").write_text("broken")

        result = runner.invoke(main, ["stats", str(logs), "--json"])
        assert result.exit_code == 0
        data = json.loads(result.stdout)
        # Prompts are deduplicated within each session, then pooled.
        assert data["unique_prompt_count"] == 4
        assert data["designs_generated"] == 6  # (1 + 2) designs x 2 sessions
        assert "skipping skipme.json" in result.stderr

        table = runner.invoke(main, ["stats", str(logs)])
        assert "unique_prompt_count" in table.stdout
