"""Command-line access to every pipeline stage.

Conventions: stdout carries data, stderr carries diagnostics. Exit codes:
0 success, 1 lint errors found, 2 usage error, 3 provider or IO failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import session as sessions
from . import stream_parse, svg_core
from .css_core import parse_css, serialize_css
from .errors import KeyframerError, ProviderError
from .lint import auto_fix, lint as run_lint
from .prompting import (
    CallbackSink,
    PromptSpec,
    ProviderConfig,
    build_prompt,
    get_provider,
)

EXIT_LINT_ERRORS = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)


@click.group()
def main():
    """SVG-to-CSS animation prototyping pipeline."""


@main.command()
@click.argument("svg", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), help="Write preprocessed SVG here instead of stdout.")
@click.option("--ids", is_flag=True, help="Also list element identifiers.")
def preprocess(svg, out, ids):
    """Bake transforms, minify, and reformat an SVG for prompting."""
    try:
        result = svg_core.preprocess(_read(svg))
    except KeyframerError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)
    for warning in result.warnings:
        click.echo(f"warning: {warning}", err=True)
    if out:
        Path(out).write_text(result.svg)
    else:
        click.echo(result.svg, nl=False)
    if ids:
        listing = "\n".join(
            f"{'  ' * e.depth}{e.id} ({e.kind})" for e in result.index.entries
        )
        click.echo(listing, err=not out and ids)
    stats = result.stats
    click.echo(
        f"{stats.line_count} lines, {stats.char_count} chars, "
        f"~{stats.approx_tokens} tokens", err=True,
    )


@main.command(name="lint")
@click.argument("css", type=click.Path(exists=True))
@click.option("--svg", "svg_path", type=click.Path(exists=True), required=True)
@click.option("--scope", type=int, required=True, help="Expected design-n scope index.")
@click.option("--fix", is_flag=True, help="Print auto-repaired CSS to stdout.")
@click.option("--json", "as_json", is_flag=True, help="Emit the report as JSON.")
def lint_cmd(css, svg_path, scope, fix, as_json):
    """Check generated CSS against the prompt contract. Exits 1 on errors."""
    try:
        doc = svg_core.parse_svg(_read(svg_path))
    except KeyframerError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)
    index = svg_core.element_index(doc)
    sheet = parse_css(_read(css))
    report = run_lint(sheet, index, scope)
    if fix:
        click.echo(serialize_css(auto_fix(sheet, report)), nl=False)
        _emit_report(report, as_json, err=True)
    else:
        _emit_report(report, as_json, err=False)
    sys.exit(EXIT_LINT_ERRORS if report.error_count else 0)


def _emit_report(report, as_json, err):
    if as_json:
        click.echo(json.dumps(report.to_json(), indent=2), err=err)
        return
    for f in report.findings:
        click.echo(f"{f.severity}: {f.code.value}: {f.message}", err=err)
    click.echo(
        f"{report.error_count} error(s), {report.warning_count} warning(s)", err=True)


@main.command()
@click.argument("svg", type=click.Path(exists=True))
@click.option("--text", required=True, help="Natural-language animation prompt.")
@click.option("--extend", "extend_css", type=click.Path(exists=True),
              help="Existing CSS to build on (extension prompt).")
@click.option("--count", type=int, default=0, show_default=True,
              help="Number of existing designs (scope indices count up from here).")
@click.option("--dry-run", is_flag=True, help="Print the assembled prompt and exit.")
@click.option("--corrected-template", is_flag=True,
              help="Use the typo-corrected prompt template variant.")
@click.option("--no-preprocess", is_flag=True,
              help="Embed the SVG file verbatim instead of preprocessing it.")
@click.option("--provider", type=click.Choice(["live", "replay"]), default="replay",
              show_default=True)
@click.option("--replay", "replay_path", type=click.Path(exists=True),
              help="Replay fixture file or directory.")
@click.option("--model", default="gpt-4", show_default=True)
@click.option("--temperature", type=float, default=0.7, show_default=True)
@click.option("--out-dir", type=click.Path(), default=".", show_default=True,
              help="Where design-<n>.css / design-<n>.txt files are written.")
def prompt(svg, text, extend_css, count, dry_run, corrected_template, no_preprocess,
           provider, replay_path, model, temperature, out_dir):
    """Assemble the generation prompt; stream designs unless --dry-run."""
    svg_text = _read(svg)
    if not no_preprocess:
        try:
            svg_text = svg_core.preprocess(svg_text).svg
        except KeyframerError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_IO)
    spec = PromptSpec(
        user_text=text,
        svg_text=svg_text,
        existing_design_count=count,
        extension_css=_read(extend_css) if extend_css else None,
    )
    try:
        assembled = build_prompt(spec, corrected=corrected_template)
    except KeyframerError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    if dry_run:
        click.echo(assembled, nl=False)
        return

    config = ProviderConfig(
        provider=provider, model_id=model, temperature=temperature,
        replay_path=replay_path,
    )
    state = stream_parse.ParserState()

    def on_chunk(chunk):
        stream_parse.feed(state, chunk)
        click.echo(".", err=True, nl=False)

    try:
        record = get_provider(config).stream(assembled, CallbackSink(on_chunk))
    except ProviderError as exc:
        click.echo(f"\nprovider error: {exc}", err=True)
        sys.exit(EXIT_IO)
    stream_parse.finish(state)
    click.echo("", err=True)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for candidate in state.completed:
        n = count + candidate.ordinal
        (out / f"design-{n}.css").write_text(candidate.css_text + "\n")
        (out / f"design-{n}.txt").write_text((candidate.explanation or "") + "\n")
        click.echo(f"design-{n}.css")
    click.echo(
        f"{len(state.completed)} design(s) in {record.elapsed_seconds:.1f}s", err=True)


@main.command()
@click.argument("session_log", type=click.Path(exists=True))
def replay(session_log):
    """Reconstruct a session from its log and verify css_original byte-identity."""
    try:
        session = sessions.import_log(Path(session_log).read_bytes())
    except (OSError, KeyframerError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)
    ok, messages = sessions.verify_replay(session)
    for message in messages:
        click.echo(message)
    click.echo("PASS" if ok else "FAIL")
    sys.exit(0 if ok else EXIT_LINT_ERRORS)


@main.command()
@click.argument("log_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--json", "as_json", is_flag=True)
def stats(log_dir, as_json):
    """Summary statistics over a directory of session logs."""
    loaded = []
    for path in sorted(Path(log_dir).glob("*.json")):
        try:
            loaded.append(sessions.import_log(path.read_bytes()))
        except (OSError, KeyframerError) as exc:
            click.echo(f"skipping {path.name}: {exc}", err=True)
    result = sessions.compute_stats(loaded)
    if as_json:
        click.echo(json.dumps(result.to_json(), indent=2))
    else:
        click.echo(result.to_table())


@main.command()
@click.option("--port", type=int, default=8400, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", type=click.Path(), help="Session persistence directory.")
@click.option("--provider", type=click.Choice(["live", "replay"]), default="replay",
              show_default=True)
@click.option("--replay-dir", type=click.Path(exists=True),
              help="Replay fixture file or directory.")
@click.option("--model", default="gpt-4", show_default=True)
@click.option("--temperature", type=float, default=0.7, show_default=True)
@click.option("--ui-dir", type=click.Path(file_okay=False),
              help="Static UI bundle served at /.")
def serve(port, host, data_dir, provider, replay_dir, model, temperature, ui_dir):
    """Run the HTTP service."""
    from .service import serve as run_serve

    config = ProviderConfig(
        provider=provider, model_id=model, temperature=temperature,
        replay_path=replay_dir,
    )
    run_serve(port=port, host=host, data_dir=data_dir, config=config, ui_dir=ui_dir)


if __name__ == "__main__":
    main()
