"""SVG-to-CSS animation prototyping: preprocessing, prompt assembly,
streamed generation, linting, property editing, and session tracking."""

__version__ = "0.1.0"
