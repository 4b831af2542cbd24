"""Shared exception types for the keyframer pipeline."""


class KeyframerError(Exception):
    """Base class for all pipeline errors."""


class MalformedXml(KeyframerError):
    """SVG input is not well-formed XML. Carries the byte offset of the fault."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class NotAnSvg(KeyframerError):
    """The XML root element is not <svg>."""


class EmptyPrompt(KeyframerError):
    """Prompt text (or required extension CSS) is blank."""


class TypeMismatch(KeyframerError):
    """A value of the wrong type was supplied for a CSS property."""


class UnknownSelectorPath(KeyframerError):
    """No style rule matches the given selector path."""


class StaleSource(KeyframerError):
    """A property-sheet source pointer no longer resolves in the stylesheet."""


class UnknownDesign(KeyframerError):
    """Design id does not exist in the session."""


class UnknownIteration(KeyframerError):
    """Iteration index does not exist in the session."""


class SchemaVersionError(KeyframerError):
    """Session log bytes are corrupt or carry an unsupported schema version."""


class ProviderError(KeyframerError):
    """LLM provider returned a non-2xx response after retries."""

    def __init__(self, message, status=None, body=None):
        super().__init__(message)
        self.status = status
        self.body = body


class NetworkError(ProviderError):
    """Transport-level failure talking to the provider (retryable)."""


class AuthError(ProviderError):
    """Provider rejected the credential."""


class ProviderTimeout(ProviderError):
    """Provider request exceeded the configured timeout."""
