"""Exception hierarchy shared across statementkit modules."""


class StatementKitError(Exception):
    """Base class for every error raised by this package."""


# --- template / schema ---

class TemplateError(StatementKitError):
    """Malformed template text."""


class UnclosedPlaceholder(TemplateError):
    """A '{{' with no matching '}}'."""


class EmptyPlaceholder(TemplateError):
    """A placeholder with an empty name, e.g. '{{}}' or '{{a/}}'."""


class NestedPlaceholder(TemplateError):
    """A brace appearing inside a placeholder, e.g. '{{a{{b}}'."""


class SchemaFormatError(StatementKitError):
    """Schema file cannot be parsed, or the parsed schema violates an invariant."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = violations or []


class MissingField(StatementKitError):
    """Render needed a field the example does not carry."""


class BindingKindMismatch(StatementKitError):
    """Binding passed to render() does not fit the template kind."""


# --- statement generation ---

class DistractorExhausted(StatementKitError):
    """No candidate span differs from the gold answer.

    Carries the last-resort fallback (gold with reversed token order) so the
    caller can still emit a negative when the fallback differs from gold.
    """

    def __init__(self, message: str, fallback: str):
        super().__init__(message)
        self.fallback = fallback


class GenerationError(StatementKitError):
    """One or more examples failed during dataset generation."""

    def __init__(self, failures: list[tuple[str, Exception]]):
        lines = [f"{ex_id}: {err}" for ex_id, err in failures]
        super().__init__("generation failed for %d example(s): %s" % (len(failures), "; ".join(lines[:5])))
        self.failures = failures


# --- sampling / mixtures ---

class EmptyPool(StatementKitError):
    """A dataset pool has no statements to sample from."""


class NoDatasetsSelected(StatementKitError):
    """Category selection removed every dataset from the mixture."""


# --- scorer ---

class SingleClassData(StatementKitError):
    """Training data contains only one truth class."""


class FormatVersionMismatch(StatementKitError):
    """Model file has wrong magic, unsupported version, or is truncated."""


# --- inference ---

class UnboundedCandidateSpace(StatementKitError):
    """Span-distractor schemas have no finite candidate set to score."""


# --- eval harness ---

class GeometricNonPositive(StatementKitError):
    """Geometric mean requested over values that are not all positive."""


# --- cli / ingestion ---

class ConfigError(StatementKitError):
    """Run config is invalid. Carries every violation found, not just the first."""

    def __init__(self, violations: list[str]):
        super().__init__("invalid config: " + "; ".join(violations))
        self.violations = violations


class FileUnreadable(StatementKitError):
    """Input file missing or undecodable."""


class RejectThresholdExceeded(StatementKitError):
    """Too many malformed rows during ingestion."""


# --- external scorer protocol ---

class ProtocolError(StatementKitError):
    """Worker sent a response that does not follow the wire protocol."""


class UnsupportedVersion(StatementKitError):
    """Worker and client disagree on the protocol version."""


class BackendFailure(StatementKitError):
    """Worker answered a request with an error record."""

    def __init__(self, error_class: str, message: str):
        super().__init__(f"{error_class}: {message}")
        self.error_class = error_class
