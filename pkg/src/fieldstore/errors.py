"""Exception hierarchy for the fieldstore package."""


class FieldStoreError(Exception):
    """Base class for all fieldstore errors."""


class SchemaError(FieldStoreError):
    """Invalid schema definition or schema file."""


class SchemaSyntaxError(SchemaError):
    """Schema file does not conform to the schema file grammar."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IdentifierError(FieldStoreError):
    """Malformed identifier or partial identifier."""


class MissingDimensionError(IdentifierError):
    """Identifier lacks a value for a schema dimension."""

    def __init__(self, keyword):
        super().__init__(f"identifier is missing schema dimension {keyword!r}")
        self.keyword = keyword


class UnknownKeywordError(IdentifierError):
    """Identifier carries a keyword not declared by the schema."""

    def __init__(self, keyword):
        super().__init__(f"keyword {keyword!r} is not declared in the schema")
        self.keyword = keyword


class ConfigError(FieldStoreError):
    """Invalid store configuration file."""


class BackendError(FieldStoreError):
    """A storage backend operation failed."""


class CorruptCatalogueError(BackendError):
    """On-disk catalogue state failed to parse or checksum."""


class RecordTooLargeError(BackendError):
    """A catalogue record exceeds the atomic-append size limit."""


class MergeError(FieldStoreError):
    """Data handles cannot be merged (e.g. mixed backends)."""


class SessionClosedError(FieldStoreError):
    """Operation attempted on a closed session."""


class EngineError(FieldStoreError):
    """Key-value/blob engine failure."""


class UnknownNamespaceError(EngineError):
    """Operation on a namespace that was never created."""


class FaultInjectedError(EngineError):
    """Raised by the engine when a test-injected fault fires."""


class VerificationError(FieldStoreError):
    """Benchmark payload verification failed."""
