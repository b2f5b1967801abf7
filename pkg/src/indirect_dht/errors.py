"""Exception hierarchy shared by the library, the gateway and the CLI."""


class DhtError(Exception):
    """Base class for every error raised by this package."""


# identifiers

class IdentifierDecodeError(DhtError, ValueError):
    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class EntropyError(DhtError):
    """The random source could not supply bytes."""


# entries

class EntryError(DhtError, ValueError):
    pass


class EntryEncodingError(EntryError):
    pass


class ForeignEntryError(EntryError):
    """The value does not start with one of our magic numbers.

    Other applications may share the table, so this is not corruption.
    """

    def __init__(self, magic: int | None):
        super().__init__(f"foreign entry (magic 0x{magic:02x})" if magic is not None else "foreign entry")
        self.magic = magic


class FramingError(EntryError):
    pass


class EntryValidationError(EntryError):
    pass


# backends

class BackendError(DhtError):
    pass


class ValueTooLargeError(BackendError, ValueError):
    pass


class BackendUnreachableError(BackendError):
    pass


class GatewayProtocolError(BackendError):
    def __init__(self, code: int, message: str):
        super().__init__(f"ERR {code} {message}")
        self.code = code


class UnsupportedOperationError(BackendError):
    pass


class BatchPutError(BackendError):
    """A batch was aborted; ``completed`` holds the indices of ops that were applied."""

    def __init__(self, completed, total: int, cause: BaseException):
        self.completed = sorted(completed)
        self.total = total
        self.cause = cause
        super().__init__(f"batch aborted after {len(self.completed)}/{total} puts: {cause}")


# resolution

class ResolutionError(DhtError):
    pass


class NotFoundError(ResolutionError):
    pass


class DanglingHostError(ResolutionError):
    def __init__(self, host_id):
        super().__init__(f"no unexpired host entry for host {host_id}")
        self.host_id = host_id


class MalformedEntryError(ResolutionError):
    pass


class MigrationError(DhtError):
    def __init__(self, completed: int, total: int, cause: BaseException):
        super().__init__(f"migration failed after {completed}/{total} updates: {cause}")
        self.completed = completed
        self.total = total
        self.cause = cause


class ExperimentError(DhtError):
    def __init__(self, failures: list):
        self.failures = failures
        super().__init__(f"{len(failures)} operations failed during the experiment; first: {failures[0]!r}")
