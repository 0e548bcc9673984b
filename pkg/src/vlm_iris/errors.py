"""Error taxonomy shared by the library, service, and CLI.

InputError maps to CLI exit code 1 / HTTP 400, DataError to exit code 2 /
HTTP 500. Everything raised on purpose inside the package derives from
IrisError.
"""


class IrisError(Exception):
    pass


class InputError(IrisError):
    """Invalid user-supplied input: bad manifest, bank, config, arguments."""


class DataError(IrisError):
    """Runtime/data failure: unreadable image, missing cache key, bad graph."""
