"""
Errors

Every protocol rejection in the bridge is an exception deriving from `BridgeError`. The class name is the
protocol error name and is also exposed as `code`, which is what traces and relayer logs record.

Errors that two components share by name (`AlreadyConsumed` at the Portal and on Aztec, `InvalidVaa` at the
Portal and at the Solana receipt recorder) are separate classes living in those components' modules.
"""

__all__ = [
    "BridgeError",
    "CodecError",
    "MalformedVaa",
    "PayloadTooShort",
    "PayloadTooLarge",
    "MalformedReceipt",
    "UnsupportedVersion",
]


class BridgeError(Exception):
    """
    Base class of every protocol error.

    Attributes:
        code (str): Stable error name used in traces.
        retryable (bool): Whether a relayer may retry the same action later.
    """

    code = "BridgeError"
    retryable = False

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if "code" not in cls.__dict__:
            cls.code = cls.__name__


class CodecError(BridgeError, ValueError):
    pass


class MalformedVaa(CodecError):
    pass


class PayloadTooShort(CodecError):
    pass


class PayloadTooLarge(CodecError):
    pass


class MalformedReceipt(CodecError):
    pass


class UnsupportedVersion(CodecError):
    pass
