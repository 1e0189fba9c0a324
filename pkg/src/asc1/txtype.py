from __future__ import annotations

from enum import Enum


class TxType(Enum):
    PAY = "pay"
    CLOSE = "close"
    GEN = "gen"
    OPTIN = "optin"
    BURN = "burn"
    RVK = "rvk"
    FRZ = "frz"
    UNFRZ = "unfrz"
    DELEGATE = "delegate"

    @property
    def code(self) -> int:
        return _ORDER.index(self)

    @property
    def tag(self) -> int:
        return 0x10 + self.code

    @property
    def tag_bytes(self) -> bytes:
        """Script-level value of ``tx.type``."""
        return bytes([self.tag])

    @classmethod
    def from_tag(cls, tag: int) -> "TxType":
        if not 0x10 <= tag < 0x10 + len(_ORDER):
            raise ValueError(f"not a transaction tag: {tag:#x}")
        return _ORDER[tag - 0x10]


_ORDER = list(TxType)

# types whose authorizer is the asset manager rather than the sender
MANAGER_AUTHORIZED = frozenset({TxType.BURN, TxType.RVK, TxType.FRZ, TxType.UNFRZ, TxType.DELEGATE})
