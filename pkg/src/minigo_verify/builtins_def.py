"""Built-in concurrency surface: channel and wait-group members.

The verifier treats these as specification-bearing library stubs; their
verification semantics live in the engine's concurrency handlers. This table
only fixes names, argument shapes, and result types for the type checker.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from . import types as ty


@dataclass(frozen=True)
class BuiltinMember:
    name: str
    kind: str          # "ghost_stmt" | "stmt" | "pred" | "pure"
    # arg shapes: list of acceptable signatures; each is a tuple of
    # "int" | "predval" | "predseq" markers. None means computed per chan elem.
    arg_shapes: tuple[tuple[str, ...], ...]
    result: Optional[str] = None   # "predval_msg" | "predval_unit" | "bool" | None


# Channel members, receiver type chan T.
CHAN_MEMBERS: dict[str, BuiltinMember] = {
    "Init": BuiltinMember("Init", "ghost_stmt",
                          (("predval_msg",), ("predval_msg", "predval_unit"))),
    "SendChannel": BuiltinMember("SendChannel", "pred", ((),)),
    "RecvChannel": BuiltinMember("RecvChannel", "pred", ((),)),
    "SendGivenPerm": BuiltinMember("SendGivenPerm", "pure", ((),), "predval_msg"),
    "SendGotPerm": BuiltinMember("SendGotPerm", "pure", ((),), "predval_unit"),
    "RecvGivenPerm": BuiltinMember("RecvGivenPerm", "pure", ((),), "predval_unit"),
    "RecvGotPerm": BuiltinMember("RecvGotPerm", "pure", ((),), "predval_msg"),
}

# Wait-group members, receiver type *sync.WaitGroup.
WG_MEMBERS: dict[str, BuiltinMember] = {
    "Init": BuiltinMember("Init", "ghost_stmt", ((),)),
    "Add": BuiltinMember("Add", "stmt", (("int",), ("int", "int", "int", "predval_unit"))),
    "Done": BuiltinMember("Done", "stmt", ((),)),
    "Wait": BuiltinMember("Wait", "stmt", ((), ("int", "int", "predseq"))),
    "Start": BuiltinMember("Start", "ghost_stmt", (("int", "int", "predval_unit"),)),
    "GenerateTokenAndDebt": BuiltinMember("GenerateTokenAndDebt", "ghost_stmt",
                                          (("predval_unit",),)),
    "PayDebt": BuiltinMember("PayDebt", "ghost_stmt", (("predval_unit",),)),
    "SetWaitMode": BuiltinMember("SetWaitMode", "ghost_stmt",
                                 (("int", "int", "int", "int"),)),
    "WaitGroupP": BuiltinMember("WaitGroupP", "pred", ((),)),
    "WaitGroupStarted": BuiltinMember("WaitGroupStarted", "pred", ((),)),
    "WaitMode": BuiltinMember("WaitMode", "pure", ((),), "bool"),
    "UnitDebt": BuiltinMember("UnitDebt", "pred", (("predval_unit",),)),
    "Token": BuiltinMember("Token", "pred", (("predval_unit",),)),
    "TokenById": BuiltinMember("TokenById", "pred", (("predval_unit", "int"),)),
}

# Package-level members of the built-in `sync` stub.
SYNC_MEMBERS: dict[str, BuiltinMember] = {
    "InjEval": BuiltinMember("InjEval", "pred", (("predval_unit", "int"),)),
}

# PredTrue: built-in zero-parameter predicate with body `true`.
PRED_TRUE = "PredTrue"

# Internal predicate keys used by the engine for built-in resources.
BK_SEND_CHANNEL = "chan$SendChannel"
BK_RECV_CHANNEL = "chan$RecvChannel"
BK_CHAN_UNINIT = "chan$uninit"
BK_WG_P = "wg$WaitGroupP"
BK_WG_STARTED = "wg$WaitGroupStarted"
BK_WG_WAITMODE = "wg$WaitMode"
BK_WG_UNITDEBT = "wg$UnitDebt"
BK_WG_TOKEN = "wg$Token"
BK_WG_TOKENBYID = "wg$TokenById"
BK_WG_PAYMARK = "wg$DebtPayed"
BK_INJEVAL = "sync$InjEval"
BK_PREDTRUE = "PredTrue"

BUILTIN_PRED_BY_MEMBER = {
    ("chan", "SendChannel"): BK_SEND_CHANNEL,
    ("chan", "RecvChannel"): BK_RECV_CHANNEL,
    ("wg", "WaitGroupP"): BK_WG_P,
    ("wg", "WaitGroupStarted"): BK_WG_STARTED,
    ("wg", "UnitDebt"): BK_WG_UNITDEBT,
    ("wg", "Token"): BK_WG_TOKEN,
    ("wg", "TokenById"): BK_WG_TOKENBYID,
    ("sync", "InjEval"): BK_INJEVAL,
}


def shape_matches(shape: tuple[str, ...], arg_types: list[ty.TypeRepr]) -> bool:
    if len(shape) != len(arg_types):
        return False
    for marker, at in zip(shape, arg_types):
        if marker == "int" and not isinstance(at, ty.IntType):
            return False
        if marker == "predval_msg" and not isinstance(at, ty.PredValType):
            return False
        if marker == "predval_unit" and not (
                isinstance(at, ty.PredValType) and not at.params):
            return False
        if marker == "predseq" and at != ty.SeqType(ty.PredValType(())):
            return False
    return True
