"""Core protocol enums and the per-client state record.

Split out of ``protocol`` so the metrics module can type against them
without a circular import; ``tadlora.protocol`` re-exports everything here.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from tadlora.model import ClientTask, LoraFactors


class Phase(str, Enum):
    A = "A"  # A is updated, B frozen
    B = "B"  # B is updated, A frozen


class Method(str, Enum):
    TAD_LORA = "tad_lora"
    ROLORA_DFL = "rolora_dfl"
    FFA_LORA = "ffa_lora"
    VANILLA_LORA = "vanilla_lora"
    CENTRALIZED_ALT = "centralized_alt"

    @property
    def alternating(self) -> bool:
        return self in (Method.TAD_LORA, Method.ROLORA_DFL, Method.CENTRALIZED_ALT)


class MixSelection(str, Enum):
    BOTH = "both"
    A_ONLY = "A_only"
    B_ONLY = "B_only"
    NONE = "none"


@dataclass(frozen=True)
class ClientState:
    id: int
    factors: LoraFactors
    task: ClientTask
