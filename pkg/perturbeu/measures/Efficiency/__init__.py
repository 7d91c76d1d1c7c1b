from .CCEI import RevealedRelation
from .CCEI import ccei
from .CCEI import critical_ratios
from .CCEI import garp_holds
from .CCEI import revealed_relation
