"""Linear private information retrieval schemes over finite fields, with checkers and a rate simulator."""

from .checker import check_correctness, check_privacy, check_scheme
from .errors import PirError
from .gf import GF, field_new, field_of_order
from .sim import AdversaryConfig, capacity_formula, measure_rate
from .sun import SunScheme
from .wang import WangScheme

__all__ = [
    "AdversaryConfig", "GF", "PirError", "SunScheme", "WangScheme", "capacity_formula",
    "check_correctness", "check_privacy", "check_scheme", "field_new", "field_of_order", "measure_rate",
]
__version__ = "0.1.0"
