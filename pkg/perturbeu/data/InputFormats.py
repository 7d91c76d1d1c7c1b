from typing import List
from typing import Tuple


class BudgetCSV:
    COLUMNS: List[str] = ["subject", "trial", "a1", "a2", "x1", "x2"]
    NUMERIC: List[str] = ["a1", "a2", "x1", "x2"]

    # experiments draw both states with equal probability
    DEFAULT_BELIEF: Tuple[float, float] = (0.5, 0.5)

    BUDGET_TOLERANCE: float = 1e-6
    FLOAT_FORMAT: str = "%.15g"


class GenericJSON:
    SUBJECTS_KEY: str = "subjects"
    ID_KEY: str = "id"
    BELIEF_KEY: str = "mu"
    OBSERVATIONS_KEY: str = "observations"
    PRICES_KEY: str = "p"
    QUANTITIES_KEY: str = "x"

    BELIEF_TOLERANCE: float = 1e-9
