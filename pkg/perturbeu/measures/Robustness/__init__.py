from .Robustness import RobustnessRow
from .Robustness import average_perturbation
from .Robustness import drop_m_min_e
from .Robustness import robustness_row
