from .BehavioralMetrics import ALMOST_DIAGONAL_RADII
from .BehavioralMetrics import MetricsRow
from .BehavioralMetrics import almost_diagonal
from .BehavioralMetrics import dsd_correlation
from .BehavioralMetrics import e_upper_bound
from .BehavioralMetrics import e_upper_bound_cross
from .BehavioralMetrics import fosd_violations
from .BehavioralMetrics import metrics_row
from .BehavioralMetrics import scatter_series
