from .Dataset import Dataset
from .Dataset import ObjectiveBelief
from .Dataset import Observation
from .Dataset import RiskNeutralPrices
from .Dataset import risk_neutral_prices
from .utils import parse_budget_csv
from .utils import parse_generic_json
from .utils import read_datasets
from .utils import to_budget_csv
from .utils import to_generic_json
from .utils import write_datasets
